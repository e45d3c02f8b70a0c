use std::fs;
use std::path::Path;
use std::process::Command;

use agfem::io::{self, VtkInput, CONVERGENCE_HEADER, MOVING_DOMAIN_HEADER};
use agfem::runner;
use agfem_core::aggregation::AggregateMap;
use agfem_core::experiments::{run_convergence, run_moving_domain, RunConfig};
use agfem_core::fespace::{build_space, Flavor};
use agfem_core::geometry::LevelSetGeometry;
use agfem_core::mesh::BackgroundMesh;

fn agfem(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_agfem"))
        .args(args)
        .output()
        .expect("run agfem")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn validate_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = agfem(&["validate", "--m", "4", "--out", &out_arg(dir.path())]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    for f in [
        "validate.txt",
        "solution.vtk",
        "aggregates.csv",
        "quadrature.csv",
        "stiffness.mtx",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let mtx = fs::read_to_string(dir.path().join("stiffness.mtx")).unwrap();
    let mut lines = mtx.lines();
    assert_eq!(
        lines.next(),
        Some("%%MatrixMarket matrix coordinate real general")
    );
    let dims: Vec<usize> = lines
        .next()
        .unwrap()
        .split(' ')
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(dims[0], dims[1]);
    assert_eq!(lines.count(), dims[2]);
    let agg = fs::read_to_string(dir.path().join("aggregates.csv")).unwrap();
    assert_eq!(agg.lines().next(), Some("cell_id,root_id"));
    let quad = fs::read_to_string(dir.path().join("quadrature.csv")).unwrap();
    assert!(quad.lines().any(|l| l.contains(",surface,")));
}

#[test]
fn corrupted_constraints_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = agfem(&[
        "validate",
        "--m",
        "4",
        "--corrupt-constraint-row",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL constraint row sums"));
}

#[test]
fn validate_3d_sphere_volume() {
    let dir = tempfile::tempdir().unwrap();
    let out = agfem(&[
        "validate",
        "--dim",
        "3",
        "--shape",
        "sphere",
        "--m",
        "4",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn moving_domain_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = agfem(&[
        "moving-domain",
        "--samples",
        "6",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("moving_domain.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], MOVING_DOMAIN_HEADER);
    assert_eq!(lines.len(), 7);
    let ls: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ls.windows(2).all(|w| w[0] < w[1]));
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
}

#[test]
fn convergence_csv_schema_and_footer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small study\nm_min = 3\nmax_m = 5\norder = 1\n").unwrap();
    let out = agfem(&[
        "convergence",
        "--config",
        cfg.to_str().unwrap(),
        "--vtk",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CONVERGENCE_HEADER);
    assert_eq!(lines.len(), 5);
    let footer: Vec<&str> = lines[4].split(',').collect();
    assert_eq!(footer.len(), 6);
    assert_eq!(footer[0], "slopes");
    let energy_slope: f64 = footer[3].parse().unwrap();
    assert!(energy_slope > 0.5 && energy_slope < 1.5);
    for m in 3..=5 {
        assert!(dir.path().join(format!("solution_m{m}.vtk")).is_file());
    }
}

#[test]
fn flags_override_config_and_bad_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "unknown_key = 3\n").unwrap();
    let out = agfem(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
    let out = agfem(&[
        "validate",
        "--dim",
        "3",
        "--shape",
        "circle",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = agfem(&[
        "validate",
        "--flavor",
        "other",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(!out.status.success());
}

#[test]
fn parallel_drivers_match_serial_and_rerun_bitwise() {
    let config = RunConfig {
        samples: 5,
        ..RunConfig::default()
    };
    let serial = run_moving_domain(&config).unwrap();
    let parallel = runner::moving_domain(&config).unwrap();
    assert_eq!(serial, parallel);

    let conv = RunConfig {
        m_max: Some(5),
        ..RunConfig::default()
    };
    let (rows, slopes) = run_convergence(&conv).unwrap();
    let (prows, pslopes) = runner::convergence(&conv, None).unwrap();
    assert_eq!(rows, prows);
    assert_eq!(slopes, pslopes);

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    runner::moving_domain_to(&config, a.path()).unwrap();
    runner::moving_domain_to(&config, b.path()).unwrap();
    assert_eq!(
        fs::read(a.path().join("moving_domain.csv")).unwrap(),
        fs::read(b.path().join("moving_domain.csv")).unwrap()
    );
}

fn vtk_section<'a>(text: &'a str, key: &str) -> Vec<&'a str> {
    let mut lines = text.lines().skip_while(|l| !l.starts_with(key));
    let header = lines.next().unwrap();
    let n: usize = header.split_whitespace().nth(1).unwrap().parse().unwrap();
    lines.take(n).collect()
}

#[test]
fn vtk_of_all_interior_box_has_one_quad_per_cell() {
    let m = 3;
    let geom = LevelSetGeometry::custom(2, |_| -1.0);
    let mut mesh = BackgroundMesh::unit(2, 1 << m).unwrap();
    mesh.classify(&geom);
    let space = build_space(&mesh, 1, Flavor::Active).unwrap();
    let map = AggregateMap::identity(&mesh);
    let coefficients: Vec<f64> = (0..space.num_nodes())
        .map(|n| space.node_point(n)[0])
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("box.vtk");
    io::write_vtk(
        &path,
        &VtkInput {
            mesh: &mesh,
            geom: &geom,
            space: &space,
            aggregates: &map,
            coefficients: &coefficients,
        },
    )
    .unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let types = vtk_section(&text, "CELL_TYPES");
    assert_eq!(types.len(), 1 << (2 * m));
    assert!(types.iter().all(|t| *t == "9"));
    // u = x sampled at the points reproduces their x coordinate.
    let points = vtk_section(&text, "POINTS");
    let mut u = text
        .lines()
        .skip_while(|l| !l.starts_with("SCALARS u"))
        .skip(2);
    for p in points {
        let x: f64 = p.split_whitespace().next().unwrap().parse().unwrap();
        let v: f64 = u.next().unwrap().parse().unwrap();
        assert!((x - v).abs() < 1e-12);
    }
    let bad = io::write_vtk(
        &path,
        &VtkInput {
            mesh: &mesh,
            geom: &geom,
            space: &space,
            aggregates: &map,
            coefficients: &coefficients[1..],
        },
    );
    assert!(matches!(bad, Err(io::OutputError::Coefficients { .. })));
}

#[test]
fn vtk_of_circle_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let out = agfem(&["validate", "--m", "6", "--out", &out_arg(dir.path())]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("solution.vtk")).unwrap();
    assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
    let u: Vec<f64> = text
        .lines()
        .skip_while(|l| !l.starts_with("SCALARS u"))
        .skip(2)
        .map(|l| l.parse().unwrap())
        .collect();
    assert!(!u.is_empty());
    // The exact solution lies in [-1, 1]; the discrete one may overshoot by
    // roughly its pointwise error.
    let peak = u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    assert!(peak <= 1.01, "{peak}");
    let roots: std::collections::BTreeSet<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("SCALARS root_id"))
        .skip(2)
        .take_while(|l| !l.starts_with("POINT_DATA"))
        .collect();
    assert!(roots.len() >= 2);
    let classes: std::collections::BTreeSet<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("SCALARS class"))
        .skip(2)
        .take_while(|l| !l.starts_with("SCALARS"))
        .collect();
    assert!(classes.contains("0") && classes.contains("1"));
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    fs::write(&file, "x").unwrap();
    let out = agfem(&[
        "moving-domain",
        "--samples",
        "2",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
