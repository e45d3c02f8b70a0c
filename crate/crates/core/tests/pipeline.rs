//! End-to-end checks of the discretisation pipeline on the benchmark bodies.

use agfem_core::error_norms::compute_errors;
use agfem_core::experiments::{
    assemble_system, run_moving_domain, run_validate, solve_instance, Discretization, RunConfig,
    SpaceKind, ValidateOptions,
};
use agfem_core::fespace::interpolate;
use agfem_core::geometry::{ManufacturedSolution, ShapeParams};
use agfem_core::quadrature::MeshQuadrature;
use agfem_core::spectral::{cond_estimate, solve_cg, CondOptions, Precond};

fn disc(config: &RunConfig, m: usize) -> (agfem_core::geometry::LevelSetGeometry, Discretization) {
    let geom = config.geometry(ShapeParams::default()).unwrap();
    let d = Discretization::build(
        &geom,
        1 << m,
        config.q,
        config.flavor,
        config.subdivision(),
        config.eta0,
    )
    .unwrap();
    (geom, d)
}

#[test]
fn galerkin_error_is_within_five_interpolation_errors() {
    let cases = [(2, 1, 4), (2, 1, 6), (2, 2, 4), (2, 2, 5), (3, 1, 3)];
    for (dim, q, m) in cases {
        let config = RunConfig {
            dim,
            q,
            kappa: false,
            shape: (dim == 3).then(|| "sphere".into()),
            ..RunConfig::default()
        };
        let (geom, d) = disc(&config, m);
        let exact = ManufacturedSolution::new(dim);
        let galerkin = solve_instance(&config, &geom, &d, &exact)
            .unwrap()
            .errors
            .energy_error;
        let full = interpolate(&d.space, d.constraints.as_ref(), |x| {
            use agfem_core::geometry::ExactSolution;
            exact.value(x)
        })
        .unwrap();
        let quad = MeshQuadrature::build(&d.mesh, &geom, 2 * q + 2, d.subdiv);
        let interp = compute_errors(
            &d.mesh,
            &d.space,
            d.constraints.as_ref(),
            &quad,
            &full[..d.space.num_interior()],
            &exact,
        )
        .unwrap()
        .energy_error;
        assert!(
            galerkin <= 5.0 * interp,
            "dim {dim} q {q} m {m}: {galerkin} vs {interp}"
        );
    }
}

#[test]
fn quadrature_degree_bump_barely_changes_errors() {
    let config = RunConfig {
        kappa: false,
        ..RunConfig::default()
    };
    let (geom, d) = disc(&config, 7);
    let exact = ManufacturedSolution::new(2);
    let r = solve_instance(&config, &geom, &d, &exact).unwrap();
    let bumped = MeshQuadrature::build(&d.mesh, &geom, 2 * config.q + 4, d.subdiv);
    let e2 = compute_errors(
        &d.mesh,
        &d.space,
        d.constraints.as_ref(),
        &bumped,
        &r.solution,
        &exact,
    )
    .unwrap();
    assert!((e2.energy_error - r.errors.energy_error).abs() / r.errors.energy_error < 5e-3);
    assert!((e2.l2_error - r.errors.l2_error).abs() / r.errors.l2_error < 5e-3);
}

#[test]
fn aggregated_systems_are_symmetric_and_coercive() {
    for q in 1..=2 {
        let config = RunConfig {
            q,
            samples: 7,
            scale: Some(0.25),
            ..RunConfig::default()
        };
        for l in config.sweep_positions().unwrap() {
            let geom = config
                .geometry(ShapeParams {
                    scale: 0.25,
                    position: Some(l),
                })
                .unwrap();
            let d = Discretization::build(
                &geom,
                32,
                q,
                SpaceKind::Aggregated,
                config.subdivision(),
                1.0,
            )
            .unwrap();
            let sys = assemble_system(&config, &d, &ManufacturedSolution::new(2)).unwrap();
            assert_eq!(sys.matrix.rows, d.space.num_interior());
            let scale = sys.matrix.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(sys.matrix.asymmetry() <= 1e-12 * scale);
            let k = cond_estimate(&sys.matrix, &CondOptions::default()).unwrap();
            assert!(
                !k.indefinite && !k.is_lower_bound() && k.lambda_min > 0.0,
                "q {q} l {l}: {k:?}"
            );
        }
    }
}

#[test]
fn cg_solves_aggregated_circle_system() {
    let config = RunConfig::default();
    let (_, d) = disc(&config, 5);
    let sys = assemble_system(&config, &d, &ManufacturedSolution::new(2)).unwrap();
    let r = solve_cg(&sys.matrix, &sys.rhs, 1e-12, None, Precond::Jacobi);
    assert!(
        r.converged && r.residual <= 1e-12,
        "{} after {}",
        r.residual,
        r.iterations
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn standard_space_conditioning_explodes_with_order() {
    let base = RunConfig {
        flavor: SpaceKind::Standard,
        ..RunConfig::default()
    };
    let q1 = run_moving_domain(&base).unwrap();
    let q2 = run_moving_domain(&RunConfig { q: 2, ..base }).unwrap();
    let m1 = median(q1.iter().map(|r| r.kappa_a).collect());
    let m2 = median(q2.iter().map(|r| r.kappa_a).collect());
    assert!(m2 >= 1e6 * m1, "{m1:e} vs {m2:e}");
}

#[test]
fn validation_suite_in_two_and_three_dimensions() {
    let two = run_validate(&RunConfig::default(), ValidateOptions::default()).unwrap();
    assert!(two.passed(), "{two:?}");
    let three = RunConfig {
        dim: 3,
        shape: Some("sphere".into()),
        m: 4,
        ..RunConfig::default()
    };
    let report = run_validate(&three, ValidateOptions::default()).unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn popcorn_pipeline_runs() {
    let config = RunConfig {
        dim: 3,
        kappa: false,
        ..RunConfig::default()
    };
    let (geom, d) = disc(&config, 3);
    let r = solve_instance(&config, &geom, &d, &ManufacturedSolution::new(3)).unwrap();
    assert!(r.solved && r.errors.energy_error.is_finite());
    assert!((2.0..=4.0).contains(&r.max_aggr_ratio));
}
