//! Parallel experiment drivers that write their results under an output
//! directory. Rows are collected in sweep order whatever the completion
//! order of the workers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use agfem_core::experiments::{
    assemble_system, convergence_level_inspect, convergence_slopes, moving_domain_sample,
    run_validate, solve_instance, ConvergenceRow, Discretization, MovingDomainRow, RunConfig,
    Slopes, SpaceKind, ValidateOptions, ValidationReport,
};
use agfem_core::geometry::{ManufacturedSolution, ShapeParams};

use crate::io;

pub fn moving_domain(config: &RunConfig) -> Result<Vec<MovingDomainRow>> {
    config.validate()?;
    let positions = config.sweep_positions()?;
    Ok(positions
        .par_iter()
        .map(|&l| moving_domain_sample(config, l))
        .collect())
}

/// Runs the sweep and writes `moving_domain.csv` (and `mass_kappa.csv` when
/// mass conditioning is requested).
pub fn moving_domain_to(config: &RunConfig, out: &Path) -> Result<Vec<MovingDomainRow>> {
    let rows = moving_domain(config)?;
    ensure_dir(out)?;
    io::write_moving_domain_csv(&out.join("moving_domain.csv"), &rows)?;
    if config.mass_kappa {
        io::write_mass_kappa_csv(&out.join("mass_kappa.csv"), &rows)?;
    }
    Ok(rows)
}

/// Convergence study; with `vtk_dir` set each level also writes
/// `solution_m<m>.vtk` there.
pub fn convergence(
    config: &RunConfig,
    vtk_dir: Option<&Path>,
) -> Result<(Vec<ConvergenceRow>, Slopes)> {
    config.validate()?;
    let rows = config
        .convergence_levels()
        .par_iter()
        .map(|&m| {
            let mut written = Ok(());
            let row = convergence_level_inspect(config, m, |geom, disc, result| {
                if let Some(dir) = vtk_dir {
                    written = write_solution_vtk(
                        &dir.join(format!("solution_m{m}.vtk")),
                        geom,
                        disc,
                        &result.solution,
                    );
                }
            })
            .with_context(|| format!("mesh level m = {m}"))?;
            written?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let slopes = convergence_slopes(&rows);
    Ok((rows, slopes))
}

pub fn convergence_to(
    config: &RunConfig,
    out: &Path,
    vtk: bool,
) -> Result<(Vec<ConvergenceRow>, Slopes)> {
    ensure_dir(out)?;
    let (rows, slopes) = convergence(config, vtk.then_some(out))?;
    io::write_convergence_csv(&out.join("convergence.csv"), &rows, &slopes)?;
    Ok((rows, slopes))
}

fn write_solution_vtk(
    path: &Path,
    geom: &agfem_core::geometry::LevelSetGeometry,
    disc: &Discretization,
    solution: &[f64],
) -> Result<()> {
    let coefficients = disc.active_coefficients(solution)?;
    io::write_vtk(
        path,
        &io::VtkInput {
            mesh: &disc.mesh,
            geom,
            space: &disc.space,
            aggregates: &disc.aggregates,
            coefficients: &coefficients,
        },
    )?;
    Ok(())
}

/// Paths of the artifacts written by [`validate_to`].
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub report: PathBuf,
    pub vtk: PathBuf,
    pub aggregates: PathBuf,
    pub quadrature: PathBuf,
    pub matrix: PathBuf,
}

impl Artifacts {
    pub fn in_dir(out: &Path) -> Self {
        Self {
            report: out.join("validate.txt"),
            vtk: out.join("solution.vtk"),
            aggregates: out.join("aggregates.csv"),
            quadrature: out.join("quadrature.csv"),
            matrix: out.join("stiffness.mtx"),
        }
    }
}

/// Validation suite plus inspection artifacts for the manufactured problem
/// on the configured mesh: solution VTK, aggregates, quadrature points and
/// the stiffness matrix.
pub fn validate_to(
    config: &RunConfig,
    opts: ValidateOptions,
    out: &Path,
) -> Result<ValidationReport> {
    let report = run_validate(config, opts)?;
    ensure_dir(out)?;
    let files = Artifacts::in_dir(out);
    let text: String = report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )
        })
        .collect();
    fs::write(&files.report, text)
        .with_context(|| format!("writing {}", files.report.display()))?;

    let geom = config.geometry(ShapeParams {
        scale: config.full_scale(),
        position: None,
    })?;
    let disc = Discretization::build(
        &geom,
        1 << config.m,
        config.q,
        config.flavor,
        config.subdivision(),
        config.eta0,
    )?;
    let exact = ManufacturedSolution::new(config.dim);
    let quiet = RunConfig {
        kappa: false,
        mass_kappa: false,
        ..config.clone()
    };
    let system = assemble_system(&quiet, &disc, &exact)?;
    io::write_matrix_market(&files.matrix, &system.matrix)?;
    let result = solve_instance(&quiet, &geom, &disc, &exact)?;
    write_solution_vtk(&files.vtk, &geom, &disc, &result.solution)?;
    io::write_aggregates_csv(&files.aggregates, &disc.mesh, &disc.aggregates)?;
    io::write_quadrature_csv(&files.quadrature, &disc.quad)?;
    if config.flavor == SpaceKind::Standard {
        log::info!("artifacts use the standard space; aggregates are the identity map");
    }
    Ok(report)
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}
