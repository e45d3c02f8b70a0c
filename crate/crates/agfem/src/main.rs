use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use agfem::cli::{Cli, Command, CommonArgs};
use agfem::runner;
use agfem_core::experiments::ValidateOptions;

fn init_threads(common: &CommonArgs) -> Result<()> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate {
            common,
            corrupt_constraint_row,
        } => {
            init_threads(&common)?;
            let config = common.resolve()?;
            let report = runner::validate_to(
                &config,
                ValidateOptions {
                    corrupt_constraint_row,
                },
                &common.out,
            )?;
            for c in &report.checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Convergence { common, vtk } => {
            init_threads(&common)?;
            let config = common.resolve()?;
            let (rows, slopes) = runner::convergence_to(&config, &common.out, vtk)?;
            for r in &rows {
                println!(
                    "m={} h={:.4e} dofs={} kappa={:.3e} energy={:.3e} l2={:.3e} H/h={:.3}",
                    r.m, r.h, r.dofs, r.kappa_a, r.energy_error, r.l2_error, r.max_aggr_ratio
                );
            }
            println!(
                "slopes over {} meshes: kappa {:.3} energy {:.3} l2 {:.3}",
                slopes.points, slopes.kappa_a, slopes.energy_error, slopes.l2_error
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::MovingDomain { common } => {
            init_threads(&common)?;
            let config = common.resolve()?;
            let rows = runner::moving_domain_to(&config, &common.out)?;
            let kappas: Vec<f64> = rows
                .iter()
                .map(|r| r.kappa_a)
                .filter(|k| k.is_finite())
                .collect();
            let max = kappas.iter().cloned().fold(f64::NAN, f64::max);
            let min = kappas.iter().cloned().fold(f64::NAN, f64::min);
            let failed = rows.iter().filter(|r| !r.solved).count();
            println!(
                "{} positions, kappa in [{min:.3e}, {max:.3e}], {failed} unsolved",
                rows.len()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
