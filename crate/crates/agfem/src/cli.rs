//! Command-line interface.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use agfem_core::experiments::{RunConfig, SpaceKind};

#[derive(Debug, Parser)]
#[command(
    name = "agfem",
    version,
    about = "Aggregated unfitted FEM experiments for the Poisson problem"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure, patch-test and constraint checks; exits nonzero on failure.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, hide = true)]
        corrupt_constraint_row: bool,
    },
    /// Mesh refinement study with fitted log-log slopes.
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write a VTK file per mesh level.
        #[arg(long)]
        vtk: bool,
    },
    /// Condition numbers while the body moves along the box diagonal.
    MovingDomain {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// File with `key = value` lines; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "D")]
    pub dim: Option<usize>,
    /// Polynomial order of the Lagrange elements.
    #[arg(long, value_name = "Q")]
    pub order: Option<usize>,
    #[arg(long, value_parser = ["standard", "aggregated"])]
    pub flavor: Option<String>,
    /// Nitsche coefficient; the penalty is beta / h.
    #[arg(long, value_name = "B")]
    pub beta: Option<f64>,
    /// Level-set snapping tolerance.
    #[arg(long, value_name = "E")]
    pub eps: Option<f64>,
    /// Cut-cell subdivision depth for quadrature.
    #[arg(long, value_name = "R")]
    pub subdiv: Option<usize>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Finest convergence level.
    #[arg(long, value_name = "M")]
    pub max_m: Option<usize>,
    /// Mesh level `h = 2^-M` for single-mesh runs.
    #[arg(long, value_name = "M")]
    pub m: Option<usize>,
    /// Number of positions in the moving-domain sweep.
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
    /// circle, sphere or popcorn.
    #[arg(long)]
    pub shape: Option<String>,
    /// Skip stiffness condition numbers.
    #[arg(long)]
    pub no_kappa: bool,
    /// Also estimate mass-matrix condition numbers.
    #[arg(long)]
    pub mass_kappa: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl CommonArgs {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            c.apply_key_values(&text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        if let Some(d) = self.dim {
            c.dim = d;
        }
        if let Some(q) = self.order {
            c.q = q;
        }
        if let Some(f) = &self.flavor {
            c.flavor = SpaceKind::parse(f)?;
        }
        if let Some(b) = self.beta {
            c.beta = b;
        }
        if self.eps.is_some() {
            c.eps = self.eps;
        }
        if self.subdiv.is_some() {
            c.subdiv = self.subdiv;
        }
        if self.max_m.is_some() {
            c.m_max = self.max_m;
        }
        if let Some(m) = self.m {
            c.m = m;
        }
        if let Some(n) = self.samples {
            c.samples = n;
        }
        if self.shape.is_some() {
            c.shape = self.shape.clone();
        }
        if self.no_kappa {
            c.kappa = false;
        }
        if self.mass_kappa {
            c.mass_kappa = true;
        }
        c.validate()?;
        Ok(c)
    }
}
