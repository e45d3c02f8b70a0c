//! Experiment pipelines: the moving-domain conditioning sweep, the
//! convergence study and a validation suite.
//!
//! Each pipeline is exposed both as a serial driver and as a per-sample
//! function so callers can evaluate samples concurrently and still emit rows
//! in sweep order.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::aggregation::{aggregate_cells, max_aggregate_span, AggregateMap, AggregationOptions};
use crate::assembly::{assemble_mass, assemble_stiffness, NitscheParams, Problem, SparseSystem};
use crate::error::{Error, Result};
use crate::error_norms::{compute_errors, ErrorReport};
use crate::fespace::{
    extend, extension_norm_bound, AggregatedSpace, ConstraintSet, FESpace, Flavor,
};
use crate::geometry::{
    bounding_radius, builtin_shape, default_snap_tolerance, shape_dim, AffineSolution,
    ExactSolution, LevelSetGeometry, ManufacturedSolution, ShapeParams,
};
use crate::math::{self, Point};
use crate::mesh::BackgroundMesh;
use crate::quadrature::{cut_rule, domain_measures, MeshQuadrature};
use crate::spectral::{cond_estimate, solve_symmetric, CondEstimate, CondOptions};

/// Discretisation choice exposed to users.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// The plain active-mesh space.
    Standard,
    Aggregated,
}

impl SpaceKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "aggregated" => Ok(Self::Aggregated),
            other => Err(Error::Config(format!("unknown flavor '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Aggregated => "aggregated",
        }
    }

    fn flavor(self) -> Flavor {
        match self {
            Self::Standard => Flavor::Active,
            Self::Aggregated => Flavor::Aggregated,
        }
    }
}

/// Settings shared by all experiments. `None` fields resolve to
/// experiment-specific defaults (see the accessor methods).
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    /// `circle` (2D), `sphere` or `popcorn` (3D). Default: circle in 2D,
    /// popcorn in 3D.
    pub shape: Option<String>,
    pub q: usize,
    pub flavor: SpaceKind,
    pub beta: f64,
    /// Snapping tolerance; default 1e-6 (2D) or 1e-3 (3D).
    pub eps: Option<f64>,
    /// Cut-cell subdivision depth; default 0 for `q = 1`, 2 otherwise.
    pub subdiv: Option<usize>,
    pub eta0: f64,
    /// Body scale; default 0.25 for the moving domain, 1 otherwise.
    pub scale: Option<f64>,
    /// Mesh level `h = 2^-m` for single-mesh experiments (default 5).
    pub m: usize,
    /// Number of diagonal positions in the moving-domain sweep (default 200).
    pub samples: usize,
    /// Sweep range along the diagonal; default keeps the body one cell away
    /// from the box.
    pub l_min: Option<f64>,
    pub l_max: Option<f64>,
    /// Convergence mesh levels; default 3..=9 (2D) or 3..=6 (3D).
    pub m_min: usize,
    pub m_max: Option<usize>,
    pub rtol: f64,
    /// Estimate `κ(A)`.
    pub kappa: bool,
    /// Skip `κ(A)` above this many unknowns (`NaN` in the tables).
    pub kappa_max_dofs: usize,
    /// Also estimate `κ(M)` of the mass matrix.
    pub mass_kappa: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            shape: None,
            q: 1,
            flavor: SpaceKind::Aggregated,
            beta: 100.0,
            eps: None,
            subdiv: None,
            eta0: 1.0,
            scale: None,
            m: 5,
            samples: 200,
            l_min: None,
            l_max: None,
            m_min: 3,
            m_max: None,
            rtol: 1e-12,
            kappa: true,
            kappa_max_dofs: 60_000,
            mass_kappa: false,
        }
    }
}

fn parse_num<T: core::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("invalid value '{v}' for '{key}'"))),
    }
}

impl RunConfig {
    /// Sets one field from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "dim" => self.dim = parse_num(key, v)?,
            "shape" => self.shape = Some(v.to_string()),
            "order" | "q" => self.q = parse_num(key, v)?,
            "flavor" => self.flavor = SpaceKind::parse(v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "eps" => self.eps = Some(parse_num(key, v)?),
            "subdiv" => self.subdiv = Some(parse_num(key, v)?),
            "eta0" => self.eta0 = parse_num(key, v)?,
            "scale" => self.scale = Some(parse_num(key, v)?),
            "m" => self.m = parse_num(key, v)?,
            "samples" => self.samples = parse_num(key, v)?,
            "l_min" => self.l_min = Some(parse_num(key, v)?),
            "l_max" => self.l_max = Some(parse_num(key, v)?),
            "m_min" => self.m_min = parse_num(key, v)?,
            "m_max" | "max_m" => self.m_max = Some(parse_num(key, v)?),
            "rtol" => self.rtol = parse_num(key, v)?,
            "kappa" => self.kappa = parse_bool(key, v)?,
            "kappa_max_dofs" => self.kappa_max_dofs = parse_num(key, v)?,
            "mass_kappa" => self.mass_kappa = parse_bool(key, v)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_key_values(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_key_values(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return Err(Error::Config(format!(
                "dim must be 2 or 3, got {}",
                self.dim
            )));
        }
        if !(1..=3).contains(&self.q) {
            return Err(Error::Config(format!(
                "order must be 1, 2 or 3, got {}",
                self.q
            )));
        }
        let sd = shape_dim(&self.shape_name())?;
        if sd != self.dim {
            return Err(Error::Config(format!(
                "shape '{}' is {sd}D but dim = {}",
                self.shape_name(),
                self.dim
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config("beta must be positive".into()));
        }
        if !(self.eta0 > 0.0 && self.eta0 <= 1.0) {
            return Err(Error::Config("eta0 must lie in (0, 1]".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if self.m > 12 || self.m_max.unwrap_or(0) > 12 {
            return Err(Error::Config("mesh level above 12".into()));
        }
        Ok(())
    }

    pub fn shape_name(&self) -> String {
        match &self.shape {
            Some(s) => s.clone(),
            None if self.dim == 3 => "popcorn".into(),
            None => "circle".into(),
        }
    }

    pub fn snap_tolerance(&self) -> f64 {
        self.eps.unwrap_or_else(|| default_snap_tolerance(self.dim))
    }

    pub fn subdivision(&self) -> usize {
        self.subdiv.unwrap_or(if self.q == 1 { 0 } else { 2 })
    }

    pub fn convergence_levels(&self) -> Vec<usize> {
        let max = self.m_max.unwrap_or(if self.dim == 2 { 9 } else { 6 });
        (self.m_min..=max).collect()
    }

    pub fn moving_scale(&self) -> f64 {
        self.scale.unwrap_or(0.25)
    }

    pub fn full_scale(&self) -> f64 {
        self.scale.unwrap_or(1.0)
    }

    /// Diagonal positions of the moving-domain sweep. By default the body
    /// center moves so that its bounding ball stays one cell away from the
    /// box faces.
    pub fn sweep_positions(&self) -> Result<Vec<f64>> {
        let r = bounding_radius(&self.shape_name(), self.moving_scale())?;
        let h = 1.0 / (1u64 << self.m) as f64;
        let sd = math::sqrt(self.dim as f64);
        let lo = self.l_min.unwrap_or(sd * (r + h));
        let hi = self.l_max.unwrap_or(sd * (1.0 - r - h));
        if !(hi >= lo) {
            return Err(Error::Config(format!("empty sweep range [{lo}, {hi}]")));
        }
        let n = self.samples;
        Ok((0..n)
            .map(|i| {
                if n == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect())
    }

    pub fn geometry(&self, params: ShapeParams) -> Result<LevelSetGeometry> {
        Ok(builtin_shape(&self.shape_name(), params)?.with_snap_tolerance(self.snap_tolerance()))
    }

    fn cond_options(&self) -> CondOptions {
        CondOptions::default()
    }
}

/// Everything built for one geometry on one mesh.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: BackgroundMesh,
    pub aggregates: AggregateMap,
    pub space: FESpace,
    pub constraints: Option<ConstraintSet>,
    /// Assembly rules (degree `2q`).
    pub quad: MeshQuadrature,
    pub q: usize,
    pub subdiv: usize,
}

impl Discretization {
    pub fn build(
        geom: &LevelSetGeometry,
        cells_per_axis: usize,
        q: usize,
        kind: SpaceKind,
        subdiv: usize,
        eta0: f64,
    ) -> Result<Self> {
        let dim = geom.dim();
        let mut mesh = BackgroundMesh::unit(dim, cells_per_axis)?;
        mesh.classify(geom);
        let aggregates = match kind {
            SpaceKind::Aggregated => {
                let options = AggregationOptions {
                    eta_threshold: eta0,
                };
                let eta = |c: usize| cut_rule(&mesh, geom, c, 1, 0).measure() / mesh.cell_measure();
                let etas: Vec<f64> = if eta0 < 1.0 {
                    (0..mesh.num_cells()).map(eta).collect()
                } else {
                    Vec::new()
                };
                aggregate_cells(&mut mesh, options, |c| etas.get(c).copied().unwrap_or(0.0))
            }
            SpaceKind::Standard => AggregateMap::identity(&mesh),
        };
        let (space, constraints) = match kind {
            SpaceKind::Aggregated => {
                let agg = AggregatedSpace::new(&mesh, &aggregates, q)?;
                (agg.space, Some(agg.constraints))
            }
            SpaceKind::Standard => (FESpace::new(&mesh, q, Flavor::Active)?, None),
        };
        debug_assert_eq!(space.flavor, kind.flavor());
        let quad = MeshQuadrature::build(&mesh, geom, 2 * q, subdiv);
        Ok(Self {
            mesh,
            aggregates,
            space,
            constraints,
            quad,
            q,
            subdiv,
        })
    }

    /// Longest aggregate bounding-box side over `h`.
    pub fn max_aggregate_ratio(&self) -> f64 {
        max_aggregate_span(&self.aggregates, &self.mesh) / self.mesh.h_max()
    }

    /// Active-numbered nodal coefficients of a solution vector.
    pub fn active_coefficients(&self, u: &[f64]) -> Result<Vec<f64>> {
        crate::fespace::dofs_to_active(&self.space, self.constraints.as_ref(), u)
    }
}

/// Outcome of solving one instance.
#[derive(Clone, Debug)]
pub struct InstanceResult {
    pub dofs: usize,
    pub kappa: Option<CondEstimate>,
    pub kappa_mass: Option<CondEstimate>,
    pub errors: ErrorReport,
    pub solved: bool,
    pub residual: f64,
    pub max_aggr_ratio: f64,
    pub solution: Vec<f64>,
}

/// Nitsche system for `exact` on a discretisation.
pub fn assemble_system(
    config: &RunConfig,
    disc: &Discretization,
    exact: &dyn ExactSolution,
) -> Result<SparseSystem> {
    let source = |x: &Point| exact.source(x);
    let dirichlet = |x: &Point| exact.value(x);
    let problem = Problem {
        source: &source,
        dirichlet: &dirichlet,
        neumann: None,
    };
    let params = NitscheParams {
        beta: config.beta,
        ..NitscheParams::default()
    };
    assemble_stiffness(
        &disc.mesh,
        &disc.space,
        disc.constraints.as_ref(),
        &disc.quad,
        &params,
        &problem,
    )
}

/// Assembles, estimates conditioning, solves and measures errors.
pub fn solve_instance(
    config: &RunConfig,
    geom: &LevelSetGeometry,
    disc: &Discretization,
    exact: &dyn ExactSolution,
) -> Result<InstanceResult> {
    let sys = assemble_system(config, disc, exact)?;
    let n = sys.matrix.rows;
    let opts = config.cond_options();
    let kappa = if config.kappa && n <= config.kappa_max_dofs {
        Some(cond_estimate(&sys.matrix, &opts)?)
    } else {
        None
    };
    let kappa_mass = if config.mass_kappa {
        let m = assemble_mass(
            &disc.mesh,
            &disc.space,
            disc.constraints.as_ref(),
            &disc.quad,
        )?;
        Some(cond_estimate(&m, &opts)?)
    } else {
        None
    };
    let report = solve_symmetric(&sys.matrix, &sys.rhs, config.rtol, opts.direct_work_limit);
    // Errors on Gauss rules with one more point per direction than assembly.
    let err_quad = MeshQuadrature::build(&disc.mesh, geom, 2 * disc.q + 2, disc.subdiv);
    let errors = compute_errors(
        &disc.mesh,
        &disc.space,
        disc.constraints.as_ref(),
        &err_quad,
        &report.solution,
        exact,
    )?;
    Ok(InstanceResult {
        dofs: n,
        kappa,
        kappa_mass,
        errors,
        solved: report.converged,
        residual: report.residual,
        max_aggr_ratio: disc.max_aggregate_ratio(),
        solution: report.solution,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MovingDomainRow {
    pub l: f64,
    pub kappa_a: f64,
    pub energy_error: f64,
    pub solved: bool,
    pub kappa_lower_bound: bool,
    pub kappa_m: Option<f64>,
    pub dofs: usize,
}

fn kappa_value(k: &Option<CondEstimate>) -> f64 {
    k.map(|c| c.kappa).unwrap_or(f64::NAN)
}

/// One position of the moving-domain sweep. Failures become rows with
/// `solved = false` and `NaN` values.
pub fn moving_domain_sample(config: &RunConfig, l: f64) -> MovingDomainRow {
    let attempt = || -> Result<MovingDomainRow> {
        let geom = config.geometry(ShapeParams {
            scale: config.moving_scale(),
            position: Some(l),
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
        let r = solve_instance(config, &geom, &disc, &exact)?;
        Ok(MovingDomainRow {
            l,
            kappa_a: kappa_value(&r.kappa),
            energy_error: r.errors.energy_error,
            solved: r.solved,
            kappa_lower_bound: r.kappa.is_some_and(|k| k.is_lower_bound()),
            kappa_m: r.kappa_mass.map(|k| k.kappa),
            dofs: r.dofs,
        })
    };
    attempt().unwrap_or_else(|e| {
        log::warn!("moving domain l = {l}: {e}");
        MovingDomainRow {
            l,
            kappa_a: f64::NAN,
            energy_error: f64::NAN,
            solved: false,
            kappa_lower_bound: false,
            kappa_m: None,
            dofs: 0,
        }
    })
}

/// Serial moving-domain sweep in position order.
pub fn run_moving_domain(config: &RunConfig) -> Result<Vec<MovingDomainRow>> {
    config.validate()?;
    Ok(config
        .sweep_positions()?
        .into_iter()
        .map(|l| moving_domain_sample(config, l))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub m: usize,
    pub h: f64,
    pub dofs: usize,
    pub kappa_a: f64,
    pub energy_error: f64,
    pub l2_error: f64,
    pub max_aggr_ratio: f64,
    pub kappa_m: Option<f64>,
    pub solved: bool,
}

/// Least-squares log-log slopes against `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slopes {
    pub kappa_a: f64,
    pub energy_error: f64,
    pub l2_error: f64,
    /// Number of (finest) meshes used in the fit.
    pub points: usize,
}

/// Fits slopes on all but the two coarsest meshes. Short sequences drop
/// fewer so that at least three meshes stay in the fit.
pub fn convergence_slopes(rows: &[ConvergenceRow]) -> Slopes {
    let mut sorted: Vec<&ConvergenceRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.h.total_cmp(&a.h));
    let skip = 2.min(sorted.len().saturating_sub(3));
    let used = &sorted[skip..];
    let fit = |f: &dyn Fn(&ConvergenceRow) -> f64| {
        let pts: Vec<(f64, f64)> = used
            .iter()
            .map(|r| (r.h, f(r)))
            .filter(|(_, y)| y.is_finite() && *y > 0.0)
            .collect();
        if pts.len() < 2 {
            return f64::NAN;
        }
        let hs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        math::loglog_slope(&hs, &ys)
    };
    Slopes {
        kappa_a: fit(&|r| r.kappa_a),
        energy_error: fit(&|r| r.energy_error),
        l2_error: fit(&|r| r.l2_error),
        points: used.len(),
    }
}

/// One mesh level `h = 2^-m` of the convergence study.
pub fn convergence_level(config: &RunConfig, m: usize) -> Result<ConvergenceRow> {
    convergence_level_inspect(config, m, |_, _, _| {})
}

/// [`convergence_level`] that also hands the geometry, discretisation and
/// solution to `inspect` before they are dropped.
pub fn convergence_level_inspect(
    config: &RunConfig,
    m: usize,
    mut inspect: impl FnMut(&LevelSetGeometry, &Discretization, &InstanceResult),
) -> Result<ConvergenceRow> {
    let geom = config.geometry(ShapeParams {
        scale: config.full_scale(),
        position: None,
    })?;
    let disc = Discretization::build(
        &geom,
        1 << m,
        config.q,
        config.flavor,
        config.subdivision(),
        config.eta0,
    )?;
    let exact = ManufacturedSolution::new(config.dim);
    let r = solve_instance(config, &geom, &disc, &exact)?;
    inspect(&geom, &disc, &r);
    Ok(ConvergenceRow {
        m,
        h: disc.mesh.h_max(),
        dofs: r.dofs,
        kappa_a: kappa_value(&r.kappa),
        energy_error: r.errors.energy_error,
        l2_error: r.errors.l2_error,
        max_aggr_ratio: r.max_aggr_ratio,
        kappa_m: r.kappa_mass.map(|k| k.kappa),
        solved: r.solved,
    })
}

/// Serial convergence study over [`RunConfig::convergence_levels`].
pub fn run_convergence(config: &RunConfig) -> Result<(Vec<ConvergenceRow>, Slopes)> {
    config.validate()?;
    let rows = config
        .convergence_levels()
        .into_iter()
        .map(|m| convergence_level(config, m))
        .collect::<Result<Vec<_>>>()?;
    let slopes = convergence_slopes(&rows);
    Ok((rows, slopes))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }
}

/// Test hooks for the validation suite.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ValidateOptions {
    /// Perturb the first constraint row before the checks run.
    pub corrupt_constraint_row: bool,
}

/// Relative tolerances of the measure checks.
pub fn measure_tolerances(dim: usize) -> (f64, f64) {
    if dim == 2 {
        (1e-5, 1e-4)
    } else {
        (1e-2, 5e-2)
    }
}

/// Runs measure, patch-test, partition-of-unity, extension-bound and
/// constraint-row checks on the configured full-scale body at `h = 2^-m`.
pub fn run_validate(config: &RunConfig, opts: ValidateOptions) -> Result<ValidationReport> {
    config.validate()?;
    let mut report = ValidationReport::default();
    let shape = config.shape_name();
    let geom = config.geometry(ShapeParams {
        scale: config.full_scale(),
        position: None,
    })?;
    let n = 1usize << config.m;
    let r_sub = config.subdivision();

    // Measures against closed forms where they exist.
    let mut mesh = BackgroundMesh::unit(config.dim, n)?;
    mesh.classify(&geom);
    let (vol, area) = domain_measures(&mesh, &geom, 2 * config.q, r_sub);
    let radius = bounding_radius(&shape, config.full_scale())?;
    let exact = match shape.as_str() {
        "circle" => Some((
            core::f64::consts::PI * radius * radius,
            2.0 * core::f64::consts::PI * radius,
        )),
        "sphere" => Some((
            4.0 / 3.0 * core::f64::consts::PI * radius * radius * radius,
            4.0 * core::f64::consts::PI * radius * radius,
        )),
        _ => None,
    };
    let (tol_v, tol_a) = measure_tolerances(config.dim);
    match exact {
        Some((ev, ea)) => {
            let rv = ((vol - ev) / ev).abs();
            let ra = ((area - ea) / ea).abs();
            report.push(
                "volume",
                rv <= tol_v,
                format!("relative error {rv:.3e} (tol {tol_v:.0e})"),
            );
            report.push(
                "boundary measure",
                ra <= tol_a,
                format!("relative error {ra:.3e} (tol {tol_a:.0e})"),
            );
        }
        None => {
            let inside = vol > 0.0 && vol < 1.0 && area > 0.0;
            report.push("volume", inside, format!("|Ω| = {vol:.6}, |Γ| = {area:.6}"));
        }
    }

    let mut disc = Discretization::build(
        &geom,
        n,
        config.q,
        SpaceKind::Aggregated,
        r_sub,
        config.eta0,
    )?;
    if opts.corrupt_constraint_row {
        if let Some(row) = disc.constraints.as_mut().and_then(|c| c.rows.first_mut()) {
            if let Some(e) = row.first_mut() {
                e.1 += 0.5;
            }
        }
    }
    let constraints = disc.constraints.clone().ok_or(Error::MissingConstraints)?;

    // Constraint rows sum to one.
    let worst = constraints
        .rows
        .iter()
        .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    report.push(
        "constraint row sums",
        worst <= 1e-12,
        format!("max |Σ C_b - 1| = {worst:.3e}"),
    );

    // Partition of unity of the extended basis.
    let ni = disc.space.num_interior();
    let ones = extend(&constraints, &vec![1.0; ni])?;
    let pu = ones.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    report.push(
        "partition of unity",
        pu <= 1e-12,
        format!("max |E1 - 1| = {pu:.3e}"),
    );

    // Extension bound holds on deterministic probe vectors.
    let bound = extension_norm_bound(&constraints, config.dim);
    let mut worst_ratio: f64 = 0.0;
    for k in 0..8 {
        let u: Vec<f64> = (0..ni)
            .map(|i| math::sin(1.7 * (i + 1) as f64 * (k + 1) as f64))
            .collect();
        let eu = extend(&constraints, &u)?;
        worst_ratio = worst_ratio.max(math::vec_dot(&eu, &eu) / math::vec_dot(&u, &u));
    }
    report.push(
        "extension norm bound",
        bound.is_finite() && worst_ratio <= bound,
        format!("max ‖Eu‖²/‖u‖² = {worst_ratio:.4} <= bound {bound:.4}"),
    );

    // Affine patch test.
    let affine = AffineSolution {
        constant: 0.5,
        slope: [1.0, -0.75, 0.25],
    };
    let patch_config = RunConfig {
        kappa: false,
        mass_kappa: false,
        ..config.clone()
    };
    disc.constraints = Some(constraints);
    let res = solve_instance(&patch_config, &geom, &disc, &affine)?;
    let e = res.errors.energy_error;
    report.push("patch test", e <= 1e-9, format!("energy error {e:.3e}"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let c = RunConfig::from_key_values(
            "# comment\ndim = 3\nshape=sphere\norder = 2\nflavor = standard\nbeta=50 # inline\nsubdiv = 1\n",
        )
        .unwrap();
        assert_eq!(c.dim, 3);
        assert_eq!(c.q, 2);
        assert_eq!(c.flavor, SpaceKind::Standard);
        assert_eq!(c.beta, 50.0);
        assert_eq!(c.subdivision(), 1);
        assert_eq!(c.snap_tolerance(), 1e-3);
        assert!(RunConfig::from_key_values("bogus = 1").is_err());
        assert!(RunConfig::from_key_values("dim").is_err());
        assert!(RunConfig::from_key_values("dim = 3\nshape = circle").is_err());
        assert!(RunConfig::from_key_values("order = x").is_err());
    }

    #[test]
    fn defaults_follow_setup() {
        let c = RunConfig::default();
        assert_eq!(c.shape_name(), "circle");
        assert_eq!(c.subdivision(), 0);
        assert_eq!(c.convergence_levels(), (3..=9).collect::<Vec<_>>());
        assert_eq!(c.moving_scale(), 0.25);
        assert_eq!(c.samples, 200);
        let c3 = RunConfig {
            dim: 3,
            q: 2,
            ..RunConfig::default()
        };
        assert_eq!(c3.shape_name(), "popcorn");
        assert_eq!(c3.subdivision(), 2);
        assert_eq!(c3.convergence_levels(), (3..=6).collect::<Vec<_>>());
    }

    #[test]
    fn sweep_keeps_body_inside() {
        let c = RunConfig {
            samples: 5,
            ..RunConfig::default()
        };
        let ls = c.sweep_positions().unwrap();
        assert_eq!(ls.len(), 5);
        for l in ls {
            let center = l / 2f64.sqrt();
            assert!(center - 0.1 > 0.0 && center + 0.1 < 1.0);
        }
    }

    #[test]
    fn slopes_skip_two_coarsest() {
        let rows: Vec<ConvergenceRow> = (3..=7)
            .map(|m| {
                let h = 1.0 / (1u64 << m) as f64;
                // Coarse levels off the asymptotic line.
                let bump = if m < 5 { 3.0 } else { 1.0 };
                ConvergenceRow {
                    m,
                    h,
                    dofs: 0,
                    kappa_a: 1.0 / (h * h),
                    energy_error: bump * h,
                    l2_error: h * h,
                    max_aggr_ratio: 2.0,
                    kappa_m: None,
                    solved: true,
                }
            })
            .collect();
        let s = convergence_slopes(&rows);
        assert_eq!(s.points, 3);
        assert!((s.energy_error - 1.0).abs() < 1e-12);
        assert!((s.kappa_a + 2.0).abs() < 1e-12);
        assert!((s.l2_error - 2.0).abs() < 1e-12);
        assert_eq!(convergence_slopes(&rows[..4]).points, 3);
        assert_eq!(convergence_slopes(&rows[..3]).points, 3);
    }

    #[test]
    fn validate_passes_and_detects_corruption() {
        let c = RunConfig {
            m: 4,
            ..RunConfig::default()
        };
        let ok = run_validate(&c, ValidateOptions::default()).unwrap();
        assert!(ok.passed(), "{ok:?}");
        let bad = run_validate(
            &c,
            ValidateOptions {
                corrupt_constraint_row: true,
            },
        )
        .unwrap();
        assert!(!bad.passed());
        assert!(
            !bad.checks
                .iter()
                .find(|c| c.name == "constraint row sums")
                .unwrap()
                .passed
        );
    }

    #[test]
    fn moving_domain_sample_runs() {
        let c = RunConfig {
            samples: 3,
            ..RunConfig::default()
        };
        let rows = run_moving_domain(&c).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(r.solved);
            assert!(r.kappa_a.is_finite() && r.kappa_a > 1.0);
            assert!(r.energy_error.is_finite());
        }
    }
}
