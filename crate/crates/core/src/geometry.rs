//! Implicit domains `Ω = {ψ < 0}` given by analytic level-set functions,
//! edge/boundary intersections with node snapping, the benchmark shapes and
//! the manufactured solution.

use alloc::string::ToString;
use alloc::sync::Arc;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::{self, Point};

/// Default snapping tolerance: `1e-6` in 2D and `1e-3` in 3D.
pub fn default_snap_tolerance(dim: usize) -> f64 {
    if dim == 3 {
        1e-3
    } else {
        1e-6
    }
}

type ScalarFn = dyn Fn(&Point) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&Point) -> Point + Send + Sync;

#[derive(Clone)]
pub enum Shape {
    /// Disc (2D) or ball (3D) `|x - c| - r`.
    Ball { center: Point, radius: f64 },
    /// Half space `n·x - offset`.
    HalfSpace { normal: Point, offset: f64 },
    /// Popcorn flake of reference size ~0.885, scaled by `length` about `center`.
    Popcorn { center: Point, length: f64 },
    Custom {
        psi: Arc<ScalarFn>,
        grad: Option<Arc<VectorFn>>,
    },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Shape::HalfSpace { normal, offset } => f
                .debug_struct("HalfSpace")
                .field("normal", normal)
                .field("offset", offset)
                .finish(),
            Shape::Popcorn { center, length } => f
                .debug_struct("Popcorn")
                .field("center", center)
                .field("length", length)
                .finish(),
            Shape::Custom { grad, .. } => f
                .debug_struct("Custom")
                .field("has_gradient", &grad.is_some())
                .finish(),
        }
    }
}

/// Popcorn flake constants in reference coordinates.
pub mod popcorn {
    /// Radius of the base sphere.
    pub const R0: f64 = 0.6;
    /// Bump amplitude.
    pub const AMPLITUDE: f64 = 2.0;
    /// Bump width.
    pub const SIGMA: f64 = 0.2;
    /// Maps reference coordinates into the unit box at scale 1: the flake
    /// (reference radius below 0.89) then fits in a ball of radius 0.445.
    pub const BOX_LENGTH: f64 = 0.5;
    /// Upper bound on the reference radius of the flake.
    pub const EXTENT: f64 = 0.89;

    /// The twelve bump centers.
    pub fn bump_centers() -> [[f64; 3]; 12] {
        let mut c = [[0.0; 3]; 12];
        let s = R0 / libm::sqrt(5.0);
        let pi = core::f64::consts::PI;
        for (k, ck) in c.iter_mut().enumerate().take(5) {
            let a = 2.0 * k as f64 * pi / 5.0;
            *ck = [2.0 * s * libm::cos(a), 2.0 * s * libm::sin(a), s];
        }
        for k in 5..10 {
            let a = (2.0 * (k - 5) as f64 - 1.0) * pi / 5.0;
            c[k] = [2.0 * s * libm::cos(a), 2.0 * s * libm::sin(a), -s];
        }
        c[10] = [0.0, 0.0, R0];
        c[11] = [0.0, 0.0, -R0];
        c
    }
}

fn popcorn_ref(y: &Point) -> f64 {
    let mut v = math::norm(y) - popcorn::R0;
    let s2 = popcorn::SIGMA * popcorn::SIGMA;
    for c in popcorn::bump_centers().iter() {
        let d = math::sub(y, c);
        v -= popcorn::AMPLITUDE * math::exp(-math::dot(&d, &d) / s2);
    }
    v
}

fn popcorn_ref_grad(y: &Point) -> Point {
    let r = math::norm(y);
    let mut g = if r > 0.0 {
        math::scale(y, 1.0 / r)
    } else {
        [0.0; 3]
    };
    let s2 = popcorn::SIGMA * popcorn::SIGMA;
    for c in popcorn::bump_centers().iter() {
        let d = math::sub(y, c);
        let w = 2.0 * popcorn::AMPLITUDE / s2 * math::exp(-math::dot(&d, &d) / s2);
        g = math::add(&g, &math::scale(&d, w));
    }
    g
}

/// Level-set description of a domain `Ω = {ψ < 0}` in 2D or 3D.
#[derive(Clone, Debug)]
pub struct LevelSetGeometry {
    shape: Shape,
    dim: usize,
    snap_tolerance: f64,
}

impl LevelSetGeometry {
    pub fn new(shape: Shape, dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        Self {
            shape,
            dim,
            snap_tolerance: default_snap_tolerance(dim),
        }
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self::new(
            Shape::Ball {
                center: [center[0], center[1], 0.0],
                radius,
            },
            2,
        )
    }

    pub fn sphere(center: Point, radius: f64) -> Self {
        Self::new(Shape::Ball { center, radius }, 3)
    }

    pub fn half_space(dim: usize, normal: Point, offset: f64) -> Self {
        Self::new(Shape::HalfSpace { normal, offset }, dim)
    }

    pub fn popcorn(center: Point, length: f64) -> Self {
        Self::new(Shape::Popcorn { center, length }, 3)
    }

    pub fn custom<F>(dim: usize, psi: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            Shape::Custom {
                psi: Arc::new(psi),
                grad: None,
            },
            dim,
        )
    }

    /// Attaches an analytic gradient to a custom level set.
    pub fn with_gradient<G>(mut self, grad_psi: G) -> Self
    where
        G: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        if let Shape::Custom { grad, .. } = &mut self.shape {
            *grad = Some(Arc::new(grad_psi));
        }
        self
    }

    pub fn with_snap_tolerance(mut self, eps: f64) -> Self {
        assert!((0.0..0.5).contains(&eps));
        self.snap_tolerance = eps;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn snap_tolerance(&self) -> f64 {
        self.snap_tolerance
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// `ψ(x)`.
    pub fn eval(&self, x: &Point) -> f64 {
        match &self.shape {
            Shape::Ball { center, radius } => math::dist(x, center) - radius,
            Shape::HalfSpace { normal, offset } => math::dot(normal, x) - offset,
            Shape::Popcorn { center, length } => {
                let y = math::scale(&math::sub(x, center), 1.0 / length);
                length * popcorn_ref(&y)
            }
            Shape::Custom { psi, .. } => psi(x),
        }
    }

    /// `∇ψ(x)` when known in closed form.
    pub fn gradient(&self, x: &Point) -> Option<Point> {
        match &self.shape {
            Shape::Ball { center, .. } => {
                let d = math::sub(x, center);
                let r = math::norm(&d);
                Some(if r > 0.0 {
                    math::scale(&d, 1.0 / r)
                } else {
                    [0.0; 3]
                })
            }
            Shape::HalfSpace { normal, .. } => Some(*normal),
            Shape::Popcorn { center, length } => {
                let y = math::scale(&math::sub(x, center), 1.0 / length);
                Some(popcorn_ref_grad(&y))
            }
            Shape::Custom { grad, .. } => grad.as_ref().map(|g| g(x)),
        }
    }

    pub fn is_inside(&self, x: &Point) -> bool {
        self.eval(x) <= 0.0
    }

    /// Root of `ψ` on the segment `a → b` as a parameter `t ∈ [0, 1]`,
    /// without snapping. `None` when `ψ(a)` and `ψ(b)` have the same strict sign.
    pub fn edge_root(&self, a: &Point, b: &Point) -> Option<f64> {
        let fa = self.eval(a);
        let fb = self.eval(b);
        root_on_segment(|t| self.eval(&math::lerp(a, b, t)), fa, fb)
    }

    /// Edge/boundary intersection with snapping: roots closer than `ε` (relative
    /// to the edge length) to an end point collapse onto that end point.
    pub fn edge_intersection(&self, a: &Point, b: &Point) -> Option<f64> {
        let t = self.edge_root(a, b)?;
        Some(snap(t, self.snap_tolerance))
    }
}

/// Free-function form of [`LevelSetGeometry::eval`].
pub fn eval_levelset(geom: &LevelSetGeometry, x: &Point) -> f64 {
    geom.eval(x)
}

/// Free-function form of [`LevelSetGeometry::edge_intersection`].
pub fn edge_intersection(geom: &LevelSetGeometry, a: &Point, b: &Point) -> Option<f64> {
    geom.edge_intersection(a, b)
}

pub(crate) fn snap(t: f64, eps: f64) -> f64 {
    if t < eps {
        0.0
    } else if t > 1.0 - eps {
        1.0
    } else {
        t
    }
}

/// Bracketing root finder: bisection until the bracket is small, then
/// Illinois-modified secant steps, always keeping the bracket.
pub(crate) fn root_on_segment<F: Fn(f64) -> f64>(f: F, fa: f64, fb: f64) -> Option<f64> {
    if fa == 0.0 {
        return Some(0.0);
    }
    if fb == 0.0 {
        return Some(1.0);
    }
    if (fa < 0.0) == (fb < 0.0) {
        return None;
    }
    let scale = fa.abs() + fb.abs();
    let ftol = 1e-15 * scale;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut flo, mut fhi) = (fa, fb);
    // A few bisection steps to get into the asymptotic regime.
    for _ in 0..8 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let t = (lo * fhi - hi * flo) / (fhi - flo);
        let t = if t > lo && t < hi { t } else { 0.5 * (lo + hi) };
        let ft = f(t);
        if ft.abs() <= ftol || hi - lo <= 4.0 * f64::EPSILON {
            return Some(t);
        }
        if (ft < 0.0) == (flo < 0.0) {
            lo = t;
            flo = ft;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            fhi = ft;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Some(if flo.abs() < fhi.abs() { lo } else { hi })
}

/// Parameters of the builtin benchmark shapes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeParams {
    /// Scale factor relative to the full-size benchmark body.
    pub scale: f64,
    /// Distance from the box vertex at the origin to the body center, along
    /// the main diagonal. `None` puts the body at the box center.
    pub position: Option<f64>,
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self {
            scale: 1.0,
            position: None,
        }
    }
}

/// Radius of the full-size circle/sphere benchmark in the unit box.
pub const BALL_RADIUS: f64 = 0.4;

/// Center of a body at distance `position` from the origin along the diagonal.
pub fn diagonal_center(dim: usize, position: Option<f64>) -> Point {
    let mut c = [0.0; 3];
    let s = match position {
        Some(l) => l / math::sqrt(dim as f64),
        None => 0.5,
    };
    for ci in c.iter_mut().take(dim) {
        *ci = s;
    }
    c
}

/// Builtin benchmark shapes: `circle` (2D), `sphere` and `popcorn` (3D).
pub fn builtin_shape(name: &str, params: ShapeParams) -> Result<LevelSetGeometry> {
    let geom = match name {
        "circle" => {
            let c = diagonal_center(2, params.position);
            LevelSetGeometry::circle([c[0], c[1]], BALL_RADIUS * params.scale)
        }
        "sphere" => LevelSetGeometry::sphere(
            diagonal_center(3, params.position),
            BALL_RADIUS * params.scale,
        ),
        "popcorn" => LevelSetGeometry::popcorn(
            diagonal_center(3, params.position),
            popcorn::BOX_LENGTH * params.scale,
        ),
        other => return Err(Error::UnknownShape(other.to_string())),
    };
    Ok(geom)
}

/// Radius of a ball around the body center containing a builtin shape.
pub fn bounding_radius(name: &str, scale: f64) -> Result<f64> {
    match name {
        "circle" | "sphere" => Ok(BALL_RADIUS * scale),
        "popcorn" => Ok(popcorn::EXTENT * popcorn::BOX_LENGTH * scale),
        other => Err(Error::UnknownShape(other.to_string())),
    }
}

/// Space dimension a builtin shape lives in.
pub fn shape_dim(name: &str) -> Result<usize> {
    match name {
        "circle" => Ok(2),
        "sphere" | "popcorn" => Ok(3),
        other => Err(Error::UnknownShape(other.to_string())),
    }
}

/// Exact solution of `-Δu = f` with gradient, used for Dirichlet data,
/// source terms and error measurement.
pub trait ExactSolution: Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
    /// `f = -Δu`.
    fn source(&self, x: &Point) -> f64;
}

/// `u = sin(4π |x - (2.3, 0, 0)|)`, with `z = 0` in 2D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedSolution {
    pub dim: usize,
}

/// Center of the radial manufactured solution.
pub const MANUFACTURED_CENTER: Point = [2.3, 0.0, 0.0];
const WAVE: f64 = 4.0 * PI;

impl ManufacturedSolution {
    pub fn new(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3);
        Self { dim }
    }

    fn offset(&self, x: &Point) -> Point {
        let mut d = math::sub(x, &MANUFACTURED_CENTER);
        if self.dim == 2 {
            d[2] = 0.0;
        }
        d
    }
}

/// Free-function constructor mirroring the other builtins.
pub fn manufactured(dim: usize) -> ManufacturedSolution {
    ManufacturedSolution::new(dim)
}

impl ExactSolution for ManufacturedSolution {
    fn value(&self, x: &Point) -> f64 {
        math::sin(WAVE * math::norm(&self.offset(x)))
    }

    fn gradient(&self, x: &Point) -> Point {
        let d = self.offset(x);
        let r = math::norm(&d);
        if r == 0.0 {
            return [0.0; 3];
        }
        math::scale(&d, WAVE * math::cos(WAVE * r) / r)
    }

    fn source(&self, x: &Point) -> f64 {
        // Radial Laplacian in `dim` dimensions: u'' + (d-1)/r u'.
        let r = math::norm(&self.offset(x));
        let d1 = (self.dim - 1) as f64;
        WAVE * WAVE * math::sin(WAVE * r) - d1 / r * WAVE * math::cos(WAVE * r)
    }
}

/// `u = c0 + g·x`; harmonic, so `f = 0`. Used for patch tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineSolution {
    pub constant: f64,
    pub slope: Point,
}

impl ExactSolution for AffineSolution {
    fn value(&self, x: &Point) -> f64 {
        self.constant + math::dot(&self.slope, x)
    }

    fn gradient(&self, _x: &Point) -> Point {
        self.slope
    }

    fn source(&self, _x: &Point) -> f64 {
        0.0
    }
}
