//! Nitsche-stabilised Poisson system, mass matrix and the local coercivity
//! constant.
//!
//! Element integrals are computed on the active-space cell basis. For the
//! aggregated flavor each element block is transformed `E_Kᵀ A_K E_K` in the
//! cell loop before it is scattered, so the global extension matrix is never
//! formed.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::fespace::{ConstraintSet, FESpace, Flavor, ReferenceElement};
use crate::math::{self, Point};
use crate::mesh::{BackgroundMesh, CellClass};
use crate::quadrature::{gauss_legendre, MeshQuadrature};
use crate::sparse::{CsrMatrix, Triplets};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyRule {
    /// `τ_K = β / h_K`.
    FixedBetaOverH,
    /// `τ_K = β · C_K` with `C_K` from the local eigenproblem.
    LocalEigenvalue,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NitscheParams {
    pub beta: f64,
    pub rule: PenaltyRule,
    /// Also impose the Dirichlet datum weakly on box faces that lie inside the
    /// domain.
    pub box_faces: bool,
}

impl Default for NitscheParams {
    fn default() -> Self {
        Self {
            beta: 100.0,
            rule: PenaltyRule::FixedBetaOverH,
            box_faces: false,
        }
    }
}

pub type ScalarField<'a> = &'a (dyn Fn(&Point) -> f64 + Sync);

/// Flux datum on the cells whose boundary part is `Γ_N`.
#[derive(Clone, Copy)]
pub struct NeumannData<'a> {
    pub cells: &'a (dyn Fn(usize) -> bool + Sync),
    pub flux: ScalarField<'a>,
}

/// Right-hand side data: `−Δu = f` in Ω, `u = g_D` on `Γ_D`, `n·∇u = g_N` on `Γ_N`.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub source: ScalarField<'a>,
    pub dirichlet: ScalarField<'a>,
    pub neumann: Option<NeumannData<'a>>,
}

#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub flavor: Flavor,
    pub params: NitscheParams,
}

/// Element contribution in global unknown numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementSystem {
    pub cell: usize,
    pub dofs: Vec<usize>,
    /// Row-major `dofs.len()²`.
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// Shape functions of one cell evaluated at physical points.
pub struct CellBasis {
    element: ReferenceElement,
    origin: Point,
    h: [f64; 3],
    pub values: Vec<f64>,
    pub grads: Vec<Point>,
}

impl CellBasis {
    pub fn new(mesh: &BackgroundMesh, space: &FESpace, cell: usize) -> Self {
        let element = *space.element();
        let n = element.num_nodes();
        Self {
            element,
            origin: mesh.cell_origin(cell),
            h: mesh.spacing(),
            values: vec![0.0; n],
            grads: vec![[0.0; 3]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&mut self, x: &Point) {
        let dim = self.element.dim;
        let mut xi = [0.0; 3];
        for k in 0..dim {
            xi[k] = (x[k] - self.origin[k]) / self.h[k];
        }
        self.element.values(&xi, &mut self.values);
        self.element.gradients(&xi, &mut self.grads);
        for g in self.grads.iter_mut() {
            for k in 0..dim {
                g[k] /= self.h[k];
            }
        }
    }
}

/// Outward-normal surface rule on the box faces of a cell that lie entirely
/// inside the domain.
pub fn box_face_rule(
    mesh: &BackgroundMesh,
    cell: usize,
    degree: usize,
) -> Vec<(Point, f64, Point)> {
    let dim = mesh.dim();
    let cc = mesh.cell_coords(cell);
    let counts = mesh.cells_per_axis();
    let h = mesh.spacing();
    let n = degree / 2 + 1;
    let (g, gw) = gauss_legendre(n);
    let mut out = Vec::new();
    for axis in 0..dim {
        for side in 0..2 {
            let on_box = if side == 0 {
                cc[axis] == 0
            } else {
                cc[axis] + 1 == counts[axis]
            };
            if !on_box {
                continue;
            }
            let facet = mesh.cell_facet(cell, axis, side);
            if mesh
                .facet_vertices(&facet)
                .iter()
                .any(|&v| mesh.vertex_value(v) > 0.0)
            {
                continue;
            }
            let mut normal = [0.0; 3];
            normal[axis] = if side == 0 { -1.0 } else { 1.0 };
            let tang: Vec<usize> = (0..dim).filter(|&k| k != axis).collect();
            let x0 = mesh.cell_origin(cell);
            let npts = n.pow(tang.len() as u32);
            for idx in 0..npts {
                let mut p = x0;
                p[axis] += side as f64 * h[axis];
                let mut w = 1.0;
                let mut r = idx;
                for &k in &tang {
                    let i = r % n;
                    r /= n;
                    p[k] += g[i] * h[k];
                    w *= gw[i] * h[k];
                }
                out.push((p, w, normal));
            }
        }
    }
    out
}

/// Local element matrices on the active cell basis.
struct LocalBlocks {
    a: Vec<f64>,
    b: Vec<f64>,
}

fn penalty(
    mesh: &BackgroundMesh,
    space: &FESpace,
    quad: &MeshQuadrature,
    params: &NitscheParams,
    cell: usize,
) -> Result<f64> {
    let h = mesh.cell_size(cell);
    match params.rule {
        PenaltyRule::FixedBetaOverH => Ok(params.beta / h),
        PenaltyRule::LocalEigenvalue => {
            let c = local_nitsche_constant(mesh, space, quad, cell);
            if c.is_finite() {
                Ok(params.beta * c)
            } else {
                Err(Error::NonFinite { cell })
            }
        }
    }
}

fn local_blocks(
    mesh: &BackgroundMesh,
    space: &FESpace,
    quad: &MeshQuadrature,
    params: &NitscheParams,
    problem: &Problem<'_>,
    cell: usize,
) -> Result<LocalBlocks> {
    let mut basis = CellBasis::new(mesh, space, cell);
    let n = basis.len();
    let dim = mesh.dim();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    let rule = quad.rule(cell);
    for (x, w) in &rule.bulk {
        basis.eval(x);
        let f = (problem.source)(x);
        for i in 0..n {
            let gi = &basis.grads[i];
            b[i] += w * f * basis.values[i];
            for j in i..n {
                let gj = &basis.grads[j];
                let mut s = 0.0;
                for k in 0..dim {
                    s += gi[k] * gj[k];
                }
                a[i * n + j] += w * s;
            }
        }
    }
    let neumann = problem.neumann.filter(|nd| (nd.cells)(cell));
    let mut surface: Vec<(Point, f64, Point)> = rule.surface.clone();
    if params.box_faces {
        surface.extend(box_face_rule(mesh, cell, 2 * space.q));
    }
    if !surface.is_empty() {
        if let Some(nd) = neumann {
            for (x, w, _) in &surface {
                basis.eval(x);
                let g = (nd.flux)(x);
                for i in 0..n {
                    b[i] += w * g * basis.values[i];
                }
            }
        } else {
            let tau = penalty(mesh, space, quad, params, cell)?;
            let mut dn = vec![0.0; n];
            for (x, w, nrm) in &surface {
                basis.eval(x);
                let g = (problem.dirichlet)(x);
                for i in 0..n {
                    dn[i] = math::dot(nrm, &basis.grads[i]);
                }
                for i in 0..n {
                    let vi = basis.values[i];
                    b[i] += w * (tau * vi * g - dn[i] * g);
                    for j in i..n {
                        let vj = basis.values[j];
                        a[i * n + j] += w * (tau * vi * vj - vi * dn[j] - vj * dn[i]);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            a[i * n + j] = a[j * n + i];
        }
    }
    if a.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { cell });
    }
    Ok(LocalBlocks { a, b })
}

/// Maps a local block onto the unknowns of the space (transforming with the
/// cell extension for the aggregated flavor).
fn to_unknowns(
    space: &FESpace,
    constraints: Option<&ConstraintSet>,
    cell: usize,
    a: Vec<f64>,
    b: Vec<f64>,
) -> Result<ElementSystem> {
    let nodes = space.cell_nodes(cell);
    let n = nodes.len();
    let plain = match space.flavor {
        Flavor::Active | Flavor::Interior => true,
        Flavor::Aggregated => nodes.iter().all(|&v| v < space.num_interior()),
    };
    if plain {
        return Ok(ElementSystem {
            cell,
            dofs: nodes,
            matrix: a,
            rhs: b,
        });
    }
    let c = constraints.ok_or(Error::MissingConstraints)?;
    let ext = c.cell_extension(&nodes);
    let m = ext.dofs.len();
    let e = &ext.matrix;
    // AE (n × m), then Eᵀ(AE) and Eᵀb.
    let mut ae = vec![0.0; n * m];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                ae[i * m + j] += aik * e[k * m + j];
            }
        }
    }
    let mut matrix = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for k in 0..n {
        for i in 0..m {
            let eki = e[k * m + i];
            if eki == 0.0 {
                continue;
            }
            rhs[i] += eki * b[k];
            for j in 0..m {
                matrix[i * m + j] += eki * ae[k * m + j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (matrix[i * m + j] + matrix[j * m + i]);
            matrix[i * m + j] = v;
            matrix[j * m + i] = v;
        }
    }
    Ok(ElementSystem {
        cell,
        dofs: ext.dofs,
        matrix,
        rhs,
    })
}

/// Stiffness element system of one cell in the unknowns of the space.
pub fn stiffness_element(
    mesh: &BackgroundMesh,
    space: &FESpace,
    constraints: Option<&ConstraintSet>,
    quad: &MeshQuadrature,
    params: &NitscheParams,
    problem: &Problem<'_>,
    cell: usize,
) -> Result<ElementSystem> {
    let LocalBlocks { a, b } = local_blocks(mesh, space, quad, params, problem, cell)?;
    to_unknowns(space, constraints, cell, a, b)
}

/// Mass element system of one cell in the unknowns of the space.
pub fn mass_element(
    mesh: &BackgroundMesh,
    space: &FESpace,
    constraints: Option<&ConstraintSet>,
    quad: &MeshQuadrature,
    cell: usize,
) -> Result<ElementSystem> {
    let mut basis = CellBasis::new(mesh, space, cell);
    let n = basis.len();
    let mut a = vec![0.0; n * n];
    for (x, w) in &quad.rule(cell).bulk {
        basis.eval(x);
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] += w * basis.values[i] * basis.values[j];
            }
        }
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { cell });
    }
    to_unknowns(space, constraints, cell, a, vec![0.0; n])
}

/// Scatters element systems (in the given order) into a CSR matrix and vector.
pub fn scatter(
    n: usize,
    elements: impl IntoIterator<Item = ElementSystem>,
) -> (CsrMatrix, Vec<f64>) {
    let mut t = Triplets::new(n, n);
    let mut rhs = vec![0.0; n];
    for el in elements {
        t.add_block(&el.dofs, &el.dofs, &el.matrix);
        for (i, &d) in el.dofs.iter().enumerate() {
            rhs[d] += el.rhs[i];
        }
    }
    (t.to_csr(), rhs)
}

fn check_inputs(space: &FESpace, constraints: Option<&ConstraintSet>) -> Result<()> {
    if space.flavor == Flavor::Aggregated {
        let c = constraints.ok_or(Error::MissingConstraints)?;
        if c.num_interior != space.num_interior() || c.num_outer() != space.num_outer() {
            return Err(Error::SizeMismatch {
                expected: space.num_nodes(),
                found: c.num_interior + c.num_outer(),
            });
        }
    }
    Ok(())
}

/// Assembles `A u = b` serially in cell order.
pub fn assemble_stiffness(
    mesh: &BackgroundMesh,
    space: &FESpace,
    constraints: Option<&ConstraintSet>,
    quad: &MeshQuadrature,
    params: &NitscheParams,
    problem: &Problem<'_>,
) -> Result<SparseSystem> {
    check_inputs(space, constraints)?;
    let elements = space
        .cells()
        .into_iter()
        .map(|c| stiffness_element(mesh, space, constraints, quad, params, problem, c))
        .collect::<Result<Vec<_>>>()?;
    let (matrix, rhs) = scatter(space.num_dofs(), elements);
    Ok(SparseSystem {
        matrix,
        rhs,
        flavor: space.flavor,
        params: *params,
    })
}

/// `M_ab = ∫_Ω Eφ^a Eφ^b` on the unknowns of the space.
pub fn assemble_mass(
    mesh: &BackgroundMesh,
    space: &FESpace,
    constraints: Option<&ConstraintSet>,
    quad: &MeshQuadrature,
) -> Result<CsrMatrix> {
    check_inputs(space, constraints)?;
    let elements = space
        .cells()
        .into_iter()
        .map(|c| mass_element(mesh, space, constraints, quad, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(scatter(space.num_dofs(), elements).0)
}

/// Global extension matrix `E = [I; C]` (active nodes × interior nodes).
pub fn extension_matrix(constraints: &ConstraintSet) -> CsrMatrix {
    let ni = constraints.num_interior;
    let mut t = Triplets::new(ni + constraints.num_outer(), ni);
    for i in 0..ni {
        t.push(i, i, 1.0);
    }
    for (r, row) in constraints.rows.iter().enumerate() {
        for &(a, c) in row {
            t.push(ni + r, a, c);
        }
    }
    t.to_csr()
}

/// Largest eigenvalue `C_K` of `B_K u = λ D_K u` on the active cell basis,
/// with `B_K = ∫_{Γ∩K} (n·∇u)(n·∇v)` and `D_K = ∫_{K∩Ω} ∇u·∇v`.
///
/// `D_K` gets a ridge of `1e-12 · tr(D_K) / n` for the constant kernel.
/// Returns `0` for cells without boundary and `+∞` when `D_K` vanishes.
pub fn local_nitsche_constant(
    mesh: &BackgroundMesh,
    space: &FESpace,
    quad: &MeshQuadrature,
    cell: usize,
) -> f64 {
    let rule = quad.rule(cell);
    if rule.surface.is_empty() {
        return 0.0;
    }
    let mut basis = CellBasis::new(mesh, space, cell);
    let n = basis.len();
    let mut b = DenseMatrix::zeros(n);
    let mut d = DenseMatrix::zeros(n);
    for (x, w) in &rule.bulk {
        basis.eval(x);
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] += w * math::dot(&basis.grads[i], &basis.grads[j]);
            }
        }
    }
    for (x, w, nrm) in &rule.surface {
        basis.eval(x);
        let dn: Vec<f64> = basis.grads.iter().map(|g| math::dot(nrm, g)).collect();
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] += w * dn[i] * dn[j];
            }
        }
    }
    let tr = d.trace();
    let scale = b.max_abs().max(1.0 / mesh.cell_size(cell)) * mesh.cell_measure();
    if !(tr > 1e-300 && tr > 1e-14 * scale) {
        log::warn!("cell {cell}: vanishing gradient matrix, C_K = inf");
        return f64::INFINITY;
    }
    let ridge = 1e-12 * tr / n as f64;
    for i in 0..n {
        d[(i, i)] += ridge;
    }
    match DenseMatrix::generalized_max_eigenvalue(&b, &d) {
        Some(v) => v,
        None => {
            log::warn!("cell {cell}: gradient matrix not positive definite, C_K = inf");
            f64::INFINITY
        }
    }
}

/// Penalty `τ_K` applied on a cell; zero outside the space.
pub fn penalty_for_cell(
    mesh: &BackgroundMesh,
    space: &FESpace,
    quad: &MeshQuadrature,
    params: &NitscheParams,
    cell: usize,
) -> Result<f64> {
    if space.cell_class(cell) == CellClass::Exterior {
        return Ok(0.0);
    }
    penalty(mesh, space, quad, params, cell)
}
