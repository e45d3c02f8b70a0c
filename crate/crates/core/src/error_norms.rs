//! Energy and L² errors of a discrete solution against an exact one.

use crate::assembly::CellBasis;
use crate::error::Result;
use crate::fespace::{dofs_to_active, ConstraintSet, FESpace};
use crate::geometry::ExactSolution;
use crate::math;
use crate::mesh::BackgroundMesh;
use crate::quadrature::MeshQuadrature;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    /// `‖∇(u − u_h)‖_{L²(Ω)}`.
    pub energy_error: f64,
    /// `‖u − u_h‖_{L²(Ω)}`.
    pub l2_error: f64,
    pub h: f64,
    pub q: usize,
    pub dofs: usize,
}

/// Integrates the errors with the bulk rules of `quad` over every cell of the
/// space. `u_h` is in the space's unknowns; aggregated vectors are extended
/// first.
pub fn compute_errors(
    mesh: &BackgroundMesh,
    space: &FESpace,
    constraints: Option<&ConstraintSet>,
    quad: &MeshQuadrature,
    u_h: &[f64],
    exact: &dyn ExactSolution,
) -> Result<ErrorReport> {
    let coeffs = dofs_to_active(space, constraints, u_h)?;
    let dim = mesh.dim();
    let mut e2 = 0.0;
    let mut l2 = 0.0;
    for cell in space.cells() {
        let nodes = space.cell_nodes(cell);
        let mut basis = CellBasis::new(mesh, space, cell);
        for (x, w) in &quad.rule(cell).bulk {
            basis.eval(x);
            let mut uh = 0.0;
            let mut guh = [0.0; 3];
            for (i, &n) in nodes.iter().enumerate() {
                let c = coeffs[n];
                uh += c * basis.values[i];
                for k in 0..dim {
                    guh[k] += c * basis.grads[i][k];
                }
            }
            let du = exact.value(x) - uh;
            let g = exact.gradient(x);
            let mut dg = 0.0;
            for k in 0..dim {
                dg += (g[k] - guh[k]) * (g[k] - guh[k]);
            }
            l2 += w * du * du;
            e2 += w * dg;
        }
    }
    Ok(ErrorReport {
        energy_error: math::sqrt(e2),
        l2_error: math::sqrt(l2),
        h: mesh.h_max(),
        q: space.q,
        dofs: space.num_dofs(),
    })
}
