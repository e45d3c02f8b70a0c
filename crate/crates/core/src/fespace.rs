//! Conforming Lagrangian `Q_q` spaces on the active and interior meshes, the
//! outer-node constraints and the extension operator that defines the
//! aggregated space.
//!
//! Nodes live on the lattice of step `h / q` over the whole box. Active nodes
//! are numbered with all interior nodes first (in lattice order) followed by
//! the outer nodes, so the extension of an interior vector `u` is literally
//! `[u, C u]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::aggregation::AggregateMap;
use crate::error::{Error, Result};
use crate::math::{self, Point};
use crate::mesh::{BackgroundMesh, CellClass, Vef};

/// One-dimensional Lagrange basis on the equispaced nodes `j / q` of `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lagrange1d {
    pub q: usize,
}

impl Lagrange1d {
    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.q as f64
    }

    /// Values of all `q + 1` basis functions at `x` (any real `x`).
    pub fn values(&self, x: f64, out: &mut [f64]) {
        let q = self.q;
        for (j, o) in out.iter_mut().enumerate().take(q + 1) {
            let mut v = 1.0;
            for m in 0..=q {
                if m != j {
                    v *= (x - self.node(m)) / (self.node(j) - self.node(m));
                }
            }
            *o = v;
        }
    }

    /// Derivatives of all basis functions at `x`.
    pub fn derivatives(&self, x: f64, out: &mut [f64]) {
        let q = self.q;
        for (j, o) in out.iter_mut().enumerate().take(q + 1) {
            let mut sum = 0.0;
            for skip in 0..=q {
                if skip == j {
                    continue;
                }
                let mut v = 1.0 / (self.node(j) - self.node(skip));
                for m in 0..=q {
                    if m != j && m != skip {
                        v *= (x - self.node(m)) / (self.node(j) - self.node(m));
                    }
                }
                sum += v;
            }
            *o = sum;
        }
    }
}

/// Tensor-product `Q_q` element on the reference cell `[0, 1]^d`. Local node
/// `i` has per-axis indices `(i / (q+1)^k) % (q+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceElement {
    pub dim: usize,
    pub q: usize,
}

impl ReferenceElement {
    pub fn new(dim: usize, q: usize) -> Self {
        Self { dim, q }
    }

    pub fn num_nodes(&self) -> usize {
        (self.q + 1).pow(self.dim as u32)
    }

    pub fn node_index(&self, i: usize) -> [usize; 3] {
        let n = self.q + 1;
        let mut a = [0; 3];
        for (k, ak) in a.iter_mut().enumerate().take(self.dim) {
            *ak = (i / n.pow(k as u32)) % n;
        }
        a
    }

    /// Shape function values at reference point `xi`.
    pub fn values(&self, xi: &Point, out: &mut [f64]) {
        let basis = Lagrange1d { q: self.q };
        let mut v1 = [[0.0; 4]; 3];
        for k in 0..self.dim {
            basis.values(xi[k], &mut v1[k]);
        }
        for (i, o) in out.iter_mut().enumerate().take(self.num_nodes()) {
            let a = self.node_index(i);
            let mut v = 1.0;
            for k in 0..self.dim {
                v *= v1[k][a[k]];
            }
            *o = v;
        }
    }

    /// Reference gradients at `xi`.
    pub fn gradients(&self, xi: &Point, out: &mut [Point]) {
        let basis = Lagrange1d { q: self.q };
        let mut v1 = [[0.0; 4]; 3];
        let mut d1 = [[0.0; 4]; 3];
        for k in 0..self.dim {
            basis.values(xi[k], &mut v1[k]);
            basis.derivatives(xi[k], &mut d1[k]);
        }
        for (i, o) in out.iter_mut().enumerate().take(self.num_nodes()) {
            let a = self.node_index(i);
            let mut g = [0.0; 3];
            for (k, gk) in g.iter_mut().enumerate().take(self.dim) {
                let mut v = d1[k][a[k]];
                for m in 0..self.dim {
                    if m != k {
                        v *= v1[m][a[m]];
                    }
                }
                *gk = v;
            }
            *o = g;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// All nodes of interior and cut cells (the standard unfitted space).
    Active,
    /// Nodes of interior cells only.
    Interior,
    /// Interior nodes as unknowns, outer nodes constrained by extrapolation.
    Aggregated,
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct FESpace {
    pub q: usize,
    pub dim: usize,
    pub flavor: Flavor,
    element: ReferenceElement,
    cells: [usize; 3],
    lattice: [usize; 3],
    /// Active node id of each lattice point, `NONE` if not a node.
    node_of_lattice: Vec<u32>,
    /// Lattice coordinates of each active node.
    node_lattice: Vec<[usize; 3]>,
    node_points: Vec<Point>,
    num_interior: usize,
    /// Active cells (interior + cut) of the mesh the space was built on.
    cell_class: Vec<CellClass>,
}

/// Builds the `Q_q` space of the given flavor on a classified mesh.
pub fn build_space(mesh: &BackgroundMesh, q: usize, flavor: Flavor) -> Result<FESpace> {
    FESpace::new(mesh, q, flavor)
}

impl FESpace {
    pub fn new(mesh: &BackgroundMesh, q: usize, flavor: Flavor) -> Result<Self> {
        if !(1..=3).contains(&q) {
            return Err(Error::Unsupported(alloc::format!("order {q}")));
        }
        if !mesh.is_classified() {
            return Err(Error::InvalidMesh("mesh must be classified".into()));
        }
        let dim = mesh.dim();
        let cells = mesh.cells_per_axis();
        let mut lattice = [1usize; 3];
        for k in 0..dim {
            lattice[k] = q * cells[k] + 1;
        }
        let nlat: usize = lattice.iter().product();
        let element = ReferenceElement::new(dim, q);
        let lat_id = |l: [usize; 3]| l[0] + lattice[0] * (l[1] + lattice[1] * l[2]);

        // 1 = interior node, 2 = outer node
        let mut kind = vec![0u8; nlat];
        let nloc = element.num_nodes();
        for cell in 0..mesh.num_cells() {
            let class = mesh.cell_class(cell);
            if !class.is_active() {
                continue;
            }
            let cc = mesh.cell_coords(cell);
            for i in 0..nloc {
                let a = element.node_index(i);
                let mut l = [0; 3];
                for k in 0..dim {
                    l[k] = q * cc[k] + a[k];
                }
                let id = lat_id(l);
                if class == CellClass::Interior {
                    kind[id] = 1;
                } else if kind[id] == 0 {
                    kind[id] = 2;
                }
            }
        }
        let num_interior = kind.iter().filter(|&&k| k == 1).count();
        if num_interior == 0 && flavor != Flavor::Active {
            return Err(Error::NoInteriorCells);
        }
        let mut node_of_lattice = vec![NONE; nlat];
        let mut node_lattice = Vec::new();
        let lat_coords = |id: usize| {
            [
                id % lattice[0],
                (id / lattice[0]) % lattice[1],
                id / (lattice[0] * lattice[1]),
            ]
        };
        for pass in [1u8, 2u8] {
            if pass == 2 && flavor == Flavor::Interior {
                break;
            }
            for id in 0..nlat {
                if kind[id] == pass {
                    node_of_lattice[id] = node_lattice.len() as u32;
                    node_lattice.push(lat_coords(id));
                }
            }
        }
        let node_points = node_lattice
            .iter()
            .map(|&l| mesh.lattice_point(l, q))
            .collect();
        let cell_class = (0..mesh.num_cells())
            .map(|c| {
                let class = mesh.cell_class(c);
                if flavor == Flavor::Interior && class == CellClass::Cut {
                    CellClass::Exterior
                } else {
                    class
                }
            })
            .collect();
        Ok(Self {
            q,
            dim,
            flavor,
            element,
            cells,
            lattice,
            node_of_lattice,
            node_lattice,
            node_points,
            num_interior,
            cell_class,
        })
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    /// Number of nodes of the active space (interior + outer); for the
    /// interior flavor equals [`Self::num_interior`].
    pub fn num_nodes(&self) -> usize {
        self.node_lattice.len()
    }

    pub fn num_interior(&self) -> usize {
        self.num_interior
    }

    pub fn num_outer(&self) -> usize {
        self.num_nodes() - self.num_interior
    }

    /// Unknowns of the discrete problem.
    pub fn num_dofs(&self) -> usize {
        match self.flavor {
            Flavor::Active => self.num_nodes(),
            Flavor::Interior | Flavor::Aggregated => self.num_interior,
        }
    }

    pub fn is_outer(&self, node: usize) -> bool {
        node >= self.num_interior
    }

    pub fn node_point(&self, node: usize) -> Point {
        self.node_points[node]
    }

    pub fn node_points(&self) -> &[Point] {
        &self.node_points
    }

    pub fn node_lattice(&self, node: usize) -> [usize; 3] {
        self.node_lattice[node]
    }

    /// Cells the space is defined on.
    pub fn cells(&self) -> Vec<usize> {
        (0..self.cell_class.len())
            .filter(|&c| self.cell_class[c].is_active())
            .collect()
    }

    pub fn cell_class(&self, cell: usize) -> CellClass {
        self.cell_class[cell]
    }

    /// Active node ids of the local nodes of a cell, in reference order.
    pub fn cell_nodes(&self, cell: usize) -> Vec<usize> {
        let nx = self.cells[0];
        let ny = self.cells[1];
        let cc = [cell % nx, (cell / nx) % ny, cell / (nx * ny)];
        let lat = self.lattice;
        (0..self.element.num_nodes())
            .map(|i| {
                let a = self.element.node_index(i);
                let mut l = [0; 3];
                for k in 0..self.dim {
                    l[k] = self.q * cc[k] + a[k];
                }
                let id = l[0] + lat[0] * (l[1] + lat[1] * l[2]);
                let n = self.node_of_lattice[id];
                debug_assert!(n != NONE, "cell {cell} has a node outside the space");
                n as usize
            })
            .collect()
    }

    /// Lowest-dimensional VEF containing a node.
    pub fn owner_vef(&self, node: usize) -> Vef {
        let l = self.node_lattice[node];
        let mut anchor = [0; 3];
        let mut axes = 0u8;
        for k in 0..self.dim {
            anchor[k] = l[k] / self.q;
            if !l[k].is_multiple_of(self.q) {
                axes |= 1 << k;
            }
        }
        Vef { anchor, axes }
    }

    /// Reference coordinates of a physical point with respect to a cell.
    pub fn reference_coords(&self, mesh: &BackgroundMesh, cell: usize, x: &Point) -> Point {
        let x0 = mesh.cell_origin(cell);
        let h = mesh.spacing();
        let mut xi = [0.0; 3];
        for k in 0..self.dim {
            xi[k] = (x[k] - x0[k]) / h[k];
        }
        xi
    }
}

/// Maps each outer node `b` to the interior cell `K(b)` whose shape functions
/// extrapolate to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeRootMap {
    /// `root[b - num_interior]` for every outer node `b`.
    pub root: Vec<usize>,
    num_interior: usize,
}

impl NodeRootMap {
    pub fn get(&self, node: usize) -> Option<usize> {
        node.checked_sub(self.num_interior)
            .and_then(|i| self.root.get(i).copied())
    }

    pub fn len(&self) -> usize {
        self.root.len()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_empty()
    }
}

/// Outer node → root cell: the owner VEF of the node picks, among its active
/// incident cells, the one in the smallest aggregate (ties: smaller root id,
/// then smaller cell id); `K(b)` is that aggregate's root.
pub fn node_to_root(map: &AggregateMap, mesh: &BackgroundMesh, space: &FESpace) -> NodeRootMap {
    let ni = space.num_interior();
    let root = (ni..space.num_nodes())
        .map(|b| {
            let vef = space.owner_vef(b);
            let owner = mesh
                .vef_cells(&vef)
                .into_iter()
                .filter(|&c| mesh.cell_class(c).is_active())
                .map(|c| {
                    let r = map.root_of[c];
                    (map.aggregate_size(r), r, c)
                })
                .min();
            let (_, r, _) = owner.expect("outer node without an active incident cell");
            debug_assert_eq!(mesh.cell_class(r), CellClass::Interior);
            r
        })
        .collect();
    NodeRootMap {
        root,
        num_interior: ni,
    }
}

/// Sparse rows `u_b = Σ_a C_ba u_a` for the outer nodes, plus the per-aggregate
/// grouping used by the extension bound.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    /// `rows[b - num_interior]`: `(interior node a, C_ba)`.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Root cell of each row.
    pub row_root: Vec<usize>,
    pub num_interior: usize,
}

/// Builds `C_ba = φ^a_{K(b)}(x_b)`, the interior-cell shape functions
/// evaluated (extrapolated) at the outer node.
pub fn build_constraints(
    mesh: &BackgroundMesh,
    space: &FESpace,
    roots: &NodeRootMap,
) -> ConstraintSet {
    assert_eq!(
        roots.len(),
        space.num_outer(),
        "node map must cover the outer nodes"
    );
    let element = *space.element();
    let mut vals = vec![0.0; element.num_nodes()];
    let ni = space.num_interior();
    let mut rows = Vec::with_capacity(roots.len());
    for (i, &k) in roots.root.iter().enumerate() {
        assert_eq!(
            mesh.cell_class(k),
            CellClass::Interior,
            "K(b) must be interior"
        );
        let b = ni + i;
        let xi = space.reference_coords(mesh, k, &space.node_point(b));
        element.values(&xi, &mut vals);
        let nodes = space.cell_nodes(k);
        let row: Vec<(usize, f64)> = nodes
            .iter()
            .zip(&vals)
            .filter(|(_, &v)| v != 0.0)
            .map(|(&a, &v)| {
                debug_assert!(a < ni);
                (a, v)
            })
            .collect();
        rows.push(row);
    }
    ConstraintSet {
        rows,
        row_root: roots.root.clone(),
        num_interior: ni,
    }
}

/// Dense local extension of one cell: local node values = `matrix · u[dofs]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellExtension {
    pub dofs: Vec<usize>,
    /// Row-major `num_local × dofs.len()`.
    pub matrix: Vec<f64>,
}

impl ConstraintSet {
    pub fn num_outer(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, node: usize) -> &[(usize, f64)] {
        &self.rows[node - self.num_interior]
    }

    /// Extension block of a cell with the given active node ids.
    pub fn cell_extension(&self, nodes: &[usize]) -> CellExtension {
        let mut dofs: Vec<usize> = Vec::new();
        for &n in nodes {
            if n < self.num_interior {
                dofs.push(n);
            } else {
                dofs.extend(self.row(n).iter().map(|&(a, _)| a));
            }
        }
        dofs.sort_unstable();
        dofs.dedup();
        let m = dofs.len();
        let mut matrix = vec![0.0; nodes.len() * m];
        let col = |a: usize| dofs.binary_search(&a).unwrap();
        for (i, &n) in nodes.iter().enumerate() {
            if n < self.num_interior {
                matrix[i * m + col(n)] = 1.0;
            } else {
                for &(a, c) in self.row(n) {
                    matrix[i * m + col(a)] += c;
                }
            }
        }
        CellExtension { dofs, matrix }
    }

    /// Squared 2-norms of the aggregate-wise constraint blocks, keyed by root.
    pub fn aggregate_norms_sq(&self) -> Vec<(usize, f64)> {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&i| (self.row_root[i], i));
        let mut out = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let root = self.row_root[order[start]];
            let mut end = start;
            while end < order.len() && self.row_root[order[end]] == root {
                end += 1;
            }
            let rows: Vec<&[(usize, f64)]> = order[start..end]
                .iter()
                .map(|&i| self.rows[i].as_slice())
                .collect();
            out.push((root, block_norm_sq(&rows)));
            start = end;
        }
        out
    }
}

/// `‖B‖₂²` of a sparse row block by power iteration on `BᵀB`.
fn block_norm_sq(rows: &[&[(usize, f64)]]) -> f64 {
    let mut cols: Vec<usize> = rows.iter().flat_map(|r| r.iter().map(|e| e.0)).collect();
    cols.sort_unstable();
    cols.dedup();
    let n = cols.len();
    if n == 0 {
        return 0.0;
    }
    let dense: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut d = vec![0.0; n];
            for &(a, c) in r.iter() {
                d[cols.binary_search(&a).unwrap()] += c;
            }
            d
        })
        .collect();
    // x ← BᵀB x
    let apply = |x: &[f64]| {
        let mut y = vec![0.0; n];
        for r in &dense {
            let s = math::vec_dot(r, x);
            for j in 0..n {
                y[j] += s * r[j];
            }
        }
        y
    };
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let nx = math::vec_norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let y = apply(&x);
        let next = math::vec_dot(&x, &y);
        x = y;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

/// `E u = [u, C u]` in the active numbering.
pub fn extend(constraints: &ConstraintSet, u_in: &[f64]) -> Result<Vec<f64>> {
    if u_in.len() != constraints.num_interior {
        return Err(Error::SizeMismatch {
            expected: constraints.num_interior,
            found: u_in.len(),
        });
    }
    let mut out = Vec::with_capacity(u_in.len() + constraints.rows.len());
    out.extend_from_slice(u_in);
    for row in &constraints.rows {
        out.push(row.iter().map(|&(a, c)| c * u_in[a]).sum());
    }
    Ok(out)
}

/// Computable bound `1 + n_cell · max_A ‖C_A‖₂²` on `‖E‖₂²`, with
/// `n_cell = 2^d` on a Cartesian grid.
pub fn extension_norm_bound(constraints: &ConstraintSet, dim: usize) -> f64 {
    let max = constraints
        .aggregate_norms_sq()
        .iter()
        .map(|x| x.1)
        .fold(0.0, f64::max);
    1.0 + (1usize << dim) as f64 * max
}

/// Nodal interpolation of a field as active-numbered coefficients.
///
/// For the aggregated flavor only interior nodes are sampled and then
/// extended; for the active flavor every node is sampled; for the interior
/// flavor the result has one entry per interior node.
pub fn interpolate(
    space: &FESpace,
    constraints: Option<&ConstraintSet>,
    field: impl Fn(&Point) -> f64,
) -> Result<Vec<f64>> {
    match space.flavor {
        Flavor::Active | Flavor::Interior => Ok(space.node_points().iter().map(field).collect()),
        Flavor::Aggregated => {
            let c = constraints.ok_or(Error::MissingConstraints)?;
            let u_in: Vec<f64> = space.node_points()[..space.num_interior()]
                .iter()
                .map(field)
                .collect();
            extend(c, &u_in)
        }
    }
}

/// Active-numbered coefficients of a solution vector in the space's unknowns.
pub fn dofs_to_active(
    space: &FESpace,
    constraints: Option<&ConstraintSet>,
    u: &[f64],
) -> Result<Vec<f64>> {
    if u.len() != space.num_dofs() {
        return Err(Error::SizeMismatch {
            expected: space.num_dofs(),
            found: u.len(),
        });
    }
    match space.flavor {
        Flavor::Active | Flavor::Interior => Ok(u.to_vec()),
        Flavor::Aggregated => extend(constraints.ok_or(Error::MissingConstraints)?, u),
    }
}

/// Aggregated space with its constraints, built in one go.
#[derive(Clone, Debug)]
pub struct AggregatedSpace {
    pub space: FESpace,
    pub roots: NodeRootMap,
    pub constraints: ConstraintSet,
}

impl AggregatedSpace {
    pub fn new(mesh: &BackgroundMesh, map: &AggregateMap, q: usize) -> Result<Self> {
        let space = FESpace::new(mesh, q, Flavor::Aggregated)?;
        let roots = node_to_root(map, mesh, &space);
        let constraints = build_constraints(mesh, &space, &roots);
        Ok(Self {
            space,
            roots,
            constraints,
        })
    }
}
