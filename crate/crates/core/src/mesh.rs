//! Cartesian background grid of the bounding box, cell classification against
//! a level set, facet adjacency and vertex/edge/face (VEF) incidence.
//!
//! Cells and vertices are numbered lexicographically with the x index running
//! fastest. In 2D the third axis has a single layer of cells of zero extent and
//! is ignored everywhere.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::LevelSetGeometry;
use crate::math::{self, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellClass {
    Interior,
    Cut,
    Exterior,
}

impl CellClass {
    pub fn is_active(self) -> bool {
        self != CellClass::Exterior
    }

    /// Small integer code used in exported files.
    pub fn code(self) -> u8 {
        match self {
            CellClass::Interior => 0,
            CellClass::Cut => 1,
            CellClass::Exterior => 2,
        }
    }
}

/// Facet of the grid, normal to `axis`, whose lowest corner is the vertex with
/// lattice coordinates `lower`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Facet {
    pub axis: usize,
    pub lower: [usize; 3],
}

/// A vertex, edge, face or cell of the grid: the box spanned from the vertex
/// `anchor` along the axes set in `axes` (one grid step each).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vef {
    pub anchor: [usize; 3],
    pub axes: u8,
}

impl Vef {
    /// 0 for a vertex, 1 for an edge, `d - 1` for a facet.
    pub fn dim(&self) -> usize {
        self.axes.count_ones() as usize
    }
}

#[derive(Clone, Debug)]
pub struct BackgroundMesh {
    dim: usize,
    cells: [usize; 3],
    origin: Point,
    spacing: [f64; 3],
    cell_class: Vec<CellClass>,
    /// ψ at vertices, as evaluated.
    vertex_psi: Vec<f64>,
    /// ψ at vertices after snapping (snapped vertices hold exactly 0).
    vertex_value: Vec<f64>,
    classified: bool,
}

/// Builds an unclassified grid of `box_lo..box_hi` with the given cell counts.
pub fn build_mesh(
    box_lo: &[f64],
    box_hi: &[f64],
    cells_per_axis: &[usize],
) -> Result<BackgroundMesh> {
    BackgroundMesh::new(box_lo, box_hi, cells_per_axis)
}

impl BackgroundMesh {
    pub fn new(box_lo: &[f64], box_hi: &[f64], cells_per_axis: &[usize]) -> Result<Self> {
        let dim = cells_per_axis.len();
        if !(dim == 2 || dim == 3) || box_lo.len() != dim || box_hi.len() != dim {
            return Err(Error::InvalidMesh(format!(
                "dimension must be 2 or 3 with matching box corners, got {dim}"
            )));
        }
        if cells_per_axis.contains(&0) {
            return Err(Error::InvalidMesh("cell counts must be positive".into()));
        }
        let mut cells = [1usize; 3];
        let mut origin = [0.0; 3];
        let mut spacing = [0.0; 3];
        for k in 0..dim {
            if !(box_hi[k] > box_lo[k]) {
                return Err(Error::InvalidMesh(format!("empty extent along axis {k}")));
            }
            cells[k] = cells_per_axis[k];
            origin[k] = box_lo[k];
            spacing[k] = (box_hi[k] - box_lo[k]) / cells[k] as f64;
        }
        let ncells = cells.iter().product();
        let nverts = (0..dim).map(|k| cells[k] + 1).product();
        Ok(Self {
            dim,
            cells,
            origin,
            spacing,
            cell_class: vec![CellClass::Interior; ncells],
            vertex_psi: vec![f64::NAN; nverts],
            vertex_value: vec![f64::NAN; nverts],
            classified: false,
        })
    }

    /// Unit box `[0,1]^dim` with `n` cells per axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        let lo = [0.0; 3];
        let hi = [1.0; 3];
        let counts = [n; 3];
        Self::new(&lo[..dim], &hi[..dim], &counts[..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> [usize; 3] {
        self.cells
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    /// Largest cell side.
    pub fn h_max(&self) -> f64 {
        self.spacing[..self.dim].iter().cloned().fold(0.0, f64::max)
    }

    /// Cell size used in the Nitsche penalty.
    pub fn cell_size(&self, _cell: usize) -> f64 {
        self.h_max()
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_class.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_psi.len()
    }

    pub fn is_classified(&self) -> bool {
        self.classified
    }

    pub fn cell_coords(&self, cell: usize) -> [usize; 3] {
        let [nx, ny, _] = self.cells;
        [cell % nx, (cell / nx) % ny, cell / (nx * ny)]
    }

    pub fn cell_id(&self, c: [usize; 3]) -> usize {
        c[0] + self.cells[0] * (c[1] + self.cells[1] * c[2])
    }

    fn vertex_counts(&self) -> [usize; 3] {
        let mut n = [1; 3];
        for (k, nk) in n.iter_mut().enumerate().take(self.dim) {
            *nk = self.cells[k] + 1;
        }
        n
    }

    pub fn vertex_id(&self, v: [usize; 3]) -> usize {
        let n = self.vertex_counts();
        v[0] + n[0] * (v[1] + n[1] * v[2])
    }

    pub fn vertex_coords(&self, v: usize) -> [usize; 3] {
        let n = self.vertex_counts();
        [v % n[0], (v / n[0]) % n[1], v / (n[0] * n[1])]
    }

    /// Physical position of a lattice point given in units of `h / q`.
    pub fn lattice_point(&self, l: [usize; 3], q: usize) -> Point {
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            x[k] = self.origin[k] + self.spacing[k] * l[k] as f64 / q as f64;
        }
        x
    }

    pub fn vertex_point(&self, v: usize) -> Point {
        self.lattice_point(self.vertex_coords(v), 1)
    }

    /// Lowest corner of a cell.
    pub fn cell_origin(&self, cell: usize) -> Point {
        self.lattice_point(self.cell_coords(cell), 1)
    }

    pub fn cell_center(&self, cell: usize) -> Point {
        let mut x = self.cell_origin(cell);
        for k in 0..self.dim {
            x[k] += 0.5 * self.spacing[k];
        }
        x
    }

    /// Number of cell corners, `2^dim`.
    pub fn corners_per_cell(&self) -> usize {
        1 << self.dim
    }

    /// Corner vertex ids; corner `i` is offset by bit `k` of `i` along axis `k`.
    pub fn cell_vertices(&self, cell: usize) -> Vec<usize> {
        let c = self.cell_coords(cell);
        (0..self.corners_per_cell())
            .map(|i| {
                let mut v = c;
                for (k, vk) in v.iter_mut().enumerate().take(self.dim) {
                    *vk += (i >> k) & 1;
                }
                self.vertex_id(v)
            })
            .collect()
    }

    pub fn cell_class(&self, cell: usize) -> CellClass {
        self.cell_class[cell]
    }

    pub fn classes(&self) -> &[CellClass] {
        &self.cell_class
    }

    /// ψ at a vertex after snapping; `NaN` before classification.
    pub fn vertex_value(&self, v: usize) -> f64 {
        self.vertex_value[v]
    }

    pub fn vertex_psi(&self, v: usize) -> f64 {
        self.vertex_psi[v]
    }

    pub fn vertex_is_snapped(&self, v: usize) -> bool {
        self.vertex_value[v] == 0.0 && self.vertex_psi[v] != 0.0
    }

    pub fn cells_of_class(&self, class: CellClass) -> Vec<usize> {
        (0..self.num_cells())
            .filter(|&c| self.cell_class[c] == class)
            .collect()
    }

    pub fn active_cells(&self) -> Vec<usize> {
        (0..self.num_cells())
            .filter(|&c| self.cell_class[c].is_active())
            .collect()
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.cell_class.iter().filter(|&&c| c == class).count()
    }

    /// Evaluates ψ at all vertices, snaps near-node edge cuts and labels each
    /// cell. Vertices with (snapped) value `≤ 0` are inside.
    ///
    /// A cell is interior when every corner is inside, exterior when no corner
    /// is strictly inside, and cut otherwise. An interior cell that has a facet
    /// lying on the boundary (all facet corners exactly on `ψ = 0`) next to an
    /// exterior cell is also cut, since it carries part of the boundary.
    pub fn classify(&mut self, geom: &LevelSetGeometry) {
        assert_eq!(geom.dim(), self.dim, "geometry and mesh dimensions differ");
        for v in 0..self.num_vertices() {
            self.vertex_psi[v] = geom.eval(&self.vertex_point(v));
        }
        self.vertex_value.clone_from(&self.vertex_psi);
        let eps = geom.snap_tolerance();
        if eps > 0.0 {
            for v in 0..self.num_vertices() {
                let vc = self.vertex_coords(v);
                for k in 0..self.dim {
                    if vc[k] >= self.cells[k] {
                        continue;
                    }
                    let mut wc = vc;
                    wc[k] += 1;
                    let w = self.vertex_id(wc);
                    let (fa, fb) = (self.vertex_psi[v], self.vertex_psi[w]);
                    if fa == 0.0 || fb == 0.0 || (fa < 0.0) == (fb < 0.0) {
                        continue;
                    }
                    let pa = self.vertex_point(v);
                    let pb = self.vertex_point(w);
                    if let Some(t) = geom.edge_root(&pa, &pb) {
                        if t < eps {
                            self.vertex_value[v] = 0.0;
                        } else if t > 1.0 - eps {
                            self.vertex_value[w] = 0.0;
                        }
                    }
                }
            }
        }
        for cell in 0..self.num_cells() {
            let verts = self.cell_vertices(cell);
            let any_in = verts.iter().any(|&v| self.vertex_value[v] < 0.0);
            let all_in = verts.iter().all(|&v| self.vertex_value[v] <= 0.0);
            self.cell_class[cell] = if all_in {
                CellClass::Interior
            } else if any_in {
                CellClass::Cut
            } else {
                CellClass::Exterior
            };
        }
        let promote: Vec<usize> = (0..self.num_cells())
            .filter(|&c| {
                self.cell_class[c] == CellClass::Interior && !self.boundary_facets(c).is_empty()
            })
            .collect();
        for c in promote {
            self.cell_class[c] = CellClass::Cut;
        }
        self.classified = true;
    }

    /// Reclassifies the given cells as exterior (used for discarded cut cells).
    pub fn mark_exterior(&mut self, cells: &[usize]) {
        for &c in cells {
            self.cell_class[c] = CellClass::Exterior;
        }
    }

    /// Facet on side `side` (0 = lower, 1 = upper) of `cell` normal to `axis`.
    pub fn cell_facet(&self, cell: usize, axis: usize, side: usize) -> Facet {
        let mut lower = self.cell_coords(cell);
        lower[axis] += side;
        Facet { axis, lower }
    }

    /// The 1 or 2 cells sharing a facet.
    pub fn facet_cells(&self, facet: &Facet) -> Vec<usize> {
        let mut out = Vec::with_capacity(2);
        let l = facet.lower[facet.axis];
        if l > 0 {
            let mut c = facet.lower;
            c[facet.axis] -= 1;
            out.push(self.cell_id(c));
        }
        if l < self.cells[facet.axis] {
            out.push(self.cell_id(facet.lower));
        }
        out
    }

    /// Corner vertices of a facet.
    pub fn facet_vertices(&self, facet: &Facet) -> Vec<usize> {
        let others: Vec<usize> = (0..self.dim).filter(|&k| k != facet.axis).collect();
        (0..1usize << others.len())
            .map(|i| {
                let mut v = facet.lower;
                for (j, &k) in others.iter().enumerate() {
                    v[k] += (i >> j) & 1;
                }
                self.vertex_id(v)
            })
            .collect()
    }

    /// Facet-adjacent cells of `cell` (at most `2 dim`), with the shared facet.
    pub fn facet_neighbors(&self, cell: usize) -> Vec<(usize, Facet)> {
        let c = self.cell_coords(cell);
        let mut out = Vec::with_capacity(2 * self.dim);
        for k in 0..self.dim {
            if c[k] > 0 {
                let mut n = c;
                n[k] -= 1;
                out.push((self.cell_id(n), self.cell_facet(cell, k, 0)));
            }
            if c[k] + 1 < self.cells[k] {
                let mut n = c;
                n[k] += 1;
                out.push((self.cell_id(n), self.cell_facet(cell, k, 1)));
            }
        }
        out
    }

    /// Whether the facet meets the open domain `{ψ < 0}`: some corner is
    /// strictly inside. An edge with a sign change always has such a corner.
    pub fn facet_cut_by_domain(&self, facet: &Facet) -> bool {
        self.facet_vertices(facet)
            .iter()
            .any(|&v| self.vertex_value[v] < 0.0)
    }

    /// Facets of `cell` lying on the boundary: every corner has value exactly 0
    /// and the cell across is exterior (not inside the box boundary).
    /// Returned as `(axis, side)` pairs.
    pub fn boundary_facets(&self, cell: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let c = self.cell_coords(cell);
        for k in 0..self.dim {
            for side in 0..2 {
                let f = self.cell_facet(cell, k, side);
                let on_gamma = self
                    .facet_vertices(&f)
                    .iter()
                    .all(|&v| self.vertex_value[v] == 0.0);
                if !on_gamma {
                    continue;
                }
                let across = if side == 0 {
                    c[k].checked_sub(1)
                } else if c[k] + 1 < self.cells[k] {
                    Some(c[k] + 1)
                } else {
                    None
                };
                let Some(a) = across else { continue };
                let mut n = c;
                n[k] = a;
                let nid = self.cell_id(n);
                let n_out = self
                    .cell_vertices(nid)
                    .iter()
                    .all(|&v| self.vertex_value[v] >= 0.0);
                if n_out {
                    out.push((k, side));
                }
            }
        }
        out
    }

    /// Cells containing a VEF.
    pub fn vef_cells(&self, vef: &Vef) -> Vec<usize> {
        let mut ranges: [(usize, usize); 3] = [(0, 1); 3];
        for (k, rk) in ranges.iter_mut().enumerate().take(self.dim) {
            let a = vef.anchor[k];
            *rk = if vef.axes >> k & 1 == 1 {
                (a, a + 1)
            } else {
                (a.saturating_sub(1), (a + 1).min(self.cells[k]))
            };
        }
        let mut out = Vec::new();
        for z in ranges[2].0..ranges[2].1 {
            for y in ranges[1].0..ranges[1].1 {
                for x in ranges[0].0..ranges[0].1 {
                    out.push(self.cell_id([x, y, z]));
                }
            }
        }
        out
    }

    /// All VEFs of the closure of a cell (vertices, edges, faces, the cell).
    pub fn cell_vefs(&self, cell: usize) -> Vec<Vef> {
        let c = self.cell_coords(cell);
        let full = (1u8 << self.dim) - 1;
        let mut out = Vec::new();
        for axes in 0..=full {
            let free = full & !axes;
            // anchor offsets only along axes not spanned
            for off in 0..(1usize << self.dim) {
                if (off as u8) & !free != 0 {
                    continue;
                }
                let mut anchor = c;
                for (k, ak) in anchor.iter_mut().enumerate().take(self.dim) {
                    *ak += (off >> k) & 1;
                }
                out.push(Vef { anchor, axes });
            }
        }
        out
    }

    /// Bounding-box diagonal of a union of cells.
    /// Side lengths of the axis-aligned bounding box of a set of cells.
    pub fn cells_bbox_extents(&self, cells: &[usize]) -> [f64; 3] {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for &c in cells {
            let cc = self.cell_coords(c);
            for k in 0..self.dim {
                lo[k] = lo[k].min(cc[k]);
                hi[k] = hi[k].max(cc[k] + 1);
            }
        }
        let mut e = [0.0; 3];
        for k in 0..self.dim {
            e[k] = hi[k].saturating_sub(lo[k]) as f64 * self.spacing[k];
        }
        e
    }

    pub fn cells_bbox_diagonal(&self, cells: &[usize]) -> f64 {
        math::sqrt(self.cells_bbox_extents(cells).iter().map(|e| e * e).sum())
    }

    /// Longest bounding-box side of a set of cells.
    pub fn cells_span(&self, cells: &[usize]) -> f64 {
        self.cells_bbox_extents(cells)
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Volume fraction `|K ∩ Ω| / |K|` given the bulk weights of a cell rule.
pub fn eta(mesh: &BackgroundMesh, bulk_weights: impl IntoIterator<Item = f64>) -> f64 {
    bulk_weights.into_iter().sum::<f64>() / mesh.cell_measure()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts() {
        let m = BackgroundMesh::unit(2, 2).unwrap();
        assert_eq!((m.num_cells(), m.num_vertices()), (4, 9));
        assert_eq!(m.h_max(), 0.5);
        let m = BackgroundMesh::unit(3, 8).unwrap();
        assert_eq!((m.num_cells(), m.num_vertices()), (512, 729));
        let m = BackgroundMesh::unit(2, 32).unwrap();
        assert_eq!(m.h_max(), 1.0 / 32.0);
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(matches!(
            build_mesh(&[0.0, 0.0], &[1.0, 1.0], &[0, 2]),
            Err(Error::InvalidMesh(_))
        ));
    }

    #[test]
    fn trivial_classifications() {
        let mut m = BackgroundMesh::unit(2, 5).unwrap();
        m.classify(&LevelSetGeometry::custom(2, |x| x[0] - 10.0));
        assert_eq!(m.count(CellClass::Interior), 25);
        m.classify(&LevelSetGeometry::custom(2, |x| x[0] + 10.0));
        assert_eq!(m.count(CellClass::Exterior), 25);
    }

    #[test]
    fn circle_on_4x4() {
        // Vertices sit at multiples of 0.25. The centre cells each have the
        // centre vertex strictly inside and an outer corner (distance 0.354)
        // outside, so they are cut; every other cell only touches the circle
        // at vertices where ψ = 0 and is exterior.
        let mut m = BackgroundMesh::unit(2, 4).unwrap();
        m.classify(&LevelSetGeometry::circle([0.5, 0.5], 0.25));
        for y in 0..4 {
            for x in 0..4 {
                let expected = if (1..3).contains(&x) && (1..3).contains(&y) {
                    CellClass::Cut
                } else {
                    CellClass::Exterior
                };
                assert_eq!(m.cell_class(m.cell_id([x, y, 0])), expected, "({x},{y})");
            }
        }
    }

    #[test]
    fn circle_on_8x8() {
        let mut m = BackgroundMesh::unit(2, 8).unwrap();
        m.classify(&LevelSetGeometry::circle([0.5, 0.5], 0.25));
        for y in 0..8usize {
            for x in 0..8usize {
                let ring = |i: usize| (2..6).contains(&i);
                let core = |i: usize| (3..5).contains(&i);
                let expected = if core(x) && core(y) {
                    CellClass::Interior
                } else if ring(x) && ring(y) {
                    CellClass::Cut
                } else {
                    CellClass::Exterior
                };
                assert_eq!(m.cell_class(m.cell_id([x, y, 0])), expected, "({x},{y})");
            }
        }
        assert_eq!(
            (
                m.count(CellClass::Interior),
                m.count(CellClass::Cut),
                m.count(CellClass::Exterior)
            ),
            (4, 12, 48)
        );
    }

    #[test]
    fn neighbor_counts() {
        let m = BackgroundMesh::unit(2, 2).unwrap();
        assert_eq!(m.facet_neighbors(0).len(), 2);
        let m = BackgroundMesh::unit(2, 3).unwrap();
        assert_eq!(m.facet_neighbors(4).len(), 4);
        let m = BackgroundMesh::unit(3, 2).unwrap();
        for c in 0..8 {
            assert_eq!(m.facet_neighbors(c).len(), 3);
        }
    }

    #[test]
    fn facet_cut_cases() {
        let mut m = BackgroundMesh::unit(2, 4).unwrap();
        m.classify(&LevelSetGeometry::circle([0.5, 0.5], 0.3));
        let f_in = m.cell_facet(m.cell_id([1, 1, 0]), 0, 1); // x = 0.5, y ∈ [.25,.5]
        assert!(m.facet_cut_by_domain(&f_in));
        let f_out = m.cell_facet(m.cell_id([0, 0, 0]), 0, 1);
        assert!(!m.facet_cut_by_domain(&f_out));
        // x = 0.25, y ∈ [0.25, 0.5]: only (0.25, 0.5) is inside (r = 0.25 < 0.3).
        let f_one = m.cell_facet(m.cell_id([1, 1, 0]), 0, 0);
        let inside: usize = m
            .facet_vertices(&f_one)
            .iter()
            .filter(|&&v| m.vertex_value(v) < 0.0)
            .count();
        assert_eq!(inside, 1);
        assert!(m.facet_cut_by_domain(&f_one));
    }

    #[test]
    fn snapping_collapses_slivers() {
        // ψ = x − (0.5 + 1e-9): the cut is 1e-9/h from the vertex column x = 0.5.
        let geom = LevelSetGeometry::custom(2, |x| x[0] - 0.5 - 1e-9).with_snap_tolerance(1e-6);
        let mut m = BackgroundMesh::unit(2, 4).unwrap();
        m.classify(&geom);
        // Column x ∈ [0.5, 0.75] would be a sliver cut; after snapping the
        // boundary lies on x = 0.5 so those cells are exterior and the column
        // to the left carries the boundary facet.
        let c = m.cell_id([2, 1, 0]);
        assert_eq!(m.cell_class(c), CellClass::Exterior);
        let l = m.cell_id([1, 1, 0]);
        assert_eq!(m.cell_class(l), CellClass::Cut);
        assert_eq!(m.boundary_facets(l), vec![(0, 1)]);
        // Without snapping the sliver survives.
        let geom = LevelSetGeometry::custom(2, |x| x[0] - 0.5 - 1e-9).with_snap_tolerance(0.0);
        m.classify(&geom);
        assert_eq!(m.cell_class(c), CellClass::Cut);
        assert_eq!(m.cell_class(l), CellClass::Interior);
    }

    #[test]
    fn vef_incidence_is_symmetric() {
        for dim in [2, 3] {
            let m = BackgroundMesh::unit(dim, 3).unwrap();
            for cell in 0..m.num_cells() {
                for vef in m.cell_vefs(cell) {
                    let cells = m.vef_cells(&vef);
                    assert!(cells.contains(&cell));
                    assert!(cells.len() <= 1 << (dim - vef.dim()));
                    for other in cells {
                        assert!(m.cell_vefs(other).contains(&vef));
                    }
                }
            }
        }
    }

    #[test]
    fn cell_vef_counts() {
        let m = BackgroundMesh::unit(3, 1).unwrap();
        let vefs = m.cell_vefs(0);
        // 8 vertices + 12 edges + 6 faces + 1 cell
        assert_eq!(vefs.len(), 27);
        assert_eq!(vefs.iter().filter(|v| v.dim() == 1).count(), 12);
    }

    proptest! {
        #[test]
        fn classification_is_partition(cx in 0.2f64..0.8, cy in 0.2f64..0.8, r in 0.05f64..0.3, n in 2usize..20) {
            let mut m = BackgroundMesh::unit(2, n).unwrap();
            m.classify(&LevelSetGeometry::circle([cx, cy], r));
            let total = m.count(CellClass::Interior) + m.count(CellClass::Cut) + m.count(CellClass::Exterior);
            prop_assert_eq!(total, m.num_cells());
        }

        #[test]
        fn refinement_keeps_interior_subcells_inside(cx in 0.3f64..0.7, cy in 0.3f64..0.7, r in 0.1f64..0.25, n in 2usize..12) {
            let geom = LevelSetGeometry::circle([cx, cy], r);
            let mut coarse = BackgroundMesh::unit(2, n).unwrap();
            coarse.classify(&geom);
            let mut fine = BackgroundMesh::unit(2, 2 * n).unwrap();
            fine.classify(&geom);
            for c in coarse.cells_of_class(CellClass::Interior) {
                let [x, y, _] = coarse.cell_coords(c);
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let f = fine.cell_id([2 * x + dx, 2 * y + dy, 0]);
                    prop_assert_ne!(fine.cell_class(f), CellClass::Exterior);
                }
            }
        }

        #[test]
        fn facet_cut_is_symmetric(cx in 0.2f64..0.8, cy in 0.2f64..0.8, r in 0.05f64..0.3, n in 2usize..12) {
            let mut m = BackgroundMesh::unit(2, n).unwrap();
            m.classify(&LevelSetGeometry::circle([cx, cy], r));
            for cell in 0..m.num_cells() {
                for (nb, f) in m.facet_neighbors(cell) {
                    let back = m.facet_neighbors(nb).into_iter().find(|(c, _)| *c == cell).unwrap().1;
                    prop_assert_eq!(f, back);
                    prop_assert_eq!(m.facet_cut_by_domain(&f), m.facet_cut_by_domain(&back));
                }
            }
        }
    }
}
