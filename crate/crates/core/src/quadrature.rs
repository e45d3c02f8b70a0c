//! Quadrature on the physical part of background cells.
//!
//! Interior cells use tensor Gauss–Legendre rules. Cut cells are subdivided
//! `r` times into `2^(r·d)` sub-boxes; each sub-box is split into simplices
//! (2 triangles or 6 Kuhn tetrahedra) and every simplex is clipped against the
//! level set through the exact edge roots. In 3D the interface is piecewise
//! linear. In 2D each interface chord is bent into the parabolic arc through
//! the level-set root above the chord midpoint, and the adjacent triangle is
//! mapped quadratically; this lifts the geometric error from `O(h²)` to
//! `O(h⁴)`. Bulk rules are collapsed Gauss rules on the inside simplices;
//! surface rules live on the interface pieces.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{root_on_segment, LevelSetGeometry};
use crate::math::{self, Point};
use crate::mesh::{BackgroundMesh, CellClass};

/// Gauss–Legendre points and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Initial guess (Tricomi), then Newton on P_n.
        let mut z = math::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = z;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Points per axis for a tensor rule exact for the given polynomial degree.
pub fn tensor_points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

/// Reference rule on the unit simplex of dimension `d ∈ {1, 2, 3}` (vertices
/// `0, e_1, .., e_d`), exact for polynomials of the given degree. Points are
/// barycentric-free Cartesian coordinates; weights sum to `1/d!`.
pub fn simplex_rule(d: usize, degree: usize) -> Vec<(Point, f64)> {
    match d {
        1 => {
            let (x, w) = gauss_legendre(tensor_points_for_degree(degree));
            x.into_iter()
                .zip(w)
                .map(|(x, w)| ([x, 0.0, 0.0], w))
                .collect()
        }
        2 => {
            // Collapsed coordinates: x = u, y = (1 - u) v, Jacobian (1 - u).
            let n = (degree + 3).div_ceil(2);
            let (g, gw) = gauss_legendre(n);
            let mut out = Vec::with_capacity(n * n);
            for (i, &u) in g.iter().enumerate() {
                for (j, &v) in g.iter().enumerate() {
                    out.push(([u, (1.0 - u) * v, 0.0], gw[i] * gw[j] * (1.0 - u)));
                }
            }
            out
        }
        3 => {
            // x = u, y = (1-u) v, z = (1-u)(1-v) s; Jacobian (1-u)^2 (1-v).
            let n = (degree + 4).div_ceil(2);
            let (g, gw) = gauss_legendre(n);
            let mut out = Vec::with_capacity(n * n * n);
            for (i, &u) in g.iter().enumerate() {
                for (j, &v) in g.iter().enumerate() {
                    for (k, &s) in g.iter().enumerate() {
                        let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                        out.push((
                            [u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * s],
                            gw[i] * gw[j] * gw[k] * jac,
                        ));
                    }
                }
            }
            out
        }
        _ => panic!("simplex dimension must be 1, 2 or 3"),
    }
}

/// Quadrature on `K ∩ Ω` (bulk) and `Γ ∩ K` (surface) for one cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CutQuadrature {
    /// `(point, weight)`; weights carry units of length^d.
    pub bulk: Vec<(Point, f64)>,
    /// `(point, weight, outward unit normal)`; weights carry length^(d-1).
    pub surface: Vec<(Point, f64, Point)>,
    pub subdivision_depth: usize,
}

impl CutQuadrature {
    pub fn measure(&self) -> f64 {
        self.bulk.iter().map(|b| b.1).sum()
    }

    pub fn surface_measure(&self) -> f64 {
        self.surface.iter().map(|s| s.1).sum()
    }
}

/// Tensor Gauss rule with `n` points per axis over a whole cell.
pub fn tensor_rule(mesh: &BackgroundMesh, cell: usize, n: usize) -> CutQuadrature {
    let dim = mesh.dim();
    let (g, gw) = gauss_legendre(n);
    let h = mesh.spacing();
    let x0 = mesh.cell_origin(cell);
    let total = n.pow(dim as u32);
    let mut bulk = Vec::with_capacity(total);
    for idx in 0..total {
        let mut p = x0;
        let mut w = 1.0;
        let mut rest = idx;
        for k in 0..dim {
            let i = rest % n;
            rest /= n;
            p[k] += h[k] * g[i];
            w *= h[k] * gw[i];
        }
        bulk.push((p, w));
    }
    CutQuadrature {
        bulk,
        surface: Vec::new(),
        subdivision_depth: 0,
    }
}

/// Standard rule for interior cells of an order-`q` space: `(q+1)^d` points,
/// exact for degree `2q + 1` per axis.
pub fn interior_rule(mesh: &BackgroundMesh, cell: usize, q: usize) -> CutQuadrature {
    tensor_rule(mesh, cell, q + 1)
}

/// A simplex; only the first `d + 1` vertices are used. In 2D the edge
/// `vertices[1]–vertices[2]` may be a parabolic arc through `arc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Simplex {
    pub vertices: [Point; 4],
    pub arc: Option<Point>,
}

/// An interface piece (segment in 2D, triangle in 3D) with the outward unit
/// normal of its chord. A 2D segment may be a parabolic arc through `arc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfacePiece {
    pub vertices: [Point; 3],
    pub normal: Point,
    pub arc: Option<Point>,
}

/// Point of the quadratic triangle `a, b, c` whose edge `b–c` passes through
/// `(b + c)/2 + bulge` at its middle, with the Jacobian determinant there.
fn arc_triangle_map(
    a: &Point,
    b: &Point,
    c: &Point,
    bulge: &Point,
    xi: f64,
    eta: f64,
) -> (Point, f64) {
    let mut p = [0.0; 3];
    let mut jx = [0.0; 2];
    let mut jy = [0.0; 2];
    for k in 0..2 {
        p[k] = a[k] + (b[k] - a[k]) * xi + (c[k] - a[k]) * eta + 4.0 * xi * eta * bulge[k];
        jx[k] = b[k] - a[k] + 4.0 * eta * bulge[k];
        jy[k] = c[k] - a[k] + 4.0 * xi * bulge[k];
    }
    (p, jx[0] * jy[1] - jx[1] * jy[0])
}

/// Piecewise-linear description of `K ∩ Ω` and `Γ ∩ K`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CutPieces {
    pub simplices: Vec<Simplex>,
    pub interface: Vec<InterfacePiece>,
}

fn simplex_volume(dim: usize, v: &[Point]) -> f64 {
    let e1 = math::sub(&v[1], &v[0]);
    let e2 = math::sub(&v[2], &v[0]);
    if dim == 2 {
        0.5 * (e1[0] * e2[1] - e1[1] * e2[0]).abs()
    } else {
        let e3 = math::sub(&v[3], &v[0]);
        math::dot(&math::cross(&e1, &e2), &e3).abs() / 6.0
    }
}

fn piece_measure(dim: usize, v: &[Point]) -> f64 {
    if dim == 2 {
        math::dist(&v[0], &v[1])
    } else {
        0.5 * math::norm(&math::cross(
            &math::sub(&v[1], &v[0]),
            &math::sub(&v[2], &v[0]),
        ))
    }
}

struct Clipper<'a> {
    geom: &'a LevelSetGeometry,
    dim: usize,
    /// Pieces smaller than these are dropped as degenerate.
    vol_floor: f64,
    area_floor: f64,
    out: CutPieces,
}

impl Clipper<'_> {
    fn cut_point(&self, pi: &Point, vi: f64, po: &Point, vo: f64) -> Point {
        if vi == 0.0 {
            return *pi;
        }
        let t = root_on_segment(|t| self.geom.eval(&math::lerp(pi, po, t)), vi, vo).unwrap_or(0.0);
        math::lerp(pi, po, t)
    }

    fn push_simplex(&mut self, v: &[Point]) {
        if simplex_volume(self.dim, v) > self.vol_floor {
            let mut vertices = [[0.0; 3]; 4];
            vertices[..v.len()].copy_from_slice(v);
            self.out.simplices.push(Simplex {
                vertices,
                arc: None,
            });
        }
    }

    /// Level-set root on the line through the chord midpoint along the chord
    /// normal, if one is found close to the chord.
    fn arc_point(&self, b: &Point, c: &Point) -> Option<Point> {
        let t = math::sub(c, b);
        let len = math::norm(&t);
        if len == 0.0 {
            return None;
        }
        let n = [-t[1] / len, t[0] / len, 0.0];
        let m = math::lerp(b, c, 0.5);
        let f = |s: f64| self.geom.eval(&math::add(&m, &math::scale(&n, s)));
        let f0 = f(0.0);
        if f0 == 0.0 {
            return Some(m);
        }
        let mut delta = 0.02 * len;
        while delta <= 0.5 * len {
            for sgn in [1.0, -1.0] {
                let fe = f(sgn * delta);
                if fe * f0 <= 0.0 {
                    let hi = math::add(&m, &math::scale(&n, sgn * delta));
                    let s = root_on_segment(|s| self.geom.eval(&math::lerp(&m, &hi, s)), f0, fe)?;
                    return Some(math::lerp(&m, &hi, s));
                }
            }
            delta *= 2.0;
        }
        None
    }

    /// Inside triangle `a, b, c` whose edge `b–c` is an interface chord. In 2D
    /// the chord is bent onto the level set when the mapped triangle stays
    /// valid.
    fn push_interface_triangle(&mut self, a: &Point, b: &Point, c: &Point, outside: &[Point]) {
        let arc = if self.dim == 2 {
            self.arc_point(b, c)
        } else {
            None
        };
        let arc = arc.filter(|p| {
            let bulge = math::sub(p, &math::lerp(b, c, 0.5));
            let (_, d0) = arc_triangle_map(a, b, c, &[0.0; 3], 0.0, 0.0);
            // det J is bilinear in (ξ, η) over the triangle: check vertices and edge midpoints.
            [
                (0.0, 0.0),
                (1.0, 0.0),
                (0.0, 1.0),
                (0.5, 0.5),
                (0.5, 0.0),
                (0.0, 0.5),
            ]
            .iter()
            .all(|&(x, y)| arc_triangle_map(a, b, c, &bulge, x, y).1 * d0 > 0.25 * d0 * d0)
        });
        if simplex_volume(self.dim, &[*a, *b, *c]) > self.vol_floor {
            let mut vertices = [[0.0; 3]; 4];
            vertices[..3].copy_from_slice(&[*a, *b, *c]);
            self.out.simplices.push(Simplex { vertices, arc });
        }
        let before = self.out.interface.len();
        self.push_interface(&[*b, *c], outside);
        if self.out.interface.len() > before {
            self.out.interface.last_mut().unwrap().arc = arc;
        }
    }

    fn push_interface(&mut self, v: &[Point], outside: &[Point]) {
        if piece_measure(self.dim, v) <= self.area_floor {
            return;
        }
        let mut n = if self.dim == 2 {
            let t = math::sub(&v[1], &v[0]);
            [t[1], -t[0], 0.0]
        } else {
            math::cross(&math::sub(&v[1], &v[0]), &math::sub(&v[2], &v[0]))
        };
        let len = math::norm(&n);
        n = math::scale(&n, 1.0 / len);
        let side: f64 = outside
            .iter()
            .map(|o| math::dot(&n, &math::sub(o, &v[0])))
            .sum();
        if side < 0.0 {
            n = math::scale(&n, -1.0);
        }
        let mut vertices = [[0.0; 3]; 3];
        vertices[..v.len()].copy_from_slice(v);
        self.out.interface.push(InterfacePiece {
            vertices,
            normal: n,
            arc: None,
        });
    }

    /// Clips one simplex with vertex values `vals` (inside ⇔ value ≤ 0).
    fn clip(&mut self, pts: &[Point], vals: &[f64]) {
        let inside: Vec<usize> = (0..pts.len()).filter(|&i| vals[i] <= 0.0).collect();
        let outside: Vec<usize> = (0..pts.len()).filter(|&i| vals[i] > 0.0).collect();
        if outside.is_empty() {
            self.push_simplex(pts);
            return;
        }
        if inside.is_empty() {
            return;
        }
        let cut = |i: usize, o: usize| self.cut_point(&pts[i], vals[i], &pts[o], vals[o]);
        let out_pts: Vec<Point> = outside.iter().map(|&o| pts[o]).collect();
        match (self.dim, inside.len()) {
            (2, 1) => {
                let i = inside[0];
                let c1 = cut(i, outside[0]);
                let c2 = cut(i, outside[1]);
                self.push_interface_triangle(&pts[i], &c1, &c2, &out_pts);
            }
            (2, 2) => {
                let (i1, i2, o) = (inside[0], inside[1], outside[0]);
                let c1 = cut(i1, o);
                let c2 = cut(i2, o);
                // Split the quadrilateral so the triangle on the chord has the
                // larger height.
                let height = |p: &Point| simplex_volume(2, &[*p, c1, c2]);
                let (a, b) = if height(&pts[i1]) >= height(&pts[i2]) {
                    (i1, i2)
                } else {
                    (i2, i1)
                };
                let cb = if b == i2 { c2 } else { c1 };
                self.push_simplex(&[pts[a], pts[b], cb]);
                self.push_interface_triangle(&pts[a], &c1, &c2, &out_pts);
            }
            (3, 1) => {
                let i = inside[0];
                let c: Vec<Point> = outside.iter().map(|&o| cut(i, o)).collect();
                self.push_simplex(&[pts[i], c[0], c[1], c[2]]);
                self.push_interface(&[c[0], c[1], c[2]], &out_pts);
            }
            (3, 3) => {
                let o = outside[0];
                let a: Vec<Point> = inside.iter().map(|&i| pts[i]).collect();
                let b: Vec<Point> = inside.iter().map(|&i| cut(i, o)).collect();
                self.push_prism(&a, &b);
                self.push_interface(&[b[0], b[1], b[2]], &out_pts);
            }
            (3, 2) => {
                let (i1, i2) = (inside[0], inside[1]);
                let (o1, o2) = (outside[0], outside[1]);
                let c11 = cut(i1, o1);
                let c12 = cut(i1, o2);
                let c21 = cut(i2, o1);
                let c22 = cut(i2, o2);
                self.push_prism(&[pts[i1], c11, c12], &[pts[i2], c21, c22]);
                self.push_interface(&[c11, c12, c22], &out_pts);
                self.push_interface(&[c11, c22, c21], &out_pts);
            }
            _ => unreachable!(),
        }
    }

    /// Prism with triangles `a` and `b` (a[k] joined to b[k]) as three tetrahedra.
    fn push_prism(&mut self, a: &[Point], b: &[Point]) {
        self.push_simplex(&[a[0], a[1], a[2], b[2]]);
        self.push_simplex(&[a[0], a[1], b[1], b[2]]);
        self.push_simplex(&[a[0], b[0], b[1], b[2]]);
    }
}

/// Kuhn decomposition of the unit cube: the 6 vertex paths 0 → 7 adding one
/// axis bit at a time.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Piecewise-linear decomposition of `K ∩ Ω` for a cell, refined `depth` times.
pub fn decompose_cell(
    mesh: &BackgroundMesh,
    geom: &LevelSetGeometry,
    cell: usize,
    depth: usize,
) -> CutPieces {
    let dim = mesh.dim();
    let m = 1usize << depth;
    let np = m + 1;
    let h = mesh.spacing();
    let x0 = mesh.cell_origin(cell);
    let cc = mesh.cell_coords(cell);
    let sub_h: Vec<f64> = (0..3).map(|k| h[k] / m as f64).collect();
    let npts = np.pow(dim as u32);
    let lid = |i: [usize; 3]| i[0] + np * (i[1] + np * i[2]);
    let mut pts = vec![[0.0; 3]; npts];
    let mut vals = vec![0.0; npts];
    for idx in 0..npts {
        let i = [idx % np, (idx / np) % np, idx / (np * np)];
        let mut p = x0;
        let mut corner = true;
        let mut vc = cc;
        for k in 0..dim {
            p[k] += sub_h[k] * i[k] as f64;
            if i[k] == m {
                vc[k] += 1;
            } else if i[k] != 0 {
                corner = false;
            }
        }
        // Exact lattice positions on grid lines avoid round-off mismatch with neighbours.
        for k in 0..dim {
            if i[k] == m {
                p[k] = mesh.origin()[k] + h[k] * (cc[k] + 1) as f64;
            }
        }
        pts[idx] = p;
        vals[idx] = if corner {
            mesh.vertex_value(mesh.vertex_id(vc))
        } else {
            geom.eval(&p)
        };
    }
    let hm = mesh.h_max();
    let mut clipper = Clipper {
        geom,
        dim,
        vol_floor: 1e-28 * math::powi(hm, dim as i32),
        area_floor: 1e-28 * math::powi(hm, dim as i32 - 1),
        out: CutPieces::default(),
    };
    let nsub = m.pow(dim as u32);
    for s in 0..nsub {
        let base = [s % m, (s / m) % m, s / (m * m)];
        let corner = |bits: usize| {
            let mut i = base;
            for (k, ik) in i.iter_mut().enumerate().take(dim) {
                *ik += (bits >> k) & 1;
            }
            lid(i)
        };
        if dim == 2 {
            let c: Vec<usize> = (0..4).map(corner).collect();
            let v: Vec<f64> = c.iter().map(|&i| vals[i]).collect();
            // Saddle (alternating signs): join the diagonal whose corners share
            // the sign of the sub-box midpoint; otherwise use diagonal 0–3.
            let inside = |x: f64| x <= 0.0;
            let saddle = inside(v[0]) == inside(v[3])
                && inside(v[1]) == inside(v[2])
                && inside(v[0]) != inside(v[1]);
            let use_03 = if saddle {
                let mid = math::scale(&math::add(&pts[c[0]], &pts[c[3]]), 0.5);
                inside(geom.eval(&mid)) == inside(v[0])
            } else {
                true
            };
            let tris: [[usize; 3]; 2] = if use_03 {
                [[0, 1, 3], [0, 3, 2]]
            } else {
                [[0, 1, 2], [1, 3, 2]]
            };
            for t in tris.iter() {
                let p: Vec<Point> = t.iter().map(|&j| pts[c[j]]).collect();
                let val: Vec<f64> = t.iter().map(|&j| v[j]).collect();
                clipper.clip(&p, &val);
            }
        } else {
            for t in KUHN.iter() {
                let ids: Vec<usize> = t.iter().map(|&b| corner(b)).collect();
                let p: Vec<Point> = ids.iter().map(|&i| pts[i]).collect();
                let val: Vec<f64> = ids.iter().map(|&i| vals[i]).collect();
                clipper.clip(&p, &val);
            }
        }
    }
    // Boundary lying exactly on a cell facet (next to an exterior cell).
    for (axis, side) in mesh.boundary_facets(cell) {
        let mut n = [0.0; 3];
        n[axis] = if side == 0 { -1.0 } else { 1.0 };
        let f = mesh.cell_facet(cell, axis, side);
        let corners: Vec<Point> = mesh
            .facet_vertices(&f)
            .iter()
            .map(|&v| mesh.vertex_point(v))
            .collect();
        if dim == 2 {
            clipper.out.interface.push(InterfacePiece {
                vertices: [corners[0], corners[1], [0.0; 3]],
                normal: n,
                arc: None,
            });
        } else {
            for tri in [[0, 1, 3], [0, 3, 2]] {
                clipper.out.interface.push(InterfacePiece {
                    vertices: [corners[tri[0]], corners[tri[1]], corners[tri[2]]],
                    normal: n,
                    arc: None,
                });
            }
        }
    }
    clipper.out
}

/// Maps reference simplex rules onto cut pieces. Arc pieces use a rule two
/// degrees higher to absorb the quadratic map.
pub fn rule_from_pieces(
    dim: usize,
    pieces: &CutPieces,
    degree: usize,
    depth: usize,
) -> CutQuadrature {
    let bulk_ref = simplex_rule(dim, degree);
    let surf_ref = simplex_rule(dim - 1, degree);
    let bulk_arc = simplex_rule(dim, degree + 2);
    let surf_arc = simplex_rule(dim - 1, degree + 2);
    let mut bulk = Vec::with_capacity(pieces.simplices.len() * bulk_ref.len());
    for s in &pieces.simplices {
        let v = &s.vertices;
        if let Some(arc) = s.arc {
            let bulge = math::sub(&arc, &math::lerp(&v[1], &v[2], 0.5));
            for (xi, w) in &bulk_arc {
                let (p, det) = arc_triangle_map(&v[0], &v[1], &v[2], &bulge, xi[0], xi[1]);
                bulk.push((p, w * det.abs()));
            }
            continue;
        }
        // |det J| = d! · volume; reference weights sum to 1/d!.
        let fact = if dim == 2 { 2.0 } else { 6.0 };
        let jac = fact * simplex_volume(dim, &v[..dim + 1]);
        for (xi, w) in &bulk_ref {
            let mut p = v[0];
            for j in 0..dim {
                let e = math::sub(&v[j + 1], &v[0]);
                p = math::add(&p, &math::scale(&e, xi[j]));
            }
            bulk.push((p, w * jac));
        }
    }
    let mut surface = Vec::with_capacity(pieces.interface.len() * surf_ref.len());
    for f in &pieces.interface {
        let v = &f.vertices;
        if let Some(arc) = f.arc {
            // x(t) = b + (c − b) t + 4 t (1 − t) bulge
            let bulge = math::sub(&arc, &math::lerp(&v[0], &v[1], 0.5));
            let chord = math::sub(&v[1], &v[0]);
            for (xi, w) in &surf_arc {
                let t = xi[0];
                let p = math::add(
                    &math::lerp(&v[0], &v[1], t),
                    &math::scale(&bulge, 4.0 * t * (1.0 - t)),
                );
                let tangent = math::add(&chord, &math::scale(&bulge, 4.0 - 8.0 * t));
                let len = math::norm(&tangent);
                let mut n = [tangent[1] / len, -tangent[0] / len, 0.0];
                if math::dot(&n, &f.normal) < 0.0 {
                    n = math::scale(&n, -1.0);
                }
                surface.push((p, w * len, n));
            }
            continue;
        }
        let fact = if dim == 2 { 1.0 } else { 2.0 };
        let jac = fact * piece_measure(dim, &v[..dim]);
        for (xi, w) in &surf_ref {
            let mut p = v[0];
            for j in 0..dim - 1 {
                let e = math::sub(&v[j + 1], &v[0]);
                p = math::add(&p, &math::scale(&e, xi[j]));
            }
            surface.push((p, w * jac, f.normal));
        }
    }
    CutQuadrature {
        bulk,
        surface,
        subdivision_depth: depth,
    }
}

/// Bulk and surface rule of the given polynomial degree on a cut cell.
pub fn cut_rule(
    mesh: &BackgroundMesh,
    geom: &LevelSetGeometry,
    cell: usize,
    degree: usize,
    depth: usize,
) -> CutQuadrature {
    let pieces = decompose_cell(mesh, geom, cell, depth);
    rule_from_pieces(mesh.dim(), &pieces, degree, depth)
}

/// Rule for any active cell: tensor Gauss on interior cells, clipped rule on
/// cut cells, empty on exterior cells.
pub fn cell_rule(
    mesh: &BackgroundMesh,
    geom: &LevelSetGeometry,
    cell: usize,
    degree: usize,
    depth: usize,
) -> CutQuadrature {
    match mesh.cell_class(cell) {
        CellClass::Interior => tensor_rule(mesh, cell, tensor_points_for_degree(degree)),
        CellClass::Cut => cut_rule(mesh, geom, cell, degree, depth),
        CellClass::Exterior => CutQuadrature::default(),
    }
}

/// Rules for every cell of a classified mesh, indexed by cell id.
#[derive(Clone, Debug)]
pub struct MeshQuadrature {
    pub rules: Vec<CutQuadrature>,
    pub degree: usize,
    pub depth: usize,
}

impl MeshQuadrature {
    pub fn build(
        mesh: &BackgroundMesh,
        geom: &LevelSetGeometry,
        degree: usize,
        depth: usize,
    ) -> Self {
        let rules = (0..mesh.num_cells())
            .map(|c| cell_rule(mesh, geom, c, degree, depth))
            .collect();
        Self {
            rules,
            degree,
            depth,
        }
    }

    pub fn rule(&self, cell: usize) -> &CutQuadrature {
        &self.rules[cell]
    }
}

/// Approximate `(|Ω|, |Γ|)` from the rules of all active cells.
pub fn domain_measures(
    mesh: &BackgroundMesh,
    geom: &LevelSetGeometry,
    degree: usize,
    depth: usize,
) -> (f64, f64) {
    let mut vol = 0.0;
    let mut area = 0.0;
    for c in mesh.active_cells() {
        let rule = cell_rule(mesh, geom, c, degree, depth);
        vol += rule.measure();
        area += rule.surface_measure();
    }
    (vol, area)
}
