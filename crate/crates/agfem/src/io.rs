//! File formats: CSV tables, legacy VTK, MatrixMarket, aggregate and
//! quadrature dumps.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use agfem_core::aggregation::AggregateMap;
use agfem_core::assembly::CellBasis;
use agfem_core::experiments::{ConvergenceRow, MovingDomainRow, Slopes};
use agfem_core::fespace::FESpace;
use agfem_core::geometry::LevelSetGeometry;
use agfem_core::mesh::{BackgroundMesh, CellClass};
use agfem_core::quadrature::{decompose_cell, MeshQuadrature};
use agfem_core::sparse::CsrMatrix;
use agfem_core::Point;

pub const MOVING_DOMAIN_HEADER: &str = "l,kappa_A,energy_error,solved";
pub const CONVERGENCE_HEADER: &str = "h,dofs,kappa_A,energy_error,l2_error,max_aggr_ratio";

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("coefficient vector has {found} entries, space has {expected} nodes")]
    Coefficients { expected: usize, found: usize },
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Runs `body` on a buffered writer for `path`, tagging IO failures with the
/// path.
fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), OutputError> {
    let mut w = create(path)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Shortest round-trip scientific notation; `NaN` stays `NaN`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_moving_domain_csv(path: &Path, rows: &[MovingDomainRow]) -> Result<(), OutputError> {
    write_file(path, |w| {
        writeln!(w, "{MOVING_DOMAIN_HEADER}")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(r.l),
                fmt_f64(r.kappa_a),
                fmt_f64(r.energy_error),
                r.solved
            )?;
        }
        Ok(())
    })
}

/// Mass-matrix condition numbers along the sweep, `l,kappa_M`.
pub fn write_mass_kappa_csv(path: &Path, rows: &[MovingDomainRow]) -> Result<(), OutputError> {
    write_file(path, |w| {
        writeln!(w, "l,kappa_M")?;
        for r in rows {
            writeln!(
                w,
                "{},{}",
                fmt_f64(r.l),
                fmt_f64(r.kappa_m.unwrap_or(f64::NAN))
            )?;
        }
        Ok(())
    })
}

/// Convergence table followed by a `slopes` footer row holding the fitted
/// log-log slopes of `kappa_A`, `energy_error` and `l2_error`.
pub fn write_convergence_csv(
    path: &Path,
    rows: &[ConvergenceRow],
    slopes: &Slopes,
) -> Result<(), OutputError> {
    write_file(path, |w| {
        writeln!(w, "{CONVERGENCE_HEADER}")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(r.h),
                r.dofs,
                fmt_f64(r.kappa_a),
                fmt_f64(r.energy_error),
                fmt_f64(r.l2_error),
                fmt_f64(r.max_aggr_ratio)
            )?;
        }
        writeln!(
            w,
            "slopes,,{},{},{},",
            fmt_f64(slopes.kappa_a),
            fmt_f64(slopes.energy_error),
            fmt_f64(slopes.l2_error)
        )
    })
}

/// Symmetric or general matrix in MatrixMarket coordinate format (1-based).
pub fn write_matrix_market(path: &Path, a: &CsrMatrix) -> Result<(), OutputError> {
    write_file(path, |w| {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", a.rows, a.cols, a.nnz())?;
        for i in 0..a.rows {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                writeln!(w, "{} {} {}", i + 1, a.col_idx[k] + 1, fmt_f64(a.values[k]))?;
            }
        }
        Ok(())
    })
}

/// `cell_id,root_id` for every active cell; unaggregated cells get `-1`.
pub fn write_aggregates_csv(
    path: &Path,
    mesh: &BackgroundMesh,
    map: &AggregateMap,
) -> Result<(), OutputError> {
    write_file(path, |w| {
        writeln!(w, "cell_id,root_id")?;
        for c in mesh.active_cells() {
            match map.root(c) {
                Some(r) => writeln!(w, "{c},{r}")?,
                None => writeln!(w, "{c},-1")?,
            }
        }
        Ok(())
    })
}

/// One line per quadrature point: bulk points carry a zero normal.
pub fn write_quadrature_csv(path: &Path, quad: &MeshQuadrature) -> Result<(), OutputError> {
    write_file(path, |w| {
        writeln!(w, "cell_id,kind,x,y,z,weight,nx,ny,nz")?;
        for (c, rule) in quad.rules.iter().enumerate() {
            for (x, wt) in &rule.bulk {
                writeln!(
                    w,
                    "{c},bulk,{},{},{},{},0,0,0",
                    x[0],
                    x[1],
                    x[2],
                    fmt_f64(*wt)
                )?;
            }
            for (x, wt, n) in &rule.surface {
                writeln!(
                    w,
                    "{c},surface,{},{},{},{},{},{},{}",
                    x[0],
                    x[1],
                    x[2],
                    fmt_f64(*wt),
                    n[0],
                    n[1],
                    n[2]
                )?;
            }
        }
        Ok(())
    })
}

const VTK_TRIANGLE: u8 = 5;
const VTK_QUAD: u8 = 9;
const VTK_TETRA: u8 = 10;
const VTK_HEXAHEDRON: u8 = 12;

/// Visualisation data for [`write_vtk`].
pub struct VtkInput<'a> {
    pub mesh: &'a BackgroundMesh,
    pub geom: &'a LevelSetGeometry,
    pub space: &'a FESpace,
    pub aggregates: &'a AggregateMap,
    /// Nodal coefficients in active numbering (already extended).
    pub coefficients: &'a [f64],
}

struct VtkCell {
    points: Vec<Point>,
    kind: u8,
    cell: usize,
}

fn cell_corners(mesh: &BackgroundMesh, cell: usize) -> (Vec<Point>, u8) {
    let o = mesh.cell_origin(cell);
    let h = mesh.spacing();
    let p = |dx: f64, dy: f64, dz: f64| [o[0] + dx * h[0], o[1] + dy * h[1], o[2] + dz * h[2]];
    if mesh.dim() == 2 {
        (
            vec![p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 0.), p(0., 1., 0.)],
            VTK_QUAD,
        )
    } else {
        let mut pts = Vec::with_capacity(8);
        for z in [0., 1.] {
            pts.extend([p(0., 0., z), p(1., 0., z), p(1., 1., z), p(0., 1., z)]);
        }
        (pts, VTK_HEXAHEDRON)
    }
}

/// Legacy ASCII unstructured grid of the active part of the domain: interior
/// cells as quads/hexahedra, cut cells as their clipped simplices. Points are
/// not shared between cells so each cell carries its own `u` samples.
pub fn write_vtk(path: &Path, input: &VtkInput<'_>) -> Result<(), OutputError> {
    let VtkInput {
        mesh,
        geom,
        space,
        aggregates,
        coefficients,
    } = *input;
    if coefficients.len() != space.num_nodes() {
        return Err(OutputError::Coefficients {
            expected: space.num_nodes(),
            found: coefficients.len(),
        });
    }
    let dim = mesh.dim();
    let mut cells = Vec::new();
    for c in space.cells() {
        match mesh.cell_class(c) {
            CellClass::Interior => {
                let (points, kind) = cell_corners(mesh, c);
                cells.push(VtkCell {
                    points,
                    kind,
                    cell: c,
                });
            }
            CellClass::Cut => {
                for s in decompose_cell(mesh, geom, c, 0).simplices {
                    cells.push(VtkCell {
                        points: s.vertices[..=dim].to_vec(),
                        kind: if dim == 2 { VTK_TRIANGLE } else { VTK_TETRA },
                        cell: c,
                    });
                }
            }
            CellClass::Exterior => {}
        }
    }
    let mut values = Vec::new();
    for vc in &cells {
        let nodes = space.cell_nodes(vc.cell);
        let mut basis = CellBasis::new(mesh, space, vc.cell);
        for x in &vc.points {
            basis.eval(x);
            values.push(
                nodes
                    .iter()
                    .zip(&basis.values)
                    .map(|(&n, b)| coefficients[n] * b)
                    .sum::<f64>(),
            );
        }
    }
    let npts: usize = cells.iter().map(|c| c.points.len()).sum();
    write_file(path, |w| {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "agfem solution")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {npts} double")?;
        for vc in &cells {
            for p in &vc.points {
                writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
            }
        }
        writeln!(w, "CELLS {} {}", cells.len(), npts + cells.len())?;
        let mut next = 0;
        for vc in &cells {
            write!(w, "{}", vc.points.len())?;
            for _ in 0..vc.points.len() {
                write!(w, " {next}")?;
                next += 1;
            }
            writeln!(w)?;
        }
        writeln!(w, "CELL_TYPES {}", cells.len())?;
        for vc in &cells {
            writeln!(w, "{}", vc.kind)?;
        }
        writeln!(w, "CELL_DATA {}", cells.len())?;
        writeln!(w, "SCALARS class int 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for vc in &cells {
            writeln!(w, "{}", mesh.cell_class(vc.cell).code())?;
        }
        writeln!(w, "SCALARS root_id int 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for vc in &cells {
            writeln!(w, "{}", aggregates.root(vc.cell).map_or(-1, |r| r as i64))?;
        }
        writeln!(w, "POINT_DATA {npts}")?;
        writeln!(w, "SCALARS u double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in &values {
            writeln!(w, "{}", fmt_f64(*v))?;
        }
        Ok(())
    })
}
