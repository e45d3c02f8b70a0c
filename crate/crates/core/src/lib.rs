//! Aggregated unfitted finite elements (AgFEM) for the Poisson problem on
//! domains described by level-set functions and embedded in Cartesian grids.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its inputs; file formats, the CLI and parallel drivers live in the `agfem`
//! companion crate.
//!
//! Pipeline, from geometry to error report:
//!
//! 1. [`geometry`]: level set, edge roots with snapping, benchmark shapes.
//! 2. [`mesh`]: Cartesian background grid and interior/cut/exterior classes.
//! 3. [`aggregation`]: cell aggregation of cut cells onto interior roots.
//! 4. [`fespace`]: Lagrangian spaces, outer-node constraints, extension.
//! 5. [`quadrature`]: Gauss rules on interior cells, cut-cell bulk and surface rules.
//! 6. [`assembly`]: Nitsche stiffness, mass matrix, local coercivity constant.
//! 7. [`spectral`]: CG, Lanczos condition-number estimates.
//! 8. [`error_norms`]: energy and L² errors against an exact solution.
//! 9. [`experiments`]: moving-domain, convergence and validation pipelines.
#![no_std]
// Index loops mirror the math; negated comparisons deliberately reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod aggregation;
pub mod assembly;
pub mod dense;
pub mod error;
pub mod error_norms;
pub mod experiments;
pub mod fespace;
pub mod geometry;
pub mod math;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use math::Point;
