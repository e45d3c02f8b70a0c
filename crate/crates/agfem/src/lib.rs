//! Command-line driver and file formats for `agfem-core`.

pub mod cli;
pub mod io;
pub mod runner;
