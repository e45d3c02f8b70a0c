use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A grid was requested with zero cells along some axis.
    InvalidMesh(String),
    /// Unknown builtin shape name.
    UnknownShape(String),
    /// The interior mesh has no cells, so no aggregated or interior space exists.
    NoInteriorCells,
    /// Vector or matrix sizes do not agree.
    SizeMismatch { expected: usize, found: usize },
    /// Aggregated assembly requested without constraints.
    MissingConstraints,
    /// An element contribution was NaN or infinite.
    NonFinite { cell: usize },
    /// Zero-dimensional matrix handed to a spectral routine.
    EmptyMatrix,
    /// Unpivoted factorization met a zero or non-finite pivot.
    SingularPivot { row: usize },
    /// Unsupported polynomial order or dimension.
    Unsupported(String),
    /// Malformed configuration value.
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMesh(msg) => write!(f, "invalid mesh: {msg}"),
            Error::UnknownShape(name) => write!(f, "unknown shape `{name}`"),
            Error::NoInteriorCells => write!(f, "no interior cells; refine mesh"),
            Error::SizeMismatch { expected, found } => {
                write!(f, "size mismatch: expected {expected}, found {found}")
            }
            Error::MissingConstraints => {
                write!(f, "aggregated flavor requires outer-node constraints")
            }
            Error::NonFinite { cell } => {
                write!(f, "non-finite element contribution in cell {cell}")
            }
            Error::EmptyMatrix => write!(f, "matrix has dimension 0"),
            Error::SingularPivot { row } => write!(f, "zero pivot at row {row}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Config(msg) => write!(f, "config: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
