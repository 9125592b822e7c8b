use std::fmt;

/// Crate-wide error type. Variants mirror the failure classes surfaced by the
/// public operations; the CLI maps `Config` to exit code 2 and everything else
/// that reaches the top level to a run failure.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid grid or experiment configuration (bad sizes, unknown keys, unparsable values).
    Config(String),
    /// An argument outside the documented domain of an operation.
    Argument(String),
    /// Spectral data that should be Hermitian-symmetric is not.
    Symmetry { defect: f64, tolerance: f64 },
    /// A dyadic block index outside the valid range for the grid.
    Range { j: i32, j_min: i32, j_max: i32 },
    /// Input outside the operator's domain, e.g. nonzero mean where zero mean is required.
    Domain(String),
    /// Velocity field failed the divergence-free precondition.
    Solenoidality { defect: f64, scale: f64 },
    /// Input lacks the structural property an operation relies on (curl-free, disjoint supports, ...).
    Structure(String),
    /// Grid too coarse for the requested construction.
    Resolution(String),
    /// Compactly supported data leaks past the box boundary.
    Support(String),
    /// Malformed binary field file or report artifact.
    Format(String),
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Argument(msg) => write!(f, "argument error: {msg}"),
            Error::Symmetry { defect, tolerance } => write!(
                f,
                "symmetry error: Hermitian defect {defect:.3e} exceeds tolerance {tolerance:.3e}"
            ),
            Error::Range { j, j_min, j_max } => write!(
                f,
                "range error: block index {j} outside valid range [{j_min}, {j_max}]"
            ),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Solenoidality { defect, scale } => write!(
                f,
                "solenoidality error: |div u|_2 = {defect:.3e} exceeds 1e-8 * |grad u|_2 = {:.3e}",
                1e-8 * scale
            ),
            Error::Structure(msg) => write!(f, "structure error: {msg}"),
            Error::Resolution(msg) => write!(f, "resolution error: {msg}"),
            Error::Support(msg) => write!(f, "support error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
