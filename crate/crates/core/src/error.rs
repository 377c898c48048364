use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("edge {index} has non-positive length {length}")]
    NonPositiveLength { index: usize, length: f64 },
    #[error("inconsistent combinatorial graph: {0}")]
    InconsistentGraph(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not unitary: max |U*U - I| = {defect:e}")]
    NotUnitary { defect: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unresolved cluster near E = {energy}: normalized sigma_min = {sigma:e} lies in the ambiguous band")]
    UnresolvedCluster { energy: f64, sigma: f64 },
    #[error("scan inconsistency: {0}")]
    ScanInconsistency(String),
    #[error("{count} negative eigenvalues exceed the cap {cap}")]
    NegativeCapExceeded { count: usize, cap: usize },
    #[error("E = {energy} lies outside the certified window ({lo}, {hi}]")]
    OutOfWindow { energy: f64, lo: f64, hi: f64 },
    #[error("spectra are not certified on a common window: {0}")]
    WindowMismatch(String),

    #[error("E = {energy} is within 1e-12 relative of the pole {pole}")]
    PoleProximity { energy: f64, pole: f64 },
    #[error("root {root} moved by {shift:e} (relative) when the truncation ratio was doubled")]
    TruncationUnstable { root: f64, shift: f64 },

    #[error("bad model dimensions: N = {n}, d = {d}")]
    BadDimensions { n: usize, d: usize },
    #[error("mesh too coarse: h = {h} exceeds {limit}")]
    MeshTooCoarse { h: f64, limit: f64 },
}

impl Error {
    /// True for errors caused by malformed or out-of-contract input, as
    /// opposed to a numerical failure or a violated bound.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyGraph
                | Error::NonPositiveLength { .. }
                | Error::InconsistentGraph(_)
                | Error::DimensionMismatch { .. }
                | Error::NotUnitary { .. }
                | Error::InvalidArgument(_)
                | Error::OutOfWindow { .. }
                | Error::WindowMismatch(_)
                | Error::BadDimensions { .. }
                | Error::MeshTooCoarse { .. }
        )
    }
}
