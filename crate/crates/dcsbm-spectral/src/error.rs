use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("edge probability {p} between nodes {i} and {j} is outside (0, 1)")]
    InvalidProbability { i: usize, j: usize, p: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("node {0} has zero degree")]
    ZeroDegree(usize),
    #[error("graph carries no latent model")]
    MissingLatent,
    #[error("invalid weight measure: {0}")]
    InvalidMeasure(String),
    #[error("fixed point did not converge at z = {0}")]
    NotConverged(f64),
    #[error("no convergent point found while bracketing the bulk edge (alpha = {0})")]
    BracketFailure(f64),
    #[error("spike equation for eigenvalue {0} could not be bracketed")]
    RootNotBracketed(f64),
    #[error("degenerate moment: {0}")]
    DegenerateMoment(String),
    #[error("degenerate denominator in eigenvector correction")]
    DegenerateDenominator,
    #[error("spike at {0} is not informative")]
    NotInformative(f64),
    #[error("degenerate variance in decision rule")]
    DegenerateVariance,
    #[error("no isolated eigenvalue outside the bulk")]
    NoIsolatedEigenvalue,
    #[error("mixture fit degenerated: {0}")]
    EmDegenerate(String),
    #[error("class {0} is empty")]
    EmptyClass(usize),
    #[error("label count mismatch: {0}")]
    KMismatch(String),
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
