use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("volume term undefined for odd test functions")]
    OddVolumeTerm,

    #[error("regularity norm diverges: decay exponent {decay} is too small for delta = {delta}")]
    Divergent { decay: f64, delta: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("spectrum schema violation: {0}")]
    Schema(String),

    #[error("invalid geodesic record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },

    #[error("duplicate geodesic record {index} (same as record {first})")]
    DuplicateRecord { index: usize, first: usize },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("checksum error: {0}")]
    Checksum(String),

    #[error("parity mismatch: {kind} requires an {expected} test function")]
    ParityMismatch { kind: String, expected: &'static str },

    #[error("test function support radius {support} exceeds cutoff R = {cutoff}")]
    SupportExceedsCutoff { support: f64, cutoff: f64 },

    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("matrix is not positive definite at tau = {tau}, k = {k}")]
    NotPositiveDefinite { tau: f64, k: u32 },

    #[error("refine grid: {0}")]
    RefineGrid(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("no circumcenter: the bisector line does not meet the hyperboloid")]
    NoCircumcenter,

    #[error("triangulation rejected: {0}")]
    MissingCircumcenters(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("infeasible equivariance constraints: {0}")]
    Infeasible(String),

    #[error("invalid piercing sequence: {0}")]
    InvalidPiercing(String),

    #[error("piercing sequence {0} is outside the computed cases (empty, (+,-), (+,-,+,-)); the general rule needs the theta-function analysis of the self-conjugate case")]
    UnsupportedPiercing(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("certificate replay failed: {0}")]
    Replay(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
