use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input vector is empty")]
    EmptyInput,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid factorization: P = {p} is not M·N = {m}·{n}")]
    InvalidFactorization { p: usize, m: usize, n: usize },

    #[error("unknown channel case {0} (expected 1..=4)")]
    UnknownCase(u8),

    #[error("invalid channel configuration: {0}")]
    InvalidConfig(String),

    #[error("expected a {expected} matrix, got {got}")]
    WrongDomain { expected: &'static str, got: &'static str },

    #[error("window of 2·{l_c}+1 entries exceeds column length {p}")]
    WindowTooLarge { l_c: usize, p: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("path set is empty")]
    EmptyPathSet,

    #[error("delay {delay} is outside [0, {p})")]
    DelayOutOfRange { delay: f64, p: usize },

    #[error("normal-equation matrix is singular (pivot {pivot} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("scheme {scheme} cannot be equalized in the {domain} domain")]
    IncompatibleScheme { scheme: &'static str, domain: &'static str },

    #[error("missing input: {0}")]
    MissingInput(&'static str),

    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
