use thiserror::Error;

/// Library-wide error type. The CLI maps these onto exit codes, so the
/// distinction between input problems, blown resource caps, and violated
/// runtime invariants is load-bearing.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("points are equal; not an asymptotic pair")]
    EqualPoints,

    #[error("points differ unboundedly far to the left; not an asymptotic pair")]
    NotAsymptotic,

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("family incomplete: {0}")]
    FamilyIncomplete(String),

    #[error("invalid orbit cocycle: {0}")]
    InvalidCocycle(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("refused: {0}")]
    Refused(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
