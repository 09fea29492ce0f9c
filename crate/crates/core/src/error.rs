use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SoncError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("variable x{index} out of range for {n} variables")]
    VariableOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not in the simplex (barycentric coordinates missing or negative)")]
    NotInSimplex,

    #[error("simplex vertices are affinely dependent")]
    DegenerateSimplex,

    #[error("support is degenerate: affine dimension {dim} in ambient dimension {ambient}")]
    DegenerateSupport { dim: usize, ambient: usize },

    #[error("Newton polytope is not a simplex ({vertices} vertices in dimension {dim})")]
    NotSimplex { vertices: usize, dim: usize },

    #[error("hull vertex {vertex} is not a monomial square: {reason}")]
    ClubsuitViolated { vertex: String, reason: String },

    #[error("exponent {0} is not a vertex of the Newton polytope")]
    TargetNotVertex(String),

    #[error("circuit polynomial has no tail term")]
    NoTailTerm,

    #[error("shift produces a negative exponent")]
    NegativeExponent,

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("program hypothesis violated at {exponent}: {reason}")]
    HypothesisViolated { exponent: String, reason: String },

    #[error("tail {0} is not covered by any piece carrying a weight")]
    TailNotCovered(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid triangulation: {0}")]
    InvalidTriangulation(String),

    #[error("certificate reconstruction failed: {0}")]
    ReconstructionFailure(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, SoncError>;
