use thiserror::Error;

/// Errors raised while building or analyzing a matrix-weighted network.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("weight on edge ({i}, {j}) is asymmetric: max |A - A^T| = {deviation:e}")]
    AsymmetricWeight { i: usize, j: usize, deviation: f64 },

    #[error("weight on edge ({i}, {j}) is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveSemidefinite { i: usize, j: usize, min_eigenvalue: f64 },

    #[error("weight on edge ({i}, {j}) is the zero matrix; omit the edge instead")]
    ZeroWeight { i: usize, j: usize },

    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },

    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),

    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subspaces live in different ambient spaces (R^{0} vs R^{1})")]
    AmbientMismatch(usize, usize),

    #[error("symmetric eigensolver did not converge")]
    EigensolverFailure,

    #[error("graph does not reach consensus (nullspace dimension {nullspace_dim} > d = {d})")]
    NotConsensusGraph { nullspace_dim: usize, d: usize },

    #[error("vertex sequence is not a path: {0}")]
    NotAPath(String),

    #[error("invalid vertex set: {0}")]
    InvalidVertexSet(String),

    #[error("step {step} exceeds the stability bound {bound}")]
    StepTooLarge { step: f64, bound: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("trajectory did not converge")]
    NotConverged,

    #[error("disagreement vector vanishes; no decay window to fit")]
    DegenerateWindow,

    #[error("bearing on ({i}, {j}) is not a unit vector (norm {norm})")]
    NotUnitVector { i: usize, j: usize, norm: f64 },

    #[error("inconsistent bearings on ({i}, {j}): {reason}")]
    InconsistentBearings { i: usize, j: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
