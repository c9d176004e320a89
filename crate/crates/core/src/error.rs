use thiserror::Error;

/// Errors raised by graph, chain and lift operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is not (strongly) connected")]
    DisconnectedGraph,
    #[error("allowed arcs do not connect every node to root {root}")]
    NoSpanningTree { root: usize },
    #[error("{n} nodes exceeds the limit of {max} for this operation")]
    TooManyNodes { n: usize, max: usize },
    #[error("bad size: {0}")]
    BadSize(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("matrix is not column-stochastic: {0}")]
    NotStochastic(String),
    #[error("transition {from} -> {to} violates graph locality")]
    NotLocal { from: usize, to: usize },
    #[error("chain is reducible; use a seeded lifted stationary distribution instead")]
    ReducibleChain,
    #[error("distribution is not stationary for the chain (residual {residual:.3e})")]
    NotStationary { residual: f64 },
    #[error("cut has zero stationary weight")]
    EmptyCutWeight,
    #[error("linear program failed: {0}")]
    InfeasibleLp(String),
    #[error("gamma {gamma} outside the admissible range (0, {max})")]
    BadGamma { gamma: f64, max: f64 },
    #[error("scenario (S) requires an initialization map")]
    MissingInitMap,
    #[error("bad fiber choice map: {0}")]
    BadChoiceMap(String),
    #[error("Cesaro average did not converge within {steps} steps")]
    NoConvergence { steps: usize },
    #[error("marginal of the lifted stationary distribution vanishes at base node {0}")]
    ZeroMarginalSupport(usize),
    #[error("time-varying chain has no steps")]
    EmptyChain,
    #[error("per-node chains have mismatched lengths or dimensions: {0}")]
    LengthMismatch(String),
    #[error("gamma too large: {0}")]
    GammaTooLarge(String),
    #[error("a reference chain is required for this variant or scenario")]
    MissingReferenceChain,
    #[error("corrected chain has entry {value:.3e} at ({row}, {col}) outside [0, 1]")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("gamma {gamma} too large for delta {delta}: epsilon = {epsilon} not in (0, 1)")]
    GammaTooLargeForDelta { gamma: f64, delta: f64, epsilon: f64 },
    #[error("invalid lift: {0}")]
    InvalidLift(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
