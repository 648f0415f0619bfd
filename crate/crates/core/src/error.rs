use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("one-particle vectors live on different grids")]
    GridMismatch,
    #[error("operators are built on different mode bases")]
    BasisMismatch,
    #[error("evaluation failed at node {node}: {message}")]
    Evaluation { node: usize, message: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("vector lies outside the mode span (relative residual {residual:.3e})")]
    OutOfSpan { residual: f64 },
    #[error("capacity exceeded: {requested} modes requested, maximum is {max}")]
    Capacity { requested: usize, max: usize },
    #[error("empty basis: every input vector was numerically dependent")]
    EmptyBasis,
    #[error("structural error: {0}")]
    Structural(String),
    #[error("profile does not decay at the span ends (ratio {ratio:.3e} to peak)")]
    Span { ratio: f64 },
    #[error("continuation left the domain: norm grew by a factor {growth:.3e}")]
    DomainViolation { growth: f64 },
    #[error("operator is not a projection (defect {0:.3e})")]
    NotProjection(f64),
    #[error("pair is not orthonormal (defect {0:.3e})")]
    NonOrthonormal(f64),
    #[error("coherence gate failed at n = {n}: |kappa| = {value:.3e}")]
    CoherenceGate { n: usize, value: f64 },
}

impl Error {
    /// Process exit status used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } => 3,
            _ => 2,
        }
    }
}
