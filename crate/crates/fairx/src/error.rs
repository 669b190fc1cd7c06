use thiserror::Error;

/// Errors raised by market validation and the solver pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("endowment of node {0:?} must be positive")]
    NonPositiveEndowment(String),
    #[error("self loop on node {0:?}")]
    SelfLoop(String),
    #[error("duplicate edge between {0:?} and {1:?}")]
    DuplicateEdge(String, String),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("allocation does not match market: {0}")]
    AllocationMismatch(String),
    #[error("ratio vectors are defined on different node sets")]
    DimensionMismatch,
    #[error("lambda must be nonnegative")]
    NegativeLambda,
    #[error("market has no edges")]
    EmptyEdgeSet,
    #[error("input allocation is not a max-min optimum: {0}")]
    NotOptimalInput(String),
    #[error("cross-level transportation problem infeasible: {0}")]
    InfeasibleTransport(String),
    #[error("input allocation is not lex-optimal: {0}")]
    NotLexOptimalInput(String),
    #[error("instance has {nodes} nodes, exceeding the coalition enumeration cap {cap}")]
    InstanceTooLarge { nodes: usize, cap: usize },
    #[error("convergence report requires a reference solution")]
    MissingReference,
    #[error("invalid rational literal {0:?}")]
    BadRational(String),
}

pub type Result<T> = std::result::Result<T, Error>;
