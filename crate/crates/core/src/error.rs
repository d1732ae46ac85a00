use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("self set is empty")]
    EmptySamples,

    /// Negative selection could not fill the detector set within the candidate budget.
    #[error("node {node}: generated {accepted}/{requested} detectors at r={r} within {budget} candidates; self set over-constrains the detector space")]
    GenerationBudget {
        node: u32,
        r: usize,
        requested: usize,
        accepted: usize,
        budget: u64,
    },

    #[error("every candidate detector matched the self set at r = l")]
    AllCandidatesRejected,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
