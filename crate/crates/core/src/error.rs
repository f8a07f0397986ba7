use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("agents are collocated; the dominance region is undefined")]
    Collocated,
    #[error("speed ratio {0} is outside (0, 1)")]
    SpeedRatio(f64),
    #[error("region is empty")]
    EmptyRegion,
    #[error("no feasible head-on engagement exists for these parameters")]
    NoFeasibleEngagement,
    #[error("dominance region has no extractable boundary")]
    NoBoundary,
    #[error("index {0} is out of range (must be >= 1)")]
    Index(usize),
    #[error("Markov chain is degenerate (1 + p1 - p2 = 0); no unique stationary distribution")]
    DegenerateChain,
}
