use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("point ({x:.3}, {y:.3}) is not in a free cell")]
    BlockedPoint { x: f64, y: f64 },
    #[error("no valid start/goal pair after {0} attempts")]
    EpisodeSampling(usize),
    #[error("step called on a finished episode")]
    EpisodeFinished,
    #[error("SPL requires at least one episode outcome")]
    EmptyOutcomes,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("run has no evaluation reports")]
    NoEvaluations,
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
