use std::io;
use std::path::PathBuf;

use attrnet::estimation::EstimationError;
use attrnet::graph::io::EdgeListError;
use attrnet::graph::GraphError;
use attrnet::ingest::IngestError;
use attrnet::likelihood::LikelihoodError;
use attrnet::mcmc::McmcError;
use attrnet::model::io::FormatError;
use attrnet::model::ModelError;
use attrnet::rank::RankError;
use attrnet::stats::StatsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: FormatError },
    #[error("{}: {source}", path.display())]
    EdgeList { path: PathBuf, source: EdgeListError },
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
    #[error(transparent)]
    Mcmc(#[from] McmcError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{count} replica(s) failed; first: {first}")]
    ReplicasFailed { count: usize, first: String },
    #[error("step {step}: {source}")]
    Step { step: String, source: Box<CliError> },
}

impl CliError {
    /// 1 for bad invocations, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => 1,
            Self::Step { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    pub fn in_step(step: impl Into<String>) -> impl FnOnce(CliError) -> Self {
        let step = step.into();
        move |e| Self::Step { step, source: Box::new(e) }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
