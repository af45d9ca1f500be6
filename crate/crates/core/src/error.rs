use std::path::PathBuf;

use thiserror::Error;

use crate::graph::RelationId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: no records found")]
    EmptyInput(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot place {requested} acyclic rules over {relations} relations: {reason}")]
    InfeasibleRules {
        requested: usize,
        relations: usize,
        reason: String,
    },

    #[error("rule set is cyclic: {0:?}")]
    CyclicRules(Vec<Vec<RelationId>>),

    #[error("subsampling infeasible: {0}")]
    InfeasibleSubsample(String),

    #[error("id space exhausted: {needed} {kind} ids requested, only {available} available")]
    IdSpaceExhausted {
        kind: &'static str,
        needed: usize,
        available: u64,
    },

    #[error("no template for relation `{0}`")]
    MissingTemplate(String),

    #[error("eval question {index} failed validation: {reason}")]
    InvalidQuestion { index: usize, reason: String },

    #[error("the largest component of the graph has no edges to walk")]
    EmptyComponent,

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("scaling fit: {0}")]
    Fit(String),

    #[error("schema mismatch in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps `self` with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
