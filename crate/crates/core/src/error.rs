use thiserror::Error;

use crate::linalg::Factor;
use crate::solver::IterationTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{routine} did not converge after {iterations} iterations")]
    NoConvergence { routine: &'static str, iterations: usize },

    #[error("input not PSD at rank {rank}: eigenvalue {eigenvalue:e} below tolerance")]
    NotPsd { rank: usize, eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate objective: {0}")]
    DegenerateObjective(String),

    #[error("iteration diverged at step {}", .0.iteration)]
    Diverged(Box<Divergence>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// State captured when a run produces non-finite or exploding iterates.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub iteration: usize,
    pub last_finite: Factor,
    pub trace: IterationTrace,
}

impl Error {
    pub(crate) fn diverged(iteration: usize, last_finite: Factor, trace: IterationTrace) -> Self {
        Error::Diverged(Box::new(Divergence { iteration, last_finite, trace }))
    }
}
