use std::path::PathBuf;

use crate::obstacle::EpsStep;
use crate::operator::ScalarField;
use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its admissible range (α, tolerances, counts).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The point set violates a structural invariant.
    #[error("invalid point set: {0}")]
    Geometry(String),

    /// A mathematical precondition does not hold (e.g. β ≥ α for a barrier).
    #[error("domain error: {0}")]
    Domain(String),

    /// The call is well-formed but not meaningful for these arguments.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("bracket expansion for point {index} exceeded {doublings} doublings")]
    Divergence { index: usize, doublings: u32 },

    #[error(
        "no convergence after {} sweeps (last change {:e}, residual {:e})",
        .0.report.sweeps_used, .0.report.final_change, .0.report.final_residual
    )]
    NotConverged(Box<PartialSolve>),

    #[error("continuation step {step} failed: {source}")]
    Continuation {
        step: usize,
        trace: Vec<EpsStep>,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", .path.display())]
    Parse { path: PathBuf, message: String },
}

/// Field and diagnostics at the point the sweep budget ran out.
#[derive(Debug)]
pub struct PartialSolve {
    pub field: ScalarField,
    pub report: SolveReport,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
