use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite derivative encountered at step {step}")]
    NumericOverflow { step: usize },
    #[error("integration diverged at step {step}")]
    Diverged { step: usize },
    #[error("simulation {simulation} diverged at step {step}")]
    SimulationDiverged { simulation: usize, step: usize },
    #[error("trajectory with h = {h} diverged at step {step}")]
    EstimateDiverged { h: f64, step: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("matrix is not positive definite (last jitter tried: {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },
    #[error("hyperparameter optimization failed: no candidate could be factorized")]
    OptimizationFailed,
    #[error("predictive variance {0:e} is negative beyond rounding tolerance")]
    NegativeVariance(f64),
    #[error("design matrix is singular even after ridge regularization")]
    SingularDesign,
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("empty sample")]
    EmptySample,
    #[error("incompatible histograms: {0}")]
    IncompatibleHistogram(&'static str),
    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Name of the outermost stage, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
