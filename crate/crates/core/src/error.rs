use thiserror::Error;

/// Failures of the numerical routines.
///
/// Scalars are stored as `f64` regardless of the working precision.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {found} does not match grid node count {expected}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inadmissible strategy: mean(alpha) = {mean_alpha} must be < mean(K) = {mean_k}")]
    Inadmissible { mean_alpha: f64, mean_k: f64 },

    #[error("infeasible constraints: V0 = {v0}, kappa = {kappa}")]
    Infeasible { v0: f64, kappa: f64 },

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("steady state collapsed to zero although the positive branch exists")]
    LostPositiveBranch,

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("linear operator is not positive definite")]
    Indefinite,

    #[error("Neumann problem incompatible: right-hand side has mean {mean:e}")]
    Incompatible { mean: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    EigenNotConverged { iterations: usize },

    #[error("{stage}: solution blew up at t = {time}")]
    BlowUp { stage: &'static str, time: f64 },

    #[error("fokker-planck: negative density {value:e} at t = {time}")]
    NegativeMass { value: f64, time: f64 },

    #[error("{stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
