use thiserror::Error;

/// Errors surfaced by problem construction, geometry, and solver drivers.
#[derive(Debug, Error)]
pub enum SamgdaError {
    #[error("degenerate coupling: all partial Lipschitz constants are zero")]
    DegenerateCoupling,

    #[error("weak-MVI constant too large for SA-MGDA: rho = {rho} >= 1/(2L+Lhat) = {limit}")]
    RhoTooLarge { rho: f64, limit: f64 },

    #[error("oracle failure at x: non-finite value in {context}")]
    OracleFailure { context: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("generator has no value oracle; use residual metric")]
    NoValueOracle,

    #[error("no closed-form resolvent available for this problem/generator pair")]
    NoClosedForm,

    #[error("inner divergence: non-finite values in the inner ascent loop")]
    InnerDivergence,

    #[error("oracle nonconvergence: inner iteration cap exceeded (residual {residual})")]
    OracleNonconvergence { residual: f64 },

    #[error("backtracking stalled: shrink count exceeded {cap}")]
    BacktrackingStalled { cap: usize },

    #[error("preconditioner not positive definite: tau = {tau} >= 1/||B|| = {limit}")]
    PreconditionerIndefinite { tau: f64, limit: f64 },

    #[error("square root argument negative: rho*L/2 must be < 1")]
    SqrtArgNegative,

    #[error("degenerate data: class {class} is empty")]
    DegenerateData { class: usize },

    #[error("resampling cap exceeded while drawing a well-conditioned matrix")]
    ResamplingCapExceeded,

    #[error("non-separable mirror map rejected; supply per-block psi pieces")]
    NonSeparableMirror,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("error at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<SamgdaError>,
    },
}

impl SamgdaError {
    pub fn at_iteration(self, iteration: usize) -> Self {
        SamgdaError::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, SamgdaError>;
