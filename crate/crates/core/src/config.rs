use crate::error::{Result, SamgdaError};
use crate::point::PrimalDualPoint;
use crate::problem::feasible_step_range;

/// How the inner maximization over v is driven.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerMode {
    /// Solve the v-maximization exactly: closed form when the problem exposes
    /// one, otherwise iterate until the inner residual falls below the
    /// configured tolerance (default 1e-12).
    Exact,
    /// Run a fixed number J of inner proximal gradient ascent steps.
    Steps(usize),
    /// Iterate until the inner residual falls below this tolerance.
    Tolerance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub inner: InnerMode,
    pub outer_steps: usize,
    /// Tolerance used when `inner == Exact` and no closed form exists.
    pub inner_tolerance: f64,
    pub backtracking_tau0: Option<f64>,
    pub backtracking_delta: Option<f64>,
    /// Optional early stop once the stationarity residual drops below this.
    pub residual_stop: Option<f64>,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(tau: f64, inner: InnerMode, outer_steps: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SamgdaError::InvalidConfig(format!(
                "tau must be positive and finite, got {tau}"
            )));
        }
        if outer_steps == 0 {
            return Err(SamgdaError::InvalidConfig("outer_steps must be >= 1".into()));
        }
        Ok(SolverConfig {
            tau,
            inner,
            outer_steps,
            inner_tolerance: 1e-12,
            backtracking_tau0: None,
            backtracking_delta: None,
            residual_stop: None,
            seed: 0,
        })
    }

    /// Midpoint of the feasible interval (rho/(1-rho L), 1/(L+Lhat)).
    pub fn from_feasible_midpoint(
        l: f64,
        l_hat: f64,
        rho: f64,
        inner: InnerMode,
        outer_steps: usize,
    ) -> Result<Self> {
        let (lo, hi) = feasible_step_range(l, l_hat, rho)?;
        SolverConfig::new(0.5 * (lo + hi), inner, outer_steps)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_residual_stop(mut self, eps: f64) -> Self {
        self.residual_stop = Some(eps);
        self
    }

    pub fn with_backtracking(mut self, tau0: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SamgdaError::InvalidConfig(format!(
                "backtracking delta must lie in (0,1), got {delta}"
            )));
        }
        if tau0.is_nan() || tau0 <= 0.0 {
            return Err(SamgdaError::InvalidConfig(format!(
                "backtracking tau0 must be positive, got {tau0}"
            )));
        }
        self.backtracking_tau0 = Some(tau0);
        self.backtracking_delta = Some(delta);
        Ok(self)
    }
}

/// One outer-iteration record. Record 0 carries the initial point with the
/// step-difference metrics left undefined.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub k: usize,
    pub point: PrimalDualPoint,
    /// D_h(x_k, x_{k-1}) when the generator has a value oracle.
    pub bregman_gap: Option<f64>,
    /// Generator residual ||grad h(x_{k-1}) - grad h(x_k)||.
    pub generator_residual: Option<f64>,
    /// Prox-gradient stationarity residual at the iterate.
    pub residual_norm: f64,
    pub tau_k: f64,
    pub inner_used: usize,
    pub elapsed: f64,
}

/// Per-run iterate history.
#[derive(Debug, Clone, Default)]
pub struct IterateTrace {
    pub records: Vec<TraceRecord>,
}

impl IterateTrace {
    pub fn push(&mut self, rec: TraceRecord) {
        debug_assert_eq!(rec.k, self.records.len());
        self.records.push(rec);
    }

    pub fn last_point(&self) -> Option<&PrimalDualPoint> {
        self.records.last().map(|r| &r.point)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Smallest residual over all records; the empirical error floor.
    pub fn residual_floor(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.residual_norm)
            .fold(f64::INFINITY, f64::min)
    }
}
