//! Problem abstractions shared by all solvers: the composite minimax problem
//! min_u max_v f(u) + phi(u,v) - g(v), its first-order oracles, and the
//! derived constants used to size step ranges.

use std::sync::Arc;

use crate::error::{Result, SamgdaError};
use crate::point::{vnorm, vsub, PrimalDualPoint};

pub type ValueOracle = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type GradOracle = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type ProxFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// The smooth coupling phi(u, v) with its partial gradients and partial
/// Lipschitz constants. The value oracle may be absent: some problems are
/// specified directly through the saddle-differential operator.
#[derive(Clone)]
pub struct SmoothCoupling {
    pub value: Option<ValueOracle>,
    pub grad_u: GradOracle,
    pub grad_v: GradOracle,
    pub l_uu: f64,
    pub l_uv: f64,
    pub l_vu: f64,
    pub l_vv: f64,
}

impl SmoothCoupling {
    pub fn value_at(&self, u: &[f64], v: &[f64]) -> Option<f64> {
        self.value.as_ref().map(|f| f(u, v))
    }

    pub fn grad_u_at(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        (self.grad_u)(u, v)
    }

    pub fn grad_v_at(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        (self.grad_v)(u, v)
    }

    /// Full gradient (grad_u, grad_v) as a point-shaped pair.
    pub fn grad_at(&self, x: &PrimalDualPoint) -> PrimalDualPoint {
        PrimalDualPoint {
            u: self.grad_u_at(&x.u, &x.v),
            v: self.grad_v_at(&x.u, &x.v),
        }
    }
}

/// A closed proper convex function accessed through its value and prox oracles.
/// The value is extended-real: `f64::INFINITY` encodes indicator constraints.
#[derive(Clone)]
pub struct ProxableFunction {
    pub value: ScalarFn,
    pub prox: ProxFn,
}

impl ProxableFunction {
    /// The zero function; its prox is the identity for every step.
    pub fn zero() -> Self {
        ProxableFunction {
            value: Arc::new(|_| 0.0),
            prox: Arc::new(|z, _| z.to_vec()),
        }
    }

    /// Indicator of the box [lo, hi]^d; prox is the clamp.
    pub fn box_indicator(lo: f64, hi: f64) -> Self {
        ProxableFunction {
            value: Arc::new(move |z| {
                if z.iter().all(|&x| x >= lo && x <= hi) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }),
            prox: Arc::new(move |z, _| z.iter().map(|&x| x.clamp(lo, hi)).collect()),
        }
    }

    /// Indicator of the probability simplex; prox is the exact Euclidean
    /// projection (sort-based).
    pub fn simplex_indicator() -> Self {
        ProxableFunction {
            value: Arc::new(|z| {
                let sum: f64 = z.iter().sum();
                if z.iter().all(|&x| x >= -1e-12) && (sum - 1.0).abs() <= 1e-9 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }),
            prox: Arc::new(|z, _| project_simplex(z)),
        }
    }

    pub fn value_at(&self, z: &[f64]) -> f64 {
        (self.value)(z)
    }

    pub fn prox_at(&self, z: &[f64], step: f64) -> Vec<f64> {
        (self.prox)(z, step)
    }
}

/// Euclidean projection onto {x >= 0, sum x = 1} by the sort-and-threshold rule.
pub fn project_simplex(z: &[f64]) -> Vec<f64> {
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &zi) in sorted.iter().enumerate() {
        cumsum += zi;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if zi - t > 0.0 {
            theta = t;
        }
    }
    z.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Affine structure M_phi(x) = A x + b, when the saddle-differential is affine.
/// Unlocks closed-form resolvents (dense linear solves).
#[derive(Clone, Debug)]
pub struct AffineOperator {
    /// Dense d x d matrix in row-major order, d = du + dv.
    pub matrix: nalgebra::DMatrix<f64>,
    pub offset: nalgebra::DVector<f64>,
}

/// The composite minimax problem bundle. Immutable after construction; all
/// oracles are pure and callable from multiple threads.
#[derive(Clone)]
pub struct CompositeMinimaxProblem {
    pub du: usize,
    pub dv: usize,
    pub f: ProxableFunction,
    pub g: ProxableFunction,
    pub coupling: SmoothCoupling,
    /// Lipschitz constant of M_phi. Caller-supplied for analytic problems
    /// (it can be tighter than the aggregate bound), estimated otherwise.
    pub lipschitz: f64,
    pub known_solution: Option<PrimalDualPoint>,
    pub rho: Option<f64>,
    pub mu: Option<f64>,
    pub domain_diameter: Option<f64>,
    /// Set when M_phi is affine and f, g permit a direct linear resolvent.
    pub affine: Option<AffineOperator>,
}

impl CompositeMinimaxProblem {
    pub fn l_hat(&self) -> f64 {
        weak_monotonicity_constant(self.coupling.l_uu, self.coupling.l_vv)
    }

    /// Single-valued part of the saddle-differential:
    /// M_phi x = (grad_u phi(x), -grad_v phi(x)).
    pub fn saddle_differential(&self, x: &PrimalDualPoint) -> Result<PrimalDualPoint> {
        x.check_finite("saddle_differential input")?;
        let gu = self.coupling.grad_u_at(&x.u, &x.v);
        let gv = self.coupling.grad_v_at(&x.u, &x.v);
        let m = PrimalDualPoint {
            u: gu,
            v: gv.iter().map(|x| -x).collect(),
        };
        m.check_finite("saddle_differential output")?;
        Ok(m)
    }

    /// Prox-gradient stationarity residual with unit step:
    /// ||x - (prox_f[u - grad_u phi], prox_g[v + grad_v phi])||.
    /// Reduces to ||M_phi x|| for unconstrained problems.
    pub fn stationarity_residual(&self, x: &PrimalDualPoint) -> f64 {
        let s = 1.0;
        let gu = self.coupling.grad_u_at(&x.u, &x.v);
        let gv = self.coupling.grad_v_at(&x.u, &x.v);
        let pu = self
            .f
            .prox_at(&crate::point::vaxpy(&x.u, -s, &gu), s);
        let pv = self.g.prox_at(&crate::point::vaxpy(&x.v, s, &gv), s);
        let ru = vnorm(&vsub(&x.u, &pu));
        let rv = vnorm(&vsub(&x.v, &pv));
        (ru * ru + rv * rv).sqrt() / s
    }
}

/// Aggregated Lipschitz bound sqrt(Luu^2 + Lvu^2 + Luv^2 + Lvv^2) for
/// grad phi and M_phi.
pub fn aggregate_lipschitz(l_uu: f64, l_uv: f64, l_vu: f64, l_vv: f64) -> Result<f64> {
    let sq = l_uu * l_uu + l_uv * l_uv + l_vu * l_vu + l_vv * l_vv;
    if sq == 0.0 {
        return Err(SamgdaError::DegenerateCoupling);
    }
    Ok(sq.sqrt())
}

/// Weak-monotonicity constant of the composite saddle operator:
/// gamma = max{Luu, Lvv}, also written Lhat.
pub fn weak_monotonicity_constant(l_uu: f64, l_vv: f64) -> f64 {
    l_uu.max(l_vv)
}

/// Step-size interval (rho/(1 - rho L), 1/(L + Lhat)) for the semi-anchored
/// outer loop. Requires rho < 1/(2L + Lhat) so the interval is nonempty.
pub fn feasible_step_range(l: f64, l_hat: f64, rho: f64) -> Result<(f64, f64)> {
    let limit = 1.0 / (2.0 * l + l_hat);
    if rho >= limit {
        return Err(SamgdaError::RhoTooLarge { rho, limit });
    }
    let lo = if rho == 0.0 { 0.0 } else { rho / (1.0 - rho * l) };
    let hi = 1.0 / (l + l_hat);
    Ok((lo, hi))
}

/// Inner step size eta = tau / (1 + 2 Lvv tau); satisfies
/// eta (1/tau + 2 Lvv) = 1 exactly.
pub fn eta_from_tau(tau: f64, l_vv: f64) -> f64 {
    tau / (1.0 + 2.0 * l_vv * tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn aggregate_lipschitz_examples() {
        assert_relative_eq!(aggregate_lipschitz(1.0, 1.0, 1.0, 1.0).unwrap(), 2.0);
        // toy-1 constants
        let l = aggregate_lipschitz(0.125, 0.992157, 0.992157, 0.125).unwrap();
        assert_relative_eq!(l, std::f64::consts::SQRT_2, epsilon = 1e-6);
        // symmetric diagonal case
        for &c in &[0.5, 2.0, 7.0] {
            assert_relative_eq!(
                aggregate_lipschitz(c, 0.0, 0.0, c).unwrap(),
                2f64.sqrt() * c
            );
        }
        assert!(aggregate_lipschitz(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn weak_monotonicity_examples() {
        assert_relative_eq!(weak_monotonicity_constant(0.125, 0.125), 0.125);
        assert_relative_eq!(weak_monotonicity_constant(0.0, 0.0), 0.0);
        assert_relative_eq!(weak_monotonicity_constant(3.0, 1.0), 3.0);
    }

    #[test]
    fn feasible_step_range_examples() {
        let (lo, hi) = feasible_step_range(1.0, 0.125, 0.25).unwrap();
        assert_relative_eq!(lo, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 8.0 / 9.0, epsilon = 1e-12);

        let (lo, hi) = feasible_step_range(2.0, 0.5, 0.0).unwrap();
        assert_relative_eq!(lo, 0.0);
        assert_relative_eq!(hi, 0.4);

        // 1/3 = 1/(2+1) violates the strict inequality
        assert!(feasible_step_range(1.0, 1.0, 1.0 / 3.0).is_err());
    }

    #[test]
    fn eta_from_tau_examples() {
        // paper's worked constants: tau = 2/(3L), Lvv = L/2
        let l = 1.7;
        let tau = 2.0 / (3.0 * l);
        let eta = eta_from_tau(tau, l / 2.0);
        assert_relative_eq!(eta, 2.0 / (5.0 * l), epsilon = 1e-15);
        assert_relative_eq!(eta / tau, 3.0 / 5.0, epsilon = 1e-15);
        assert_relative_eq!(2.0 * eta * (l / 2.0), 2.0 / 5.0, epsilon = 1e-15);

        assert_relative_eq!(eta_from_tau(0.25, 1.0), 1.0 / 6.0, epsilon = 1e-15);
        // tau -> 0 limit
        assert_relative_eq!(eta_from_tau(1e-12, 5.0), 1e-12, epsilon = 1e-22);
    }

    #[test]
    fn simplex_projection_examples() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        for x in &p {
            assert_relative_eq!(*x, 1.0 / 3.0, epsilon = 1e-12);
        }
        let p = project_simplex(&[1.2, 0.3, -0.5]);
        assert_relative_eq!(p[0], 0.95, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.05, epsilon = 1e-12);
        assert_relative_eq!(p[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn prox_of_zero_is_identity() {
        let f = ProxableFunction::zero();
        let z = vec![1.0, -2.0, 3.5];
        assert_eq!(f.prox_at(&z, 0.3), z);
    }

    #[test]
    fn box_prox_clamps() {
        let f = ProxableFunction::box_indicator(-1.1, 1.1);
        assert_eq!(f.prox_at(&[1.3], 0.5), vec![1.1]);
        assert_eq!(f.prox_at(&[-4.0], 0.5), vec![-1.1]);
        assert_eq!(f.value_at(&[0.5]), 0.0);
        assert_eq!(f.value_at(&[1.2]), f64::INFINITY);
    }
}
