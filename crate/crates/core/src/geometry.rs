//! Legendre distance generators, Bregman distances, and the h-resolvent
//! R = (grad h + M)^-1 grad h, computed in closed form where the problem
//! allows it and by inner proximal-gradient ascent otherwise.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SamgdaError};
use crate::point::{vaxpy, vnorm, vscale, vsub, PrimalDualPoint};
use crate::problem::{CompositeMinimaxProblem, SmoothCoupling};

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Separable mirror-map block: a Legendre reference function with value,
/// gradient, and inverse-gradient oracles.
#[derive(Clone)]
pub struct MirrorMap {
    pub value: ScalarFn,
    pub grad: VecFn,
    pub grad_inv: VecFn,
}

impl MirrorMap {
    /// psi = 1/2 ||.||^2; gradient and its inverse are the identity.
    pub fn energy() -> Self {
        MirrorMap {
            value: Arc::new(|z| 0.5 * z.iter().map(|x| x * x).sum::<f64>()),
            grad: Arc::new(|z| z.to_vec()),
            grad_inv: Arc::new(|z| z.to_vec()),
        }
    }

    /// Shannon entropy sum x_i log x_i on the positive orthant;
    /// grad = log x + 1, inverse grad = exp(z - 1).
    pub fn shannon_entropy() -> Self {
        MirrorMap {
            value: Arc::new(|z| z.iter().map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 }).sum()),
            grad: Arc::new(|z| z.iter().map(|&x| x.ln() + 1.0).collect()),
            grad_inv: Arc::new(|z| z.iter().map(|&x| (x - 1.0).exp()).collect()),
        }
    }
}

#[derive(Clone)]
pub enum GeneratorKind {
    /// h = 1/(2 tau) ||x||^2; the classical proximal point geometry.
    Energy { tau: f64 },
    /// h = 1/(2 tau) ||x||^2 - phi(x); the semi-anchored geometry.
    SemiAnchored { tau: f64 },
    /// h = 1/(2 tau)(||u||^2 + ||v||^2) - <u, B v>; the linear preconditioner.
    PdhgPreconditioner { tau: f64, b: DMatrix<f64> },
    /// h = (1/tau) psi - phi with separable psi; the non-Euclidean geometry.
    Mirror {
        tau: f64,
        psi_u: MirrorMap,
        psi_v: MirrorMap,
    },
}

/// A distance-generating Legendre function attached to a problem's coupling.
#[derive(Clone)]
pub struct LegendreGenerator {
    pub kind: GeneratorKind,
    coupling: Option<SmoothCoupling>,
    pub mu_h: f64,
    pub l_h: f64,
}

impl LegendreGenerator {
    pub fn energy(tau: f64) -> Self {
        LegendreGenerator {
            kind: GeneratorKind::Energy { tau },
            coupling: None,
            mu_h: 1.0 / tau,
            l_h: 1.0 / tau,
        }
    }

    /// Semi-anchored generator for a problem with Lipschitz constant L:
    /// mu_h = 1/tau - L and L_h = 1/tau + L.
    pub fn semi_anchored(tau: f64, problem: &CompositeMinimaxProblem) -> Self {
        let l = problem.lipschitz;
        LegendreGenerator {
            kind: GeneratorKind::SemiAnchored { tau },
            coupling: Some(problem.coupling.clone()),
            mu_h: 1.0 / tau - l,
            l_h: 1.0 / tau + l,
        }
    }

    /// PDHG preconditioner; requires tau in (0, 1/||B||).
    pub fn pdhg_preconditioner(tau: f64, b: DMatrix<f64>) -> Result<Self> {
        let sigma_max = b.clone().svd(false, false).singular_values[0];
        if tau * sigma_max >= 1.0 {
            return Err(SamgdaError::PreconditionerIndefinite {
                tau,
                limit: 1.0 / sigma_max,
            });
        }
        Ok(LegendreGenerator {
            kind: GeneratorKind::PdhgPreconditioner { tau, b },
            coupling: None,
            mu_h: 1.0 / tau - sigma_max,
            l_h: 1.0 / tau + sigma_max,
        })
    }

    /// Mirror generator h = (1/tau) psi - phi with psi separable across the
    /// u and v blocks. `l_rel` is the relative smoothness constant of phi
    /// with respect to psi.
    pub fn mirror(
        tau: f64,
        psi_u: MirrorMap,
        psi_v: MirrorMap,
        problem: &CompositeMinimaxProblem,
        l_rel: f64,
    ) -> Self {
        LegendreGenerator {
            kind: GeneratorKind::Mirror { tau, psi_u, psi_v },
            coupling: Some(problem.coupling.clone()),
            mu_h: 1.0 / tau - l_rel,
            l_h: 1.0 / tau + l_rel,
        }
    }

    pub fn tau(&self) -> f64 {
        match &self.kind {
            GeneratorKind::Energy { tau }
            | GeneratorKind::SemiAnchored { tau }
            | GeneratorKind::PdhgPreconditioner { tau, .. }
            | GeneratorKind::Mirror { tau, .. } => *tau,
        }
    }

    pub fn grad(&self, x: &PrimalDualPoint) -> PrimalDualPoint {
        match &self.kind {
            GeneratorKind::Energy { tau } => x.scale(1.0 / tau),
            GeneratorKind::SemiAnchored { tau } => {
                let g = self.coupling.as_ref().unwrap().grad_at(x);
                x.scale(1.0 / tau).sub(&g)
            }
            GeneratorKind::PdhgPreconditioner { tau, b } => {
                let u = DVector::from_column_slice(&x.u);
                let v = DVector::from_column_slice(&x.v);
                let gu = &u / *tau - b * &v;
                let gv = &v / *tau - b.transpose() * &u;
                PrimalDualPoint {
                    u: gu.as_slice().to_vec(),
                    v: gv.as_slice().to_vec(),
                }
            }
            GeneratorKind::Mirror { tau, psi_u, psi_v } => {
                let g = self.coupling.as_ref().unwrap().grad_at(x);
                let pu = (psi_u.grad)(&x.u);
                let pv = (psi_v.grad)(&x.v);
                PrimalDualPoint {
                    u: vsub(&vscale(&pu, 1.0 / tau), &g.u),
                    v: vsub(&vscale(&pv, 1.0 / tau), &g.v),
                }
            }
        }
    }

    pub fn value(&self, x: &PrimalDualPoint) -> Option<f64> {
        match &self.kind {
            GeneratorKind::Energy { tau } => {
                let n = x.norm();
                Some(n * n / (2.0 * tau))
            }
            GeneratorKind::SemiAnchored { tau } => {
                let c = self.coupling.as_ref().unwrap();
                let phi = c.value_at(&x.u, &x.v)?;
                let n = x.norm();
                Some(n * n / (2.0 * tau) - phi)
            }
            GeneratorKind::PdhgPreconditioner { tau, b } => {
                let u = DVector::from_column_slice(&x.u);
                let v = DVector::from_column_slice(&x.v);
                let n = x.norm();
                Some(n * n / (2.0 * tau) - u.dot(&(b * v)))
            }
            GeneratorKind::Mirror { tau, psi_u, psi_v } => {
                let c = self.coupling.as_ref().unwrap();
                let phi = c.value_at(&x.u, &x.v)?;
                Some(((psi_u.value)(&x.u) + (psi_v.value)(&x.v)) / tau - phi)
            }
        }
    }

    pub fn has_value_oracle(&self) -> bool {
        match &self.kind {
            GeneratorKind::Energy { .. } | GeneratorKind::PdhgPreconditioner { .. } => true,
            GeneratorKind::SemiAnchored { .. } | GeneratorKind::Mirror { .. } => self
                .coupling
                .as_ref()
                .map(|c| c.value.is_some())
                .unwrap_or(false),
        }
    }
}

/// D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>.
pub fn bregman_distance(
    h: &LegendreGenerator,
    x: &PrimalDualPoint,
    y: &PrimalDualPoint,
) -> Result<f64> {
    let hx = h.value(x).ok_or(SamgdaError::NoValueOracle)?;
    let hy = h.value(y).ok_or(SamgdaError::NoValueOracle)?;
    let gy = h.grad(y);
    Ok(hx - hy - gy.dot(&x.sub(y)))
}

/// ||grad h(x_prev) - grad h(x_next)||. When x_next is the exact resolvent of
/// x_prev this vector lies in M x_next, so the value upper-bounds the minimal
/// subgradient norm there.
pub fn residual_from_generator(
    h: &LegendreGenerator,
    x_prev: &PrimalDualPoint,
    x_next: &PrimalDualPoint,
) -> f64 {
    h.grad(x_prev).sub(&h.grad(x_next)).norm()
}

/// One inner proximal gradient ascent step of the semi-anchored v-loop:
/// v+ = prox_{eta g}[(eta/tau) anchor + 2 eta Lvv v + 2 eta grad_v phi(u+, v)].
/// The two convex-combination weights eta/tau and 2 eta Lvv sum to one.
/// For Lvv = 0 the update degenerates to the single exact step
/// prox_{tau g}[anchor + 2 tau grad_v phi(u+, v)].
pub fn inner_ascent_step(
    problem: &CompositeMinimaxProblem,
    u_next: &[f64],
    anchor: &[f64],
    v_cur: &[f64],
    tau: f64,
    eta: f64,
    l_vv: f64,
) -> Vec<f64> {
    let gv = problem.coupling.grad_v_at(u_next, v_cur);
    if l_vv > 0.0 {
        let mut arg = vscale(anchor, eta / tau);
        arg = vaxpy(&arg, 2.0 * eta * l_vv, v_cur);
        arg = vaxpy(&arg, 2.0 * eta, &gv);
        problem.g.prox_at(&arg, eta)
    } else {
        let arg = vaxpy(anchor, 2.0 * tau, &gv);
        problem.g.prox_at(&arg, tau)
    }
}

/// How the v-part of the resolvent is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolventMode {
    /// Require a closed form; error if none exists.
    ClosedForm,
    /// Closed form when available, else iterate to the given tolerance.
    ExactOrIterate(f64),
    /// Exactly J inner ascent steps (Algorithm-style finite inner loop).
    Inner(usize),
    /// Iterate to the given tolerance.
    InnerTol(f64),
}

#[derive(Debug, Clone)]
pub struct ResolventResult {
    pub point: PrimalDualPoint,
    pub inner_iterations: usize,
    pub inner_residual: f64,
    pub exact: bool,
}

const INNER_CAP: usize = 1_000_000;

/// Apply the h-resolvent of the problem's saddle-subdifferential at x.
pub fn resolvent(
    h: &LegendreGenerator,
    problem: &CompositeMinimaxProblem,
    x: &PrimalDualPoint,
    mode: ResolventMode,
) -> Result<ResolventResult> {
    x.check_finite("resolvent input")?;
    match &h.kind {
        GeneratorKind::Energy { tau } => energy_resolvent(problem, x, *tau),
        GeneratorKind::SemiAnchored { tau } => {
            semi_anchored_resolvent(h, problem, x, *tau, mode)
        }
        GeneratorKind::PdhgPreconditioner { tau, b } => pdhg_resolvent(problem, x, *tau, b),
        GeneratorKind::Mirror { tau, psi_u, psi_v } => {
            mirror_resolvent(problem, x, *tau, psi_u, psi_v, mode)
        }
    }
}

/// Classical proximal point step (I + tau M)^-1 x; closed form only for
/// affine unconstrained problems.
fn energy_resolvent(
    problem: &CompositeMinimaxProblem,
    x: &PrimalDualPoint,
    tau: f64,
) -> Result<ResolventResult> {
    let aff = problem.affine.as_ref().ok_or(SamgdaError::NoClosedForm)?;
    let d = x.dim();
    let mut sys = aff.matrix.clone();
    for i in 0..d {
        sys[(i, i)] += 1.0 / tau;
    }
    let rhs = DVector::from_vec(x.to_flat()) / tau - &aff.offset;
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or(SamgdaError::NoClosedForm)?;
    Ok(ResolventResult {
        point: PrimalDualPoint::from_flat(sol.as_slice(), x.du()),
        inner_iterations: 0,
        inner_residual: 0.0,
        exact: true,
    })
}

/// PDHG alternating update; this is the exact preconditioned resolvent.
fn pdhg_resolvent(
    problem: &CompositeMinimaxProblem,
    x: &PrimalDualPoint,
    tau: f64,
    b: &DMatrix<f64>,
) -> Result<ResolventResult> {
    let u = DVector::from_column_slice(&x.u);
    let v = DVector::from_column_slice(&x.v);
    let u_arg = &u - tau * (b * &v);
    let u_next = problem.f.prox_at(u_arg.as_slice(), tau);
    let un = DVector::from_column_slice(&u_next);
    let v_arg = &v + tau * (b.transpose() * (2.0 * &un - &u));
    let v_next = problem.g.prox_at(v_arg.as_slice(), tau);
    let point = PrimalDualPoint { u: u_next, v: v_next };
    point.check_finite("pdhg resolvent")?;
    Ok(ResolventResult {
        point,
        inner_iterations: 0,
        inner_residual: 0.0,
        exact: true,
    })
}

fn semi_anchored_resolvent(
    h: &LegendreGenerator,
    problem: &CompositeMinimaxProblem,
    x: &PrimalDualPoint,
    tau: f64,
    mode: ResolventMode,
) -> Result<ResolventResult> {
    // Single-valuedness needs mu_h = 1/tau - L > Lhat.
    if h.mu_h <= problem.l_hat() {
        return Err(SamgdaError::InvalidConfig(format!(
            "resolvent may be multivalued: 1/tau - L = {} <= Lhat = {}",
            h.mu_h,
            problem.l_hat()
        )));
    }
    let c = &problem.coupling;
    let gu = c.grad_u_at(&x.u, &x.v);
    let gv = c.grad_v_at(&x.u, &x.v);
    // u-step is a single exact prox-gradient update.
    let u_next = problem.f.prox_at(&vaxpy(&x.u, -tau, &gu), tau);
    if u_next.iter().any(|z| !z.is_finite()) {
        return Err(SamgdaError::InnerDivergence);
    }
    let anchor = vaxpy(&x.v, -tau, &gv);

    let l_vv = c.l_vv;
    match mode {
        ResolventMode::ClosedForm | ResolventMode::ExactOrIterate(_) => {
            if let Some(v_next) = closed_form_v(problem, &u_next, &anchor, tau)? {
                let point = PrimalDualPoint { u: u_next, v: v_next };
                point.check_finite("closed-form resolvent")?;
                return Ok(ResolventResult {
                    point,
                    inner_iterations: 0,
                    inner_residual: 0.0,
                    exact: true,
                });
            }
            match mode {
                ResolventMode::ClosedForm => Err(SamgdaError::NoClosedForm),
                _ => {
                    let tol = match mode {
                        ResolventMode::ExactOrIterate(t) => t,
                        _ => unreachable!(),
                    };
                    iterate_v(problem, &u_next, &anchor, x.v.clone(), tau, l_vv, None, tol)
                }
            }
        }
        ResolventMode::Inner(j) => {
            iterate_v(problem, &u_next, &anchor, x.v.clone(), tau, l_vv, Some(j), 0.0)
        }
        ResolventMode::InnerTol(tol) => {
            iterate_v(problem, &u_next, &anchor, x.v.clone(), tau, l_vv, None, tol)
        }
    }
}

/// Closed-form v-part when available: a dense linear solve for affine
/// unconstrained problems, or a single prox step when phi is linear in v.
fn closed_form_v(
    problem: &CompositeMinimaxProblem,
    u_next: &[f64],
    anchor: &[f64],
    tau: f64,
) -> Result<Option<Vec<f64>>> {
    if let Some(aff) = &problem.affine {
        // grad_v phi(u, v) = -(A_v x + b_v); solve
        // (1/tau I - 2 D) v = anchor/tau + 2 (C u+ + c0).
        let du = problem.du;
        let dv = problem.dv;
        let a = &aff.matrix;
        let mut sys = DMatrix::zeros(dv, dv);
        for i in 0..dv {
            for j in 0..dv {
                // D = -A[du+i][du+j]
                sys[(i, j)] = 2.0 * a[(du + i, du + j)];
            }
            sys[(i, i)] += 1.0 / tau;
        }
        let mut rhs = DVector::from_column_slice(anchor) / tau;
        for i in 0..dv {
            let mut cu = 0.0;
            for j in 0..du {
                cu += -a[(du + i, j)] * u_next[j];
            }
            rhs[i] += 2.0 * (cu - aff.offset[du + i]);
        }
        let sol = sys.lu().solve(&rhs).ok_or(SamgdaError::NoClosedForm)?;
        return Ok(Some(sol.as_slice().to_vec()));
    }
    if problem.coupling.l_vv == 0.0 {
        // phi linear in v: the degenerate single step is the exact maximizer.
        let gv = problem.coupling.grad_v_at(u_next, anchor);
        let arg = vaxpy(anchor, 2.0 * tau, &gv);
        return Ok(Some(problem.g.prox_at(&arg, tau)));
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn iterate_v(
    problem: &CompositeMinimaxProblem,
    u_next: &[f64],
    anchor: &[f64],
    v0: Vec<f64>,
    tau: f64,
    l_vv: f64,
    steps: Option<usize>,
    tol: f64,
) -> Result<ResolventResult> {
    let eta = crate::problem::eta_from_tau(tau, l_vv);
    let mut v = v0;
    let mut used = 0;
    let mut last_diff = f64::INFINITY;
    let cap = steps.unwrap_or(INNER_CAP);
    for _ in 0..cap {
        let v_next = inner_ascent_step(problem, u_next, anchor, &v, tau, eta, l_vv);
        if v_next.iter().any(|z| !z.is_finite()) {
            return Err(SamgdaError::InnerDivergence);
        }
        last_diff = vnorm(&vsub(&v_next, &v));
        v = v_next;
        used += 1;
        if steps.is_none() && last_diff <= tol {
            break;
        }
    }
    if steps.is_none() && last_diff > tol {
        return Err(SamgdaError::OracleNonconvergence {
            residual: last_diff,
        });
    }
    let exact = steps.is_none();
    let point = PrimalDualPoint {
        u: u_next.to_vec(),
        v,
    };
    point.check_finite("inner ascent result")?;
    Ok(ResolventResult {
        point,
        inner_iterations: used,
        inner_residual: if steps.is_none() { last_diff } else { f64::NAN },
        exact,
    })
}

fn mirror_resolvent(
    problem: &CompositeMinimaxProblem,
    x: &PrimalDualPoint,
    tau: f64,
    psi_u: &MirrorMap,
    psi_v: &MirrorMap,
    mode: ResolventMode,
) -> Result<ResolventResult> {
    let c = &problem.coupling;
    let gu = c.grad_u_at(&x.u, &x.v);
    let gv = c.grad_v_at(&x.u, &x.v);
    // u-step: grad psi(u+) = grad psi(u) - tau grad_u phi(x); mirror step.
    let u_next = (psi_u.grad_inv)(&vaxpy(&(psi_u.grad)(&x.u), -tau, &gu));
    if u_next.iter().any(|z| !z.is_finite()) {
        return Err(SamgdaError::InnerDivergence);
    }
    // v-step: fixed point of
    // grad psi(v+) = grad psi(v) - tau grad_v phi(x) + 2 tau grad_v phi(u+, v+).
    let anchor = vaxpy(&(psi_v.grad)(&x.v), -tau, &gv);
    let step = |w: &[f64]| -> Vec<f64> {
        let g = c.grad_v_at(&u_next, w);
        (psi_v.grad_inv)(&vaxpy(&anchor, 2.0 * tau, &g))
    };
    let (steps, tol) = match mode {
        ResolventMode::Inner(j) => (Some(j), 0.0),
        ResolventMode::InnerTol(t) => (None, t),
        ResolventMode::ClosedForm | ResolventMode::ExactOrIterate(_) => {
            let t = match mode {
                ResolventMode::ExactOrIterate(t) => t,
                _ => 1e-14,
            };
            (None, t)
        }
    };
    let mut v = x.v.clone();
    let mut used = 0;
    let mut last_diff = f64::INFINITY;
    let cap = steps.unwrap_or(INNER_CAP);
    for _ in 0..cap {
        let v_next = step(&v);
        if v_next.iter().any(|z| !z.is_finite()) {
            return Err(SamgdaError::InnerDivergence);
        }
        last_diff = vnorm(&vsub(&v_next, &v));
        v = v_next;
        used += 1;
        if steps.is_none() && last_diff <= tol {
            break;
        }
    }
    if steps.is_none() && last_diff > tol {
        return Err(SamgdaError::OracleNonconvergence {
            residual: last_diff,
        });
    }
    let point = PrimalDualPoint { u: u_next, v };
    point.check_finite("mirror resolvent")?;
    Ok(ResolventResult {
        point,
        inner_iterations: used,
        inner_residual: last_diff,
        exact: steps.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic_v_probe, strong_mvi_quadratic, toy1_quadratic};
    use approx::assert_relative_eq;

    #[test]
    fn bregman_energy_examples() {
        let h = LegendreGenerator::energy(1.0);
        let x = PrimalDualPoint::scalar(1.0, 0.0);
        let y = PrimalDualPoint::scalar(0.0, 0.0);
        assert_relative_eq!(bregman_distance(&h, &x, &y).unwrap(), 0.5);
        assert_relative_eq!(bregman_distance(&h, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn bregman_semi_anchored_probe() {
        let e = quadratic_v_probe();
        let h = LegendreGenerator::semi_anchored(0.25, &e.problem);
        let x = PrimalDualPoint::scalar(0.0, 1.5);
        let y = PrimalDualPoint::scalar(0.0, 1.0);
        assert_relative_eq!(bregman_distance(&h, &x, &y).unwrap(), 0.375, epsilon = 1e-12);
    }

    #[test]
    fn pdhg_resolvent_hand_trace() {
        let e = crate::problems::bilinear_from_matrix(
            nalgebra::DMatrix::from_row_slice(1, 1, &[1.0]),
            "b1",
        )
        .unwrap();
        let h = LegendreGenerator::pdhg_preconditioner(
            0.5,
            nalgebra::DMatrix::from_row_slice(1, 1, &[1.0]),
        )
        .unwrap();
        let x = PrimalDualPoint::scalar(1.0, 1.0);
        let r1 = resolvent(&h, &e.problem, &x, ResolventMode::ClosedForm).unwrap();
        assert_relative_eq!(r1.point.u[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(r1.point.v[0], 1.0, epsilon = 1e-15);
        let r2 = resolvent(&h, &e.problem, &r1.point, ResolventMode::ClosedForm).unwrap();
        assert_relative_eq!(r2.point.u[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(r2.point.v[0], 0.75, epsilon = 1e-15);
        // tau >= 1/||B|| is rejected.
        assert!(LegendreGenerator::pdhg_preconditioner(
            1.0,
            nalgebra::DMatrix::from_row_slice(1, 1, &[1.0])
        )
        .is_err());
    }

    #[test]
    fn semi_anchored_probe_closed_form() {
        let e = quadratic_v_probe();
        let h = LegendreGenerator::semi_anchored(0.25, &e.problem);
        let x = PrimalDualPoint::scalar(0.0, 1.0);
        let r = resolvent(&h, &e.problem, &x, ResolventMode::ClosedForm).unwrap();
        assert_relative_eq!(r.point.v[0], 1.5, epsilon = 1e-12);
        assert!(r.exact);
        // The iterative mode converges to the same point.
        let ri = resolvent(&h, &e.problem, &x, ResolventMode::InnerTol(1e-13)).unwrap();
        assert_relative_eq!(ri.point.v[0], 1.5, epsilon = 1e-10);
    }

    #[test]
    fn resolvent_fixed_at_solution() {
        for entry in [toy1_quadratic(1.0, 0.25).unwrap(), strong_mvi_quadratic(0.5).unwrap()] {
            let h = LegendreGenerator::semi_anchored(0.3, &entry.problem);
            let x = entry.problem.known_solution.clone().unwrap();
            let r = resolvent(&h, &entry.problem, &x, ResolventMode::ClosedForm).unwrap();
            assert!(r.point.dist(&x) <= 1e-12);
        }
    }

    #[test]
    fn inner_ascent_step_probe_recurrence() {
        let e = quadratic_v_probe();
        let tau = 0.25;
        let eta = crate::problem::eta_from_tau(tau, 1.0);
        assert_relative_eq!(eta, 1.0 / 6.0, epsilon = 1e-15);
        // Convex-combination identity.
        assert_relative_eq!(eta / tau + 2.0 * eta * 1.0, 1.0, epsilon = 1e-15);
        let v1 = inner_ascent_step(&e.problem, &[0.0], &[0.75], &[1.0], tau, eta, 1.0);
        assert_relative_eq!(v1[0], 7.0 / 6.0, epsilon = 1e-12);
        // The exact maximizer 1.5 is a fixed point.
        let vf = inner_ascent_step(&e.problem, &[0.0], &[0.75], &[1.5], tau, eta, 1.0);
        assert_relative_eq!(vf[0], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn inner_step_respects_box_prox() {
        let e = crate::problems::toy2_polynomial().unwrap();
        // Degenerate dispatch path exercises prox_{tau g} directly.
        let v = e.problem.g.prox_at(&[1.3], 0.5);
        assert_relative_eq!(v[0], 1.1);
    }

    #[test]
    fn inner_contraction_bounded_by_exponential_factor() {
        let e = quadratic_v_probe();
        let tau = 0.25;
        let l_vv = 1.0;
        let eta = crate::problem::eta_from_tau(tau, l_vv);
        let bound = (-(1.0 / tau - 2.0 * l_vv) / (2.0 * (1.0 / tau + 2.0 * l_vv))).exp();
        let vstar = 1.5;
        let mut v = vec![0.0f64];
        for _ in 0..20 {
            let before = (v[0] - vstar).abs();
            v = inner_ascent_step(&e.problem, &[0.0], &[0.75], &v, tau, eta, l_vv);
            let after = (v[0] - vstar).abs();
            if before > 1e-13 {
                assert!(after / before <= bound + 1e-12, "{after} / {before} vs {bound}");
            }
        }
    }

    #[test]
    fn generator_curvature_sandwich_on_samples() {
        use rand::{Rng, SeedableRng};
        let e = toy1_quadratic(1.0, 0.25).unwrap();
        let h = LegendreGenerator::semi_anchored(0.4, &e.problem);
        assert!(h.mu_h <= h.l_h);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let x = PrimalDualPoint::scalar(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let y = PrimalDualPoint::scalar(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let d = x.sub(&y);
            let n2 = d.dot(&d);
            let inner = h.grad(&x).sub(&h.grad(&y)).dot(&d);
            assert!(inner >= h.mu_h * n2 - 1e-10);
            assert!(inner <= h.l_h * n2 + 1e-10);
        }
    }

    #[test]
    fn residual_from_generator_energy() {
        let h = LegendreGenerator::energy(1.0);
        let a = PrimalDualPoint::scalar(1.0, 0.0);
        let b = PrimalDualPoint::scalar(0.0, 0.0);
        assert_relative_eq!(residual_from_generator(&h, &a, &b), 1.0);
        assert_relative_eq!(residual_from_generator(&h, &a, &a), 0.0);
    }

    #[test]
    fn firm_nonexpansiveness_on_samples() {
        use rand::{Rng, SeedableRng};
        // Monotone case (rho = 0): D(x*,Rx) <= D(x*,x) - D(Rx,x).
        let mono = strong_mvi_quadratic(0.5).unwrap();
        let hm = LegendreGenerator::semi_anchored(0.3, &mono.problem);
        let xs = mono.problem.known_solution.clone().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x = PrimalDualPoint::scalar(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let rx = resolvent(&hm, &mono.problem, &x, ResolventMode::ClosedForm)
                .unwrap()
                .point;
            let lhs = bregman_distance(&hm, &xs, &rx).unwrap();
            let rhs = bregman_distance(&hm, &xs, &x).unwrap()
                - bregman_distance(&hm, &rx, &x).unwrap();
            assert!(lhs <= rhs + 1e-10, "{lhs} vs {rhs}");
        }
        // Weak-MVI case on toy1 with the (1 - rho L_h) factor.
        let t1 = toy1_quadratic(1.0, 0.25).unwrap();
        let rho = 0.25;
        let h1 = LegendreGenerator::semi_anchored(0.4, &t1.problem);
        let xs = t1.problem.known_solution.clone().unwrap();
        for _ in 0..100 {
            let x = PrimalDualPoint::scalar(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let rx = resolvent(&h1, &t1.problem, &x, ResolventMode::ClosedForm)
                .unwrap()
                .point;
            let lhs = bregman_distance(&h1, &xs, &rx).unwrap();
            let rhs = bregman_distance(&h1, &xs, &x).unwrap()
                - (1.0 - rho * h1.l_h) * bregman_distance(&h1, &rx, &x).unwrap();
            assert!(lhs <= rhs + 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn resolvent_rejects_multivalued_step() {
        let e = toy1_quadratic(1.0, 0.25).unwrap();
        let h = LegendreGenerator::semi_anchored(10.0, &e.problem);
        let x = PrimalDualPoint::scalar(0.0, 1.0);
        assert!(resolvent(&h, &e.problem, &x, ResolventMode::ClosedForm).is_err());
    }

    #[test]
    fn mirror_maps_invert() {
        for m in [MirrorMap::energy(), MirrorMap::shannon_entropy()] {
            let z = vec![0.3, 1.2, 0.05];
            let back = (m.grad_inv)(&(m.grad)(&z));
            for (a, b) in z.iter().zip(&back) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }
}
