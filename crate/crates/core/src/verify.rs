//! Independent oracles and rate-bound checkers that turn the convergence
//! theorems into executable assertions over solver traces.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::IterateTrace;
use crate::error::{Result, SamgdaError};
use crate::geometry::{bregman_distance, LegendreGenerator};
use crate::point::{vaxpy, vnorm, vsub, PrimalDualPoint};
use crate::problem::CompositeMinimaxProblem;

/// Outcome of checking one rate bound along a whole trace.
#[derive(Debug, Clone)]
pub struct BoundCheckResult {
    pub theorem_id: String,
    pub holds: bool,
    /// Most negative slack (bound minus observed quantity) over the trace.
    pub worst_margin: f64,
    pub at_iteration: usize,
}

/// Absolute 1e-9 plus relative 1e-7 of the bound's value.
fn bound_tolerance(bound: f64) -> f64 {
    1e-9 + 1e-7 * bound.abs()
}

fn finish(theorem_id: &str, worst_margin: f64, at_iteration: usize, tol: f64) -> BoundCheckResult {
    BoundCheckResult {
        theorem_id: theorem_id.to_string(),
        holds: worst_margin >= -tol,
        worst_margin,
        at_iteration,
    }
}

/// Sublinear weak-MVI rate: for every k,
/// min_{i<=k} D_h(x_i, x_{i-1}) * (1 - rho L_h) * k <= D_h(x*, x_0),
/// together with the residual corollary
/// min_{i<=k} ||s_i||^2/(2 L_h) * (1 - rho L_h) * k <= D_h(x*, x_0).
pub fn check_rate_weakmvi(
    trace: &IterateTrace,
    h: &LegendreGenerator,
    x_star: &PrimalDualPoint,
    rho: f64,
) -> Result<BoundCheckResult> {
    let x0 = &trace.records[0].point;
    let d0 = bregman_distance(h, x_star, x0)?;
    let factor = 1.0 - rho * h.l_h;
    if factor <= 0.0 {
        return Err(SamgdaError::InvalidConfig(format!(
            "1 - rho L_h = {factor} <= 0; the bound is vacuous"
        )));
    }
    let tol = bound_tolerance(d0);
    let mut min_gap = f64::INFINITY;
    let mut min_res_sq = f64::INFINITY;
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for rec in trace.records.iter().skip(1) {
        let gap = rec.bregman_gap.ok_or(SamgdaError::NoValueOracle)?;
        let s = rec
            .generator_residual
            .ok_or(SamgdaError::NoValueOracle)?;
        min_gap = min_gap.min(gap);
        min_res_sq = min_res_sq.min(s * s / (2.0 * h.l_h));
        let k = rec.k as f64;
        for lhs in [min_gap * factor * k, min_res_sq * factor * k] {
            let margin = d0 - lhs;
            if margin < worst {
                worst = margin;
                at = rec.k;
            }
        }
    }
    Ok(finish("rate-weakmvi", worst, at, tol))
}

/// Linear strong-MVI rate: D_h(x*, x_k) <= (1 + 2 tau mu/(1 + tau L))^{-k} D_h(x*, x_0).
pub fn check_rate_strongmvi(
    trace: &IterateTrace,
    h: &LegendreGenerator,
    problem: &CompositeMinimaxProblem,
    x_star: &PrimalDualPoint,
    mu: f64,
) -> Result<BoundCheckResult> {
    let tau = h.tau();
    let l = problem.lipschitz;
    let x0 = &trace.records[0].point;
    let d0 = bregman_distance(h, x_star, x0)?;
    let rate = 1.0 / (1.0 + 2.0 * tau * mu / (1.0 + tau * l));
    let mut worst = f64::INFINITY;
    let mut at = 0;
    let mut tol = bound_tolerance(d0);
    for rec in trace.records.iter() {
        let dk = bregman_distance(h, x_star, &rec.point)?;
        let bound = rate.powi(rec.k as i32) * d0;
        let margin = bound - dk;
        if margin < worst {
            worst = margin;
            at = rec.k;
            tol = bound_tolerance(bound);
        }
    }
    Ok(finish("rate-strongmvi", worst, at, tol))
}

/// Inexact-resolvent rate with the finite-J floor term: for every k,
/// min_{i<=k} gap(R x_{i-1}, x_{i-1}) <= D0/((1-rho L_h) k) + floor, with
/// floor = 3 Omega^2 L_h/(2(1-rho L_h)) * exp(-((1/tau-2Lvv)/(2(1/tau+2Lvv))) J).
///
/// The left side is recomputed at the exact resolvent with the brute-force
/// oracle. When the problem has no value oracle, the Bregman quantities are
/// replaced by the theorem-equivalent computable surrogates
/// ||grad h(x) - grad h(Rx)||^2/(2 L_h) on the left and (L_h/2)||x*-x0||^2
/// on the right.
pub fn check_rate_inexact(
    trace: &IterateTrace,
    h: &LegendreGenerator,
    problem: &CompositeMinimaxProblem,
    x_star: &PrimalDualPoint,
    rho: f64,
    omega: f64,
    inner_j: usize,
) -> Result<BoundCheckResult> {
    let tau = h.tau();
    let l_vv = problem.coupling.l_vv;
    let factor = 1.0 - rho * h.l_h;
    if factor <= 0.0 {
        return Err(SamgdaError::InvalidConfig(format!(
            "1 - rho L_h = {factor} <= 0; the bound is vacuous"
        )));
    }
    let contraction = (1.0 / tau - 2.0 * l_vv) / (2.0 * (1.0 / tau + 2.0 * l_vv));
    let floor = 3.0 * omega * omega * h.l_h / (2.0 * factor)
        * (-contraction * inner_j as f64).exp();

    let has_value = h.has_value_oracle();
    let x0 = &trace.records[0].point;
    let d0 = if has_value {
        bregman_distance(h, x_star, x0)?
    } else {
        let n = x_star.dist(x0);
        h.l_h / 2.0 * n * n
    };
    let mut min_gap = f64::INFINITY;
    let mut worst = f64::INFINITY;
    let mut at = 0;
    let mut tol = bound_tolerance(d0 + floor);
    for w in trace.records.windows(2) {
        let prev = &w[0].point;
        let rx = exact_resolvent_oracle(h, problem, prev, 1e-13)?;
        let gap = if has_value {
            bregman_distance(h, &rx, prev)?
        } else {
            let s = h.grad(prev).sub(&h.grad(&rx)).norm();
            s * s / (2.0 * h.l_h)
        };
        min_gap = min_gap.min(gap);
        let k = w[1].k as f64;
        let bound = d0 / (factor * k) + floor;
        let margin = bound - min_gap;
        if margin < worst {
            worst = margin;
            at = w[1].k;
            tol = bound_tolerance(bound);
        }
    }
    Ok(finish("rate-inexact", worst, at, tol))
}

/// Adaptive-step rate in multiplied form: for every k,
/// min_{i<=k} D_{h_i}(x_i, x_{i-1}) * (1 - rho Ltilde) * k
///   <= D_{h_1}(x*, x_0) + (Ltilde/2) C^2,
/// with Ltilde = 2(L + Lhat)/delta and C the largest observed distance to x*.
pub fn check_rate_backtracking(
    trace: &IterateTrace,
    problem: &CompositeMinimaxProblem,
    x_star: &PrimalDualPoint,
    rho: f64,
    delta: f64,
) -> Result<BoundCheckResult> {
    let l_tilde = 2.0 * (problem.lipschitz + problem.l_hat()) / delta;
    let factor = 1.0 - rho * l_tilde;
    let x0 = &trace.records[0].point;
    let tau1 = trace
        .records
        .get(1)
        .map(|r| r.tau_k)
        .ok_or_else(|| SamgdaError::InvalidConfig("trace has no iterations".into()))?;
    let h1 = LegendreGenerator::semi_anchored(tau1, problem);
    let d0 = bregman_distance(&h1, x_star, x0)?;
    let c = trace
        .records
        .iter()
        .map(|r| r.point.dist(x_star))
        .fold(0.0, f64::max);
    let rhs = d0 + l_tilde / 2.0 * c * c;
    let tol = bound_tolerance(rhs);
    let mut min_gap = f64::INFINITY;
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for rec in trace.records.iter().skip(1) {
        let gap = rec.bregman_gap.ok_or(SamgdaError::NoValueOracle)?;
        min_gap = min_gap.min(gap);
        let lhs = min_gap * factor * rec.k as f64;
        let margin = rhs - lhs;
        if margin < worst {
            worst = margin;
            at = rec.k;
        }
    }
    Ok(finish("rate-backtracking", worst, at, tol))
}

/// Mirror (MVI) rate: min_{i<=k} D_h(x_i, x_{i-1}) <= D_h(x*, x_0)/k.
pub fn check_rate_mirror(
    trace: &IterateTrace,
    h: &LegendreGenerator,
    x_star: &PrimalDualPoint,
) -> Result<BoundCheckResult> {
    let x0 = &trace.records[0].point;
    let d0 = bregman_distance(h, x_star, x0)?;
    let tol = bound_tolerance(d0);
    let mut min_gap = f64::INFINITY;
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for rec in trace.records.iter().skip(1) {
        let gap = rec.bregman_gap.ok_or(SamgdaError::NoValueOracle)?;
        min_gap = min_gap.min(gap);
        let margin = d0 - min_gap * rec.k as f64;
        if margin < worst {
            worst = margin;
            at = rec.k;
        }
    }
    Ok(finish("rate-mirror", worst, at, tol))
}

const ORACLE_CAP: usize = 1_000_000;

/// Brute-force referee for resolvent implementations: solves
/// grad h(z) + M z = grad h(x) independently of the production split-step
/// path. Affine problems are handled by probing the affine map with unit
/// vectors and a dense solve; otherwise the v-part is driven to a fixed
/// point of its optimality condition.
pub fn exact_resolvent_oracle(
    h: &LegendreGenerator,
    problem: &CompositeMinimaxProblem,
    x: &PrimalDualPoint,
    tol: f64,
) -> Result<PrimalDualPoint> {
    let d = problem.du + problem.dv;
    if d > 16 {
        return Err(SamgdaError::InvalidConfig(
            "exact_resolvent_oracle is limited to dimension <= 16".into(),
        ));
    }
    if problem.affine.is_some() {
        // T(z) = grad h(z) + M z is affine; recover it column by column.
        let t = |flat: &[f64]| -> Result<Vec<f64>> {
            let p = PrimalDualPoint::from_flat(flat, problem.du);
            let m = problem.saddle_differential(&p)?;
            let g = h.grad(&p);
            Ok(g.to_flat()
                .iter()
                .zip(m.to_flat())
                .map(|(a, b)| a + b)
                .collect())
        };
        let t0 = t(&vec![0.0; d])?;
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            let tj = t(&e)?;
            for i in 0..d {
                jac[(i, j)] = tj[i] - t0[i];
            }
        }
        let rhs_vec: Vec<f64> = h
            .grad(x)
            .to_flat()
            .iter()
            .zip(&t0)
            .map(|(a, b)| a - b)
            .collect();
        let rhs = DVector::from_vec(rhs_vec);
        let sol = jac.lu().solve(&rhs).ok_or(SamgdaError::NoClosedForm)?;
        return Ok(PrimalDualPoint::from_flat(sol.as_slice(), problem.du));
    }
    // Non-affine path (semi-anchored geometry): the u-part is determined
    // exactly by one prox step; the v-part satisfies
    // v = prox_{tau g}[anchor + 2 tau grad_v phi(u+, v)], a contraction for
    // tau < 1/(2 Lvv).
    let tau = h.tau();
    let gu = problem.coupling.grad_u_at(&x.u, &x.v);
    let gv = problem.coupling.grad_v_at(&x.u, &x.v);
    let u_next = problem.f.prox_at(&vaxpy(&x.u, -tau, &gu), tau);
    let anchor = vaxpy(&x.v, -tau, &gv);
    let mut v = anchor.clone();
    let mut last = f64::INFINITY;
    for _ in 0..ORACLE_CAP {
        let g = problem.coupling.grad_v_at(&u_next, &v);
        let v_next = problem.g.prox_at(&vaxpy(&anchor, 2.0 * tau, &g), tau);
        last = vnorm(&vsub(&v_next, &v));
        v = v_next;
        if last <= tol {
            break;
        }
    }
    if last > tol {
        return Err(SamgdaError::OracleNonconvergence { residual: last });
    }
    Ok(PrimalDualPoint { u: u_next, v })
}

/// Prop.-5.1 contraction factor sqrt(1 - tau^2 sigma_min^2(B)), cross-checked
/// against the eigenvalue magnitudes of the companion matrices
/// T_{u,sigma} = [[2(1 - tau^2 sigma^2), -(1 - tau^2 sigma^2)], [1, 0]].
pub fn spectral_rate(b: &DMatrix<f64>, tau: f64) -> Result<f64> {
    let sv = b.clone().svd(false, false).singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if tau * sigma_max >= 1.0 {
        return Err(SamgdaError::PreconditionerIndefinite {
            tau,
            limit: 1.0 / sigma_max,
        });
    }
    let formula = (1.0 - tau * tau * sigma_min * sigma_min).sqrt();
    let mut companion_rate = 0.0f64;
    for sigma in [sigma_min, sigma_max] {
        let c = 1.0 - tau * tau * sigma * sigma;
        let t = DMatrix::from_row_slice(2, 2, &[2.0 * c, -c, 1.0, 0.0]);
        let eigs = t.complex_eigenvalues();
        for e in eigs.iter() {
            companion_rate = companion_rate.max(e.norm());
        }
    }
    if (companion_rate - formula).abs() > 1e-9 {
        return Err(SamgdaError::OracleFailure {
            context: format!(
                "companion eigenvalue rate {companion_rate} disagrees with formula {formula}"
            ),
        });
    }
    Ok(formula)
}

/// Central-difference gradient check; returns the worst relative error over
/// seeded samples in [-1, 1]^d.
pub fn finite_difference_check(
    problem: &CompositeMinimaxProblem,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let value = problem
        .coupling
        .value
        .as_ref()
        .ok_or(SamgdaError::NoValueOracle)?
        .clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u: Vec<f64> = (0..problem.du).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..problem.dv).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gu = problem.coupling.grad_u_at(&u, &v);
        let gv = problem.coupling.grad_v_at(&u, &v);
        let mut fd_u = vec![0.0; problem.du];
        for j in 0..problem.du {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += step;
            dn[j] -= step;
            fd_u[j] = (value(&up, &v) - value(&dn, &v)) / (2.0 * step);
        }
        let mut fd_v = vec![0.0; problem.dv];
        for j in 0..problem.dv {
            let mut up = v.clone();
            let mut dn = v.clone();
            up[j] += step;
            dn[j] -= step;
            fd_v[j] = (value(&u, &up) - value(&u, &dn)) / (2.0 * step);
        }
        let num = (vnorm(&vsub(&fd_u, &gu)).powi(2) + vnorm(&vsub(&fd_v, &gv)).powi(2)).sqrt();
        let den = (vnorm(&gu).powi(2) + vnorm(&gv).powi(2)).sqrt().max(1.0);
        worst = worst.max(num / den);
    }
    Ok(worst)
}
