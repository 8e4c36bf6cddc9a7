//! Outer-loop drivers: the generic Bregman proximal point iteration, its
//! SA-MGDA specializations, PDHG, and the non-anchored baselines used for
//! comparison runs.

use std::time::Instant;

use crate::config::{InnerMode, IterateTrace, SolverConfig, TraceRecord};
use crate::error::{Result, SamgdaError};
use crate::geometry::{
    bregman_distance, residual_from_generator, resolvent, LegendreGenerator, MirrorMap,
    ResolventMode,
};
use crate::point::{vaxpy, PrimalDualPoint};
use crate::problem::CompositeMinimaxProblem;

/// Iterates with norm beyond this are flagged as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    MaxIters,
    ResidualBelow(f64),
    Divergence,
    Error(String),
}

#[derive(Clone)]
pub struct SolverReport {
    pub trace: IterateTrace,
    pub termination: Termination,
    pub config_echo: SolverConfig,
    pub generator_kind: String,
}

impl SolverReport {
    pub fn final_residual(&self) -> f64 {
        self.trace
            .records
            .last()
            .map(|r| r.residual_norm)
            .unwrap_or(f64::NAN)
    }
}

fn resolvent_mode(config: &SolverConfig) -> ResolventMode {
    match config.inner {
        InnerMode::Exact => ResolventMode::ExactOrIterate(config.inner_tolerance),
        InnerMode::Steps(j) => ResolventMode::Inner(j),
        InnerMode::Tolerance(t) => ResolventMode::InnerTol(t),
    }
}

fn generator_tag(h: &LegendreGenerator) -> &'static str {
    use crate::geometry::GeneratorKind::*;
    match h.kind {
        Energy { .. } => "energy",
        SemiAnchored { .. } => "semi-anchored",
        PdhgPreconditioner { .. } => "pdhg",
        Mirror { .. } => "mirror",
    }
}

/// Generic BPP loop x_{k+1} = R(x_k), recording the Bregman gap
/// D_h(x_{k+1}, x_k) (when a value oracle exists) and the generator residual
/// each iteration.
pub fn run_bpp(
    problem: &CompositeMinimaxProblem,
    h: &LegendreGenerator,
    config: &SolverConfig,
    x0: &PrimalDualPoint,
) -> Result<SolverReport> {
    let start = Instant::now();
    let mode = resolvent_mode(config);
    let mut trace = IterateTrace::default();
    let mut x = x0.clone();
    x.check_finite("initial point")?;
    trace.push(TraceRecord {
        k: 0,
        point: x.clone(),
        bregman_gap: None,
        generator_residual: None,
        residual_norm: problem.stationarity_residual(&x),
        tau_k: h.tau(),
        inner_used: 0,
        elapsed: start.elapsed().as_secs_f64(),
    });
    let mut termination = Termination::MaxIters;
    for k in 1..=config.outer_steps {
        let res = resolvent(h, problem, &x, mode).map_err(|e| e.at_iteration(k))?;
        let next = res.point;
        if !next.is_finite() || next.norm() > DIVERGENCE_NORM {
            termination = Termination::Divergence;
            break;
        }
        let gap = if h.has_value_oracle() {
            bregman_distance(h, &next, &x).ok()
        } else {
            None
        };
        let gen_res = residual_from_generator(h, &x, &next);
        let residual = problem.stationarity_residual(&next);
        x = next;
        trace.push(TraceRecord {
            k,
            point: x.clone(),
            bregman_gap: gap,
            generator_residual: Some(gen_res),
            residual_norm: residual,
            tau_k: h.tau(),
            inner_used: res.inner_iterations,
            elapsed: start.elapsed().as_secs_f64(),
        });
        if let Some(eps) = config.residual_stop {
            if residual <= eps {
                termination = Termination::ResidualBelow(eps);
                break;
            }
        }
    }
    Ok(SolverReport {
        trace,
        termination,
        config_echo: config.clone(),
        generator_kind: generator_tag(h).to_string(),
    })
}

/// SA-MGDA: BPP with the semi-anchored generator h = 1/(2 tau)||x||^2 - phi.
pub fn run_sa_mgda(
    problem: &CompositeMinimaxProblem,
    config: &SolverConfig,
    x0: &PrimalDualPoint,
) -> Result<SolverReport> {
    let h = LegendreGenerator::semi_anchored(config.tau, problem);
    run_bpp(problem, &h, config, x0)
}

/// Non-Euclidean SA-MGDA with a separable mirror map psi; `l_rel` is the
/// relative smoothness constant of phi with respect to psi.
pub fn run_sa_mgda_mirror(
    problem: &CompositeMinimaxProblem,
    psi_u: MirrorMap,
    psi_v: MirrorMap,
    l_rel: f64,
    config: &SolverConfig,
    x0: &PrimalDualPoint,
) -> Result<SolverReport> {
    let h = LegendreGenerator::mirror(config.tau, psi_u, psi_v, problem, l_rel);
    run_bpp(problem, &h, config, x0)
}

/// PDHG on a bilinear problem: BPP with the linear preconditioner generator.
/// The coupling matrix B is read off the problem's affine structure.
pub fn run_pdhg(
    problem: &CompositeMinimaxProblem,
    config: &SolverConfig,
    x0: &PrimalDualPoint,
) -> Result<SolverReport> {
    let b = bilinear_matrix(problem)?;
    let h = LegendreGenerator::pdhg_preconditioner(config.tau, b)?;
    run_bpp(problem, &h, config, x0)
}

/// Extract B from M_phi = [[0, B], [-B^T, 0]]; errors when the saddle
/// operator is not purely bilinear.
pub fn bilinear_matrix(
    problem: &CompositeMinimaxProblem,
) -> Result<nalgebra::DMatrix<f64>> {
    let aff = problem
        .affine
        .as_ref()
        .ok_or_else(|| SamgdaError::InvalidConfig("pdhg needs an affine problem".into()))?;
    let (du, dv) = (problem.du, problem.dv);
    let a = &aff.matrix;
    let mut pure = aff.offset.iter().all(|&z| z == 0.0);
    for i in 0..du {
        for j in 0..du {
            pure &= a[(i, j)] == 0.0;
        }
    }
    for i in 0..dv {
        for j in 0..dv {
            pure &= a[(du + i, du + j)] == 0.0;
        }
    }
    for i in 0..du {
        for j in 0..dv {
            pure &= (a[(i, du + j)] + a[(du + j, i)]).abs() <= 1e-14 * a[(i, du + j)].abs().max(1.0);
        }
    }
    if !pure {
        return Err(SamgdaError::InvalidConfig(
            "pdhg requires a purely bilinear coupling <u, B v>".into(),
        ));
    }
    let mut b = nalgebra::DMatrix::zeros(du, dv);
    for i in 0..du {
        for j in 0..dv {
            b[(i, j)] = a[(i, du + j)];
        }
    }
    Ok(b)
}

/// Backtracking SA-MGDA (adaptive step). At each outer iteration shrink the
/// candidate step by delta until the resolvent exists and the quarter test
/// (tau/4) ||grad h(xbar) - grad h(x_k)||^2 <= D_h(xbar, x_k)
/// passes; the accepted step carries over to the next iteration.
pub fn run_sa_mgda_backtracking(
    problem: &CompositeMinimaxProblem,
    config: &SolverConfig,
    x0: &PrimalDualPoint,
) -> Result<SolverReport> {
    let tau0 = config
        .backtracking_tau0
        .ok_or_else(|| SamgdaError::InvalidConfig("backtracking needs tau0".into()))?;
    let delta = config
        .backtracking_delta
        .ok_or_else(|| SamgdaError::InvalidConfig("backtracking needs delta".into()))?;
    if problem.coupling.value.is_none() {
        return Err(SamgdaError::NoValueOracle);
    }
    const SHRINK_CAP: usize = 60;
    // Existence of R(x_k) is operationalized as the inner solver reaching
    // this residual within its budget.
    let exist_mode = ResolventMode::ExactOrIterate(1e-10);

    let start = Instant::now();
    let mut trace = IterateTrace::default();
    let mut x = x0.clone();
    x.check_finite("initial point")?;
    let mut tau = tau0;
    trace.push(TraceRecord {
        k: 0,
        point: x.clone(),
        bregman_gap: None,
        generator_residual: None,
        residual_norm: problem.stationarity_residual(&x),
        tau_k: tau,
        inner_used: 0,
        elapsed: start.elapsed().as_secs_f64(),
    });
    let mut termination = Termination::MaxIters;
    'outer: for k in 1..=config.outer_steps {
        let mut accepted = None;
        for i in 0..=SHRINK_CAP {
            let tau_c = delta.powi(i as i32) * tau;
            let h = LegendreGenerator::semi_anchored(tau_c, problem);
            let cand = match resolvent(&h, problem, &x, exist_mode) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let xbar = cand.point;
            if !xbar.is_finite() {
                continue;
            }
            let gap = match bregman_distance(&h, &xbar, &x) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let res = residual_from_generator(&h, &x, &xbar);
            if tau_c / 4.0 * res * res <= gap + 1e-15 {
                accepted = Some((tau_c, xbar, gap, res, cand.inner_iterations));
                break;
            }
        }
        let (tau_c, xbar, gap, gen_res, inner) = match accepted {
            Some(a) => a,
            None => {
                return Err(
                    SamgdaError::BacktrackingStalled { cap: SHRINK_CAP }.at_iteration(k),
                )
            }
        };
        tau = tau_c;
        if xbar.norm() > DIVERGENCE_NORM {
            termination = Termination::Divergence;
            break 'outer;
        }
        let residual = problem.stationarity_residual(&xbar);
        x = xbar;
        trace.push(TraceRecord {
            k,
            point: x.clone(),
            bregman_gap: Some(gap),
            generator_residual: Some(gen_res),
            residual_norm: residual,
            tau_k: tau,
            inner_used: inner,
            elapsed: start.elapsed().as_secs_f64(),
        });
        if let Some(eps) = config.residual_stop {
            if residual <= eps {
                termination = Termination::ResidualBelow(eps);
                break;
            }
        }
    }
    Ok(SolverReport {
        trace,
        termination,
        config_echo: config.clone(),
        generator_kind: "semi-anchored-backtracking".to_string(),
    })
}

/// Regularized MGDA baseline: one prox-gradient descent step on u, then
/// multiple prox-gradient ascent steps on v of phi(u,v) - (lambda/2)||v-v0||^2,
/// without anchoring. Comparison baseline only; no convergence guarantee.
pub fn run_mgda_baseline(
    problem: &CompositeMinimaxProblem,
    lambda: f64,
    v_center: &[f64],
    config: &SolverConfig,
    x0: &PrimalDualPoint,
) -> Result<SolverReport> {
    if lambda < 0.0 {
        return Err(SamgdaError::InvalidConfig(format!(
            "mgda lambda must be nonnegative, got {lambda}"
        )));
    }
    let tau = config.tau;
    let start = Instant::now();
    let mut trace = IterateTrace::default();
    let mut x = x0.clone();
    x.check_finite("initial point")?;
    trace.push(TraceRecord {
        k: 0,
        point: x.clone(),
        bregman_gap: None,
        generator_residual: None,
        residual_norm: problem.stationarity_residual(&x),
        tau_k: tau,
        inner_used: 0,
        elapsed: start.elapsed().as_secs_f64(),
    });
    let mut termination = Termination::MaxIters;
    const INNER_CAP: usize = 100_000;
    'outer: for k in 1..=config.outer_steps {
        let gu = problem.coupling.grad_u_at(&x.u, &x.v);
        let u_next = problem.f.prox_at(&vaxpy(&x.u, -tau, &gu), tau);
        let mut v = x.v.clone();
        let mut inner_used = 0;
        let (cap, tol) = match config.inner {
            InnerMode::Steps(j) => (j, None),
            InnerMode::Exact => (INNER_CAP, Some(config.inner_tolerance)),
            InnerMode::Tolerance(t) => (INNER_CAP, Some(t)),
        };
        for _ in 0..cap {
            let mut gv = problem.coupling.grad_v_at(&u_next, &v);
            for (g, (vi, ci)) in gv.iter_mut().zip(v.iter().zip(v_center)) {
                *g -= lambda * (vi - ci);
            }
            let v_next = problem.g.prox_at(&vaxpy(&v, tau, &gv), tau);
            if v_next.iter().any(|z| !z.is_finite()) {
                termination = Termination::Divergence;
                break 'outer;
            }
            let diff = crate::point::vnorm(&crate::point::vsub(&v_next, &v));
            v = v_next;
            inner_used += 1;
            if let Some(t) = tol {
                if diff <= t {
                    break;
                }
            }
        }
        let next = PrimalDualPoint { u: u_next, v };
        if !next.is_finite() || next.norm() > DIVERGENCE_NORM {
            termination = Termination::Divergence;
            break;
        }
        let residual = problem.stationarity_residual(&next);
        x = next;
        trace.push(TraceRecord {
            k,
            point: x.clone(),
            bregman_gap: None,
            generator_residual: None,
            residual_norm: residual,
            tau_k: tau,
            inner_used,
            elapsed: start.elapsed().as_secs_f64(),
        });
        if let Some(eps) = config.residual_stop {
            if residual <= eps {
                termination = Termination::ResidualBelow(eps);
                break;
            }
        }
    }
    Ok(SolverReport {
        trace,
        termination,
        config_echo: config.clone(),
        generator_kind: "mgda-baseline".to_string(),
    })
}

/// Simultaneous prox-gradient descent/ascent. Divergence exhibit only.
pub fn run_gda_baseline(
    problem: &CompositeMinimaxProblem,
    config: &SolverConfig,
    x0: &PrimalDualPoint,
) -> Result<SolverReport> {
    let tau = config.tau;
    let start = Instant::now();
    let mut trace = IterateTrace::default();
    let mut x = x0.clone();
    x.check_finite("initial point")?;
    trace.push(TraceRecord {
        k: 0,
        point: x.clone(),
        bregman_gap: None,
        generator_residual: None,
        residual_norm: problem.stationarity_residual(&x),
        tau_k: tau,
        inner_used: 0,
        elapsed: start.elapsed().as_secs_f64(),
    });
    let mut termination = Termination::MaxIters;
    for k in 1..=config.outer_steps {
        let gu = problem.coupling.grad_u_at(&x.u, &x.v);
        let gv = problem.coupling.grad_v_at(&x.u, &x.v);
        let next = PrimalDualPoint {
            u: problem.f.prox_at(&vaxpy(&x.u, -tau, &gu), tau),
            v: problem.g.prox_at(&vaxpy(&x.v, tau, &gv), tau),
        };
        if !next.is_finite() || next.norm() > DIVERGENCE_NORM {
            termination = Termination::Divergence;
            break;
        }
        let residual = problem.stationarity_residual(&next);
        x = next;
        trace.push(TraceRecord {
            k,
            point: x.clone(),
            bregman_gap: None,
            generator_residual: None,
            residual_norm: residual,
            tau_k: tau,
            inner_used: 0,
            elapsed: start.elapsed().as_secs_f64(),
        });
        if let Some(eps) = config.residual_stop {
            if residual <= eps {
                termination = Termination::ResidualBelow(eps);
                break;
            }
        }
    }
    Ok(SolverReport {
        trace,
        termination,
        config_echo: config.clone(),
        generator_kind: "gda-baseline".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InnerMode;
    use crate::problems::{
        bilinear_from_matrix, strong_mvi_quadratic, toy1_quadratic,
    };
    use approx::assert_relative_eq;

    #[test]
    fn bpp_stays_at_solution() {
        let e = strong_mvi_quadratic(0.5).unwrap();
        let h = LegendreGenerator::semi_anchored(0.3, &e.problem);
        let c = SolverConfig::new(0.3, InnerMode::Exact, 1).unwrap();
        let x0 = e.problem.known_solution.clone().unwrap();
        let r = run_bpp(&e.problem, &h, &c, &x0).unwrap();
        assert!(r.trace.records[1].point.dist(&x0) <= 1e-12);
        assert!(r.trace.records[1].bregman_gap.unwrap().abs() <= 1e-12);
    }

    #[test]
    fn classical_ppm_monotone_residual_on_toy1() {
        let e = toy1_quadratic(1.0, 0.25).unwrap();
        let h = LegendreGenerator::energy(0.5);
        let c = SolverConfig::new(0.5, InnerMode::Exact, 100).unwrap();
        let r = run_bpp(&e.problem, &h, &c, &e.start).unwrap();
        for w in r.trace.records.windows(2) {
            assert!(w[1].residual_norm <= w[0].residual_norm + 1e-12);
        }
    }

    #[test]
    fn sa_mgda_equals_generic_bpp() {
        let e = toy1_quadratic(1.0, 0.25).unwrap();
        let c = SolverConfig::new(0.4, InnerMode::Exact, 50).unwrap();
        let h = LegendreGenerator::semi_anchored(0.4, &e.problem);
        let a = run_sa_mgda(&e.problem, &c, &e.start).unwrap();
        let b = run_bpp(&e.problem, &h, &c, &e.start).unwrap();
        for (ra, rb) in a.trace.records.iter().zip(&b.trace.records) {
            assert!(ra.point.dist(&rb.point) <= 1e-10);
        }
    }

    #[test]
    fn pdhg_hand_trace_and_origin() {
        let e = bilinear_from_matrix(nalgebra::DMatrix::from_row_slice(1, 1, &[1.0]), "b1")
            .unwrap();
        let c = SolverConfig::new(0.5, InnerMode::Exact, 2).unwrap();
        let x0 = PrimalDualPoint::scalar(1.0, 1.0);
        let r = run_pdhg(&e.problem, &c, &x0).unwrap();
        assert_relative_eq!(r.trace.records[1].point.u[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.trace.records[1].point.v[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.trace.records[2].point.u[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.trace.records[2].point.v[0], 0.75, epsilon = 1e-15);
        let r0 = run_pdhg(&e.problem, &c, &PrimalDualPoint::scalar(0.0, 0.0)).unwrap();
        assert_eq!(r0.final_residual(), 0.0);
    }

    #[test]
    fn gda_spirals_out_on_bilinear_and_converges_on_strongly_monotone() {
        let e = bilinear_from_matrix(nalgebra::DMatrix::from_row_slice(1, 1, &[1.0]), "b1")
            .unwrap();
        let c = SolverConfig::new(0.1, InnerMode::Exact, 100).unwrap();
        let r = run_gda_baseline(&e.problem, &c, &PrimalDualPoint::scalar(1.0, 1.0)).unwrap();
        for w in r.trace.records.windows(2) {
            assert!(w[1].point.norm() > w[0].point.norm());
        }
        let r0 = run_gda_baseline(&e.problem, &c, &PrimalDualPoint::scalar(0.0, 0.0)).unwrap();
        assert_eq!(r0.final_residual(), 0.0);
        let s = strong_mvi_quadratic(0.5).unwrap();
        let cs = SolverConfig::new(0.1, InnerMode::Exact, 400).unwrap();
        let rs = run_gda_baseline(&s.problem, &cs, &PrimalDualPoint::scalar(1.0, 1.0)).unwrap();
        assert!(rs.final_residual() < 1e-3);
    }

    #[test]
    fn gda_flags_divergence_eventually() {
        let e = bilinear_from_matrix(nalgebra::DMatrix::from_row_slice(1, 1, &[1.0]), "b1")
            .unwrap();
        let c = SolverConfig::new(0.5, InnerMode::Exact, 100_000).unwrap();
        let r = run_gda_baseline(&e.problem, &c, &PrimalDualPoint::scalar(1.0, 1.0)).unwrap();
        assert_eq!(r.termination, Termination::Divergence);
    }

    #[test]
    fn mgda_stationary_at_regularized_fixed_point() {
        let e = toy1_quadratic(1.0, 0.25).unwrap();
        let c = SolverConfig::new(0.3, InnerMode::Steps(5), 20).unwrap();
        let x0 = PrimalDualPoint::scalar(0.0, 0.0);
        let r = run_mgda_baseline(&e.problem, 1.0, &[0.0], &c, &x0).unwrap();
        assert!(r.trace.records.last().unwrap().point.norm() <= 1e-12);
    }

    #[test]
    fn backtracking_exact_step_never_shrinks() {
        let e = toy1_quadratic(1.0, 0.25).unwrap();
        let floor = 0.5 / (e.problem.lipschitz + e.problem.l_hat());
        let c = SolverConfig::new(floor, InnerMode::Exact, 50)
            .unwrap()
            .with_backtracking(floor, 0.5)
            .unwrap();
        let r = run_sa_mgda_backtracking(&e.problem, &c, &e.start).unwrap();
        for rec in r.trace.records.iter().skip(1) {
            assert_relative_eq!(rec.tau_k, floor, epsilon = 1e-15);
        }
    }

    #[test]
    fn traces_are_deterministic() {
        let e = toy1_quadratic(1.0, 0.25).unwrap();
        let c = SolverConfig::new(0.4, InnerMode::Exact, 100).unwrap();
        let a = run_sa_mgda(&e.problem, &c, &e.start).unwrap();
        let b = run_sa_mgda(&e.problem, &c, &e.start).unwrap();
        for (ra, rb) in a.trace.records.iter().zip(&b.trace.records) {
            assert_eq!(ra.point, rb.point);
            assert_eq!(ra.residual_norm, rb.residual_norm);
        }
    }

    #[test]
    fn bilinear_matrix_extraction() {
        let b = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let e = bilinear_from_matrix(b.clone(), "b2").unwrap();
        let got = bilinear_matrix(&e.problem).unwrap();
        assert_eq!(got, b);
        let t1 = toy1_quadratic(1.0, 0.25).unwrap();
        assert!(bilinear_matrix(&t1.problem).is_err());
    }
}
