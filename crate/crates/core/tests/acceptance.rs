//! Acceptance suite: one test per numbered criterion, each printing a
//! pass/fail line. A failed assertion means the corresponding convergence
//! guarantee or reduction identity is violated by the implementation.

use std::time::Instant;

use samgda::{
    bilinear_from_matrix, check_rate_backtracking, check_rate_inexact, check_rate_strongmvi,
    check_rate_weakmvi, exact_resolvent_oracle, finite_difference_check, random_bilinear,
    resolvent, run_bpp, run_mgda_baseline, run_pdhg, run_sa_mgda, run_sa_mgda_backtracking,
    run_sa_mgda_mirror, spectral_rate, strong_mvi_quadratic, synthetic_fair_classification,
    toy1_quadratic, toy2_polynomial, quadratic_v_probe, InnerMode, LegendreGenerator, MirrorMap,
    PrimalDualPoint, ResolventMode, SolverConfig,
};

fn verdict(n: usize, ok: bool, what: &str) {
    println!(
        "ACCEPTANCE {n} {}: {what}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "acceptance criterion {n} failed: {what}");
}

#[test]
fn criterion_01_sublinear_rate_toy1() {
    let clock = Instant::now();
    let e = toy1_quadratic(1.0, 0.25).unwrap();
    let config = SolverConfig::new(0.4, InnerMode::Exact, 1000).unwrap();
    let start = PrimalDualPoint::scalar(0.0, 1.0);
    let report = run_sa_mgda(&e.problem, &config, &start).unwrap();
    let h = LegendreGenerator::semi_anchored(0.4, &e.problem);
    let x_star = e.problem.known_solution.clone().unwrap();
    let check = check_rate_weakmvi(&report.trace, &h, &x_star, 0.25).unwrap();
    let fast = clock.elapsed().as_secs_f64() < 1.0;
    verdict(
        1,
        check.holds && fast,
        &format!(
            "sublinear min-gap bound along 1000 exact steps (worst margin {:.3e}, {:.3}s)",
            check.worst_margin,
            clock.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_weak_mvi_identity_toy1() {
    use rand::{Rng, SeedableRng};
    let e = toy1_quadratic(1.0, 0.25).unwrap();
    let rho = 0.25;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = PrimalDualPoint::scalar(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let m = e.problem.saddle_differential(&x).unwrap();
        let w = m.norm();
        worst = worst.max((x.dot(&m) + rho / 2.0 * w * w).abs());
    }
    verdict(
        2,
        worst <= 1e-12,
        &format!("weak-MVI inequality holds with equality on 1000 samples (worst |slack| {worst:.3e})"),
    );
}

#[test]
fn criterion_03_pdhg_spectral_rate() {
    // Hand trace on the 1x1 problem.
    let e1 = bilinear_from_matrix(nalgebra::DMatrix::from_row_slice(1, 1, &[1.0]), "b1").unwrap();
    let c1 = SolverConfig::new(0.5, InnerMode::Exact, 2).unwrap();
    let r1 = run_pdhg(&e1.problem, &c1, &PrimalDualPoint::scalar(1.0, 1.0)).unwrap();
    let hand = (r1.trace.records[1].point.u[0] - 0.5).abs() <= 1e-15
        && (r1.trace.records[1].point.v[0] - 1.0).abs() <= 1e-15
        && (r1.trace.records[2].point.u[0]).abs() <= 1e-15
        && (r1.trace.records[2].point.v[0] - 0.75).abs() <= 1e-15;

    // Random 20x20 full-rank B.
    let e = random_bilinear(20, 0).unwrap();
    let b = samgda::solvers::bilinear_matrix(&e.problem).unwrap();
    let sv = b.clone().svd(false, false).singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let tau = 0.5 / sigma_max;
    let rate = spectral_rate(&b, tau).unwrap();
    let config = SolverConfig::new(tau, InnerMode::Exact, 500).unwrap();
    let report = run_pdhg(&e.problem, &config, &e.start).unwrap();
    let mut worst_ratio = 0.0f64;
    for w in report.trace.records.windows(2) {
        if w[1].k <= 50 {
            continue;
        }
        let prev = w[0].point.norm();
        if prev < 1e-300 {
            continue;
        }
        worst_ratio = worst_ratio.max(w[1].point.norm() / prev);
    }
    verdict(
        3,
        hand && worst_ratio <= rate + 0.01,
        &format!(
            "hand trace exact; per-step contraction {worst_ratio:.6} <= spectral rate {rate:.6} + 0.01"
        ),
    );
}

#[test]
fn criterion_04_finite_inner_floors_toy2() {
    let e = toy2_polynomial().unwrap();
    let tau = e.recommended_config.tau;
    let x_star = e.problem.known_solution.clone().unwrap();
    let omega = e.problem.domain_diameter.unwrap();
    let rho = e.problem.rho.unwrap();
    let h = LegendreGenerator::semi_anchored(tau, &e.problem);
    let mut floors = Vec::new();
    let mut all_hold = true;
    let mut worst_margin = f64::INFINITY;
    for j in [1usize, 5, 10, 20] {
        let config = SolverConfig::new(tau, InnerMode::Steps(j), 1500).unwrap();
        let report = run_sa_mgda(&e.problem, &config, &e.start).unwrap();
        floors.push(report.trace.residual_floor());
        let check =
            check_rate_inexact(&report.trace, &h, &e.problem, &x_star, rho, omega, j).unwrap();
        all_hold &= check.holds;
        worst_margin = worst_margin.min(check.worst_margin);
    }
    let monotone = floors.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    verdict(
        4,
        monotone && all_hold,
        &format!(
            "residual floors {floors:?} nonincreasing in J; inexact-rate bound holds (worst margin {worst_margin:.3e})"
        ),
    );
}

#[test]
fn criterion_05_linear_rate_strongmvi() {
    let e = strong_mvi_quadratic(0.5).unwrap();
    let config = SolverConfig::new(0.3, InnerMode::Exact, 200).unwrap();
    let report = run_sa_mgda(&e.problem, &config, &e.start).unwrap();
    let h = LegendreGenerator::semi_anchored(0.3, &e.problem);
    let x_star = e.problem.known_solution.clone().unwrap();
    let check = check_rate_strongmvi(&report.trace, &h, &e.problem, &x_star, 0.5).unwrap();
    verdict(
        5,
        check.holds,
        &format!(
            "geometric envelope holds for 200 steps (worst margin {:.3e} at k={})",
            check.worst_margin, check.at_iteration
        ),
    );
}

#[test]
fn criterion_06_backtracking_step_floor() {
    let e = toy1_quadratic(1.0, 0.25).unwrap();
    let delta = 0.5;
    let config = SolverConfig::new(0.4, InnerMode::Exact, 500)
        .unwrap()
        .with_backtracking(10.0, delta)
        .unwrap();
    let report = run_sa_mgda_backtracking(&e.problem, &config, &e.start).unwrap();
    let floor = delta / (e.problem.lipschitz + e.problem.l_hat());
    let mut nonincreasing = true;
    let mut above_floor = true;
    let mut prev = f64::INFINITY;
    for rec in report.trace.records.iter().skip(1) {
        nonincreasing &= rec.tau_k <= prev + 1e-15;
        above_floor &= rec.tau_k >= floor - 1e-12;
        prev = rec.tau_k;
    }
    let x_star = e.problem.known_solution.clone().unwrap();
    let check = check_rate_backtracking(&report.trace, &e.problem, &x_star, 0.25, delta).unwrap();
    verdict(
        6,
        nonincreasing && above_floor && check.holds,
        &format!(
            "tau nonincreasing, above floor {floor:.4}; adaptive-rate bound holds (worst margin {:.3e})",
            check.worst_margin
        ),
    );
}

#[test]
fn criterion_07_reduction_identities() {
    let e = toy1_quadratic(1.0, 0.25).unwrap();
    let config = SolverConfig::new(0.4, InnerMode::Exact, 100).unwrap();
    let standard = run_sa_mgda(&e.problem, &config, &e.start).unwrap();
    // (a) energy-mirror variant reproduces standard SA-MGDA.
    let mirror = run_sa_mgda_mirror(
        &e.problem,
        MirrorMap::energy(),
        MirrorMap::energy(),
        e.problem.lipschitz,
        &config,
        &e.start,
    )
    .unwrap();
    let mut worst_a = 0.0f64;
    for (ra, rb) in standard.trace.records.iter().zip(&mirror.trace.records) {
        worst_a = worst_a.max(ra.point.dist(&rb.point));
    }
    // (b) SA-MGDA equals generic BPP with the semi-anchored generator.
    let h = LegendreGenerator::semi_anchored(0.4, &e.problem);
    let generic = run_bpp(&e.problem, &h, &config, &e.start).unwrap();
    let mut worst_b = 0.0f64;
    for (ra, rb) in standard.trace.records.iter().zip(&generic.trace.records) {
        worst_b = worst_b.max(ra.point.dist(&rb.point));
    }
    verdict(
        7,
        worst_a <= 1e-10 && worst_b <= 1e-10,
        &format!("mirror/energy deviation {worst_a:.3e}; generic-BPP deviation {worst_b:.3e}"),
    );
}

#[test]
fn criterion_08_fair_training_worst_class() {
    let mut wins = 0usize;
    for seed in 0..10u64 {
        let e = synthetic_fair_classification(50, 5, seed).unwrap();
        let tau = 0.01;
        let k = 4000;
        let config = SolverConfig::new(tau, InnerMode::Exact, k).unwrap();
        let report = run_sa_mgda(&e.problem, &config, &e.start).unwrap();
        let final_point = report.trace.records.last().unwrap();
        let losses = e
            .problem
            .coupling
            .grad_v_at(&final_point.point.u, &final_point.point.v);
        let worst_sa = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        // Plain gradient descent on the uniformly averaged loss.
        let t_avg = vec![1.0 / 3.0; 3];
        let mut w = vec![0.0; e.problem.du];
        for _ in 0..k {
            let g = e.problem.coupling.grad_u_at(&w, &t_avg);
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi -= tau * gi;
            }
        }
        let losses_gd = e.problem.coupling.grad_v_at(&w, &t_avg);
        let worst_gd = losses_gd.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if worst_sa <= worst_gd {
            wins += 1;
        }
    }
    verdict(
        8,
        wins >= 8,
        &format!("worst-class loss no worse than averaged-loss GD on {wins}/10 seeds"),
    );
}

#[test]
fn criterion_09_baseline_contrast() {
    // Toy 1: anchored method converges, non-anchored multi-step GDA does not.
    let e = toy1_quadratic(1.0, 0.25).unwrap();
    let tau = e.recommended_config.tau;
    let config = SolverConfig::new(tau, InnerMode::Exact, 10_000).unwrap();
    let sa = run_sa_mgda(&e.problem, &config, &e.start).unwrap();
    let sa_min = sa.trace.residual_floor();
    let mgda_cfg = SolverConfig::new(tau, InnerMode::Steps(10), 10_000).unwrap();
    let mgda0 = run_mgda_baseline(&e.problem, 0.0, &e.start.v, &mgda_cfg, &e.start).unwrap();
    let initial = mgda0.trace.records[0].residual_norm;
    let mgda0_ok = mgda0.trace.residual_floor() >= initial - 1e-9;

    // Toy 2 with J=10: anchored beats regularized MGDA for each lambda.
    let e2 = toy2_polynomial().unwrap();
    let tau2 = e2.recommended_config.tau;
    let l2 = e2.problem.lipschitz;
    let c2 = SolverConfig::new(tau2, InnerMode::Steps(10), 2000).unwrap();
    let sa2 = run_sa_mgda(&e2.problem, &c2, &e2.start).unwrap();
    let sa2_final = sa2.final_residual();
    let mut contrast2 = true;
    let mut finals = Vec::new();
    for lambda in [0.0, l2 / 4.0, l2] {
        // Regularize around the starting v, as in the comparison experiment.
        let m = run_mgda_baseline(&e2.problem, lambda, &e2.start.v, &c2, &e2.start).unwrap();
        finals.push(m.final_residual());
        contrast2 &= sa2_final < m.final_residual();
    }
    verdict(
        9,
        sa_min <= 1e-6 && mgda0_ok && contrast2,
        &format!(
            "anchored reaches {sa_min:.2e} while lambda=0 baseline stays at {:.3}; anchored final {sa2_final:.2e} beats regularized finals {finals:?}",
            mgda0.trace.residual_floor()
        ),
    );
}

#[test]
fn criterion_10_oracle_agreement() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;

    // Semi-anchored resolvents on the scalar problems.
    let toy1 = toy1_quadratic(1.0, 0.25).unwrap();
    let probe = quadratic_v_probe();
    for (entry, tau) in [(&toy1, 0.4), (&probe, 0.25)] {
        let h = LegendreGenerator::semi_anchored(tau, &entry.problem);
        for _ in 0..50 {
            let x = PrimalDualPoint::scalar(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let prod = resolvent(&h, &entry.problem, &x, ResolventMode::ClosedForm)
                .unwrap()
                .point;
            let orac = exact_resolvent_oracle(&h, &entry.problem, &x, 1e-13).unwrap();
            worst = worst.max(prod.dist(&orac));
        }
    }
    // PDHG resolvent on a small bilinear problem.
    let e = random_bilinear(4, 3).unwrap();
    let b = samgda::solvers::bilinear_matrix(&e.problem).unwrap();
    let sigma_max = b
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let h = LegendreGenerator::pdhg_preconditioner(0.5 / sigma_max, b).unwrap();
    for _ in 0..50 {
        let flat: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x = PrimalDualPoint::from_flat(&flat, 4);
        let prod = resolvent(&h, &e.problem, &x, ResolventMode::ClosedForm)
            .unwrap()
            .point;
        let orac = exact_resolvent_oracle(&h, &e.problem, &x, 1e-13).unwrap();
        worst = worst.max(prod.dist(&orac));
    }

    // Gradient oracles against central differences.
    let mut fd_worst = 0.0f64;
    for entry in [
        &toy1,
        &probe,
        &e,
        &strong_mvi_quadratic(0.5).unwrap(),
        &synthetic_fair_classification(50, 5, 0).unwrap(),
    ] {
        fd_worst = fd_worst.max(finite_difference_check(&entry.problem, 50, 21).unwrap());
    }
    verdict(
        10,
        worst <= 1e-11 && fd_worst <= 1e-4,
        &format!("resolvent referee deviation {worst:.3e}; worst finite-difference error {fd_worst:.3e}"),
    );
}
