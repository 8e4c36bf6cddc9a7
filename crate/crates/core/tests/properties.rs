//! Property-based invariants over the core numeric primitives.

use proptest::prelude::*;
use samgda::{
    aggregate_lipschitz, eta_from_tau, feasible_step_range, toy1_quadratic,
    weak_monotonicity_constant, PrimalDualPoint,
};

proptest! {
    /// eta (1/tau + 2 Lvv) = 1 exactly for every valid pair.
    #[test]
    fn eta_identity(tau in 1e-6f64..10.0, l_vv in 0.0f64..100.0) {
        let eta = eta_from_tau(tau, l_vv);
        prop_assert!((eta * (1.0 / tau + 2.0 * l_vv) - 1.0).abs() <= 1e-12);
    }

    /// Simplex projection always lands on the simplex.
    #[test]
    fn simplex_projection_feasible(z in proptest::collection::vec(-10.0f64..10.0, 1..8)) {
        let p = samgda::problem::project_simplex(&z);
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }

    /// Aggregate Lipschitz formula dominates each partial constant and is
    /// monotone in each argument.
    #[test]
    fn aggregate_lipschitz_dominates(
        a in 0.0f64..10.0, b in 0.0f64..10.0, c in 0.0f64..10.0, d in 1e-9f64..10.0
    ) {
        let l = aggregate_lipschitz(a, b, c, d).unwrap();
        prop_assert!(l >= a.max(b).max(c).max(d) - 1e-12);
        let l2 = aggregate_lipschitz(a + 1.0, b, c, d).unwrap();
        prop_assert!(l2 >= l);
        prop_assert!(weak_monotonicity_constant(a, d) <= l + 1e-12);
    }

    /// Feasible intervals are nonempty exactly under the rho precondition.
    #[test]
    fn feasible_range_nonempty(l in 0.1f64..10.0, l_hat in 0.0f64..10.0, frac in 0.0f64..0.999) {
        let rho = frac / (2.0 * l + l_hat);
        let (lo, hi) = feasible_step_range(l, l_hat, rho).unwrap();
        prop_assert!(lo < hi, "({lo}, {hi}) empty for rho {rho}");
    }

    /// The toy-1 operator is exactly 1-Lipschitz and satisfies the declared
    /// aggregate bound.
    #[test]
    fn toy1_sampled_lipschitz(
        x1 in -3.0f64..3.0, x2 in -3.0f64..3.0, y1 in -3.0f64..3.0, y2 in -3.0f64..3.0
    ) {
        let e = toy1_quadratic(1.0, 0.25).unwrap();
        let x = PrimalDualPoint::scalar(x1, x2);
        let y = PrimalDualPoint::scalar(y1, y2);
        let mx = e.problem.saddle_differential(&x).unwrap();
        let my = e.problem.saddle_differential(&y).unwrap();
        let c = &e.problem.coupling;
        let agg = aggregate_lipschitz(c.l_uu, c.l_uv, c.l_vu, c.l_vv).unwrap();
        let dn = x.dist(&y);
        prop_assert!(mx.sub(&my).norm() <= 1.0 * dn + 1e-9);
        prop_assert!(mx.sub(&my).norm() <= agg * dn + 1e-9);
        // Weak monotonicity with gamma = max{Luu, Lvv}.
        let gamma = weak_monotonicity_constant(c.l_uu, c.l_vv);
        prop_assert!(x.sub(&y).dot(&mx.sub(&my)) >= -gamma * dn * dn - 1e-9);
    }

    /// Flat round-trip of points preserves contents.
    #[test]
    fn point_flat_roundtrip(
        u in proptest::collection::vec(-5.0f64..5.0, 1..5),
        v in proptest::collection::vec(-5.0f64..5.0, 1..5)
    ) {
        let p = PrimalDualPoint::new(u, v).unwrap();
        let q = PrimalDualPoint::from_flat(&p.to_flat(), p.du());
        prop_assert_eq!(p, q);
    }
}
