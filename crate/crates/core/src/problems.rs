//! Concrete problem instances with their analytic or estimated constants,
//! plus sampling utilities that double-check declared constants.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{InnerMode, SolverConfig};
use crate::error::{Result, SamgdaError};
use crate::point::{vnorm, PrimalDualPoint};
use crate::problem::{
    aggregate_lipschitz, AffineOperator, CompositeMinimaxProblem, ProxableFunction,
    SmoothCoupling,
};

/// A named problem with a ready-to-run default configuration.
#[derive(Clone)]
pub struct ProblemCatalogEntry {
    pub name: String,
    pub problem: CompositeMinimaxProblem,
    pub recommended_config: SolverConfig,
    pub start: PrimalDualPoint,
    pub note: String,
}

/// Scalar quadratic saddle with a weak-MVI constant that holds with equality:
/// phi(u,v) = -(rho L^2/4) u^2 + L sqrt(1 - rho^2 L^2/4) u v + (rho L^2/4) v^2.
pub fn toy1_quadratic(l: f64, rho: f64) -> Result<ProblemCatalogEntry> {
    if l.is_nan() || l <= 0.0 {
        return Err(SamgdaError::InvalidConfig(format!("L must be positive, got {l}")));
    }
    let s = 1.0 - rho * rho * l * l / 4.0;
    if s <= 0.0 {
        return Err(SamgdaError::SqrtArgNegative);
    }
    let a = rho * l * l / 2.0; // diagonal curvature
    let c = l * s.sqrt(); // off-diagonal coupling
    let value: crate::problem::ValueOracle = Arc::new(move |u, v| {
        -(a / 2.0) * u[0] * u[0] + c * u[0] * v[0] + (a / 2.0) * v[0] * v[0]
    });
    let coupling = SmoothCoupling {
        value: Some(value),
        grad_u: Arc::new(move |u, v| vec![-a * u[0] + c * v[0]]),
        grad_v: Arc::new(move |u, v| vec![c * u[0] + a * v[0]]),
        l_uu: a,
        l_uv: c,
        l_vu: c,
        l_vv: a,
    };
    // M_phi = [[-a, c], [-c, -a]]; operator norm is exactly L.
    let matrix = DMatrix::from_row_slice(2, 2, &[-a, c, -c, -a]);
    let problem = CompositeMinimaxProblem {
        du: 1,
        dv: 1,
        f: ProxableFunction::zero(),
        g: ProxableFunction::zero(),
        coupling,
        lipschitz: l,
        known_solution: Some(PrimalDualPoint::scalar(0.0, 0.0)),
        rho: Some(rho),
        mu: None,
        domain_diameter: None,
        affine: Some(AffineOperator {
            matrix,
            offset: DVector::zeros(2),
        }),
    };
    let config = SolverConfig::from_feasible_midpoint(
        problem.lipschitz,
        problem.l_hat(),
        rho,
        InnerMode::Exact,
        1000,
    )?;
    Ok(ProblemCatalogEntry {
        name: "toy1".to_string(),
        problem,
        recommended_config: config,
        start: PrimalDualPoint::scalar(0.0, 1.0),
        note: "scalar quadratic saddle; weak-MVI inequality holds with equality".to_string(),
    })
}

fn toy2_psi(u: f64, v: f64) -> f64 {
    0.125 * u * (-1.0 + u * u + v * v) * (-1.0 + 4.0 * u * u + 4.0 * v * v)
}

fn toy2_operator(u: f64, v: f64) -> (f64, f64) {
    (toy2_psi(u, v) - v, toy2_psi(v, u) + u)
}

/// Polynomial toy saddle defined directly through its operator
/// M(u,v) = (psi(u,v) - v, psi(v,u) + u) on the box [-1.1, 1.1]^2.
/// No potential exists for this field, so the value oracle is absent.
pub fn toy2_polynomial() -> Result<ProblemCatalogEntry> {
    // Partial smoothness constants estimated over the unit disk (where the
    // iterates live); the box-wide constants are much larger and would leave
    // no feasible step range.
    let (l_uu, l_uv, l_vu, l_vv) = toy2_partial_constants();
    let coupling = SmoothCoupling {
        value: None,
        grad_u: Arc::new(|u, v| vec![toy2_operator(u[0], v[0]).0]),
        // grad_v phi = -(psi(v,u) + u) so that M = (grad_u phi, -grad_v phi).
        grad_v: Arc::new(|u, v| vec![-toy2_operator(u[0], v[0]).1]),
        l_uu,
        l_uv,
        l_vu,
        l_vv,
    };
    let rho = 0.1399;
    let problem = CompositeMinimaxProblem {
        du: 1,
        dv: 1,
        f: ProxableFunction::box_indicator(-1.1, 1.1),
        g: ProxableFunction::box_indicator(-1.1, 1.1),
        coupling,
        lipschitz: 1.6251,
        known_solution: Some(PrimalDualPoint::scalar(0.0, 0.0)),
        rho: Some(rho),
        mu: None,
        domain_diameter: Some(2.2 * 2f64.sqrt()),
        affine: None,
    };
    let config = SolverConfig::from_feasible_midpoint(
        problem.lipschitz,
        problem.l_hat(),
        rho,
        InnerMode::Steps(10),
        1000,
    )?;
    Ok(ProblemCatalogEntry {
        name: "toy2".to_string(),
        problem,
        recommended_config: config,
        start: PrimalDualPoint::scalar(0.9, 0.9),
        note: "operator-only polynomial saddle on a box; no potential function".to_string(),
    })
}

/// Grid estimate of the partial Jacobian bounds of the toy-2 operator over
/// the closed unit disk, by central differences on a fixed grid.
fn toy2_partial_constants() -> (f64, f64, f64, f64) {
    let n = 101;
    let step = 1e-6;
    let (mut l_uu, mut l_uv, mut l_vu, mut l_vv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            let u = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            let v = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
            if u * u + v * v > 1.0 {
                continue;
            }
            // grad_u phi = M_u, grad_v phi = -M_v
            let du_u = (toy2_operator(u + step, v).0 - toy2_operator(u - step, v).0) / (2.0 * step);
            let du_v = (toy2_operator(u, v + step).0 - toy2_operator(u, v - step).0) / (2.0 * step);
            let dv_u = (toy2_operator(u + step, v).1 - toy2_operator(u - step, v).1) / (2.0 * step);
            let dv_v = (toy2_operator(u, v + step).1 - toy2_operator(u, v - step).1) / (2.0 * step);
            l_uu = l_uu.max(du_u.abs());
            l_uv = l_uv.max(du_v.abs());
            l_vu = l_vu.max(dv_u.abs());
            l_vv = l_vv.max(dv_v.abs());
        }
    }
    (l_uu, l_uv, l_vu, l_vv)
}

/// Bilinear problem <u, B v> with a seeded random full-rank B, resampled
/// (then spectrally clamped as a last resort) until sigma_min >= 0.1 sigma_max.
pub fn random_bilinear(d: usize, seed: u64) -> Result<ProblemCatalogEntry> {
    if d == 0 {
        return Err(SamgdaError::InvalidConfig("d must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b: DMatrix<f64> = DMatrix::zeros(d, d);
    let mut ok = false;
    for _ in 0..10 {
        for i in 0..d {
            for j in 0..d {
                b[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let sv = b.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin >= 0.1 * smax {
            ok = true;
            break;
        }
    }
    if !ok {
        // Deterministic fallback: push the small singular values up to the
        // threshold so the conditioning invariant holds for every seed.
        let svd = b.clone().svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let mut sv = svd.singular_values.clone();
        for s in sv.iter_mut() {
            *s = s.max(0.1 * smax);
        }
        let u = svd.u.as_ref().unwrap();
        let vt = svd.v_t.as_ref().unwrap();
        b = u * DMatrix::from_diagonal(&sv) * vt;
    }
    bilinear_from_matrix(b, "bilinear")
}

/// Wrap an explicit coupling matrix B as a bilinear catalog entry.
pub fn bilinear_from_matrix(b: DMatrix<f64>, name: &str) -> Result<ProblemCatalogEntry> {
    let du = b.nrows();
    let dv = b.ncols();
    let sv = b.clone().svd(false, false).singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Err(SamgdaError::DegenerateCoupling);
    }
    let b_val = b.clone();
    let b_gu = b.clone();
    let b_gv = b.clone();
    let coupling = SmoothCoupling {
        value: Some(Arc::new(move |u, v| {
            let uu = DVector::from_column_slice(u);
            let vv = DVector::from_column_slice(v);
            uu.dot(&(&b_val * vv))
        })),
        grad_u: Arc::new(move |_, v| {
            (&b_gu * DVector::from_column_slice(v)).as_slice().to_vec()
        }),
        grad_v: Arc::new(move |u, _| {
            (b_gv.transpose() * DVector::from_column_slice(u))
                .as_slice()
                .to_vec()
        }),
        l_uu: 0.0,
        l_uv: sigma_max,
        l_vu: sigma_max,
        l_vv: 0.0,
    };
    let d = du + dv;
    let mut matrix = DMatrix::zeros(d, d);
    for i in 0..du {
        for j in 0..dv {
            matrix[(i, du + j)] = b[(i, j)];
            matrix[(du + j, i)] = -b[(i, j)];
        }
    }
    let problem = CompositeMinimaxProblem {
        du,
        dv,
        f: ProxableFunction::zero(),
        g: ProxableFunction::zero(),
        coupling,
        lipschitz: sigma_max,
        known_solution: Some(PrimalDualPoint::zeros(du, dv)),
        rho: Some(0.0),
        mu: None,
        domain_diameter: None,
        affine: Some(AffineOperator {
            matrix,
            offset: DVector::zeros(d),
        }),
    };
    let tau = 0.5 / sigma_max;
    let config = SolverConfig::new(tau, InnerMode::Exact, 500)?;
    Ok(ProblemCatalogEntry {
        name: name.to_string(),
        problem,
        recommended_config: config,
        start: PrimalDualPoint {
            u: vec![1.0; du],
            v: vec![1.0; dv],
        },
        note: "monotone bilinear coupling with full-rank matrix".to_string(),
    })
}

/// mu-strongly monotone quadratic saddle:
/// phi(u,v) = (mu/2) u^2 + u v - (mu/2) v^2, M = [[mu, 1], [-1, mu]].
pub fn strong_mvi_quadratic(mu: f64) -> Result<ProblemCatalogEntry> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(SamgdaError::InvalidConfig(format!("mu must be positive, got {mu}")));
    }
    let coupling = SmoothCoupling {
        value: Some(Arc::new(move |u, v| {
            mu / 2.0 * u[0] * u[0] + u[0] * v[0] - mu / 2.0 * v[0] * v[0]
        })),
        grad_u: Arc::new(move |u, v| vec![mu * u[0] + v[0]]),
        grad_v: Arc::new(move |u, v| vec![u[0] - mu * v[0]]),
        l_uu: mu,
        l_uv: 1.0,
        l_vu: 1.0,
        l_vv: mu,
    };
    let matrix = DMatrix::from_row_slice(2, 2, &[mu, 1.0, -1.0, mu]);
    let problem = CompositeMinimaxProblem {
        du: 1,
        dv: 1,
        f: ProxableFunction::zero(),
        g: ProxableFunction::zero(),
        coupling,
        lipschitz: (mu * mu + 1.0).sqrt(),
        known_solution: Some(PrimalDualPoint::scalar(0.0, 0.0)),
        rho: Some(0.0),
        mu: Some(mu),
        domain_diameter: None,
        affine: Some(AffineOperator {
            matrix,
            offset: DVector::zeros(2),
        }),
    };
    let config = SolverConfig::new(0.3, InnerMode::Exact, 200)?;
    Ok(ProblemCatalogEntry {
        name: "strongmvi".to_string(),
        problem,
        recommended_config: config,
        start: PrimalDualPoint::scalar(1.0, 1.0),
        note: "strongly monotone quadratic saddle with known modulus".to_string(),
    })
}

/// Scalar probe problem with phi = v^2 / 2 and no u-coupling; used by the
/// resolvent referee tests (the v-part of the semi-anchored resolvent has a
/// simple closed form).
pub fn quadratic_v_probe() -> ProblemCatalogEntry {
    let coupling = SmoothCoupling {
        value: Some(Arc::new(|_, v| 0.5 * v[0] * v[0])),
        grad_u: Arc::new(|_, _| vec![0.0]),
        grad_v: Arc::new(|_, v| vec![v[0]]),
        l_uu: 0.0,
        l_uv: 0.0,
        l_vu: 0.0,
        l_vv: 1.0,
    };
    // M = (0, -v): A = [[0,0],[0,-1]].
    let matrix = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0]);
    let problem = CompositeMinimaxProblem {
        du: 1,
        dv: 1,
        f: ProxableFunction::zero(),
        g: ProxableFunction::zero(),
        coupling,
        lipschitz: 1.0,
        known_solution: Some(PrimalDualPoint::scalar(0.0, 0.0)),
        rho: None,
        mu: None,
        domain_diameter: None,
        affine: Some(AffineOperator {
            matrix,
            offset: DVector::zeros(2),
        }),
    };
    let config = SolverConfig::new(0.25, InnerMode::Exact, 100).unwrap();
    ProblemCatalogEntry {
        name: "vprobe".to_string(),
        problem,
        recommended_config: config,
        start: PrimalDualPoint::scalar(0.0, 1.0),
        note: "scalar probe with phi = v^2/2".to_string(),
    }
}

struct FairData {
    x: Vec<Vec<f64>>, // rows with trailing bias 1
    y: Vec<usize>,
    dim_p: usize, // feature_dim + 1
}

fn softmax3(z: [f64; 3]) -> [f64; 3] {
    let m = z[0].max(z[1]).max(z[2]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp(), (z[2] - m).exp()];
    let s = e[0] + e[1] + e[2];
    [e[0] / s, e[1] / s, e[2] / s]
}

fn fair_logits(w: &[f64], x: &[f64], dim_p: usize) -> [f64; 3] {
    let mut z = [0.0; 3];
    for (c, zc) in z.iter_mut().enumerate() {
        *zc = w[c * dim_p..(c + 1) * dim_p]
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum();
    }
    z
}

fn fair_class_losses(data: &FairData, w: &[f64]) -> [f64; 3] {
    let mut sums = [0.0; 3];
    let mut counts = [0usize; 3];
    for (xi, &yi) in data.x.iter().zip(&data.y) {
        let p = softmax3(fair_logits(w, xi, data.dim_p));
        sums[yi] += -(p[yi].max(1e-12)).ln();
        counts[yi] += 1;
    }
    [
        sums[0] / counts[0] as f64,
        sums[1] / counts[1] as f64,
        sums[2] / counts[2] as f64,
    ]
}

fn fair_grad_w(data: &FairData, w: &[f64], t: &[f64]) -> Vec<f64> {
    let mut counts = [0usize; 3];
    for &yi in &data.y {
        counts[yi] += 1;
    }
    let mut g = vec![0.0; 3 * data.dim_p];
    for (xi, &yi) in data.x.iter().zip(&data.y) {
        let p = softmax3(fair_logits(w, xi, data.dim_p));
        let scale = t[yi] / counts[yi] as f64;
        for c in 0..3 {
            let coef = scale * (p[c] - if c == yi { 1.0 } else { 0.0 });
            for (j, &xij) in xi.iter().enumerate() {
                g[c * data.dim_p + j] += coef * xij;
            }
        }
    }
    g
}

/// Three-class synthetic min-max fair classification:
/// min over softmax weights w, max over class weights t in the simplex of
/// sum_i t_i L_i(w), with L_i the per-class mean cross-entropy. The third
/// class cloud straddles the first two, so it is systematically harder.
pub fn synthetic_fair_classification(
    n_per_class: usize,
    feature_dim: usize,
    seed: u64,
) -> Result<ProblemCatalogEntry> {
    if n_per_class < 10 {
        return Err(SamgdaError::InvalidConfig(
            "n_per_class must be >= 10".into(),
        ));
    }
    if feature_dim == 0 {
        return Err(SamgdaError::InvalidConfig("feature_dim must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = vec![vec![0.0; feature_dim]; 3];
    for m in means.iter_mut().take(2) {
        for z in m.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
    }
    means[2] = (0..feature_dim)
        .map(|j| {
            let noise: f64 = rng.sample(StandardNormal);
            0.5 * means[0][j] + 0.5 * means[1][j] + 0.3 * noise
        })
        .collect();
    let mut x = Vec::with_capacity(3 * n_per_class);
    let mut y = Vec::with_capacity(3 * n_per_class);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..n_per_class {
            let mut row: Vec<f64> = mean
                .iter()
                .map(|&m| m + rng.sample::<f64, _>(StandardNormal))
                .collect();
            row.push(1.0); // bias feature
            x.push(row);
            y.push(c);
        }
    }
    let dim_p = feature_dim + 1;
    let data = Arc::new(FairData { x, y, dim_p });

    // Analytic smoothness bounds. The softmax cross-entropy Hessian in logit
    // space is bounded by 1/2, so the per-class loss is
    // sigma_max(X_c)^2 / (2 n_c)-smooth in w; the gradient norm is bounded
    // because ||p - e_c|| <= sqrt(2).
    let mut l_uu = 0.0f64;
    let mut grad_bound = 0.0f64;
    for c in 0..3 {
        let rows: Vec<&Vec<f64>> = data
            .x
            .iter()
            .zip(&data.y)
            .filter(|(_, &yi)| yi == c)
            .map(|(xi, _)| xi)
            .collect();
        let n_c = rows.len();
        if n_c == 0 {
            return Err(SamgdaError::DegenerateData { class: c });
        }
        let mut xc = DMatrix::zeros(n_c, dim_p);
        let mut norm_sum = 0.0;
        for (i, row) in rows.iter().enumerate() {
            for (j, &z) in row.iter().enumerate() {
                xc[(i, j)] = z;
            }
            norm_sum += vnorm(row);
        }
        let smax = xc.svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max);
        l_uu = l_uu.max(smax * smax / (2.0 * n_c as f64));
        grad_bound = grad_bound.max(2f64.sqrt() * norm_sum / n_c as f64);
    }
    let l_uv = 3f64.sqrt() * grad_bound;

    let d_val = data.clone();
    let d_gu = data.clone();
    let d_gv = data.clone();
    let coupling = SmoothCoupling {
        value: Some(Arc::new(move |u, v| {
            let losses = fair_class_losses(&d_val, u);
            losses.iter().zip(v).map(|(l, t)| l * t).sum()
        })),
        grad_u: Arc::new(move |u, v| fair_grad_w(&d_gu, u, v)),
        grad_v: Arc::new(move |u, _| fair_class_losses(&d_gv, u).to_vec()),
        l_uu,
        l_uv,
        l_vu: l_uv,
        l_vv: 0.0,
    };
    let lipschitz = aggregate_lipschitz(l_uu, l_uv, l_uv, 0.0)?;
    let problem = CompositeMinimaxProblem {
        du: 3 * dim_p,
        dv: 3,
        f: ProxableFunction::zero(),
        g: ProxableFunction::simplex_indicator(),
        coupling,
        lipschitz,
        known_solution: None,
        rho: None,
        mu: None,
        domain_diameter: Some(2f64.sqrt()),
        affine: None,
    };
    let config = SolverConfig::new(0.01, InnerMode::Exact, 4000)?.with_seed(seed);
    let start = PrimalDualPoint {
        u: vec![0.0; 3 * dim_p],
        v: vec![1.0 / 3.0; 3],
    };
    Ok(ProblemCatalogEntry {
        name: "fair".to_string(),
        problem,
        recommended_config: config,
        start,
        note: "synthetic worst-class fair softmax classification".to_string(),
    })
}

/// Sampled consistency check of the declared constants:
/// returns (L_est, gamma_est, rho_margin) over `sample_count` uniform draws
/// from [-box, box]^d. L_est is the max difference ratio of M, gamma_est the
/// worst monotonicity violation, and rho_margin the minimal slack of the
/// weak-MVI inequality at the declared rho (nonnegative means consistent).
pub fn estimate_constants(
    problem: &CompositeMinimaxProblem,
    sample_count: usize,
    box_half_width: f64,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let x_star = problem
        .known_solution
        .clone()
        .ok_or_else(|| SamgdaError::InvalidConfig("rho margin needs a known solution".into()))?;
    let rho = problem.rho.unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = problem.du + problem.dv;
    let draw = |rng: &mut ChaCha8Rng| -> PrimalDualPoint {
        let flat: Vec<f64> = (0..d)
            .map(|_| rng.gen_range(-box_half_width..box_half_width))
            .collect();
        PrimalDualPoint::from_flat(&flat, problem.du)
    };
    let mut l_est = 0.0f64;
    let mut gamma_est = f64::NEG_INFINITY;
    let mut rho_margin = f64::INFINITY;
    for _ in 0..sample_count {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let mx = problem.saddle_differential(&x)?;
        let my = problem.saddle_differential(&y)?;
        let dx = x.sub(&y);
        let dm = mx.sub(&my);
        let nd = dx.norm();
        if nd > 1e-12 {
            l_est = l_est.max(dm.norm() / nd);
            gamma_est = gamma_est.max(-dx.dot(&dm) / (nd * nd));
        }
        let w = mx.norm();
        rho_margin = rho_margin.min(x.sub(&x_star).dot(&mx) + rho / 2.0 * w * w);
    }
    Ok((l_est, gamma_est, rho_margin))
}

/// Default catalog entry for a stable CLI problem name.
pub fn catalog_entry(name: &str, seed: u64) -> Result<ProblemCatalogEntry> {
    match name {
        "toy1" => toy1_quadratic(1.0, 0.25),
        "toy2" => toy2_polynomial(),
        "bilinear" => random_bilinear(20, seed),
        "strongmvi" => strong_mvi_quadratic(0.5),
        "fair" => synthetic_fair_classification(50, 5, seed),
        other => Err(SamgdaError::InvalidConfig(format!(
            "unknown problem '{other}'; valid: toy1, toy2, bilinear, strongmvi, fair"
        ))),
    }
}
