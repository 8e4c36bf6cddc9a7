//! Experiment runner for the samgda library: reproduces the desk-scale
//! saddle-point experiments, emits machine-readable traces, and drives the
//! verification suite.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use samgda::{
    check_rate_backtracking, check_rate_inexact, check_rate_mirror, check_rate_strongmvi,
    check_rate_weakmvi, finite_difference_check, spectral_rate, BoundCheckResult, InnerMode,
    IterateTrace, LegendreGenerator, MirrorMap, ProblemCatalogEntry, SamgdaError, SolverConfig,
    SolverReport, Termination,
};

#[derive(Parser)]
#[command(name = "samgda", about = "Minimax saddle-point experiment runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment with one solver; writes a CSV trace and a JSON summary.
    Run {
        /// Experiment: toy1 | toy2 | pdhg-linear | strongmvi | fair | verify-all
        experiment: String,
        /// Solver: sa-mgda | sa-mgda-bt | sa-mgda-mirror | pdhg | mgda | gda | ppm
        #[arg(default_value = "sa-mgda")]
        solver: String,
        #[arg(long)]
        tau: Option<f64>,
        /// Inner ascent steps per outer iteration.
        #[arg(long = "J")]
        j: Option<usize>,
        /// Outer iteration count.
        #[arg(long = "K")]
        k: Option<usize>,
        /// MGDA regularization weight.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Backtracking initial step.
        #[arg(long)]
        tau0: Option<f64>,
        /// Backtracking shrink factor in (0,1).
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        residual_stop: Option<f64>,
        /// Flat key=value config file (catalog defaults < file < flags).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        format: OutputFormat,
    },
    /// Run several solvers on the same experiment; writes a long-format CSV
    /// (method, k, residual). Each spec is `solver` or `solver:key=val,...`.
    Compare {
        experiment: String,
        specs: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Execute the full verification battery.
    VerifyAll {
        #[arg(long)]
        seed: Option<u64>,
    },
}

const VALID_KEYS: &str = "tau, J, K, lambda, seed, tau0, delta, residual_stop";

/// Run parameter overrides, strongest-precedence layer last.
#[derive(Default, Clone)]
pub struct Overrides {
    tau: Option<f64>,
    j: Option<usize>,
    k: Option<usize>,
    lambda: Option<f64>,
    seed: Option<u64>,
    tau0: Option<f64>,
    delta: Option<f64>,
    residual_stop: Option<f64>,
}

impl Overrides {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let bad = |e: std::num::ParseFloatError| format!("bad value for {key}: {e}");
        match key {
            "tau" => self.tau = Some(value.parse().map_err(bad)?),
            "J" => self.j = Some(value.parse().map_err(|e| format!("bad value for J: {e}"))?),
            "K" => self.k = Some(value.parse().map_err(|e| format!("bad value for K: {e}"))?),
            "lambda" => self.lambda = Some(value.parse().map_err(bad)?),
            "seed" => {
                self.seed = Some(value.parse().map_err(|e| format!("bad value for seed: {e}"))?)
            }
            "tau0" => self.tau0 = Some(value.parse().map_err(bad)?),
            "delta" => self.delta = Some(value.parse().map_err(bad)?),
            "residual_stop" => self.residual_stop = Some(value.parse().map_err(bad)?),
            other => {
                return Err(format!(
                    "unknown config key '{other}'; valid keys: {VALID_KEYS}"
                ))
            }
        }
        Ok(())
    }

    fn merge_over(&mut self, weaker: &Overrides) {
        macro_rules! take {
            ($f:ident) => {
                if self.$f.is_none() {
                    self.$f = weaker.$f;
                }
            };
        }
        take!(tau);
        take!(j);
        take!(k);
        take!(lambda);
        take!(seed);
        take!(tau0);
        take!(delta);
        take!(residual_stop);
    }
}

fn parse_config_file(path: &Path) -> Result<Overrides, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut o = Overrides::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        o.set(key.trim(), value.trim())?;
    }
    Ok(o)
}

fn env_seed() -> Option<u64> {
    std::env::var("MINIMAX_SA_SEED").ok()?.parse().ok()
}

fn experiment_catalog_name(experiment: &str) -> Result<&'static str, String> {
    match experiment {
        "toy1" => Ok("toy1"),
        "toy2" => Ok("toy2"),
        "pdhg-linear" => Ok("bilinear"),
        "strongmvi" => Ok("strongmvi"),
        "fair" => Ok("fair"),
        other => Err(format!(
            "unknown experiment '{other}'; valid: toy1, toy2, pdhg-linear, strongmvi, fair, verify-all"
        )),
    }
}

/// One fully resolved run.
pub struct RunOutcome {
    pub experiment: String,
    pub solver: String,
    pub report: SolverReport,
    pub bound_checks: Vec<BoundCheckResult>,
    pub entry: ProblemCatalogEntry,
    pub lambda: f64,
}

fn check_compatible(experiment: &str, solver: &str) -> Result<(), String> {
    let err = |why: &str| {
        Err(format!(
            "solver '{solver}' is not compatible with experiment '{experiment}': {why}"
        ))
    };
    match solver {
        "pdhg" => {
            if experiment != "pdhg-linear" {
                return err("pdhg requires the bilinear experiment (pdhg-linear)");
            }
        }
        "sa-mgda-mirror" => {
            if !matches!(experiment, "pdhg-linear" | "strongmvi") {
                return err("the mirror variant is analyzed only for monotone problems (rho = 0)");
            }
        }
        "ppm" => {
            if !matches!(experiment, "toy1" | "strongmvi" | "pdhg-linear") {
                return err("classical proximal point needs a closed-form resolvent (affine problems)");
            }
        }
        "sa-mgda-bt" => {
            if experiment == "toy2" {
                return err("backtracking needs a potential value oracle; toy2 is operator-only");
            }
        }
        "sa-mgda" | "mgda" | "gda" => {}
        other => {
            return Err(format!(
                "unknown solver '{other}'; valid: sa-mgda, sa-mgda-bt, sa-mgda-mirror, pdhg, mgda, gda, ppm"
            ))
        }
    }
    Ok(())
}

/// Resolve the experiment, apply override precedence, run the solver, and
/// compute the applicable rate-bound checks.
pub fn execute_run(
    experiment: &str,
    solver: &str,
    overrides: &Overrides,
) -> Result<RunOutcome, String> {
    check_compatible(experiment, solver)?;
    let catalog_name = experiment_catalog_name(experiment)?;
    let seed = overrides.seed.or_else(env_seed).unwrap_or(0);
    let entry =
        samgda::catalog_entry(catalog_name, seed).map_err(|e| e.to_string())?;
    let mut config = entry.recommended_config.clone().with_seed(seed);
    if let Some(tau) = overrides.tau {
        config.tau = tau;
    }
    if let Some(j) = overrides.j {
        config.inner = InnerMode::Steps(j);
    }
    if let Some(k) = overrides.k {
        config.outer_steps = k;
    }
    if let Some(eps) = overrides.residual_stop {
        config.residual_stop = Some(eps);
    }
    let lambda = overrides.lambda.unwrap_or(0.0);
    if solver == "sa-mgda-bt" {
        let tau0 = overrides.tau0.unwrap_or(config.tau);
        let delta = overrides.delta.unwrap_or(0.5);
        config = config
            .with_backtracking(tau0, delta)
            .map_err(|e| e.to_string())?;
    }
    let problem = &entry.problem;
    let x0 = &entry.start;

    let report = match solver {
        "sa-mgda" => samgda::run_sa_mgda(problem, &config, x0),
        "sa-mgda-bt" => samgda::run_sa_mgda_backtracking(problem, &config, x0),
        "sa-mgda-mirror" => samgda::run_sa_mgda_mirror(
            problem,
            MirrorMap::energy(),
            MirrorMap::energy(),
            problem.lipschitz,
            &config,
            x0,
        ),
        "pdhg" => samgda::run_pdhg(problem, &config, x0),
        "ppm" => {
            let h = LegendreGenerator::energy(config.tau);
            samgda::run_bpp(problem, &h, &config, x0)
        }
        "mgda" => {
            let mut c = config.clone();
            if matches!(c.inner, InnerMode::Exact) {
                // Fair comparison: same finite inner budget as SA-MGDA runs.
                c.inner = InnerMode::Steps(overrides.j.unwrap_or(10));
            }
            samgda::run_mgda_baseline(problem, lambda, &x0.v, &c, x0)
        }
        "gda" => samgda::run_gda_baseline(problem, &config, x0),
        _ => unreachable!(),
    }
    .map_err(|e| e.to_string())?;

    let bound_checks = compute_bound_checks(experiment, solver, &entry, &config, &report)
        .map_err(|e| e.to_string())?;
    Ok(RunOutcome {
        experiment: experiment.to_string(),
        solver: solver.to_string(),
        report,
        bound_checks,
        entry,
        lambda,
    })
}

/// Empirical PDHG contraction versus the spectral prediction: after a
/// burn-in, each step must contract ||x_k|| by at most rate + 0.01.
fn pdhg_contraction_check(
    trace: &IterateTrace,
    b: &nalgebra::DMatrix<f64>,
    tau: f64,
) -> Result<BoundCheckResult, SamgdaError> {
    let rate = spectral_rate(b, tau)? + 0.01;
    const BURN_IN: usize = 50;
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for w in trace.records.windows(2) {
        if w[1].k <= BURN_IN {
            continue;
        }
        let prev = w[0].point.norm();
        let next = w[1].point.norm();
        if prev < 1e-300 {
            continue;
        }
        let margin = rate - next / prev;
        if margin < worst {
            worst = margin;
            at = w[1].k;
        }
    }
    Ok(BoundCheckResult {
        theorem_id: "rate-pdhg-spectral".to_string(),
        holds: worst >= 0.0,
        worst_margin: worst,
        at_iteration: at,
    })
}

fn compute_bound_checks(
    experiment: &str,
    solver: &str,
    entry: &ProblemCatalogEntry,
    config: &SolverConfig,
    report: &SolverReport,
) -> Result<Vec<BoundCheckResult>, SamgdaError> {
    let problem = &entry.problem;
    let mut checks = Vec::new();
    if report.termination == Termination::Divergence {
        return Ok(checks);
    }
    let x_star = match &problem.known_solution {
        Some(x) => x.clone(),
        None => return Ok(checks),
    };
    match (experiment, solver) {
        ("toy1", "sa-mgda") => {
            if matches!(config.inner, InnerMode::Exact) {
                let h = LegendreGenerator::semi_anchored(config.tau, problem);
                checks.push(check_rate_weakmvi(
                    &report.trace,
                    &h,
                    &x_star,
                    problem.rho.unwrap_or(0.0),
                )?);
            }
        }
        ("toy2", "sa-mgda") => {
            if let InnerMode::Steps(j) = config.inner {
                let h = LegendreGenerator::semi_anchored(config.tau, problem);
                let omega = problem.domain_diameter.unwrap_or(1.0);
                checks.push(check_rate_inexact(
                    &report.trace,
                    &h,
                    problem,
                    &x_star,
                    problem.rho.unwrap_or(0.0),
                    omega,
                    j,
                )?);
            }
        }
        ("strongmvi", "sa-mgda") => {
            let h = LegendreGenerator::semi_anchored(config.tau, problem);
            checks.push(check_rate_strongmvi(
                &report.trace,
                &h,
                problem,
                &x_star,
                problem.mu.unwrap_or(0.0),
            )?);
        }
        ("pdhg-linear", "pdhg") => {
            let b = samgda::solvers::bilinear_matrix(problem)?;
            checks.push(pdhg_contraction_check(&report.trace, &b, config.tau)?);
        }
        (_, "sa-mgda-bt") => {
            let delta = config.backtracking_delta.unwrap_or(0.5);
            checks.push(check_rate_backtracking(
                &report.trace,
                problem,
                &x_star,
                problem.rho.unwrap_or(0.0),
                delta,
            )?);
            // Step floor tau_k >= delta/(L + Lhat).
            let floor = delta / (problem.lipschitz + problem.l_hat());
            let mut worst = f64::INFINITY;
            let mut at = 0;
            for rec in report.trace.records.iter().skip(1) {
                let margin = rec.tau_k - floor;
                if margin < worst {
                    worst = margin;
                    at = rec.k;
                }
            }
            checks.push(BoundCheckResult {
                theorem_id: "step-floor".to_string(),
                holds: worst >= -1e-12,
                worst_margin: worst,
                at_iteration: at,
            });
        }
        (_, "sa-mgda-mirror") => {
            let h = LegendreGenerator::semi_anchored(config.tau, problem);
            checks.push(check_rate_mirror(&report.trace, &h, &x_star)?);
        }
        _ => {}
    }
    Ok(checks)
}

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn termination_string(t: &Termination) -> String {
    match t {
        Termination::MaxIters => "max_iters".to_string(),
        Termination::ResidualBelow(e) => format!("residual_below({e})"),
        Termination::Divergence => "divergence".to_string(),
        Termination::Error(m) => format!("error: {m}"),
    }
}

/// Fixed trace schema: k,res,gap,tau_k,inner,elapsed_s with 17-significant-
/// digit floats.
pub fn trace_csv(trace: &IterateTrace) -> String {
    let mut out = String::from("k,res,gap,tau_k,inner,elapsed_s\n");
    for rec in &trace.records {
        let gap = rec.bregman_gap.unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            rec.k,
            fmt_float(rec.residual_norm),
            fmt_float(gap),
            fmt_float(rec.tau_k),
            rec.inner_used,
            fmt_float(rec.elapsed)
        );
    }
    out
}

fn inner_mode_json(mode: &InnerMode) -> serde_json::Value {
    match mode {
        InnerMode::Exact => serde_json::json!("exact"),
        InnerMode::Steps(j) => serde_json::json!({ "steps": j }),
        InnerMode::Tolerance(t) => serde_json::json!({ "tolerance": t }),
    }
}

pub fn summary_json(outcome: &RunOutcome) -> serde_json::Value {
    let c = &outcome.report.config_echo;
    serde_json::json!({
        "experiment": outcome.experiment,
        "solver": outcome.solver,
        "config": {
            "tau": c.tau,
            "inner": inner_mode_json(&c.inner),
            "outer_steps": c.outer_steps,
            "seed": c.seed,
            "tau0": c.backtracking_tau0,
            "delta": c.backtracking_delta,
            "residual_stop": c.residual_stop,
            "lambda": outcome.lambda,
            "generator": outcome.report.generator_kind,
        },
        "termination": termination_string(&outcome.report.termination),
        "final_residual": outcome.report.final_residual(),
        "bound_checks": outcome.bound_checks.iter().map(|b| serde_json::json!({
            "theorem_id": b.theorem_id,
            "holds": b.holds,
            "worst_margin": b.worst_margin,
            "at_iteration": b.at_iteration,
        })).collect::<Vec<_>>(),
    })
}

/// Per-class and worst-class losses along a fair-classification trace.
pub fn fair_losses_csv(outcome: &RunOutcome) -> String {
    let problem = &outcome.entry.problem;
    let mut out = String::from("k,loss0,loss1,loss2,worst\n");
    for rec in &outcome.report.trace.records {
        let losses = problem.coupling.grad_v_at(&rec.point.u, &rec.point.v);
        let worst = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            rec.k,
            fmt_float(losses[0]),
            fmt_float(losses[1]),
            fmt_float(losses[2]),
            fmt_float(worst)
        );
    }
    out
}

fn write_outputs(
    outcome: &RunOutcome,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<(), String> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let base = format!("{}_{}", outcome.experiment, outcome.solver);
    let w = |name: String, body: String| -> Result<(), String> {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))
    };
    if format != OutputFormat::Json {
        w(format!("{base}.csv"), trace_csv(&outcome.report.trace))?;
        if outcome.experiment == "fair" {
            w(format!("{base}_classlosses.csv"), fair_losses_csv(outcome))?;
        }
    }
    if format != OutputFormat::Csv {
        let json = serde_json::to_string_pretty(&summary_json(outcome)).unwrap();
        w(format!("{base}.json"), json + "\n")?;
    }
    Ok(())
}

fn parse_spec(spec: &str) -> Result<(String, Overrides), String> {
    let (solver, rest) = match spec.split_once(':') {
        Some((s, r)) => (s, Some(r)),
        None => (spec, None),
    };
    let mut o = Overrides::default();
    if let Some(rest) = rest {
        for kv in rest.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("bad spec item '{kv}'; expected key=value"))?;
            o.set(k.trim(), v.trim())?;
        }
    }
    Ok((solver.to_string(), o))
}

fn run_compare(experiment: &str, specs: &[String], out_dir: &Path) -> Result<(), String> {
    if specs.len() < 2 {
        return Err("compare needs at least 2 solver specs on the same problem".to_string());
    }
    let mut rows = String::from("method,k,residual\n");
    for spec in specs {
        let (solver, overrides) = parse_spec(spec)?;
        let outcome = execute_run(experiment, &solver, &overrides)?;
        // Commas in a spec would break the CSV; use ';' in the label.
        let label = if spec.contains(':') {
            spec.replace(',', ";")
        } else {
            solver.clone()
        };
        for rec in &outcome.report.trace.records {
            let _ = writeln!(rows, "{},{},{}", label, rec.k, fmt_float(rec.residual_norm));
        }
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let path = out_dir.join(format!("compare_{experiment}.csv"));
    std::fs::write(&path, rows).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Full verification battery; returns the number of failed checks.
pub fn run_verify_all(seed: u64) -> Result<usize, String> {
    let mut failures = 0usize;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("{} {name}{}", if ok { "PASS" } else { "FAIL" }, detail);
        if !ok {
            failures += 1;
        }
    };

    // Sublinear weak-MVI rate on toy1.
    {
        let o = Overrides {
            tau: Some(0.4),
            k: Some(1000),
            seed: Some(seed),
            ..Default::default()
        };
        let outcome = execute_run("toy1", "sa-mgda", &o)?;
        for b in &outcome.bound_checks {
            report(
                &format!("toy1/{}", b.theorem_id),
                b.holds,
                format!(" (worst margin {:.3e})", b.worst_margin),
            );
        }
    }
    // Linear strong-MVI rate.
    {
        let outcome = execute_run("strongmvi", "sa-mgda", &Overrides::default())?;
        for b in &outcome.bound_checks {
            report(
                &format!("strongmvi/{}", b.theorem_id),
                b.holds,
                format!(" (worst margin {:.3e})", b.worst_margin),
            );
        }
    }
    // Inexact rate with a finite inner budget on toy2.
    {
        let o = Overrides {
            j: Some(10),
            k: Some(300),
            seed: Some(seed),
            ..Default::default()
        };
        let outcome = execute_run("toy2", "sa-mgda", &o)?;
        for b in &outcome.bound_checks {
            report(
                &format!("toy2/{}", b.theorem_id),
                b.holds,
                format!(" (worst margin {:.3e})", b.worst_margin),
            );
        }
    }
    // PDHG spectral contraction.
    {
        let o = Overrides {
            seed: Some(seed),
            ..Default::default()
        };
        let outcome = execute_run("pdhg-linear", "pdhg", &o)?;
        for b in &outcome.bound_checks {
            report(
                &format!("pdhg-linear/{}", b.theorem_id),
                b.holds,
                format!(" (worst margin {:.3e})", b.worst_margin),
            );
        }
    }
    // Backtracking step floor and adaptive rate on toy1.
    {
        let o = Overrides {
            tau0: Some(10.0),
            delta: Some(0.5),
            k: Some(500),
            ..Default::default()
        };
        let outcome = execute_run("toy1", "sa-mgda-bt", &o)?;
        for b in &outcome.bound_checks {
            report(
                &format!("toy1-bt/{}", b.theorem_id),
                b.holds,
                format!(" (worst margin {:.3e})", b.worst_margin),
            );
        }
    }
    // Mirror reduction: energy mirror equals standard SA-MGDA.
    {
        let o = Overrides {
            k: Some(100),
            ..Default::default()
        };
        let a = execute_run("strongmvi", "sa-mgda", &o)?;
        let b = execute_run("strongmvi", "sa-mgda-mirror", &o)?;
        let mut worst = 0.0f64;
        for (ra, rb) in a
            .report
            .trace
            .records
            .iter()
            .zip(&b.report.trace.records)
        {
            worst = worst.max(ra.point.dist(&rb.point));
        }
        report(
            "mirror-reduction/energy-equals-standard",
            worst <= 1e-10,
            format!(" (max deviation {worst:.3e})"),
        );
    }
    // Gradient oracles on all value-oracle catalog problems.
    for name in ["toy1", "strongmvi", "bilinear", "fair"] {
        let entry = samgda::catalog_entry(name, seed).map_err(|e| e.to_string())?;
        let worst = finite_difference_check(&entry.problem, 50, seed).map_err(|e| e.to_string())?;
        report(
            &format!("gradients/{name}"),
            worst <= 1e-4,
            format!(" (worst relative error {worst:.3e})"),
        );
    }
    // Declared constants are consistent with sampled estimates.
    for name in ["toy1", "toy2", "strongmvi", "bilinear"] {
        let entry = samgda::catalog_entry(name, seed).map_err(|e| e.to_string())?;
        let (l_est, gamma_est, rho_margin) =
            samgda::estimate_constants(&entry.problem, 300, 0.7, seed).map_err(|e| e.to_string())?;
        // The declared rho values are rounded constants, so tolerate a small
        // negative sampled margin.
        let ok = l_est <= entry.problem.lipschitz + 1e-6
            && gamma_est <= entry.problem.l_hat() + 1e-9
            && rho_margin >= -1e-4;
        report(
            &format!("constants/{name}"),
            ok,
            format!(" (L_est {l_est:.4}, gamma_est {gamma_est:.4}, rho_margin {rho_margin:.2e})"),
        );
    }
    Ok(failures)
}

pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<usize, String> = match cli.cmd {
        Cmd::Run {
            experiment,
            solver,
            tau,
            j,
            k,
            lambda,
            seed,
            tau0,
            delta,
            residual_stop,
            config,
            out,
            format,
        } => {
            if experiment == "verify-all" {
                run_verify_all(seed.or_else(env_seed).unwrap_or(0))
            } else {
                let mut overrides = Overrides {
                    tau,
                    j,
                    k,
                    lambda,
                    seed,
                    tau0,
                    delta,
                    residual_stop,
                };
                let file_overrides = match config {
                    Some(path) => match parse_config_file(&path) {
                        Ok(o) => o,
                        Err(e) => {
                            eprintln!("error: {e}");
                            return ExitCode::from(1);
                        }
                    },
                    None => Overrides::default(),
                };
                overrides.merge_over(&file_overrides);
                execute_run(&experiment, &solver, &overrides).and_then(|outcome| {
                    write_outputs(&outcome, &out, format)?;
                    println!(
                        "{} {}: termination = {}, final residual = {:.6e}",
                        outcome.experiment,
                        outcome.solver,
                        termination_string(&outcome.report.termination),
                        outcome.report.final_residual()
                    );
                    let failed = outcome.bound_checks.iter().filter(|b| !b.holds).count();
                    for b in &outcome.bound_checks {
                        println!(
                            "  bound {} {} (worst margin {:.3e} at k={})",
                            b.theorem_id,
                            if b.holds { "holds" } else { "VIOLATED" },
                            b.worst_margin,
                            b.at_iteration
                        );
                    }
                    Ok(failed)
                })
            }
        }
        Cmd::Compare {
            experiment,
            specs,
            out,
        } => run_compare(&experiment, &specs, &out).map(|()| 0),
        Cmd::VerifyAll { seed } => run_verify_all(seed.or_else(env_seed).unwrap_or(0)),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

impl Overrides {
    /// Public constructor used by integration tests.
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Result<Self, String> {
        let mut o = Overrides::default();
        for (k, v) in pairs {
            o.set(k, v)?;
        }
        Ok(o)
    }
}
