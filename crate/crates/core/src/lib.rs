//! First-order minimax optimization via Bregman proximal point iterations.
//!
//! The library solves composite saddle problems
//! `min_u max_v f(u) + phi(u,v) - g(v)` with prox-friendly `f`, `g` and a
//! smooth coupling `phi`, under structured nonconvex-nonconcave assumptions
//! (weak and strong Minty variational inequalities). The central method is
//! semi-anchored multi-step gradient descent ascent (SA-MGDA): a Bregman
//! proximal point iteration whose distance generator absorbs the coupling,
//! making each outer step one prox-gradient update on `u` and a short
//! proximal ascent loop on `v`. PDHG, a backtracking variant, a mirror
//! variant, and non-anchored baselines share the same driver.
//!
//! The `verify` module turns the method's convergence rate statements into
//! executable checks used by the test suite and the CLI.

pub mod config;
pub mod error;
pub mod geometry;
pub mod point;
pub mod problem;
pub mod problems;
pub mod solvers;
pub mod verify;

pub use config::{InnerMode, IterateTrace, SolverConfig, TraceRecord};
pub use error::{Result, SamgdaError};
pub use geometry::{
    bregman_distance, inner_ascent_step, resolvent, residual_from_generator, GeneratorKind,
    LegendreGenerator, MirrorMap, ResolventMode, ResolventResult,
};
pub use point::PrimalDualPoint;
pub use problem::{
    aggregate_lipschitz, eta_from_tau, feasible_step_range, weak_monotonicity_constant,
    AffineOperator, CompositeMinimaxProblem, ProxableFunction, SmoothCoupling,
};
pub use problems::{
    bilinear_from_matrix, catalog_entry, estimate_constants, quadratic_v_probe, random_bilinear,
    strong_mvi_quadratic, synthetic_fair_classification, toy1_quadratic, toy2_polynomial,
    ProblemCatalogEntry,
};
pub use solvers::{
    run_bpp, run_gda_baseline, run_mgda_baseline, run_pdhg, run_sa_mgda,
    run_sa_mgda_backtracking, run_sa_mgda_mirror, SolverReport, Termination,
};
pub use verify::{
    check_rate_backtracking, check_rate_inexact, check_rate_mirror, check_rate_strongmvi,
    check_rate_weakmvi, exact_resolvent_oracle, finite_difference_check, spectral_rate,
    BoundCheckResult,
};
