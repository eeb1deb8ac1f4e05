//! Stochastic PPDG: the primal step uses a variance-reduced estimate of
//! `∇f` instead of the full gradient; the dual step is unchanged.
//!
//! Runs are replicated over a list of seeds in parallel, and a per-iteration
//! mean across the surviving seeds is reported. The Lyapunov value logged
//! per iteration is the deterministic part
//! `ℒ_s(z) = 𝓛_s(x, y) − a‖x − u‖² + b‖x − v‖² + c‖v − w‖²` at
//! `zᵏ = (xᵏ, yᵏ, xᵏ⁺¹, xᵏ⁻¹, xᵏ⁻²)`. The estimator-variance terms that
//! complete the expected descent inequality have no computable form, so
//! descent is only checked on the seed average, as an advisory count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ppdg::{
    advance, diverged, dual_step, kkt_residuals, shift, IterView, LyapunovConstants, Monitor, Preconditioner,
    SolveReport, SolverState, Steps, Termination, TraceRecord, Workspace, DEFAULT_NORM_CAP, DEFAULT_TOL_STEP,
};
use crate::problems::{CompositeProblem, FiniteSumProblem};
use crate::vrgrad::{EstimatorKind, EstimatorState};

pub const DELTA_1: f64 = 1.0;
pub const DELTA_2: f64 = 1.0 / 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SppdgConfig {
    pub alpha: f64,
    /// Stand-in for the estimator variance constant `κ`.
    pub kappa_hat: f64,
    /// Budget in epochs of `N` component-gradient evaluations.
    pub max_epochs: usize,
    /// Optional hard cap on iterations.
    pub max_iters: Option<usize>,
    pub tol_step: f64,
    pub seeds: Vec<u64>,
    pub preconditioner: Preconditioner,
    pub batch_size: usize,
    /// Snapshot or restart period; one epoch when `None`.
    pub period: Option<usize>,
    pub norm_cap: f64,
}

impl SppdgConfig {
    /// `α = 0.9/(3L)` with `κ̂ = 0`, seeds `0..10`, batch `max(1, ⌊0.01N⌋)`.
    pub fn for_problem(problem: &FiniteSumProblem) -> Self {
        let n = problem.sum.num_components();
        SppdgConfig {
            alpha: crate::ppdg::default_alpha(problem.lipschitz()),
            kappa_hat: 0.0,
            max_epochs: 50,
            max_iters: None,
            tol_step: DEFAULT_TOL_STEP,
            seeds: (0..10).collect(),
            preconditioner: Preconditioner::ScalarBeta,
            batch_size: (n / 100).max(1),
            period: None,
            norm_cap: DEFAULT_NORM_CAP,
        }
    }

    /// `1/(2(3 + 7L + 6κ̂))`, the step bound used when `κ̂ > 0`.
    pub fn alpha_bound(lipschitz: f64, kappa_hat: f64) -> f64 {
        1.0 / (2.0 * (3.0 + 7.0 * lipschitz + 6.0 * kappa_hat))
    }
}

/// Weights of the stochastic Lyapunov function and its decrease rate `e0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SppdgLyapunovConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e0: f64,
}

impl SppdgLyapunovConstants {
    pub fn new(alpha: f64, kappa: f64, lipschitz: f64) -> Self {
        let (d1, d2, l) = (DELTA_1, DELTA_2, lipschitz);
        let e0 = 1.0 / (3.0 * alpha) - (d1 + l) / 6.0 - kappa / (3.0 * d1) - 4.0 * d2 * l / 3.0 - 4.0 * d2 / (3.0 * alpha)
            - 2.0 * d2 * alpha * l * l / 3.0
            - alpha * l * l / (2.0 * d2)
            - 2.0 * alpha * kappa / d2
            - 8.0 * d2 * alpha * kappa / 3.0;
        let a = e0 + 2.0 * d2 / alpha + 2.0 * d2 * alpha * kappa;
        let b = e0 + 9.0 * alpha * kappa / (2.0 * d2) + 2.0 * d2 * alpha * kappa + kappa / (2.0 * d1)
            + 3.0 * alpha * l * l / (2.0 * d2);
        let c = 3.0 * alpha * kappa / (2.0 * d2);
        SppdgLyapunovConstants { a, b, c, e0 }
    }
}

/// `𝓛_s(x, y) = (1/N) Σ f_i(x) + ⟨y, Ax⟩ − h*(y)`.
pub fn lagrangian_s(problem: &FiniteSumProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    crate::ppdg::lagrangian(&problem.as_composite(), x, y)
}

/// One seed's run: the final report plus its trace.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub report: SolveReport,
    pub trace: Vec<TraceRecord>,
    /// Cumulative component evaluations after each iteration's estimate.
    pub comp_evals: Vec<u64>,
}

#[derive(Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub run: Result<SeedRun>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRecord {
    pub iter: usize,
    pub comp_evals: u64,
    pub mean_objective: f64,
    pub mean_lagrangian_s: f64,
    pub mean_lyapunov_s: f64,
    pub mean_dx: f64,
    pub mean_dy: f64,
    pub seeds_ok: usize,
}

#[derive(Debug)]
pub struct StochasticReport {
    pub kind: EstimatorKind,
    pub constants: SppdgLyapunovConstants,
    pub beta: f64,
    pub seeds: Vec<SeedOutcome>,
    pub aggregate: Vec<AggregateRecord>,
    pub warnings: Vec<String>,
}

impl StochasticReport {
    pub fn successful(&self) -> impl Iterator<Item = (u64, &SeedRun)> {
        self.seeds.iter().filter_map(|s| s.run.as_ref().ok().map(|r| (s.seed, r)))
    }
}

fn validate(problem: &FiniteSumProblem, config: &SppdgConfig) -> Result<()> {
    if !(config.alpha > 0.0 && config.alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha must be positive, got {}", config.alpha)));
    }
    if !(config.kappa_hat >= 0.0) {
        return Err(Error::Parameter("kappa_hat must be nonnegative".into()));
    }
    if config.kappa_hat > 0.0 {
        let bound = SppdgConfig::alpha_bound(problem.lipschitz(), config.kappa_hat);
        if config.alpha >= bound {
            return Err(Error::Parameter(format!(
                "alpha = {} must be below {bound} for kappa_hat = {}",
                config.alpha, config.kappa_hat
            )));
        }
    }
    if config.seeds.is_empty() {
        return Err(Error::Parameter("at least one seed is required".into()));
    }
    Ok(())
}

/// Runs the stochastic solver once per seed, in parallel, from `x0` and
/// `y0`. A seed that diverges is reported failed; the aggregate covers the
/// rest.
pub fn solve_stochastic(
    problem: &FiniteSumProblem,
    kind: EstimatorKind,
    config: &SppdgConfig,
    x0: &[f64],
    y0: &[f64],
) -> Result<StochasticReport> {
    validate(problem, config)?;
    let composite = problem.as_composite();
    // validates the starting point once for every seed
    SolverState::new(&composite, x0.to_vec(), y0.to_vec())?;
    EstimatorState::for_sum(kind, problem.sum.as_ref(), config.batch_size, 0, config.period)?;
    let (beta, op_norm) = dual_step(&problem.operator, config.alpha, config.preconditioner)?;
    let steps = Steps {
        alpha: config.alpha,
        beta,
        op_norm,
        lipschitz: problem.lipschitz(),
    };
    let constants = SppdgLyapunovConstants::new(config.alpha, config.kappa_hat, problem.lipschitz());
    let seeds: Vec<SeedOutcome> = config
        .seeds
        .par_iter()
        .map(|&seed| SeedOutcome {
            seed,
            run: run_seed(problem, &composite, kind, config, steps, &constants, seed, x0, y0),
        })
        .collect();

    let mut warnings = Vec::new();
    for s in &seeds {
        if let Err(e) = &s.run {
            warnings.push(format!("seed {} failed: {e}", s.seed));
        }
    }
    let runs: Vec<&SeedRun> = seeds.iter().filter_map(|s| s.run.as_ref().ok()).collect();
    if runs.is_empty() {
        return Err(Error::State(format!("every seed failed: {}", warnings.join("; "))));
    }
    let aggregate = aggregate(&runs);
    Ok(StochasticReport {
        kind,
        constants,
        beta,
        seeds,
        aggregate,
        warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_seed(
    problem: &FiniteSumProblem,
    composite: &CompositeProblem,
    kind: EstimatorKind,
    config: &SppdgConfig,
    steps: Steps,
    constants: &SppdgLyapunovConstants,
    seed: u64,
    x0: &[f64],
    y0: &[f64],
) -> Result<SeedRun> {
    let sum = problem.sum.as_ref();
    let n_comp = sum.num_components() as u64;
    let mut est = EstimatorState::for_sum(kind, sum, config.batch_size, seed, config.period)?;
    est.reset(sum, x0)?;
    let mut state = SolverState::new(composite, x0.to_vec(), y0.to_vec())?;
    let mon_constants = LyapunovConstants {
        a: constants.a,
        b: constants.b,
        c: 0.0,
    };
    let mut monitor = Monitor::new(composite, steps, mon_constants, constants.c, false, false);
    let mut ws = Workspace::new(composite.dim(), composite.dual_dim());
    let mut grad = vec![0.0; composite.dim()];
    let mut exact = vec![0.0; composite.dim()];
    let budget = n_comp.saturating_mul(config.max_epochs as u64);
    let max_iters = config.max_iters.unwrap_or(usize::MAX);
    let mut trace = Vec::new();
    let mut comp_evals = Vec::new();
    let mut termination = Termination::IterationLimit;
    while state.k < max_iters && est.comp_evals() < budget {
        est.estimate(sum, state.k, &state.x, &mut grad)?;
        advance(composite, &steps, &state, &grad, &mut ws);
        if diverged(&ws.x_next, &ws.y_next, config.norm_cap) {
            return Err(Error::Divergence { iter: state.k + 1 });
        }
        composite.smooth.gradient(&state.x, &mut exact);
        let view = IterView {
            state: &state,
            x_next: &ws.x_next,
            y_next: &ws.y_next,
        };
        let rec = monitor.observe(composite, &view, &exact)?;
        trace.push(rec);
        comp_evals.push(est.comp_evals());
        shift(&mut state, &mut ws);
        if rec.dx_norm.max(rec.dy_norm) <= config.tol_step {
            termination = Termination::Converged;
            break;
        }
    }
    let (kkt_x, kkt_y) = kkt_residuals(composite, &state);
    Ok(SeedRun {
        report: SolveReport {
            iters: state.k,
            x: state.x,
            y: state.y,
            termination,
            kkt_x,
            kkt_y,
            alpha: steps.alpha,
            beta: steps.beta,
            op_norm: steps.op_norm,
            constants: mon_constants,
            diagnostics: monitor.diagnostics,
        },
        trace,
        comp_evals,
    })
}

/// Per-iteration means over the seeds that reached that iteration, folded
/// in seed order.
pub fn aggregate(runs: &[&SeedRun]) -> Vec<AggregateRecord> {
    let len = runs.iter().map(|r| r.trace.len()).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let live: Vec<&SeedRun> = runs.iter().copied().filter(|r| k < r.trace.len()).collect();
            let m = live.len() as f64;
            let mean = |f: &dyn Fn(&TraceRecord) -> f64| live.iter().map(|r| f(&r.trace[k])).sum::<f64>() / m;
            AggregateRecord {
                iter: k,
                comp_evals: live[0].comp_evals[k],
                mean_objective: mean(&|r| r.objective),
                mean_lagrangian_s: mean(&|r| r.lagrangian),
                mean_lyapunov_s: mean(&|r| r.lyapunov),
                mean_dx: mean(&|r| r.dx_norm),
                mean_dy: mean(&|r| r.dy_norm),
                seeds_ok: live.len(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DescentReport {
    pub checked: usize,
    pub violations: usize,
}

impl DescentReport {
    pub fn fraction(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.violations as f64 / self.checked as f64
        }
    }
}

/// Counts iterations where the seed-averaged `ℒ_s` fails to drop by
/// `e0 · mean ‖xᵏ⁺¹ − xᵏ‖²` (up to a small slack). Uses the common prefix
/// of the traces and starts at `k = 1`, the first window with real history.
pub fn expectation_descent_report(traces: &[&[TraceRecord]], constants: &SppdgLyapunovConstants) -> Result<DescentReport> {
    if traces.len() < 2 {
        return Err(Error::Precondition("the expectation check needs at least two seeds".into()));
    }
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let m = traces.len() as f64;
    let avg = |k: usize, f: &dyn Fn(&TraceRecord) -> f64| traces.iter().map(|t| f(&t[k])).sum::<f64>() / m;
    let mut report = DescentReport {
        checked: 0,
        violations: 0,
    };
    for k in 1..len.saturating_sub(1) {
        let now = avg(k, &|r| r.lyapunov);
        let next = avg(k + 1, &|r| r.lyapunov);
        let msq = avg(k, &|r| r.dx_norm * r.dx_norm);
        let slack = 1e-9 * (1.0 + now.abs());
        report.checked += 1;
        if next > now - constants.e0 * msq + slack {
            report.violations += 1;
        }
    }
    Ok(report)
}
