//! Deterministic preconditioned primal-dual gradient method (PPDG).
//!
//! Each iteration takes a plain gradient step in `x` and a proximal step on
//! the convex conjugate `h*` in `y`:
//!
//! ```text
//! x⁺ = x − α(∇f(x) + Aᵀy)
//! y⁺ = prox_{βh*}(y + βA(2x⁺ − x))
//! ```
//!
//! With `M = αAAᵀ` the dual step is the `M`-metric prox. That metric is only
//! separable when `A` is a (scaled) identity, where `β = 1/(α s²)`; for other
//! operators the scalar metric `β = 1/(α‖A‖²)` is used instead, and the
//! Lyapunov descent diagnostics become advisory.
//!
//! Along the run the solver evaluates the Lyapunov function
//! `ℒ(x, y, u, v) = 𝓛(x, y) − a‖x − u‖² + b‖x − v‖²` at
//! `zᵏ = (xᵏ, yᵏ, xᵏ⁺¹, xᵏ⁻¹)` and checks three per-iteration bounds:
//! sufficient decrease of `ℒ`, the bound on the subgradient `dᵏ`, and the
//! dual-from-primal bound on `‖Aᵀ(yᵏ⁺¹ − yᵏ)‖`.
//!
//! Assumed, not checked: `inf_x 𝓛(x, y) > −∞` for every `y`.

use std::time::Instant;

use crate::error::{check_len, Error, Result};
use crate::linops::{operator_norm, LinearOperator, DEFAULT_SPECTRAL_ITERS};
use crate::problems::CompositeProblem;
use crate::vecops::{all_finite, dist, dist_sq, dot, norm2, norm2_sq};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    /// `M = αAAᵀ`; only for identity and scaled-identity operators.
    ExactM,
    /// `β = 1/(α‖A‖²)` in place of `M⁻¹`.
    ScalarBeta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpdgConfig {
    pub alpha: f64,
    pub delta: f64,
    pub max_iters: usize,
    /// Stop once `max(‖xᵏ⁺¹ − xᵏ‖, ‖yᵏ⁺¹ − yᵏ‖) ≤ tol_step`.
    pub tol_step: f64,
    pub preconditioner: Preconditioner,
    pub lyapunov_checks: bool,
    /// Iterates with a larger norm count as divergence.
    pub norm_cap: f64,
}

pub const DEFAULT_DELTA: f64 = 0.2;
pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_TOL_STEP: f64 = 1e-8;
pub const DEFAULT_NORM_CAP: f64 = 1e12;

/// `0.9/(3L)`: the sufficient step-size bound for `δ = 0.2` with a 10% margin.
pub fn default_alpha(lipschitz: f64) -> f64 {
    0.9 / (3.0 * lipschitz)
}

impl PpdgConfig {
    pub fn new(alpha: f64) -> Self {
        PpdgConfig {
            alpha,
            delta: DEFAULT_DELTA,
            max_iters: DEFAULT_MAX_ITERS,
            tol_step: DEFAULT_TOL_STEP,
            preconditioner: Preconditioner::ScalarBeta,
            lyapunov_checks: true,
            norm_cap: DEFAULT_NORM_CAP,
        }
    }

    pub fn for_lipschitz(lipschitz: f64) -> Self {
        Self::new(default_alpha(lipschitz))
    }
}

/// Weights `a`, `b`, `c` of the Lyapunov function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LyapunovConstants {
    pub fn new(alpha: f64, delta: f64, lipschitz: f64) -> Self {
        let l = lipschitz;
        let a = delta / alpha;
        let b = 1.0 / (2.0 * alpha) - l / 4.0 - delta / alpha - alpha * delta * l * l / 2.0 - delta * l
            + alpha * l * l / (4.0 * delta);
        let c = b - alpha * l * l / (2.0 * delta);
        LyapunovConstants { a, b, c }
    }

    pub fn all_positive(&self) -> bool {
        self.a > 0.0 && self.b > 0.0 && self.c > 0.0
    }
}

/// Iterate window `(xᵏ⁻¹, xᵏ, yᵏ⁻¹, yᵏ)` plus `gᵏ ∈ ∂h*(yᵏ)`.
///
/// At `k = 0` the window is padded with `x⁻¹ = x⁰`, `y⁻¹ = y⁰`, which makes
/// `g⁰ = Ax⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub x_prev: Vec<f64>,
    pub x: Vec<f64>,
    pub y_prev: Vec<f64>,
    pub y: Vec<f64>,
    /// `gᵏ = −M(yᵏ − yᵏ⁻¹) + A(2xᵏ − xᵏ⁻¹)` with `M = I/β`.
    pub g: Vec<f64>,
}

impl SolverState {
    pub fn new(problem: &CompositeProblem, x0: Vec<f64>, y0: Vec<f64>) -> Result<Self> {
        check_len(problem.dim(), x0.len())?;
        check_len(problem.dual_dim(), y0.len())?;
        let mut g = vec![0.0; y0.len()];
        problem.operator.apply_into(&x0, &mut g);
        Ok(SolverState {
            k: 0,
            x_prev: x0.clone(),
            x: x0,
            y_prev: y0.clone(),
            y: y0,
            g,
        })
    }

    pub fn zeros(problem: &CompositeProblem) -> Self {
        Self::new(problem, vec![0.0; problem.dim()], vec![0.0; problem.dual_dim()])
            .expect("dimensions come from the problem")
    }
}

/// One row of a solver trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub elapsed_s: f64,
    /// `f(xᵏ) + h(Axᵏ)` with `Axᵏ` projected onto the box of `h`
    pub objective: f64,
    /// `𝓛(xᵏ, yᵏ)`
    pub lagrangian: f64,
    /// `ℒ(zᵏ)`
    pub lyapunov: f64,
    pub dx_norm: f64,
    pub dy_norm: f64,
    pub kkt_x: f64,
    pub kkt_y: f64,
}

pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) {
        self.push(*rec);
    }
}

/// Discards every record.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _rec: &TraceRecord) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationLimit,
}

/// Counts of the per-iteration bound checks and how many failed.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    pub descent_checked: usize,
    pub descent_violations: usize,
    /// Smallest `ℒ(zᵏ) − ℒ(zᵏ⁺¹) − c(…)` seen; negative means a violation.
    pub descent_min_margin: f64,
    pub subgradient_checked: usize,
    pub subgradient_violations: usize,
    pub dual_bound_checked: usize,
    pub dual_bound_violations: usize,
    /// `Σ‖xᵏ⁺¹ − xᵏ‖²` over the run.
    pub sum_sq_dx: f64,
    pub sum_sq_dy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub iters: usize,
    pub termination: Termination,
    pub kkt_x: f64,
    pub kkt_y: f64,
    pub alpha: f64,
    pub beta: f64,
    pub op_norm: f64,
    pub constants: LyapunovConstants,
    pub diagnostics: Diagnostics,
}

/// `𝓛(x, y) = f(x) + ⟨y, Ax⟩ − h*(y)`; `−∞` when `y ∉ dom h*`.
pub fn lagrangian(problem: &CompositeProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(problem.dim(), x.len())?;
    check_len(problem.dual_dim(), y.len())?;
    let ax = problem.operator.apply(x)?;
    Ok(lagrangian_with_ax(problem.smooth.value(x), &ax, y, problem))
}

fn lagrangian_with_ax(f_value: f64, ax: &[f64], y: &[f64], problem: &CompositeProblem) -> f64 {
    f_value + dot(y, ax) - problem.regularizer.conj_value(y)
}

/// `ℒ(x, y, u, v) = 𝓛(x, y) − a‖x − u‖² + b‖x − v‖²`.
pub fn lyapunov_value(
    problem: &CompositeProblem,
    x: &[f64],
    y: &[f64],
    u: &[f64],
    v: &[f64],
    constants: &LyapunovConstants,
) -> Result<f64> {
    check_len(x.len(), u.len())?;
    check_len(x.len(), v.len())?;
    Ok(lagrangian(problem, x, y)? - constants.a * dist_sq(x, u) + constants.b * dist_sq(x, v))
}

/// The four blocks of `dᵏ ∈ ∂ℒ(zᵏ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientD {
    /// `∇ₓℒ(zᵏ) = ∇f(xᵏ) + Aᵀyᵏ − 2a(xᵏ − xᵏ⁺¹) + 2b(xᵏ − xᵏ⁻¹)`
    pub dx: Vec<f64>,
    /// `Axᵏ − gᵏ`
    pub dy: Vec<f64>,
    /// `∇ᵤℒ(zᵏ) = 2a(xᵏ − xᵏ⁺¹)`
    pub du: Vec<f64>,
    /// `∇ᵥℒ(zᵏ) = 2b(xᵏ⁻¹ − xᵏ)`
    pub dv: Vec<f64>,
}

impl SubgradientD {
    pub fn norm(&self) -> f64 {
        (norm2_sq(&self.dx) + norm2_sq(&self.dy) + norm2_sq(&self.du) + norm2_sq(&self.dv)).sqrt()
    }
}

/// Builds `dᵏ` from the state at `k ≥ 1` and the lookahead `xᵏ⁺¹`.
pub fn subgradient_d(
    problem: &CompositeProblem,
    state: &SolverState,
    x_next: &[f64],
    constants: &LyapunovConstants,
) -> Result<SubgradientD> {
    if state.k == 0 {
        return Err(Error::Precondition("dᵏ needs xᵏ⁻¹ and yᵏ⁻¹, so k ≥ 1".into()));
    }
    check_len(problem.dim(), x_next.len())?;
    let n = problem.dim();
    let mut dx = vec![0.0; n];
    problem.smooth.gradient(&state.x, &mut dx);
    let mut aty = vec![0.0; n];
    problem.operator.apply_adjoint_into(&state.y, &mut aty);
    let (a, b) = (constants.a, constants.b);
    let mut du = vec![0.0; n];
    let mut dv = vec![0.0; n];
    for i in 0..n {
        let fwd = state.x[i] - x_next[i];
        let back = state.x[i] - state.x_prev[i];
        dx[i] += aty[i] - 2.0 * a * fwd + 2.0 * b * back;
        du[i] = 2.0 * a * fwd;
        dv[i] = -2.0 * b * back;
    }
    let mut dy = problem.operator.apply(&state.x)?;
    for (d, g) in dy.iter_mut().zip(&state.g) {
        *d -= g;
    }
    Ok(SubgradientD { dx, dy, du, dv })
}

/// `r_x = ‖∇f(xᵏ) + Aᵀyᵏ‖` and `r_y = ‖Axᵏ − gᵏ‖`.
pub fn kkt_residuals(problem: &CompositeProblem, state: &SolverState) -> (f64, f64) {
    let n = problem.dim();
    let mut grad = vec![0.0; n];
    problem.smooth.gradient(&state.x, &mut grad);
    let mut aty = vec![0.0; n];
    problem.operator.apply_adjoint_into(&state.y, &mut aty);
    let r_x = grad.iter().zip(&aty).map(|(g, a)| (g + a) * (g + a)).sum::<f64>().sqrt();
    let ax = problem.operator.apply_into_vec(&state.x);
    (r_x, dist(&ax, &state.g))
}

/// `γ₁ = 2L + 4b + 2/α + (2 + αL)‖A‖`, `γ₂ = 4a + 1/α + ‖A‖`.
pub fn subgradient_bound_constants(alpha: f64, lipschitz: f64, op_norm: f64, c: &LyapunovConstants) -> (f64, f64) {
    let g1 = 2.0 * lipschitz + 4.0 * c.b + 2.0 / alpha + (2.0 + alpha * lipschitz) * op_norm;
    let g2 = 4.0 * c.a + 1.0 / alpha + op_norm;
    (g1, g2)
}

/// Dual step size for the chosen metric and the `‖A‖` it was derived from.
pub fn dual_step(op: &LinearOperator, alpha: f64, mode: Preconditioner) -> Result<(f64, f64)> {
    match mode {
        Preconditioner::ExactM => match op {
            LinearOperator::Identity(_) => Ok((1.0 / alpha, 1.0)),
            LinearOperator::ScaledIdentity { scale, .. } if *scale != 0.0 => {
                Ok((1.0 / (alpha * scale * scale), scale.abs()))
            }
            _ => Err(Error::Parameter(format!(
                "exact M-metric prox is only separable for identity operators, not {}",
                op.kind_name()
            ))),
        },
        Preconditioner::ScalarBeta => {
            let (norm, _) = operator_norm(op, DEFAULT_SPECTRAL_ITERS, 0)?;
            if norm == 0.0 {
                return Err(Error::Parameter("operator norm is zero".into()));
            }
            Ok((1.0 / (alpha * norm * norm), norm))
        }
    }
}

/// Everything fixed for the run: step sizes and derived constants.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Steps {
    pub alpha: f64,
    pub beta: f64,
    pub op_norm: f64,
    pub lipschitz: f64,
}

/// Reusable buffers for [`advance`].
pub(crate) struct Workspace {
    aty: Vec<f64>,
    extrap: Vec<f64>,
    a_extrap: Vec<f64>,
    pub x_next: Vec<f64>,
    pub y_next: Vec<f64>,
    pub g_next: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize, m: usize) -> Self {
        Workspace {
            aty: vec![0.0; n],
            extrap: vec![0.0; n],
            a_extrap: vec![0.0; m],
            x_next: vec![0.0; n],
            y_next: vec![0.0; m],
            g_next: vec![0.0; m],
        }
    }
}

/// Computes `xᵏ⁺¹`, `yᵏ⁺¹`, `gᵏ⁺¹` into the workspace from `grad ≈ ∇f(xᵏ)`.
pub(crate) fn advance(problem: &CompositeProblem, steps: &Steps, state: &SolverState, grad: &[f64], ws: &mut Workspace) {
    let op = &problem.operator;
    op.apply_adjoint_into(&state.y, &mut ws.aty);
    for i in 0..state.x.len() {
        ws.x_next[i] = state.x[i] - steps.alpha * (grad[i] + ws.aty[i]);
        ws.extrap[i] = 2.0 * ws.x_next[i] - state.x[i];
    }
    op.apply_into(&ws.extrap, &mut ws.a_extrap);
    for (w, (y, ae)) in ws.g_next.iter_mut().zip(state.y.iter().zip(&ws.a_extrap)) {
        *w = y + steps.beta * ae;
    }
    problem.regularizer.prox_conj_into(&ws.g_next, steps.beta, &mut ws.y_next);
    let inv_beta = 1.0 / steps.beta;
    for j in 0..ws.g_next.len() {
        ws.g_next[j] = ws.a_extrap[j] - inv_beta * (ws.y_next[j] - state.y[j]);
    }
}

/// Rotates the window after [`advance`].
pub(crate) fn shift(state: &mut SolverState, ws: &mut Workspace) {
    std::mem::swap(&mut state.x_prev, &mut state.x);
    std::mem::swap(&mut state.x, &mut ws.x_next);
    std::mem::swap(&mut state.y_prev, &mut state.y);
    std::mem::swap(&mut state.y, &mut ws.y_next);
    std::mem::swap(&mut state.g, &mut ws.g_next);
    state.k += 1;
}

/// Read-only view of one iteration: the state at `k` plus its lookahead.
pub(crate) struct IterView<'a> {
    pub state: &'a SolverState,
    pub x_next: &'a [f64],
    pub y_next: &'a [f64],
}

pub(crate) fn diverged(x: &[f64], y: &[f64], cap: f64) -> bool {
    !all_finite(x) || !all_finite(y) || norm2(x) > cap || norm2(y) > cap
}

/// Per-iteration record and bound checks, shared by the deterministic and
/// stochastic solvers.
pub(crate) struct Monitor {
    steps: Steps,
    constants: LyapunovConstants,
    /// Weight of the `‖xᵏ⁻¹ − xᵏ⁻²‖²` term (stochastic Lyapunov only).
    extra_c: f64,
    gammas: (f64, f64),
    enforce_descent: bool,
    check_bounds: bool,
    started: Instant,
    prev_lyapunov: Option<f64>,
    prev_dx_sq: f64,
    prev_prev_dx_sq: f64,
    grad: Vec<f64>,
    aty: Vec<f64>,
    ax: Vec<f64>,
    diff: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl Monitor {
    pub fn new(
        problem: &CompositeProblem,
        steps: Steps,
        constants: LyapunovConstants,
        extra_c: f64,
        enforce_descent: bool,
        check_bounds: bool,
    ) -> Self {
        let (n, m) = (problem.dim(), problem.dual_dim());
        Monitor {
            steps,
            constants,
            extra_c,
            gammas: subgradient_bound_constants(steps.alpha, steps.lipschitz, steps.op_norm, &constants),
            enforce_descent,
            check_bounds,
            started: Instant::now(),
            prev_lyapunov: None,
            prev_dx_sq: 0.0,
            prev_prev_dx_sq: 0.0,
            grad: vec![0.0; n],
            aty: vec![0.0; n],
            ax: vec![0.0; m],
            diff: vec![0.0; m],
            diagnostics: Diagnostics {
                descent_min_margin: f64::INFINITY,
                ..Diagnostics::default()
            },
        }
    }

    /// `grad` must hold the exact `∇f(xᵏ)`.
    pub fn observe(&mut self, problem: &CompositeProblem, view: &IterView, exact_grad: &[f64]) -> Result<TraceRecord> {
        let st = view.state;
        let k = st.k;
        let op = &problem.operator;
        self.grad.copy_from_slice(exact_grad);
        op.apply_into(&st.x, &mut self.ax);
        op.apply_adjoint_into(&st.y, &mut self.aty);

        let f_value = problem.smooth.value(&st.x);
        let lagr = lagrangian_with_ax(f_value, &self.ax, &st.y, problem);
        let objective = f_value + problem.regularizer.value_h_projected(&self.ax);
        let dx_sq = dist_sq(view.x_next, &st.x);
        let back_sq = dist_sq(&st.x, &st.x_prev);
        let lyap = lagr - self.constants.a * dx_sq + self.constants.b * back_sq + self.extra_c * self.prev_prev_dx_sq;
        let dx_norm = dx_sq.sqrt();
        let dy_norm = dist(view.y_next, &st.y);

        let kkt_x = self.grad.iter().zip(&self.aty).map(|(g, a)| (g + a) * (g + a)).sum::<f64>().sqrt();
        let kkt_y = dist(&self.ax, &st.g);

        self.diagnostics.sum_sq_dx += dx_sq;
        self.diagnostics.sum_sq_dy += dy_norm * dy_norm;

        // Sufficient decrease for the pair (k − 1, k), valid from k − 1 ≥ 1.
        if let Some(prev) = self.prev_lyapunov {
            if k >= 2 {
                let required = self.constants.c * (back_sq + self.prev_dx_sq);
                let margin = prev - lyap - required;
                let slack = 1e-9 * (1.0 + prev.abs());
                self.diagnostics.descent_checked += 1;
                self.diagnostics.descent_min_margin = self.diagnostics.descent_min_margin.min(margin);
                if margin < -slack {
                    self.diagnostics.descent_violations += 1;
                    if self.enforce_descent {
                        return Err(Error::LyapunovViolation {
                            iter: k - 1,
                            decrease: prev - lyap,
                            required,
                        });
                    }
                }
            }
        }

        if self.check_bounds && k >= 1 {
            // ‖dᵏ‖ ≤ γ₁‖xᵏ − xᵏ⁻¹‖ + γ₂‖xᵏ⁺¹ − xᵏ‖
            let (a, b) = (self.constants.a, self.constants.b);
            let mut d_sq = 0.0;
            for i in 0..st.x.len() {
                let fwd = st.x[i] - view.x_next[i];
                let back = st.x[i] - st.x_prev[i];
                let dxi = self.grad[i] + self.aty[i] - 2.0 * a * fwd + 2.0 * b * back;
                d_sq += dxi * dxi + 4.0 * a * a * fwd * fwd + 4.0 * b * b * back * back;
            }
            d_sq += kkt_y * kkt_y;
            let bound = self.gammas.0 * back_sq.sqrt() + self.gammas.1 * dx_norm;
            self.diagnostics.subgradient_checked += 1;
            if d_sq.sqrt() > bound + 1e-9 * bound.max(1.0) {
                self.diagnostics.subgradient_violations += 1;
            }

            // ‖Aᵀ(yᵏ − yᵏ⁻¹)‖ ≤ (1/α + L)‖xᵏ − xᵏ⁻¹‖ + (1/α)‖xᵏ⁺¹ − xᵏ‖
            for (d, (y, yp)) in self.diff.iter_mut().zip(st.y.iter().zip(&st.y_prev)) {
                *d = y - yp;
            }
            op.apply_adjoint_into(&self.diff, &mut self.aty);
            let lhs = norm2(&self.aty);
            let inv_alpha = 1.0 / self.steps.alpha;
            let bound = (inv_alpha + self.steps.lipschitz) * back_sq.sqrt() + inv_alpha * dx_norm;
            self.diagnostics.dual_bound_checked += 1;
            if lhs > bound + 1e-9 * bound.max(1.0) {
                self.diagnostics.dual_bound_violations += 1;
            }
        }

        self.prev_lyapunov = Some(lyap);
        self.prev_prev_dx_sq = back_sq;
        self.prev_dx_sq = dx_sq;
        Ok(TraceRecord {
            iter: k,
            elapsed_s: self.started.elapsed().as_secs_f64(),
            objective,
            lagrangian: lagr,
            lyapunov: lyap,
            dx_norm,
            dy_norm,
            kkt_x,
            kkt_y,
        })
    }
}

/// Deterministic PPDG bound to one problem.
pub struct Ppdg<'a> {
    problem: &'a CompositeProblem,
    config: PpdgConfig,
    steps: Steps,
    constants: LyapunovConstants,
}

impl<'a> Ppdg<'a> {
    /// Validates the configuration against the problem and fixes the steps.
    pub fn new(problem: &'a CompositeProblem, config: PpdgConfig) -> Result<Self> {
        if !(config.alpha > 0.0 && config.alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha must be positive, got {}", config.alpha)));
        }
        if !(config.delta > 0.0) {
            return Err(Error::Parameter(format!("delta must be positive, got {}", config.delta)));
        }
        if !(config.tol_step >= 0.0) {
            return Err(Error::Parameter("tol_step must be nonnegative".into()));
        }
        let lipschitz = problem.lipschitz();
        let constants = LyapunovConstants::new(config.alpha, config.delta, lipschitz);
        if config.lyapunov_checks && !constants.all_positive() {
            return Err(Error::Parameter(format!(
                "alpha = {} gives nonpositive Lyapunov constants {:?} (need alpha < 1/(3L) = {} for delta = 0.2)",
                config.alpha,
                constants,
                1.0 / (3.0 * lipschitz)
            )));
        }
        let (beta, op_norm) = dual_step(&problem.operator, config.alpha, config.preconditioner)?;
        Ok(Ppdg {
            problem,
            config,
            steps: Steps {
                alpha: config.alpha,
                beta,
                op_norm,
                lipschitz,
            },
            constants,
        })
    }

    pub fn constants(&self) -> LyapunovConstants {
        self.constants
    }

    pub fn beta(&self) -> f64 {
        self.steps.beta
    }

    pub fn op_norm(&self) -> f64 {
        self.steps.op_norm
    }

    /// One iteration `k → k + 1`.
    pub fn step(&self, state: &mut SolverState) -> Result<()> {
        let mut ws = Workspace::new(self.problem.dim(), self.problem.dual_dim());
        let mut grad = vec![0.0; self.problem.dim()];
        self.problem.smooth.gradient(&state.x, &mut grad);
        advance(self.problem, &self.steps, state, &grad, &mut ws);
        if diverged(&ws.x_next, &ws.y_next, self.config.norm_cap) {
            return Err(Error::Divergence { iter: state.k + 1 });
        }
        shift(state, &mut ws);
        Ok(())
    }

    /// Runs from `state` until the step tolerance or the iteration limit,
    /// emitting one record per iteration.
    pub fn solve_from(&self, mut state: SolverState, sink: &mut dyn TraceSink) -> Result<SolveReport> {
        let problem = self.problem;
        let enforce = self.config.lyapunov_checks && self.config.preconditioner == Preconditioner::ExactM;
        let mut monitor = Monitor::new(problem, self.steps, self.constants, 0.0, enforce, true);
        let mut ws = Workspace::new(problem.dim(), problem.dual_dim());
        let mut grad = vec![0.0; problem.dim()];
        let mut termination = Termination::IterationLimit;
        for _ in 0..self.config.max_iters {
            problem.smooth.gradient(&state.x, &mut grad);
            advance(problem, &self.steps, &state, &grad, &mut ws);
            if diverged(&ws.x_next, &ws.y_next, self.config.norm_cap) {
                return Err(Error::Divergence { iter: state.k + 1 });
            }
            let view = IterView {
                state: &state,
                x_next: &ws.x_next,
                y_next: &ws.y_next,
            };
            let rec = monitor.observe(problem, &view, &grad)?;
            sink.record(&rec);
            shift(&mut state, &mut ws);
            if rec.dx_norm.max(rec.dy_norm) <= self.config.tol_step {
                termination = Termination::Converged;
                break;
            }
        }
        let (kkt_x, kkt_y) = kkt_residuals(problem, &state);
        Ok(SolveReport {
            iters: state.k,
            x: state.x,
            y: state.y,
            termination,
            kkt_x,
            kkt_y,
            alpha: self.steps.alpha,
            beta: self.steps.beta,
            op_norm: self.steps.op_norm,
            constants: self.constants,
            diagnostics: monitor.diagnostics,
        })
    }

    pub fn solve(&self, x0: Vec<f64>, y0: Vec<f64>, sink: &mut dyn TraceSink) -> Result<SolveReport> {
        let state = SolverState::new(self.problem, x0, y0)?;
        self.solve_from(state, sink)
    }
}

/// Convenience wrapper: build the solver and run it.
pub fn solve(
    problem: &CompositeProblem,
    config: PpdgConfig,
    x0: Vec<f64>,
    y0: Vec<f64>,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    Ppdg::new(problem, config)?.solve(x0, y0, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::conjprox::{prox_conj_oracle, Regularizer};
    use crate::problems::Quadratic;

    fn scalar_problem() -> CompositeProblem {
        CompositeProblem::new(
            Arc::new(Quadratic { b: vec![2.0] }),
            LinearOperator::Identity(1),
            Regularizer::l0_box(0.1, -1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn exact_config(alpha: f64) -> PpdgConfig {
        PpdgConfig {
            preconditioner: Preconditioner::ExactM,
            ..PpdgConfig::new(alpha)
        }
    }

    #[test]
    fn lagrangian_examples() {
        let zero = CompositeProblem::new(
            Arc::new(Quadratic { b: vec![0.0; 3] }),
            LinearOperator::Identity(3),
            Regularizer::l0_box(0.1, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(lagrangian(&zero, &[0.0; 3], &[0.0; 3]).unwrap(), 0.0);
        let p = scalar_problem();
        assert!((lagrangian(&p, &[1.0], &[0.05]).unwrap() - 0.55).abs() < 1e-15);
        // at x = b the data term vanishes
        let y = [0.5];
        let expected = 0.5 * 2.0 - p.regularizer.conj_value(&y);
        assert!((lagrangian(&p, &[2.0], &y).unwrap() - expected).abs() < 1e-15);
        let l1 = CompositeProblem::new(
            Arc::new(Quadratic { b: vec![0.0] }),
            LinearOperator::Identity(1),
            Regularizer::l1(0.5).unwrap(),
        )
        .unwrap();
        assert_eq!(lagrangian(&l1, &[0.0], &[1.0]).unwrap(), f64::NEG_INFINITY);
        assert!(lagrangian(&p, &[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn lyapunov_constants_formula() {
        let c = LyapunovConstants::new(0.3, 0.2, 1.0);
        assert!((c.a - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.b - 0.895).abs() < 1e-12);
        assert!((c.c - 0.145).abs() < 1e-12);
        assert!(c.all_positive());
        // c vanishes exactly at alpha = 1/(3L) for delta = 0.2
        let edge = LyapunovConstants::new(1.0 / 6.0, 0.2, 2.0);
        assert!(edge.c.abs() < 1e-12);
        assert!(!LyapunovConstants::new(0.2, 0.2, 2.0).all_positive());
    }

    #[test]
    fn one_step_by_hand() {
        let p = scalar_problem();
        let solver = Ppdg::new(&p, exact_config(0.3)).unwrap();
        assert!((solver.beta() - 1.0 / 0.3).abs() < 1e-15);
        let mut st = SolverState::zeros(&p);
        solver.step(&mut st).unwrap();
        assert!((st.x[0] - 0.6).abs() < 1e-15);
        assert!((st.y[0] - 2.0 / 3.0).abs() < 1e-4);
        // cross-check the dual update with the grid oracle
        let oracle = prox_conj_oracle(&p.regularizer, 4.0, 1.0 / 0.3, None).unwrap();
        assert!((st.y[0] - oracle).abs() < 1e-3);
        let (rx, _) = kkt_residuals(&p, &st);
        assert!((rx - 0.7333).abs() < 1e-4);
    }

    #[test]
    fn critical_point_is_fixed() {
        let p = scalar_problem();
        let solver = Ppdg::new(&p, exact_config(0.3)).unwrap();
        // x = 1.5 with y = 0.5: ∇f + y = 0; y = prox(y + β·x) needs the dual in the slope region
        let mut st = SolverState::new(&p, vec![1.9], vec![0.1]).unwrap();
        let x_before = st.x.clone();
        solver.step(&mut st).unwrap();
        assert_eq!(st.x, x_before);
    }

    #[test]
    fn lyapunov_value_reduces_to_lagrangian() {
        let p = scalar_problem();
        let c = LyapunovConstants::new(0.3, 0.2, 1.0);
        let l = lagrangian(&p, &[1.0], &[0.05]).unwrap();
        assert_eq!(lyapunov_value(&p, &[1.0], &[0.05], &[1.0], &[1.0], &c).unwrap(), l);
        let same = LyapunovConstants { a: 0.7, b: 0.7, c: 0.0 };
        let v = lyapunov_value(&p, &[1.0], &[0.05], &[0.3], &[0.3], &same).unwrap();
        assert!((v - l).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_matches_direct_evaluation_on_first_window() {
        let p = scalar_problem();
        let solver = Ppdg::new(&p, exact_config(0.3)).unwrap();
        let mut trace = Vec::new();
        let cfg = PpdgConfig {
            max_iters: 3,
            tol_step: 0.0,
            ..exact_config(0.3)
        };
        Ppdg::new(&p, cfg).unwrap().solve(vec![0.0], vec![0.0], &mut trace).unwrap();
        let mut st = SolverState::zeros(&p);
        solver.step(&mut st).unwrap();
        let mut next = st.clone();
        solver.step(&mut next).unwrap();
        let c = solver.constants();
        let direct = lagrangian(&p, &st.x, &st.y).unwrap() - c.a * (st.x[0] - next.x[0]).powi(2)
            + c.b * (st.x[0] - st.x_prev[0]).powi(2);
        assert!((trace[1].lyapunov - direct).abs() < 1e-14);
        assert_eq!(
            trace[1].lyapunov,
            lyapunov_value(&p, &st.x, &st.y, &next.x, &st.x_prev, &c).unwrap()
        );
    }

    #[test]
    fn subgradient_blocks_and_finite_differences() {
        let p = scalar_problem();
        let solver = Ppdg::new(&p, exact_config(0.3)).unwrap();
        let c = solver.constants();
        let mut st = SolverState::zeros(&p);
        assert!(matches!(
            subgradient_d(&p, &st, &[0.0], &c),
            Err(Error::Precondition(_))
        ));
        solver.step(&mut st).unwrap();
        let mut next = st.clone();
        solver.step(&mut next).unwrap();
        let d = subgradient_d(&p, &st, &next.x, &c).unwrap();
        let h = 1e-6;
        let ly = |u: f64, v: f64| lyapunov_value(&p, &st.x, &st.y, &[u], &[v], &c).unwrap();
        let fd_u = (ly(next.x[0] + h, st.x_prev[0]) - ly(next.x[0] - h, st.x_prev[0])) / (2.0 * h);
        let fd_v = (ly(next.x[0], st.x_prev[0] + h) - ly(next.x[0], st.x_prev[0] - h)) / (2.0 * h);
        assert!((fd_u - d.du[0]).abs() <= 1e-6 * d.du[0].abs().max(1.0));
        assert!((fd_v - d.dv[0]).abs() <= 1e-6 * d.dv[0].abs().max(1.0));
        let fd_x = {
            let f = |x: f64| lyapunov_value(&p, &[x], &st.y, &next.x, &st.x_prev, &c).unwrap();
            (f(st.x[0] + h) - f(st.x[0] - h)) / (2.0 * h)
        };
        assert!((fd_x - d.dx[0]).abs() <= 1e-6 * d.dx[0].abs().max(1.0));
        let (g1, g2) = subgradient_bound_constants(0.3, 1.0, 1.0, &c);
        assert!(d.norm() <= g1 * (st.x[0] - st.x_prev[0]).abs() + g2 * (next.x[0] - st.x[0]).abs() + 1e-9);
    }

    #[test]
    fn subgradient_vanishes_at_stationarity() {
        let p = scalar_problem();
        let c = LyapunovConstants::new(0.3, 0.2, 1.0);
        let mut st = SolverState::new(&p, vec![1.9], vec![0.1]).unwrap();
        st.k = 3;
        st.g = vec![1.9];
        let d = subgradient_d(&p, &st, &[1.9], &c).unwrap();
        assert!(d.norm() < 1e-15);
        let (rx, ry) = kkt_residuals(&p, &st);
        assert!(rx < 1e-15 && ry == 0.0);
    }

    #[test]
    fn soft_threshold_solutions() {
        for (b, expected) in [(2.0, 1.5), (0.3, 0.0), (-1.2, -0.7)] {
            let p = CompositeProblem::new(
                Arc::new(Quadratic { b: vec![b] }),
                LinearOperator::Identity(1),
                Regularizer::l1(0.5).unwrap(),
            )
            .unwrap();
            let rep = solve(&p, exact_config(0.3), vec![0.0], vec![0.0], &mut NullSink).unwrap();
            assert_eq!(rep.termination, Termination::Converged);
            assert!((rep.x[0] - expected).abs() < 1e-6, "b={b}: {}", rep.x[0]);
        }
    }

    #[test]
    fn zero_iterations_returns_start() {
        let p = scalar_problem();
        let cfg = PpdgConfig {
            max_iters: 0,
            ..exact_config(0.3)
        };
        let mut trace = Vec::new();
        let rep = solve(&p, cfg, vec![0.25], vec![0.0], &mut trace).unwrap();
        assert_eq!(rep.x, vec![0.25]);
        assert_eq!(rep.iters, 0);
        assert_eq!(rep.termination, Termination::IterationLimit);
        assert!(trace.is_empty());
    }

    #[test]
    fn config_validation() {
        let p = scalar_problem();
        assert!(Ppdg::new(&p, exact_config(0.34)).is_err());
        assert!(Ppdg::new(&p, exact_config(-1.0)).is_err());
        let unchecked = PpdgConfig {
            lyapunov_checks: false,
            ..exact_config(0.34)
        };
        assert!(Ppdg::new(&p, unchecked).is_ok());
        let grad = CompositeProblem::new(
            Arc::new(Quadratic { b: vec![0.0; 4] }),
            crate::linops::build_gradient2d(2, 2, crate::linops::Boundary::Periodic).unwrap(),
            Regularizer::l0_box(0.1, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(Ppdg::new(&grad, exact_config(0.3)).is_err());
        assert!(Ppdg::new(&grad, PpdgConfig::new(0.3)).is_ok());
    }

    #[test]
    fn divergence_is_reported() {
        let p = scalar_problem();
        let cfg = PpdgConfig {
            lyapunov_checks: false,
            norm_cap: 1e6,
            ..exact_config(3.0)
        };
        let err = solve(&p, cfg, vec![0.0], vec![0.0], &mut NullSink).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn scaled_identity_exact_and_scalar_beta_agree() {
        let p = CompositeProblem::new(
            Arc::new(Quadratic { b: vec![1.0, -2.0, 0.5] }),
            LinearOperator::ScaledIdentity { dim: 3, scale: 2.0 },
            Regularizer::lp_ball(0.3, 0.5, 1.0).unwrap(),
        )
        .unwrap();
        let cfg = PpdgConfig {
            max_iters: 200,
            ..exact_config(0.3)
        };
        let a = solve(&p, cfg.clone(), vec![0.0; 3], vec![0.0; 3], &mut NullSink).unwrap();
        let b = solve(
            &p,
            PpdgConfig {
                preconditioner: Preconditioner::ScalarBeta,
                ..cfg
            },
            vec![0.0; 3],
            vec![0.0; 3],
            &mut NullSink,
        )
        .unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.x, b.x);
    }
}
