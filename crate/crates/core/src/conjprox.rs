//! Regularizers `h` with closed-form conjugates `h*` and proximal mappings
//! `prox_{βh*}`, plus a brute-force grid oracle used to verify them.
//!
//! Every kind is separable, so all operations act coordinate-wise. `h` may be
//! nonconvex; `h*` is always convex, which is what makes `prox_{βh*}`
//! single-valued and 1-Lipschitz.
//!
//! The SCAD-with-box conjugate is `h*(y) = max{r|y| − p(r), 0}` in every
//! parameter regime. It is symmetric in `y`; a signed variant is not convex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// `λ‖x‖₁`
    L1 { lambda: f64 },
    /// `λ‖x‖₀` restricted to the box `c1 ≤ x_i ≤ c2`.
    L0Box { lambda: f64, c1: f64, c2: f64 },
    /// `λ‖x‖_p^p` restricted to `‖x‖_∞ ≤ r`, with `0 < p < 1`.
    LpBall { lambda: f64, p: f64, r: f64 },
    /// SCAD penalty `p_{λ,γ}` restricted to `‖x‖_∞ ≤ r`, with `γ > 2`.
    ScadBox { lambda: f64, gamma: f64, r: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Regularizer {
    pub fn l1(lambda: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        Ok(Regularizer::L1 { lambda })
    }

    pub fn l0_box(lambda: f64, c1: f64, c2: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        if !(c1.is_finite() && c2.is_finite() && c1 < 0.0 && 0.0 < c2) {
            return Err(Error::Parameter(format!("need c1 < 0 < c2, got c1={c1}, c2={c2}")));
        }
        Ok(Regularizer::L0Box { lambda, c1, c2 })
    }

    pub fn lp_ball(lambda: f64, p: f64, r: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        positive("r", r)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Parameter(format!("need 0 < p < 1, got p={p}")));
        }
        Ok(Regularizer::LpBall { lambda, p, r })
    }

    pub fn scad_box(lambda: f64, gamma: f64, r: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        positive("r", r)?;
        if !(gamma.is_finite() && gamma > 2.0) {
            return Err(Error::Parameter(format!("SCAD needs gamma > 2, got {gamma}")));
        }
        Ok(Regularizer::ScadBox { lambda, gamma, r })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::L1 { .. } => "l1",
            Regularizer::L0Box { .. } => "l0_box",
            Regularizer::LpBall { .. } => "lp_ball",
            Regularizer::ScadBox { .. } => "scad_box",
        }
    }

    /// Bounds `[lo, hi]` of `dom h`; infinite for the unconstrained ℓ1 norm.
    pub fn primal_domain(&self) -> (f64, f64) {
        match *self {
            Regularizer::L1 { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Regularizer::L0Box { c1, c2, .. } => (c1, c2),
            Regularizer::LpBall { r, .. } | Regularizer::ScadBox { r, .. } => (-r, r),
        }
    }

    /// Bounds of `dom h*`.
    pub fn conj_domain(&self) -> (f64, f64) {
        match *self {
            Regularizer::L1 { lambda } => (-lambda, lambda),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Scalar primal penalty, `+∞` outside the box.
    pub fn h_scalar(&self, x: f64) -> f64 {
        let (lo, hi) = self.primal_domain();
        if x < lo || x > hi {
            return f64::INFINITY;
        }
        match *self {
            Regularizer::L1 { lambda } => lambda * x.abs(),
            Regularizer::L0Box { lambda, .. } => {
                if x != 0.0 {
                    lambda
                } else {
                    0.0
                }
            }
            Regularizer::LpBall { lambda, p, .. } => lambda * x.abs().powf(p),
            Regularizer::ScadBox { lambda, gamma, .. } => scad_penalty(x.abs(), lambda, gamma),
        }
    }

    /// Scalar conjugate `h*(y)`.
    pub fn conj_scalar(&self, y: f64) -> f64 {
        match *self {
            Regularizer::L1 { lambda } => {
                if y.abs() <= lambda {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::L0Box { lambda, c1, c2 } => {
                if y > lambda / c2 {
                    c2 * y - lambda
                } else if y > lambda / c1 {
                    0.0
                } else {
                    c1 * y - lambda
                }
            }
            Regularizer::LpBall { r, .. } | Regularizer::ScadBox { r, .. } => {
                r * (y.abs() - self.kink()).max(0.0)
            }
        }
    }

    /// Scalar `prox_{βh*}(v) = argmin_u h*(u) + (u − v)²/(2β)`. `beta` must be positive.
    pub fn prox_scalar(&self, v: f64, beta: f64) -> f64 {
        match *self {
            Regularizer::L1 { lambda } => v.clamp(-lambda, lambda),
            Regularizer::L0Box { lambda, c1, c2 } => {
                let upper = lambda / c2;
                let lower = lambda / c1;
                if v > c2 * beta + upper {
                    v - c2 * beta
                } else if v > upper {
                    upper
                } else if v > lower {
                    v
                } else if v > c1 * beta + lower {
                    lower
                } else {
                    v - c1 * beta
                }
            }
            Regularizer::LpBall { r, .. } | Regularizer::ScadBox { r, .. } => {
                let t = self.kink();
                let a = v.abs();
                if a <= t {
                    v
                } else if a <= t + r * beta {
                    t.copysign(v)
                } else {
                    v - (r * beta).copysign(v)
                }
            }
        }
    }

    /// Threshold `t` of the symmetric kinked conjugate `r·max{|y| − t, 0}`
    /// (ℓp and SCAD kinds); `t = h(r)/r`.
    fn kink(&self) -> f64 {
        match *self {
            Regularizer::LpBall { lambda, p, r } => lambda * r.powf(p - 1.0),
            Regularizer::ScadBox { lambda, gamma, r } => {
                if r < lambda {
                    lambda
                } else if r < gamma * lambda {
                    lambda - (r - lambda).powi(2) / (2.0 * r * (gamma - 1.0))
                } else {
                    lambda * lambda * (gamma + 1.0) / (2.0 * r)
                }
            }
            _ => unreachable!("kink is only defined for the l_p and SCAD kinds"),
        }
    }

    /// `h*(y) = Σ_i h*(y_i)`; `+∞` propagates.
    pub fn conj_value(&self, y: &[f64]) -> f64 {
        y.iter().map(|&v| self.conj_scalar(v)).sum()
    }

    /// `h(x) = Σ_i h(x_i)`; `+∞` outside the box or ball.
    pub fn value_h(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| self.h_scalar(v)).sum()
    }

    /// `h` evaluated after projecting onto the box, so it stays finite.
    pub fn value_h_projected(&self, x: &[f64]) -> f64 {
        let (lo, hi) = self.primal_domain();
        x.iter().map(|&v| self.h_scalar(v.clamp(lo, hi))).sum()
    }

    /// Largest distance of an entry of `x` outside the box; 0 when feasible.
    pub fn box_violation(&self, x: &[f64]) -> f64 {
        let (lo, hi) = self.primal_domain();
        x.iter().map(|&v| (lo - v).max(v - hi).max(0.0)).fold(0.0, f64::max)
    }

    pub fn prox_conj(&self, v: &[f64], beta: f64) -> Result<Vec<f64>> {
        check_beta(beta)?;
        Ok(v.iter().map(|&vi| self.prox_scalar(vi, beta)).collect())
    }

    /// Unchecked in-place variant of [`Regularizer::prox_conj`].
    pub fn prox_conj_into(&self, v: &[f64], beta: f64, out: &mut [f64]) {
        debug_assert!(beta > 0.0);
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = self.prox_scalar(vi, beta);
        }
    }

    /// Largest `|w|` over `dom h`, which bounds `|∂h*|` and so the prox
    /// displacement `|prox_{βh*}(v) − v| ≤ β·radius`.
    pub fn primal_radius(&self) -> f64 {
        let (lo, hi) = self.primal_domain();
        lo.abs().max(hi.abs())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("beta must be positive, got {beta}")))
    }
}

/// SCAD penalty on `|w|`.
pub fn scad_penalty(w: f64, lambda: f64, gamma: f64) -> f64 {
    if w <= lambda {
        lambda * w
    } else if w <= gamma * lambda {
        (2.0 * gamma * lambda * w - (w * w + lambda * lambda)) / (2.0 * (gamma - 1.0))
    } else {
        lambda * lambda * (gamma + 1.0) / 2.0
    }
}

/// `prox_{τ|·|}(v) = sgn(v)·max{|v| − τ, 0}`.
pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    (v.abs() - tau).max(0.0).copysign(v)
}

/// Exhaustive grid search over `{k·step : lo ≤ k·step ≤ hi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxOracle {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_step: f64,
}

pub const DEFAULT_GRID_STEP: f64 = 1e-4;

impl ProxOracle {
    /// Symmetric grid `±max(10, 3(|v| + Rβ))` where `R` bounds `dom h`.
    pub fn default_for(reg: &Regularizer, v: f64, beta: f64) -> Self {
        let radius = reg.primal_radius();
        let half = if radius.is_finite() {
            10f64.max(3.0 * (v.abs() + radius * beta))
        } else {
            10f64.max(3.0 * v.abs())
        };
        ProxOracle {
            grid_lo: -half,
            grid_hi: half,
            grid_step: DEFAULT_GRID_STEP,
        }
    }

    /// Grid covering every point within `β·R + margin` of `v`. The minimizer
    /// always lies there since `(v − u*)/β ∈ ∂h*(u*) ⊂ [−R, R]`.
    pub fn window_for(reg: &Regularizer, v: f64, beta: f64) -> Self {
        let radius = reg.primal_radius();
        if !radius.is_finite() {
            return Self::default_for(reg, v, beta);
        }
        let reach = radius * beta + 0.5;
        ProxOracle {
            grid_lo: v - reach,
            grid_hi: v + reach,
            grid_step: DEFAULT_GRID_STEP,
        }
    }

    fn indices(&self, dom: (f64, f64)) -> Result<(i64, i64)> {
        if !(self.grid_step > 0.0) || !self.grid_lo.is_finite() || !self.grid_hi.is_finite() {
            return Err(Error::Parameter("oracle grid must be finite with a positive step".into()));
        }
        let lo = self.grid_lo.max(dom.0);
        let hi = self.grid_hi.min(dom.1);
        let k0 = (lo / self.grid_step).ceil() as i64;
        let k1 = (hi / self.grid_step).floor() as i64;
        if k1 < k0 {
            return Err(Error::Parameter(format!(
                "oracle grid [{}, {}] is empty",
                self.grid_lo, self.grid_hi
            )));
        }
        Ok((k0, k1))
    }

    /// Grid argmin of `h*(u) + (u − v)²/(2β)`.
    pub fn prox_conj(&self, reg: &Regularizer, v: f64, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        let (k0, k1) = self.indices(reg.conj_domain())?;
        let mut best = (f64::INFINITY, f64::NAN);
        for k in k0..=k1 {
            let u = k as f64 * self.grid_step;
            let obj = reg.conj_scalar(u) + (u - v) * (u - v) / (2.0 * beta);
            if obj < best.0 {
                best = (obj, u);
            }
        }
        Ok(best.1)
    }

    /// Grid sup of `y·x − h(x)` and its maximizer.
    pub fn conj(&self, reg: &Regularizer, y: f64) -> Result<(f64, f64)> {
        let (k0, k1) = self.indices(reg.primal_domain())?;
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        for k in k0..=k1 {
            let x = k as f64 * self.grid_step;
            let val = y * x - reg.h_scalar(x);
            if val > best.0 {
                best = (val, x);
            }
        }
        Ok(best)
    }
}

/// Grid-oracle prox with the default grid; verification use only.
pub fn prox_conj_oracle(reg: &Regularizer, v: f64, beta: f64, oracle: Option<ProxOracle>) -> Result<f64> {
    oracle
        .unwrap_or_else(|| ProxOracle::default_for(reg, v, beta))
        .prox_conj(reg, v, beta)
}

/// Half-width of the sampling interval for `v` in conformance sweeps: wide
/// enough to visit every branch of the piecewise prox at the given `β`.
pub fn sweep_half_width(reg: &Regularizer, beta: f64) -> f64 {
    match *reg {
        Regularizer::L1 { lambda } => 2.0 * lambda + 1.0,
        Regularizer::L0Box { lambda, c1, c2 } => {
            let reach = (lambda / c2 + c2 * beta).max(-(lambda / c1 + c1 * beta));
            1.5 * reach + 0.5
        }
        Regularizer::LpBall { r, .. } | Regularizer::ScadBox { r, .. } => {
            1.5 * (reg.kink() + r * beta) + 0.5
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepReport {
    pub points: usize,
    pub max_deviation: f64,
    /// Sample attaining the maximum deviation: `(v, β)`.
    pub worst: (f64, f64),
}

/// Compares the closed-form prox against the grid oracle on `points_per_beta`
/// seeded samples for each `β`. Samples are drawn sequentially, evaluated in
/// parallel; the result does not depend on thread count.
pub fn prox_conformance_sweep(
    reg: &Regularizer,
    points_per_beta: usize,
    betas: &[f64],
    seed: u64,
) -> Result<SweepReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(points_per_beta * betas.len());
    for &beta in betas {
        check_beta(beta)?;
        let w = sweep_half_width(reg, beta);
        for _ in 0..points_per_beta {
            samples.push((rng.random_range(-w..w), beta));
        }
    }
    let devs = samples
        .par_iter()
        .map(|&(v, beta)| {
            let oracle = ProxOracle::window_for(reg, v, beta).prox_conj(reg, v, beta)?;
            Ok((reg.prox_scalar(v, beta) - oracle).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (idx, max_deviation) = devs
        .iter()
        .cloned()
        .enumerate()
        .fold((0, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    Ok(SweepReport {
        points: samples.len(),
        max_deviation,
        worst: samples.get(idx).copied().unwrap_or((f64::NAN, f64::NAN)),
    })
}
