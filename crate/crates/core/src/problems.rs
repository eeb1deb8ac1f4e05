//! Smooth/finite-sum objective interfaces, the two experiment problems
//! (ℓ0-gradient denoising and nonconvex graph-guided fused lasso), and PSNR.

use std::sync::Arc;

use crate::dataio::GaussianStream;
use crate::conjprox::Regularizer;
use crate::error::{check_len, Error, Result};
use crate::linops::{build_gradient2d, build_stacked, Boundary, DenseMatrix, LinearOperator};
use crate::vecops::{axpy, dist_sq, dot, norm2_sq, scale};

/// A differentiable `f` with `L`-Lipschitz gradient.
pub trait Smooth: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// `out ← ∇f(x)`
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn lipschitz(&self) -> f64;
}

/// `f = (1/N) Σ f_i`, each `f_i` with `L`-Lipschitz gradient.
pub trait FiniteSum: Send + Sync {
    fn dim(&self) -> usize;
    fn num_components(&self) -> usize;
    fn component_value(&self, i: usize, x: &[f64]) -> f64;
    /// `out ← out + weight·∇f_i(x)`
    fn add_component_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]);
    /// Valid for every component.
    fn lipschitz(&self) -> f64;

    fn component_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        self.add_component_gradient(i, x, 1.0, out);
    }

    fn mean_value(&self, x: &[f64]) -> f64 {
        let n = self.num_components();
        (0..n).map(|i| self.component_value(i, x)).sum::<f64>() / n as f64
    }

    /// `∇f(x)`, accumulated in ascending component order then scaled by `1/N`.
    fn full_gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let n = self.num_components();
        for i in 0..n {
            self.add_component_gradient(i, x, 1.0, out);
        }
        scale(1.0 / n as f64, out);
    }
}

/// `f(x) = ½‖x − b‖²`, `L = 1`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub b: Vec<f64>,
}

impl Smooth for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dist_sq(x, &self.b)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), bi) in out.iter_mut().zip(x).zip(&self.b) {
            *o = xi - bi;
        }
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }
}

/// `f_i(x) = ½ w_i‖x − b_i‖²`; a simple finite sum for estimator tests.
#[derive(Debug, Clone)]
pub struct QuadraticSum {
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadraticSum {
    pub fn new(centers: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::construction("quadratic sum", "no components"));
        }
        check_len(centers.len(), weights.len())?;
        let n = centers[0].len();
        if centers.iter().any(|c| c.len() != n) || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::construction("quadratic sum", "ragged centers or nonpositive weight"));
        }
        Ok(QuadraticSum { centers, weights })
    }
}

impl FiniteSum for QuadraticSum {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn num_components(&self) -> usize {
        self.centers.len()
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        0.5 * self.weights[i] * dist_sq(x, &self.centers[i])
    }

    fn add_component_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]) {
        let s = weight * self.weights[i];
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(&self.centers[i]) {
            *o += s * (xi - ci);
        }
    }

    fn lipschitz(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }
}

/// Upper bound on `max_u |d²/du² tanh(u)| = 4/(3√3)`.
pub const SIGMOID_CURVATURE: f64 = 0.7699;

/// Sigmoid loss `f_i(x) = 1 − tanh(b_i⟨a_i, x⟩)` with labels `b_i ∈ {−1, +1}`.
#[derive(Debug, Clone)]
pub struct SigmoidLoss {
    rows: DenseMatrix,
    labels: Vec<f64>,
    lipschitz: f64,
}

impl SigmoidLoss {
    pub fn new(rows: DenseMatrix, labels: Vec<f64>) -> Result<Self> {
        check_len(rows.rows(), labels.len())?;
        if let Some(bad) = labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
            return Err(Error::Data(format!("labels must be -1 or +1, found {bad}")));
        }
        let max_sq = (0..rows.rows())
            .map(|i| norm2_sq(rows.row(i)))
            .fold(0.0, f64::max);
        Ok(SigmoidLoss {
            rows,
            labels,
            lipschitz: SIGMOID_CURVATURE * max_sq,
        })
    }

    pub fn rows(&self) -> &DenseMatrix {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }
}

impl FiniteSum for SigmoidLoss {
    fn dim(&self) -> usize {
        self.rows.cols()
    }

    fn num_components(&self) -> usize {
        self.rows.rows()
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        1.0 - (self.labels[i] * dot(self.rows.row(i), x)).tanh()
    }

    fn add_component_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]) {
        let b = self.labels[i];
        let a = self.rows.row(i);
        let t = (b * dot(a, x)).tanh();
        axpy(-weight * b * (1.0 - t * t), a, out);
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Views a finite sum as a single smooth function (its mean).
#[derive(Clone)]
pub struct MeanObjective(pub Arc<dyn FiniteSum>);

impl Smooth for MeanObjective {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.mean_value(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.0.full_gradient(x, out)
    }

    fn lipschitz(&self) -> f64 {
        self.0.lipschitz()
    }
}

/// A smooth function seen as a one-component finite sum.
#[derive(Clone)]
pub struct SingleComponent(pub Arc<dyn Smooth>);

impl FiniteSum for SingleComponent {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn num_components(&self) -> usize {
        1
    }

    fn component_value(&self, _i: usize, x: &[f64]) -> f64 {
        self.0.value(x)
    }

    fn add_component_gradient(&self, _i: usize, x: &[f64], weight: f64, out: &mut [f64]) {
        let mut g = vec![0.0; out.len()];
        self.0.gradient(x, &mut g);
        axpy(weight, &g, out);
    }

    fn component_gradient(&self, _i: usize, x: &[f64], out: &mut [f64]) {
        self.0.gradient(x, out)
    }

    fn full_gradient(&self, x: &[f64], out: &mut [f64]) {
        self.0.gradient(x, out)
    }

    fn mean_value(&self, x: &[f64]) -> f64 {
        self.0.value(x)
    }

    fn lipschitz(&self) -> f64 {
        self.0.lipschitz()
    }
}

/// `min f(x) + h(Ax)`.
#[derive(Clone)]
pub struct CompositeProblem {
    pub smooth: Arc<dyn Smooth>,
    pub operator: LinearOperator,
    pub regularizer: Regularizer,
}

impl CompositeProblem {
    pub fn new(smooth: Arc<dyn Smooth>, operator: LinearOperator, regularizer: Regularizer) -> Result<Self> {
        check_len(operator.in_dim(), smooth.dim())?;
        if !(smooth.lipschitz() > 0.0 && smooth.lipschitz().is_finite()) {
            return Err(Error::construction("composite problem", "Lipschitz constant must be positive"));
        }
        Ok(CompositeProblem {
            smooth,
            operator,
            regularizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.operator.out_dim()
    }

    pub fn lipschitz(&self) -> f64 {
        self.smooth.lipschitz()
    }

    /// `f(x) + h(Ax)`, `+∞` outside the constraint set.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let ax = self.operator.apply_into_vec(x);
        self.smooth.value(x) + self.regularizer.value_h(&ax)
    }

    /// `f(x) + h(Π(Ax))` with `Π` the projection onto the box of `h`.
    /// Primal-dual iterates reach the box only in the limit, so this is the
    /// value reported in traces; see [`CompositeProblem::box_violation`].
    pub fn objective_projected(&self, x: &[f64]) -> f64 {
        let ax = self.operator.apply_into_vec(x);
        self.smooth.value(x) + self.regularizer.value_h_projected(&ax)
    }

    /// `max_i dist((Ax)_i, box)`.
    pub fn box_violation(&self, x: &[f64]) -> f64 {
        self.regularizer.box_violation(&self.operator.apply_into_vec(x))
    }
}

/// `min (1/N) Σ f_i(x) + h(Ax)`.
#[derive(Clone)]
pub struct FiniteSumProblem {
    pub sum: Arc<dyn FiniteSum>,
    pub operator: LinearOperator,
    pub regularizer: Regularizer,
}

impl FiniteSumProblem {
    pub fn new(sum: Arc<dyn FiniteSum>, operator: LinearOperator, regularizer: Regularizer) -> Result<Self> {
        check_len(operator.in_dim(), sum.dim())?;
        if sum.num_components() == 0 {
            return Err(Error::construction("finite-sum problem", "no components"));
        }
        Ok(FiniteSumProblem {
            sum,
            operator,
            regularizer,
        })
    }

    /// The same problem with `f` exposed through its exact full gradient.
    pub fn as_composite(&self) -> CompositeProblem {
        CompositeProblem {
            smooth: Arc::new(MeanObjective(self.sum.clone())),
            operator: self.operator.clone(),
            regularizer: self.regularizer,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.sum.lipschitz()
    }
}

impl LinearOperator {
    pub(crate) fn apply_into_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim()];
        self.apply_into(x, &mut out);
        out
    }
}

/// `½‖x − b‖² + λ‖∇x‖₀` subject to `c1 ≤ (∇x)_i ≤ c2`, with `b` a row-major
/// `height × width` image.
pub fn build_denoise(
    b: &[f64],
    height: usize,
    width: usize,
    lambda: f64,
    c1: f64,
    c2: f64,
    boundary: Boundary,
) -> Result<CompositeProblem> {
    if b.is_empty() {
        return Err(Error::construction("denoising problem", "empty image"));
    }
    check_len(height * width, b.len())?;
    let operator = build_gradient2d(height, width, boundary)?;
    let regularizer = Regularizer::l0_box(lambda, c1, c2)?;
    CompositeProblem::new(Arc::new(Quadratic { b: b.to_vec() }), operator, regularizer)
}

/// Nonconvex graph-guided fused lasso: sigmoid loss over the rows of `data`,
/// `A = [V; I]`, and `h = λ‖·‖_p^p` on `‖u‖_∞ ≤ r`.
pub fn build_fused_lasso(
    data: DenseMatrix,
    labels: Vec<f64>,
    v: DenseMatrix,
    lambda: f64,
    p: f64,
    r: f64,
) -> Result<FiniteSumProblem> {
    let loss = SigmoidLoss::new(data, labels)?;
    let operator = build_stacked(v)?;
    let regularizer = Regularizer::lp_ball(lambda, p, r)?;
    FiniteSumProblem::new(Arc::new(loss), operator, regularizer)
}

/// Scales every nonzero row to unit Euclidean norm.
pub fn normalize_rows(m: &DenseMatrix) -> DenseMatrix {
    let mut rows = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        let mut row = m.row(i).to_vec();
        let n = norm2_sq(&row).sqrt();
        if n > 0.0 {
            scale(1.0 / n, &mut row);
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows).expect("same shape as input")
}

/// Seeded binary classification data with correlated feature groups.
///
/// Features come in blocks of four sharing a latent factor, so the
/// correlation graph has edges inside each block. Labels are the sign of a
/// noisy linear score. Rows are normalized to unit norm.
pub fn synthetic_classification(n_samples: usize, n_features: usize, seed: u64) -> Result<(DenseMatrix, Vec<f64>)> {
    if n_samples == 0 || n_features == 0 {
        return Err(Error::Parameter("synthetic data needs at least one sample and feature".into()));
    }
    let mut g = GaussianStream::new(seed);
    let groups = n_features.div_ceil(4);
    let weights: Vec<f64> = (0..groups).map(|_| g.next_normal()).collect();
    let mut data = Vec::with_capacity(n_samples * n_features);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let factors: Vec<f64> = (0..groups).map(|_| g.next_normal()).collect();
        let mut score = 0.0;
        for j in 0..n_features {
            let a = factors[j / 4] + 0.5 * g.next_normal();
            score += weights[j / 4] * a;
            data.push(a);
        }
        score += 0.5 * g.next_normal();
        labels.push(if score >= 0.0 { 1.0 } else { -1.0 });
    }
    let m = DenseMatrix::new(n_samples, n_features, data)?;
    Ok((normalize_rows(&m), labels))
}

/// Default `|corr|` threshold for [`build_precision_graph`].
pub const DEFAULT_GRAPH_THRESHOLD: f64 = 0.5;

/// Feature graph from thresholded empirical correlations: `V_jk = 1` when
/// `|corr(j, k)| > threshold` and `j ≠ k`. Stands in for a sparse inverse
/// covariance estimate; zero-variance features get no edges.
pub fn build_precision_graph(data: &DenseMatrix, threshold: f64) -> Result<DenseMatrix> {
    if data.rows() < 2 {
        return Err(Error::Parameter("correlation graph needs at least 2 rows".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Parameter(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let (n_rows, n) = (data.rows(), data.cols());
    let mut mean = vec![0.0; n];
    for i in 0..n_rows {
        axpy(1.0, data.row(i), &mut mean);
    }
    scale(1.0 / n_rows as f64, &mut mean);
    let mut cov = vec![0.0; n * n];
    let mut centered = vec![0.0; n];
    for i in 0..n_rows {
        for (c, (a, m)) in centered.iter_mut().zip(data.row(i).iter().zip(&mean)) {
            *c = a - m;
        }
        for j in 0..n {
            for k in j..n {
                cov[j * n + k] += centered[j] * centered[k];
            }
        }
    }
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        for k in (j + 1)..n {
            let denom = (cov[j * n + j] * cov[k * n + k]).sqrt();
            let corr = if denom > 0.0 { cov[j * n + k] / denom } else { 0.0 };
            if corr.abs() > threshold {
                v[j * n + k] = 1.0;
                v[k * n + j] = 1.0;
            }
        }
    }
    DenseMatrix::new(n, n, v)
}

/// Validates a file-supplied graph matrix.
pub fn check_graph(v: &DenseMatrix) -> Result<()> {
    if !v.is_symmetric() {
        return Err(Error::Data("graph matrix V must be square and symmetric".into()));
    }
    Ok(())
}

/// `10·log10(m·n·(max x)² / ‖x − x_org‖²)`; `+∞` when the images coincide.
pub fn psnr(x: &[f64], x_org: &[f64], height: usize, width: usize) -> Result<f64> {
    check_len(height * width, x.len())?;
    check_len(x.len(), x_org.len())?;
    let err = dist_sq(x, x_org);
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(10.0 * ((height * width) as f64 * peak * peak / err).log10())
}

/// Largest relative mismatch between `∇f(x)` and central differences of `f`.
pub fn gradient_check(f: &dyn Smooth, x: &[f64], step: f64) -> f64 {
    let n = f.dim();
    let mut g = vec![0.0; n];
    f.gradient(x, &mut g);
    let mut probe = x.to_vec();
    let mut worst = 0.0_f64;
    let gnorm = norm2_sq(&g).sqrt();
    for j in 0..n {
        let orig = probe[j];
        probe[j] = orig + step;
        let up = f.value(&probe);
        probe[j] = orig - step;
        let down = f.value(&probe);
        probe[j] = orig;
        let fd = (up - down) / (2.0 * step);
        worst = worst.max((fd - g[j]).abs() / (gnorm.max(1e-8)));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng, w: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-w..w)).collect()
    }

    fn synthetic_lasso(rng: &mut ChaCha8Rng) -> FiniteSumProblem {
        let (n_rows, n) = (30, 6);
        let data = DenseMatrix::new(n_rows, n, random_vec(n_rows * n, rng, 1.0)).unwrap();
        let labels = (0..n_rows).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let v = build_precision_graph(&data, 0.2).unwrap();
        build_fused_lasso(data, labels, v, 1e-4, 0.5, 1.0).unwrap()
    }

    #[test]
    fn denoise_data_term() {
        let b = vec![0.2, 0.4, 0.6, 0.8];
        let p = build_denoise(&b, 2, 2, 0.1, -1.0, 1.0, Boundary::Periodic).unwrap();
        let mut g = vec![1.0; 4];
        p.smooth.gradient(&b, &mut g);
        assert!(g.iter().all(|&v| v == 0.0));
        let mut e = b.clone();
        e[0] += 1.0;
        assert_eq!(p.smooth.value(&e), 0.5);
        assert_eq!(p.lipschitz(), 1.0);
        assert_eq!(
            p.regularizer,
            Regularizer::L0Box {
                lambda: 0.1,
                c1: -1.0,
                c2: 1.0
            }
        );
        assert!(build_denoise(&[], 0, 0, 0.1, -1.0, 1.0, Boundary::Periodic).is_err());
        assert!(build_denoise(&b, 2, 2, 0.1, 1.0, 2.0, Boundary::Periodic).is_err());
    }

    #[test]
    fn sigmoid_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = DenseMatrix::new(10, 4, random_vec(40, &mut rng, 1.0)).unwrap();
        let labels: Vec<f64> = (0..10).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let loss = SigmoidLoss::new(data.clone(), labels.clone()).unwrap();
        let x = vec![0.0; 4];
        let mut g = vec![0.0; 4];
        for i in 0..10 {
            assert_eq!(loss.component_value(i, &x), 1.0);
            loss.component_gradient(i, &x, &mut g);
            let expected: Vec<f64> = data.row(i).iter().map(|a| -labels[i] * a).collect();
            assert_eq!(g, expected);
        }
    }

    #[test]
    fn sigmoid_component_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = synthetic_lasso(&mut rng);
        for _ in 0..20 {
            let i = rng.random_range(0..p.sum.num_components());
            let x = random_vec(6, &mut rng, 1.5);
            let mut g = vec![0.0; 6];
            p.sum.component_gradient(i, &x, &mut g);
            let mut probe = x.clone();
            let h = 1e-6;
            for j in 0..6 {
                probe[j] = x[j] + h;
                let up = p.sum.component_value(i, &probe);
                probe[j] = x[j] - h;
                let down = p.sum.component_value(i, &probe);
                probe[j] = x[j];
                let fd = (up - down) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()), "{fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn every_problem_passes_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lasso = synthetic_lasso(&mut rng).as_composite();
        let den = build_denoise(&random_vec(12, &mut rng, 1.0), 3, 4, 0.1, -1.0, 1.0, Boundary::Periodic).unwrap();
        for p in [lasso, den] {
            for _ in 0..20 {
                let x = random_vec(p.dim(), &mut rng, 1.0);
                assert!(gradient_check(p.smooth.as_ref(), &x, 1e-6) <= 1e-5);
            }
        }
    }

    #[test]
    fn lipschitz_constants_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lasso = synthetic_lasso(&mut rng);
        let n = lasso.sum.dim();
        let (mut gx, mut gz) = (vec![0.0; n], vec![0.0; n]);
        for _ in 0..100 {
            let x = random_vec(n, &mut rng, 3.0);
            let z = random_vec(n, &mut rng, 3.0);
            let i = rng.random_range(0..lasso.sum.num_components());
            lasso.sum.component_gradient(i, &x, &mut gx);
            lasso.sum.component_gradient(i, &z, &mut gz);
            assert!(dist_sq(&gx, &gz).sqrt() <= lasso.lipschitz() * dist_sq(&x, &z).sqrt() * (1.0 + 1e-9));
            lasso.sum.full_gradient(&x, &mut gx);
            lasso.sum.full_gradient(&z, &mut gz);
            assert!(dist_sq(&gx, &gz).sqrt() <= lasso.lipschitz() * dist_sq(&x, &z).sqrt() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn sigmoid_curvature_bound_covers_the_peak() {
        let exact = 4.0 / (3.0 * 3f64.sqrt());
        assert!(SIGMOID_CURVATURE >= exact && SIGMOID_CURVATURE - exact < 1e-3);
    }

    #[test]
    fn full_gradient_is_component_mean() {
        let q = QuadraticSum::new(vec![vec![1.0, 2.0], vec![-1.0, 0.0], vec![3.0, 3.0]], vec![1.0, 2.0, 0.5]).unwrap();
        let x = [0.3, -0.7];
        let mut full = vec![0.0; 2];
        q.full_gradient(&x, &mut full);
        let mut mean = vec![0.0; 2];
        let mut g = vec![0.0; 2];
        for i in 0..3 {
            q.component_gradient(i, &x, &mut g);
            axpy(1.0 / 3.0, &g, &mut mean);
        }
        assert!(dist_sq(&full, &mean).sqrt() < 1e-12);
    }

    #[test]
    fn bad_labels_rejected() {
        let data = DenseMatrix::zeros(2, 2);
        assert!(matches!(SigmoidLoss::new(data, vec![1.0, 0.0]), Err(Error::Data(_))));
    }

    #[test]
    fn graph_from_correlations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                vec![a, 2.0 * a + 1.0, rng.random_range(-1.0..1.0), 4.0]
            })
            .collect();
        let data = DenseMatrix::from_rows(&rows).unwrap();
        let v = build_precision_graph(&data, 0.99).unwrap();
        assert_eq!(v.get(0, 1), 1.0);
        assert_eq!(v.get(1, 0), 1.0);
        assert!(v.is_symmetric());
        for j in 0..4 {
            assert_eq!(v.get(j, j), 0.0);
            assert_eq!(v.get(3, j), 0.0);
        }
        assert!(build_precision_graph(&data, 1.0).is_err());
    }

    #[test]
    fn independent_gaussians_have_no_edges() {
        use rand_distr_free::normal_pair;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut rows = Vec::new();
        for _ in 0..10000 {
            let (a, b) = normal_pair(&mut rng);
            let (c, _) = normal_pair(&mut rng);
            rows.push(vec![a, b, c]);
        }
        let v = build_precision_graph(&DenseMatrix::from_rows(&rows).unwrap(), 0.9).unwrap();
        assert!((0..3).all(|j| (0..3).all(|k| v.get(j, k) == 0.0)));
    }

    mod rand_distr_free {
        use rand::Rng;
        pub fn normal_pair(rng: &mut impl Rng) -> (f64, f64) {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            let t = 2.0 * std::f64::consts::PI * u2;
            (r * t.cos(), r * t.sin())
        }
    }

    #[test]
    fn graph_file_must_be_symmetric() {
        let ok = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(check_graph(&ok).is_ok());
        let bad = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(check_graph(&bad).is_err());
    }

    #[test]
    fn psnr_values() {
        let org = [0.0, 0.0, 0.0, 0.8];
        let x = [0.1, 0.1, -0.1, 1.0];
        // max x = 1, ‖diff‖² = 0.01·3 + 0.04 = 0.07
        let expected = 10.0 * (4.0 / 0.07f64).log10();
        assert!((psnr(&x, &org, 2, 2).unwrap() - expected).abs() < 1e-12);
        let x2 = [0.0, 0.0, 0.0, 1.0];
        assert!((psnr(&x2, &org, 2, 2).unwrap() - 20.0).abs() < 1e-12);
        let x3 = [0.0, 0.0, 0.0, 1.0];
        let org3 = [0.0, 0.0, 0.0, 0.6];
        let drop = psnr(&x2, &org, 2, 2).unwrap() - psnr(&x3, &org3, 2, 2).unwrap();
        assert!((drop - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert_eq!(psnr(&org, &org, 2, 2).unwrap(), f64::INFINITY);
        assert!(psnr(&org, &org, 3, 2).is_err());
    }
}
