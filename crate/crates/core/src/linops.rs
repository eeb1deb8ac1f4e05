//! Linear operators `A: X → Y` with forward/adjoint application and the
//! spectral quantities (`‖A‖`, `λ_min(AAᵀ)`) used by the step-size rules.
//!
//! Vector layout: images are row-major flattened (`index = row·width + col`).
//! The 2D gradient stacks the horizontal-difference block (`x[r, c+1] − x[r, c]`)
//! before the vertical-difference block (`x[r+1, c] − x[r, c]`), each in
//! row-major order.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::vecops::{dot, norm2, scale};

/// Largest output dimension for which spectra are computed by a dense eigensolve.
pub const MATERIALIZATION_CAP: usize = 4096;

/// Iteration count used for power/inverse iteration when the dense path is too large.
/// Largest gram size `min(m, n)` solved densely for the operator norm.
pub const DENSE_NORM_CAP: usize = 512;

pub const DEFAULT_SPECTRAL_ITERS: usize = 200;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::construction("dense matrix", "dimensions must be positive"));
        }
        check_len(rows * cols, data.len())?;
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::construction("dense matrix", "ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Reads a matrix from CSV: one row per line, comma-separated decimals.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        location: format!("line {}", lineno + 1),
                        msg: format!("not a number: {:?}", tok.trim()),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            location: "file".into(),
            msg: e.to_string(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(r), x);
        }
    }

    fn mul_t_into(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(r)) {
                    *o += a * yr;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Differences wrap around the image edge.
    Periodic,
    /// Pixels outside the image are zero, so the last difference in each
    /// row/column is `0 − x`.
    ZeroPad,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearOperator {
    Identity(usize),
    ScaledIdentity { dim: usize, scale: f64 },
    Dense(DenseMatrix),
    Gradient2d {
        height: usize,
        width: usize,
        boundary: Boundary,
    },
    /// `A = [V; I]`, so `Ax = (Vx; x)`.
    Stacked(DenseMatrix),
}

/// Builds the forward-difference 2D gradient of a `height × width` image.
pub fn build_gradient2d(height: usize, width: usize, boundary: Boundary) -> Result<LinearOperator> {
    if height < 2 || width < 2 {
        return Err(Error::construction(
            "gradient-2d operator",
            format!("image must be at least 2x2, got {height}x{width}"),
        ));
    }
    Ok(LinearOperator::Gradient2d {
        height,
        width,
        boundary,
    })
}

/// Builds `A = [V; I]` for a square `V`.
pub fn build_stacked(v: DenseMatrix) -> Result<LinearOperator> {
    if v.rows() != v.cols() {
        return Err(Error::construction(
            "stacked operator",
            format!("V must be square, got {}x{}", v.rows(), v.cols()),
        ));
    }
    Ok(LinearOperator::Stacked(v))
}

impl LinearOperator {
    pub fn in_dim(&self) -> usize {
        match self {
            LinearOperator::Identity(n) => *n,
            LinearOperator::ScaledIdentity { dim, .. } => *dim,
            LinearOperator::Dense(m) => m.cols(),
            LinearOperator::Gradient2d { height, width, .. } => height * width,
            LinearOperator::Stacked(v) => v.cols(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            LinearOperator::Identity(n) => *n,
            LinearOperator::ScaledIdentity { dim, .. } => *dim,
            LinearOperator::Dense(m) => m.rows(),
            LinearOperator::Gradient2d { height, width, .. } => 2 * height * width,
            LinearOperator::Stacked(v) => 2 * v.rows(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LinearOperator::Identity(_) => "identity",
            LinearOperator::ScaledIdentity { .. } => "scaled-identity",
            LinearOperator::Dense(_) => "dense-matrix",
            LinearOperator::Gradient2d { .. } => "gradient-2d",
            LinearOperator::Stacked(_) => "stacked-over-identity",
        }
    }

    /// `Ax`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.in_dim(), x.len())?;
        let mut out = vec![0.0; self.out_dim()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// `Aᵀy`.
    pub fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.out_dim(), y.len())?;
        let mut out = vec![0.0; self.in_dim()];
        self.apply_adjoint_into(y, &mut out);
        Ok(out)
    }

    /// Unchecked `out ← Ax`; lengths must already match.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim());
        debug_assert_eq!(out.len(), self.out_dim());
        match self {
            LinearOperator::Identity(_) => out.copy_from_slice(x),
            LinearOperator::ScaledIdentity { scale: s, .. } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = s * xi;
                }
            }
            LinearOperator::Dense(m) => m.mul_into(x, out),
            LinearOperator::Gradient2d {
                height,
                width,
                boundary,
            } => grad2d_forward(*height, *width, *boundary, x, out),
            LinearOperator::Stacked(v) => {
                let n = v.rows();
                v.mul_into(x, &mut out[..n]);
                out[n..].copy_from_slice(x);
            }
        }
    }

    /// Unchecked `out ← Aᵀy`; lengths must already match.
    pub fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.out_dim());
        debug_assert_eq!(out.len(), self.in_dim());
        match self {
            LinearOperator::Identity(_) => out.copy_from_slice(y),
            LinearOperator::ScaledIdentity { scale: s, .. } => {
                for (o, yi) in out.iter_mut().zip(y) {
                    *o = s * yi;
                }
            }
            LinearOperator::Dense(m) => m.mul_t_into(y, out),
            LinearOperator::Gradient2d {
                height,
                width,
                boundary,
            } => grad2d_adjoint(*height, *width, *boundary, y, out),
            LinearOperator::Stacked(v) => {
                let n = v.rows();
                v.mul_t_into(&y[..n], out);
                for (o, yi) in out.iter_mut().zip(&y[n..]) {
                    *o += yi;
                }
            }
        }
    }

    /// Dense `out_dim × in_dim` matrix of the operator, built column by column.
    pub fn materialize(&self) -> DMatrix<f64> {
        let (m, n) = (self.out_dim(), self.in_dim());
        let mut mat = DMatrix::zeros(m, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            e[j] = 0.0;
            for (i, v) in col.iter().enumerate() {
                mat[(i, j)] = *v;
            }
        }
        mat
    }

    /// `‖A‖` in closed form for the operator kinds where it is known exactly.
    pub fn analytic_norm(&self) -> Option<f64> {
        match self {
            LinearOperator::Identity(_) => Some(1.0),
            LinearOperator::ScaledIdentity { scale, .. } => Some(scale.abs()),
            LinearOperator::Gradient2d {
                height,
                width,
                boundary: Boundary::Periodic,
            } => {
                // AᵀA is the periodic Laplacian; its eigenvalues are
                // 4 sin²(πk/h) + 4 sin²(πl/w).
                let peak = |n: usize| {
                    let s = (std::f64::consts::PI * (n / 2) as f64 / n as f64).sin();
                    4.0 * s * s
                };
                Some((peak(*height) + peak(*width)).sqrt())
            }
            LinearOperator::Gradient2d {
                height,
                width,
                boundary: Boundary::ZeroPad,
            } => {
                // per axis DᵀD is the second-difference matrix with one free
                // end, eigenvalues 4 sin²((2k+1)π / (2(2n+1)))
                let peak = |n: usize| {
                    let s = (std::f64::consts::PI * (2 * n - 1) as f64 / (2 * (2 * n + 1)) as f64).sin();
                    4.0 * s * s
                };
                Some((peak(*height) + peak(*width)).sqrt())
            }
            _ => None,
        }
    }
}

fn grad2d_forward(h: usize, w: usize, boundary: Boundary, x: &[f64], out: &mut [f64]) {
    let (horiz, vert) = out.split_at_mut(h * w);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let right = if c + 1 < w {
                x[i + 1]
            } else {
                match boundary {
                    Boundary::Periodic => x[r * w],
                    Boundary::ZeroPad => 0.0,
                }
            };
            let down = if r + 1 < h {
                x[i + w]
            } else {
                match boundary {
                    Boundary::Periodic => x[c],
                    Boundary::ZeroPad => 0.0,
                }
            };
            horiz[i] = right - x[i];
            vert[i] = down - x[i];
        }
    }
}

fn grad2d_adjoint(h: usize, w: usize, boundary: Boundary, y: &[f64], out: &mut [f64]) {
    let (horiz, vert) = y.split_at(h * w);
    let periodic = boundary == Boundary::Periodic;
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let mut v = -horiz[i] - vert[i];
            if c > 0 {
                v += horiz[i - 1];
            } else if periodic {
                v += horiz[r * w + w - 1];
            }
            if r > 0 {
                v += vert[i - w];
            } else if periodic {
                v += vert[(h - 1) * w + c];
            }
            out[i] = v;
        }
    }
}

fn seeded_start(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Power iteration on `AᵀA` from a seeded random start. The returned
/// estimate `‖Av‖` (with `‖v‖ = 1`) is a lower bound on `‖A‖` and is
/// nondecreasing in `iterations`.
pub fn estimate_op_norm(op: &LinearOperator, iterations: usize, seed: u64) -> Result<f64> {
    if iterations == 0 {
        return Err(Error::Parameter("power iteration needs at least one step".into()));
    }
    let mut v = seeded_start(op.in_dim(), seed);
    let nv = norm2(&v);
    scale(1.0 / nv, &mut v);
    let mut av = vec![0.0; op.out_dim()];
    let mut w = vec![0.0; op.in_dim()];
    let mut estimate = 0.0;
    for _ in 0..iterations {
        op.apply_into(&v, &mut av);
        estimate = norm2(&av);
        op.apply_adjoint_into(&av, &mut w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        v.copy_from_slice(&w);
        scale(1.0 / nw, &mut v);
    }
    op.apply_into(&v, &mut av);
    Ok(estimate.max(norm2(&av)))
}

/// Outcome of a `λ_min(AAᵀ)` computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinEigGram {
    pub value: f64,
    /// True when a dense eigensolve (or the rank argument) produced the value.
    pub exact: bool,
}

impl MinEigGram {
    /// `A` is surjective iff `AAᵀ` is positive definite.
    pub fn surjective(&self) -> bool {
        self.value > 0.0
    }
}

/// Relative threshold below which a computed eigenvalue is treated as zero.
const RANK_TOL: f64 = 1e-12;

/// Smallest eigenvalue of `AAᵀ`. A zero result means `A` is not surjective;
/// that is a legal outcome, reported through [`MinEigGram::surjective`].
pub fn estimate_min_eig_gram(op: &LinearOperator, iterations: usize, seed: u64) -> Result<MinEigGram> {
    let (m, n) = (op.out_dim(), op.in_dim());
    if m > n {
        // rank(AAᵀ) ≤ n < m
        return Ok(MinEigGram {
            value: 0.0,
            exact: true,
        });
    }
    match op {
        LinearOperator::Identity(_) => {
            return Ok(MinEigGram {
                value: 1.0,
                exact: true,
            })
        }
        LinearOperator::ScaledIdentity { scale, .. } => {
            return Ok(MinEigGram {
                value: scale * scale,
                exact: true,
            })
        }
        _ => {}
    }
    if m <= MATERIALIZATION_CAP {
        let a = op.materialize();
        let gram = &a * a.transpose();
        let eig = SymmetricEigen::new(gram);
        let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let value = if min <= RANK_TOL * max.max(1.0) { 0.0 } else { min };
        return Ok(MinEigGram { value, exact: true });
    }
    inverse_iteration_min_eig(op, iterations.max(1), seed)
}

/// Inverse iteration on `AAᵀ`, each solve done by conjugate gradients.
fn inverse_iteration_min_eig(op: &LinearOperator, iterations: usize, seed: u64) -> Result<MinEigGram> {
    let m = op.out_dim();
    let mut v = seeded_start(m, seed);
    let nv = norm2(&v);
    scale(1.0 / nv, &mut v);
    let mut scratch = vec![0.0; op.in_dim()];
    let gram = |src: &[f64], dst: &mut [f64], scratch: &mut [f64]| {
        op.apply_adjoint_into(src, scratch);
        op.apply_into(scratch, dst);
    };
    let mut rayleigh = f64::INFINITY;
    let mut w = vec![0.0; m];
    for _ in 0..iterations {
        let solved = conjugate_gradient(&gram, &v, &mut w, &mut scratch, 10 * m, 1e-12);
        let nw = norm2(&w);
        if !solved || !nw.is_finite() || nw == 0.0 {
            break;
        }
        v.copy_from_slice(&w);
        scale(1.0 / nw, &mut v);
        op.apply_adjoint_into(&v, &mut scratch);
        rayleigh = rayleigh.min(dot(&scratch, &scratch));
    }
    if !rayleigh.is_finite() {
        op.apply_adjoint_into(&v, &mut scratch);
        rayleigh = dot(&scratch, &scratch);
    }
    let top = estimate_op_norm(op, DEFAULT_SPECTRAL_ITERS, seed)?.powi(2);
    let value = if rayleigh <= 1e-10 * top.max(1.0) { 0.0 } else { rayleigh };
    Ok(MinEigGram {
        value,
        exact: false,
    })
}

fn conjugate_gradient(
    apply: &impl Fn(&[f64], &mut [f64], &mut [f64]),
    rhs: &[f64],
    x: &mut [f64],
    scratch: &mut [f64],
    max_iter: usize,
    rel_tol: f64,
) -> bool {
    let n = rhs.len();
    x.fill(0.0);
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = dot(&r, &r);
    let target = rel_tol * rel_tol * rs;
    for _ in 0..max_iter {
        if rs <= target {
            return true;
        }
        apply(&p, &mut ap, scratch);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return false;
        }
        let step = rs / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rs_new = dot(&r, &r);
        let ratio = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + ratio * p[i];
        }
        rs = rs_new;
    }
    rs <= target
}

/// Cached spectral quantities of an operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub op_norm: f64,
    pub min_eig_gram: f64,
    /// `sqrt(min_eig_gram)`, so that `hat_lambda·‖y‖ ≤ ‖Aᵀy‖`.
    pub hat_lambda: f64,
    pub exact: bool,
}

impl SpectralBounds {
    /// Closed form where known; a dense eigensolve when the operator fits
    /// under [`MATERIALIZATION_CAP`]; power/inverse iteration otherwise.
    pub fn compute(op: &LinearOperator, iterations: usize, seed: u64) -> Result<Self> {
        let min = estimate_min_eig_gram(op, iterations, seed)?;
        let (op_norm, norm_exact) = operator_norm(op, iterations, seed)?;
        Ok(SpectralBounds {
            op_norm,
            min_eig_gram: min.value,
            hat_lambda: min.value.sqrt(),
            exact: norm_exact && min.exact,
        })
    }

    pub fn surjective(&self) -> bool {
        self.min_eig_gram > 0.0
    }
}

/// Best available `‖A‖`, with a flag saying whether it is exact.
pub fn operator_norm(op: &LinearOperator, iterations: usize, seed: u64) -> Result<(f64, bool)> {
    if let Some(norm) = op.analytic_norm() {
        return Ok((norm, true));
    }
    let (m, n) = (op.out_dim(), op.in_dim());
    if m.min(n) <= DENSE_NORM_CAP {
        let a = op.materialize();
        let gram = if m <= n { &a * a.transpose() } else { a.transpose() * &a };
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        return Ok((top.sqrt(), true));
    }
    if let LinearOperator::Gradient2d { .. } = op {
        // each difference satisfies (a − b)² ≤ 2a² + 2b²
        return Ok((8f64.sqrt(), false));
    }
    Ok((estimate_op_norm(op, iterations, seed)?, false))
}
