//! Variance-reduced stochastic gradient estimators for finite sums:
//! SAGA, SVRG and SARAH, all with mini-batches drawn without replacement.
//!
//! Batches are a pure function of `(seed, k)`: each iteration gets its own
//! ChaCha8 stream, so replaying a run or resetting the estimator reproduces
//! the same draws. Indices are sorted so every reduction happens in
//! ascending component order.
//!
//! When the batch is the whole index set the estimators emit the exact full
//! gradient, which makes a full-batch stochastic run coincide with the
//! deterministic solver bit for bit.

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::problems::FiniteSum;
use crate::vecops::axpy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Saga,
    Svrg,
    Sarah,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Saga => "saga",
            EstimatorKind::Svrg => "svrg",
            EstimatorKind::Sarah => "sarah",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "saga" => Ok(EstimatorKind::Saga),
            "svrg" => Ok(EstimatorKind::Svrg),
            "sarah" => Ok(EstimatorKind::Sarah),
            _ => Err(Error::Parameter(format!("unknown estimator {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
enum Memory {
    Uninit,
    /// Stored component gradients, row `i` at `table[i·n..(i+1)·n]`.
    Saga { table: Vec<f64>, mean: Vec<f64> },
    Svrg { point: Vec<f64>, grad: Vec<f64> },
    Sarah { point: Vec<f64>, estimate: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct EstimatorState {
    kind: EstimatorKind,
    num_components: usize,
    dim: usize,
    batch_size: usize,
    seed: u64,
    /// Snapshot or restart period `m`.
    period: usize,
    memory: Memory,
    comp_evals: u64,
    scratch: Vec<f64>,
}

impl EstimatorState {
    /// `period` defaults to one epoch, `⌈N/b⌉`.
    pub fn new(
        kind: EstimatorKind,
        num_components: usize,
        dim: usize,
        batch_size: usize,
        seed: u64,
        period: Option<usize>,
    ) -> Result<Self> {
        if num_components == 0 {
            return Err(Error::Parameter("finite sum has no components".into()));
        }
        if batch_size == 0 || batch_size > num_components {
            return Err(Error::Parameter(format!(
                "batch size must be in 1..={num_components}, got {batch_size}"
            )));
        }
        let period = period.unwrap_or(num_components.div_ceil(batch_size));
        if period == 0 {
            return Err(Error::Parameter("period must be at least 1".into()));
        }
        Ok(EstimatorState {
            kind,
            num_components,
            dim,
            batch_size,
            seed,
            period,
            memory: Memory::Uninit,
            comp_evals: 0,
            scratch: vec![0.0; dim],
        })
    }

    pub fn for_sum(kind: EstimatorKind, sum: &dyn FiniteSum, batch_size: usize, seed: u64, period: Option<usize>) -> Result<Self> {
        Self::new(kind, sum.num_components(), sum.dim(), batch_size, seed, period)
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Cumulative component-gradient evaluations; a full gradient counts `N`.
    pub fn comp_evals(&self) -> u64 {
        self.comp_evals
    }

    fn full_batch(&self) -> bool {
        self.batch_size == self.num_components
    }

    /// Mini-batch for iteration `k`, ascending.
    pub fn sample_batch(&self, k: usize) -> Vec<usize> {
        if self.full_batch() {
            return (0..self.num_components).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        let mut batch = index::sample(&mut rng, self.num_components, self.batch_size).into_vec();
        batch.sort_unstable();
        batch
    }

    /// Seeds the memory at `x0`: the SAGA table with every `∇f_i(x⁰)`, the
    /// SVRG snapshot and the SARAH estimate with `∇f(x⁰)`.
    pub fn reset(&mut self, sum: &dyn FiniteSum, x0: &[f64]) -> Result<()> {
        check_len(self.dim, x0.len())?;
        check_len(self.num_components, sum.num_components())?;
        let (n, nc) = (self.dim, self.num_components);
        self.comp_evals = nc as u64;
        self.memory = match self.kind {
            EstimatorKind::Saga => {
                let mut table = vec![0.0; nc * n];
                let mut mean = vec![0.0; n];
                for (i, row) in table.chunks_mut(n).enumerate() {
                    sum.component_gradient(i, x0, row);
                    axpy(1.0 / nc as f64, row, &mut mean);
                }
                Memory::Saga { table, mean }
            }
            EstimatorKind::Svrg => {
                let mut grad = vec![0.0; n];
                sum.full_gradient(x0, &mut grad);
                Memory::Svrg { point: x0.to_vec(), grad }
            }
            EstimatorKind::Sarah => {
                let mut estimate = vec![0.0; n];
                sum.full_gradient(x0, &mut estimate);
                Memory::Sarah {
                    point: x0.to_vec(),
                    estimate,
                }
            }
        };
        Ok(())
    }

    /// Writes the estimate of `∇f(x)` at iteration `k` into `out`.
    pub fn estimate(&mut self, sum: &dyn FiniteSum, k: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.dim, x.len())?;
        check_len(self.dim, out.len())?;
        let batch = self.sample_batch(k);
        self.estimate_for_batch(sum, k, x, &batch, out)
    }

    /// Same as [`estimate`](Self::estimate) with a caller-chosen batch.
    pub fn estimate_for_batch(
        &mut self,
        sum: &dyn FiniteSum,
        k: usize,
        x: &[f64],
        batch: &[usize],
        out: &mut [f64],
    ) -> Result<()> {
        let nc = self.num_components;
        let n = self.dim;
        let full = batch.len() == nc;
        let inv_b = 1.0 / batch.len() as f64;
        let snapshot_iter = k % self.period == 0;
        match &mut self.memory {
            Memory::Uninit => return Err(Error::State("estimator used before reset".into())),
            Memory::Saga { table, mean } => {
                if full {
                    sum.full_gradient(x, out);
                    for (i, row) in table.chunks_mut(n).enumerate() {
                        sum.component_gradient(i, x, row);
                    }
                    recompute_mean(table, n, mean);
                    self.comp_evals += nc as u64;
                } else {
                    out.copy_from_slice(mean);
                    for &i in batch {
                        let row = &mut table[i * n..(i + 1) * n];
                        sum.component_gradient(i, x, &mut self.scratch);
                        for j in 0..n {
                            let diff = self.scratch[j] - row[j];
                            out[j] += inv_b * diff;
                            mean[j] += diff / nc as f64;
                        }
                        row.copy_from_slice(&self.scratch);
                    }
                    self.comp_evals += batch.len() as u64;
                }
            }
            Memory::Svrg { point, grad } => {
                if full || snapshot_iter {
                    if point.as_slice() != x {
                        sum.full_gradient(x, grad);
                        point.copy_from_slice(x);
                        self.comp_evals += nc as u64;
                    }
                    out.copy_from_slice(grad);
                } else {
                    out.copy_from_slice(grad);
                    for &i in batch {
                        sum.add_component_gradient(i, x, inv_b, out);
                        sum.add_component_gradient(i, point, -inv_b, out);
                    }
                    self.comp_evals += 2 * batch.len() as u64;
                }
            }
            Memory::Sarah { point, estimate } => {
                if full || snapshot_iter {
                    if point.as_slice() != x || k != 0 {
                        sum.full_gradient(x, estimate);
                        self.comp_evals += nc as u64;
                    }
                } else {
                    for &i in batch {
                        sum.add_component_gradient(i, x, inv_b, estimate);
                        sum.add_component_gradient(i, point, -inv_b, estimate);
                    }
                    self.comp_evals += 2 * batch.len() as u64;
                }
                point.copy_from_slice(x);
                out.copy_from_slice(estimate);
            }
        }
        Ok(())
    }

    /// SAGA table mean as maintained incrementally.
    pub fn saga_mean(&self) -> Option<&[f64]> {
        match &self.memory {
            Memory::Saga { mean, .. } => Some(mean),
            _ => None,
        }
    }

    /// SAGA table row `i`.
    pub fn saga_entry(&self, i: usize) -> Option<&[f64]> {
        match &self.memory {
            Memory::Saga { table, .. } => Some(&table[i * self.dim..(i + 1) * self.dim]),
            _ => None,
        }
    }

    /// A copy drawing batches from another seed; used for variance probes.
    pub fn with_seed(&self, seed: u64) -> Self {
        EstimatorState { seed, ..self.clone() }
    }
}

fn recompute_mean(table: &[f64], n: usize, mean: &mut [f64]) {
    let nc = table.len() / n;
    mean.fill(0.0);
    for row in table.chunks(n) {
        axpy(1.0 / nc as f64, row, mean);
    }
}
