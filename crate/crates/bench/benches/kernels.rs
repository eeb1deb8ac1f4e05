use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use ppdg_core::conjprox::Regularizer;
use ppdg_core::dataio::{add_gaussian_noise, synthetic_image};
use ppdg_core::linops::{build_gradient2d, Boundary};
use ppdg_core::ppdg::{Ppdg, PpdgConfig, SolverState};
use ppdg_core::problems::{build_denoise, build_fused_lasso, build_precision_graph, synthetic_classification};
use ppdg_core::sppdg::{solve_stochastic, SppdgConfig};
use ppdg_core::vrgrad::EstimatorKind;

fn prox(c: &mut Criterion) {
    let v: Vec<f64> = (0..8192).map(|i| ((i * 37) % 401) as f64 / 100.0 - 2.0).collect();
    let mut out = vec![0.0; v.len()];
    let regs = [
        Regularizer::l1(1.0).unwrap(),
        Regularizer::l0_box(0.1, -1.0, 1.0).unwrap(),
        Regularizer::lp_ball(1.0, 0.5, 1.0).unwrap(),
        Regularizer::scad_box(1.0, 3.7, 1.0).unwrap(),
    ];
    let mut group = c.benchmark_group("prox_conj_8192");
    for reg in regs {
        group.bench_function(reg.name(), |b| b.iter(|| reg.prox_conj_into(black_box(&v), 1.0, &mut out)));
    }
    group.finish();
}

fn gradient2d(c: &mut Criterion) {
    let op = build_gradient2d(256, 256, Boundary::Periodic).unwrap();
    let x: Vec<f64> = (0..op.in_dim()).map(|i| (i % 17) as f64).collect();
    let y: Vec<f64> = (0..op.out_dim()).map(|i| (i % 13) as f64).collect();
    let mut ax = vec![0.0; op.out_dim()];
    let mut aty = vec![0.0; op.in_dim()];
    c.bench_function("gradient2d_256_apply", |b| b.iter(|| op.apply_into(black_box(&x), &mut ax)));
    c.bench_function("gradient2d_256_adjoint", |b| b.iter(|| op.apply_adjoint_into(black_box(&y), &mut aty)));
}

fn denoise_step(c: &mut Criterion) {
    let clean = synthetic_image(64, 64).unwrap();
    let noisy = add_gaussian_noise(&clean, 0.05, 1).unwrap();
    let p = build_denoise(&noisy.pixels, 64, 64, 0.1, -1.0, 1.0, Boundary::Periodic).unwrap();
    let solver = Ppdg::new(&p, PpdgConfig::for_lipschitz(1.0)).unwrap();
    let state = SolverState::new(&p, noisy.pixels.clone(), vec![0.0; p.dual_dim()]).unwrap();
    c.bench_function("ppdg_denoise_64_step", |b| {
        b.iter_batched_ref(|| state.clone(), |s| solver.step(s).unwrap(), BatchSize::SmallInput)
    });
}

fn lasso_epochs(c: &mut Criterion) {
    let (data, labels) = synthetic_classification(200, 20, 7).unwrap();
    let v = build_precision_graph(&data, 0.5).unwrap();
    let p = build_fused_lasso(data, labels, v, 1e-4, 0.5, 1.0).unwrap();
    let cfg = SppdgConfig {
        batch_size: 2,
        max_epochs: 5,
        seeds: vec![0],
        ..SppdgConfig::for_problem(&p)
    };
    let (n, m) = (p.sum.dim(), p.operator.out_dim());
    let mut group = c.benchmark_group("sppdg_lasso_5_epochs");
    group.sample_size(20);
    for kind in [EstimatorKind::Svrg, EstimatorKind::Saga, EstimatorKind::Sarah] {
        group.bench_function(kind.name(), |b| {
            b.iter(|| solve_stochastic(&p, kind, &cfg, &vec![0.0; n], &vec![0.0; m]).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, prox, gradient2d, denoise_step, lasso_epochs);
criterion_main!(benches);
