//! `ppdg`: runs the denoising and fused-lasso experiments and the prox and
//! spectral diagnostics, writing CSV traces and `summary.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ppdg_core::conjprox::{prox_conformance_sweep, Regularizer};
use ppdg_core::dataio::{
    add_gaussian_noise, parse_libsvm, read_pgm, synthetic_image, write_aggregate_csv, write_pgm, write_seed_trace_csv,
    write_trace_csv, CsvOptions, ImageBuffer,
};
use ppdg_core::linops::{build_gradient2d, build_stacked, Boundary, DenseMatrix, LinearOperator, SpectralBounds};
use ppdg_core::ppdg::{default_alpha, Ppdg, PpdgConfig, Preconditioner, TraceRecord, DEFAULT_NORM_CAP};
use ppdg_core::problems::{
    build_denoise, build_fused_lasso, build_precision_graph, check_graph, normalize_rows, psnr, synthetic_classification,
};
use ppdg_core::sppdg::{expectation_descent_report, solve_stochastic, SppdgConfig};
use ppdg_core::vrgrad::EstimatorKind;
use ppdg_core::Error;

#[derive(Parser)]
#[command(name = "ppdg", version, about = "Preconditioned primal-dual gradient solvers for nonconvex composite problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// L0-gradient image denoising with box-constrained gradients.
    Denoise(DenoiseArgs),
    /// Graph-guided fused lasso with sigmoid loss, solved stochastically.
    Lasso(LassoArgs),
    /// Compare closed-form conjugate prox maps against a grid oracle.
    ProxCheck(ProxCheckArgs),
    /// Report ‖A‖, λ_min(AAᵀ) and surjectivity of an operator.
    Spectra(SpectraArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Periodic,
    ZeroPad,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Periodic => Boundary::Periodic,
            BoundaryArg::ZeroPad => Boundary::ZeroPad,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "ppdg-out")]
    out: PathBuf,
    /// Write 0 for elapsed times so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct DenoiseArgs {
    /// Clean input image (PGM, P2 or P5); noise is added on top.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Use the built-in piecewise-constant test image, e.g. 64x64.
    #[arg(long, value_parser = parse_size)]
    synthetic: Option<(usize, usize)>,
    /// Gaussian noise level.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Weight of the gradient L0 penalty.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    lambda: f64,
    /// Lower gradient bound.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    c1: f64,
    /// Upper gradient bound.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c2: f64,
    #[arg(long, value_enum, default_value = "periodic")]
    boundary: BoundaryArg,
    /// Primal step size; defaults to 0.9/(3L) = 0.3.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Stop once max(‖Δx‖, ‖Δy‖) falls to this level.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Saga,
    Svrg,
    Sarah,
    /// Exact gradients (deterministic solver).
    Full,
}

#[derive(Args)]
struct LassoArgs {
    /// LIBSVM dataset.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Number of features when the file does not reach the last one.
    #[arg(long)]
    features: Option<usize>,
    /// Seeded synthetic data with N samples and n features, e.g. 200,20.
    #[arg(long, value_parser = parse_pair)]
    synthetic: Option<(usize, usize)>,
    /// Seed for the synthetic data.
    #[arg(long, default_value_t = 7)]
    data_seed: u64,
    /// Scale dataset rows to unit norm (synthetic rows always are).
    #[arg(long)]
    normalize: bool,
    /// Graph matrix V as CSV; default is the thresholded correlation graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// |correlation| threshold for the default graph.
    #[arg(long, default_value_t = 0.5)]
    graph_threshold: f64,
    /// Penalty weight.
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    /// Exponent of the lp penalty.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Box radius on the fused differences.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, value_enum, default_value = "svrg")]
    estimator: EstimatorArg,
    /// Mini-batch size; defaults to max(1, floor(0.01 N)).
    #[arg(long)]
    batch: Option<usize>,
    /// Snapshot/restart period; defaults to one epoch.
    #[arg(long)]
    period: Option<usize>,
    /// Number of replicated runs, seeded seed-base, seed-base + 1, ...
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Budget in epochs of N component gradients.
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Iteration cap for --estimator full.
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Primal step size; defaults to 0.9/(3L).
    #[arg(long)]
    alpha: Option<f64>,
    /// Estimator variance proxy; positive values enforce the stochastic step bound.
    #[arg(long, default_value_t = 0.0)]
    kappa_hat: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegArg {
    L1,
    L0,
    Lp,
    Scad,
}

#[derive(Args)]
struct ProxCheckArgs {
    #[arg(long, value_enum)]
    reg: RegArg,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    c1: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c2: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 3.7)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Sample points per beta value.
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest accepted deviation.
    #[arg(long, default_value_t = 5e-4)]
    tolerance: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Identity,
    ScaledIdentity,
    Gradient2d,
    Dense,
    Stacked,
}

#[derive(Args)]
struct SpectraArgs {
    #[arg(long, value_enum)]
    op: OpArg,
    /// Dimension for identity operators and for --v-identity.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    scale: f64,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, value_enum, default_value = "periodic")]
    boundary: BoundaryArg,
    /// Matrix CSV for dense operators, or the block V of a stacked one.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Use V = I (size --n) as the top block of a stacked operator.
    #[arg(long)]
    v_identity: bool,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or("expected HxW")?;
    let h = h.trim().parse().map_err(|_| "bad height")?;
    let w = w.trim().parse().map_err(|_| "bad width")?;
    Ok((h, w))
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected N,n")?;
    Ok((
        a.trim().parse().map_err(|_| "bad sample count")?,
        b.trim().parse().map_err(|_| "bad feature count")?,
    ))
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Denoise(a) => cmd_denoise(a),
        Command::Lasso(a) => cmd_lasso(a),
        Command::ProxCheck(a) => cmd_prox_check(a),
        Command::Spectra(a) => cmd_spectra(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn prepare_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_summary(dir: &Path, entries: &[(&str, String)]) -> Result<(), Error> {
    let mut text = String::new();
    for (k, v) in entries {
        writeln!(text, "{k}={v}").unwrap();
    }
    let path = dir.join("summary.txt");
    fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

fn seconds(start: Instant, no_timing: bool) -> f64 {
    if no_timing {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    }
}

fn cmd_denoise(a: DenoiseArgs) -> CmdResult {
    if !(a.sigma >= 0.0) {
        return Err(Failure::Usage(format!("--sigma must be nonnegative, got {}", a.sigma)));
    }
    // validate the regularizer before loading anything
    Regularizer::l0_box(a.lambda, a.c1, a.c2).map_err(usage)?;
    let alpha = a.alpha.unwrap_or(default_alpha(1.0));
    let config = PpdgConfig {
        max_iters: a.max_iters,
        tol_step: a.tol,
        preconditioner: Preconditioner::ScalarBeta,
        ..PpdgConfig::new(alpha)
    };

    let clean = match (&a.input, a.synthetic) {
        (Some(path), _) => read_pgm(path)?,
        (None, Some((h, w))) => synthetic_image(h, w).map_err(usage)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let (h, w) = (clean.height, clean.width);
    let noisy = add_gaussian_noise(&clean, a.sigma, a.seed)?;
    let problem = build_denoise(&noisy.pixels, h, w, a.lambda, a.c1, a.c2, a.boundary.into()).map_err(usage)?;
    let solver = Ppdg::new(&problem, config).map_err(usage)?;

    let start = Instant::now();
    let mut trace: Vec<TraceRecord> = Vec::new();
    let report = solver.solve(noisy.pixels.clone(), vec![0.0; problem.dual_dim()], &mut trace)?;
    let secs = seconds(start, a.output.no_timing);

    let psnr_in = psnr(&noisy.pixels, &clean.pixels, h, w)?;
    let psnr_out = psnr(&report.x, &clean.pixels, h, w)?;
    let dir = &a.output.out;
    prepare_dir(dir)?;
    let source = match (&a.input, a.synthetic) {
        (Some(p), _) => format!("input={}", p.display()),
        (_, Some((h, w))) => format!("synthetic={h}x{w}"),
        _ => unreachable!(),
    };
    let echo = format!(
        "denoise {source} sigma={} seed={} lambda={} c1={} c2={} boundary={} alpha={alpha} max_iters={} tol={}",
        a.sigma,
        a.seed,
        a.lambda,
        a.c1,
        a.c2,
        match a.boundary {
            BoundaryArg::Periodic => "periodic",
            BoundaryArg::ZeroPad => "zero-pad",
        },
        a.max_iters,
        a.tol
    );
    let opts = CsvOptions {
        comment: Some(echo),
        omit_timing: a.output.no_timing,
    };
    write_trace_csv(dir.join("trace.csv"), &trace, &opts)?;
    let denoised = ImageBuffer::new(h, w, report.x.clone())?;
    write_pgm(dir.join("denoised.pgm"), &denoised)?;
    write_pgm(dir.join("noisy.pgm"), &noisy)?;
    let increases = trace.windows(2).filter(|p| p[1].objective > p[0].objective).count();
    let d = report.diagnostics;
    write_summary(
        dir,
        &[
            ("psnr_in", psnr_in.to_string()),
            ("psnr_out", psnr_out.to_string()),
            ("iters", report.iters.to_string()),
            ("seconds", secs.to_string()),
            ("termination", format!("{:?}", report.termination)),
            ("objective", problem.objective_projected(&report.x).to_string()),
            ("box_violation", problem.box_violation(&report.x).to_string()),
            ("objective_increases", increases.to_string()),
            ("kkt_x", report.kkt_x.to_string()),
            ("kkt_y", report.kkt_y.to_string()),
            ("alpha", report.alpha.to_string()),
            ("beta", report.beta.to_string()),
            ("op_norm", report.op_norm.to_string()),
            ("lyapunov_violations", format!("{}/{}", d.descent_violations, d.descent_checked)),
            ("subgradient_violations", format!("{}/{}", d.subgradient_violations, d.subgradient_checked)),
            ("dual_bound_violations", format!("{}/{}", d.dual_bound_violations, d.dual_bound_checked)),
        ],
    )?;
    println!("psnr_in,psnr_out,iters,seconds");
    println!("{psnr_in},{psnr_out},{},{secs}", report.iters);
    Ok(())
}

fn cmd_lasso(a: LassoArgs) -> CmdResult {
    Regularizer::lp_ball(a.lambda, a.p, a.r).map_err(usage)?;
    if a.seeds == 0 {
        return Err(Failure::Usage("--seeds must be at least 1".into()));
    }
    let (data, labels, source) = match (&a.input, a.synthetic) {
        (Some(path), _) => {
            let ds = parse_libsvm(path, a.features)?;
            let m = ds.to_dense()?;
            let m = if a.normalize { normalize_rows(&m) } else { m };
            (m, ds.labels, format!("input={}", path.display()))
        }
        (None, Some((n_samples, n_features))) => {
            let (m, l) = synthetic_classification(n_samples, n_features, a.data_seed).map_err(usage)?;
            (m, l, format!("synthetic={n_samples},{n_features} data_seed={}", a.data_seed))
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let v = match &a.graph {
        Some(path) => {
            let v = DenseMatrix::from_csv(path)?;
            check_graph(&v)?;
            v
        }
        None => build_precision_graph(&data, a.graph_threshold).map_err(usage)?,
    };
    let problem = build_fused_lasso(data, labels, v, a.lambda, a.p, a.r)?;
    let n_comp = problem.sum.num_components();
    let n = problem.sum.dim();
    let m = problem.operator.out_dim();
    let alpha = a.alpha.unwrap_or(default_alpha(problem.lipschitz()));
    let batch = a.batch.unwrap_or((n_comp / 100).max(1));
    let dir = &a.output.out;

    let echo = format!(
        "lasso {source} graph={} lambda={} p={} r={} estimator={} batch={batch} period={} seeds={} seed_base={} epochs={} alpha={alpha} kappa_hat={} tol={}",
        a.graph.as_ref().map_or(format!("corr>{}", a.graph_threshold), |p| p.display().to_string()),
        a.lambda,
        a.p,
        a.r,
        estimator_name(a.estimator),
        a.period.map_or("epoch".into(), |p| p.to_string()),
        a.seeds,
        a.seed_base,
        a.epochs,
        a.kappa_hat,
        a.tol
    );
    let opts = CsvOptions {
        comment: Some(echo),
        omit_timing: a.output.no_timing,
    };

    if a.estimator == EstimatorArg::Full {
        let composite = problem.as_composite();
        let config = PpdgConfig {
            max_iters: a.max_iters,
            tol_step: a.tol,
            ..PpdgConfig::new(alpha)
        };
        let solver = Ppdg::new(&composite, config).map_err(usage)?;
        let start = Instant::now();
        let mut trace = Vec::new();
        let report = solver.solve(vec![0.0; n], vec![0.0; m], &mut trace)?;
        let secs = seconds(start, a.output.no_timing);
        prepare_dir(dir)?;
        write_trace_csv(dir.join("trace.csv"), &trace, &opts)?;
        let objective = composite.objective_projected(&report.x);
        write_summary(
            dir,
            &[
                ("estimator", "full".into()),
                ("iters", report.iters.to_string()),
                ("seconds", secs.to_string()),
                ("termination", format!("{:?}", report.termination)),
                ("mean_final_objective", objective.to_string()),
                ("box_violation", composite.box_violation(&report.x).to_string()),
                ("kkt_x", report.kkt_x.to_string()),
                ("kkt_y", report.kkt_y.to_string()),
                ("alpha", alpha.to_string()),
                ("beta", report.beta.to_string()),
            ],
        )?;
        println!("estimator=full iters={} objective={objective} kkt_x={} kkt_y={}", report.iters, report.kkt_x, report.kkt_y);
        return Ok(());
    }

    let kind = match a.estimator {
        EstimatorArg::Saga => EstimatorKind::Saga,
        EstimatorArg::Svrg => EstimatorKind::Svrg,
        EstimatorArg::Sarah => EstimatorKind::Sarah,
        EstimatorArg::Full => unreachable!(),
    };
    let config = SppdgConfig {
        alpha,
        kappa_hat: a.kappa_hat,
        max_epochs: a.epochs,
        max_iters: None,
        tol_step: a.tol,
        seeds: (a.seed_base..a.seed_base + a.seeds).collect(),
        preconditioner: Preconditioner::ScalarBeta,
        batch_size: batch,
        period: a.period,
        norm_cap: DEFAULT_NORM_CAP,
    };
    if batch == 0 || batch > n_comp {
        return Err(Failure::Usage(format!("--batch must be in 1..={n_comp}")));
    }
    let start = Instant::now();
    let report = solve_stochastic(&problem, kind, &config, &vec![0.0; n], &vec![0.0; m]).map_err(|e| match e {
        Error::Parameter(_) => usage(e),
        other => Failure::Runtime(other),
    })?;
    let secs = seconds(start, a.output.no_timing);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    prepare_dir(dir)?;
    let composite = problem.as_composite();
    let mut finals = Vec::new();
    let mut kkt_ok = 0;
    let mut worst_violation: f64 = 0.0;
    for (seed, run) in report.successful() {
        write_seed_trace_csv(dir.join(format!("seed_{seed}.csv")), &run.trace, &run.comp_evals, &opts)?;
        finals.push(composite.objective_projected(&run.report.x));
        worst_violation = worst_violation.max(composite.box_violation(&run.report.x));
        if run.report.kkt_x <= 1e-3 && run.report.kkt_y <= 1e-3 {
            kkt_ok += 1;
        }
    }
    write_aggregate_csv(dir.join("aggregate.csv"), &report.aggregate, &opts)?;
    let mean_final = finals.iter().sum::<f64>() / finals.len() as f64;
    let traces: Vec<&[TraceRecord]> = report.successful().map(|(_, r)| r.trace.as_slice()).collect();
    let descent = if traces.len() >= 2 {
        let d = expectation_descent_report(&traces, &report.constants)?;
        format!("{}/{}", d.violations, d.checked)
    } else {
        "n/a".into()
    };
    let mut summary = vec![
        ("estimator", estimator_name(a.estimator).to_string()),
        ("seeds_ok", format!("{}/{}", finals.len(), a.seeds)),
        ("seconds", secs.to_string()),
        ("mean_final_objective", mean_final.to_string()),
        ("kkt_below_1e-3", format!("{kkt_ok}/{}", finals.len())),
        ("max_box_violation", worst_violation.to_string()),
        ("expectation_descent_violations", descent),
        ("alpha", alpha.to_string()),
        ("beta", report.beta.to_string()),
        ("batch", batch.to_string()),
        ("e0", report.constants.e0.to_string()),
    ];
    for (seed, run) in report.successful() {
        summary.push((
            "seed",
            format!(
                "{seed} iters={} objective={} kkt_x={} kkt_y={}",
                run.report.iters,
                composite.objective_projected(&run.report.x),
                run.report.kkt_x,
                run.report.kkt_y
            ),
        ));
    }
    write_summary(dir, &summary)?;
    println!(
        "estimator={} seeds_ok={}/{} mean_final_objective={mean_final} kkt_ok={kkt_ok}",
        estimator_name(a.estimator),
        finals.len(),
        a.seeds
    );
    Ok(())
}

fn estimator_name(e: EstimatorArg) -> &'static str {
    match e {
        EstimatorArg::Saga => "saga",
        EstimatorArg::Svrg => "svrg",
        EstimatorArg::Sarah => "sarah",
        EstimatorArg::Full => "full",
    }
}

fn cmd_prox_check(a: ProxCheckArgs) -> CmdResult {
    let reg = match a.reg {
        RegArg::L1 => Regularizer::l1(a.lambda),
        RegArg::L0 => Regularizer::l0_box(a.lambda, a.c1, a.c2),
        RegArg::Lp => Regularizer::lp_ball(a.lambda, a.p, a.r),
        RegArg::Scad => Regularizer::scad_box(a.lambda, a.gamma, a.r),
    }
    .map_err(usage)?;
    if a.points == 0 {
        return Err(Failure::Usage("--points must be positive".into()));
    }
    let report = prox_conformance_sweep(&reg, a.points, &[0.1, 1.0, 10.0], a.seed)?;
    println!(
        "regularizer={} points={} max_deviation={:e} worst_v={} worst_beta={}",
        reg.name(),
        report.points,
        report.max_deviation,
        report.worst.0,
        report.worst.1
    );
    if report.max_deviation > a.tolerance {
        return Err(Failure::Runtime(Error::Data(format!(
            "max deviation {:e} exceeds {:e}",
            report.max_deviation, a.tolerance
        ))));
    }
    Ok(())
}

fn cmd_spectra(a: SpectraArgs) -> CmdResult {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("this operator needs --{flag}")));
    let op = match a.op {
        OpArg::Identity => LinearOperator::Identity(need(a.n, "n")?),
        OpArg::ScaledIdentity => LinearOperator::ScaledIdentity {
            dim: need(a.n, "n")?,
            scale: a.scale,
        },
        OpArg::Gradient2d => {
            build_gradient2d(need(a.height, "height")?, need(a.width, "width")?, a.boundary.into()).map_err(usage)?
        }
        OpArg::Dense => {
            let path = a.matrix.as_ref().ok_or_else(|| Failure::Usage("dense needs --matrix".into()))?;
            LinearOperator::Dense(DenseMatrix::from_csv(path)?)
        }
        OpArg::Stacked => {
            let v = match (&a.matrix, a.v_identity) {
                (Some(path), false) => DenseMatrix::from_csv(path)?,
                (None, true) => DenseMatrix::identity(need(a.n, "n")?),
                _ => return Err(Failure::Usage("stacked needs exactly one of --matrix or --v-identity".into())),
            };
            build_stacked(v).map_err(usage)?
        }
    };
    if a.iters == 0 {
        return Err(Failure::Usage("--iters must be positive".into()));
    }
    let b = SpectralBounds::compute(&op, a.iters, a.seed)?;
    println!("operator={} in_dim={} out_dim={}", op.kind_name(), op.in_dim(), op.out_dim());
    println!("op_norm={}", b.op_norm);
    println!("op_norm_sq={}", b.op_norm * b.op_norm);
    println!("lambda_min_gram={}", b.min_eig_gram);
    println!("hat_lambda={}", b.hat_lambda);
    println!("exact={}", b.exact);
    println!("surjective={}", b.surjective());
    if !b.surjective() {
        println!(
            "note: A is not surjective (λ_min(AAᵀ) = 0), so the dual metric αAAᵀ is singular; \
             the solvers fall back to the scalar step β = 1/(α‖A‖²) and the descent guarantees become advisory"
        );
    }
    Ok(())
}
