use std::path::{Path, PathBuf};
use std::time::Instant;

use trace_ratio::eval::{default_theta_grid, evaluate_model, SplitSpec};
use trace_ratio::linalg::StiefelPoint;
use trace_ratio::multiview::{alternate_solve, build_block_problem, default_init, AlternateOptions, MultiViewModelSpec};
use trace_ratio::problem::{ResidualNorm, TraceRatioProblem};
use trace_ratio::scf::{scf_solve, BootstrapTheta, SolveStatus, SolverOptions};
use trace_ratio::synth::{generate, generate_multiview_gaussian, stream_rng, MultiViewSynthSpec, SynthSpec};
use trace_ratio::Error;

use crate::args::{AlternateArgs, Cli, Command, EvalArgs, FitArgs, InitArg, NormArg, SolveArgs, SynthArgs, SynthViewsArgs};
use crate::io::{self, fmt_f64, CsvOut};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const INVALID_INPUT: i32 = 4;
    pub const MAX_ITERATIONS: i32 = 5;
    pub const STAGNATED: i32 = 6;
    pub const BOOTSTRAP: i32 = 7;
    pub const NUMERICAL: i32 = 8;
}

pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Format { .. } => exit::IO,
        Error::BootstrapFailed { .. } => exit::BOOTSTRAP,
        Error::NonFinite(_) | Error::EigenFailure | Error::DegenerateDenominator(_) | Error::StepRejected { .. } => {
            exit::NUMERICAL
        }
        _ => exit::INVALID_INPUT,
    }
}

/// A run that did not complete, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub run: String,
    pub code: i32,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub failures: Vec<Failure>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.failures.first().map_or(exit::OK, |f| f.code)
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::SynthViews(a) => cmd_synth_views(a),
        Command::Solve(a) => cmd_solve(a),
        Command::MvslFit(a) => cmd_mvsl_fit(a),
        Command::MvslEval(a) => cmd_mvsl_eval(a),
    }
}

/// Provenance line: command, seed and a hash of every flag except `--out`.
fn provenance<A: std::fmt::Debug + Clone>(cmd: &str, seed: u64, args: &A, clear_out: impl Fn(&mut A)) -> String {
    let mut canonical = args.clone();
    clear_out(&mut canonical);
    let hash = io::config_hash(&format!("{cmd} {canonical:?}"));
    format!("trace-ratio {cmd} seed={seed} config={hash}")
}

fn cmd_synth(a: &SynthArgs) -> Result<Outcome, Error> {
    let out = io::ensure_dir(&a.out)?;
    let mut outcome = Outcome::default();
    for &n in &a.n {
        for &k in &a.k {
            for &seed in &a.seed {
                let run = format!("n{n}_k{k}_seed{seed}");
                let spec = SynthSpec { n, k, seed, spd_shift: a.spd_shift, theta: a.theta };
                match generate::<f64>(&spec) {
                    Ok(p) => {
                        let path = out.join(format!("{run}.trp"));
                        io::write_problem(&path, &p)?;
                        outcome.written.push(path);
                    }
                    Err(e) => outcome.failures.push(Failure { run, code: error_code(&e), message: e.to_string() }),
                }
            }
        }
    }
    Ok(outcome)
}

fn cmd_synth_views(a: &SynthViewsArgs) -> Result<Outcome, Error> {
    let spec = MultiViewSynthSpec {
        dims: a.dims.clone(),
        n_classes: a.classes,
        m: a.m,
        separation: a.separation,
        sigma: a.sigma,
        seed: a.seed,
    };
    let ds = generate_multiview_gaussian(&spec)?;
    let comment = provenance("synth-views", a.seed, a, |c| c.out = PathBuf::new());
    io::write_dataset(&a.out, &comment, &ds)?;
    Ok(Outcome { written: vec![a.out.join(io::MANIFEST)], failures: Vec::new() })
}

fn solver_options(a: &SolveArgs) -> SolverOptions<f64> {
    SolverOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        rank_tol: a.rank_tol,
        residual_norm: match a.residual_norm {
            NormArg::Spectral => ResidualNorm::Spectral,
            NormArg::One => ResidualNorm::One,
        },
        bootstrap_theta: if a.bootstrap_theta == 1 { BootstrapTheta::One } else { BootstrapTheta::Zero },
        record_trajectory: true,
    }
}

fn solve_inputs(a: &SolveArgs) -> Result<Vec<(String, Result<TraceRatioProblem<f64>, Error>)>, Error> {
    if a.input.is_empty() {
        let (Some(n), Some(k)) = (a.n, a.k) else {
            return Err(Error::InvalidParameter("give --input files or both --n and --k".into()));
        };
        let spec = SynthSpec::new(n, k, a.seed);
        return Ok(vec![(format!("n{n}_k{k}_seed{}", a.seed), generate(&spec))]);
    }
    Ok(a
        .input
        .iter()
        .map(|p| {
            let stem = p.file_stem().map_or_else(|| "problem".into(), |s| s.to_string_lossy().into_owned());
            (stem, io::read_problem(p))
        })
        .collect())
}

fn theta_label(theta: f64) -> String {
    format!("theta{}", fmt_f64(theta))
}

fn cmd_solve(a: &SolveArgs) -> Result<Outcome, Error> {
    let opts = solver_options(a);
    let out = io::ensure_dir(&a.out)?;
    let comment = provenance("solve", a.seed, a, |c| c.out = PathBuf::new());
    let mut outcome = Outcome::default();
    let summary_path = out.join("summary.csv");
    let mut summary = CsvOut::create(
        &summary_path,
        &comment,
        Some(&["n", "k", "theta", "iters", "converged", "final_f", "final_residual", "rate", "cpu_seconds"]),
    )?;

    for (stem, problem) in solve_inputs(a)? {
        let problem = match problem {
            Ok(p) => p,
            Err(e) => {
                outcome.failures.push(Failure { run: stem, code: error_code(&e), message: e.to_string() });
                continue;
            }
        };
        let thetas: Vec<Option<f64>> =
            if a.theta.is_empty() { vec![None] } else { a.theta.iter().copied().map(Some).collect() };
        for theta in thetas {
            let run = match theta {
                Some(t) if a.theta.len() > 1 => format!("{stem}_{}", theta_label(t)),
                _ => stem.clone(),
            };
            match solve_one(&problem, theta, a, &opts, &out, &run, &comment) {
                Ok((row, status, files)) => {
                    summary.row(row)?;
                    outcome.written.extend(files);
                    let code = match status {
                        SolveStatus::Converged => None,
                        SolveStatus::MaxIterations => Some(exit::MAX_ITERATIONS),
                        SolveStatus::Stagnated => Some(exit::STAGNATED),
                    };
                    if let Some(code) = code {
                        outcome.failures.push(Failure { run, code, message: format!("did not converge ({status:?})") });
                    }
                }
                Err(e) => outcome.failures.push(Failure { run, code: error_code(&e), message: e.to_string() }),
            }
        }
    }
    summary.finish()?;
    outcome.written.push(summary_path);
    Ok(outcome)
}

type SolveRow = (Vec<String>, SolveStatus, Vec<PathBuf>);

fn solve_one(
    base: &TraceRatioProblem<f64>,
    theta: Option<f64>,
    a: &SolveArgs,
    opts: &SolverOptions<f64>,
    out: &Path,
    run: &str,
    comment: &str,
) -> Result<SolveRow, Error> {
    let problem = match theta {
        Some(t) => base.with_theta(t)?,
        None => base.clone(),
    };
    let x0 = match a.init {
        InitArg::Identity => StiefelPoint::leading_identity(problem.n(), problem.k())?,
        InitArg::Random => StiefelPoint::random(problem.n(), problem.k(), &mut stream_rng(a.seed, 3))?,
    };
    let start = Instant::now();
    let rep = scf_solve(&problem, &x0, opts)?;
    let seconds = start.elapsed().as_secs_f64();

    let traj_path = out.join(format!("{run}.trajectory.csv"));
    let mut traj = CsvOut::create(
        &traj_path,
        comment,
        Some(&["iter", "f_theta", "residual", "gap", "rank_xtd", "step_sintheta"]),
    )?;
    for r in &rep.trajectory {
        traj.row([
            r.iter.to_string(),
            fmt_f64(r.f_theta),
            fmt_f64(r.nepv_residual),
            r.eigen_gap.map(fmt_f64).unwrap_or_default(),
            r.rank_xtd.to_string(),
            fmt_f64(r.step_sin_theta),
        ])?;
    }
    traj.finish()?;
    let x_path = out.join(format!("{run}.x.csv"));
    io::write_matrix_csv(&x_path, comment, rep.x.as_matrix())?;

    let row = vec![
        problem.n().to_string(),
        problem.k().to_string(),
        fmt_f64(problem.theta()),
        rep.iterations.to_string(),
        rep.converged().to_string(),
        fmt_f64(rep.objective.f_theta),
        fmt_f64(rep.final_residual()),
        rep.estimated_rate.map(fmt_f64).unwrap_or_default(),
        format!("{seconds:.6}"),
    ];
    Ok((row, rep.status, vec![traj_path, x_path]))
}

fn alternate_options(a: &AlternateArgs) -> AlternateOptions<f64> {
    let mut opts = AlternateOptions::default();
    opts.mode = a.mode;
    opts.eps = a.eps;
    opts.max_sweeps = a.max_sweeps;
    opts.inner.max_iter = a.inner_max_iter;
    opts.inner.tol = a.tol;
    opts
}

fn cmd_mvsl_fit(a: &FitArgs) -> Result<Outcome, Error> {
    let ds = io::read_dataset(&a.data)?;
    let out = io::ensure_dir(&a.out)?;
    let comment = provenance("mvsl-fit", a.seed, a, |c| c.out = PathBuf::new());
    let spec = MultiViewModelSpec {
        family: a.model,
        alpha: a.alpha,
        theta: a.theta,
        k: a.k,
        diag_regularization: a.alternate.diag_regularization,
    };
    let bp = build_block_problem(&ds, &spec)?;
    let init = default_init(bp.dims(), a.k)?;
    let rep = alternate_solve(&bp, init, &alternate_options(&a.alternate))?;

    let mut written = Vec::new();
    for (s, p) in rep.projections.iter().enumerate() {
        let path = out.join(format!("projection_view{s}.csv"));
        io::write_matrix_csv(&path, &comment, p.as_matrix())?;
        written.push(path);
    }
    let sweeps_path = out.join("sweeps.csv");
    let mut sweeps = CsvOut::create(&sweeps_path, &comment, Some(&["sweep", "objective", "inner_iters", "inner_unconverged"]))?;
    sweeps.row(["0".to_string(), fmt_f64(rep.initial_objective), "0".into(), "0".into()])?;
    for s in &rep.sweeps {
        sweeps.row([
            s.sweep.to_string(),
            fmt_f64(s.objective),
            s.inner_iterations.iter().sum::<usize>().to_string(),
            s.inner_unconverged.to_string(),
        ])?;
    }
    sweeps.finish()?;
    written.push(sweeps_path);

    let summary_path = out.join("fit_summary.csv");
    let mut summary = CsvOut::create(
        &summary_path,
        &comment,
        Some(&["model", "alpha", "k", "theta", "mode", "sweeps", "converged", "objective", "monotonicity_violations"]),
    )?;
    summary.row([
        a.model.to_string(),
        fmt_f64(a.alpha),
        a.k.to_string(),
        fmt_f64(a.theta),
        a.alternate.mode.to_string(),
        rep.sweeps.len().to_string(),
        rep.converged.to_string(),
        fmt_f64(rep.objective),
        rep.monotonicity_violations.to_string(),
    ])?;
    summary.finish()?;
    written.push(summary_path);
    Ok(Outcome { written, failures: Vec::new() })
}

fn cmd_mvsl_eval(a: &EvalArgs) -> Result<Outcome, Error> {
    let ds = io::read_dataset(&a.data)?;
    let out = io::ensure_dir(&a.out)?;
    let comment = provenance("mvsl-eval", a.seed, a, |c| c.out = PathBuf::new());
    let thetas = if a.theta.is_empty() { default_theta_grid() } else { a.theta.clone() };
    let split = SplitSpec { train_fraction: a.train_fraction, n_repeats: a.repeats, seed: a.seed };
    let opts = alternate_options(&a.alternate);

    let grid_path = out.join("grid.csv");
    let best_path = out.join("best_theta.csv");
    let splits_path = out.join("splits.csv");
    let mut grid = CsvOut::create(&grid_path, &comment, Some(&["model", "k", "theta", "mean_acc", "std_acc"]))?;
    let mut best = CsvOut::create(&best_path, &comment, Some(&["model", "k", "best_theta", "mean_acc", "std_acc"]))?;
    let mut splits = CsvOut::create(&splits_path, &comment, Some(&["model", "k", "theta", "split", "acc"]))?;
    let mut outcome = Outcome::default();

    for &family in &a.model {
        for &alpha in &a.alpha {
            let label = if a.alpha.len() > 1 { format!("{family}(alpha={})", fmt_f64(alpha)) } else { family.to_string() };
            let base = MultiViewModelSpec {
                family,
                alpha,
                theta: thetas[0],
                k: a.k[0],
                diag_regularization: a.alternate.diag_regularization,
            };
            let table = match evaluate_model(&ds, &base, &split, &a.k, &thetas, &opts) {
                Ok(t) => t,
                Err(e) => {
                    outcome.failures.push(Failure { run: label, code: error_code(&e), message: e.to_string() });
                    continue;
                }
            };
            for cell in &table.cells {
                let (k, theta) = (cell.k.to_string(), fmt_f64(cell.theta));
                grid.row([&label, &k, &theta, &fmt_f64(cell.result.mean), &fmt_f64(cell.result.std)])?;
                for (i, acc) in cell.result.per_split.iter().enumerate() {
                    splits.row([&label, &k, &theta, &i.to_string(), &fmt_f64(*acc)])?;
                }
            }
            for cell in table.best_per_k() {
                best.row([
                    label.clone(),
                    cell.k.to_string(),
                    fmt_f64(cell.theta),
                    fmt_f64(cell.result.mean),
                    fmt_f64(cell.result.std),
                ])?;
            }
        }
    }
    grid.finish()?;
    best.finish()?;
    splits.finish()?;
    outcome.written.extend([grid_path, best_path, splits_path]);
    Ok(outcome)
}
