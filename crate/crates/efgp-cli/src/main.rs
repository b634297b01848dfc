//! `efgp` command line: fit/predict on CSV data, synthetic benchmarks,
//! kernel-error sweeps, and conditioning studies.
//!
//! Exit codes: 0 success, 1 numerical failure (non-convergence), 2 input
//! validation, 3 resource guard.

mod csvio;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use efgp::error::EfgpError;
use efgp::experiments::{run_benchmark, BenchOutcome, BenchRow};
use efgp::grid::{
    aliasing_bound, kernel_error_empirical, matern_frobenius_heuristic, truncation_bound,
    ErrorNorm, FourierGrid, ProbeSet,
};
use efgp::kernel::KernelFamily;
use efgp::model::{choose_grid, fit, BoxMap, GridSpec, SolveOptions};
use efgp::model_io;
use efgp::oracle::condition_report;
use efgp::{Dataset, Kernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "efgp",
    about = "Gaussian-process regression with equispaced Fourier features",
    version
)]
struct Cli {
    /// Worker threads (default: EFGP_THREADS env var, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Kernel accuracy target; chooses the frequency grid by the family rule.
    #[arg(long, conflicts_with_all = ["h", "m"])]
    eps: Option<f64>,
    /// Explicit grid spacing (requires --m).
    #[arg(long, requires = "m")]
    h: Option<f64>,
    /// Explicit grid half-width per dimension (requires --h).
    #[arg(long, requires = "h")]
    m: Option<usize>,
}

impl GridArgs {
    fn to_spec(&self, d: usize) -> Result<GridSpec, EfgpError> {
        match (self.eps, self.h, self.m) {
            (Some(eps), None, None) => Ok(GridSpec::Tolerance(eps)),
            (None, Some(h), Some(m)) => Ok(GridSpec::Explicit(FourierGrid::new(h, m, d)?)),
            (None, None, None) => Err(EfgpError::Parameter(
                "either --eps or --h/--m must be given".into(),
            )),
            _ => Err(EfgpError::Parameter(
                "--eps and --h/--m are mutually exclusive".into(),
            )),
        }
    }

    fn solver_tolerance(&self) -> f64 {
        self.eps.unwrap_or(1e-6)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to CSV data (columns x1..xd,y) and write a model file.
    Fit {
        /// Training data CSV.
        #[arg(long)]
        data: PathBuf,
        /// Kernel spec, e.g. "se:l=0.1" or "matern:nu=1.5,l=0.1";
        /// the length scale is in original data units.
        #[arg(long)]
        kernel: String,
        /// Observation noise standard deviation.
        #[arg(long)]
        sigma: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON fit report path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predict posterior means at CSV targets (columns x1..xd).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also compute the posterior variance per target (one linear solve
        /// per target; slow for many targets).
        #[arg(long)]
        variance: bool,
    },
    /// Run a benchmark config (JSON list of rows) and write CSV + JSON.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        /// JSON sidecar with residual histories.
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Sweep grid size m and report measured kernel errors and bounds.
    KernelError {
        #[arg(long)]
        kernel: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Grid spacing; defaults to the family rule at --alias-eps.
        #[arg(long)]
        h: Option<f64>,
        /// Aliasing target used to choose h when --h is absent.
        #[arg(long, default_value_t = 1e-8)]
        alias_eps: f64,
        /// Comma-separated list of m values.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        /// Probe lattice points per dimension.
        #[arg(long, default_value_t = 41)]
        lattice: usize,
        /// Random probe points.
        #[arg(long, default_value_t = 1000)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Condition numbers of the regression systems across data sizes.
    Conditioning {
        #[arg(long)]
        kernel: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 0.3)]
        sigma: f64,
        /// Comma-separated list of data sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Grid accuracy target.
        #[arg(long, default_value_t = 1e-13)]
        eps: f64,
        /// Compute the dense function-space condition number up to this N.
        #[arg(long, default_value_t = 2000)]
        fs_max_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct FitReport {
    n: usize,
    d: usize,
    kernel: String,
    lengthscale_original: f64,
    lengthscale_internal: f64,
    sigma: f64,
    h: f64,
    m: usize,
    n_modes: usize,
    iterations: usize,
    relative_residual: f64,
    t_precompute_s: f64,
    t_solve_s: f64,
    t_total_s: f64,
    box_offset: Vec<f64>,
    box_scale: f64,
}

fn exit_code_for(err: &EfgpError) -> u8 {
    match err {
        EfgpError::NonConvergence { .. } => 1,
        EfgpError::SizeGuard(_) => 3,
        _ => 2,
    }
}

fn run() -> Result<(), EfgpError> {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("EFGP_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| EfgpError::Parameter(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Fit {
            data,
            kernel,
            sigma,
            grid,
            out,
            report,
        } => cmd_fit(&data, &kernel, sigma, &grid, &out, report.as_deref()),
        Command::Predict {
            model,
            targets,
            out,
            variance,
        } => cmd_predict(&model, &targets, &out, variance),
        Command::Bench {
            config,
            out_csv,
            out_json,
        } => cmd_bench(&config, &out_csv, out_json.as_deref()),
        Command::KernelError {
            kernel,
            d,
            h,
            alias_eps,
            m,
            lattice,
            random,
            seed,
            out,
        } => cmd_kernel_error(&kernel, d, h, alias_eps, &m, lattice, random, seed, &out),
        Command::Conditioning {
            kernel,
            d,
            sigma,
            n,
            eps,
            fs_max_n,
            seed,
            out,
        } => cmd_conditioning(&kernel, d, sigma, &n, eps, fs_max_n, seed, &out),
    }
}

fn cmd_fit(
    data_path: &std::path::Path,
    kernel_spec: &str,
    sigma: f64,
    grid: &GridArgs,
    out: &std::path::Path,
    report_path: Option<&std::path::Path>,
) -> Result<(), EfgpError> {
    let raw = csvio::read_data(data_path)?;
    let kernel = Kernel::parse(kernel_spec)?;
    let box_map = BoxMap::fit(&raw.points, raw.d)?;
    let unit_points = box_map.forward(&raw.points);
    let internal_l = box_map.rescale_lengthscale(kernel.lengthscale());
    let internal_kernel = kernel.with_lengthscale(internal_l)?;
    eprintln!(
        "lengthscale {} (original units) -> {} (unit box, scale {})",
        kernel.lengthscale(),
        internal_l,
        box_map.scale
    );
    let dataset = Dataset::new(raw.d, unit_points, raw.y)?;
    let grid_spec = grid.to_spec(raw.d)?;
    let opts = SolveOptions::new(grid.solver_tolerance());
    let model = fit(&dataset, &internal_kernel, sigma, grid_spec, &opts)?;
    model_io::save(&model, &box_map, out)?;

    let report = FitReport {
        n: dataset.len(),
        d: raw.d,
        kernel: kernel.spec_string(),
        lengthscale_original: kernel.lengthscale(),
        lengthscale_internal: internal_l,
        sigma,
        h: model.grid().h(),
        m: model.grid().m(),
        n_modes: model.grid().n_modes(),
        iterations: model.stats().iterations,
        relative_residual: model.stats().relative_residual,
        t_precompute_s: model.stats().t_precompute,
        t_solve_s: model.stats().t_solve,
        t_total_s: model.stats().t_total,
        box_offset: box_map.offset.clone(),
        box_scale: box_map.scale,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| EfgpError::ModelFormat(format!("report encode: {e}")))?;
    match report_path {
        Some(p) => output::write_atomic(p, json.as_bytes())?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_predict(
    model_path: &std::path::Path,
    targets_path: &std::path::Path,
    out: &std::path::Path,
    variance: bool,
) -> Result<(), EfgpError> {
    let (model, box_map) = model_io::load(model_path)?;
    let d = model.grid().dim();
    let raw_targets = csvio::read_targets(targets_path, d)?;
    let unit_targets = box_map.forward(&raw_targets);
    let mu = model.predict_mean(&unit_targets)?;
    let var = if variance {
        if mu.len() > 1000 {
            eprintln!(
                "computing posterior variance at {} targets: one linear solve each",
                mu.len()
            );
        }
        let opts = SolveOptions::new(model.nufft_tol() * 10.0);
        let mut vs = Vec::with_capacity(mu.len());
        for t in unit_targets.chunks(d) {
            vs.push(model.posterior_variance(t, &opts)?);
        }
        Some(vs)
    } else {
        None
    };
    csvio::write_predictions(out, &raw_targets, d, &mu, var.as_deref())
}

fn cmd_bench(
    config: &std::path::Path,
    out_csv: &std::path::Path,
    out_json: Option<&std::path::Path>,
) -> Result<(), EfgpError> {
    let text = std::fs::read_to_string(config)?;
    let rows: Vec<BenchRow> = serde_json::from_str(&text)
        .map_err(|e| EfgpError::InvalidInput(format!("bench config: {e}")))?;
    let outcomes = run_benchmark(&rows);
    output::write_bench_csv(out_csv, &outcomes)?;
    if let Some(path) = out_json {
        let json = serde_json::to_string_pretty(&outcomes)
            .map_err(|e| EfgpError::ModelFormat(format!("encode: {e}")))?;
        output::write_atomic(path, json.as_bytes())?;
    }
    let failures: Vec<&BenchOutcome> = outcomes.iter().filter(|o| o.result.is_err()).collect();
    for f in &failures {
        if let Err(msg) = &f.result {
            eprintln!("row '{}' failed: {msg}", f.label);
        }
    }
    if !failures.is_empty() {
        return Err(EfgpError::NonConvergence {
            iterations: 0,
            residual: f64::NAN,
            target: f64::NAN,
            history: Vec::new(),
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_kernel_error(
    kernel_spec: &str,
    d: usize,
    h: Option<f64>,
    alias_eps: f64,
    ms: &[usize],
    lattice: usize,
    random: usize,
    seed: u64,
    out: &std::path::Path,
) -> Result<(), EfgpError> {
    let kernel = Kernel::parse(kernel_spec)?;
    let h = match h {
        Some(h) => h,
        None => choose_grid(&kernel, d, alias_eps)?.0.h(),
    };
    let probe = ProbeSet::new(d, lattice, random, seed)?;
    let mut rows = Vec::new();
    for &m in ms {
        let grid = FourierGrid::new(h, m, d)?;
        let sup = kernel_error_empirical(&kernel, &grid, &probe, ErrorNorm::Sup)?;
        let rms = kernel_error_empirical(&kernel, &grid, &probe, ErrorNorm::Rms)?;
        let alias = aliasing_bound(&kernel, d, h).unwrap_or(f64::NAN);
        let trunc = truncation_bound(&kernel, d, h, m).unwrap_or(f64::NAN);
        let heuristic = match (kernel.family(), kernel.smoothness()) {
            (KernelFamily::Matern, Some(nu)) => {
                matern_frobenius_heuristic(nu, kernel.lengthscale(), d, h, m)
            }
            _ => f64::NAN,
        };
        rows.push((m, h, sup, rms, alias, trunc, heuristic));
    }
    output::write_kernel_error_csv(out, &rows)
}

#[allow(clippy::too_many_arguments)]
fn cmd_conditioning(
    kernel_spec: &str,
    d: usize,
    sigma: f64,
    ns: &[usize],
    eps: f64,
    fs_max_n: usize,
    seed: u64,
    out: &std::path::Path,
) -> Result<(), EfgpError> {
    let kernel = Kernel::parse(kernel_spec)?;
    let (grid, _) = choose_grid(&kernel, d, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &n in ns {
        let points: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
        let include_fs = n <= fs_max_n;
        let report = condition_report(&points, d, &kernel, sigma, &grid, include_fs, None)?;
        rows.push((
            n,
            sigma,
            report.kappa_fs,
            report.kappa_ws,
            report.bound,
            report.bound / report.kappa_ws,
        ));
    }
    output::write_conditioning_csv(out, &rows)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
