//! Experiment drivers, uncertainty sampling, CSV output and the CLI.
//!
//! Every trial draws from its own random streams keyed by `(seed, trial)`,
//! trials run on a rayon pool, and results are collected in trial order
//! before anything is written. Output is therefore byte-identical for any
//! thread count.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{frob2, CMatrix};
use crate::random::{complex_gaussian_matrix, stream_rng, Role};
use crate::robust_mse::{exact_mse, node_power, relay_power, sum_worst_case_mse};
use crate::socp::{alternate_optimize, finalize_design};
use crate::system::{generate_channels, ChannelSet, DesignSolution, Node, SystemConfig};

/// Uncertainty levels compared by the power sweep.
pub const SWEEP_SIGMA2_G: [f64; 3] = [0.0, 0.01, 0.05];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Uniform in the ball.
    Interior,
    /// Uniform on the sphere.
    Boundary,
}

/// Draws `ΔG` with `‖ΔG‖² = radius2` (boundary) or uniformly inside the ball
/// `‖ΔG‖² ≤ radius2` (interior).
pub fn sample_uncertainty<R: Rng + ?Sized>(radius2: f64, rows: usize, cols: usize, mode: SampleMode, rng: &mut R) -> CMatrix {
    if radius2 <= 0.0 || rows == 0 || cols == 0 {
        return CMatrix::zeros(rows, cols);
    }
    let mut m = complex_gaussian_matrix(rng, rows, cols, 1.0);
    while frob2(&m) == 0.0 {
        m = complex_gaussian_matrix(rng, rows, cols, 1.0);
    }
    let mut radius = radius2.sqrt();
    if mode == SampleMode::Interior {
        // 2·rows·cols real dimensions.
        let u: f64 = rng.random();
        radius *= u.powf(1.0 / (2 * rows * cols) as f64);
    }
    let scale = radius / frob2(&m).sqrt();
    m.scale(scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Convergence,
    PowerSweep,
    UncertaintySweep,
    BoundAudit,
}

impl ExperimentKind {
    pub fn default_sweep(self) -> Vec<f64> {
        match self {
            ExperimentKind::Convergence => vec![5.0, 10.0, 20.0],
            ExperimentKind::PowerSweep => vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            ExperimentKind::UncertaintySweep => vec![0.0, 0.01, 0.02, 0.05, 0.1],
            ExperimentKind::BoundAudit => Vec::new(),
        }
    }

    fn default_output(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence.csv",
            ExperimentKind::PowerSweep => "power_sweep.csv",
            ExperimentKind::UncertaintySweep => "uncertainty_sweep.csv",
            ExperimentKind::BoundAudit => "bound_audit.csv",
        }
    }
}

/// One experiment run.
///
/// `sweep` holds relay budgets for convergence runs, source budgets `P_t`
/// for power sweeps and `σ²_g` for uncertainty sweeps; audits ignore it.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub realizations: usize,
    pub sweep: Vec<f64>,
    pub base: SystemConfig,
    pub output: PathBuf,
    /// `ΔG` pairs drawn per audited trial, half on the sphere and half inside.
    pub audit_samples: usize,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, base: SystemConfig) -> Self {
        Self {
            kind,
            realizations: 100,
            sweep: kind.default_sweep(),
            base,
            output: PathBuf::from(kind.default_output()),
            audit_samples: 10_000,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.realizations == 0 {
            return bad("realizations must be >= 1".into());
        }
        if self.kind != ExperimentKind::BoundAudit && self.sweep.is_empty() {
            return bad("sweep must contain at least one value".into());
        }
        if self.sweep.iter().any(|v| !v.is_finite()) {
            return bad("sweep values must be finite".into());
        }
        if self.sweep.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sweep values must be strictly increasing".into());
        }
        let floor = if self.kind == ExperimentKind::UncertaintySweep { 0.0 } else { f64::MIN_POSITIVE };
        if self.sweep.iter().any(|&v| v < floor) {
            return bad(format!("sweep values must be >= {floor}"));
        }
        if self.kind == ExperimentKind::BoundAudit && self.audit_samples == 0 {
            return bad("audit_samples must be >= 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        Ok(())
    }

    fn run_parallel<T: Send>(&self, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| (0..self.realizations as u64).into_par_iter().map(&f).collect())
    }
}

/// One row of experiment output before aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub trial: u64,
    /// Outer iteration for convergence runs, sweep index otherwise.
    pub iteration: usize,
    /// Sweep value of this record (`P_{r,t}`, `P_t` or `σ²_g`).
    pub point: f64,
    pub objective: f64,
    pub sum_mse: f64,
    pub relay_power: f64,
    pub node_powers: [f64; 2],
    pub wall_time: f64,
}

impl TraceRecord {
    fn new(trial: u64, iteration: usize, point: f64, config: &SystemConfig, channels: &ChannelSet, solution: &DesignSolution) -> Self {
        Self {
            trial,
            iteration,
            point,
            objective: f64::NAN,
            sum_mse: sum_worst_case_mse(config, channels, solution),
            relay_power: relay_power(config, channels, solution),
            node_powers: [node_power(config, solution, Node::One), node_power(config, solution, Node::Two)],
            wall_time: 0.0,
        }
    }

    /// Largest relative budget excess across the three transmitters.
    pub fn power_excess(&self, config: &SystemConfig) -> f64 {
        [
            (self.relay_power, config.p_rt),
            (self.node_powers[0], config.p_1t),
            (self.node_powers[1], config.p_2t),
        ]
        .iter()
        .map(|&(p, budget)| (p - budget) / budget)
        .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Aggregate of a sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub sigma2_g: f64,
    pub p_t: f64,
    pub mean_sum_mse: f64,
    pub std_sum_mse: f64,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub trial: u64,
    pub bound: f64,
    pub max_sampled: f64,
    pub slack: f64,
}

/// Per-iteration trace of the alternating optimizer for every trial and
/// relay budget. Rows: `trial, p_rt, iteration, objective, sum_mse`.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<Vec<TraceRecord>> {
    spec.validate()?;
    let per_trial = spec.run_parallel(|trial| {
        let channels = generate_channels(&spec.base, &mut stream_rng(spec.base.rng_seed, trial, Role::Channels));
        let mut rows = Vec::new();
        for &p_rt in &spec.sweep {
            let config = SystemConfig { p_rt, ..spec.base.clone() };
            let start = Instant::now();
            let out = alternate_optimize(&config, &channels)?;
            let elapsed = start.elapsed().as_secs_f64();
            for (k, alloc) in out.history.iter().enumerate() {
                let solution = finalize_design(&config, &channels, &out.spectra, alloc)?;
                let mut rec = TraceRecord::new(trial, k + 1, p_rt, &config, &channels, &solution);
                rec.objective = out.state.objective_trace[k];
                rec.wall_time = elapsed;
                rows.push(rec);
            }
        }
        Ok(rows)
    })?;
    let rows: Vec<TraceRecord> = per_trial.into_iter().flatten().collect();
    write_csv(&spec.output, &["trial", "p_rt", "iteration", "objective", "sum_mse"], rows.iter().map(|r| {
        vec![r.trial.to_string(), fmt(r.point), r.iteration.to_string(), fmt(r.objective), fmt(r.sum_mse)]
    }))?;
    Ok(rows)
}

/// Mean worst-case sum MSE over `P_t = P_{1,t} = P_{2,t}` for each level in
/// [`SWEEP_SIGMA2_G`]. Rows: `sigma2_g, p_t, mean_sum_mse, std_sum_mse, realizations`.
pub fn run_power_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let mut grid = Vec::new();
    for &sg in &SWEEP_SIGMA2_G {
        for &pt in &spec.sweep {
            grid.push(SystemConfig {
                sigma2_g1: sg,
                sigma2_g2: sg,
                p_1t: pt,
                p_2t: pt,
                ..spec.base.clone()
            });
        }
    }
    sweep(spec, &grid)
}

/// Mean worst-case sum MSE over `σ²_g = σ²_{g1} = σ²_{g2}` at the base budgets.
pub fn run_uncertainty_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let grid: Vec<SystemConfig> = spec
        .sweep
        .iter()
        .map(|&sg| SystemConfig {
            sigma2_g1: sg,
            sigma2_g2: sg,
            ..spec.base.clone()
        })
        .collect();
    sweep(spec, &grid)
}

fn sweep(spec: &ExperimentSpec, grid: &[SystemConfig]) -> Result<Vec<SweepPoint>> {
    // Channels depend only on the trial, so every grid point sees the same draws.
    let per_trial = spec.run_parallel(|trial| {
        let channels = generate_channels(&spec.base, &mut stream_rng(spec.base.rng_seed, trial, Role::Channels));
        grid.iter()
            .enumerate()
            .map(|(k, config)| {
                let out = alternate_optimize(config, &channels)?;
                let mut rec = TraceRecord::new(trial, k, config.p_1t, config, &channels, &out.solution);
                rec.objective = out.state.objective_trace.last().copied().unwrap_or(out.initial_objective);
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let points: Vec<SweepPoint> = grid
        .iter()
        .enumerate()
        .map(|(k, config)| {
            let values: Vec<f64> = per_trial.iter().map(|rows| rows[k].sum_mse).collect();
            let (mean, std) = mean_std(&values);
            SweepPoint {
                sigma2_g: config.sigma2_g1,
                p_t: config.p_1t,
                mean_sum_mse: mean,
                std_sum_mse: std,
                realizations: values.len(),
            }
        })
        .collect();
    write_csv(
        &spec.output,
        &["sigma2_g", "p_t", "mean_sum_mse", "std_sum_mse", "realizations"],
        points.iter().map(|p| {
            vec![fmt(p.sigma2_g), fmt(p.p_t), fmt(p.mean_sum_mse), fmt(p.std_sum_mse), p.realizations.to_string()]
        }),
    )?;
    Ok(points)
}

/// Optimizes each trial and compares the worst-case bound against the
/// largest exact sum MSE over sampled `ΔG` pairs.
/// Rows: `trial, bound, max_sampled, slack`.
pub fn run_bound_audit(spec: &ExperimentSpec) -> Result<Vec<AuditRow>> {
    spec.validate()?;
    let config = &spec.base;
    let rows = spec.run_parallel(|trial| {
        let channels = generate_channels(config, &mut stream_rng(config.rng_seed, trial, Role::Channels));
        let out = alternate_optimize(config, &channels)?;
        let mut rng = stream_rng(config.rng_seed, trial, Role::Audit);
        let max_sampled = audit_max_exact(config, &channels, &out.solution, spec.audit_samples, &mut rng);
        let bound = out.sum_mse;
        Ok(AuditRow {
            trial,
            bound,
            max_sampled,
            slack: bound - max_sampled,
        })
    })?;
    write_csv(&spec.output, &["trial", "bound", "max_sampled", "slack"], rows.iter().map(|r| {
        vec![r.trial.to_string(), fmt(r.bound), fmt(r.max_sampled), fmt(r.slack)]
    }))?;
    Ok(rows)
}

/// Largest exact sum MSE over `samples` error pairs, alternating boundary
/// and interior draws.
pub fn audit_max_exact<R: Rng + ?Sized>(
    config: &SystemConfig,
    channels: &ChannelSet,
    solution: &DesignSolution,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let (rows, cols) = channels.g1_hat.shape();
    (0..samples)
        .map(|k| {
            let mode = if k % 2 == 0 { SampleMode::Boundary } else { SampleMode::Interior };
            let dg1 = sample_uncertainty(config.sigma2_g1, rows, cols, mode, rng);
            let dg2 = sample_uncertainty(config.sigma2_g2, rows, cols, mode, rng);
            let actual = channels.with_errors(dg1, dg2);
            exact_mse(config, &actual, solution, Node::One) + exact_mse(config, &actual, solution, Node::Two)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// 17 significant digits.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a flat TOML file whose keys are [`SystemConfig`] fields; missing
/// keys keep their defaults.
pub fn load_config(path: &Path) -> Result<SystemConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config: SystemConfig = toml::from_str(&text).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Parser)]
#[command(name = "thp-sim", about = "Robust THP design for MIMO two-way relaying", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML file with SystemConfig keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides rng_seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    realizations: Option<usize>,
    /// Comma-separated sweep values
    #[arg(long, global = true, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    /// Worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// ΔG pairs per audited trial
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-iteration objective and sum MSE of the alternating optimizer
    Convergence,
    /// Mean sum MSE versus source power budget for several uncertainty levels
    PowerSweep,
    /// Mean sum MSE versus uncertainty radius
    UncertaintySweep,
    /// Worst-case bound against sampled channel errors
    BoundAudit,
    /// Designs one instance and prints a summary
    Demo,
}

/// Entry point of the `thp-sim` binary. Returns the process exit code:
/// 0 on success, 1 for usage or configuration errors, 2 for runtime failures.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let spec = match build_spec(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match execute(&cli.command, &spec) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn build_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let args = &cli.common;
    let mut base = match &args.config {
        Some(path) => load_config(path)?,
        None => SystemConfig::default(),
    };
    if let Some(seed) = args.seed {
        base.rng_seed = seed;
    }
    let kind = match cli.command {
        Command::Convergence => ExperimentKind::Convergence,
        Command::PowerSweep => ExperimentKind::PowerSweep,
        Command::UncertaintySweep => ExperimentKind::UncertaintySweep,
        Command::BoundAudit | Command::Demo => ExperimentKind::BoundAudit,
    };
    let mut spec = ExperimentSpec::new(kind, base);
    if let Some(n) = args.realizations {
        spec.realizations = n;
    }
    if let Some(s) = &args.sweep {
        spec.sweep = s.clone();
    }
    if let Some(p) = &args.out {
        spec.output = p.clone();
    }
    if let Some(n) = args.samples {
        spec.audit_samples = n;
    }
    spec.threads = args.threads;
    spec.validate()?;
    Ok(spec)
}

fn execute(command: &Command, spec: &ExperimentSpec) -> Result<()> {
    match command {
        Command::Convergence => {
            let rows = run_convergence(spec)?;
            let trials = spec.realizations * spec.sweep.len();
            println!("{} rows, mean {:.2} iterations, wrote {}", rows.len(), rows.len() as f64 / trials as f64, spec.output.display());
        }
        Command::PowerSweep | Command::UncertaintySweep => {
            let points = if matches!(command, Command::PowerSweep) {
                run_power_sweep(spec)?
            } else {
                run_uncertainty_sweep(spec)?
            };
            for p in &points {
                println!("sigma2_g={:<6} p_t={:<6} mean_sum_mse={:.6} std={:.6}", p.sigma2_g, p.p_t, p.mean_sum_mse, p.std_sum_mse);
            }
            println!("wrote {}", spec.output.display());
        }
        Command::BoundAudit => {
            let rows = run_bound_audit(spec)?;
            let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
            println!("{} trials, min slack {min_slack:.3e}, wrote {}", rows.len(), spec.output.display());
        }
        Command::Demo => demo(&spec.base)?,
    }
    Ok(())
}

fn demo(config: &SystemConfig) -> Result<()> {
    let channels = generate_channels(config, &mut stream_rng(config.rng_seed, 0, Role::Channels));
    let out = alternate_optimize(config, &channels)?;
    let s = &out.solution;
    println!("{}x{} antennas, {}-QAM, sigma2_g = ({}, {})", config.n_t, config.n_r, config.qam_m, config.sigma2_g1, config.sigma2_g2);
    println!("outer iterations:      {}", out.state.iteration);
    println!("selected iteration:    {}", out.selected_iteration);
    println!("sum worst-case MSE:    {:.6}", out.sum_mse);
    println!("initial sum MSE:       {:.6}", sum_worst_case_mse(config, &channels, &finalize_design(config, &channels, &out.spectra, &out.initial_allocation)?));
    println!("relay power:           {:.6} / {}", relay_power(config, &channels, s), config.p_rt);
    println!("node 1 power:          {:.6} / {}", node_power(config, s, Node::One), config.p_1t);
    println!("node 2 power:          {:.6} / {}", node_power(config, s, Node::Two), config.p_2t);
    if out.degraded {
        println!("warning: optimizer stopped after repeated solver failures");
    }
    Ok(())
}
