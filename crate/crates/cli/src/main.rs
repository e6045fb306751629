use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hullsparse::density::{solve_density, DensityDictionary, DensityFamily, DensityProblem};
use hullsparse::dictionary::{read_design_csv, GramMatrix, MeasureKind, ValueRange};
use hullsparse::experiments::{
    emit_plots, read_records_csv, run_sweep, verify_rates, write_records_csv, RateMode, RateParams, Scenario,
    ScenarioConfig,
};
use hullsparse::geometry::{alignment_coefficient, diagnose, write_geometry_csv, Alignment, TangentConeSpec};
use hullsparse::{solve, ErmProblem, LossModel, SolveRecord, SolveResult, SolverOptions};

#[derive(Parser)]
#[command(name = "hullsparse", version, about = "Entropy-penalized aggregation over dictionary convex hulls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Output file or directory; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed of a sweep configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Target Frank–Wolfe gap.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one penalized risk minimization problem from a design CSV.
    Solve(SolveArgs),
    /// Estimate a mixture density from samples.
    Density(DensityArgs),
    /// Geometry diagnostics from a JSON file with `gram`, `weights` and optionally `w`.
    Align(AlignArgs),
    /// Run a scenario sweep and write one CSV row per cell.
    Sweep(SweepArgs),
    /// Fit rates on sweep output and print a JSON report.
    Verify(VerifyArgs),
    /// Write Vega-Lite specifications for sweep output.
    Plots(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Quadratic,
    Logit,
    Exponential,
}

#[derive(Args)]
struct SolveArgs {
    /// CSV with columns x1..xk, weight, y, h1..hN.
    #[arg(long)]
    design: PathBuf,
    #[arg(long, value_enum, default_value = "quadratic")]
    loss: LossArg,
    #[arg(long)]
    epsilon: f64,
    /// Treat the weights as a known population measure rather than a sample.
    #[arg(long)]
    known_grid: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityFamilyArg {
    Bumps,
    Beta,
}

#[derive(Args)]
struct DensityArgs {
    /// One sample per line (a header line is skipped if present).
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, value_enum, default_value = "bumps")]
    family: DensityFamilyArg,
    #[arg(long, default_value_t = 0.05)]
    width: f64,
    #[arg(long)]
    atoms: usize,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = hullsparse::density::DEFAULT_GRID)]
    grid: usize,
}

#[derive(Args)]
struct AlignArgs {
    /// JSON: {"gram": [[…]], "weights": […], "w": […]}.
    input: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario TOML file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Oracle,
    Subspace,
    Approximation,
    Density,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Scenario the CSV came from; supplies d, A and the subspace terms.
    #[arg(long)]
    config: Option<PathBuf>,
    /// card(J) when no configuration is given.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
}

#[derive(Deserialize)]
struct AlignInput {
    gram: Vec<Vec<f64>>,
    weights: Vec<f64>,
    #[serde(default)]
    w: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct SolveOutput {
    #[serde(flatten)]
    record: SolveRecord,
    converged: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring thread pool")?;
    }
    let opts = SolverOptions { tol: cli.global.tol.unwrap_or(1e-8), ..SolverOptions::default() };
    opts.validate()?;
    let out = cli.global.out.as_deref();
    match cli.command {
        Command::Solve(args) => cmd_solve(&args, &opts, out),
        Command::Density(args) => cmd_density(&args, &opts, out),
        Command::Align(args) => cmd_align(&args, out),
        Command::Sweep(args) => cmd_sweep(&args, &cli.global),
        Command::Verify(args) => cmd_verify(&args, out),
        Command::Plots(args) => cmd_plots(&args, out),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(bytes).context("writing to stdout"),
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    emit(out, (serde_json::to_string_pretty(value)? + "\n").as_bytes())
}

fn solve_output(result: hullsparse::Result<SolveResult>) -> Result<SolveOutput> {
    match result {
        Ok(r) => Ok(SolveOutput { record: r.record(), converged: true }),
        Err(hullsparse::Error::MaxItersExceeded(r)) => {
            eprintln!("warning: stopped at gap {:e} above the tolerance", r.fw_gap);
            Ok(SolveOutput { record: r.record(), converged: false })
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_solve(args: &SolveArgs, opts: &SolverOptions, out: Option<&Path>) -> Result<()> {
    let kind = if args.known_grid { MeasureKind::KnownGrid } else { MeasureKind::Empirical };
    let file = fs::File::open(&args.design).with_context(|| format!("opening {}", args.design.display()))?;
    let parsed = read_design_csv(file, kind, ValueRange::Signed)?;
    let Some(labels) = parsed.labels else { bail!("design file has no `y` column") };
    let loss = match args.loss {
        LossArg::Quadratic => {
            let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            LossModel::quadratic(lo.min(-1.0), hi.max(1.0))
        }
        LossArg::Logit => LossModel::logit(),
        LossArg::Exponential => LossModel::exponential(1.0),
    };
    let problem = ErmProblem::new(parsed.design, labels, loss, args.epsilon)?;
    emit_json(out, &solve_output(solve(&problem, opts))?)
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut samples = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => samples.push(v),
            Err(_) if k == 0 => {}
            Err(_) => bail!("line {}: `{field}` is not a number", k + 1),
        }
    }
    Ok(samples)
}

fn cmd_density(args: &DensityArgs, opts: &SolverOptions, out: Option<&Path>) -> Result<()> {
    let family = match args.family {
        DensityFamilyArg::Bumps => DensityFamily::Bumps { width: args.width },
        DensityFamilyArg::Beta => DensityFamily::Beta,
    };
    let dict = DensityDictionary::new(family, args.atoms, args.grid)?;
    let samples = read_samples(&args.samples)?;
    let problem = DensityProblem::from_samples(&dict, &samples, args.epsilon)?;
    emit_json(out, &solve_output(solve_density(&problem, opts))?)
}

fn cmd_align(args: &AlignArgs, out: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let input: AlignInput = serde_json::from_str(&text)?;
    let n = input.gram.len();
    if input.gram.iter().any(|row| row.len() != n) {
        bail!("gram must be a square matrix");
    }
    let h = GramMatrix::new(nalgebra::DMatrix::from_fn(n, n, |i, j| input.gram[i][j]))?;
    let spec = TangentConeSpec::new(input.weights)?;
    match input.w {
        Some(w) => {
            let a: Alignment = alignment_coefficient(&h, &spec, &w)?;
            emit_json(out, &a)
        }
        None => {
            let mut buf = Vec::new();
            write_geometry_csv(&mut buf, &[diagnose(&h, &spec)?])?;
            emit(out, &buf)
        }
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ScenarioConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_sweep(args: &SweepArgs, global: &Global) -> Result<()> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(tol) = global.tol {
        config.tol = tol;
    }
    let records = run_sweep(&config)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows did not finish cleanly; see the status column", records.len());
    }
    let mut buf = Vec::new();
    write_records_csv(&mut buf, &records)?;
    emit(global.out.as_deref(), &buf)
}

fn rate_params(config: Option<&Path>, d: Option<usize>, a: f64, mode: Option<RateMode>) -> Result<RateParams> {
    match config {
        Some(path) => {
            let config = load_config(path)?;
            let mut params = RateParams::new(d.unwrap_or(config.target.support.len()), config.confidence());
            if mode == Some(RateMode::Subspace) {
                let scenario = Scenario::new(&config)?;
                params.subspace = Some(scenario.population().subspace_terms(&config.support())?);
            }
            Ok(params)
        }
        None => {
            if mode == Some(RateMode::Subspace) {
                bail!("subspace mode needs --config to build the subspace terms");
            }
            let Some(d) = d else { bail!("pass --config or --d") };
            Ok(RateParams::new(d, a))
        }
    }
}

fn cmd_verify(args: &VerifyArgs, out: Option<&Path>) -> Result<()> {
    let mode = match args.mode {
        ModeArg::Oracle => RateMode::Oracle,
        ModeArg::Subspace => RateMode::Subspace,
        ModeArg::Approximation => RateMode::Approximation,
        ModeArg::Density => RateMode::Density,
    };
    let params = if mode == RateMode::Approximation {
        RateParams::new(args.d.unwrap_or(1), args.a)
    } else {
        rate_params(args.config.as_deref(), args.d, args.a, Some(mode))?
    };
    let file = fs::File::open(&args.csv).with_context(|| format!("opening {}", args.csv.display()))?;
    let records = read_records_csv(file)?;
    let report = verify_rates(&records, mode, &params)?;
    emit_json(out, &report)
}

fn cmd_plots(args: &PlotArgs, out: Option<&Path>) -> Result<()> {
    let params = rate_params(args.config.as_deref(), args.d, args.a, None)?;
    let dir = out.unwrap_or(Path::new("."));
    for path in emit_plots(&args.csv, dir, params.d, params.a)? {
        println!("{}", path.display());
    }
    Ok(())
}
