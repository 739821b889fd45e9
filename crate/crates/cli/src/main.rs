//! Command-line front end: analytic evaluation, Monte Carlo simulation,
//! analytic/empirical comparison, and parameter sweeps.
//!
//! Exit codes: 0 success, 2 input error, 3 numeric failure.

mod config_io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use femtonet::analysis::AnalyticEngine;
use femtonet::config::NetworkConfig;
use femtonet::curve::{log_grid, SinrCurve};
use femtonet::sim::{run_both, Boundary, SimSpec, Tier};
use femtonet::AnalyticError;

use config_io::ConfigFile;

#[derive(Parser)]
#[command(
    name = "femtonet",
    about = "Downlink SINR distributions and mean rates of two-tier hybrid-access networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytic SINR curves and class rates.
    Analyze(AnalyzeArgs),
    /// Run the Monte Carlo simulator and emit empirical curves and rates.
    Simulate(SimulateArgs),
    /// Compare an analytic curve file against an empirical one.
    Compare(CompareArgs),
    /// Sweep M_s or lambda_out and tabulate the class rates.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; defaults apply for absent fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. --set m_s=5 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// FAP deployment; overrides the config file.
    #[arg(long, value_parser = ["ppp", "cluster"])]
    deployment: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<NetworkConfig> {
        let mut file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        for kv in &self.set {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
            file.set(key.trim(), value.trim())?;
        }
        file.resolve(self.deployment.as_deref())
    }
}

#[derive(Args)]
struct GridArgs {
    /// Lowest SINR threshold (linear).
    #[arg(long, default_value_t = 1e-2)]
    t_min: f64,
    /// Highest SINR threshold (linear).
    #[arg(long, default_value_t = 1e2)]
    t_max: f64,
    /// Number of log-spaced grid points.
    #[arg(long, default_value_t = 60)]
    t_points: usize,
}

impl GridArgs {
    fn build(&self) -> Result<Vec<f64>> {
        if !(self.t_min > 0.0 && self.t_points >= 1) {
            bail!(
                "invalid threshold grid: t_min {}, t_max {}, t_points {}",
                self.t_min,
                self.t_max,
                self.t_points
            );
        }
        if self.t_points == 1 {
            return Ok(vec![self.t_min]);
        }
        if !(self.t_max > self.t_min) {
            bail!("t_max must exceed t_min for multi-point grids");
        }
        Ok(log_grid(self.t_min, self.t_max, self.t_points))
    }
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 10_000)]
    snapshots: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Half-width L of the square simulation window [-L, L]², m.
    #[arg(long, default_value_t = 2000.0)]
    window_half_width: f64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Torus)]
    boundary: BoundaryArg,
    /// Guard margin in metres (guard boundary only).
    #[arg(long, default_value_t = 500.0)]
    guard_margin: f64,
    /// Measure femto interferer distances from the UE's true offset.
    #[arg(long, default_value_t = false)]
    full_geometry: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    Torus,
    Guard,
}

impl SimArgs {
    fn build(&self) -> SimSpec {
        SimSpec {
            window_half_width: self.window_half_width,
            snapshots: self.snapshots,
            seed: self.seed,
            tagged_tier: Tier::Macro,
            boundary: match self.boundary {
                BoundaryArg::Torus => Boundary::Torus,
                BoundaryArg::Guard => Boundary::GuardZone {
                    margin: self.guard_margin,
                },
            },
            full_geometry: self.full_geometry,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Output stem: writes <out>.csv and <out>.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    sim: SimArgs,
    /// Output stem: writes <out>.csv and <out>.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// CSV with the analytic curves (T,Z_m,Z_f).
    analytic: PathBuf,
    /// CSV with the empirical curves (same grid).
    empirical: PathBuf,
    /// Sup-norm distance at which a curve pair still passes.
    #[arg(long, default_value_t = 0.02)]
    threshold: f64,
    /// Optional JSON report path (stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepVariable {
    Ms,
    LambdaOut,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Analytic,
    Simulate,
    Both,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, value_enum)]
    variable: SweepVariable,
    /// Comma-separated ascending sweep values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Engine::Analytic)]
    engine: Engine,
    /// Output stem: writes <out>.csv (plus <out>_empirical.csv for
    /// --engine both).
    #[arg(long)]
    out: PathBuf,
}

/// Error class driving the process exit code.
enum CliError {
    Input(anyhow::Error),
    Numeric(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
    fn message(&self) -> &anyhow::Error {
        match self {
            CliError::Input(e) | CliError::Numeric(e) => e,
        }
    }
}

fn input_err(e: anyhow::Error) -> CliError {
    CliError::Input(e)
}

fn analytic_err(e: AnalyticError) -> CliError {
    match e {
        AnalyticError::Numeric(_) => CliError::Numeric(anyhow!(e)),
        other => CliError::Input(anyhow!(other)),
    }
}

fn sim_err(e: femtonet::sim::SimError) -> CliError {
    match e {
        femtonet::sim::SimError::Misuse(_) => CliError::Input(anyhow!(e)),
        femtonet::sim::SimError::Starved(_) => CliError::Numeric(anyhow!(e)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.message());
            ExitCode::from(e.code())
        }
    }
}

/// Write a file atomically: temp file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

fn curves_csv(grid: &[f64], zm: &SinrCurve, zf: &SinrCurve) -> String {
    let mut out = String::from("T,Z_m,Z_f\n");
    for (i, t) in grid.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", t, zm.cdf[i], zf.cdf[i]));
    }
    out
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve().map_err(input_err)?;
    let grid = args.grid.build().map_err(input_err)?;
    let engine = AnalyticEngine::new(cfg).map_err(analytic_err)?;
    let (zm, zf) = engine.curves(&grid).map_err(analytic_err)?;
    let report = engine.rates().map_err(analytic_err)?;

    let csv_path = args.out.with_extension("csv");
    let json_path = args.out.with_extension("json");
    write_atomic(&csv_path, &curves_csv(&grid, &zm, &zf)).map_err(input_err)?;
    let json = serde_json::to_string_pretty(&report)
        .context("serializing rate report")
        .map_err(input_err)?;
    write_atomic(&json_path, &json).map_err(input_err)?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve().map_err(input_err)?;
    let grid = args.grid.build().map_err(input_err)?;
    let spec = args.sim.build();
    let out = run_both(&cfg, &spec, &grid).map_err(sim_err)?;

    let csv_path = args.out.with_extension("csv");
    let json_path = args.out.with_extension("json");
    write_atomic(&csv_path, &curves_csv(&grid, &out.macro_curve, &out.femto_curve))
        .map_err(input_err)?;
    let json = serde_json::json!({
        "rates": out.report,
        "macro_diagnostics": out.macro_diagnostics,
        "femto_diagnostics": out.femto_diagnostics,
    });
    write_atomic(
        &json_path,
        &serde_json::to_string_pretty(&json)
            .context("serializing diagnostics")
            .map_err(input_err)?,
    )
    .map_err(input_err)?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

struct CurveFile {
    t: Vec<f64>,
    zm: Vec<f64>,
    zf: Vec<f64>,
}

fn read_curve_csv(path: &Path) -> Result<CurveFile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != "T,Z_m,Z_f" {
        bail!(
            "{}: expected header 'T,Z_m,Z_f', got {header:?}",
            path.display()
        );
    }
    let mut out = CurveFile {
        t: vec![],
        zm: vec![],
        zf: vec![],
    };
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            bail!(
                "{}: line {} has {} columns",
                path.display(),
                lineno + 2,
                cols.len()
            );
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("{}: bad number {s:?}", path.display()))
        };
        out.t.push(parse(cols[0])?);
        out.zm.push(parse(cols[1])?);
        out.zf.push(parse(cols[2])?);
    }
    if out.t.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(out)
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let a = read_curve_csv(&args.analytic).map_err(input_err)?;
    let b = read_curve_csv(&args.empirical).map_err(input_err)?;
    let grids_match = a.t.len() == b.t.len()
        && a.t
            .iter()
            .zip(&b.t)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0));
    if !grids_match {
        return Err(input_err(anyhow!(
            "threshold grids differ between {} and {}",
            args.analytic.display(),
            args.empirical.display()
        )));
    }
    let dist = |x: &[f64], y: &[f64]| -> (f64, f64) {
        let sup = x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let mean = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64;
        (sup, mean)
    };
    let (sup_m, l1_m) = dist(&a.zm, &b.zm);
    let (sup_f, l1_f) = dist(&a.zf, &b.zf);
    let pass = sup_m <= args.threshold && sup_f <= args.threshold;
    let report = serde_json::json!({
        "threshold": args.threshold,
        "macro": {"sup": sup_m, "mean_abs": l1_m},
        "femto": {"sup": sup_f, "mean_abs": l1_f},
        "pass": pass,
    });
    let text = serde_json::to_string_pretty(&report)
        .context("serializing comparison")
        .map_err(input_err)?;
    match &args.out {
        Some(path) => write_atomic(path, &text).map_err(input_err)?,
        None => println!("{text}"),
    }
    eprintln!(
        "macro sup {sup_m:.5}, femto sup {sup_f:.5}, threshold {}: {}",
        args.threshold,
        if pass { "pass" } else { "fail" }
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let base = args.config.resolve().map_err(input_err)?;
    if args.values.is_empty() {
        return Err(input_err(anyhow!("sweep needs at least one value")));
    }
    if !args.values.windows(2).all(|w| w[0] < w[1]) {
        return Err(input_err(anyhow!("sweep values must be strictly ascending")));
    }
    if args.variable == SweepVariable::Ms {
        for &v in &args.values {
            if v < 0.0 || v > base.m as f64 || v.fract() != 0.0 {
                return Err(input_err(anyhow!(
                    "M_s sweep values must be integers in 0..={}, got {v}",
                    base.m
                )));
            }
        }
    } else {
        for &v in &args.values {
            if v < 0.0 {
                return Err(input_err(anyhow!("lambda_out must be nonnegative, got {v}")));
            }
        }
    }

    let configure = |value: f64| -> NetworkConfig {
        let mut cfg = base.clone();
        match args.variable {
            SweepVariable::Ms => cfg.m_s = value as u32,
            SweepVariable::LambdaOut => cfg.lambda_out = value,
        }
        cfg
    };

    let header = "var,tau_n,tau_s,tau_m,tau_f\n";
    let run_analytic = args.engine != Engine::Simulate;
    let run_empirical = args.engine != Engine::Analytic;

    if run_analytic {
        let mut csv = String::from(header);
        for &value in &args.values {
            let engine = AnalyticEngine::new(configure(value)).map_err(analytic_err)?;
            let r = engine.rates().map_err(analytic_err)?;
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                value, r.tau_n, r.tau_s, r.tau_m, r.tau_f
            ));
        }
        let path = if run_empirical {
            stem_with_suffix(&args.out, "_analytic")
        } else {
            args.out.with_extension("csv")
        };
        write_atomic(&path, &csv).map_err(input_err)?;
        println!("wrote {}", path.display());
    }
    if run_empirical {
        let spec = args.sim.build();
        let grid = log_grid(1e-2, 1e2, 8); // rates only; a coarse grid suffices
        let mut csv = String::from(header);
        for &value in &args.values {
            let out = run_both(&configure(value), &spec, &grid).map_err(sim_err)?;
            let r = out.report;
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                value, r.tau_n, r.tau_s, r.tau_m, r.tau_f
            ));
        }
        let path = if run_analytic {
            stem_with_suffix(&args.out, "_empirical")
        } else {
            args.out.with_extension("csv")
        };
        write_atomic(&path, &csv).map_err(input_err)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn stem_with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(suffix);
    stem.with_file_name(name).with_extension("csv")
}
