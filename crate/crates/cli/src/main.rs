//! Command-line front end: `simulate`, `analyze`, `freq`, and `sweep` over a
//! shared TOML configuration.
//!
//! Exit codes are a stable contract: 0 success (or certified), 1 analysis
//! failed, 2 invalid input, 3 divergence, 4 I/O failure. Log verbosity follows
//! `RUST_LOG` (warnings by default).

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use platoon::scenario::{metrics, run};
use platoon::stability::{analyze, frequency_response, sweep_gain_region, SweepParam, SweepSpec};
use platoon::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Bad config, override, or argument (exit 2).
    Invalid(String),
    /// The simulation blew up (exit 3).
    Divergence(String),
    /// Output could not be written (exit 4).
    Io(String),
}

impl CliError {
    fn from_core(err: CoreError) -> Self {
        match err {
            CoreError::Divergence {
                step,
                vehicle,
                time,
            } => CliError::Divergence(format!(
                "state diverged at step {step} (t = {time} s), vehicle {vehicle}"
            )),
            CoreError::InvalidConfig(violations) => CliError::Invalid(format!(
                "invalid configuration:\n  {}",
                violations.join("\n  ")
            )),
            other => CliError::Invalid(other.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Divergence(m) | CliError::Io(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "platoon",
    version,
    about = "Simulate and certify delayed multi-predecessor vehicle platoons"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override a config value before validation; dotted path or bare field
    /// name (e.g. --set sim.dt=0.005 or --set dt=0.005). Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for --set channel.seed=N, applied after --set.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed-loop scenario; write trajectory and metrics tables.
    Simulate,
    /// Evaluate stability conditions, the headway bound, and worst-case gains.
    Analyze,
    /// Tabulate amplification magnitudes over a frequency grid.
    Freq {
        /// Lowest nonzero frequency (rad/s); a zero-frequency row is always
        /// written first.
        #[arg(long, default_value_t = 1e-3, value_name = "RADPS")]
        omega_min: f64,
        /// Highest frequency (rad/s).
        #[arg(long, default_value_t = 1e3, value_name = "RADPS")]
        omega_max: f64,
        /// Number of log-spaced grid points.
        #[arg(long, default_value_t = 2000, value_name = "N")]
        omega_points: usize,
    },
    /// Classify a parameter grid against the certification conditions.
    Sweep {
        /// Axis spec PARAM=start:stop:count or PARAM=v1,v2,... where PARAM is
        /// one of kp, kv, ka, h, tau, delta. Repeatable; later axes vary
        /// fastest.
        #[arg(long = "grid", value_name = "SPEC", required = true)]
        grid: Vec<String>,
        /// Also sweep the worst-case gain per grid point (much slower).
        #[arg(long)]
        norms: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn required<'a>(opt: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    opt.as_deref()
        .ok_or_else(|| CliError::Invalid(format!("{flag} is required")))
}

fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    let config_path = required(&cli.config, "--config")?;
    let out_dir = required(&cli.out, "--out")?;
    let (file, overrides) = config::load(config_path, &cli.set, cli.seed)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    match &cli.command {
        Command::Simulate => cmd_simulate(&file, &overrides, out_dir),
        Command::Analyze => cmd_analyze(&file, &overrides, out_dir),
        Command::Freq {
            omega_min,
            omega_max,
            omega_points,
        } => cmd_freq(
            &file,
            &overrides,
            out_dir,
            *omega_min,
            *omega_max,
            *omega_points,
        ),
        Command::Sweep { grid, norms } => cmd_sweep(&file, &overrides, out_dir, grid, *norms),
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    command: &'static str,
    rows: usize,
    n_followers: usize,
    dt: f64,
    t_end: f64,
    peak_abs_error_m: Vec<f64>,
    window_peak_ratios: Vec<f64>,
    final_error_m: Vec<f64>,
}

fn cmd_simulate(
    file: &config::ConfigFile,
    overrides: &[String],
    out_dir: &Path,
) -> Result<u8, CliError> {
    let scenario = file.to_scenario()?;
    let log = run(&scenario).map_err(CliError::from_core)?;
    let summary = metrics(&log);
    output::write_file(
        &out_dir.join("trajectory.csv"),
        &output::trajectory_csv(&log),
    )?;
    output::write_file(&out_dir.join("metrics.csv"), &output::metrics_csv(&summary))?;
    output::write_file(
        &out_dir.join("run_manifest.toml"),
        &config::manifest_string("simulate", overrides, file),
    )?;
    let json = SimulateSummary {
        command: "simulate",
        rows: log.rows(),
        n_followers: log.n_followers,
        dt: scenario.dt,
        t_end: scenario.t_end,
        peak_abs_error_m: summary.followers.iter().map(|f| f.peak_abs_error).collect(),
        window_peak_ratios: summary.window_peak_ratios.clone(),
        final_error_m: summary.followers.iter().map(|f| f.final_error).collect(),
    };
    write_summary(out_dir, &json)?;
    println!(
        "simulated {} vehicles for {} s ({} rows) into {}",
        log.vehicles.len(),
        scenario.t_end,
        log.rows(),
        out_dir.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct AnalyzeSummary {
    command: &'static str,
    internal_ok: bool,
    conditions_ok: bool,
    min_headway: Option<f64>,
    headway: f64,
    headway_ok: bool,
    hinf_norms: Vec<f64>,
    hinf_bound: f64,
    norms_ok: bool,
    certified: bool,
}

fn cmd_analyze(
    file: &config::ConfigFile,
    overrides: &[String],
    out_dir: &Path,
) -> Result<u8, CliError> {
    let scenario = file.to_scenario()?;
    let params = scenario.platoon_params().map_err(CliError::from_core)?;
    let report = analyze(&params);
    output::write_file(
        &out_dir.join("stability_report.csv"),
        &output::stability_report_csv(&report),
    )?;
    output::write_file(
        &out_dir.join("run_manifest.toml"),
        &config::manifest_string("analyze", overrides, file),
    )?;
    let json = AnalyzeSummary {
        command: "analyze",
        internal_ok: report.internal_ok(),
        conditions_ok: report.conditions_ok(),
        min_headway: report.h_min,
        headway: report.params.h,
        headway_ok: report.headway_ok,
        hinf_norms: report.hinf_norms.clone(),
        hinf_bound: report.hinf_bound,
        norms_ok: report.norms_ok,
        certified: report.certified(),
    };
    write_summary(out_dir, &json)?;
    println!(
        "internal {} | conditions {} | headway {} | norms {} => {}",
        flag(report.internal_ok()),
        flag(report.conditions_ok()),
        flag(report.headway_ok),
        flag(report.norms_ok),
        if report.certified() {
            "certified"
        } else {
            "NOT certified"
        }
    );
    Ok(if report.certified() { 0 } else { 1 })
}

fn flag(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

#[derive(Serialize)]
struct FreqSummary {
    command: &'static str,
    points: usize,
    bound: f64,
    max_magnitude: Vec<f64>,
}

fn cmd_freq(
    file: &config::ConfigFile,
    overrides: &[String],
    out_dir: &Path,
    omega_min: f64,
    omega_max: f64,
    omega_points: usize,
) -> Result<u8, CliError> {
    let scenario = file.to_scenario()?;
    let params = scenario.platoon_params().map_err(CliError::from_core)?;
    let resp = frequency_response(&params, omega_min, omega_max, omega_points)
        .map_err(CliError::from_core)?;
    output::write_file(
        &out_dir.join("freq_response.csv"),
        &output::freq_response_csv(&resp),
    )?;
    output::write_file(
        &out_dir.join("run_manifest.toml"),
        &config::manifest_string("freq", overrides, file),
    )?;
    let json = FreqSummary {
        command: "freq",
        points: resp.omegas.len(),
        bound: resp.bound,
        max_magnitude: resp
            .magnitudes
            .iter()
            .map(|curve| curve.iter().fold(0.0f64, |a, &b| a.max(b)))
            .collect(),
    };
    write_summary(out_dir, &json)?;
    println!(
        "tabulated {} frequencies for {} curves into {}",
        resp.omegas.len(),
        resp.magnitudes.len(),
        out_dir.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct SweepSummary {
    command: &'static str,
    points: usize,
    certified_points: usize,
}

fn cmd_sweep(
    file: &config::ConfigFile,
    overrides: &[String],
    out_dir: &Path,
    grid: &[String],
    norms: bool,
) -> Result<u8, CliError> {
    let scenario = file.to_scenario()?;
    let base = scenario.platoon_params().map_err(CliError::from_core)?;
    let axes = grid
        .iter()
        .map(|spec| parse_grid_spec(spec))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SweepSpec {
        base,
        axes,
        compute_norms: norms,
    };
    let points = sweep_gain_region(&spec).map_err(CliError::from_core)?;
    let certified = points.iter().filter(|p| p.certified()).count();
    output::write_file(
        &out_dir.join("region.csv"),
        &output::region_csv(&points, norms),
    )?;
    output::write_file(
        &out_dir.join("run_manifest.toml"),
        &config::manifest_string("sweep", overrides, file),
    )?;
    let json = SweepSummary {
        command: "sweep",
        points: points.len(),
        certified_points: certified,
    };
    write_summary(out_dir, &json)?;
    println!(
        "classified {} grid points ({certified} certified) into {}",
        points.len(),
        out_dir.display()
    );
    Ok(0)
}

fn write_summary<S: Serialize>(out_dir: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("cannot encode summary: {e}")))?;
    text.push('\n');
    output::write_file(&out_dir.join("summary.json"), &text)
}

fn parse_grid_spec(spec: &str) -> Result<(SweepParam, Vec<f64>), CliError> {
    let (name, rest) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Invalid(format!("grid spec {spec:?} is not PARAM=...")))?;
    let param = match name.trim().to_ascii_lowercase().as_str() {
        "kp" => SweepParam::Kp,
        "kv" => SweepParam::Kv,
        "ka" => SweepParam::Ka,
        "h" => SweepParam::H,
        "tau" => SweepParam::Tau,
        "delta" => SweepParam::Delta,
        other => {
            return Err(CliError::Invalid(format!(
                "unknown sweep parameter {other:?} (expected kp, kv, ka, h, tau, or delta)"
            )))
        }
    };
    let rest = rest.trim();
    let values = if rest.contains(':') {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Invalid(format!(
                "range spec {rest:?} is not start:stop:count"
            )));
        }
        let start: f64 = parse_num(parts[0])?;
        let stop: f64 = parse_num(parts[1])?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("bad grid count {:?}", parts[2])))?;
        if count == 0 {
            return Err(CliError::Invalid("grid count must be at least 1".into()));
        }
        if count == 1 {
            vec![start]
        } else {
            let step = (stop - start) / (count - 1) as f64;
            (0..count).map(|i| start + step * i as f64).collect()
        }
    } else {
        rest.split(',')
            .map(parse_num)
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok((param, values))
}

fn parse_num(raw: &str) -> Result<f64, CliError> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("bad numeric value {raw:?}")))
}
