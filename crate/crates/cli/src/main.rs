use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use amctl_core::report::{write_json, Aggregate};
use amctl_core::{batch, recompute_dir, write_batch, BatchReport, Error, Method, Scenario};

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "amctl", version, about = "Aerial-manipulator tracking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario for one or more seeds.
    Run(RunArgs),
    /// Repeat a scenario over several preset times.
    Sweep(SweepArgs),
    /// Recompute metrics from the CSV traces in an output directory.
    Report {
        dir: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file, or the name of a shipped preset (example1, example2, ...).
    #[arg(long, env = "AMTRACK_SCENARIO")]
    scenario: String,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Seed range `N..M` (half-open), `N..=M`, or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// Directory for the scenario copy, CSV traces and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Override the preset time (s).
    #[arg(long)]
    tp: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated preset times (s).
    #[arg(long, value_delimiter = ',', required = true)]
    tp: Vec<f64>,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::Config(format!("cannot parse seeds {text:?}"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = text.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn load(common: &Common) -> Result<(Scenario, Vec<u64>), Error> {
    let mut sc = Scenario::load(&common.scenario)?;
    if let Some(m) = common.method {
        sc.method = m;
    }
    let seeds = match (&common.seed, &common.seeds) {
        (Some(s), _) => vec![*s],
        (None, Some(list)) => parse_seeds(list)?,
        (None, None) => sc.seeds.clone(),
    };
    Ok((sc, seeds))
}

fn run_batch(sc: &Scenario, seeds: &[u64], out: Option<&Path>) -> Result<BatchReport, Error> {
    let runs = batch(sc, seeds)?;
    match out {
        Some(dir) => write_batch(dir, sc, &runs),
        None => Ok(BatchReport::from_runs(sc, &runs)),
    }
}

fn print_json<T: Serialize>(value: &T) {
    match serde_json::to_string_pretty(value) {
        Ok(text) => println!("{text}"),
        Err(e) => log::error!("cannot serialize report: {e}"),
    }
}

#[derive(Serialize)]
struct SweepPoint {
    t_p: f64,
    median: Aggregate,
    std: Aggregate,
    envelope_violations: usize,
    qp_nonconverged: usize,
}

#[derive(Serialize)]
struct SweepReport {
    scenario: String,
    method: Method,
    seeds: Vec<u64>,
    points: Vec<SweepPoint>,
}

fn execute(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run(args) => {
            let (mut sc, seeds) = load(&args.common)?;
            if let Some(tp) = args.tp {
                sc = sc.with_preset_time(tp)?;
            }
            let report = run_batch(&sc, &seeds, args.common.out.as_deref())?;
            print_json(&report);
            Ok(!report.invariant_violated())
        }
        Command::Sweep(args) => {
            let (sc, seeds) = load(&args.common)?;
            let mut points = Vec::new();
            let mut ok = true;
            for &tp in &args.tp {
                let scenario = sc.clone().with_preset_time(tp)?;
                let out = args.common.out.as_ref().map(|d| d.join(format!("tp_{tp}")));
                let report = run_batch(&scenario, &seeds, out.as_deref())?;
                ok &= !report.invariant_violated();
                points.push(SweepPoint {
                    t_p: tp,
                    median: report.median,
                    std: report.std,
                    envelope_violations: report.envelope_violations,
                    qp_nonconverged: report.qp_nonconverged,
                });
            }
            let summary = SweepReport {
                scenario: sc.name.clone(),
                method: sc.method,
                seeds,
                points,
            };
            if let Some(dir) = &args.common.out {
                write_json(&dir.join("sweep.json"), &summary)?;
            }
            print_json(&summary);
            Ok(ok)
        }
        Command::Report { dir } => {
            let report = recompute_dir(&dir)?;
            write_json(&dir.join("report_recomputed.json"), &report)?;
            print_json(&report);
            let sc = Scenario::from_file(&dir.join(amctl_core::report::SCENARIO_FILE))?;
            let outside: usize = report.runs.iter().map(|(_, m)| m.rows_outside).sum();
            Ok(sc.method != Method::Preset || outside == 0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("amctl: invariant violated (envelope or QP convergence)");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(e) => {
            eprintln!("amctl: {e}");
            if e.is_config_error() || matches!(e, Error::Io(_)) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_VIOLATION)
            }
        }
    }
}
