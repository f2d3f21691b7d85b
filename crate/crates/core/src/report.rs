//! Batch execution, CSV traces and JSON reports.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{RunMetrics, TraceMetrics, TraceRow};
use crate::scenario::{Method, Scenario};
use crate::sim::{run_scenario, RunOutput};
use crate::types::{Vec3, Vec6};

pub const CSV_COLUMNS: [&str; 31] = [
    "t", "p_E.x", "p_E.y", "p_E.z", "p_O.x", "p_O.y", "p_O.z", "e_E.x", "e_E.y", "e_E.z", "rho.x",
    "rho.y", "rho.z", "alpha.x", "alpha.y", "alpha.z", "cmd.x", "cmd.y", "cmd.z", "xstar.1",
    "xstar.2", "xstar.3", "xstar.4", "xstar.5", "xstar.6", "p_B.x", "p_B.y", "p_B.z", "q.1", "q.2",
    "q.3",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn row_values(r: &TraceRow) -> Vec<f64> {
    let mut v = Vec::with_capacity(CSV_COLUMNS.len());
    v.push(r.t);
    for x in [&r.p_e, &r.p_o, &r.e, &r.rho, &r.alpha, &r.cmd] {
        v.extend_from_slice(x.as_slice());
    }
    v.extend_from_slice(r.x_star.as_slice());
    v.extend_from_slice(r.p_b.as_slice());
    v.extend_from_slice(r.q.as_slice());
    v
}

/// Writes the trace as CSV. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_trace<W: std::io::Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in trace {
        w.write_record(row_values(r).iter().map(|x| format!("{x}")))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: std::io::Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Io(format!("unexpected trace header: {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Io(format!("bad number {f:?}: {e}"))))
            .collect::<Result<_>>()?;
        let v3 = |i: usize| Vec3::new(v[i], v[i + 1], v[i + 2]);
        out.push(TraceRow {
            t: v[0],
            p_e: v3(1),
            p_o: v3(4),
            e: v3(7),
            rho: v3(10),
            alpha: v3(13),
            cmd: v3(16),
            x_star: Vec6::from_row_slice(&v[19..25]),
            p_b: v3(25),
            q: v3(28),
        });
    }
    Ok(out)
}

pub fn write_trace_file(path: &Path, trace: &[TraceRow]) -> Result<()> {
    write_trace(std::io::BufWriter::new(fs::File::create(path)?), trace)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRow>> {
    read_trace(std::io::BufReader::new(fs::File::open(path)?))
}

pub fn trace_file_name(seed: u64) -> String {
    format!("run_seed{seed}.csv")
}

/// Runs every seed in parallel; results come back in seed order.
pub fn batch(sc: &Scenario, seeds: &[u64]) -> Result<Vec<RunOutput>> {
    seeds.par_iter().map(|&s| run_scenario(sc, s)).collect()
}

/// Median of the finite and infinite values alike (`+∞` sorts last).
fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

/// Sample standard deviation; zero for a single value.
fn std_dev(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let n = values.len() as f64;
    if values.len() == 1 {
        return Some(0.0);
    }
    // Shifting by the first value keeps identical samples at exactly zero.
    let shifted: Vec<f64> = values.iter().map(|x| x - values[0]).collect();
    let mean = shifted.iter().sum::<f64>() / n;
    Some((shifted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

fn column(values: impl Iterator<Item = Option<f64>>) -> Vec<f64> {
    values.map(|v| v.unwrap_or(f64::INFINITY)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub avg_error: Option<f64>,
    pub convergence_time: Option<f64>,
    pub terminal_error: Option<f64>,
    pub terminal_error_std: Option<f64>,
}

impl Aggregate {
    fn over(rows: &[(f64, f64, Option<f64>, Option<f64>)], f: fn(&[f64]) -> Option<f64>) -> Self {
        Aggregate {
            avg_error: f(&column(rows.iter().map(|r| Some(r.0)))),
            convergence_time: f(&column(rows.iter().map(|r| Some(r.1)))),
            terminal_error: f(&column(rows.iter().map(|r| r.2))),
            terminal_error_std: f(&column(rows.iter().map(|r| r.3))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub scenario: String,
    pub method: Method,
    pub t_p: f64,
    pub runs: Vec<SeedMetrics>,
    pub median: Aggregate,
    pub std: Aggregate,
    pub envelope_violations: usize,
    pub qp_nonconverged: usize,
}

impl BatchReport {
    pub fn from_runs(sc: &Scenario, runs: &[RunOutput]) -> Self {
        let rows: Vec<_> = runs
            .iter()
            .map(|r| {
                let m = &r.metrics;
                (m.avg_error, m.convergence_time, m.terminal_error, m.terminal_error_std)
            })
            .collect();
        BatchReport {
            scenario: sc.name.clone(),
            method: sc.method,
            t_p: sc.t_p,
            runs: runs
                .iter()
                .map(|r| SeedMetrics {
                    seed: r.seed,
                    metrics: r.metrics,
                })
                .collect(),
            median: Aggregate::over(&rows, median),
            std: Aggregate::over(&rows, std_dev),
            envelope_violations: runs.iter().map(|r| r.metrics.envelope_violations).sum(),
            qp_nonconverged: runs.iter().map(|r| r.metrics.qp_nonconverged).sum(),
        }
    }

    /// Envelope violations only count against the preset method, whose
    /// guarantee the envelope is.
    pub fn invariant_violated(&self) -> bool {
        self.qp_nonconverged > 0 || (self.method == Method::Preset && self.envelope_violations > 0)
    }
}

/// Metrics re-derived from the CSV traces of an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecomputedReport {
    pub scenario: String,
    pub runs: Vec<(u64, TraceMetrics)>,
    pub median: Aggregate,
    pub std: Aggregate,
}

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const REPORT_FILE: &str = "report.json";

/// Writes the scenario copy, one CSV per run and `report.json` into `dir`.
pub fn write_batch(dir: &Path, sc: &Scenario, runs: &[RunOutput]) -> Result<BatchReport> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SCENARIO_FILE), sc.to_toml_string()?)?;
    for r in runs {
        write_trace_file(&dir.join(trace_file_name(r.seed)), &r.trace)?;
    }
    let report = BatchReport::from_runs(sc, runs);
    write_json(&dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn trace_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(seed) = name
            .strip_prefix("run_seed")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<u64>().ok())
        {
            out.push((seed, path));
        }
    }
    out.sort();
    Ok(out)
}

pub fn recompute_dir(dir: &Path) -> Result<RecomputedReport> {
    let sc = Scenario::from_file(&dir.join(SCENARIO_FILE))?;
    let files = trace_files(dir)?;
    if files.is_empty() {
        return Err(Error::Config(format!("no run_seed*.csv traces in {}", dir.display())));
    }
    let runs = files
        .iter()
        .map(|(seed, p)| Ok((*seed, TraceMetrics::from_trace(&read_trace_file(p)?, &sc.rho_inf))))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = runs
        .iter()
        .map(|(_, m)| (m.avg_error, m.convergence_time, m.terminal_error, m.terminal_error_std))
        .collect();
    Ok(RecomputedReport {
        scenario: sc.name,
        median: Aggregate::over(&rows, median),
        std: Aggregate::over(&rows, std_dev),
        runs,
    })
}
