//! Result files: `results/<id>/<method>.{txt,csv,json}`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mobench_core::metrics::{EvalReport, Metrics};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::registry::{BenchmarkSpec, Method, Metric};
use crate::runner::{metric_value, BenchmarkRun, MethodResult, RunInfo, TargetCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Text, Format::Csv, Format::Json];

    pub fn extension(&self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Contents of a `<method>.json` result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub benchmark: String,
    pub method: Method,
    pub fingerprint: String,
    pub report: EvalReport,
    pub checks: Vec<TargetCheck>,
    pub run: RunInfo,
    pub spec: BenchmarkSpec,
}

pub const CSV_HEADER: &str = "benchmark,method,horizon,minutes,mae,mape_pct,rmse,n_evaluated,n_masked";

/// Decimal places used in tables: as many as the published numbers carry.
fn decimals(spec: &BenchmarkSpec) -> usize {
    spec.targets
        .ha
        .iter()
        .chain(&spec.targets.ha_lr)
        .map(|t| {
            let s = t.value.to_string();
            s.split_once('.').map_or(0, |(_, frac)| frac.len())
        })
        .max()
        .unwrap_or(2)
        .clamp(2, 4)
}

fn cell(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$}"))
}

fn slash_row(report: &EvalReport, metric: Metric, prec: usize) -> String {
    report
        .per_horizon
        .values()
        .map(|m| cell(metric_value(m, metric), prec))
        .collect::<Vec<_>>()
        .join("/ ")
}

const METRICS: [Metric; 3] = [Metric::Mae, Metric::Mape, Metric::Rmse];

fn header_metric(m: Metric) -> &'static str {
    match m {
        Metric::Mape => "MAPE (%)",
        other => other.label(),
    }
}

/// Aligned table: one row per method, metric columns holding the
/// slash-separated per-horizon values, then the averaged row.
pub fn render_table(spec: &BenchmarkSpec, results: &[MethodResult]) -> String {
    let prec = decimals(spec);
    let horizons = spec
        .horizons
        .iter()
        .map(|&k| spec.horizon_label(k).trim_end_matches(" min").to_string())
        .collect::<Vec<_>>()
        .join("/ ");
    let unit = if spec.horizon_label(spec.horizons[0]).ends_with('h') { "" } else { " min" };

    let mut rows: Vec<[String; 4]> = vec![[
        "Method".into(),
        header_metric(Metric::Mae).into(),
        header_metric(Metric::Mape).into(),
        header_metric(Metric::Rmse).into(),
    ]];
    for r in results {
        let mut row = [r.method.label().to_string(), String::new(), String::new(), String::new()];
        for (i, m) in METRICS.iter().enumerate() {
            row[i + 1] = slash_row(&r.report, *m, prec);
        }
        rows.push(row);
        if spec.horizons.len() > 1 {
            let mut avg = [format!("{} (avg)", r.method.label()), String::new(), String::new(), String::new()];
            for (i, m) in METRICS.iter().enumerate() {
                avg[i + 1] = cell(metric_value(&r.report.averaged, *m), prec);
            }
            rows.push(avg);
        }
    }
    let widths: Vec<usize> = (0..4).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();

    let mut out = String::new();
    let _ = writeln!(out, "{}", spec.title);
    let _ = writeln!(out, "split {}, horizons {horizons}{unit}", spec.split.describe());
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

fn render_checks(results: &[MethodResult]) -> String {
    let mut out = String::new();
    for r in results {
        for c in &r.checks {
            let h = c.target.horizon.map_or_else(|| "avg".to_string(), |k| format!("h={k}"));
            let _ = writeln!(
                out,
                "{:<7} {} {:<5} {:<5} target {} got {} ({}, tol ±{}%)",
                c.status.label(),
                r.method.label(),
                c.target.metric.label(),
                h,
                c.target.value,
                c.value.map_or_else(|| "-".to_string(), |v| format!("{v:.4}")),
                c.rel_delta.map_or_else(|| "n/a".to_string(), |d| format!("{:+.2}%", 100.0 * d)),
                100.0 * c.target.rel_tol,
            );
        }
    }
    out
}

pub fn render_text(run: &BenchmarkRun, result: &MethodResult) -> String {
    let mut out = render_table(&run.spec, std::slice::from_ref(result));
    out.push('\n');
    out.push_str(&render_checks(std::slice::from_ref(result)));
    let _ = writeln!(out, "fingerprint {}", result.report.fingerprint);
    out
}

fn csv_row(out: &mut String, id: &str, method: Method, horizon: &str, minutes: &str, m: &Metrics) {
    let mape = m.mape_pct.map_or_else(String::new, |v| v.to_string());
    let _ = writeln!(
        out,
        "{id},{},{horizon},{minutes},{},{mape},{},{},{}",
        method.label(),
        m.mae,
        m.rmse,
        m.n_evaluated,
        m.n_masked
    );
}

pub fn render_csv(run: &BenchmarkRun, result: &MethodResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (&k, m) in &result.report.per_horizon {
        let minutes = (k as u64 * u64::from(run.spec.granularity_s) / 60).to_string();
        csv_row(&mut out, &run.spec.id, result.method, &k.to_string(), &minutes, m);
    }
    csv_row(&mut out, &run.spec.id, result.method, "avg", "", &result.report.averaged);
    out
}

pub fn result_file(run: &BenchmarkRun, result: &MethodResult) -> ResultFile {
    ResultFile {
        benchmark: run.spec.id.clone(),
        method: result.method,
        fingerprint: result.report.fingerprint.clone(),
        report: result.report.clone(),
        checks: result.checks.clone(),
        run: run.info.clone(),
        spec: run.spec.clone(),
    }
}

pub fn render_json(run: &BenchmarkRun, result: &MethodResult) -> String {
    let mut s = serde_json::to_string_pretty(&result_file(run, result)).expect("result serializes");
    s.push('\n');
    s
}

/// Writes one file per method in `format` under `out_dir/<id>/`.
pub fn emit_results(run: &BenchmarkRun, format: Format, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let dir = out_dir.join(&run.spec.id);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut written = Vec::new();
    for result in &run.results {
        let path = dir.join(format!("{}.{}", result.method.slug(), format.extension()));
        let text = match format {
            Format::Text => render_text(run, result),
            Format::Csv => render_csv(run, result),
            Format::Json => render_json(run, result),
        };
        fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// `(horizon, mae, mape_pct, rmse)`; the averaged row has horizon `None`.
pub type CsvRow = (Option<usize>, f64, Option<f64>, f64);

/// Reads back the metric rows of a CSV result file.
pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad("unexpected header".into()));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(bad(format!("expected 9 fields: {line}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}")));
            let horizon = match f[2] {
                "avg" => None,
                k => Some(k.parse().map_err(|_| bad(format!("bad horizon {k}")))?),
            };
            let mape = if f[5].is_empty() { None } else { Some(num(f[5])?) };
            Ok((horizon, num(f[4])?, mape, num(f[6])?))
        })
        .collect()
}
