//! Runs HA and HA+LR on one benchmark and compares against the published rows.

use std::ops::Range;
use std::path::Path;

use mobench_core::arres::{admissible_origins, fit_halr, forecast_halr, ResidualRegressionModel};
use mobench_core::metrics::{error_stats, ErrorStats, EvalReport, Metrics};
use mobench_core::panel::{split, PanelDataset, SplitBounds};
use mobench_core::seasonal::{fit_profile, ha_forecast, residualize, SeasonalProfile};
use mobench_core::tensor::MaskedTensor;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::load_dataset;
use crate::registry::{method_config, BenchmarkSpec, LrFitData, Method, Metric, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CheckStatus {
    Pass,
    /// Outside the tolerance but within twice of it.
    Near,
    Fail,
    /// The run produced no value for this metric.
    Missing,
}

impl CheckStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Near => "NEAR",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Missing => "MISSING",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCheck {
    pub target: Target,
    pub value: Option<f64>,
    /// `(value - target) / target`.
    pub rel_delta: Option<f64>,
    pub status: CheckStatus,
}

pub fn metric_value(m: &Metrics, metric: Metric) -> Option<f64> {
    match metric {
        Metric::Mae => Some(m.mae),
        Metric::Rmse => Some(m.rmse),
        Metric::Mape => m.mape_pct,
    }
}

pub fn check_target(report: &EvalReport, target: &Target) -> TargetCheck {
    let metrics = match target.horizon {
        None => Some(&report.averaged),
        Some(k) => report.per_horizon.get(&k),
    };
    let value = metrics.and_then(|m| metric_value(m, target.metric));
    let rel_delta = value.map(|v| (v - target.value) / target.value);
    let status = match rel_delta {
        None => CheckStatus::Missing,
        Some(d) if d.abs() <= target.rel_tol => CheckStatus::Pass,
        Some(d) if d.abs() <= 2.0 * target.rel_tol => CheckStatus::Near,
        Some(_) => CheckStatus::Fail,
    };
    TargetCheck {
        target: target.clone(),
        value,
        rel_delta,
        status,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub report: EvalReport,
    pub checks: Vec<TargetCheck>,
}

impl MethodResult {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    /// `[T, N, C]` after channel selection.
    pub shape: [usize; 3],
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
    /// Forecast origins evaluated (absolute timesteps).
    pub origins: Range<usize>,
    /// Weekly slots with no observation in the profile fit.
    pub empty_profile_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub spec: BenchmarkSpec,
    pub info: RunInfo,
    pub results: Vec<MethodResult>,
}

impl BenchmarkRun {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Short hash of the configuration that produced a report.
pub fn fingerprint(spec: &BenchmarkSpec, method: Method) -> String {
    let text = serde_json::to_string(&method_config(spec, method)).expect("config serializes");
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

/// Loads the spec's dataset and runs the requested methods.
pub fn run_benchmark(spec: &BenchmarkSpec, methods: &[Method], data_root: Option<&Path>) -> Result<BenchmarkRun> {
    spec.validate()?;
    let ds = load_dataset(&spec.resolve_dataset_dir(data_root))?;
    run_on_dataset(spec, methods, ds)
}

/// Fitted artifacts shared by both methods.
struct Fitted {
    profile: SeasonalProfile,
    model: Option<ResidualRegressionModel>,
}

fn mismatch(spec: &BenchmarkSpec, message: String) -> Error {
    Error::SpecMismatch {
        id: spec.id.clone(),
        message,
    }
}

fn prepare(spec: &BenchmarkSpec, ds: PanelDataset) -> Result<PanelDataset> {
    let meta = ds.meta();
    if meta.granularity_s != spec.granularity_s {
        return Err(mismatch(
            spec,
            format!("dataset granularity {} s, benchmark expects {} s", meta.granularity_s, spec.granularity_s),
        ));
    }
    if let Some(t) = spec.expected_timesteps.filter(|&t| t != meta.num_timesteps) {
        return Err(mismatch(spec, format!("dataset has T = {}, benchmark expects {t}", meta.num_timesteps)));
    }
    if let Some(n) = spec.expected_locations.filter(|&n| n != meta.num_locations) {
        return Err(mismatch(spec, format!("dataset has N = {}, benchmark expects {n}", meta.num_locations)));
    }
    let ds = match &spec.channels {
        Some(ch) => ds.select_channels(ch)?,
        None => ds,
    };
    let mut holidays = ds.meta().holidays.clone();
    holidays.extend(spec.holidays.iter().copied());
    holidays.sort();
    holidays.dedup();
    Ok(ds.with_holidays(holidays)?)
}

/// Runs the requested methods on an already-loaded dataset.
pub fn run_on_dataset(spec: &BenchmarkSpec, methods: &[Method], ds: PanelDataset) -> Result<BenchmarkRun> {
    spec.validate()?;
    let ds = prepare(spec, ds)?;
    let parts = split(&ds, &spec.split)?;
    let SplitBounds { train, val, test } = parts.bounds.clone();
    let config = spec.regression_config();
    let transform = spec.transform();

    let train_val = parts.train_val()?;
    let profile = fit_profile(&train_val)?;
    let model = if methods.contains(&Method::HaLr) {
        let lr_data = match spec.lr_fit_data {
            LrFitData::TrainVal => &train_val,
            LrFitData::Train => &parts.train,
        };
        let residuals = residualize(lr_data, &profile, transform)?;
        Some(fit_halr(&residuals, &config)?)
    } else {
        None
    };
    drop(parts);
    let fitted = Fitted { profile, model };

    let origins = admissible_origins(test.clone(), spec.lag_h, config.max_horizon())?;
    let halr = match &fitted.model {
        Some(model) => Some(forecast_halr(&ds, &fitted.profile, model, transform, origins.clone())?),
        None => None,
    };

    let mut ha_stats = Vec::new();
    let mut halr_stats = Vec::new();
    for (i, &k) in spec.horizons.iter().enumerate() {
        let times: Vec<usize> = origins.clone().map(|o| o + k - 1).collect();
        let truth = ds.gather(&times)?;
        let ha = ha_forecast(&fitted.profile, ds.meta(), &times)?;
        if let Some(forecasts) = &halr {
            let f = &forecasts[i];
            debug_assert_eq!(f.horizon, k);
            let stats = if spec.ha_fallback {
                error_stats(&truth, &fill_missing(&f.forecast, &ha), spec.mape_floor)?
            } else {
                error_stats(&truth, &f.forecast, spec.mape_floor)?
            };
            halr_stats.push((k, stats));
        }
        ha_stats.push((k, error_stats(&truth, &ha, spec.mape_floor)?));
    }

    let mut results = Vec::new();
    for &method in methods {
        let stats: &[(usize, ErrorStats)] = match method {
            Method::Ha => &ha_stats,
            Method::HaLr => &halr_stats,
        };
        let report = EvalReport::from_stats(stats, spec.aggregate_mode, fingerprint(spec, method))?;
        let checks = spec
            .targets
            .for_method(method)
            .iter()
            .map(|t| check_target(&report, t))
            .collect();
        results.push(MethodResult { method, report, checks });
    }

    Ok(BenchmarkRun {
        spec: spec.clone(),
        info: RunInfo {
            shape: ds.shape(),
            train,
            val,
            test,
            origins,
            empty_profile_cells: fitted.profile.empty_cells(),
        },
        results,
    })
}

/// HA+LR forecast with cells the regression could not predict (missing lags,
/// unfitted location) taken from the HA forecast, i.e. a zero residual.
pub fn fill_missing(primary: &MaskedTensor, fallback: &MaskedTensor) -> MaskedTensor {
    let mut out = primary.clone();
    let cells = out
        .values
        .as_mut_slice()
        .iter_mut()
        .zip(out.mask.as_mut_slice())
        .zip(fallback.values.as_slice().iter().zip(fallback.mask.as_slice()));
    for ((v, m), (&fv, &fm)) in cells {
        if !*m && fm {
            *v = fv;
            *m = true;
        }
    }
    out
}

/// Runs several benchmarks on up to `jobs` threads; results keep input order.
pub fn run_many(
    specs: &[BenchmarkSpec],
    methods: &[Method],
    data_root: Option<&Path>,
    jobs: usize,
) -> Vec<Result<BenchmarkRun>> {
    let jobs = jobs.max(1).min(specs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<BenchmarkRun>>> = (0..specs.len()).map(|_| None).collect();
    let done = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(spec) = specs.get(i) else { break };
                let r = run_benchmark(spec, methods, data_root);
                done.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every index visited")).collect()
}
