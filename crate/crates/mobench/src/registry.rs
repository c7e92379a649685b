//! The nine reference benchmarks: dataset layout, split, horizons and the
//! published HA / HA+LR numbers each run is compared against.

use std::path::{Path, PathBuf};

use mobench_core::arres::{MissingLags, RegressionConfig, Scope, Strategy, DEFAULT_LAG_ORDER, DEFAULT_RIDGE};
use mobench_core::calendar::CivilDate;
use mobench_core::metrics::AggregateMode;
use mobench_core::panel::SplitSpec;
use mobench_core::seasonal::{ResidualTransform, DEFAULT_S_FLOOR};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for historical-average targets.
pub const HA_REL_TOL: f64 = 0.02;
/// Relative tolerance for HA+LR targets.
pub const HALR_REL_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "HA")]
    Ha,
    #[serde(rename = "HA+LR")]
    HaLr,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Ha, Method::HaLr];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Ha => "HA",
            Method::HaLr => "HA+LR",
        }
    }

    /// File-name stem used in result directories.
    pub fn slug(&self) -> &'static str {
        match self {
            Method::Ha => "ha",
            Method::HaLr => "ha_lr",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ha" => Some(Method::Ha),
            "ha+lr" | "ha_lr" | "halr" | "ha-lr" => Some(Method::HaLr),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mae,
    Mape,
    Rmse,
}

impl Metric {
    pub fn label(&self) -> &'static str {
        match self {
            Metric::Mae => "MAE",
            Metric::Mape => "MAPE",
            Metric::Rmse => "RMSE",
        }
    }
}

/// One published number. `horizon = None` refers to the averaged row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub metric: Metric,
    pub horizon: Option<usize>,
    pub value: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PaperTargets {
    #[serde(default)]
    pub ha: Vec<Target>,
    #[serde(default)]
    pub ha_lr: Vec<Target>,
}

impl PaperTargets {
    pub fn for_method(&self, method: Method) -> &[Target] {
        match method {
            Method::Ha => &self.ha,
            Method::HaLr => &self.ha_lr,
        }
    }
}

/// Which data the residual regression is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrFitData {
    #[default]
    TrainVal,
    Train,
}

/// Complete description of one benchmark run. Every field can be overridden
/// from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub id: String,
    pub title: String,
    /// Converted dataset directory; defaults to `<data root>/<id>`.
    #[serde(default)]
    pub dataset_dir: Option<PathBuf>,
    pub timespan: String,
    pub split: SplitSpec,
    pub granularity_s: u32,
    /// Forecast horizons in steps.
    pub horizons: Vec<usize>,
    /// Sequence-to-sequence setup (12 in, 12 out, averaged over horizons).
    pub seq2seq: bool,
    pub lag_h: usize,
    pub mape_floor: f64,
    pub aggregate_mode: AggregateMode,
    /// Channels used for this benchmark; all when absent.
    #[serde(default)]
    pub channels: Option<Vec<usize>>,
    pub strategy: Strategy,
    pub scope: Scope,
    pub ridge: f64,
    pub include_intercept: bool,
    pub normalized: bool,
    pub s_floor: f64,
    pub lr_fit_data: LrFitData,
    pub missing_lags: MissingLags,
    /// Score HA+LR cells the regression cannot predict (missing lags) with
    /// the HA forecast instead of dropping them.
    #[serde(default = "enabled")]
    pub ha_fallback: bool,
    /// Dates treated as Sundays, merged with the dataset's own list.
    pub holidays: Vec<CivilDate>,
    #[serde(default)]
    pub expected_timesteps: Option<usize>,
    #[serde(default)]
    pub expected_locations: Option<usize>,
    /// Metrics reported by the source table.
    pub reported_metrics: Vec<Metric>,
    pub targets: PaperTargets,
    #[serde(default)]
    pub notes: String,
}

impl BenchmarkSpec {
    pub fn regression_config(&self) -> RegressionConfig {
        RegressionConfig {
            lag_order: self.lag_h,
            horizons: self.horizons.clone(),
            strategy: self.strategy,
            scope: self.scope,
            ridge: self.ridge,
            include_intercept: self.include_intercept,
            missing_lags: self.missing_lags,
        }
    }

    pub fn transform(&self) -> ResidualTransform {
        ResidualTransform {
            normalized: self.normalized,
            s_floor: self.s_floor,
        }
    }

    pub fn resolve_dataset_dir(&self, data_root: Option<&Path>) -> PathBuf {
        match (&self.dataset_dir, data_root) {
            (Some(dir), _) => dir.clone(),
            (None, Some(root)) => root.join(&self.id),
            (None, None) => PathBuf::from(&self.id),
        }
    }

    /// Horizon label as used in the tables: hours for hourly data, else minutes.
    pub fn horizon_label(&self, steps: usize) -> String {
        let minutes = steps as u64 * u64::from(self.granularity_s) / 60;
        if minutes >= 60 && minutes.is_multiple_of(60) && self.granularity_s >= 3600 {
            format!("{}h", minutes / 60)
        } else {
            format!("{minutes} min")
        }
    }

    /// Structural checks that do not need the dataset.
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::SpecMismatch {
            id: self.id.clone(),
            message,
        };
        self.split.validate()?;
        self.regression_config().validate()?;
        mobench_core::calendar::WeeklyIndex::new(self.granularity_s)?;
        if !(self.mape_floor >= 0.0) {
            return Err(bad("mape_floor must be ≥ 0".into()));
        }
        if !(self.s_floor > 0.0) {
            return Err(bad("s_floor must be > 0".into()));
        }
        for t in self.targets.ha.iter().chain(&self.targets.ha_lr) {
            if !self.reported_metrics.contains(&t.metric) {
                return Err(bad(format!("target for unreported metric {}", t.metric.label())));
            }
            if let Some(k) = t.horizon {
                if !self.horizons.contains(&k) {
                    return Err(bad(format!("target horizon {k} not among {:?}", self.horizons)));
                }
            }
        }
        Ok(())
    }
}

fn enabled() -> bool {
    true
}

fn parse_holidays(text: &str) -> Vec<CivilDate> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse().expect("bundled holiday files are valid"))
        .collect()
}

/// Reads a holiday list file: one `YYYY-MM-DD` per line, `#` comments.
pub fn read_holidays(path: &Path) -> Result<Vec<CivilDate>> {
    let text = std::fs::read_to_string(path).map_err(crate::error::io_err(path))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse().map_err(Error::from))
        .collect()
}

fn target(metric: Metric, horizon: Option<usize>, value: f64, rel_tol: f64) -> Target {
    Target {
        metric,
        horizon,
        value,
        rel_tol,
    }
}

/// HA row: a single averaged value per metric.
fn ha_row(row: &[(Metric, f64)]) -> Vec<Target> {
    row.iter().map(|&(m, v)| target(m, None, v, HA_REL_TOL)).collect()
}

/// HA+LR row with one value per listed horizon.
fn halr_row(horizons: &[usize], row: &[(Metric, &[f64])]) -> Vec<Target> {
    row.iter()
        .flat_map(|&(m, values)| {
            assert_eq!(values.len(), horizons.len());
            horizons
                .iter()
                .zip(values)
                .map(move |(&k, &v)| target(m, Some(k), v, HALR_REL_TOL))
        })
        .collect()
}

/// HA+LR row reported as an average over horizons.
fn halr_avg(row: &[(Metric, f64)]) -> Vec<Target> {
    row.iter().map(|&(m, v)| target(m, None, v, HALR_REL_TOL)).collect()
}

struct Entry {
    id: &'static str,
    title: &'static str,
    timespan: &'static str,
    split: SplitSpec,
    granularity_s: u32,
    horizons: Vec<usize>,
    seq2seq: bool,
    channels: Option<Vec<usize>>,
    holidays: &'static str,
    expected: (Option<usize>, Option<usize>),
    reported: Vec<Metric>,
    targets: PaperTargets,
    notes: &'static str,
}

impl From<Entry> for BenchmarkSpec {
    fn from(e: Entry) -> Self {
        BenchmarkSpec {
            id: e.id.into(),
            title: e.title.into(),
            dataset_dir: None,
            timespan: e.timespan.into(),
            split: e.split,
            granularity_s: e.granularity_s,
            horizons: e.horizons,
            seq2seq: e.seq2seq,
            lag_h: DEFAULT_LAG_ORDER,
            mape_floor: 0.0,
            aggregate_mode: AggregateMode::PoolCells,
            channels: e.channels,
            strategy: Strategy::Direct,
            scope: Scope::Pooled,
            ridge: DEFAULT_RIDGE,
            include_intercept: true,
            normalized: false,
            s_floor: DEFAULT_S_FLOOR,
            lr_fit_data: LrFitData::TrainVal,
            missing_lags: MissingLags::Mask,
            ha_fallback: true,
            holidays: parse_holidays(e.holidays),
            expected_timesteps: e.expected.0,
            expected_locations: e.expected.1,
            reported_metrics: e.reported,
            targets: e.targets,
            notes: e.notes.into(),
        }
    }
}

const MIN5: u32 = 300;

/// All nine benchmarks, in table order.
pub fn registry() -> Vec<BenchmarkSpec> {
    use Metric::*;
    let all3 = || vec![Mae, Mape, Rmse];
    let seq = (1..=12).collect::<Vec<_>>();
    let entries = vec![
        Entry {
            id: "pemsd7m",
            title: "PeMSD7(M) - traffic speeds, California",
            timespan: "01/04/2016 - 30/06/2016",
            split: SplitSpec::Days { train: 34, val: 5, test: 5 },
            granularity_s: MIN5,
            horizons: vec![3, 6, 9],
            seq2seq: false,
            channels: None,
            holidays: include_str!("../data/holidays/pemsd7m.txt"),
            expected: (Some(12_672), Some(228)),
            reported: all3(),
            targets: PaperTargets {
                ha: ha_row(&[(Mae, 3.90), (Mape, 10.14), (Rmse, 7.09)]),
                ha_lr: halr_row(
                    &[3, 6, 9],
                    &[(Mae, &[2.48, 3.13, 3.45]), (Mape, &[5.81, 7.65, 8.57]), (Rmse, &[4.22, 5.50, 6.10])],
                ),
            },
            notes: "Upstream tensor holds 44 weekdays only (34/5/5 days); convert with weekdays_only = true.",
        },
        Entry {
            id: "urban1",
            title: "Urban1 - traffic speeds, South Korea",
            timespan: "01/04/2018 - 30/04/2018",
            split: SplitSpec::Fractions { train: 0.7, val: 0.1, test: 0.2 },
            granularity_s: MIN5,
            horizons: vec![6, 9, 12],
            seq2seq: false,
            channels: None,
            holidays: include_str!("../data/holidays/urban1.txt"),
            expected: (None, None),
            reported: all3(),
            targets: PaperTargets {
                ha: ha_row(&[(Mae, 3.18), (Mape, 14.19), (Rmse, 4.79)]),
                ha_lr: halr_row(
                    &[6, 9, 12],
                    &[(Mae, &[3.04, 3.10, 3.13]), (Mape, &[13.39, 13.73, 13.87]), (Rmse, &[4.60, 4.67, 4.71])],
                ),
            },
            notes: "Horizons 30/45/60 min.",
        },
        Entry {
            id: "nyc-citibike-pickdrop",
            title: "NYC Citi Bike - pickups and dropoffs",
            timespan: "01/04/2016 - 01/04/2016",
            split: SplitSpec::Days { train: 63, val: 14, test: 14 },
            granularity_s: 1800,
            horizons: seq.clone(),
            seq2seq: true,
            channels: None,
            holidays: include_str!("../data/holidays/nyc-citibike-pickdrop.txt"),
            expected: (None, None),
            reported: vec![Mae, Rmse],
            targets: PaperTargets {
                ha: ha_row(&[(Mae, 1.726), (Rmse, 2.871)]),
                ha_lr: halr_avg(&[(Mae, 1.738), (Rmse, 2.758)]),
            },
            notes: "Timespan column reads 01/04/2016 - 01/04/2016 while the split covers 91 days; the converted artifact's length governs.",
        },
        Entry {
            id: "pemsd4",
            title: "PeMSD4 - traffic volumes, California",
            timespan: "01/01/2018 - 28/02/2018",
            split: SplitSpec::Fractions { train: 0.6, val: 0.2, test: 0.2 },
            granularity_s: MIN5,
            horizons: seq.clone(),
            seq2seq: true,
            channels: Some(vec![0]),
            holidays: include_str!("../data/holidays/pemsd4.txt"),
            expected: (Some(16_992), Some(307)),
            reported: all3(),
            targets: PaperTargets {
                ha: ha_row(&[(Mae, 26.26), (Mape, 17.07), (Rmse, 42.87)]),
                ha_lr: halr_avg(&[(Mae, 20.03), (Mape, 13.39), (Rmse, 32.73)]),
            },
            notes: "Channel 0 (flow) of the upstream three-channel tensor.",
        },
        Entry {
            id: "sz-taxi",
            title: "SZ-taxi - traffic speeds, Shenzhen",
            timespan: "01/01/2015 - 31/01/2015",
            split: SplitSpec::Fractions { train: 0.8, val: 0.0, test: 0.2 },
            granularity_s: 900,
            horizons: vec![1, 2, 3, 4],
            seq2seq: false,
            channels: None,
            holidays: include_str!("../data/holidays/sz-taxi.txt"),
            expected: (Some(2_976), Some(156)),
            reported: vec![Mae, Rmse],
            targets: PaperTargets {
                ha: ha_row(&[(Mae, 4.630), (Rmse, 6.463)]),
                ha_lr: halr_row(
                    &[1, 2, 3, 4],
                    &[(Mae, &[3.464, 3.507, 3.534, 3.554]), (Rmse, &[4.998, 5.057, 5.091, 5.115])],
                ),
            },
            notes: "",
        },
        Entry {
            id: "metr-la",
            title: "METR-LA - traffic speeds, Los Angeles",
            timespan: "01/03/2012 - 30/06/2012",
            split: SplitSpec::Fractions { train: 0.7, val: 0.1, test: 0.2 },
            granularity_s: MIN5,
            horizons: vec![3, 6, 12],
            seq2seq: false,
            channels: None,
            holidays: include_str!("../data/holidays/metr-la.txt"),
            expected: (Some(34_272), Some(207)),
            reported: all3(),
            targets: PaperTargets {
                ha: ha_row(&[(Mae, 4.19), (Mape, 13.0), (Rmse, 7.84)]),
                ha_lr: halr_row(
                    &[3, 6, 12],
                    &[(Mae, &[3.28, 3.68, 4.02]), (Mape, &[8.8, 10.4, 11.9]), (Rmse, &[5.71, 6.60, 7.32])],
                ),
            },
            notes: "Zero speeds are missing readings (missing_sentinel = 0).",
        },
        Entry {
            id: "pems-bay",
            title: "PEMS-BAY - traffic speeds, California",
            timespan: "01/01/2017 - 31/05/2017",
            split: SplitSpec::Fractions { train: 0.7, val: 0.1, test: 0.2 },
            granularity_s: MIN5,
            horizons: vec![3, 6, 12],
            seq2seq: false,
            channels: None,
            holidays: include_str!("../data/holidays/pems-bay.txt"),
            expected: (Some(52_116), Some(325)),
            reported: all3(),
            targets: PaperTargets {
                ha: ha_row(&[(Mae, 2.58), (Mape, 6.1), (Rmse, 5.04)]),
                ha_lr: halr_row(
                    &[3, 6, 12],
                    &[(Mae, &[1.54, 1.91, 2.22]), (Mape, &[3.2, 4.3, 5.1]), (Rmse, &[2.93, 3.83, 4.45])],
                ),
            },
            notes: "Zero speeds are missing readings (missing_sentinel = 0).",
        },
        Entry {
            id: "nyc-bike-inout",
            title: "NYC Citi Bike - in- and out-flows",
            timespan: "01/07/2017 - 30/09/2017",
            split: SplitSpec::Fractions { train: 0.8, val: 0.1, test: 0.1 },
            granularity_s: 3600,
            horizons: vec![1, 2, 3],
            seq2seq: false,
            channels: None,
            holidays: include_str!("../data/holidays/nyc-bike-inout.txt"),
            expected: (None, None),
            reported: vec![Mae, Rmse],
            targets: PaperTargets {
                ha: ha_row(&[(Mae, 5.97), (Rmse, 11.04)]),
                ha_lr: halr_row(&[1, 2, 3], &[(Mae, &[5.10, 5.45, 5.56]), (Rmse, &[8.72, 9.69, 10.04])]),
            },
            notes: "Two channels: in-flow and out-flow.",
        },
        Entry {
            id: "seattle-loop",
            title: "Seattle loop data - traffic speeds",
            timespan: "01/11/2015 - 31/12/2015",
            split: SplitSpec::Days { train: 56, val: 0, test: 5 },
            granularity_s: MIN5,
            horizons: vec![1],
            seq2seq: false,
            channels: None,
            holidays: include_str!("../data/holidays/seattle-loop.txt"),
            expected: (None, None),
            reported: vec![Mape, Rmse],
            targets: PaperTargets {
                ha: ha_row(&[(Mape, 12.5), (Rmse, 9.82)]),
                ha_lr: halr_row(&[1], &[(Mape, &[5.5]), (Rmse, &[3.95])]),
            },
            notes: "No-missing-data condition only.",
        },
    ];
    entries.into_iter().map(BenchmarkSpec::from).collect()
}

pub fn find(id: &str) -> Result<BenchmarkSpec> {
    registry()
        .into_iter()
        .find(|b| b.id == id)
        .ok_or_else(|| Error::UnknownBenchmark(id.to_string()))
}

/// Configuration of the residual model alone, for fingerprinting.
pub fn method_config(spec: &BenchmarkSpec, method: Method) -> serde_json::Value {
    let mut v = serde_json::to_value(spec).expect("spec serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("dataset_dir");
        obj.remove("notes");
        obj.insert("method".into(), serde_json::to_value(method).expect("method serializes"));
    }
    v
}
