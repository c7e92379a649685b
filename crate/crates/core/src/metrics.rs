//! Masked MAE / RMSE / MAPE.
//!
//! Errors are reduced to running sums ([`ErrorStats`]) so that horizons can
//! be pooled exactly without keeping the individual errors around.

use alloc::collections::BTreeMap;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::tensor::MaskedTensor;

/// How per-horizon errors are combined into the averaged row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AggregateMode {
    /// Concatenate all (horizon, cell) errors, then compute the metrics.
    #[default]
    PoolCells,
    /// Unweighted mean of the per-horizon metric values.
    MeanOfMetrics,
}

/// Sufficient statistics of a set of forecast errors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorStats {
    pub n_evaluated: u64,
    pub n_masked: u64,
    /// Cells entering the MAPE (|y| above the floor).
    pub n_mape: u64,
    pub sum_abs: f64,
    pub sum_sq: f64,
    pub sum_ape: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    /// Percent; `None` when no target exceeds the MAPE floor.
    pub mape_pct: Option<f64>,
    pub n_evaluated: u64,
    pub n_masked: u64,
}

impl ErrorStats {
    /// Adds every cell where both truth and prediction are observed.
    pub fn accumulate(&mut self, y_true: &MaskedTensor, y_pred: &MaskedTensor, mape_floor: f64) -> Result<()> {
        if y_true.shape() != y_pred.shape() {
            return Err(Error::ShapeMismatch {
                expected: y_true.values.len(),
                found: y_pred.values.len(),
            });
        }
        if !(mape_floor >= 0.0) {
            return Err(Error::InvalidConfig("mape_floor must be ≥ 0".into()));
        }
        let cells = y_true
            .values
            .as_slice()
            .iter()
            .zip(y_true.mask.as_slice())
            .zip(y_pred.values.as_slice().iter().zip(y_pred.mask.as_slice()));
        for ((&y, &ym), (&p, &pm)) in cells {
            if !(ym && pm) {
                self.n_masked += 1;
                continue;
            }
            let e = (y - p).abs();
            self.n_evaluated += 1;
            self.sum_abs += e;
            self.sum_sq += e * e;
            if y.abs() > mape_floor {
                self.n_mape += 1;
                self.sum_ape += e / y.abs();
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ErrorStats) {
        self.n_evaluated += other.n_evaluated;
        self.n_masked += other.n_masked;
        self.n_mape += other.n_mape;
        self.sum_abs += other.sum_abs;
        self.sum_sq += other.sum_sq;
        self.sum_ape += other.sum_ape;
    }

    pub fn metrics(&self) -> Result<Metrics> {
        if self.n_evaluated == 0 {
            return Err(Error::NoEvaluableCells);
        }
        let n = self.n_evaluated as f64;
        Ok(Metrics {
            mae: self.sum_abs / n,
            rmse: libm::sqrt(self.sum_sq / n),
            mape_pct: (self.n_mape > 0).then(|| 100.0 * self.sum_ape / self.n_mape as f64),
            n_evaluated: self.n_evaluated,
            n_masked: self.n_masked,
        })
    }
}

pub fn error_stats(y_true: &MaskedTensor, y_pred: &MaskedTensor, mape_floor: f64) -> Result<ErrorStats> {
    let mut stats = ErrorStats::default();
    stats.accumulate(y_true, y_pred, mape_floor)?;
    Ok(stats)
}

/// Metrics over the cells observed in both tensors.
pub fn evaluate(y_true: &MaskedTensor, y_pred: &MaskedTensor, mape_floor: f64) -> Result<Metrics> {
    error_stats(y_true, y_pred, mape_floor)?.metrics()
}

/// Combines per-horizon errors into a single row.
pub fn aggregate_horizons(per_horizon: &[ErrorStats], mode: AggregateMode) -> Result<Metrics> {
    match mode {
        AggregateMode::PoolCells => {
            let mut pooled = ErrorStats::default();
            per_horizon.iter().for_each(|s| pooled.merge(s));
            pooled.metrics()
        }
        AggregateMode::MeanOfMetrics => {
            if per_horizon.is_empty() {
                return Err(Error::NoEvaluableCells);
            }
            let mut mae = 0.0;
            let mut rmse = 0.0;
            let (mut mape, mut n_mape) = (0.0, 0usize);
            let (mut n_eval, mut n_masked) = (0, 0);
            for s in per_horizon {
                let m = s.metrics()?;
                mae += m.mae;
                rmse += m.rmse;
                if let Some(p) = m.mape_pct {
                    mape += p;
                    n_mape += 1;
                }
                n_eval += m.n_evaluated;
                n_masked += m.n_masked;
            }
            let k = per_horizon.len() as f64;
            Ok(Metrics {
                mae: mae / k,
                rmse: rmse / k,
                mape_pct: (n_mape > 0).then(|| mape / n_mape as f64),
                n_evaluated: n_eval,
                n_masked,
            })
        }
    }
}

/// Per-horizon and averaged metrics of one method on one benchmark.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub per_horizon: BTreeMap<usize, Metrics>,
    pub averaged: Metrics,
    pub aggregate_mode: AggregateMode,
    pub fingerprint: String,
}

impl EvalReport {
    pub fn from_stats(
        per_horizon: &[(usize, ErrorStats)],
        mode: AggregateMode,
        fingerprint: impl Into<String>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, s) in per_horizon {
            map.insert(*k, s.metrics()?);
        }
        let stats: alloc::vec::Vec<ErrorStats> = per_horizon.iter().map(|(_, s)| *s).collect();
        Ok(Self {
            per_horizon: map,
            averaged: aggregate_horizons(&stats, mode)?,
            aggregate_mode: mode,
            fingerprint: fingerprint.into(),
        })
    }
}
