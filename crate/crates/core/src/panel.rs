//! Panel time-series data model and time splits.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use crate::calendar::{CivilDate, WeeklyIndex};
use crate::error::{Error, Result};
use crate::tensor::{MaskedTensor, Tensor3};

/// Descriptive metadata of a dataset on a regular time grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetMeta {
    pub name: String,
    /// UTC seconds since the epoch of timestep 0.
    pub start_time: i64,
    pub granularity_s: u32,
    pub num_timesteps: usize,
    pub num_locations: usize,
    pub num_channels: usize,
    pub channel_names: Vec<String>,
    /// Raw value that encodes a missing observation (e.g. 0.0 for METR-LA).
    pub missing_sentinel: Option<f64>,
    pub holidays: Vec<CivilDate>,
    pub timezone_offset_s: i64,
    /// Set when the grid contains only Monday–Friday days back to back.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "core::ops::Not::not")
    )]
    pub weekdays_only: bool,
}

impl DatasetMeta {
    /// Metadata with default channel names, no sentinel, no holidays and UTC.
    pub fn new(
        name: impl Into<String>,
        start_time: i64,
        granularity_s: u32,
        num_timesteps: usize,
        num_locations: usize,
        num_channels: usize,
    ) -> Self {
        Self {
            name: name.into(),
            start_time,
            granularity_s,
            num_timesteps,
            num_locations,
            num_channels,
            channel_names: (0..num_channels).map(|c| format!("ch{c}")).collect(),
            missing_sentinel: None,
            holidays: Vec::new(),
            timezone_offset_s: 0,
            weekdays_only: false,
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.num_timesteps, self.num_locations, self.num_channels]
    }

    pub fn weekly_index(&self) -> Result<WeeklyIndex> {
        WeeklyIndex::new(self.granularity_s)
    }

    pub fn slots_per_day(&self) -> Result<usize> {
        Ok(self.weekly_index()?.slots_per_day)
    }

    /// Checks the invariants of a loadable dataset (T, N, C ≥ 1).
    pub fn validate(&self) -> Result<()> {
        self.validate_layout()?;
        if self.num_timesteps == 0 {
            return Err(Error::InvalidMeta("num_timesteps must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Same as [`validate`](Self::validate) but allows zero timesteps, which
    /// split parts may have.
    pub fn validate_layout(&self) -> Result<()> {
        self.weekly_index()?;
        if self.num_locations == 0 || self.num_channels == 0 {
            return Err(Error::InvalidMeta(
                "num_locations and num_channels must be ≥ 1".into(),
            ));
        }
        if self.channel_names.len() != self.num_channels {
            return Err(Error::InvalidMeta(format!(
                "{} channel names for {} channels",
                self.channel_names.len(),
                self.num_channels
            )));
        }
        let mut seen = BTreeSet::new();
        for h in &self.holidays {
            if !seen.insert(*h) {
                return Err(Error::InvalidMeta(format!("duplicate holiday {h}")));
            }
        }
        if let Some(s) = self.missing_sentinel {
            if !s.is_finite() {
                return Err(Error::InvalidMeta("missing_sentinel must be finite".into()));
            }
        }
        Ok(())
    }

    /// Metadata of the sub-grid `[range.start, range.end)`.
    pub fn slice(&self, range: Range<usize>) -> Self {
        let mut meta = self.clone();
        meta.num_timesteps = range.len();
        meta.start_time = self.start_time + range.start as i64 * i64::from(self.granularity_s);
        if self.weekdays_only && range.start > 0 {
            // Weekend days are absent from the grid, so re-anchor on the
            // actual local time of the first timestep.
            let cal = crate::calendar::WeeklyCalendar::new(self).expect("validated meta");
            meta.start_time = cal.local_seconds(range.start) - self.timezone_offset_s;
        }
        meta
    }
}

/// A `[T, N, C]` panel of float32 observations plus the derived mask.
///
/// Values are kept exactly as stored; missing cells (sentinel or non-finite)
/// stay in `values` and are flagged `false` in `mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    meta: DatasetMeta,
    values: Tensor3<f32>,
    mask: Tensor3<bool>,
}

impl PanelDataset {
    /// Builds a dataset from row-major `[T, N, C]` values and derives the mask.
    pub fn new(meta: DatasetMeta, values: Vec<f32>) -> Result<Self> {
        meta.validate()?;
        Self::build(meta, values)
    }

    fn build(meta: DatasetMeta, values: Vec<f32>) -> Result<Self> {
        let values = Tensor3::from_vec(meta.shape(), values)?;
        let [_, n_loc, n_ch] = meta.shape();
        let sentinel = meta.missing_sentinel;
        let mut mask = Vec::with_capacity(values.len());
        for (i, &v) in values.as_slice().iter().enumerate() {
            if !v.is_finite() && sentinel.is_none() {
                return Err(Error::NonFinite {
                    t: i / (n_loc * n_ch),
                    n: (i / n_ch) % n_loc,
                    c: i % n_ch,
                });
            }
            mask.push(v.is_finite() && sentinel != Some(f64::from(v)));
        }
        let mask = Tensor3::from_vec(meta.shape(), mask)?;
        Ok(Self { meta, values, mask })
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    /// Replaces the holiday list (e.g. with a registry default).
    pub fn with_holidays(mut self, holidays: Vec<CivilDate>) -> Result<Self> {
        self.meta.holidays = holidays;
        self.meta.validate_layout()?;
        Ok(self)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.values.shape()
    }

    pub fn num_timesteps(&self) -> usize {
        self.meta.num_timesteps
    }

    pub fn raw_values(&self) -> &Tensor3<f32> {
        &self.values
    }

    pub fn mask(&self) -> &Tensor3<bool> {
        &self.mask
    }

    #[inline]
    pub fn value(&self, t: usize, n: usize, c: usize) -> f64 {
        f64::from(*self.values.get(t, n, c))
    }

    #[inline]
    pub fn is_observed(&self, t: usize, n: usize, c: usize) -> bool {
        *self.mask.get(t, n, c)
    }

    pub fn count_observed(&self) -> usize {
        self.mask.as_slice().iter().filter(|m| **m).count()
    }

    /// Timesteps `[range.start, range.end)` as a new dataset.
    pub fn time_slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start > range.end || range.end > self.num_timesteps() {
            return Err(Error::TimestepOutOfRange {
                timestep: range.end,
                len: self.num_timesteps(),
            });
        }
        let w = self.meta.num_locations * self.meta.num_channels;
        let values = self.values.as_slice()[range.start * w..range.end * w].to_vec();
        let mask = self.mask.as_slice()[range.start * w..range.end * w].to_vec();
        let meta = self.meta.slice(range);
        Ok(Self {
            values: Tensor3::from_vec(meta.shape(), values)?,
            mask: Tensor3::from_vec(meta.shape(), mask)?,
            meta,
        })
    }

    /// Appends `next`, which must continue this dataset's grid directly.
    pub fn concat(&self, next: &Self) -> Result<Self> {
        let expected = self.meta.slice(self.num_timesteps()..self.num_timesteps()).start_time;
        let same_layout = self.meta.granularity_s == next.meta.granularity_s
            && self.meta.num_locations == next.meta.num_locations
            && self.meta.num_channels == next.meta.num_channels;
        if !same_layout || (next.num_timesteps() > 0 && next.meta.start_time != expected) {
            return Err(Error::InvalidMeta(
                "concatenated parts must be contiguous with identical layout".into(),
            ));
        }
        let mut meta = self.meta.clone();
        meta.num_timesteps += next.num_timesteps();
        let mut values = self.values.as_slice().to_vec();
        values.extend_from_slice(next.values.as_slice());
        let mut mask = self.mask.as_slice().to_vec();
        mask.extend_from_slice(next.mask.as_slice());
        Ok(Self {
            values: Tensor3::from_vec(meta.shape(), values)?,
            mask: Tensor3::from_vec(meta.shape(), mask)?,
            meta,
        })
    }

    /// Keeps only the listed channels, in the given order.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        let [t_len, n_loc, n_ch] = self.shape();
        if channels.is_empty() || channels.iter().any(|&c| c >= n_ch) {
            return Err(Error::InvalidConfig(format!(
                "channel selection {channels:?} invalid for {n_ch} channels"
            )));
        }
        let mut meta = self.meta.clone();
        meta.num_channels = channels.len();
        meta.channel_names = channels
            .iter()
            .map(|&c| self.meta.channel_names[c].clone())
            .collect();
        let mut values = Vec::with_capacity(t_len * n_loc * channels.len());
        let mut mask = Vec::with_capacity(values.capacity());
        for t in 0..t_len {
            for n in 0..n_loc {
                for &c in channels {
                    values.push(*self.values.get(t, n, c));
                    mask.push(*self.mask.get(t, n, c));
                }
            }
        }
        Ok(Self {
            values: Tensor3::from_vec(meta.shape(), values)?,
            mask: Tensor3::from_vec(meta.shape(), mask)?,
            meta,
        })
    }

    /// Observations at the listed timesteps, as float64 rows.
    pub fn gather(&self, timesteps: &[usize]) -> Result<MaskedTensor> {
        let [t_len, n_loc, n_ch] = self.shape();
        let w = n_loc * n_ch;
        let mut values = Vec::with_capacity(timesteps.len() * w);
        let mut mask = Vec::with_capacity(timesteps.len() * w);
        for &t in timesteps {
            if t >= t_len {
                return Err(Error::TimestepOutOfRange { timestep: t, len: t_len });
            }
            values.extend(self.values.frame(t).iter().map(|&v| f64::from(v)));
            mask.extend_from_slice(self.mask.frame(t));
        }
        let shape = [timesteps.len(), n_loc, n_ch];
        MaskedTensor::new(Tensor3::from_vec(shape, values)?, Tensor3::from_vec(shape, mask)?)
    }

    /// All observations as float64.
    pub fn to_masked(&self) -> MaskedTensor {
        let values = self.values.as_slice().iter().map(|&v| f64::from(v)).collect();
        MaskedTensor {
            values: Tensor3::from_vec(self.shape(), values).expect("same shape"),
            mask: self.mask.clone(),
        }
    }
}

/// How a dataset is cut into train / validation / test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum SplitSpec {
    /// Fractions of T; boundaries are `floor(T * cumulative fraction)`.
    Fractions { train: f64, val: f64, test: f64 },
    /// Whole days of `slots_per_day` timesteps each.
    Days { train: usize, val: usize, test: usize },
}

/// Timestep ranges of the three parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitBounds {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

const FRACTION_EPS: f64 = 1e-9;

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SplitSpec::Fractions { train, val, test } => {
                let ok = train > 0.0 && val >= 0.0 && test > 0.0 && train.is_finite() && val.is_finite() && test.is_finite();
                if !ok || train + val + test > 1.0 + FRACTION_EPS {
                    return Err(Error::InfeasibleSplit(format!(
                        "fractions {train}/{val}/{test} must be positive (val may be 0) and sum to at most 1"
                    )));
                }
            }
            SplitSpec::Days { train, test, .. } => {
                if train == 0 || test == 0 {
                    return Err(Error::InfeasibleSplit(
                        "train and test must span at least one day".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Boundaries for a dataset of `num_timesteps` with `slots_per_day`.
    pub fn bounds(&self, num_timesteps: usize, slots_per_day: usize) -> Result<SplitBounds> {
        self.validate()?;
        let (b1, b2, b3) = match *self {
            SplitSpec::Fractions { train, val, test } => {
                let t = num_timesteps as f64;
                let cut = |f: f64| libm::floor(t * f + FRACTION_EPS) as usize;
                let b1 = cut(train);
                let b2 = cut(train + val);
                let total = train + val + test;
                // Rounding remainder goes to test.
                let b3 = if total >= 1.0 - FRACTION_EPS {
                    num_timesteps
                } else {
                    cut(total)
                };
                (b1, b2.max(b1), b3.min(num_timesteps))
            }
            SplitSpec::Days { train, val, test } => {
                let b3 = (train + val + test) * slots_per_day;
                if b3 > num_timesteps {
                    return Err(Error::InfeasibleSplit(format!(
                        "{train}/{val}/{test} days need {b3} timesteps, dataset has {num_timesteps}"
                    )));
                }
                (train * slots_per_day, (train + val) * slots_per_day, b3)
            }
        };
        if b1 == 0 || b3 <= b2 {
            return Err(Error::InfeasibleSplit(format!(
                "split leaves an empty train or test part ({b1}/{}/{})",
                b2 - b1,
                b3.saturating_sub(b2)
            )));
        }
        Ok(SplitBounds {
            train: 0..b1,
            val: b1..b2,
            test: b2..b3,
        })
    }

    pub fn has_val(&self) -> bool {
        match *self {
            SplitSpec::Fractions { val, .. } => val > 0.0,
            SplitSpec::Days { val, .. } => val > 0,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            SplitSpec::Fractions { train, val, test } => {
                format!("{}/{}/{} %", train * 100.0, val * 100.0, test * 100.0)
            }
            SplitSpec::Days { train, val, test } => format!("{train}/{val}/{test} days"),
        }
        .to_string()
    }
}

/// The three parts of a split dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub bounds: SplitBounds,
    pub train: PanelDataset,
    pub val: PanelDataset,
    pub test: PanelDataset,
}

impl Split {
    /// Train followed by validation (just train when validation is empty).
    pub fn train_val(&self) -> Result<PanelDataset> {
        if self.val.num_timesteps() == 0 {
            Ok(self.train.clone())
        } else {
            self.train.concat(&self.val)
        }
    }
}

/// Cuts `ds` into contiguous, ordered train / validation / test parts.
pub fn split(ds: &PanelDataset, spec: &SplitSpec) -> Result<Split> {
    let bounds = spec.bounds(ds.num_timesteps(), ds.meta().slots_per_day()?)?;
    Ok(Split {
        train: ds.time_slice(bounds.train.clone())?,
        val: ds.time_slice(bounds.val.clone())?,
        test: ds.time_slice(bounds.test.clone())?,
        bounds,
    })
}
