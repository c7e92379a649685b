//! Order-`h` linear autoregression on seasonal residuals (the "+LR" of HA+LR).
//!
//! A residual `y'_t` is regressed on the `h` residuals that precede the
//! forecast origin. With the `direct` strategy every horizon `k` gets its own
//! weights, fitted on targets `k` steps past the last lag; with `recursive`
//! only the one-step model is fitted and rolled forward at prediction time.
//! Lag columns are always ordered most recent first, followed by the
//! intercept when one is fitted.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::lstsq::{linear_predict, penalty_mask, DesignMatrix, QrAccumulator};
use crate::panel::PanelDataset;
use crate::seasonal::{reconstruct, residualize, ResidualTransform, SeasonalProfile};
use crate::tensor::{MaskedTensor, Tensor3};

pub const DEFAULT_LAG_ORDER: usize = 12;
pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Strategy {
    /// One regression per horizon.
    #[default]
    Direct,
    /// One-step regression iterated, feeding predictions back as lags.
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scope {
    /// A single weight vector shared by every location and channel.
    #[default]
    Pooled,
    /// Independent weights per location (channels of a location are pooled).
    PerLocation,
}

/// What to do when a lag needed at prediction time is unobserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MissingLags {
    /// Mask the forecast of that series at that origin.
    #[default]
    Mask,
    /// Use a zero residual, i.e. the historical average, for the missing lag.
    ZeroFill,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionConfig {
    pub lag_order: usize,
    /// Steps ahead, ascending.
    pub horizons: Vec<usize>,
    pub strategy: Strategy,
    pub scope: Scope,
    pub ridge: f64,
    pub include_intercept: bool,
    #[cfg_attr(feature = "serde", serde(default))]
    pub missing_lags: MissingLags,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            lag_order: DEFAULT_LAG_ORDER,
            horizons: vec![1],
            strategy: Strategy::Direct,
            scope: Scope::Pooled,
            ridge: DEFAULT_RIDGE,
            include_intercept: true,
            missing_lags: MissingLags::Mask,
        }
    }
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lag_order == 0 {
            return Err(Error::InvalidConfig("lag order must be ≥ 1".into()));
        }
        if self.horizons.is_empty() || self.horizons[0] == 0 {
            return Err(Error::InvalidConfig("horizons must be non-empty and ≥ 1".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "horizons must be strictly ascending, got {:?}",
                self.horizons
            )));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::InvalidConfig("ridge must be a finite value ≥ 0".into()));
        }
        Ok(())
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.last().copied().unwrap_or(1)
    }

    /// Weight vector length: lags plus the optional intercept.
    pub fn num_weights(&self) -> usize {
        self.lag_order + usize::from(self.include_intercept)
    }

    fn fitted_horizons(&self) -> Vec<usize> {
        match self.strategy {
            Strategy::Direct => self.horizons.clone(),
            Strategy::Recursive => vec![1],
        }
    }
}

/// Explicit lag design with the `(t, n, c)` cell each row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LagDesign {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub provenance: Vec<[usize; 3]>,
}

/// Visits every `(series, t)` whose target `y'_t` and lags
/// `y'_{t-k}, …, y'_{t-k-h+1}` are all observed. Series are visited location
/// by location, channels inside a location, time ascending.
fn for_each_lag_row<F>(
    residuals: &MaskedTensor,
    lags: usize,
    horizon: usize,
    locations: Range<usize>,
    mut visit: F,
) where
    F: FnMut(usize, &[f64], f64, [usize; 3]),
{
    let [t_len, _, n_ch] = residuals.shape();
    let first = lags + horizon - 1;
    if t_len <= first {
        return;
    }
    let mut series = vec![0.0; t_len];
    let mut observed = vec![false; t_len];
    let mut runs = vec![0usize; t_len];
    let mut row = vec![0.0; lags];
    for n in locations {
        for c in 0..n_ch {
            for t in 0..t_len {
                let i = residuals.values.offset(t, n, c);
                series[t] = residuals.values.as_slice()[i];
                observed[t] = residuals.mask.as_slice()[i];
            }
            // Length of the observed run ending at each t, so a row is valid
            // iff the run ending at the last lag covers all lags.
            let mut run = 0usize;
            for t in 0..t_len {
                run = if observed[t] { run + 1 } else { 0 };
                runs[t] = run;
            }
            for t in first..t_len {
                let last_lag = t - horizon;
                if !observed[t] || runs[last_lag] < lags {
                    continue;
                }
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = series[last_lag - j];
                }
                visit(n, &row, series[t], [t, n, c]);
            }
        }
    }
}

/// Materialises the lag design for horizon `horizon` over all series.
pub fn build_lag_matrix(residuals: &MaskedTensor, lags: usize, horizon: usize) -> Result<LagDesign> {
    if lags == 0 || horizon == 0 {
        return Err(Error::InvalidConfig("lag order and horizon must be ≥ 1".into()));
    }
    let n_loc = residuals.shape()[1];
    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut provenance = Vec::new();
    for_each_lag_row(residuals, lags, horizon, 0..n_loc, |_, row, target, cell| {
        data.extend_from_slice(row);
        y.push(target);
        provenance.push(cell);
    });
    if y.is_empty() {
        return Err(Error::EmptyDesign { lags, horizon });
    }
    Ok(LagDesign {
        x: DesignMatrix::new(y.len(), lags, data)?,
        y,
        provenance,
    })
}

/// Fitted weights for one horizon.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HorizonFit {
    pub horizon: usize,
    /// One entry when pooled, one per location otherwise. `None` marks a
    /// location without enough observed rows to fit.
    pub weights: Vec<Option<Vec<f64>>>,
    pub rows: usize,
    pub in_sample_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualRegressionModel {
    pub config: RegressionConfig,
    pub fits: Vec<HorizonFit>,
}

/// Fits the residual autoregression described by `config`.
pub fn fit_halr(residuals: &MaskedTensor, config: &RegressionConfig) -> Result<ResidualRegressionModel> {
    config.validate()?;
    let n_loc = residuals.shape()[1];
    let h = config.lag_order;
    let cols = config.num_weights();
    let penalized = penalty_mask(h, config.include_intercept);
    let groups: Vec<Range<usize>> = match config.scope {
        Scope::Pooled => core::iter::once(0..n_loc).collect(),
        Scope::PerLocation => (0..n_loc).map(|n| n..n + 1).collect(),
    };

    let mut fits = Vec::new();
    for k in config.fitted_horizons() {
        let mut row_buf = vec![1.0; cols];
        let mut weights = Vec::with_capacity(groups.len());
        let mut rows = 0usize;
        let mut sse = 0.0;
        let mut last_err = Error::EmptyDesign { lags: h, horizon: k };
        for group in &groups {
            let mut acc = QrAccumulator::new(cols);
            for_each_lag_row(residuals, h, k, group.clone(), |_, lags, target, _| {
                row_buf[..h].copy_from_slice(lags);
                acc.push(&row_buf, target);
            });
            let solved = if acc.rows() == 0 {
                Err(Error::EmptyDesign { lags: h, horizon: k })
            } else if acc.rows() < cols {
                Err(Error::Underdetermined { rows: acc.rows(), cols })
            } else {
                acc.solve(config.ridge, &penalized)
            };
            match solved {
                Ok(w) => {
                    for_each_lag_row(residuals, h, k, group.clone(), |_, lags, target, _| {
                        let e = target - linear_predict(&w, lags);
                        sse += e * e;
                    });
                    rows += acc.rows();
                    weights.push(Some(w));
                }
                Err(e @ (Error::EmptyDesign { .. } | Error::Underdetermined { .. }))
                    if config.scope == Scope::PerLocation =>
                {
                    last_err = e;
                    weights.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        if rows == 0 {
            return Err(last_err);
        }
        fits.push(HorizonFit {
            horizon: k,
            weights,
            rows,
            in_sample_rmse: libm::sqrt(sse / rows as f64),
        });
    }
    Ok(ResidualRegressionModel {
        config: config.clone(),
        fits,
    })
}

impl ResidualRegressionModel {
    fn weights(&self, fit: usize, location: usize) -> Option<&[f64]> {
        let w = &self.fits[fit].weights;
        let idx = match self.config.scope {
            Scope::Pooled => 0,
            Scope::PerLocation => location,
        };
        w.get(idx).and_then(|w| w.as_deref())
    }

    /// Residual forecasts, one per configured horizon.
    ///
    /// `history` is chronological (last entry is the most recent residual);
    /// only its last `lag_order` entries are used.
    pub fn predict(&self, location: usize, history: &[f64], history_mask: &[bool]) -> Vec<Option<f64>> {
        let h = self.config.lag_order;
        let mut out = vec![None; self.config.horizons.len()];
        if history.len() < h || history_mask.len() != history.len() {
            return out;
        }
        let mut lags = Vec::with_capacity(h);
        for j in 0..h {
            let i = history.len() - 1 - j;
            match (history_mask[i], self.config.missing_lags) {
                (true, _) => lags.push(history[i]),
                (false, MissingLags::ZeroFill) => lags.push(0.0),
                (false, MissingLags::Mask) => return out,
            }
        }
        self.predict_from_lags(location, &mut lags, &mut out);
        out
    }

    /// `lags` is most-recent-first and is clobbered by the recursive rollout.
    fn predict_from_lags(&self, location: usize, lags: &mut [f64], out: &mut [Option<f64>]) {
        match self.config.strategy {
            Strategy::Direct => {
                for (slot, fit) in out.iter_mut().zip(0..self.fits.len()) {
                    *slot = self.weights(fit, location).map(|w| linear_predict(w, lags));
                }
            }
            Strategy::Recursive => {
                let Some(w) = self.weights(0, location) else {
                    out.iter_mut().for_each(|o| *o = None);
                    return;
                };
                let mut next = 0;
                for step in 1..=self.config.max_horizon() {
                    let yhat = linear_predict(w, lags);
                    if self.config.horizons[next] == step {
                        out[next] = Some(yhat);
                        next += 1;
                    }
                    lags.rotate_right(1);
                    lags[0] = yhat;
                }
            }
        }
    }
}

/// Forecast origins whose lags and every horizon's target fall in `window`.
///
/// An origin `o` uses lags `o-h .. o` and predicts `o + k - 1` for horizon `k`.
pub fn admissible_origins(window: Range<usize>, lags: usize, max_horizon: usize) -> Result<Range<usize>> {
    let start = window.start + lags;
    let end = (window.end + 1).saturating_sub(max_horizon);
    if max_horizon == 0 || start >= end {
        return Err(Error::InvalidConfig(format!(
            "window {window:?} too short for {lags} lags and horizon {max_horizon}"
        )));
    }
    Ok(start..end)
}

/// Original-domain forecasts for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonForecast {
    pub horizon: usize,
    /// Target timestep of each row.
    pub target_times: Vec<usize>,
    /// `[origins, N, C]`.
    pub forecast: MaskedTensor,
}

/// Rolling HA+LR forecasts from every origin in `origins`.
///
/// Lags are always the observed residuals of `panel` (never earlier
/// predictions), except inside a recursive rollout.
pub fn forecast_halr(
    panel: &PanelDataset,
    profile: &SeasonalProfile,
    model: &ResidualRegressionModel,
    transform: ResidualTransform,
    origins: Range<usize>,
) -> Result<Vec<HorizonForecast>> {
    let config = &model.config;
    config.validate()?;
    let h = config.lag_order;
    let max_k = config.max_horizon();
    if origins.is_empty() || origins.start < h || origins.end - 1 + max_k > panel.num_timesteps() {
        return Err(Error::InvalidConfig(format!(
            "origins {origins:?} need lags and targets inside 0..{}",
            panel.num_timesteps()
        )));
    }
    // Only the span touched by lags and targets is residualized.
    let base = origins.start - h;
    let span = panel.time_slice(base..origins.end - 1 + max_k)?;
    let residuals = residualize(&span, profile, transform)?;

    let [_, n_loc, n_ch] = panel.shape();
    let n_orig = origins.len();
    let mut per_horizon: Vec<MaskedTensor> = config
        .horizons
        .iter()
        .map(|_| MaskedTensor::empty([n_orig, n_loc, n_ch]))
        .collect();
    let mut lags = vec![0.0; h];
    let mut out = vec![None; config.horizons.len()];
    for (row, o) in origins.clone().enumerate() {
        let local = o - base;
        for n in 0..n_loc {
            for c in 0..n_ch {
                let mut usable = true;
                for (j, lag) in lags.iter_mut().enumerate() {
                    match residuals.observed(local - 1 - j, n, c) {
                        Some(v) => *lag = v,
                        None if config.missing_lags == MissingLags::ZeroFill => *lag = 0.0,
                        None => {
                            usable = false;
                            break;
                        }
                    }
                }
                if !usable {
                    continue;
                }
                model.predict_from_lags(n, &mut lags, &mut out);
                for (pred, target) in out.iter().zip(per_horizon.iter_mut()) {
                    if let Some(v) = pred {
                        target.values.set(row, n, c, *v);
                        target.mask.set(row, n, c, true);
                    }
                }
            }
        }
    }

    config
        .horizons
        .iter()
        .zip(per_horizon)
        .map(|(&k, residual)| {
            let target_times: Vec<usize> = origins.clone().map(|o| o + k - 1).collect();
            let forecast = reconstruct(&residual, profile, panel.meta(), &target_times, transform)?;
            Ok(HorizonForecast {
                horizon: k,
                target_times,
                forecast,
            })
        })
        .collect()
}

/// Residual tensor with every cell observed, for tests and callers that
/// already hold clean residuals.
pub fn fully_observed(values: Tensor3<f64>) -> MaskedTensor {
    let mask = Tensor3::filled(values.shape(), true);
    MaskedTensor { values, mask }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::DatasetMeta;
    use crate::seasonal::{fit_profile, ha_forecast};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn series(v: &[f64]) -> MaskedTensor {
        fully_observed(Tensor3::from_vec([v.len(), 1, 1], v.to_vec()).unwrap())
    }

    fn gaussian(rng: &mut StdRng) -> f64 {
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    fn config(h: usize, horizons: &[usize], strategy: Strategy) -> RegressionConfig {
        RegressionConfig {
            lag_order: h,
            horizons: horizons.to_vec(),
            strategy,
            ..Default::default()
        }
    }

    #[test]
    fn lag_matrix_one_step() {
        let d = build_lag_matrix(&series(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2, 1).unwrap();
        assert_eq!(d.x, DesignMatrix::from_rows(&[[2.0, 1.0], [3.0, 2.0], [4.0, 3.0]]).unwrap());
        assert_eq!(d.y, vec![3.0, 4.0, 5.0]);
        assert_eq!(d.provenance, vec![[2, 0, 0], [3, 0, 0], [4, 0, 0]]);
    }

    #[test]
    fn lag_matrix_two_steps() {
        let d = build_lag_matrix(&series(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2, 2).unwrap();
        assert_eq!(d.x, DesignMatrix::from_rows(&[[2.0, 1.0], [3.0, 2.0]]).unwrap());
        assert_eq!(d.y, vec![4.0, 5.0]);
    }

    #[test]
    fn lag_matrix_skips_masked() {
        let mut r = series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        r.mask.set(2, 0, 0, false);
        let d = build_lag_matrix(&r, 2, 1).unwrap();
        // rows targeting t=2, 3, 4 touch y'_2
        assert_eq!(d.y, vec![6.0]);
        assert_eq!(d.x.row(0), &[5.0, 4.0]);
    }

    #[test]
    fn lag_matrix_empty() {
        assert_eq!(
            build_lag_matrix(&series(&[1.0, 2.0]), 2, 1),
            Err(Error::EmptyDesign { lags: 2, horizon: 1 })
        );
    }

    #[test]
    fn lag_matrix_stacks_locations() {
        let v = Tensor3::from_vec([3, 2, 1], vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0]).unwrap();
        let d = build_lag_matrix(&fully_observed(v), 1, 1).unwrap();
        assert_eq!(d.y, vec![2.0, 3.0, 20.0, 30.0]);
        assert_eq!(d.provenance[2], [1, 1, 0]);
    }

    fn ar1(phi: f64, sigma: f64, len: usize, n: usize, seed: u64) -> MaskedTensor {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut v = vec![0.0; len * n];
        for l in 0..n {
            let mut x = 0.0;
            for t in 0..len {
                x = phi * x + sigma * gaussian(&mut rng);
                v[t * n + l] = x;
            }
        }
        fully_observed(Tensor3::from_vec([len, n, 1], v).unwrap())
    }

    #[test]
    fn recovers_ar1_coefficient() {
        let r = ar1(0.8, 0.01, 4000, 5, 1);
        let m = fit_halr(&r, &config(1, &[1], Strategy::Direct)).unwrap();
        let w = m.fits[0].weights[0].as_ref().unwrap();
        assert!((w[0] - 0.8).abs() < 0.01, "{w:?}");
        assert!(w[1].abs() < 1e-3);
        assert!((m.fits[0].in_sample_rmse - 0.01).abs() < 5e-4);
    }

    #[test]
    fn recovers_ar2_within_standard_errors() {
        // y_t = 0.5 y_{t-1} + 0.3 y_{t-2} + e
        let (p1, p2) = (0.5, 0.3);
        let mut rng = StdRng::seed_from_u64(5);
        let len = 20_000;
        let mut v = vec![0.0; len];
        for t in 2..len {
            v[t] = p1 * v[t - 1] + p2 * v[t - 2] + gaussian(&mut rng);
        }
        let m = fit_halr(&series(&v), &config(2, &[1], Strategy::Direct)).unwrap();
        let w = m.fits[0].weights[0].as_ref().unwrap();
        // Var(y) for this AR(2) and the resulting asymptotic standard error
        // sqrt((1 - p2^2) / n) of either coefficient.
        let se = libm::sqrt((1.0 - p2 * p2) / len as f64);
        assert!((w[0] - p1).abs() < 3.0 * se, "{w:?} se {se}");
        assert!((w[1] - p2).abs() < 3.0 * se, "{w:?} se {se}");
    }

    #[test]
    fn zero_residuals_zero_weights() {
        let r = fully_observed(Tensor3::filled([200, 3, 1], 0.0));
        let m = fit_halr(&r, &config(4, &[1, 2], Strategy::Direct)).unwrap();
        for fit in &m.fits {
            assert!(fit.weights[0].as_ref().unwrap().iter().all(|w| *w == 0.0));
            assert_eq!(fit.in_sample_rmse, 0.0);
        }
        let mut cfg = config(4, &[1], Strategy::Direct);
        cfg.ridge = 0.0;
        assert!(matches!(fit_halr(&r, &cfg), Err(Error::RankDeficient { .. })));
    }

    fn fixed_model(w: f64, strategy: Strategy, horizons: &[usize]) -> ResidualRegressionModel {
        let mut cfg = config(1, horizons, strategy);
        cfg.include_intercept = false;
        let n_fits = if strategy == Strategy::Direct { horizons.len() } else { 1 };
        ResidualRegressionModel {
            fits: (0..n_fits)
                .map(|i| HorizonFit {
                    horizon: horizons[i],
                    weights: vec![Some(vec![w])],
                    rows: 0,
                    in_sample_rmse: 0.0,
                })
                .collect(),
            config: cfg,
        }
    }

    #[test]
    fn predict_direct_and_recursive() {
        let m = fixed_model(0.5, Strategy::Direct, &[1]);
        assert_eq!(m.predict(0, &[9.0, 2.0], &[true, true]), vec![Some(1.0)]);
        let m = fixed_model(0.5, Strategy::Recursive, &[1, 2]);
        assert_eq!(m.predict(0, &[2.0], &[true]), vec![Some(1.0), Some(0.5)]);
        let m = fixed_model(0.0, Strategy::Direct, &[1]);
        assert_eq!(m.predict(0, &[3.0], &[true]), vec![Some(0.0)]);
    }

    #[test]
    fn predict_masks_missing_history() {
        let mut m = fixed_model(0.5, Strategy::Direct, &[1]);
        assert_eq!(m.predict(0, &[2.0], &[false]), vec![None]);
        assert_eq!(m.predict(0, &[], &[]), vec![None]);
        m.config.missing_lags = MissingLags::ZeroFill;
        assert_eq!(m.predict(0, &[2.0], &[false]), vec![Some(0.0)]);
    }

    #[test]
    fn direct_and_recursive_agree_at_one_step() {
        let r = ar1(0.6, 1.0, 800, 3, 9);
        let d = fit_halr(&r, &config(3, &[1, 2, 3], Strategy::Direct)).unwrap();
        let rc = fit_halr(&r, &config(3, &[1, 2, 3], Strategy::Recursive)).unwrap();
        assert_eq!(d.fits[0], rc.fits[0]);
        let hist = [0.3, -0.2, 0.9];
        assert_eq!(d.predict(0, &hist, &[true; 3])[0], rc.predict(0, &hist, &[true; 3])[0]);
    }

    #[test]
    fn per_location_fits_are_independent() {
        // location 0 follows phi = 0.9, location 1 phi = -0.5
        let a = ar1(0.9, 1.0, 3000, 1, 2);
        let b = ar1(-0.5, 1.0, 3000, 1, 3);
        let mut v = Vec::with_capacity(6000);
        for t in 0..3000 {
            v.push(*a.values.get(t, 0, 0));
            v.push(*b.values.get(t, 0, 0));
        }
        let r = fully_observed(Tensor3::from_vec([3000, 2, 1], v).unwrap());
        let mut cfg = config(1, &[1], Strategy::Direct);
        cfg.scope = Scope::PerLocation;
        let m = fit_halr(&r, &cfg).unwrap();
        assert!((m.fits[0].weights[0].as_ref().unwrap()[0] - 0.9).abs() < 0.05);
        assert!((m.fits[0].weights[1].as_ref().unwrap()[0] + 0.5).abs() < 0.05);
    }

    #[test]
    fn per_location_tolerates_empty_location() {
        let mut r = ar1(0.5, 1.0, 300, 2, 4);
        for t in 0..300 {
            r.mask.set(t, 1, 0, false);
        }
        let mut cfg = config(2, &[1], Strategy::Direct);
        cfg.scope = Scope::PerLocation;
        let m = fit_halr(&r, &cfg).unwrap();
        assert!(m.fits[0].weights[0].is_some());
        assert!(m.fits[0].weights[1].is_none());
        assert_eq!(m.predict(1, &[1.0, 1.0], &[true, true]), vec![None]);
    }

    #[test]
    fn admissible_origin_bounds() {
        assert_eq!(admissible_origins(100..200, 12, 12).unwrap(), 112..189);
        assert_eq!(admissible_origins(0..5, 2, 1).unwrap(), 2..5);
        assert!(admissible_origins(0..5, 4, 3).is_err());
    }

    #[test]
    fn periodic_data_forecasts_equal_ha() {
        let weeks = 5;
        let t_len = weeks * 168;
        let meta = DatasetMeta::new("p", 19_723 * 86_400, 3600, t_len, 2, 1);
        let v = (0..t_len * 2).map(|i| ((i / 2) % 168) as f32 + (i % 2) as f32 * 7.0).collect();
        let ds = PanelDataset::new(meta, v).unwrap();
        let train = ds.time_slice(0..4 * 168).unwrap();
        let profile = fit_profile(&train).unwrap();
        let res = residualize(&train, &profile, ResidualTransform::default()).unwrap();
        let cfg = config(12, &[1, 3], Strategy::Direct);
        let model = fit_halr(&res, &cfg).unwrap();
        let origins = admissible_origins(4 * 168..t_len, 12, 3).unwrap();
        let out = forecast_halr(&ds, &profile, &model, ResidualTransform::default(), origins).unwrap();
        for f in &out {
            let ha = ha_forecast(&profile, ds.meta(), &f.target_times).unwrap();
            assert_eq!(f.forecast, ha);
            let truth = ds.gather(&f.target_times).unwrap();
            assert_eq!(f.forecast.values, truth.values);
        }
    }
}
