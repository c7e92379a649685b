//! Weekly recurrent pattern: per-slot mean and spread, and the transforms
//! between observations and residuals.

use alloc::format;
use alloc::vec::Vec;

use crate::calendar::{WeeklyCalendar, WeeklyIndex};
use crate::error::{Error, Result};
use crate::panel::{DatasetMeta, PanelDataset};
use crate::tensor::{MaskedTensor, Tensor3};

/// Default lower bound applied to the slot standard deviation when
/// residuals are normalized.
pub const DEFAULT_S_FLOOR: f64 = 1e-3;

/// Mean, population standard deviation and observation count for every
/// `(weekly slot, location, channel)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalProfile {
    granularity_s: u32,
    mean: Tensor3<f64>,
    std: Tensor3<f64>,
    count: Tensor3<u32>,
}

impl SeasonalProfile {
    /// Assembles a profile from stored parts (e.g. a profile file).
    pub fn from_parts(
        granularity_s: u32,
        mean: Tensor3<f64>,
        std: Tensor3<f64>,
        count: Tensor3<u32>,
    ) -> Result<Self> {
        let index = WeeklyIndex::new(granularity_s)?;
        let shape = mean.shape();
        if shape[0] != index.slots_per_week || std.shape() != shape || count.shape() != shape {
            return Err(Error::ProfileMismatch(format!(
                "profile tensors must all be [{}, N, C]",
                index.slots_per_week
            )));
        }
        if std.as_slice().iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::ProfileMismatch("negative or NaN std".into()));
        }
        Ok(Self {
            granularity_s,
            mean,
            std,
            count,
        })
    }

    pub fn granularity_s(&self) -> u32 {
        self.granularity_s
    }

    /// `[slots_per_week, N, C]`.
    pub fn shape(&self) -> [usize; 3] {
        self.mean.shape()
    }

    pub fn mean(&self) -> &Tensor3<f64> {
        &self.mean
    }

    pub fn std(&self) -> &Tensor3<f64> {
        &self.std
    }

    pub fn count(&self) -> &Tensor3<u32> {
        &self.count
    }

    /// Number of cells that were never observed (mean and std undefined).
    pub fn empty_cells(&self) -> usize {
        self.count.as_slice().iter().filter(|c| **c == 0).count()
    }

    fn check(&self, meta: &DatasetMeta) -> Result<()> {
        let [_, n, c] = self.shape();
        if meta.granularity_s != self.granularity_s {
            return Err(Error::ProfileMismatch(format!(
                "granularity {}s vs panel {}s",
                self.granularity_s, meta.granularity_s
            )));
        }
        if meta.num_locations != n || meta.num_channels != c {
            return Err(Error::ProfileMismatch(format!(
                "profile has {n} locations × {c} channels, panel {} × {}",
                meta.num_locations, meta.num_channels
            )));
        }
        Ok(())
    }
}

/// Residual scaling: plain `y - a`, or `(y - a) / max(s, s_floor)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualTransform {
    pub normalized: bool,
    pub s_floor: f64,
}

impl Default for ResidualTransform {
    fn default() -> Self {
        Self {
            normalized: false,
            s_floor: DEFAULT_S_FLOOR,
        }
    }
}

impl ResidualTransform {
    pub fn normalized(s_floor: f64) -> Self {
        Self {
            normalized: true,
            s_floor,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.s_floor > 0.0) {
            return Err(Error::InvalidConfig("s_floor must be > 0".into()));
        }
        Ok(())
    }

    #[inline]
    fn scale(&self, std: f64) -> f64 {
        if self.normalized {
            std.max(self.s_floor)
        } else {
            1.0
        }
    }
}

/// Estimates the weekly pattern from every observed cell of `fit_data`.
///
/// Callers pass the training part, or training and validation concatenated.
pub fn fit_profile(fit_data: &PanelDataset) -> Result<SeasonalProfile> {
    let meta = fit_data.meta();
    let calendar = WeeklyCalendar::new(meta)?;
    let [t_len, n_loc, n_ch] = fit_data.shape();
    let shape = [calendar.index().slots_per_week, n_loc, n_ch];
    let slots = calendar.slots();

    let mut sum = Tensor3::filled(shape, 0.0f64);
    let mut count = Tensor3::filled(shape, 0u32);
    for (t, &slot) in slots.iter().enumerate().take(t_len) {
        let values = fit_data.raw_values().frame(t);
        let mask = fit_data.mask().frame(t);
        let acc = sum.frame_mut(slot);
        let cnt = count.frame_mut(slot);
        for i in 0..values.len() {
            if mask[i] {
                acc[i] += f64::from(values[i]);
                cnt[i] += 1;
            }
        }
    }

    let mut mean = sum;
    for (m, &c) in mean.as_mut_slice().iter_mut().zip(count.as_slice()) {
        *m = if c > 0 { *m / f64::from(c) } else { 0.0 };
    }

    // Second pass for the spread around the already-computed mean.
    let mut sq = Tensor3::filled(shape, 0.0f64);
    for (t, &slot) in slots.iter().enumerate().take(t_len) {
        let values = fit_data.raw_values().frame(t);
        let mask = fit_data.mask().frame(t);
        let mu = mean.frame(slot);
        let acc = sq.frame_mut(slot);
        for i in 0..values.len() {
            if mask[i] {
                let d = f64::from(values[i]) - mu[i];
                acc[i] += d * d;
            }
        }
    }
    let mut std = sq;
    for (s, &c) in std.as_mut_slice().iter_mut().zip(count.as_slice()) {
        *s = if c > 0 { libm::sqrt(*s / f64::from(c)) } else { 0.0 };
    }

    Ok(SeasonalProfile {
        granularity_s: meta.granularity_s,
        mean,
        std,
        count,
    })
}

/// Removes the weekly pattern from every cell of `panel`.
///
/// The output mask is the panel mask restricted to cells whose slot was
/// observed during fitting.
pub fn residualize(
    panel: &PanelDataset,
    profile: &SeasonalProfile,
    transform: ResidualTransform,
) -> Result<MaskedTensor> {
    profile.check(panel.meta())?;
    transform.validate()?;
    let calendar = WeeklyCalendar::new(panel.meta())?;
    let shape = panel.shape();
    let mut values = Tensor3::filled(shape, 0.0f64);
    let mut mask = Tensor3::filled(shape, false);
    for t in 0..shape[0] {
        let slot = calendar.slot(t);
        let raw = panel.raw_values().frame(t);
        let observed = panel.mask().frame(t);
        let (mu, sd, cnt) = (profile.mean.frame(slot), profile.std.frame(slot), profile.count.frame(slot));
        let out = values.frame_mut(t);
        for i in 0..raw.len() {
            if observed[i] && cnt[i] > 0 {
                out[i] = (f64::from(raw[i]) - mu[i]) / transform.scale(sd[i]);
            }
        }
        for (m, (&o, &c)) in mask.frame_mut(t).iter_mut().zip(observed.iter().zip(cnt)) {
            *m = o && c > 0;
        }
    }
    MaskedTensor::new(values, mask)
}

/// Maps residual-domain rows back to observations.
///
/// Row `i` of `residuals` belongs to timestep `timesteps[i]` of the grid
/// described by `meta`. Cells are masked when the residual is masked or the
/// slot has no profile observations.
pub fn reconstruct(
    residuals: &MaskedTensor,
    profile: &SeasonalProfile,
    meta: &DatasetMeta,
    timesteps: &[usize],
    transform: ResidualTransform,
) -> Result<MaskedTensor> {
    profile.check(meta)?;
    transform.validate()?;
    let shape = residuals.shape();
    if shape[0] != timesteps.len() || shape[1] != meta.num_locations || shape[2] != meta.num_channels {
        return Err(Error::ShapeMismatch {
            expected: timesteps.len() * meta.num_locations * meta.num_channels,
            found: residuals.values.len(),
        });
    }
    let calendar = WeeklyCalendar::new(meta)?;
    let mut out = MaskedTensor::empty(shape);
    for (row, &t) in timesteps.iter().enumerate() {
        let slot = calendar.slot(t);
        let (mu, sd, cnt) = (profile.mean.frame(slot), profile.std.frame(slot), profile.count.frame(slot));
        let r = residuals.values.frame(row);
        let rm = residuals.mask.frame(row);
        let ov = out.values.frame_mut(row);
        for i in 0..r.len() {
            if rm[i] && cnt[i] > 0 {
                ov[i] = r[i] * transform.scale(sd[i]) + mu[i];
            }
        }
        for (m, (&o, &c)) in out.mask.frame_mut(row).iter_mut().zip(rm.iter().zip(cnt)) {
            *m = o && c > 0;
        }
    }
    Ok(out)
}

/// Historical-average forecast: the slot mean at each requested timestep.
pub fn ha_forecast(
    profile: &SeasonalProfile,
    meta: &DatasetMeta,
    timesteps: &[usize],
) -> Result<MaskedTensor> {
    profile.check(meta)?;
    let calendar = WeeklyCalendar::new(meta)?;
    let [_, n_loc, n_ch] = profile.shape();
    let mut values = Vec::with_capacity(timesteps.len() * n_loc * n_ch);
    let mut mask = Vec::with_capacity(values.capacity());
    for &t in timesteps {
        let slot = calendar.slot(t);
        values.extend_from_slice(profile.mean.frame(slot));
        mask.extend(profile.count.frame(slot).iter().map(|&c| c > 0));
    }
    let shape = [timesteps.len(), n_loc, n_ch];
    MaskedTensor::new(Tensor3::from_vec(shape, values)?, Tensor3::from_vec(shape, mask)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const HOUR: u32 = 3600;

    fn hourly(weeks: usize, n: usize, mut f: impl FnMut(usize, usize) -> f32) -> PanelDataset {
        let t_len = weeks * 168;
        let meta = DatasetMeta::new("s", 19_723 * 86_400, HOUR, t_len, n, 1);
        let values = (0..t_len).flat_map(|t| (0..n).map(move |l| (t, l))).map(|(t, l)| f(t, l)).collect();
        PanelDataset::new(meta, values).unwrap()
    }

    fn pattern(t: usize, l: usize) -> f32 {
        ((t % 168) as f32 * 0.25) + l as f32
    }

    #[test]
    fn identical_weeks_give_zero_std() {
        let ds = hourly(2, 3, pattern);
        let p = fit_profile(&ds).unwrap();
        assert!(p.std().as_slice().iter().all(|s| *s == 0.0));
        assert!(p.count().as_slice().iter().all(|c| *c == 2));
        assert_eq!(*p.mean().get(5, 2, 0), f64::from(pattern(5, 2)));
    }

    #[test]
    fn single_week_profile_is_the_data() {
        let ds = hourly(1, 2, pattern);
        let p = fit_profile(&ds).unwrap();
        for t in 0..168 {
            assert_eq!(*p.mean().get(t, 1, 0), f64::from(pattern(t, 1)));
            assert_eq!(*p.count().get(t, 1, 0), 1);
            assert_eq!(*p.std().get(t, 1, 0), 0.0);
        }
    }

    #[test]
    fn population_std() {
        // two weeks: value 1 then 3 at each slot → mean 2, std 1
        let ds = hourly(2, 1, |t, _| if t < 168 { 1.0 } else { 3.0 });
        let p = fit_profile(&ds).unwrap();
        assert_eq!(*p.mean().get(10, 0, 0), 2.0);
        assert_eq!(*p.std().get(10, 0, 0), 1.0);
    }

    #[test]
    fn noisy_profile_recovers_pattern() {
        // Eight weeks of pattern + N(0, 1) noise; the slot mean should be
        // within 3/sqrt(8) of the pattern for at least 99% of cells.
        let mut rng = StdRng::seed_from_u64(7);
        let n = 20;
        let mut noise = vec![0.0f32; 8 * 168 * n];
        for v in noise.iter_mut() {
            let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(1e-300), rng.gen());
            *v = (libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)) as f32;
        }
        let ds = hourly(8, n, |t, l| pattern(t, l) * 4.0 + noise[t * n + l]);
        let p = fit_profile(&ds).unwrap();
        let bound = 3.0 / libm::sqrt(8.0);
        let mut within = 0;
        for s in 0..168 {
            for l in 0..n {
                if (p.mean().get(s, l, 0) - f64::from(pattern(s, l) * 4.0)).abs() <= bound {
                    within += 1;
                }
            }
        }
        assert!(within as f64 >= 0.99 * (168 * n) as f64, "{within}");
    }

    #[test]
    fn masked_entries_do_not_affect_profile() {
        let mut meta = DatasetMeta::new("m", 19_723 * 86_400, HOUR, 336, 1, 1);
        meta.missing_sentinel = Some(-1.0);
        let clean: Vec<f32> = (0..336).map(|t| (t % 168) as f32).collect();
        let mut dirty = clean.clone();
        dirty[3] = -1.0;
        dirty[200] = f32::NAN;
        let a = fit_profile(&PanelDataset::new(meta.clone(), clean).unwrap()).unwrap();
        let b = fit_profile(&PanelDataset::new(meta, dirty).unwrap()).unwrap();
        assert_eq!(a.mean(), b.mean());
        assert_eq!(*b.count().get(3, 0, 0), 1);
        assert_eq!(*b.count().get(32, 0, 0), 1);
    }

    #[test]
    fn residuals_of_the_pattern_vanish() {
        let ds = hourly(2, 2, pattern);
        let p = fit_profile(&ds).unwrap();
        let r = residualize(&ds, &p, ResidualTransform::default()).unwrap();
        assert!(r.values.as_slice().iter().all(|v| *v == 0.0));
        assert_eq!(r.count_observed(), r.values.len());
    }

    #[test]
    fn normalized_residual_arithmetic() {
        // weeks at 0 and 8: a = 4, s = 4, so y = a + 2 gives 0.5
        let base = hourly(2, 1, |t, _| if t < 168 { 0.0 } else { 8.0 });
        let p = fit_profile(&base).unwrap();
        let probe = hourly(1, 1, |_, _| 6.0);
        let r = residualize(&probe, &p, ResidualTransform::normalized(1e-3)).unwrap();
        assert!(r.values.as_slice().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn unobserved_slot_is_masked() {
        let mut meta = DatasetMeta::new("m", 19_723 * 86_400, HOUR, 168, 1, 1);
        meta.missing_sentinel = Some(-1.0);
        let mut v: Vec<f32> = vec![1.0; 168];
        v[7] = -1.0;
        let ds = PanelDataset::new(meta, v).unwrap();
        let p = fit_profile(&ds).unwrap();
        assert_eq!(p.empty_cells(), 1);
        let full = hourly(1, 1, |_, _| 1.0);
        let r = residualize(&full, &p, ResidualTransform::default()).unwrap();
        assert_eq!(r.observed(7, 0, 0), None);
        assert_eq!(r.observed(8, 0, 0), Some(0.0));
        let ha = ha_forecast(&p, full.meta(), &[6, 7]).unwrap();
        assert_eq!(ha.mask.as_slice(), &[true, false]);
    }

    #[test]
    fn reconstruct_inverts_residualize() {
        let mut rng = StdRng::seed_from_u64(11);
        let ds = hourly(3, 4, |_, _| rng.gen_range(0.0f32..100.0));
        let p = fit_profile(&ds.time_slice(0..336).unwrap()).unwrap();
        let steps: Vec<usize> = (0..ds.num_timesteps()).collect();
        for transform in [ResidualTransform::default(), ResidualTransform::normalized(5.0)] {
            let r = residualize(&ds, &p, transform).unwrap();
            let back = reconstruct(&r, &p, ds.meta(), &steps, transform).unwrap();
            for (i, (&y, &m)) in ds.raw_values().as_slice().iter().zip(ds.mask().as_slice()).enumerate() {
                assert!(m && back.mask.as_slice()[i]);
                let yhat = back.values.as_slice()[i];
                assert!((yhat - f64::from(y)).abs() <= 1e-9 * f64::from(y).abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_residual_reconstructs_to_ha() {
        let ds = hourly(2, 2, pattern);
        let p = fit_profile(&ds).unwrap();
        let steps = [0usize, 100, 300];
        let zeros = MaskedTensor::new(Tensor3::filled([3, 2, 1], 0.0), Tensor3::filled([3, 2, 1], true)).unwrap();
        let back = reconstruct(&zeros, &p, ds.meta(), &steps, ResidualTransform::default()).unwrap();
        assert_eq!(back, ha_forecast(&p, ds.meta(), &steps).unwrap());
    }

    #[test]
    fn granularity_mismatch_is_rejected() {
        let ds = hourly(1, 1, pattern);
        let p = fit_profile(&ds).unwrap();
        let meta = DatasetMeta::new("other", 0, 1800, 336, 1, 1);
        let other = PanelDataset::new(meta, vec![0.0; 336]).unwrap();
        assert!(matches!(
            residualize(&other, &p, ResidualTransform::default()),
            Err(Error::ProfileMismatch(_))
        ));
    }
}
