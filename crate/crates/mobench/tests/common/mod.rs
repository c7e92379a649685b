//! Synthetic datasets shaped like registry entries.
#![allow(dead_code)]

use std::path::Path;

use mobench::io::save_dataset;
use mobench::registry::{find, BenchmarkSpec};
use mobench_core::calendar::weekly_slot;
use mobench_core::panel::{DatasetMeta, PanelDataset};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// 1970-01-05 00:00 UTC, a Monday.
pub const MONDAY: i64 = 4 * 86_400;

/// Smooth weekly pattern indexed by weekly slot.
pub fn pattern(slot: usize, slots_per_week: usize, n: usize, c: usize) -> f32 {
    let phase = slot as f32 / slots_per_week as f32 * std::f32::consts::TAU;
    50.0 + 4.0 * n as f32 + 2.0 * c as f32 + 10.0 * (7.0 * phase).sin() + 3.0 * (phase + n as f32).cos()
}

/// `[T, N, C]` panel: weekly pattern plus AR(1) noise with coefficient `phi`
/// and uniform innovations of half-width `noise` (0 gives a periodic panel).
pub fn synthetic(meta: DatasetMeta, phi: f32, noise: f32, seed: u64) -> PanelDataset {
    let [t_len, n_loc, n_ch] = meta.shape();
    let spw = meta.weekly_index().unwrap().slots_per_week;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut state = vec![0.0f32; n_loc * n_ch];
    let mut values = Vec::with_capacity(t_len * n_loc * n_ch);
    for t in 0..t_len {
        let slot = weekly_slot(t, &meta).unwrap();
        for n in 0..n_loc {
            for c in 0..n_ch {
                let s = &mut state[n * n_ch + c];
                if noise > 0.0 {
                    *s = phi * *s + rng.gen_range(-noise..noise);
                }
                values.push(pattern(slot, spw, n, c) + *s);
            }
        }
    }
    PanelDataset::new(meta, values).unwrap()
}

/// Registry entry `id` with dataset checks relaxed for small fixtures.
pub fn fixture_spec(id: &str) -> BenchmarkSpec {
    let mut spec = find(id).unwrap();
    spec.expected_timesteps = None;
    spec.expected_locations = None;
    spec
}

/// SZ-taxi-shaped data: 15-min steps, 5 weeks, 3 locations.
pub fn sz_taxi_like(noise: f32, seed: u64) -> PanelDataset {
    let meta = DatasetMeta::new("sz-taxi-like", MONDAY, 900, 5 * 672, 3, 1);
    synthetic(meta, 0.8, noise, seed)
}

pub fn write(ds: &PanelDataset, dir: &Path) {
    save_dataset(ds, dir).unwrap();
}

/// The 4×2×1 fixture: T=4, N=2, C=1, one missing value.
pub fn tiny() -> PanelDataset {
    let mut meta = DatasetMeta::new("tiny", MONDAY, 300, 4, 2, 1);
    meta.missing_sentinel = Some(0.0);
    PanelDataset::new(meta, vec![1.0, 2.0, 3.0, 0.0, 5.0, 6.0, 7.0, 8.0]).unwrap()
}
