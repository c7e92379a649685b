//! On-disk formats.
//!
//! A dataset directory holds `meta.json` (the [`DatasetMeta`] fields,
//! snake_case) and `values.f32` (little-endian float32, row-major `[T, N, C]`,
//! no header). Profiles are stored as `profile.f32` (mean, std, count, each
//! `[slots_per_week, N, C]` float32) with a `profile.json` sidecar. Fitted
//! regression models are plain JSON.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mobench_core::arres::ResidualRegressionModel;
use mobench_core::calendar::{civil_from_seconds, WeeklyIndex};
use mobench_core::panel::{DatasetMeta, PanelDataset};
use mobench_core::seasonal::SeasonalProfile;
use mobench_core::tensor::Tensor3;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

pub const META_FILE: &str = "meta.json";
pub const VALUES_FILE: &str = "values.f32";
pub const CSV_FILE: &str = "values.csv";
pub const PROFILE_FILE: &str = "profile.f32";
pub const PROFILE_META_FILE: &str = "profile.json";

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn read_f32s(path: &Path) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("{} bytes is not a whole number of float32 values", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

fn write_f32s<'a>(path: &Path, values: impl IntoIterator<Item = &'a f32>) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for v in values {
        out.write_all(&v.to_le_bytes()).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Loads a canonical dataset directory.
pub fn load_dataset(dir: &Path) -> Result<PanelDataset> {
    let meta_path = dir.join(META_FILE);
    let values_path = dir.join(VALUES_FILE);
    if !dir.is_dir() || !meta_path.is_file() || !values_path.is_file() {
        return Err(Error::DatasetMissing {
            path: dir.to_path_buf(),
        });
    }
    let meta: DatasetMeta = read_json(&meta_path)?;
    let values = read_f32s(&values_path)?;
    PanelDataset::new(meta, values).map_err(|e| match e {
        mobench_core::Error::ShapeMismatch { expected, found } => Error::Format {
            path: values_path,
            message: format!("meta.json implies T·N·C = {expected} values, file holds {found}"),
        },
        other => other.into(),
    })
}

/// Writes `ds` as a canonical dataset directory, creating it if needed.
pub fn save_dataset(ds: &PanelDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join(META_FILE), ds.meta())?;
    write_f32s(&dir.join(VALUES_FILE), ds.raw_values().as_slice())
}

/// RFC 3339 UTC timestamp.
pub fn rfc3339(seconds: i64) -> String {
    let (date, sod) = civil_from_seconds(seconds);
    format!(
        "{date}T{:02}:{:02}:{:02}Z",
        sod / 3600,
        (sod / 60) % 60,
        sod % 60
    )
}

/// Long-format CSV export: `timestamp,location,channel,value`.
///
/// Values are written raw, sentinel included; non-finite values as `NaN`/`inf`.
pub fn export_csv(ds: &PanelDataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let meta = ds.meta();
    let calendar = mobench_core::calendar::WeeklyCalendar::new(meta)?;
    writeln!(out, "timestamp,location,channel,value").map_err(io_err(path))?;
    let [t_len, n_loc, n_ch] = ds.shape();
    for t in 0..t_len {
        let ts = rfc3339(calendar.local_seconds(t) - meta.timezone_offset_s);
        for n in 0..n_loc {
            for c in 0..n_ch {
                let v = ds.raw_values().get(t, n, c);
                writeln!(out, "{ts},{n},{},{v}", meta.channel_names[c]).map_err(io_err(path))?;
            }
        }
    }
    out.flush().map_err(io_err(path))
}

/// Sidecar describing `profile.f32`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub granularity_s: u32,
    pub slots_per_day: usize,
    pub slots_per_week: usize,
    pub num_locations: usize,
    pub num_channels: usize,
    /// Order of the stacked tensors in `profile.f32`.
    pub layout: Vec<String>,
    pub dtype: String,
}

pub fn save_profile(profile: &SeasonalProfile, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let [slots, n, c] = profile.shape();
    let index = WeeklyIndex::new(profile.granularity_s())?;
    let header = ProfileHeader {
        granularity_s: profile.granularity_s(),
        slots_per_day: index.slots_per_day,
        slots_per_week: slots,
        num_locations: n,
        num_channels: c,
        layout: vec!["mean".into(), "std".into(), "count".into()],
        dtype: "float32".into(),
    };
    write_json(&dir.join(PROFILE_META_FILE), &header)?;
    let stacked: Vec<f32> = profile
        .mean()
        .as_slice()
        .iter()
        .chain(profile.std().as_slice())
        .map(|&v| v as f32)
        .chain(profile.count().as_slice().iter().map(|&c| c as f32))
        .collect();
    write_f32s(&dir.join(PROFILE_FILE), &stacked)
}

/// Reads a profile written by [`save_profile`]; values are float32-rounded.
pub fn load_profile(dir: &Path) -> Result<SeasonalProfile> {
    let header: ProfileHeader = read_json(&dir.join(PROFILE_META_FILE))?;
    let path = dir.join(PROFILE_FILE);
    let data = read_f32s(&path)?;
    let shape = [header.slots_per_week, header.num_locations, header.num_channels];
    let cells = shape.iter().product::<usize>();
    if data.len() != 3 * cells {
        return Err(Error::Format {
            path,
            message: format!("expected {} values, found {}", 3 * cells, data.len()),
        });
    }
    let mean = data[..cells].iter().map(|&v| f64::from(v)).collect();
    let std = data[cells..2 * cells].iter().map(|&v| f64::from(v)).collect();
    let count = data[2 * cells..].iter().map(|&v| v as u32).collect();
    Ok(SeasonalProfile::from_parts(
        header.granularity_s,
        Tensor3::from_vec(shape, mean)?,
        Tensor3::from_vec(shape, std)?,
        Tensor3::from_vec(shape, count)?,
    )?)
}

pub fn save_model(model: &ResidualRegressionModel, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    write_json(path, model)
}

pub fn load_model(path: &Path) -> Result<ResidualRegressionModel> {
    read_json(path)
}

/// Directory of the converted dataset `id` under `root`.
pub fn dataset_path(root: &Path, id: &str) -> PathBuf {
    root.join(id)
}
