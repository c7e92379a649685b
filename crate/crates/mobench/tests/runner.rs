mod common;

use common::*;
use mobench::config::Overrides;
use mobench::io::save_dataset;
use mobench::registry::{Metric, Method, Target};
use mobench::report::{emit_results, read_csv, render_table, Format, ResultFile};
use mobench::runner::{check_target, run_benchmark, run_many, run_on_dataset, CheckStatus};
use mobench::Error;
use mobench_core::arres::{Scope, Strategy};
use mobench_core::metrics::{AggregateMode, EvalReport};
use mobench_core::panel::DatasetMeta;

#[test]
fn periodic_fixture_gives_zero_error_for_both_methods() {
    let ds = sz_taxi_like(0.0, 0);
    for strategy in [Strategy::Direct, Strategy::Recursive] {
        for scope in [Scope::Pooled, Scope::PerLocation] {
            let mut spec = fixture_spec("sz-taxi");
            spec.strategy = strategy;
            spec.scope = scope;
            let run = run_on_dataset(&spec, &Method::ALL, ds.clone()).unwrap();
            assert_eq!(run.results.len(), 2);
            for r in &run.results {
                assert_eq!(r.report.per_horizon.len(), 4);
                for m in r.report.per_horizon.values().chain([&r.report.averaged]) {
                    assert!(m.mae <= 1e-9 && m.rmse <= 1e-9, "{:?} {m:?}", r.method);
                    assert_eq!(m.n_masked, 0);
                }
            }
        }
    }
}

#[test]
fn run_layout_matches_split() {
    let ds = sz_taxi_like(0.5, 1);
    let run = run_on_dataset(&fixture_spec("sz-taxi"), &Method::ALL, ds).unwrap();
    let t = 5 * 672;
    let b = (t as f64 * 0.8) as usize;
    assert_eq!((run.info.train.clone(), run.info.val.clone(), run.info.test.clone()), (0..b, b..b, b..t));
    // Origins leave room for 12 lags and the 4-step horizon inside the test part.
    assert_eq!(run.info.origins, b + 12..t - 3);
    let n_cells = (run.info.origins.len() * 3) as u64;
    for r in &run.results {
        for m in r.report.per_horizon.values() {
            assert_eq!(m.n_evaluated + m.n_masked, n_cells);
        }
    }
}

#[test]
fn regression_beats_ha_on_autocorrelated_residuals() {
    let ds = sz_taxi_like(1.0, 2);
    let run = run_on_dataset(&fixture_spec("sz-taxi"), &Method::ALL, ds).unwrap();
    let ha = &run.result(Method::Ha).unwrap().report;
    let lr = &run.result(Method::HaLr).unwrap().report;
    assert!(lr.per_horizon[&1].rmse < 0.8 * ha.per_horizon[&1].rmse);
    // Errors grow with the horizon as the AR(1) signal decays.
    let r: Vec<f64> = lr.per_horizon.values().map(|m| m.rmse).collect();
    assert!(r.windows(2).all(|w| w[0] < w[1]), "{r:?}");
}

#[test]
fn runs_are_deterministic() {
    let ds = sz_taxi_like(1.0, 3);
    let spec = fixture_spec("sz-taxi");
    let a = run_on_dataset(&spec, &Method::ALL, ds.clone()).unwrap();
    let b = run_on_dataset(&spec, &Method::ALL, ds).unwrap();
    assert_eq!(a, b);
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for f in Format::ALL {
        let pa = emit_results(&a, f, da.path()).unwrap();
        let pb = emit_results(&b, f, db.path()).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }
}

#[test]
fn result_formats_agree() {
    let ds = sz_taxi_like(1.0, 4);
    let run = run_on_dataset(&fixture_spec("sz-taxi"), &Method::ALL, ds).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for f in Format::ALL {
        emit_results(&run, f, dir.path()).unwrap();
    }
    let base = dir.path().join("sz-taxi");
    let mut names: Vec<_> = std::fs::read_dir(&base)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["ha.csv", "ha.json", "ha.txt", "ha_lr.csv", "ha_lr.json", "ha_lr.txt"]);

    for r in &run.results {
        let rows = read_csv(&base.join(format!("{}.csv", r.method.slug()))).unwrap();
        assert_eq!(rows.len(), 5);
        for (h, mae, mape, rmse) in rows {
            let m = h.map_or(&r.report.averaged, |k| &r.report.per_horizon[&k]);
            assert_eq!((mae, mape, rmse), (m.mae, m.mape_pct, m.rmse));
        }

        let text = std::fs::read_to_string(base.join(format!("{}.json", r.method.slug()))).unwrap();
        let file: ResultFile = serde_json::from_str(&text).unwrap();
        assert_eq!(file.report, r.report);
        assert_eq!(file.fingerprint.len(), 16);
        assert!(file.fingerprint.chars().all(|c| c.is_ascii_hexdigit()));

        let txt = std::fs::read_to_string(base.join(format!("{}.txt", r.method.slug()))).unwrap();
        let mae_row: Vec<String> = r.report.per_horizon.values().map(|m| format!("{:.3}", m.mae)).collect();
        assert!(txt.contains(&mae_row.join("/ ")), "{txt}");
        assert!(txt.contains(&r.report.fingerprint));
    }
}

#[test]
fn fingerprint_tracks_configuration() {
    let ds = sz_taxi_like(1.0, 5);
    let spec = fixture_spec("sz-taxi");
    let a = run_on_dataset(&spec, &[Method::HaLr], ds.clone()).unwrap();
    let mut other = spec.clone();
    other.ridge = 1e-3;
    let b = run_on_dataset(&other, &[Method::HaLr], ds.clone()).unwrap();
    assert_ne!(a.results[0].report.fingerprint, b.results[0].report.fingerprint);
    // The dataset location is not part of the configuration.
    let mut moved = spec.clone();
    moved.dataset_dir = Some("/elsewhere".into());
    let c = run_on_dataset(&moved, &[Method::HaLr], ds).unwrap();
    assert_eq!(a.results[0].report.fingerprint, c.results[0].report.fingerprint);
}

#[test]
fn table_mirrors_published_layout() {
    let ds = sz_taxi_like(1.0, 6);
    let run = run_on_dataset(&fixture_spec("sz-taxi"), &Method::ALL, ds).unwrap();
    let table = render_table(&run.spec, &run.results);
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[1].contains("horizons 15/ 30/ 45/ 60 min"), "{table}");
    assert!(lines[2].starts_with("Method") && lines[2].contains("MAE") && lines[2].contains("RMSE"));
    assert!(lines[3].starts_with("HA "));
    assert!(lines.iter().any(|l| l.starts_with("HA+LR (avg)")));
    // SZ-taxi reports no MAPE; values are still shown for completeness.
    assert_eq!(lines[3].matches("/ ").count(), 9);
}

#[test]
fn weekdays_only_days_split() {
    // PeMSD7(M) layout: 44 weekdays of 5-minute data, 34/5/5 days.
    let mut meta = DatasetMeta::new("pemsd7m-like", 1_335_830_400, 300, 44 * 288, 2, 1);
    meta.weekdays_only = true;
    let ds = synthetic(meta, 0.0, 0.0, 0);
    let spec = fixture_spec("pemsd7m");
    let run = run_on_dataset(&spec, &Method::ALL, ds).unwrap();
    assert_eq!(run.info.test, 39 * 288..44 * 288);
    for r in &run.results {
        assert!(r.report.averaged.mae <= 1e-9, "{:?}", r.report.averaged);
        assert!(r.report.averaged.mape_pct.unwrap() <= 1e-9);
    }
}

#[test]
fn missing_dataset_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_benchmark(&fixture_spec("metr-la"), &Method::ALL, Some(dir.path())).unwrap_err();
    assert!(matches!(err, Error::DatasetMissing { .. }));
    assert!(err.to_string().contains("dataset missing"), "{err}");
}

#[test]
fn spec_dataset_mismatch_is_reported() {
    let ds = sz_taxi_like(0.0, 0);
    let mut spec = fixture_spec("metr-la");
    let err = run_on_dataset(&spec, &Method::ALL, ds.clone()).unwrap_err();
    assert!(err.to_string().contains("granularity"), "{err}");

    spec = fixture_spec("sz-taxi");
    spec.expected_timesteps = Some(2976);
    let err = run_on_dataset(&spec, &Method::ALL, ds).unwrap_err();
    assert!(matches!(err, Error::SpecMismatch { .. }), "{err}");
}

#[test]
fn run_from_disk_and_in_parallel() {
    let root = tempfile::tempdir().unwrap();
    let ds = sz_taxi_like(1.0, 7);
    save_dataset(&ds, &root.path().join("sz-taxi")).unwrap();
    let spec = fixture_spec("sz-taxi");
    let from_disk = run_benchmark(&spec, &Method::ALL, Some(root.path())).unwrap();
    assert_eq!(from_disk, run_on_dataset(&spec, &Method::ALL, ds).unwrap());

    let specs = vec![spec.clone(), fixture_spec("metr-la"), spec];
    let out = run_many(&specs, &Method::ALL, Some(root.path()), 3);
    assert_eq!(out.len(), 3);
    assert_eq!(out[0].as_ref().unwrap(), &from_disk);
    assert!(matches!(out[1], Err(Error::DatasetMissing { .. })));
    assert_eq!(out[2].as_ref().unwrap(), &from_disk);
}

#[test]
fn overrides_reach_the_run() {
    let ds = sz_taxi_like(1.0, 8);
    let overrides = Overrides::from_value(serde_json::json!({
        "benchmarks": { "sz-taxi": { "horizons": [1, 2], "targets": { "ha": [], "ha_lr": [] } } }
    }))
    .unwrap();
    let spec = overrides.apply(&fixture_spec("sz-taxi")).unwrap();
    let run = run_on_dataset(&spec, &[Method::HaLr], ds).unwrap();
    assert_eq!(run.results[0].report.per_horizon.keys().copied().collect::<Vec<_>>(), [1, 2]);
    assert!(run.results[0].checks.is_empty());
}

#[test]
fn fallback_scores_the_same_cells_as_ha() {
    let mut ds = sz_taxi_like(1.0, 9);
    let mut values = ds.raw_values().as_slice().to_vec();
    // Knock out a test-period stretch of location 0.
    for t in 3000..3010 {
        values[t * 3] = f32::NAN;
    }
    let mut meta = ds.meta().clone();
    meta.missing_sentinel = Some(-1.0);
    ds = mobench_core::panel::PanelDataset::new(meta, values).unwrap();
    let mut spec = fixture_spec("sz-taxi");
    let with = run_on_dataset(&spec, &Method::ALL, ds.clone()).unwrap();
    let ha = &with.result(Method::Ha).unwrap().report.per_horizon[&1];
    let lr = &with.result(Method::HaLr).unwrap().report.per_horizon[&1];
    assert_eq!(ha.n_evaluated, lr.n_evaluated);

    spec.ha_fallback = false;
    let without = run_on_dataset(&spec, &[Method::HaLr], ds).unwrap();
    let lr = &without.results[0].report.per_horizon[&1];
    // Targets right after the gap lack a full 12-step history.
    assert_eq!(lr.n_evaluated, ha.n_evaluated - 12);
}

#[test]
fn target_checks() {
    let stats = mobench_core::metrics::error_stats(
        &mobench_core::arres::fully_observed(mobench_core::tensor::Tensor3::from_vec([2, 1, 1], vec![10.0, 10.0]).unwrap()),
        &mobench_core::arres::fully_observed(mobench_core::tensor::Tensor3::from_vec([2, 1, 1], vec![11.0, 9.0]).unwrap()),
        0.0,
    )
    .unwrap();
    let report = EvalReport::from_stats(&[(3, stats)], AggregateMode::PoolCells, "x").unwrap();
    let t = |value, tol| Target {
        metric: Metric::Mae,
        horizon: Some(3),
        value,
        rel_tol: tol,
    };
    assert_eq!(check_target(&report, &t(1.0, 0.02)).status, CheckStatus::Pass);
    assert_eq!(check_target(&report, &t(1.03, 0.02)).status, CheckStatus::Near);
    assert_eq!(check_target(&report, &t(1.1, 0.02)).status, CheckStatus::Fail);
    let missing = Target {
        horizon: Some(6),
        ..t(1.0, 0.02)
    };
    assert_eq!(check_target(&report, &missing).status, CheckStatus::Missing);
    let c = check_target(&report, &t(0.8, 0.5));
    assert!((c.rel_delta.unwrap() - 0.25).abs() < 1e-12);
}
