use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mobench::config::Overrides;
use mobench::error::{Error, Result};
use mobench::io::{self, load_dataset, load_profile, read_json, save_dataset, save_model, save_profile, write_json};
use mobench::registry::{self, read_holidays, Method};
use mobench::report::{self, Format};
use mobench::runner::{self, fill_missing, metric_value};
use mobench_core::arres::{admissible_origins, fit_halr, forecast_halr, MissingLags, RegressionConfig, Scope, Strategy};
use mobench_core::metrics::{error_stats, AggregateMode, EvalReport};
use mobench_core::panel::{split, PanelDataset, SplitSpec};
use mobench_core::seasonal::{fit_profile, ha_forecast, residualize, ResidualTransform, SeasonalProfile, DEFAULT_S_FLOOR};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "mobench", version, about = "Historical-average forecasting baselines and benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print dataset metadata and mask statistics.
    Inspect {
        dir: PathBuf,
        /// Also export the values as long-format CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Fit the weekly profile on train+validation and write it.
    FitHa {
        dir: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rolling forecasts over the test range.
    Forecast(ForecastArgs),
    /// Score forecasts written by `forecast` against a dataset.
    Eval {
        #[arg(long = "true", value_name = "DIR")]
        truth: PathBuf,
        #[arg(long, value_name = "DIR")]
        pred: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        mape_floor: f64,
        #[arg(long, value_enum, default_value_t = Aggregate::PoolCells)]
        aggregate: Aggregate,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Registry benchmarks.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run benchmarks and write results/<id>/<method>.{txt,csv,json}.
    Run {
        #[arg(long, required_unless_present = "all", conflicts_with = "all")]
        id: Vec<String>,
        #[arg(long)]
        all: bool,
        /// JSON file overriding registry fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Comma-separated subset of ha, ha+lr.
        #[arg(long, default_value = "ha,ha+lr", value_parser = parse_method, value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Dataset root; defaults to $MOBENCH_DATA_DIR, then ./data.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// List registry entries.
    List,
}

#[derive(Args)]
struct DataArgs {
    /// Train/validation/test fractions.
    #[arg(long, value_name = "TR,VA,TE", value_delimiter = ',', num_args = 1, conflicts_with = "split_days")]
    split_fractions: Option<Vec<f64>>,
    /// Train/validation/test lengths in days.
    #[arg(long, value_name = "TR,VA,TE", value_delimiter = ',', num_args = 1)]
    split_days: Option<Vec<usize>>,
    /// Extra holiday list (one YYYY-MM-DD per line).
    #[arg(long, value_name = "FILE")]
    holidays: Option<PathBuf>,
    /// Use only these channels.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<usize>>,
}

#[derive(Args)]
struct ForecastArgs {
    dir: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Profile written by `fit-ha`; fitted on train+validation when absent.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long = "h", default_value_t = 12)]
    lag_order: usize,
    /// Horizons in steps.
    #[arg(long, value_delimiter = ',', required_unless_present = "minutes", conflicts_with = "minutes")]
    horizons: Option<Vec<usize>>,
    /// Horizons in minutes, converted with the dataset granularity.
    #[arg(long, value_delimiter = ',')]
    minutes: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Direct)]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = ScopeArg::Pooled)]
    scope: ScopeArg,
    #[arg(long, default_value_t = mobench_core::arres::DEFAULT_RIDGE)]
    ridge: f64,
    #[arg(long)]
    no_intercept: bool,
    /// Divide residuals by the slot standard deviation.
    #[arg(long)]
    normalized: bool,
    #[arg(long, default_value_t = DEFAULT_S_FLOOR)]
    s_floor: f64,
    #[arg(long, value_enum, default_value_t = MissingArg::Mask)]
    missing_lags: MissingArg,
    /// Fit the regression on the training part only.
    #[arg(long)]
    lr_train_only: bool,
    /// Leave cells without usable lags empty instead of using HA there.
    #[arg(long)]
    no_fallback: bool,
    #[arg(long, value_parser = parse_method, default_value = "ha+lr")]
    method: Method,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Direct,
    Recursive,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Pooled,
    PerLocation,
}

#[derive(Clone, Copy, ValueEnum)]
enum MissingArg {
    Mask,
    ZeroFill,
}

#[derive(Clone, Copy, ValueEnum)]
enum Aggregate {
    PoolCells,
    MeanOfMetrics,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).ok_or_else(|| format!("unknown method `{s}` (expected ha or ha+lr)"))
}

/// Manifest written next to the per-horizon prediction directories.
#[derive(Debug, Serialize, Deserialize)]
struct PredManifest {
    source: String,
    method: Method,
    origins: std::ops::Range<usize>,
    horizons: Vec<PredHorizon>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredHorizon {
    horizon: usize,
    dir: String,
    /// Timestep of the truth dataset matching row 0.
    first_timestep: usize,
}

const MANIFEST_FILE: &str = "forecast.json";
/// Marks cells without a forecast in prediction files.
const PRED_MISSING: f32 = f32::MIN;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Inspect { dir, csv } => inspect(&dir, csv.as_deref()),
        Command::FitHa { dir, data, out } => {
            let ds = load_with(&dir, &data)?;
            let parts = split(&ds, &split_spec(&data)?)?;
            let profile = fit_profile(&parts.train_val()?)?;
            save_profile(&profile, &out)?;
            println!(
                "profile [{}] fitted on timesteps 0..{}, {} empty cells, written to {}",
                join(&profile.shape()),
                parts.bounds.val.end,
                profile.empty_cells(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Forecast(args) => forecast(args),
        Command::Eval {
            truth,
            pred,
            mape_floor,
            aggregate,
            json,
        } => eval(&truth, &pred, mape_floor, aggregate, json),
        Command::Bench { command } => bench(command),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn inspect(dir: &Path, csv: Option<&Path>) -> Result<ExitCode> {
    let ds = load_dataset(dir)?;
    let meta = ds.meta();
    let [t, n, c] = ds.shape();
    println!("name: {}", meta.name);
    println!("T={t}, N={n}, C={c}");
    println!("channels: {}", meta.channel_names.join(", "));
    println!("granularity: {} s", meta.granularity_s);
    println!("start: {}", io::rfc3339(meta.start_time));
    println!("timezone offset: {} s", meta.timezone_offset_s);
    if meta.weekdays_only {
        println!("weekdays only: yes");
    }
    println!("holidays: {}", meta.holidays.len());
    match meta.missing_sentinel {
        Some(s) => println!("missing sentinel: {s}"),
        None => println!("missing sentinel: none"),
    }
    let total = t * n * c;
    let observed = ds.count_observed();
    println!(
        "observed: {observed}/{total} ({:.2}%), masked: {}",
        100.0 * observed as f64 / total.max(1) as f64,
        total - observed
    );
    for ch in 0..c {
        let mut masked = 0usize;
        for ti in 0..t {
            masked += (0..n).filter(|&ni| !ds.is_observed(ti, ni, ch)).count();
        }
        println!("  channel {} ({}): {masked} masked", ch, meta.channel_names[ch]);
    }
    if let Some(path) = csv {
        io::export_csv(&ds, path)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn split_spec(data: &DataArgs) -> Result<SplitSpec> {
    let three = |n: usize| {
        if n == 3 {
            Ok(())
        } else {
            Err(Error::Config(format!("split needs three values, got {n}")))
        }
    };
    let spec = match (&data.split_fractions, &data.split_days) {
        (Some(f), _) => {
            three(f.len())?;
            SplitSpec::Fractions {
                train: f[0],
                val: f[1],
                test: f[2],
            }
        }
        (None, Some(d)) => {
            three(d.len())?;
            SplitSpec::Days {
                train: d[0],
                val: d[1],
                test: d[2],
            }
        }
        (None, None) => SplitSpec::Fractions {
            train: 0.7,
            val: 0.1,
            test: 0.2,
        },
    };
    spec.validate()?;
    Ok(spec)
}

fn load_with(dir: &Path, data: &DataArgs) -> Result<PanelDataset> {
    let mut ds = load_dataset(dir)?;
    if let Some(ch) = &data.channels {
        ds = ds.select_channels(ch)?;
    }
    if let Some(path) = &data.holidays {
        let mut holidays = ds.meta().holidays.clone();
        holidays.extend(read_holidays(path)?);
        holidays.sort();
        holidays.dedup();
        ds = ds.with_holidays(holidays)?;
    }
    Ok(ds)
}

fn forecast(args: ForecastArgs) -> Result<ExitCode> {
    let ds = load_with(&args.dir, &args.data)?;
    let parts = split(&ds, &split_spec(&args.data)?)?;
    let horizons = match (&args.horizons, &args.minutes) {
        (Some(h), _) => h.clone(),
        (None, Some(m)) => minutes_to_steps(m, ds.meta().granularity_s)?,
        (None, None) => unreachable!("clap requires one of --horizons / --minutes"),
    };
    let config = RegressionConfig {
        lag_order: args.lag_order,
        horizons,
        strategy: match args.strategy {
            StrategyArg::Direct => Strategy::Direct,
            StrategyArg::Recursive => Strategy::Recursive,
        },
        scope: match args.scope {
            ScopeArg::Pooled => Scope::Pooled,
            ScopeArg::PerLocation => Scope::PerLocation,
        },
        ridge: args.ridge,
        include_intercept: !args.no_intercept,
        missing_lags: match args.missing_lags {
            MissingArg::Mask => MissingLags::Mask,
            MissingArg::ZeroFill => MissingLags::ZeroFill,
        },
    };
    config.validate()?;
    let transform = ResidualTransform {
        normalized: args.normalized,
        s_floor: args.s_floor,
    };
    let train_val = parts.train_val()?;
    let profile: SeasonalProfile = match &args.profile {
        Some(p) => load_profile(p)?,
        None => fit_profile(&train_val)?,
    };
    let origins = admissible_origins(parts.bounds.test.clone(), config.lag_order, config.max_horizon())?;

    let halr = if args.method == Method::HaLr {
        let lr_data = if args.lr_train_only { &parts.train } else { &train_val };
        let model = fit_halr(&residualize(lr_data, &profile, transform)?, &config)?;
        save_model(&model, &args.out.join("model.json"))?;
        Some(forecast_halr(&ds, &profile, &model, transform, origins.clone())?)
    } else {
        None
    };

    let mut manifest = PredManifest {
        source: ds.meta().name.clone(),
        method: args.method,
        origins: origins.clone(),
        horizons: Vec::new(),
    };
    for (i, &k) in config.horizons.iter().enumerate() {
        let first = origins.start + k - 1;
        let times: Vec<usize> = (first..first + origins.len()).collect();
        let ha = ha_forecast(&profile, ds.meta(), &times)?;
        let pred = match &halr {
            Some(f) if args.no_fallback => f[i].forecast.clone(),
            Some(f) => fill_missing(&f[i].forecast, &ha),
            None => ha,
        };
        let values: Vec<f32> = pred
            .values
            .as_slice()
            .iter()
            .zip(pred.mask.as_slice())
            .map(|(&v, &m)| if m { v as f32 } else { PRED_MISSING })
            .collect();
        let mut meta = ds.meta().slice(first..first + origins.len());
        meta.name = format!("{} {} h={k}", meta.name, args.method.label());
        meta.missing_sentinel = Some(f64::from(PRED_MISSING));
        let dir = format!("h{k}");
        save_dataset(&PanelDataset::new(meta, values)?, &args.out.join(&dir))?;
        manifest.horizons.push(PredHorizon {
            horizon: k,
            dir,
            first_timestep: first,
        });
    }
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    println!(
        "{} forecasts from {} origins ({}..{}) for horizons {} written to {}",
        args.method.label(),
        origins.len(),
        origins.start,
        origins.end,
        join(&config.horizons),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn minutes_to_steps(minutes: &[u64], granularity_s: u32) -> Result<Vec<usize>> {
    minutes
        .iter()
        .map(|&m| {
            let s = m * 60;
            let g = u64::from(granularity_s);
            if s == 0 || s % g != 0 {
                Err(Error::Config(format!("{m} min is not a whole number of {granularity_s}-s steps")))
            } else {
                Ok((s / g) as usize)
            }
        })
        .collect()
}

fn eval(truth: &Path, pred: &Path, mape_floor: f64, aggregate: Aggregate, json: bool) -> Result<ExitCode> {
    let truth = load_dataset(truth)?;
    let manifest_path = pred.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(Error::DatasetMissing { path: pred.to_path_buf() });
    }
    let manifest: PredManifest = read_json(&manifest_path)?;
    let mut stats = Vec::new();
    for h in &manifest.horizons {
        let p = load_dataset(&pred.join(&h.dir))?;
        let len = p.num_timesteps();
        if p.shape()[1..] != truth.shape()[1..] || h.first_timestep + len > truth.num_timesteps() {
            return Err(Error::Format {
                path: pred.join(&h.dir),
                message: format!(
                    "[{}] at timestep {} does not fit truth [{}]",
                    join(&p.shape()),
                    h.first_timestep,
                    join(&truth.shape())
                ),
            });
        }
        let times: Vec<usize> = (h.first_timestep..h.first_timestep + len).collect();
        let y = truth.gather(&times)?;
        stats.push((h.horizon, error_stats(&y, &p.to_masked(), mape_floor)?));
    }
    let mode = match aggregate {
        Aggregate::PoolCells => AggregateMode::PoolCells,
        Aggregate::MeanOfMetrics => AggregateMode::MeanOfMetrics,
    };
    let report = EvalReport::from_stats(&stats, mode, "")?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(ExitCode::SUCCESS);
    }
    println!("{} ({})", manifest.source, manifest.method.label());
    println!("{:<8} {:>12} {:>12} {:>12} {:>10} {:>8}", "horizon", "MAE", "MAPE (%)", "RMSE", "n", "masked");
    let rows = report
        .per_horizon
        .iter()
        .map(|(k, m)| (k.to_string(), m))
        .chain(std::iter::once(("avg".to_string(), &report.averaged)));
    for (label, m) in rows {
        let mape = metric_value(m, registry::Metric::Mape).map_or_else(|| "-".into(), |v| format!("{v:.4}"));
        println!(
            "{label:<8} {:>12.4} {mape:>12} {:>12.4} {:>10} {:>8}",
            m.mae, m.rmse, m.n_evaluated, m.n_masked
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(command: BenchCommand) -> Result<ExitCode> {
    match command {
        BenchCommand::List => {
            for b in registry::registry() {
                let horizons: Vec<String> = b.horizons.iter().map(|&k| b.horizon_label(k)).collect();
                let horizons = if b.seq2seq { "seq2seq 12".to_string() } else { horizons.join(", ") };
                println!("{:<22} {:<14} {:<31} {}", b.id, b.split.describe(), horizons, b.title);
            }
            Ok(ExitCode::SUCCESS)
        }
        BenchCommand::Run {
            id,
            all,
            config,
            out,
            methods,
            jobs,
            data_dir,
        } => {
            let overrides = match &config {
                Some(path) => Overrides::load(path)?,
                None => Overrides::default(),
            };
            let registry = registry::registry();
            for named in overrides.named_ids() {
                if !registry.iter().any(|b| b.id == named) {
                    return Err(Error::UnknownBenchmark(named.to_string()));
                }
            }
            let selected: Vec<_> = if all {
                registry
            } else {
                id.iter().map(|i| registry::find(i)).collect::<Result<_>>()?
            };
            let specs = selected.iter().map(|s| overrides.apply(s)).collect::<Result<Vec<_>>>()?;
            let root = data_dir
                .or_else(|| std::env::var_os(mobench::DATA_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("data"));
            let mut methods = methods;
            methods.sort();
            methods.dedup();

            let mut failed = false;
            for (spec, outcome) in specs.iter().zip(runner::run_many(&specs, &methods, Some(&root), jobs)) {
                match outcome {
                    Ok(run) => {
                        print!("{}", report::render_table(&run.spec, &run.results));
                        for format in Format::ALL {
                            report::emit_results(&run, format, &out)?;
                        }
                        for r in &run.results {
                            for c in &r.checks {
                                let h = c.target.horizon.map_or_else(|| "avg".into(), |k| format!("h={k}"));
                                println!(
                                    "  {:<7} {:<5} {:<4} {:<5} target {:<7} got {}",
                                    c.status.label(),
                                    r.method.label(),
                                    c.target.metric.label(),
                                    h,
                                    c.target.value,
                                    c.value.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
                                );
                            }
                        }
                        println!();
                    }
                    Err(e) => {
                        failed = true;
                        eprintln!("{}: {e}", spec.id);
                    }
                }
            }
            Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
    }
}
