mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpqnn::bench::{self, CircuitShape, Figure3Config, Split, Table3, TimingModel};
use dpqnn::dp::{AccountantReport, DPConfig};
use dpqnn::grid::{build_dataset, load_grid, monte_carlo_popf, Dataset, DistributionSpec, GridModel};
use dpqnn::mlp::MlpModel;
use dpqnn::quantum::CircuitModel;
use dpqnn::{Error, Result};
use log::info;
use serde_json::json;

use config::{absolute, RunConfig};

#[derive(Parser)]
#[command(name = "dpqnn", version, about = "Private quantum regressors for probabilistic optimal power flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `ieee33` or a path to a grid JSON file.
    #[arg(long)]
    grid: Option<String>,
    /// Output file (or directory for `bench`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct Training {
    #[arg(long)]
    epochs: Option<usize>,
    /// Dataset rows to generate.
    #[arg(long)]
    samples: Option<usize>,
    /// Leading dataset rows used for training; the rest are held out.
    #[arg(long)]
    train_rows: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long)]
    target_bus: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Qnn,
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Composition {
    /// T = epochs.
    Epochs,
    /// T = epochs · ⌊N/B⌋.
    Steps,
}

#[derive(Subcommand)]
enum Command {
    /// Sample uncertainties, solve the OPF for each and write the dataset CSV.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: Training,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one model and write it as JSON.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: Training,
        /// Dataset CSV; generated when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "qnn")]
        model: ModelKind,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the run manifest (JSON).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Score a saved model on a dataset.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Skip this many leading rows (the training rows).
        #[arg(long, default_value_t = 0)]
        from_row: usize,
        #[arg(long)]
        target_bus: Option<usize>,
    },
    /// Monte Carlo probabilistic OPF statistics.
    Popf {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Privacy spend of a training configuration.
    Accountant {
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 1000)]
        dataset_size: usize,
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-5)]
        delta_prime: f64,
        #[arg(long, value_enum, default_value = "epochs")]
        composition: Composition,
        /// Print the full report with both compositions.
        #[arg(long)]
        full: bool,
    },
    /// Voltage traces of models trained at several σ over the load pattern.
    Figure3 {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: Training,
        /// Comma-separated σ values.
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        t_max: Option<usize>,
        /// Customer load in MW at pattern value 1.
        #[arg(long)]
        load_scale: Option<f64>,
    },
    /// Accuracy tables for QNN and MLP across σ and seeds.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: Training,
        /// Comma-separated σ values for the QNN.
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        /// Comma-separated σ values for the MLP.
        #[arg(long, value_delimiter = ',')]
        mlp_sigma: Option<Vec<f64>>,
        /// Comma-separated training seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Forward passes timed per model.
        #[arg(long)]
        timing_reps: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Argument(_)
        | Error::Dimension { .. }
        | Error::Schema(_)
        | Error::Topology(_) => 2,
        Error::Io(_) | Error::Csv(_) => 4,
        Error::Json(e) if e.is_io() => 4,
        Error::Json(_) => 2,
        _ => 3,
    }
}

fn resolve(common: &Common, training: &Training) -> Result<RunConfig> {
    let config_path = common.config.as_deref().map(absolute).transpose()?;
    let mut cfg = RunConfig::load(config_path.as_deref())?;
    if let Some(g) = &common.grid {
        cfg.grid = g.clone();
    }
    let t = training;
    cfg.epochs = t.epochs.unwrap_or(cfg.epochs);
    cfg.samples = t.samples.unwrap_or(cfg.samples);
    cfg.train_rows = t.train_rows.unwrap_or(cfg.train_rows);
    cfg.data_seed = t.data_seed.unwrap_or(cfg.data_seed);
    cfg.target_bus = t.target_bus.unwrap_or(cfg.target_bus);
    cfg.resolve_paths()?;
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
            info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn provenance(cfg: &RunConfig) -> serde_json::Value {
    json!({ "version": env!("CARGO_PKG_VERSION"), "config": cfg })
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn setup(cfg: &RunConfig) -> Result<(GridModel, DistributionSpec)> {
    let grid = load_grid(&cfg.grid)?;
    let spec = DistributionSpec::for_grid(&grid)?;
    Ok((grid, spec))
}

fn dataset(cfg: &RunConfig, grid: &GridModel, spec: &DistributionSpec, path: Option<&Path>) -> Result<Dataset> {
    match path {
        Some(p) => Dataset::read_csv(&absolute(p)?, cfg.target_bus),
        None => build_dataset(grid, spec, cfg.samples, cfg.target_bus, cfg.data_seed),
    }
}

fn shape(cfg: &RunConfig) -> CircuitShape {
    CircuitShape { n_layers: cfg.n_layers, entangle_range: cfg.entangle_range }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate { common, training, seed } => {
            let mut cfg = resolve(&common, &training)?;
            cfg.data_seed = seed.unwrap_or(cfg.data_seed);
            let (grid, spec) = setup(&cfg)?;
            let data = dataset(&cfg, &grid, &spec, None)?;
            emit(common.out.as_deref(), &data.to_csv()?)?;
        }
        Command::Train { common, training, data, model, sigma, seed, manifest } => {
            let mut cfg = resolve(&common, &training)?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            cfg.sigmas = vec![sigma];
            cfg.validate()?;
            let (grid, spec) = setup(&cfg)?;
            let data = dataset(&cfg, &grid, &spec, data.as_deref())?;
            let split = Split::new(&data, cfg.train_rows.min(data.len().saturating_sub(1)))?;
            let dp_cfg = bench::dp_config(&cfg.dp_base(), &split.training_set()?, sigma, cfg.seeds[0]);
            let (artifact, run_manifest, finished, r2) = match model {
                ModelKind::Qnn => {
                    let r = bench::train_qnn(&split, shape(&cfg), &dp_cfg)?;
                    let r2 = bench::r_squared(&r.model, &split.test).ok();
                    (r.model.to_json()?, r.manifest(), r.finished(), r2)
                }
                ModelKind::Mlp => {
                    let r = bench::train_mlp(&split, &cfg.mlp_layers, &dp_cfg)?;
                    let r2 = bench::r_squared(&r.model, &split.test).ok();
                    (r.model.to_json()?, r.manifest(), r.finished(), r2)
                }
            };
            let mut m = run_manifest;
            m["provenance"] = provenance(&cfg);
            m["test_r2"] = json!(r2);
            if let Some(p) = manifest {
                emit(Some(&p), &pretty(&m)?)?;
            }
            if !finished {
                eprintln!("training aborted: {}", m["outcome"]);
                return Ok(ExitCode::from(3));
            }
            emit(common.out.as_deref(), &(artifact + "\n"))?;
        }
        Command::Evaluate { common, model_file, data, from_row, target_bus } => {
            let cfg = resolve(&common, &Training { target_bus, ..Training::default() })?;
            let text = std::fs::read_to_string(absolute(&model_file)?)?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let data = Dataset::read_csv(&absolute(&data)?, cfg.target_bus)?;
            if from_row >= data.len() {
                return Err(Error::Argument(format!("from_row {from_row} leaves no rows of {}", data.len())));
            }
            let (_, held) = data.split(from_row);
            let (kind, preds, params) = if value.get("layer_sizes").is_some() {
                let m = MlpModel::from_json(&text)?;
                ("mlp", bench::predictions(&m, &held)?, m.param_count())
            } else {
                let m = CircuitModel::from_json(&text)?;
                ("qnn", bench::predictions(&m, &held)?, m.param_count())
            };
            let report = json!({
                "model": kind,
                "params": params,
                "rows": held.len(),
                "r2": dpqnn::metrics::r_squared(&preds, &held.targets)?,
                "prediction_mean_kv": dpqnn::metrics::mean(&preds),
                "prediction_std_kv": dpqnn::metrics::std_dev(&preds),
                "target_mean_kv": dpqnn::metrics::mean(&held.targets),
                "target_std_kv": dpqnn::metrics::std_dev(&held.targets),
            });
            emit(common.out.as_deref(), &pretty(&report)?)?;
        }
        Command::Popf { common, samples, seed } => {
            let mut cfg = resolve(&common, &Training { samples, ..Training::default() })?;
            cfg.data_seed = seed.unwrap_or(cfg.data_seed);
            let (grid, spec) = setup(&cfg)?;
            let report = monte_carlo_popf(&grid, &spec, cfg.samples, cfg.data_seed, false)?;
            let out = json!({ "provenance": provenance(&cfg), "popf": report });
            emit(common.out.as_deref(), &pretty(&out)?)?;
        }
        Command::Accountant { sigma, delta, batch, dataset_size, epochs, delta_prime, composition, full } => {
            let cfg = DPConfig {
                noise_multiplier: sigma,
                delta,
                batch_size: batch,
                dataset_size,
                epochs,
                delta_prime,
                ..DPConfig::default()
            };
            let report = AccountantReport::from_config(&cfg)?;
            let text = if full {
                serde_json::to_string_pretty(&report)?
            } else {
                match composition {
                    Composition::Epochs => serde_json::to_string_pretty(&report.per_epoch)?,
                    Composition::Steps => serde_json::to_string_pretty(&report.per_step)?,
                }
            };
            println!("{text}");
        }
        Command::Figure3 { common, training, sigma, seed, t_max, load_scale } => {
            let mut cfg = resolve(&common, &training)?;
            if let Some(s) = sigma {
                cfg.sigmas = s;
            }
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            cfg.t_max = t_max.unwrap_or(cfg.t_max);
            cfg.load_scale = load_scale.or(cfg.load_scale);
            cfg.validate()?;
            let (grid, spec) = setup(&cfg)?;
            let data = dataset(&cfg, &grid, &spec, None)?;
            let split = Split::new(&data, cfg.train_rows)?;
            let seed = cfg.seeds[0];
            let models = bench::train_models(&split, &cfg.dp_base(), shape(&cfg), &cfg.mlp_layers, &cfg.sigmas, &[], &[seed])?;
            let fig_cfg = Figure3Config {
                t_max: cfg.t_max,
                load_scale: cfg.load_scale.unwrap_or(spec.customer_nominal),
                shots: cfg.shots,
                repeats: cfg.repeats,
                seed,
            };
            let renewables = &split.feature_means()[..spec.wind_sites + spec.solar_sites];
            let fig = bench::run_figure3(&grid, &spec, renewables, &models.qnn_select(seed, &cfg.sigmas)?, cfg.target_bus, &fig_cfg)?;
            emit(common.out.as_deref(), &fig.to_csv())?;
            if let Some(out) = &common.out {
                let meta = json!({
                    "provenance": provenance(&cfg),
                    "fixed_features": fig.fixed_features,
                    "trace_variances": fig.trace_variances(),
                    "training": models.qnn.iter().map(|t| t.report.manifest()).collect::<Vec<_>>(),
                });
                emit(Some(&out.with_extension("json")), &pretty(&meta)?)?;
            }
        }
        Command::Bench { common, training, sigma, mlp_sigma, seeds, timing_reps } => {
            let mut cfg = resolve(&common, &training)?;
            if let Some(s) = sigma {
                cfg.sigmas = s;
            }
            if let Some(s) = mlp_sigma {
                cfg.mlp_sigmas = s;
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            cfg.timing_reps = timing_reps.unwrap_or(cfg.timing_reps);
            cfg.validate()?;
            let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from("bench-out"));
            let (grid, spec) = setup(&cfg)?;
            let data = dataset(&cfg, &grid, &spec, None)?;
            let split = Split::new(&data, cfg.train_rows)?;
            let models = bench::train_models(
                &split,
                &cfg.dp_base(),
                shape(&cfg),
                &cfg.mlp_layers,
                &cfg.sigmas,
                &cfg.mlp_sigmas,
                &cfg.seeds,
            )?;
            let table3 = Table3::from_models(&models, &split.test)?;
            emit(Some(&out_dir.join("table3.csv")), &table3.to_csv())?;
            emit(Some(&out_dir.join("table3.json")), &(table3.to_json()? + "\n"))?;

            // Monte Carlo reference on fresh samples, not the training rows.
            let mc_seed = bench::reference_seed(cfg.data_seed);
            let table2 = bench::run_table2(&grid, &spec, &models.qnn_models(cfg.seeds[0]), cfg.samples, cfg.target_bus, mc_seed)?;
            emit(Some(&out_dir.join("table2.csv")), &table2.to_csv())?;
            emit(Some(&out_dir.join("table2.json")), &(table2.to_json()? + "\n"))?;

            if let (Some(q), Some(m)) = (models.qnn.first(), models.mlp.first()) {
                let timing = TimingModel { overhead: cfg.overhead_s, gate_time: cfg.gate_time_s };
                let t = bench::measure_timing(&q.report.model, &m.report.model, &split.test.features[0], &timing, cfg.timing_reps)?;
                emit(Some(&out_dir.join("timing.json")), &(serde_json::to_string_pretty(&t)? + "\n"))?;
            }
            let manifests = json!({
                "provenance": provenance(&cfg),
                "qnn": models.qnn.iter().map(|t| t.report.manifest()).collect::<Vec<_>>(),
                "mlp": models.mlp.iter().map(|t| t.report.manifest()).collect::<Vec<_>>(),
            });
            emit(Some(&out_dir.join("runs.json")), &pretty(&manifests)?)?;
            let summary = json!({ "table2": table2, "table3": table3.aggregates });
            print!("{}", pretty(&summary)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}
