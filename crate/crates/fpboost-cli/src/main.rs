//! Command-line pipeline around the fpboost library: train, predict,
//! evaluate, run the repeated-split experiment protocol, tune, and generate
//! synthetic data.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fpboost::boost::{fit, FPBoostConfig, FPBoostModel, InitStrategy};
use fpboost::data::{
    load_csv, load_csv_with_layout, preprocess_apply, preprocess_fit_transform,
    simulate_weibull_mixture, stratified_split, write_csv, CsvSchema,
};
use fpboost::experiment::{evaluate_model, run_experiment, ExperimentConfig};
use fpboost::tune::{random_search, SearchSpace};
use fpboost::{derive_seed, Error, SurvivalDataset, WeightActivation};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "fpboost", version, about = "Boosted parametric hazard mixtures for survival analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the observed-time column.
    #[arg(long, default_value = "time")]
    time_col: String,
    /// Name of the event column (accepts 0/1/true/false).
    #[arg(long, default_value = "event")]
    event_col: String,
    /// Comma-separated categorical columns to one-hot encode.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
}

impl DataArgs {
    fn schema(&self) -> CsvSchema {
        CsvSchema::new(&self.time_col, &self.event_col)
            .with_categorical(self.categorical.iter().cloned())
    }

    fn load(&self) -> anyhow::Result<SurvivalDataset> {
        Ok(load_csv(&self.data, &self.schema())?)
    }
}

#[derive(Args)]
struct ModelArgs {
    /// JSON model configuration; overrides the individual flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    n_weibull: usize,
    #[arg(long, default_value_t = 4)]
    n_loglogistic: usize,
    /// Boosting iterations.
    #[arg(long, default_value_t = 100)]
    estimators: usize,
    #[arg(long, default_value_t = 3)]
    max_depth: usize,
    #[arg(long, default_value_t = 1)]
    min_leaf: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    /// ElasticNet strength.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// ElasticNet L1/L2 mix in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    l1_ratio: f64,
    /// Weight activation: relu, sigmoid, softmax, tanh, identity.
    #[arg(long, default_value = "relu")]
    activation: String,
    /// Offset initialization: random or km.
    #[arg(long, default_value = "random")]
    init: String,
    /// Early-stopping patience in iterations (needs a validation split).
    #[arg(long)]
    patience: Option<usize>,
}

impl ModelArgs {
    fn build(&self, seed: u64) -> anyhow::Result<FPBoostConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("cannot read config file {}", path.display()))?;
                serde_json::from_str::<FPBoostConfig>(&text).map_err(|e| {
                    Error::Config {
                        field: "config",
                        message: e.to_string(),
                    }
                })?
            }
            None => FPBoostConfig {
                n_weibull: self.n_weibull,
                n_loglogistic: self.n_loglogistic,
                n_estimators: self.estimators,
                max_depth: self.max_depth,
                min_leaf: self.min_leaf,
                learning_rate: self.learning_rate,
                alpha: self.alpha,
                l1_ratio: self.l1_ratio,
                weight_activation: parse_activation(&self.activation)?,
                init: parse_init(&self.init)?,
                patience: self.patience,
                seed: 0,
            },
        };
        config.seed = seed;
        config.validate()?;
        Ok(config)
    }
}

fn parse_activation(name: &str) -> Result<WeightActivation, Error> {
    serde_json::from_value(serde_json::Value::String(name.to_ascii_lowercase())).map_err(|_| {
        Error::Config {
            field: "activation",
            message: format!("unknown activation `{name}` (relu, sigmoid, softmax, tanh, identity)"),
        }
    })
}

fn parse_init(name: &str) -> Result<InitStrategy, Error> {
    serde_json::from_value(serde_json::Value::String(name.to_ascii_lowercase())).map_err(|_| Error::Config {
        field: "init",
        message: format!("unknown init `{name}` (random, km)"),
    })
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write model.json plus trace.csv.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Validation fraction used when --patience is set.
        #[arg(long, default_value_t = 0.2)]
        valid_frac: f64,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Score a trained model on a CSV and write report.json plus report.txt.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 100)]
        grid_points: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Per-subject survival curves at a time grid, as plot-ready CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated raw times; overrides --grid-points.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        grid_points: usize,
        /// Upper end of the default grid; the model's training horizon if omitted.
        #[arg(long)]
        t_max: Option<f64>,
        /// Output CSV file.
        #[arg(long, default_value = "curves.csv")]
        out: PathBuf,
    },
    /// Repeated-split protocol: fixed test split, n-seeds re-splits,
    /// mean and 95% CI per metric.
    Experiment {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 30)]
        n_seeds: usize,
        #[arg(long, default_value_t = 0.2)]
        test_frac: f64,
        #[arg(long, default_value_t = 0.2)]
        valid_frac: f64,
        #[arg(long, default_value_t = 100)]
        grid_points: usize,
        /// Master seed; all splits and fits derive from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Random hyperparameter search; writes best_config.json and trials.jsonl.
    Tune {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 64)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON search-space file overriding the default ranges.
        #[arg(long)]
        space: Option<PathBuf>,
        /// Inner splits per trial; selection is on the mean validation C-index.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        /// Run trials in parallel.
        #[arg(long)]
        parallel: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Draw a synthetic dataset from a Weibull hazard mixture.
    Simulate {
        #[arg(long)]
        n: usize,
        /// Heads as `scale:shape:weight` triples separated by `;`,
        /// e.g. `2.0:1.0:0.7;0.5:2.5:0.6`.
        #[arg(long)]
        heads: String,
        #[arg(long, default_value_t = 0.0)]
        censor_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV file.
        #[arg(long, default_value = "simulated.csv")]
        out: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

/// Config problems exit 2, schema/shape mismatches exit 3, everything else 1.
fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config { .. }) => 2,
        Some(Error::Schema(_)) | Some(Error::DimensionMismatch { .. }) => 3,
        _ => 1,
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Fit {
            data,
            model,
            seed,
            valid_frac,
            out,
        } => cmd_fit(&data, &model, seed, valid_frac, &out),
        Command::Evaluate {
            model,
            data,
            grid_points,
            out,
        } => cmd_evaluate(&model, &data, grid_points, &out),
        Command::Predict {
            model,
            data,
            times,
            grid_points,
            t_max,
            out,
        } => cmd_predict(&model, &data, &times, grid_points, t_max, &out),
        Command::Experiment {
            data,
            model,
            n_seeds,
            test_frac,
            valid_frac,
            grid_points,
            seed,
            out,
        } => cmd_experiment(&data, &model, n_seeds, test_frac, valid_frac, grid_points, seed, &out),
        Command::Tune {
            data,
            trials,
            seed,
            space,
            repeats,
            parallel,
            out,
        } => cmd_tune(&data, trials, seed, space.as_deref(), repeats, parallel, &out),
        Command::Simulate {
            n,
            heads,
            censor_rate,
            seed,
            out,
        } => cmd_simulate(n, &heads, censor_rate, seed, &out),
    }
}

fn cmd_fit(
    data: &DataArgs,
    model_args: &ModelArgs,
    seed: u64,
    valid_frac: f64,
    out: &Path,
) -> anyhow::Result<()> {
    let config = model_args.build(seed)?;
    let raw = data.load()?;
    fs::create_dir_all(out)?;

    let (model, trace) = if config.patience.is_some() {
        let (train_raw, valid_raw) =
            stratified_split(&raw, valid_frac, derive_seed(seed, "valid-split", 0))?;
        let (train, meta) = preprocess_fit_transform(&train_raw)?;
        let valid = preprocess_apply(&meta, &valid_raw)?;
        let (model, trace) = fit(&config, &train, Some(&valid))?;
        (model.with_preprocess(meta), trace)
    } else {
        let (train, meta) = preprocess_fit_transform(&raw)?;
        let (model, trace) = fit(&config, &train, None)?;
        (model.with_preprocess(meta), trace)
    };

    let model_path = out.join("model.json");
    model.save(&model_path)?;
    trace.write_csv(out.join("trace.csv"))?;
    println!(
        "trained {} iterations; model written to {}",
        trace.len(),
        model_path.display()
    );
    Ok(())
}

/// Loads a CSV into a trained model's feature space and replays its
/// preprocessing.
fn load_for_model(model: &FPBoostModel, data: &DataArgs) -> anyhow::Result<SurvivalDataset> {
    let meta = model
        .preprocess()
        .ok_or_else(|| Error::ModelFormat("model carries no preprocessing metadata".into()))?;
    let ds = match &meta.layout {
        Some(layout) => {
            let (ds, unseen) = load_csv_with_layout(&data.data, layout)?;
            if unseen > 0 {
                eprintln!("warning: {unseen} cells had categorical levels unseen at training time");
            }
            ds
        }
        None => data.load()?,
    };
    Ok(preprocess_apply(meta, &ds)?)
}

fn cmd_evaluate(
    model_path: &Path,
    data: &DataArgs,
    grid_points: usize,
    out: &Path,
) -> anyhow::Result<()> {
    let model = FPBoostModel::load(model_path)?;
    let test = load_for_model(&model, data)?;
    let report = evaluate_model(&model, &test, grid_points)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    let table = report.to_table();
    fs::write(out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_predict(
    model_path: &Path,
    data: &DataArgs,
    times: &[f64],
    grid_points: usize,
    t_max: Option<f64>,
    out: &Path,
) -> anyhow::Result<()> {
    let model = FPBoostModel::load(model_path)?;
    let ds = load_for_model(&model, data)?;
    let grid: Vec<f64> = if times.is_empty() {
        if grid_points < 2 {
            bail!(Error::Validation("--grid-points must be >= 2".into()));
        }
        let hi = t_max.unwrap_or_else(|| model.time_scale());
        (0..grid_points)
            .map(|k| hi * k as f64 / (grid_points - 1) as f64)
            .collect()
    } else {
        times.to_vec()
    };

    let mut writer = csv::Writer::from_path(out)?;
    writer.write_record(["id", "time", "survival"])?;
    for i in 0..ds.len() {
        // times are raw units; the stored preprocessing already normalized
        // the dataset's times, so predictions divide the grid themselves
        let survival = model.predict_survival(ds.feature_row(i), &grid)?;
        for (t, s) in grid.iter().zip(survival) {
            writer.write_record([i.to_string(), format!("{t}"), format!("{s}")])?;
        }
    }
    writer.flush()?;
    println!("wrote {} rows to {}", ds.len() * grid.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    data: &DataArgs,
    model_args: &ModelArgs,
    n_seeds: usize,
    test_frac: f64,
    valid_frac: f64,
    grid_points: usize,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    let model = model_args.build(seed)?;
    let raw = data.load()?;
    let config = ExperimentConfig {
        test_frac,
        valid_frac,
        n_seeds,
        master_seed: seed,
        grid_points,
        model,
    };
    let summary = run_experiment(&raw, &config)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    let table = summary.to_table();
    fs::write(out.join("summary.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_tune(
    data: &DataArgs,
    trials: u64,
    seed: u64,
    space_path: Option<&Path>,
    repeats: usize,
    parallel: bool,
    out: &Path,
) -> anyhow::Result<()> {
    let raw = data.load()?;
    // normalize once; the final refit (cmd_fit) re-fits its own statistics
    let (train, _meta) = preprocess_fit_transform(&raw)?;
    let space: SearchSpace = match space_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read search space {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| Error::Config {
                field: "space",
                message: e.to_string(),
            })?
        }
        None => SearchSpace::default(),
    };
    let (best, all) = random_search(&space, &train, trials, seed, repeats, parallel)?;

    fs::create_dir_all(out)?;
    let mut log = String::new();
    for trial in &all {
        log.push_str(&serde_json::to_string(trial)?);
        log.push('\n');
    }
    fs::write(out.join("trials.jsonl"), log)?;
    fs::write(
        out.join("best_config.json"),
        serde_json::to_string_pretty(&best.config)?,
    )?;
    println!(
        "best trial {} with validation c-index {:.4} ({} trials)",
        best.trial_index,
        best.c_index.unwrap_or(f64::NAN),
        all.len()
    );
    Ok(())
}

fn cmd_simulate(n: usize, heads: &str, censor_rate: f64, seed: u64, out: &Path) -> anyhow::Result<()> {
    let spec = parse_heads(heads)?;
    let ds = simulate_weibull_mixture(n, &spec, censor_rate, seed)?;
    write_csv(&ds, out)?;
    println!(
        "wrote {n} subjects ({} censored) to {}",
        ds.events().iter().filter(|&&e| !e).count(),
        out.display()
    );
    Ok(())
}

fn parse_heads(spec: &str) -> anyhow::Result<Vec<(f64, f64, f64)>> {
    let mut heads = Vec::new();
    for (idx, part) in spec.split(';').enumerate() {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            bail!(Error::Config {
                field: "heads",
                message: format!("head {idx}: expected scale:shape:weight, got `{part}`"),
            });
        }
        let parse = |s: &str, what: &str| -> anyhow::Result<f64> {
            s.trim().parse::<f64>().map_err(|_| {
                Error::Config {
                    field: "heads",
                    message: format!("head {idx}: `{s}` is not a valid {what}"),
                }
                .into()
            })
        };
        heads.push((
            parse(fields[0], "scale")?,
            parse(fields[1], "shape")?,
            parse(fields[2], "weight")?,
        ));
    }
    Ok(heads)
}
