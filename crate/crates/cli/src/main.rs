//! `adafair` — fairness-aware boosting trainer and experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use adafair_core::dataset::{
    split_train_test, split_train_validation, synthesize, SplitSpec, SyntheticSpec,
};
use adafair_core::engine::{DeltaBasis, TrainConfig, Trainer};
use adafair_core::metrics::{confusion_by_group, MetricReport};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use adafair_cli::artifact::ModelArtifact;
use adafair_cli::error::{HarnessError, Result};
use adafair_cli::experiment::{
    self, emit_results, emit_round_trace, mode_tag, notion_tag, parse_format, parse_mode,
    parse_notion, run_experiment, run_trace, DataSource, ExperimentConfig, OutputFormat,
};
use adafair_cli::loader::{self, load_csv_with_summary, write_csv};
use adafair_cli::schema::DataSchema;

#[derive(Parser)]
#[command(
    name = "adafair",
    version,
    about = "Fairness-aware boosting: training, prediction, and experiment grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on one split and save a JSON artifact.
    Train(TrainArgs),
    /// Predict with a saved model artifact.
    Predict(PredictArgs),
    /// Run a (mode, c, repeat) experiment grid and emit result tables.
    Experiment(ExperimentArgs),
    /// Train once and emit per-round validation/test trace tables.
    Trace(TraceArgs),
    /// Generate a synthetic biased dataset as CSV plus a matching schema.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// TOML schema naming the label/protected columns and categoricals.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fairness notion: sp, eqop, or dm.
    #[arg(long, default_value = "dm")]
    notion: String,
    /// Training mode: adafair, nocumul, or adaboost.
    #[arg(long, default_value = "adafair")]
    mode: String,
    /// Maximum boosting rounds (T).
    #[arg(long, default_value_t = 200)]
    rounds: usize,
    /// Unfairness tolerance.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Balanced-error weight in the prefix-selection objective.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Optional held-out test fraction; metrics are reported on it.
    #[arg(long)]
    test_frac: Option<f64>,
    /// Validation fraction carved from the training pool.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    val_frac: f64,
    /// Where to write the model artifact.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model artifact written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Output CSV of per-row predictions.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    notion: Option<String>,
    /// Comma-separated list of modes to run.
    #[arg(long, value_delimiter = ',')]
    mode: Option<Vec<String>>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated grid of c values.
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<f64>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_frac: Option<f64>,
    #[arg(long)]
    val_frac: Option<f64>,
    /// Worker threads for parallel repeats (default: up to 4).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for result tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "dm")]
    notion: String,
    #[arg(long, default_value = "adafair")]
    mode: String,
    #[arg(long, default_value_t = 500)]
    rounds: usize,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.33)]
    test_frac: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    val_frac: f64,
    /// Output directory for trace.csv, trace.jsonl, and bound.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0.25)]
    positive_frac: f64,
    #[arg(long, default_value_t = 0.5)]
    protected_frac: f64,
    /// Displacement of protected positives toward the negative region.
    #[arg(long, default_value_t = 1.5)]
    bias: f64,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path; a schema is written next to it as <out>.schema.toml.
    #[arg(long)]
    out: PathBuf,
}

/// Keys accepted in the experiment TOML config; identical to the flags.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    data: Option<PathBuf>,
    schema: Option<PathBuf>,
    synthetic: Option<SyntheticSpec>,
    notion: Option<String>,
    modes: Option<Vec<String>>,
    rounds: Option<usize>,
    epsilon: Option<f64>,
    c: Option<Vec<f64>>,
    repeats: Option<usize>,
    seed: Option<u64>,
    test_fraction: Option<f64>,
    validation_fraction: Option<f64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
}

impl ExperimentFile {
    fn load(path: &PathBuf) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Experiment(args) => experiment_cmd(args),
        Command::Trace(args) => trace_cmd(args),
        Command::Synth(args) => synth_cmd(args),
    }
}

fn load_data(args: &DataArgs) -> Result<adafair_core::Dataset> {
    let schema = DataSchema::from_toml_file(&args.schema)?;
    let (dataset, summary) = load_csv_with_summary(&args.data, &schema)?;
    eprintln!(
        "loaded {}: {} rows ({} read, {} dropped missing, {} duplicates removed), {} columns",
        args.data.display(),
        summary.rows,
        summary.raw_rows,
        summary.dropped_missing,
        summary.dropped_duplicates,
        dataset.column_count()
    );
    Ok(dataset)
}

fn report_line(label: &str, report: &MetricReport) {
    eprintln!(
        "{label}: error={:.4} balanced_error={:.4} |sp|={:.4} |eqop|={:.4} dm={:.4}",
        report.error_rate,
        report.balanced_error_rate,
        report.statistical_parity,
        report.equal_opportunity,
        report.disparate_mistreatment
    );
}

fn train(args: TrainArgs) -> Result<()> {
    let dataset = load_data(&args.data)?;
    let notion = parse_notion(&args.notion)?;
    let mode = parse_mode(&args.mode)?;

    let split = SplitSpec {
        test_fraction: args.test_frac.unwrap_or(0.5),
        validation_fraction: args.val_frac,
        seed: args.seed,
        stratified_validation: true,
    };
    let (pool, test) = match args.test_frac {
        Some(_) => {
            let (pool, test) = split_train_test(&dataset, &split)?;
            (pool, Some(test))
        }
        None => (dataset, None),
    };
    let (train, validation) = split_train_validation(&pool, &split)?;

    let cfg = TrainConfig {
        rounds: args.rounds,
        epsilon: args.epsilon,
        c: args.c,
        notion,
        mode,
        delta_basis: DeltaBasis::ProvisionalInclusive,
        seed: args.seed,
    };
    let state = Trainer::new(&train)?.fit(&validation, &cfg)?;
    eprintln!(
        "trained {} ({}): {} rounds, theta={}",
        mode_tag(mode),
        notion_tag(notion),
        state.learner_count(),
        state.theta()
    );

    if let Some(test) = test {
        let predictions = state.predict(&test)?;
        let confusion = confusion_by_group(test.labels(), &predictions, test.groups())?;
        report_line("test", &MetricReport::from_confusion(&confusion)?);
    }

    let artifact = ModelArtifact::from_state(&state, train.feature_names());
    artifact.save(&args.out)?;
    eprintln!("model written to {}", args.out.display());
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let artifact = ModelArtifact::load(&args.model)?;
    let dataset = load_data(&args.data)?;
    let predictions = artifact.predict(&dataset)?;

    let mut writer =
        csv::Writer::from_path(&args.out).map_err(|e| HarnessError::Data(e.to_string()))?;
    writer
        .write_record(["row", "prediction"])
        .map_err(|e| HarnessError::Data(e.to_string()))?;
    for (row, label) in predictions.iter().enumerate() {
        let token = if label.is_positive() { "+1" } else { "-1" };
        writer
            .write_record([row.to_string(), token.to_string()])
            .map_err(|e| HarnessError::Data(e.to_string()))?;
    }
    writer.flush().map_err(|e| HarnessError::io(&args.out, e))?;
    eprintln!(
        "{} predictions written to {}",
        predictions.len(),
        args.out.display()
    );
    Ok(())
}

fn resolve_experiment(args: &ExperimentArgs) -> Result<(ExperimentConfig, PathBuf, OutputFormat)> {
    let file = match &args.config {
        Some(path) => ExperimentFile::load(path)?,
        None => ExperimentFile::default(),
    };

    let data = args.data.clone().or(file.data);
    let schema = args.schema.clone().or(file.schema);
    let source = match (data, schema, file.synthetic) {
        (Some(data), Some(schema), _) => DataSource::Csv { data, schema },
        (None, None, Some(spec)) => DataSource::Synthetic(spec),
        (Some(_), None, _) | (None, Some(_), _) => {
            return Err(HarnessError::Config(
                "--data and --schema must be supplied together".into(),
            ))
        }
        (None, None, None) => {
            return Err(HarnessError::Config(
                "no data source: give --data/--schema or a [synthetic] config table".into(),
            ))
        }
    };

    let notion = parse_notion(
        args.notion
            .as_deref()
            .or(file.notion.as_deref())
            .unwrap_or("dm"),
    )?;
    let mode_names = args
        .mode
        .clone()
        .or(file.modes)
        .unwrap_or_else(|| vec!["adafair".into(), "adaboost".into()]);
    let modes = mode_names
        .iter()
        .map(|m| parse_mode(m))
        .collect::<Result<Vec<_>>>()?;

    let cfg = ExperimentConfig {
        source,
        notion,
        modes,
        rounds: args.rounds.or(file.rounds).unwrap_or(200),
        epsilon: args.epsilon.or(file.epsilon).unwrap_or(0.0),
        c_values: args.c.clone().or(file.c).unwrap_or_else(|| vec![1.0]),
        repeats: args.repeats.or(file.repeats).unwrap_or(10),
        test_fraction: args.test_frac.or(file.test_fraction).unwrap_or(0.5),
        validation_fraction: args
            .val_frac
            .or(file.validation_fraction)
            .unwrap_or(1.0 / 3.0),
        base_seed: args.seed.or(file.seed).unwrap_or(1),
        delta_basis: DeltaBasis::ProvisionalInclusive,
        threads: args.threads.or(file.threads),
    };
    let out = args
        .out
        .clone()
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from("results"));
    let format = parse_format(
        args.format
            .as_deref()
            .or(file.format.as_deref())
            .unwrap_or("csv"),
    )?;
    Ok((cfg, out, format))
}

fn experiment_cmd(args: ExperimentArgs) -> Result<()> {
    let (cfg, out, format) = resolve_experiment(&args)?;
    let data = experiment::load_source(&cfg)?;
    let result = run_experiment(&cfg, &data)?;
    for aggregate in &result.aggregates {
        if let Some(mean) = &aggregate.mean {
            eprintln!(
                "{} c={}: n={}/{} error={:.4} balanced_error={:.4} |sp|={:.4} |eqop|={:.4} dm={:.4}",
                aggregate.mode,
                aggregate.c,
                aggregate.effective_repeats,
                aggregate.requested_repeats,
                mean.error_rate,
                mean.balanced_error_rate,
                mean.statistical_parity,
                mean.equal_opportunity,
                mean.disparate_mistreatment
            );
        } else {
            eprintln!(
                "{} c={}: all {} repeats failed",
                aggregate.mode, aggregate.c, aggregate.requested_repeats
            );
        }
    }
    let written = emit_results(&result, &out, format)?;
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn trace_cmd(args: TraceArgs) -> Result<()> {
    let dataset = load_data(&args.data)?;
    let notion = parse_notion(&args.notion)?;
    let mode = parse_mode(&args.mode)?;
    let cfg = ExperimentConfig {
        source: DataSource::Csv {
            data: args.data.data.clone(),
            schema: args.data.schema.clone(),
        },
        notion,
        modes: vec![mode],
        rounds: args.rounds,
        epsilon: args.epsilon,
        c_values: vec![args.c],
        repeats: 1,
        test_fraction: args.test_frac,
        validation_fraction: args.val_frac,
        base_seed: args.seed,
        delta_basis: DeltaBasis::ProvisionalInclusive,
        threads: None,
    };
    let run = run_trace(&cfg, &dataset, mode, args.c)?;
    eprintln!(
        "traced {} rounds (theta={}); training error {:.4} <= bound {:.4}",
        run.table.len(),
        run.state.theta(),
        run.bound.training_error,
        run.bound.bound
    );
    for path in emit_round_trace(&run, &args.out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n: args.n,
        positive_fraction: args.positive_frac,
        protected_fraction: args.protected_frac,
        bias_shift: args.bias,
        noise: args.noise,
        seed: args.seed,
    };
    let dataset = synthesize(&spec)?;
    write_csv(&dataset, &args.out)?;
    let schema_path = args.out.with_extension("schema.toml");
    loader::export_schema().to_toml_file(&schema_path)?;
    eprintln!(
        "wrote {} rows to {} (schema: {})",
        dataset.row_count(),
        args.out.display(),
        schema_path.display()
    );
    Ok(())
}
