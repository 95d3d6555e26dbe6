//! Experiment orchestration: repeated random splits, mode and c grids,
//! aggregation, and machine-readable outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use adafair_core::dataset::{
    split_train_test, split_train_validation, synthesize, Dataset, SplitSpec, SyntheticSpec,
};
use adafair_core::diagnostics::{bound_report, trace_export, BoundReport, TraceTable};
use adafair_core::engine::{
    prefix_objectives, select_theta, DeltaBasis, EnsembleState, FairnessNotion, Mode,
    PrefixObjective, TrainConfig, Trainer,
};
use adafair_core::metrics::{confusion_by_group, MetricReport};
use adafair_core::Error as CoreError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::loader::load_csv;
use crate::schema::DataSchema;

/// Offset added to the base seed for the one retry a degenerate split gets.
const RESEED_OFFSET: u64 = 20_000;

pub fn parse_notion(s: &str) -> Result<FairnessNotion> {
    match s.to_ascii_lowercase().as_str() {
        "sp" | "statistical-parity" => Ok(FairnessNotion::StatisticalParity),
        "eqop" | "equal-opportunity" => Ok(FairnessNotion::EqualOpportunity),
        "dm" | "disparate-mistreatment" => Ok(FairnessNotion::DisparateMistreatment),
        other => Err(HarnessError::Config(format!(
            "unknown fairness notion '{other}' (expected sp, eqop, or dm)"
        ))),
    }
}

pub fn notion_tag(notion: FairnessNotion) -> &'static str {
    match notion {
        FairnessNotion::StatisticalParity => "sp",
        FairnessNotion::EqualOpportunity => "eqop",
        FairnessNotion::DisparateMistreatment => "dm",
    }
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s.to_ascii_lowercase().as_str() {
        "adafair" => Ok(Mode::AdaFair),
        "nocumul" => Ok(Mode::NoCumul),
        "adaboost" => Ok(Mode::VanillaAdaBoost),
        other => Err(HarnessError::Config(format!(
            "unknown mode '{other}' (expected adafair, nocumul, or adaboost)"
        ))),
    }
}

pub fn mode_tag(mode: Mode) -> &'static str {
    match mode {
        Mode::AdaFair => "adafair",
        Mode::NoCumul => "nocumul",
        Mode::VanillaAdaBoost => "adaboost",
    }
}

/// Where the experiment's rows come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Csv { data: PathBuf, schema: PathBuf },
    Synthetic(SyntheticSpec),
}

/// Fully-resolved experiment parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub notion: FairnessNotion,
    pub modes: Vec<Mode>,
    pub rounds: usize,
    pub epsilon: f64,
    pub c_values: Vec<f64>,
    pub repeats: usize,
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub base_seed: u64,
    pub delta_basis: DeltaBasis,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats < 1 {
            return Err(HarnessError::Config("repeats must be at least 1".into()));
        }
        if self.modes.is_empty() {
            return Err(HarnessError::Config("at least one mode is required".into()));
        }
        if self.c_values.is_empty() {
            return Err(HarnessError::Config(
                "at least one c value is required".into(),
            ));
        }
        if let Some(bad) = self.c_values.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(HarnessError::Config(format!(
                "c must lie in [0, 1], got {bad}"
            )));
        }
        if self.threads == Some(0) {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        if self.rounds < 1 {
            return Err(HarnessError::Config("rounds must be at least 1".into()));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(HarnessError::Config(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        for (name, value) in [
            ("test_fraction", self.test_fraction),
            ("validation_fraction", self.validation_fraction),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(HarnessError::Config(format!(
                    "{name} must lie strictly between 0 and 1, got {value}"
                )));
            }
        }
        if let DataSource::Csv { data, schema } = &self.source {
            for path in [data, schema] {
                if !path.exists() {
                    return Err(HarnessError::Config(format!(
                        "referenced path does not exist: {}",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            test_fraction: self.test_fraction,
            validation_fraction: self.validation_fraction,
            seed,
            stratified_validation: true,
        }
    }
}

/// Loads the configured data source.
pub fn load_source(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.source {
        DataSource::Csv { data, schema } => {
            let schema = DataSchema::from_toml_file(schema)?;
            load_csv(data, &schema)
        }
        DataSource::Synthetic(spec) => Ok(synthesize(spec)?),
    }
}

/// One (mode, c, repeat) cell of the grid. Failed repeats are recorded with
/// their error and empty metrics rather than dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub mode: String,
    pub c: f64,
    pub repeat: usize,
    pub split_seed: u64,
    pub theta: usize,
    pub rounds_run: usize,
    pub wall_seconds: f64,
    pub metrics: Option<MetricReport>,
    pub error: Option<String>,
}

/// Mean and sample standard deviation over the successful repeats of one
/// (mode, c) cell; `effective_repeats` annotates how many runs survived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub mode: String,
    pub c: f64,
    pub requested_repeats: usize,
    pub effective_repeats: usize,
    pub mean: Option<MetricReport>,
    pub std_dev: Option<MetricReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<AggregateRecord>,
}

/// The per-repeat split protocol: hold out the test fraction, then carve a
/// stratified validation set from the remaining pool. Repeat `r` uses seed
/// `base + r`; a degenerate split is retried once with `base + 20000 + r`.
/// Returns the parts and the seed that produced them.
pub fn repeat_splits(
    data: &Dataset,
    cfg: &ExperimentConfig,
    repeat: usize,
) -> Result<(Dataset, Dataset, Dataset, u64)> {
    let attempt = |seed: u64| -> std::result::Result<(Dataset, Dataset, Dataset), CoreError> {
        let spec = cfg.split_spec(seed);
        let (pool, test) = split_train_test(data, &spec)?;
        let (train, validation) = split_train_validation(&pool, &spec)?;
        Ok((train, validation, test))
    };
    let primary = cfg.base_seed + repeat as u64;
    match attempt(primary) {
        Ok((train, validation, test)) => Ok((train, validation, test, primary)),
        Err(CoreError::DegenerateSplit { .. }) => {
            let retry = cfg.base_seed + RESEED_OFFSET + repeat as u64;
            let (train, validation, test) = attempt(retry)?;
            Ok((train, validation, test, retry))
        }
        Err(other) => Err(other.into()),
    }
}

fn failure_records(
    cfg: &ExperimentConfig,
    repeat: usize,
    seed: u64,
    message: &str,
) -> Vec<RunRecord> {
    let mut out = Vec::new();
    for &mode in &cfg.modes {
        for &c in &cfg.c_values {
            out.push(RunRecord {
                mode: mode_tag(mode).to_string(),
                c,
                repeat,
                split_seed: seed,
                theta: 0,
                rounds_run: 0,
                wall_seconds: 0.0,
                metrics: None,
                error: Some(message.to_string()),
            });
        }
    }
    out
}

fn run_repeat(cfg: &ExperimentConfig, data: &Dataset, repeat: usize) -> Vec<RunRecord> {
    let (train, validation, test, seed) = match repeat_splits(data, cfg, repeat) {
        Ok(parts) => parts,
        Err(e) => {
            return failure_records(cfg, repeat, cfg.base_seed + repeat as u64, &e.to_string())
        }
    };
    let trainer = match Trainer::new(&train) {
        Ok(t) => t,
        Err(e) => return failure_records(cfg, repeat, seed, &e.to_string()),
    };

    let mut out = Vec::new();
    for &mode in &cfg.modes {
        // Training does not depend on c (the blend only steers prefix
        // selection), so each mode trains once per repeat and every c
        // re-selects its own prefix.
        let train_config = TrainConfig {
            rounds: cfg.rounds,
            epsilon: cfg.epsilon,
            c: cfg.c_values[0],
            notion: cfg.notion,
            mode,
            delta_basis: cfg.delta_basis,
            seed,
        };
        let started = Instant::now();
        let state = match trainer.fit(&validation, &train_config) {
            Ok(state) => state,
            Err(e) => {
                for &c in &cfg.c_values {
                    out.push(RunRecord {
                        mode: mode_tag(mode).to_string(),
                        c,
                        repeat,
                        split_seed: seed,
                        theta: 0,
                        rounds_run: 0,
                        wall_seconds: 0.0,
                        metrics: None,
                        error: Some(e.to_string()),
                    });
                }
                continue;
            }
        };
        let train_seconds = started.elapsed().as_secs_f64();

        for &c in &cfg.c_values {
            let cell_started = Instant::now();
            let selection_config = TrainConfig { c, ..train_config };
            let record = select_theta(&state, &validation, &selection_config)
                .map_err(HarnessError::from)
                .and_then(|theta| {
                    let predictions = state.predict_prefix(&test, theta)?;
                    let confusion = confusion_by_group(test.labels(), &predictions, test.groups())?;
                    let metrics = MetricReport::from_confusion(&confusion)?;
                    Ok((theta, metrics))
                });
            let wall_seconds = train_seconds + cell_started.elapsed().as_secs_f64();
            match record {
                Ok((theta, metrics)) => out.push(RunRecord {
                    mode: mode_tag(mode).to_string(),
                    c,
                    repeat,
                    split_seed: seed,
                    theta,
                    rounds_run: state.learner_count(),
                    wall_seconds,
                    metrics: Some(metrics),
                    error: None,
                }),
                Err(e) => out.push(RunRecord {
                    mode: mode_tag(mode).to_string(),
                    c,
                    repeat,
                    split_seed: seed,
                    theta: 0,
                    rounds_run: state.learner_count(),
                    wall_seconds,
                    metrics: None,
                    error: Some(e.to_string()),
                }),
            }
        }
    }
    out
}

fn aggregate(records: &[&RunRecord], requested: usize) -> AggregateRecord {
    let sample: Vec<[f64; 14]> = records
        .iter()
        .filter_map(|r| r.metrics.map(|m| m.as_array()))
        .collect();
    let n = sample.len();
    let (mean, std_dev) = if n == 0 {
        (None, None)
    } else {
        let mut mean = [0.0; 14];
        for values in &sample {
            for (m, v) in mean.iter_mut().zip(values) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        let mut variance = [0.0; 14];
        if n > 1 {
            for values in &sample {
                for ((var, v), m) in variance.iter_mut().zip(values).zip(&mean) {
                    *var += (v - m) * (v - m);
                }
            }
            for var in variance.iter_mut() {
                *var = (*var / (n - 1) as f64).sqrt();
            }
        }
        (
            Some(MetricReport::from_array(mean)),
            Some(MetricReport::from_array(variance)),
        )
    };
    AggregateRecord {
        mode: records[0].mode.clone(),
        c: records[0].c,
        requested_repeats: requested,
        effective_repeats: n,
        mean,
        std_dev,
    }
}

/// Runs the full (mode, c, repeat) grid. Repeats execute in parallel; the
/// result is assembled in deterministic (mode, c, repeat) order regardless
/// of scheduling. The test half of each split is only touched by the final
/// evaluation call.
///
/// Each in-flight repeat holds its own split copies and sort orders, which
/// is substantial at census scale, so the default worker count is capped
/// at four; set `threads` explicitly to override in either direction.
pub fn run_experiment(cfg: &ExperimentConfig, data: &Dataset) -> Result<ExperimentResult> {
    cfg.validate()?;
    let repeats: Vec<usize> = (0..cfg.repeats).collect();
    let threads = cfg
        .threads
        .unwrap_or_else(|| rayon::current_num_threads().min(4))
        .min(cfg.repeats.max(1));
    let per_repeat: Vec<Vec<RunRecord>> = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?
        .install(|| {
            repeats
                .par_iter()
                .map(|&r| run_repeat(cfg, data, r))
                .collect()
        });

    let mut runs = Vec::with_capacity(cfg.modes.len() * cfg.c_values.len() * cfg.repeats);
    for &mode in &cfg.modes {
        let tag = mode_tag(mode);
        for &c in &cfg.c_values {
            for repeat_records in &per_repeat {
                for record in repeat_records {
                    if record.mode == tag && record.c == c {
                        runs.push(record.clone());
                    }
                }
            }
        }
    }

    let mut aggregates = Vec::with_capacity(cfg.modes.len() * cfg.c_values.len());
    for &mode in &cfg.modes {
        let tag = mode_tag(mode);
        for &c in &cfg.c_values {
            let cell: Vec<&RunRecord> = runs.iter().filter(|r| r.mode == tag && r.c == c).collect();
            aggregates.push(aggregate(&cell, cfg.repeats));
        }
    }
    if runs.iter().all(|r| r.metrics.is_none()) {
        return Err(HarnessError::Degenerate(format!(
            "every repeat failed; first error: {}",
            runs.first()
                .and_then(|r| r.error.clone())
                .unwrap_or_default()
        )));
    }
    Ok(ExperimentResult { runs, aggregates })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn parse_format(s: &str) -> Result<OutputFormat> {
    match s.to_ascii_lowercase().as_str() {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(HarnessError::Config(format!(
            "unknown format '{other}' (expected csv or json)"
        ))),
    }
}

fn metric_cells(metrics: &Option<MetricReport>) -> Vec<String> {
    match metrics {
        Some(m) => m.as_array().iter().map(|v| format!("{v}")).collect(),
        None => vec![String::new(); MetricReport::FIELDS.len()],
    }
}

/// Writes `results.csv` and/or `results.json` under `dir`. The CSV holds
/// one row per run plus mean and std_dev rows per (mode, c) cell; metric
/// column names match the report schema exactly.
pub fn emit_results(
    result: &ExperimentResult,
    dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    if result.runs.is_empty() {
        return Err(HarnessError::Config("no runs to emit".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    match format {
        OutputFormat::Csv => {
            let path = dir.join("results.csv");
            let mut writer =
                csv::Writer::from_path(&path).map_err(|e| HarnessError::Data(e.to_string()))?;
            let mut header = vec![
                "kind".to_string(),
                "mode".to_string(),
                "c".to_string(),
                "repeat_or_n".to_string(),
                "split_seed".to_string(),
                "theta".to_string(),
                "rounds_run".to_string(),
                "wall_seconds".to_string(),
                "status".to_string(),
            ];
            header.extend(MetricReport::FIELDS.iter().map(|f| f.to_string()));
            header.push("note".to_string());
            writer
                .write_record(&header)
                .map_err(|e| HarnessError::Data(e.to_string()))?;

            for run in &result.runs {
                let mut row = vec![
                    "run".to_string(),
                    run.mode.clone(),
                    format!("{}", run.c),
                    format!("{}", run.repeat),
                    format!("{}", run.split_seed),
                    format!("{}", run.theta),
                    format!("{}", run.rounds_run),
                    format!("{}", run.wall_seconds),
                    if run.metrics.is_some() {
                        "ok"
                    } else {
                        "failed"
                    }
                    .to_string(),
                ];
                row.extend(metric_cells(&run.metrics));
                row.push(run.error.clone().unwrap_or_default());
                writer
                    .write_record(&row)
                    .map_err(|e| HarnessError::Data(e.to_string()))?;
            }
            for agg in &result.aggregates {
                for (kind, metrics) in [("mean", &agg.mean), ("std_dev", &agg.std_dev)] {
                    let mut row = vec![
                        kind.to_string(),
                        agg.mode.clone(),
                        format!("{}", agg.c),
                        format!("{}", agg.effective_repeats),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("{}/{}", agg.effective_repeats, agg.requested_repeats),
                    ];
                    row.extend(metric_cells(metrics));
                    row.push(String::new());
                    writer
                        .write_record(&row)
                        .map_err(|e| HarnessError::Data(e.to_string()))?;
                }
            }
            writer.flush().map_err(|e| HarnessError::io(&path, e))?;
            written.push(path);
        }
        OutputFormat::Json => {
            let path = dir.join("results.json");
            let file = std::fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
            serde_json::to_writer_pretty(std::io::BufWriter::new(file), result)
                .map_err(|e| HarnessError::Data(e.to_string()))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Output of a single traced run: the trained ensemble plus per-prefix
/// objective components on both the validation and test sets.
pub struct TraceRun {
    pub state: EnsembleState,
    pub table: TraceTable,
    pub test_objectives: Vec<PrefixObjective>,
    pub bound: BoundReport,
}

/// Trains one configuration on one split and gathers everything the
/// per-round analysis needs.
pub fn run_trace(cfg: &ExperimentConfig, data: &Dataset, mode: Mode, c: f64) -> Result<TraceRun> {
    cfg.validate()?;
    let (train, validation, test, seed) = repeat_splits(data, cfg, 0)?;
    let train_config = TrainConfig {
        rounds: cfg.rounds,
        epsilon: cfg.epsilon,
        c,
        notion: cfg.notion,
        mode,
        delta_basis: cfg.delta_basis,
        seed,
    };
    let state = Trainer::new(&train)?.fit(&validation, &train_config)?;
    let table = trace_export(&state)?;
    let test_objectives = prefix_objectives(&state, &test, &train_config)?;
    let bound = bound_report(&state, &train)?;
    Ok(TraceRun {
        state,
        table,
        test_objectives,
        bound,
    })
}

/// Merged per-round row: the trainer's trace plus the test-set objective
/// components of the prefix ending at that round.
#[derive(Serialize)]
struct TraceRow<'a> {
    #[serde(flatten)]
    trace: &'a adafair_core::diagnostics::RoundTrace,
    test_balanced_error_rate: f64,
    test_error_rate: f64,
    test_fairness: f64,
    test_objective: f64,
}

/// Writes `trace.csv`, `trace.jsonl`, and `bound.json` under `dir`.
pub fn emit_round_trace(run: &TraceRun, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let csv_path = dir.join("trace.csv");
    let jsonl_path = dir.join("trace.jsonl");
    let bound_path = dir.join("bound.json");

    let mut csv_text = String::new();
    csv_text.push_str(&TraceTable::csv_header());
    csv_text.push_str(",test_balanced_error_rate,test_error_rate,test_fairness,test_objective\n");
    let mut jsonl_text = String::new();
    for (idx, (trace, test)) in run
        .table
        .rows()
        .iter()
        .zip(&run.test_objectives)
        .enumerate()
    {
        csv_text.push_str(&run.table.csv_row(idx));
        csv_text.push_str(&format!(
            ",{},{},{},{}\n",
            test.balanced_error_rate, test.error_rate, test.fairness, test.objective
        ));
        let row = TraceRow {
            trace,
            test_balanced_error_rate: test.balanced_error_rate,
            test_error_rate: test.error_rate,
            test_fairness: test.fairness,
            test_objective: test.objective,
        };
        jsonl_text
            .push_str(&serde_json::to_string(&row).map_err(|e| HarnessError::Data(e.to_string()))?);
        jsonl_text.push('\n');
    }
    std::fs::write(&csv_path, csv_text).map_err(|e| HarnessError::io(&csv_path, e))?;
    std::fs::write(&jsonl_path, jsonl_text).map_err(|e| HarnessError::io(&jsonl_path, e))?;
    let bound_json =
        serde_json::to_string_pretty(&run.bound).map_err(|e| HarnessError::Data(e.to_string()))?;
    std::fs::write(&bound_path, bound_json).map_err(|e| HarnessError::io(&bound_path, e))?;
    Ok(vec![csv_path, jsonl_path, bound_path])
}
