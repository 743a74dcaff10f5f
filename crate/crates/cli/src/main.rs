//! `mathlog`: command-line front end for the interpreter and the dataset
//! pipeline. Machine-readable output goes to stdout, human tables and
//! warnings to stderr (`--quiet` silences the latter).
//!
//! Exit codes are stable: 0 success, 1 usage error, 2 input or parse
//! failure, 3 pipeline error (transport, checkpoint corruption).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{ArgAction, Args, Parser, Subcommand};
use mathlog_core::permute::{
    permutation_set, sample_augmentations, DEFAULT_CLAUSE_LIMIT, DEFAULT_GOAL_LIMIT,
};
use mathlog_core::{
    parse_program, pretty_print, run_query_text, Rational, SolveLimits, SolveOutcome,
};
use mathlog_pipeline::builder::{
    apply_length_filter, bootstrap, default_fixed_ids, export_dataset, import_manual,
    load_checkpoint, read_seed_file, run_build, save_checkpoint, select_fixed_set, ManualItem,
};
use mathlog_pipeline::client::{CompletionClient, EchoMockClient, HttpCompletionClient};
use mathlog_pipeline::config::{load_config, PipelineConfig};
use mathlog_pipeline::dataset::{
    parse_dataset_line, read_dataset, read_qa_corpus, retrieve_cot_answer, write_jsonl, QAItem,
};
use mathlog_pipeline::eval::{
    classify_report, evaluate_pairs, filter_integer, format_max_avg, max_avg, render_report_table,
    EvalPair, Report, Truth,
};
use mathlog_pipeline::PipelineError;
use serde::Deserialize;
use serde_json::json;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_PIPELINE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mathlog",
    version,
    about = "Run, permute, build, augment, and evaluate Prolog-style math programs"
)]
struct Cli {
    /// Seed for randomized choices (permutation sampling, few-shot draws).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress human-readable tables and warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Worker threads for parallel evaluation; 0 means one per core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program file and run its solve/1 query.
    Run(RunArgs),
    /// Enumerate or sample semantics-preserving permutations of a program.
    Permute(PermuteArgs),
    /// Build a verified question-to-program dataset with a completion model.
    Build(BuildArgs),
    /// Mix sampled permutations of each item into a dataset.
    Augment(AugmentArgs),
    /// Score predicted programs against ground truth.
    Eval(EvalArgs),
    /// Summarize several evaluation reports as max (avg) accuracy.
    Report(ReportArgs),
}

/// Interpreter budget flags shared by `run` and `eval`.
#[derive(Args)]
struct LimitArgs {
    /// Recursion depth budget.
    #[arg(long)]
    max_depth: Option<usize>,

    /// Resolution step budget.
    #[arg(long)]
    max_steps: Option<u64>,

    /// Wall-clock budget per program, in milliseconds.
    #[arg(long)]
    timeout_ms: Option<u64>,
}

impl LimitArgs {
    fn limits(&self) -> SolveLimits {
        let mut limits = SolveLimits::default();
        if let Some(depth) = self.max_depth {
            limits.max_depth = depth;
        }
        if let Some(steps) = self.max_steps {
            limits.max_steps = steps;
        }
        if let Some(ms) = self.timeout_ms {
            limits.timeout = Duration::from_millis(ms);
        }
        limits
    }
}

#[derive(Args)]
struct RunArgs {
    /// Program file to execute.
    file: PathBuf,

    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Args)]
struct PermuteArgs {
    /// Program file to permute.
    file: PathBuf,

    /// Sample this many non-identity permutations instead of printing
    /// the whole set.
    #[arg(long)]
    n: Option<usize>,

    /// Cap on goal orderings considered per solve rule.
    #[arg(long, default_value_t = DEFAULT_GOAL_LIMIT)]
    goal_limit: usize,

    /// Cap on clause orderings considered.
    #[arg(long, default_value_t = DEFAULT_CLAUSE_LIMIT)]
    clause_limit: usize,

    /// Print only the size of the permutation set.
    #[arg(long)]
    count_only: bool,
}

#[derive(Args)]
struct BuildArgs {
    /// Question corpus (JSONL rows {"id", "question", "answer"}).
    corpus: PathBuf,

    /// Flat TOML config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Verified seed examples (JSONL rows {"id", "question", "answer", "code"}).
    #[arg(long)]
    seeds: PathBuf,

    /// Continue from a saved checkpoint instead of bootstrapping.
    #[arg(long)]
    resume: Option<PathBuf>,

    /// Where to write checkpoints as the run progresses.
    #[arg(long, default_value = "checkpoint.json")]
    checkpoint: PathBuf,

    /// Output dataset path.
    #[arg(long, default_value = "dataset.jsonl")]
    out: PathBuf,

    /// Output path for questions still unsolved after all rounds.
    #[arg(long, default_value = "leftovers.jsonl")]
    leftovers: PathBuf,

    /// Use the offline mock client instead of the HTTP endpoint.
    #[arg(long)]
    mock: bool,

    /// Per-request delay of the mock client, for interruption drills.
    #[arg(long, default_value_t = 0)]
    mock_delay_ms: u64,

    /// Comma-separated ids pinned as the fixed few-shot set
    /// (defaults to the lowest verified ids; ignored on resume).
    #[arg(long, value_delimiter = ',')]
    fixed_ids: Option<Vec<u64>>,

    /// Manually corrected programs (JSONL rows {"id", "code"}) verified
    /// and folded in after the build rounds.
    #[arg(long)]
    import_manual: Option<PathBuf>,

    /// Stop cleanly after this many completion requests; resume later.
    #[arg(long)]
    request_budget: Option<usize>,

    /// Completion requests in flight at once (overrides the config).
    #[arg(long)]
    inflight: Option<usize>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Dataset to augment (JSONL of instruction/input/output rows).
    dataset: PathBuf,

    /// Permutations sampled per item.
    #[arg(long)]
    ratio: usize,

    /// Output path; defaults to <dataset>.augmented.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted programs: JSONL rows {"id", "prediction"} or a dataset
    /// file whose outputs are scored by line index.
    predictions: PathBuf,

    /// Ground truth: JSONL rows {"id", "answer"} or a dataset file whose
    /// reference programs are run to obtain the true answers.
    truth: PathBuf,

    /// Keep only samples whose TRUE answer is an integer.
    #[arg(long, default_value_t = true, action = ArgAction::Set,
          num_args = 0..=1, default_missing_value = "true")]
    integer_only: bool,

    /// Also write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,

    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Report files produced by `eval --report`.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

/// A failure with the exit code it maps onto.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(err: PipelineError) -> Self {
        let code = match &err {
            PipelineError::Io { .. } => EXIT_USAGE,
            PipelineError::Transport(_) | PipelineError::Checkpoint(_) => EXIT_PIPELINE,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Run(args) => cmd_run(cli, args),
        Command::Permute(args) => cmd_permute(cli, args),
        Command::Build(args) => cmd_build(cli, args),
        Command::Augment(args) => cmd_augment(cli, args),
        Command::Eval(args) => cmd_eval(cli, args),
        Command::Report(args) => cmd_report(cli, args),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Reads one JSONL row per non-empty line, reporting the failing line.
fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(line)
            .map_err(|e| Failure::input(format!("{}:{}: {e}", path.display(), index + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> Result<u8, Failure> {
    let source = read_text(&args.file)?;
    let outcome = run_query_text(&source, &args.limits.limits());
    if !cli.quiet {
        eprintln!("{}: {outcome}", args.file.display());
    }
    match &outcome {
        SolveOutcome::Answer(value) => {
            println!(
                "{}",
                json!({"status": "answer", "value": value.to_string()})
            );
            Ok(EXIT_OK)
        }
        SolveOutcome::Error { kind, detail } => {
            println!(
                "{}",
                json!({"status": "error", "kind": kind.name(), "detail": detail})
            );
            Ok(EXIT_INPUT)
        }
    }
}

fn cmd_permute(cli: &Cli, args: &PermuteArgs) -> Result<u8, Failure> {
    let source = read_text(&args.file)?;
    let program = parse_program(&source).map_err(|e| Failure::input(e.to_string()))?;
    let set = permutation_set(&program, args.goal_limit, args.clause_limit)
        .map_err(|e| Failure::input(e.to_string()))?;
    if args.count_only {
        println!("{}", set.members.len());
        return Ok(EXIT_OK);
    }
    let programs: Vec<String> = match args.n {
        Some(n) => {
            let seed = cli.seed.unwrap_or(0);
            let sampled = sample_augmentations(&set, n, seed);
            if sampled.is_empty() && !cli.quiet {
                eprintln!("warning: program has no non-identity permutations");
            }
            sampled.iter().map(pretty_print).collect()
        }
        None => set.members.iter().map(pretty_print).collect(),
    };
    print!("{}", programs.join("---\n"));
    Ok(EXIT_OK)
}

fn cmd_build(cli: &Cli, args: &BuildArgs) -> Result<u8, Failure> {
    let mut settings = match &args.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    let mut config = settings.builder_config();
    config.request_budget = args.request_budget;
    if let Some(inflight) = args.inflight {
        config.inflight = inflight;
    }

    let corpus = read_qa_corpus(&args.corpus)?;
    let seeds = read_seed_file(&args.seeds)?;
    let mut state = match &args.resume {
        Some(path) => load_checkpoint(path)?,
        None => bootstrap(&corpus, &seeds, &config)?,
    };
    if config.trial_attempts > 0 && state.fixed_ids.is_empty() {
        let ids = match &args.fixed_ids {
            Some(ids) => ids.clone(),
            None => default_fixed_ids(&state, &config),
        };
        select_fixed_set(&mut state, &ids, &config)?;
    }

    let client: Box<dyn CompletionClient> = if args.mock {
        Box::new(EchoMockClient::new(Duration::from_millis(
            args.mock_delay_ms,
        )))
    } else {
        let http = HttpCompletionClient::new(settings.http_config())
            .map_err(|e| Failure::usage(e.to_string()))?;
        Box::new(http)
    };

    let outcome = run_build(
        &corpus,
        &config,
        client.as_ref(),
        state,
        Some(&args.checkpoint),
    )?;
    let mut state = outcome.state;

    let mut manual_imported = 0;
    if let Some(path) = &args.import_manual {
        let items: Vec<ManualItem> = read_jsonl(path)?;
        manual_imported = import_manual(&mut state, &corpus, &items, &config.limits())?;
        save_checkpoint(&state, &args.checkpoint)?;
    }

    let dataset = export_dataset(&state, &config.instruction);
    let (kept, discarded) = apply_length_filter(dataset, config.max_token_length);
    write_jsonl(&args.out, &kept)?;
    let leftovers: Vec<QAItem> = corpus
        .iter()
        .filter(|q| state.unsolved.contains(&q.id))
        .cloned()
        .collect();
    write_jsonl(&args.leftovers, &leftovers)?;

    if !cli.quiet {
        for (id, reason) in &outcome.skipped {
            eprintln!("warning: id {id} skipped: {reason}");
        }
        eprintln!(
            "build: {} dataset items ({} accepted by the loop, {} manual), \
             {} leftovers, {} over length{}",
            kept.len(),
            state.acceptances,
            manual_imported,
            leftovers.len(),
            discarded.len(),
            if outcome.interrupted {
                ", interrupted on request budget"
            } else {
                ""
            }
        );
    }
    println!(
        "{}",
        json!({
            "dataset_items": kept.len(),
            "accepted": state.acceptances,
            "manual_imported": manual_imported,
            "leftovers": leftovers.len(),
            "discarded_over_length": discarded.len(),
            "skipped": outcome.skipped.len(),
            "interrupted": outcome.interrupted,
        })
    );
    Ok(EXIT_OK)
}

fn default_augment_out(dataset: &Path) -> PathBuf {
    dataset.with_extension("augmented.jsonl")
}

fn cmd_augment(cli: &Cli, args: &AugmentArgs) -> Result<u8, Failure> {
    let items = read_dataset(&args.dataset)?;
    let seed = cli.seed.unwrap_or(0);
    let (augmented, warnings) = mathlog_pipeline::augment_with_proper(&items, args.ratio, seed);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_augment_out(&args.dataset));
    write_jsonl(&out, &augmented)?;

    let added = augmented.len() - items.len();
    let achieved_ratio = if items.is_empty() {
        serde_json::Value::Null
    } else {
        json!(added as f64 / items.len() as f64)
    };
    if !cli.quiet {
        for warning in &warnings {
            eprintln!("warning: item {}: {}", warning.index, warning.detail);
        }
        eprintln!(
            "augment: {} originals + {} permuted = {} items -> {}",
            items.len(),
            added,
            augmented.len(),
            out.display()
        );
    }
    println!(
        "{}",
        json!({
            "originals": items.len(),
            "added": added,
            "total": augmented.len(),
            "achieved_ratio": achieved_ratio,
            "warnings": warnings.len(),
        })
    );
    Ok(EXIT_OK)
}

/// Truth rows: {"id", "answer"} with a numeric answer, or dataset rows
/// whose reference programs are evaluated (ids are 0-based line indices).
fn parse_truth_file(path: &Path) -> Result<Vec<(u64, Truth)>, Failure> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    let mut dataset_format: Option<bool> = None;
    let mut next_index = 0u64;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| Failure::input(format!("{}:{}: {msg}", path.display(), lineno + 1));
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let is_dataset = if value.get("answer").is_some() {
            false
        } else if value.get("output").is_some() {
            true
        } else {
            return Err(at("expected an \"answer\" or \"output\" field".to_string()));
        };
        match dataset_format {
            None => dataset_format = Some(is_dataset),
            Some(expected) if expected == is_dataset => {}
            Some(_) => return Err(at("mixed truth row formats".to_string())),
        }
        if is_dataset {
            let item = parse_dataset_line(line).map_err(|e| at(e.to_string()))?;
            rows.push((next_index, Truth::Code(item.output)));
            next_index += 1;
        } else {
            let id = value
                .get("id")
                .and_then(serde_json::Value::as_u64)
                .ok_or_else(|| at("missing integer \"id\"".to_string()))?;
            let answer_text = match value.get("answer") {
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(serde_json::Value::Number(n)) => n.to_string(),
                _ => return Err(at("\"answer\" must be a string or number".to_string())),
            };
            let answer = match Rational::parse_decimal(&answer_text) {
                Some(value) => value,
                None => retrieve_cot_answer(&answer_text).map_err(|e| at(e.to_string()))?,
            };
            rows.push((id, Truth::Value(answer)));
        }
    }
    Ok(rows)
}

/// Prediction rows: {"id", "prediction"}, or dataset rows whose outputs
/// are scored by 0-based line index.
fn parse_predictions_file(path: &Path) -> Result<Vec<(u64, String)>, Failure> {
    #[derive(Deserialize)]
    struct PredictionRow {
        id: u64,
        prediction: String,
    }

    let text = read_text(path)?;
    let mut rows = Vec::new();
    let mut dataset_format: Option<bool> = None;
    let mut next_index = 0u64;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| Failure::input(format!("{}:{}: {msg}", path.display(), lineno + 1));
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let is_dataset = if value.get("prediction").is_some() {
            false
        } else if value.get("output").is_some() {
            true
        } else {
            return Err(at(
                "expected a \"prediction\" or \"output\" field".to_string()
            ));
        };
        match dataset_format {
            None => dataset_format = Some(is_dataset),
            Some(expected) if expected == is_dataset => {}
            Some(_) => return Err(at("mixed prediction row formats".to_string())),
        }
        if is_dataset {
            let item = parse_dataset_line(line).map_err(|e| at(e.to_string()))?;
            rows.push((next_index, item.output));
            next_index += 1;
        } else {
            let row: PredictionRow = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
            rows.push((row.id, row.prediction));
        }
    }
    Ok(rows)
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<u8, Failure> {
    let mut truth_map = BTreeMap::new();
    for (id, truth) in parse_truth_file(&args.truth)? {
        if truth_map.insert(id, truth).is_some() {
            return Err(Failure::input(format!(
                "{}: duplicate truth id {id}",
                args.truth.display()
            )));
        }
    }
    let predictions = parse_predictions_file(&args.predictions)?;
    let mut seen = BTreeSet::new();
    let mut missing = Vec::new();
    let mut pairs = Vec::new();
    for (id, prediction) in predictions {
        if !seen.insert(id) {
            return Err(Failure::input(format!(
                "{}: duplicate prediction id {id}",
                args.predictions.display()
            )));
        }
        match truth_map.get(&id) {
            Some(truth) => pairs.push(EvalPair {
                id,
                predicted_code: prediction,
                truth: truth.clone(),
            }),
            None => missing.push(id.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(Failure::input(format!(
            "predictions contain ids with no ground truth: {}",
            missing.join(", ")
        )));
    }

    let limits = args.limits.limits();
    let (pairs, excluded) = if args.integer_only {
        filter_integer(pairs, &limits)
    } else {
        (pairs, Vec::new())
    };
    let results = evaluate_pairs(&pairs, &limits, cli.workers);
    let report = classify_report(&results, excluded.len());

    if let Some(path) = &args.report {
        let pretty =
            serde_json::to_string_pretty(&report).map_err(|e| Failure::input(e.to_string()))?;
        fs::write(path, pretty + "\n")
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    if !cli.quiet {
        let label = args.predictions.display().to_string();
        eprintln!("{}", render_report_table(&report, &label));
    }
    println!(
        "{}",
        serde_json::to_string(&report).map_err(|e| Failure::input(e.to_string()))?
    );
    Ok(EXIT_OK)
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<u8, Failure> {
    let mut labels = Vec::new();
    let mut accuracies = Vec::new();
    for path in &args.files {
        let text = read_text(path)?;
        let report: Report = serde_json::from_str(&text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let accuracy = report.accuracy_percent.ok_or_else(|| {
            Failure::input(format!(
                "{}: report evaluated nothing, no accuracy to aggregate",
                path.display()
            ))
        })?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        labels.push(label);
        accuracies.push(accuracy);
    }
    let (max, avg) = max_avg(&accuracies).expect("at least one report file");
    let display = format_max_avg(max, avg);
    if !cli.quiet {
        for (label, accuracy) in labels.iter().zip(&accuracies) {
            eprintln!("  {label:<24} {accuracy:.1}");
        }
        eprintln!("  max (avg)                {display}");
    }
    let trials: Vec<serde_json::Value> = labels
        .iter()
        .zip(&accuracies)
        .map(|(label, accuracy)| json!({"label": label, "accuracy_percent": accuracy}))
        .collect();
    println!(
        "{}",
        json!({"trials": trials, "max": max, "avg": avg, "display": display})
    );
    Ok(EXIT_OK)
}
