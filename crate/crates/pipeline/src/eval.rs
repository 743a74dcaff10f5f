//! Accuracy evaluation of predicted programs against ground truth, with
//! integer-answer filtering, failure bucketing, and multi-trial summaries.

use std::collections::BTreeMap;

use mathlog_core::{run_query_text, Rational, SolveLimits, SolveOutcome};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

/// Ground truth for one sample: either a reference program to run, or a
/// known numeric answer.
#[derive(Clone, Debug, PartialEq)]
pub enum Truth {
    Code(String),
    Value(Rational),
}

#[derive(Clone, Debug)]
pub struct EvalPair {
    pub id: u64,
    pub predicted_code: String,
    pub truth: Truth,
}

/// Failure classification for one evaluated sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorBucket {
    /// Prediction matched the truth.
    None,
    /// The predicted program did not produce an answer at all.
    InterpreterError,
    /// The predicted program answered, but with the wrong value.
    SemanticError,
}

#[derive(Clone, Debug)]
pub struct SampleResult {
    pub id: u64,
    pub predicted_outcome: SolveOutcome,
    pub truth_value: Option<Rational>,
    pub matched: bool,
    pub error_bucket: ErrorBucket,
    /// True when the truth itself failed to evaluate (dataset defect);
    /// such samples never enter the accuracy denominator.
    pub invalid_truth: bool,
}

fn truth_value(truth: &Truth, limits: &SolveLimits) -> Result<Rational, SolveOutcome> {
    match truth {
        Truth::Value(v) => Ok(v.clone()),
        Truth::Code(code) => match run_query_text(code, limits) {
            SolveOutcome::Answer(v) => Ok(v),
            err => Err(err),
        },
    }
}

/// Runs the prediction (and the truth program, when truth is code) and
/// classifies the sample.
pub fn evaluate_pair(pair: &EvalPair, limits: &SolveLimits) -> SampleResult {
    let predicted_outcome = run_query_text(&pair.predicted_code, limits);
    match truth_value(&pair.truth, limits) {
        Err(_) => SampleResult {
            id: pair.id,
            error_bucket: match predicted_outcome {
                SolveOutcome::Answer(_) => ErrorBucket::None,
                SolveOutcome::Error { .. } => ErrorBucket::InterpreterError,
            },
            predicted_outcome,
            truth_value: None,
            matched: false,
            invalid_truth: true,
        },
        Ok(want) => {
            let (matched, bucket) = match &predicted_outcome {
                SolveOutcome::Answer(got) if *got == want => (true, ErrorBucket::None),
                SolveOutcome::Answer(_) => (false, ErrorBucket::SemanticError),
                SolveOutcome::Error { .. } => (false, ErrorBucket::InterpreterError),
            };
            SampleResult {
                id: pair.id,
                predicted_outcome,
                truth_value: Some(want),
                matched,
                error_bucket: bucket,
                invalid_truth: false,
            }
        }
    }
}

/// Evaluates pairs in parallel; results come back sorted by id so the
/// report never depends on scheduling.
pub fn evaluate_pairs(
    pairs: &[EvalPair],
    limits: &SolveLimits,
    workers: usize,
) -> Vec<SampleResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("worker pool");
    let mut results: Vec<SampleResult> =
        pool.install(|| pairs.par_iter().map(|p| evaluate_pair(p, limits)).collect());
    results.sort_by_key(|r| r.id);
    results
}

/// Splits pairs into (kept, excluded) where excluded means the TRUTH
/// answer is a non-integer. Pairs whose truth cannot be evaluated stay in
/// kept; they surface later as invalid-truth samples.
pub fn filter_integer(
    pairs: Vec<EvalPair>,
    limits: &SolveLimits,
) -> (Vec<EvalPair>, Vec<EvalPair>) {
    pairs
        .into_iter()
        .partition(|pair| match truth_value(&pair.truth, limits) {
            Ok(value) => value.is_integer(),
            Err(_) => true,
        })
}

/// 100 × matched / evaluated over non-invalid samples; empty evaluation
/// sets are an explicit error, never a NaN.
pub fn accuracy(results: &[SampleResult]) -> Result<f64, PipelineError> {
    let evaluated = results.iter().filter(|r| !r.invalid_truth).count();
    if evaluated == 0 {
        return Err(PipelineError::Invalid(
            "cannot compute accuracy over an empty evaluation set".to_string(),
        ));
    }
    let matched = results.iter().filter(|r| r.matched).count();
    Ok(100.0 * matched as f64 / evaluated as f64)
}

/// Accuracy in the tables' one-decimal format.
pub fn format_accuracy(percent: f64) -> String {
    format!("{percent:.1}")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub none: usize,
    pub interpreter_error: usize,
    pub semantic_error: usize,
}

/// Per-sample record in the serialized report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
    pub matched: bool,
    pub bucket: ErrorBucket,
    pub invalid_truth: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    /// Samples entering the accuracy denominator.
    pub evaluated: usize,
    pub matched: usize,
    /// Absent when nothing was evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_display: Option<String>,
    pub buckets: BucketCounts,
    /// Interpreter failures broken down by error kind name.
    pub interpreter_kinds: BTreeMap<String, usize>,
    /// Semantic plus interpreter failures: the "any wrong program" view.
    pub incorrect_total: usize,
    /// Count removed beforehand by the integer-answer filter.
    pub excluded_non_integer: usize,
    pub invalid_truth_ids: Vec<u64>,
    pub samples: Vec<SampleRecord>,
}

/// Aggregates sample results into a report. `excluded_non_integer` is the
/// count removed by `filter_integer` before evaluation.
pub fn classify_report(results: &[SampleResult], excluded_non_integer: usize) -> Report {
    let mut buckets = BucketCounts::default();
    let mut interpreter_kinds = BTreeMap::new();
    let mut invalid_truth_ids = Vec::new();
    let mut matched = 0;
    let mut evaluated = 0;
    let mut samples = Vec::with_capacity(results.len());
    for result in results {
        if result.invalid_truth {
            invalid_truth_ids.push(result.id);
        } else {
            evaluated += 1;
            if result.matched {
                matched += 1;
            }
            match result.error_bucket {
                ErrorBucket::None => buckets.none += 1,
                ErrorBucket::InterpreterError => buckets.interpreter_error += 1,
                ErrorBucket::SemanticError => buckets.semantic_error += 1,
            }
            if let SolveOutcome::Error { kind, .. } = &result.predicted_outcome {
                *interpreter_kinds
                    .entry(kind.name().to_string())
                    .or_insert(0) += 1;
            }
        }
        let (status, value, kind) = match &result.predicted_outcome {
            SolveOutcome::Answer(v) => ("answer".to_string(), Some(v.to_string()), None),
            SolveOutcome::Error { kind, .. } => {
                ("error".to_string(), None, Some(kind.name().to_string()))
            }
        };
        samples.push(SampleRecord {
            id: result.id,
            status,
            value,
            kind,
            truth: result.truth_value.as_ref().map(|v| v.to_string()),
            matched: result.matched,
            bucket: result.error_bucket,
            invalid_truth: result.invalid_truth,
        });
    }
    let accuracy_percent = (evaluated > 0).then(|| 100.0 * matched as f64 / evaluated as f64);
    Report {
        evaluated,
        matched,
        accuracy_percent,
        accuracy_display: accuracy_percent.map(format_accuracy),
        incorrect_total: buckets.interpreter_error + buckets.semantic_error,
        buckets,
        interpreter_kinds,
        excluded_non_integer,
        invalid_truth_ids,
        samples,
    }
}

/// Plain-text summary table for terminals.
pub fn render_report_table(report: &Report, label: &str) -> String {
    let mut lines = vec![
        format!("{label}"),
        format!("  evaluated            {}", report.evaluated),
        format!("  matched              {}", report.matched),
        format!(
            "  accuracy             {}%",
            report
                .accuracy_display
                .clone()
                .unwrap_or_else(|| "n/a".to_string())
        ),
        format!("  semantic errors      {}", report.buckets.semantic_error),
        format!(
            "  interpreter errors   {}",
            report.buckets.interpreter_error
        ),
        format!("  excluded non-integer {}", report.excluded_non_integer),
        format!("  invalid truth        {}", report.invalid_truth_ids.len()),
    ];
    if !report.interpreter_kinds.is_empty() {
        let kinds: Vec<String> = report
            .interpreter_kinds
            .iter()
            .map(|(k, n)| format!("{k} {n}"))
            .collect();
        lines.push(format!("  error kinds          {}", kinds.join(", ")));
    }
    lines.join("\n")
}

/// "max (avg)" aggregation across several trials of the same evaluation.
pub fn max_avg(accuracies: &[f64]) -> Option<(f64, f64)> {
    if accuracies.is_empty() {
        return None;
    }
    let max = accuracies.iter().copied().fold(f64::MIN, f64::max);
    let avg = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    Some((max, avg))
}

pub fn format_max_avg(max: f64, avg: f64) -> String {
    format!("{} ({})", format_accuracy(max), format_accuracy(avg))
}
