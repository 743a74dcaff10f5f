//! Semi-automatic dataset construction: bootstrap from hand-written seed
//! programs, prompt a completion model with fixed plus seeded-random
//! few-shot examples over several rounds, keep only interpreter-verified
//! candidates, and export the remainder for manual correction.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::time::Duration;

use mathlog_core::permute::{
    permutation_set, sample_augmentations, DEFAULT_CLAUSE_LIMIT, DEFAULT_GOAL_LIMIT,
};
use mathlog_core::{parse_program, pretty_print, run_query_text, SolveLimits, SolveOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::client::CompletionClient;
use crate::dataset::{retrieve_cot_answer, DatasetItem, Origin, QAItem};
use crate::error::PipelineError;
use crate::templates::{render_alpaca, INSTRUCTION_PROLOG, INSTRUCTION_PROLOG_PERMUTED};

/// Hand-written starter program for one corpus question.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedExample {
    pub id: u64,
    pub question: String,
    #[serde(rename = "answer")]
    pub cot_answer: String,
    pub code: String,
}

/// A verified (question, chain-of-thought, code) triple. Doubles as the
/// few-shot example record and the dataset row source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifiedItem {
    pub id: u64,
    pub question: String,
    pub cot_answer: String,
    pub code: String,
    #[serde(with = "crate::dataset::origin_string")]
    pub origin: Origin,
}

/// Tuning knobs for the build loop.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuilderConfig {
    /// Number of fixed-plus-random retry rounds after the initial pass (M).
    pub trial_attempts: u32,
    pub fixed_size: usize,
    pub random_size: usize,
    /// Scene-setting text that opens every prompt.
    pub q_gen: String,
    /// Instruction attached to exported dataset items.
    pub instruction: String,
    pub max_token_length: usize,
    /// Checkpoint after every this many acceptances.
    pub checkpoint_every: usize,
    pub rng_seed: u64,
    /// Maximum completion requests in flight at once.
    pub inflight: usize,
    /// Stop cleanly (checkpointing) after this many completion requests;
    /// the run can be resumed later. None means unlimited.
    pub request_budget: Option<usize>,
    pub max_depth: usize,
    pub max_steps: u64,
    pub timeout_ms: u64,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        let limits = SolveLimits::default();
        BuilderConfig {
            trial_attempts: 3,
            fixed_size: 10,
            random_size: 10,
            q_gen: "Solve the following grade school math problems by writing Prolog programs."
                .to_string(),
            instruction: INSTRUCTION_PROLOG.to_string(),
            max_token_length: 512,
            checkpoint_every: 50,
            rng_seed: 0,
            inflight: 4,
            request_budget: None,
            max_depth: limits.max_depth,
            max_steps: limits.max_steps,
            timeout_ms: limits.timeout.as_millis() as u64,
        }
    }
}

impl BuilderConfig {
    pub fn limits(&self) -> SolveLimits {
        SolveLimits {
            max_depth: self.max_depth,
            max_steps: self.max_steps,
            timeout: Duration::from_millis(self.timeout_ms),
        }
    }
}

/// Everything the loop needs to continue after a restart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuilderState {
    /// Ids still lacking a verified program.
    pub unsolved: BTreeSet<u64>,
    /// Verified items in commit order: bootstrap seeds first, then
    /// acceptances ordered by (phase, id), then manual imports.
    pub examples: Vec<VerifiedItem>,
    /// Few-shot examples pinned into every retry-round prompt.
    pub fixed_ids: Vec<u64>,
    /// 0 is the initial pass; 1..=M are retry rounds.
    pub phase: u32,
    /// Ids already attempted within the current phase (accepted or not).
    pub phase_processed: BTreeSet<u64>,
    /// Verified ids frozen when the current phase started; random few-shot
    /// draws sample from here so a resumed run draws identically.
    pub round_pool: Vec<u64>,
    pub acceptances: u64,
    pub rng_seed: u64,
}

impl BuilderState {
    pub fn verified_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.examples.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        ids
    }

    fn example(&self, id: u64) -> Option<&VerifiedItem> {
        self.examples.iter().find(|e| e.id == id)
    }
}

/// Few-shot selection mode for one prompt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromptMode {
    /// Bootstrap examples only (the pass before any retry round).
    Initial,
    /// The pinned fixed set followed by a seeded random draw.
    FixedPlusRandom,
}

/// Result of one build run.
#[derive(Debug)]
pub struct BuildOutcome {
    pub state: BuilderState,
    pub leftovers: Vec<QAItem>,
    /// True when the run stopped on `request_budget` rather than finishing.
    pub interrupted: bool,
    /// Ids skipped this run because the client kept failing, with reasons.
    pub skipped: Vec<(u64, String)>,
}

pub fn read_seed_file(path: &Path) -> Result<Vec<SeedExample>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut seeds = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let seed: SeedExample = serde_json::from_str(line)
            .map_err(|e| PipelineError::malformed(path, lineno + 1, e.to_string()))?;
        seeds.push(seed);
    }
    Ok(seeds)
}

/// Checks a candidate against the question's retrieved final answer.
/// Every failure mode folds into `accepted = false`; the outcome carries
/// the detail.
pub fn verify_candidate(
    candidate_code: &str,
    target: &QAItem,
    limits: &SolveLimits,
) -> (bool, SolveOutcome) {
    let outcome = run_query_text(candidate_code, limits);
    let accepted = match (&outcome, retrieve_cot_answer(&target.cot_answer)) {
        (SolveOutcome::Answer(got), Ok(want)) => *got == want,
        _ => false,
    };
    (accepted, outcome)
}

/// Verifies the seed programs and initializes the loop state.
pub fn bootstrap(
    corpus: &[QAItem],
    seeds: &[SeedExample],
    config: &BuilderConfig,
) -> Result<BuilderState, PipelineError> {
    if seeds.is_empty() {
        return Err(PipelineError::InsufficientExamples(
            "bootstrap requires at least one verified seed example".to_string(),
        ));
    }
    let corpus_ids: BTreeSet<u64> = corpus.iter().map(|q| q.id).collect();
    let limits = config.limits();
    let mut examples = Vec::new();
    let mut seed_ids = BTreeSet::new();
    for seed in seeds {
        if !corpus_ids.contains(&seed.id) {
            return Err(PipelineError::Verify {
                id: seed.id,
                detail: "seed id is not in the corpus".to_string(),
            });
        }
        if !seed_ids.insert(seed.id) {
            return Err(PipelineError::Verify {
                id: seed.id,
                detail: "duplicate seed id".to_string(),
            });
        }
        let target = QAItem {
            id: seed.id,
            question: seed.question.clone(),
            cot_answer: seed.cot_answer.clone(),
        };
        let (accepted, outcome) = verify_candidate(&seed.code, &target, &limits);
        if !accepted {
            return Err(PipelineError::Verify {
                id: seed.id,
                detail: format!("seed program yields {outcome}"),
            });
        }
        examples.push(VerifiedItem {
            id: seed.id,
            question: seed.question.clone(),
            cot_answer: seed.cot_answer.clone(),
            code: seed.code.clone(),
            origin: Origin::Bootstrap,
        });
    }
    let unsolved: BTreeSet<u64> = corpus_ids.difference(&seed_ids).copied().collect();
    let round_pool: Vec<u64> = seed_ids.iter().copied().collect();
    Ok(BuilderState {
        unsolved,
        examples,
        fixed_ids: Vec::new(),
        phase: 0,
        phase_processed: BTreeSet::new(),
        round_pool,
        acceptances: 0,
        rng_seed: config.rng_seed,
    })
}

/// Pins the few-shot set used by every retry round. Ids must reference
/// verified examples.
pub fn select_fixed_set(
    state: &mut BuilderState,
    ids: &[u64],
    config: &BuilderConfig,
) -> Result<(), PipelineError> {
    if ids.len() != config.fixed_size {
        return Err(PipelineError::Invalid(format!(
            "fixed set needs exactly {} ids, got {}",
            config.fixed_size,
            ids.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for &id in ids {
        if state.example(id).is_none() || state.unsolved.contains(&id) {
            return Err(PipelineError::Invalid(format!(
                "fixed set id {id} is not a verified example"
            )));
        }
        if !seen.insert(id) {
            return Err(PipelineError::Invalid(format!("fixed set repeats id {id}")));
        }
    }
    state.fixed_ids = ids.to_vec();
    Ok(())
}

/// The lowest verified ids, as a default when no explicit selection is
/// given.
pub fn default_fixed_ids(state: &BuilderState, config: &BuilderConfig) -> Vec<u64> {
    state
        .verified_ids()
        .into_iter()
        .take(config.fixed_size)
        .collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed for the random few-shot draw of one (phase, target) pair; fixed
/// by construction so a resumed run repeats the same draw.
fn draw_seed(rng_seed: u64, phase: u32, id: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(rng_seed) ^ u64::from(phase)) ^ id)
}

fn render_example_block(question: &str, cot: &str, code: &str) -> String {
    format!("### Question:\n{question}\n### Answer:\n{cot}\n### Prolog:\n{code}")
}

/// Builds the full prompt for one target question. Identical inputs give
/// byte-identical prompts.
pub fn assemble_prompt(
    state: &BuilderState,
    config: &BuilderConfig,
    target: &QAItem,
    mode: PromptMode,
) -> Result<String, PipelineError> {
    let mut chosen: Vec<&VerifiedItem> = Vec::new();
    match mode {
        PromptMode::Initial => {
            chosen.extend(
                state
                    .examples
                    .iter()
                    .filter(|e| e.origin == Origin::Bootstrap),
            );
            if chosen.is_empty() {
                return Err(PipelineError::InsufficientExamples(
                    "initial prompting needs bootstrap examples".to_string(),
                ));
            }
        }
        PromptMode::FixedPlusRandom => {
            if state.fixed_ids.len() != config.fixed_size {
                return Err(PipelineError::InsufficientExamples(format!(
                    "retry rounds need a fixed set of {} examples",
                    config.fixed_size
                )));
            }
            for &id in &state.fixed_ids {
                chosen.push(state.example(id).ok_or_else(|| {
                    PipelineError::Invalid(format!("fixed set id {id} missing from examples"))
                })?);
            }
            let eligible: Vec<u64> = state
                .round_pool
                .iter()
                .copied()
                .filter(|id| !state.fixed_ids.contains(id))
                .collect();
            if eligible.len() < config.random_size {
                return Err(PipelineError::InsufficientExamples(format!(
                    "random draw needs {} eligible examples, have {}",
                    config.random_size,
                    eligible.len()
                )));
            }
            let mut rng =
                ChaCha8Rng::seed_from_u64(draw_seed(state.rng_seed, state.phase, target.id));
            for idx in rand::seq::index::sample(&mut rng, eligible.len(), config.random_size) {
                let id = eligible[idx];
                chosen.push(state.example(id).ok_or_else(|| {
                    PipelineError::Invalid(format!("pool id {id} missing from examples"))
                })?);
            }
        }
    }

    let mut blocks = Vec::with_capacity(chosen.len() + 2);
    blocks.push(config.q_gen.clone());
    for example in chosen {
        blocks.push(render_example_block(
            &example.question,
            &example.cot_answer,
            &example.code,
        ));
    }
    blocks.push(format!(
        "### Question:\n{}\n### Answer:\n{}\n### Prolog:\n",
        target.question, target.cot_answer
    ));
    Ok(blocks.join("\n\n"))
}

/// Atomically writes the checkpoint (temp file, then rename).
pub fn save_checkpoint(state: &BuilderState, path: &Path) -> Result<(), PipelineError> {
    let json = serde_json::to_string_pretty(state)
        .map_err(|e| PipelineError::Checkpoint(e.to_string()))?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, json).map_err(|e| PipelineError::Checkpoint(e.to_string()))?;
    fs::rename(&tmp, path).map_err(|e| PipelineError::Checkpoint(e.to_string()))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<BuilderState, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::Checkpoint(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Checkpoint(e.to_string()))
}

/// Runs the initial pass and up to M retry rounds, committing acceptances
/// in id order so reruns and resumed runs produce identical datasets.
pub fn run_build(
    corpus: &[QAItem],
    config: &BuilderConfig,
    client: &dyn CompletionClient,
    mut state: BuilderState,
    checkpoint_path: Option<&Path>,
) -> Result<BuildOutcome, PipelineError> {
    let by_id: HashMap<u64, &QAItem> = corpus.iter().map(|q| (q.id, q)).collect();
    for id in &state.unsolved {
        if !by_id.contains_key(id) {
            return Err(PipelineError::Invalid(format!(
                "state refers to id {id} that is not in the corpus"
            )));
        }
    }
    let limits = config.limits();
    let mut requests_used = 0usize;
    let mut skipped = Vec::new();
    let inflight = config.inflight.max(1);

    while state.phase <= config.trial_attempts {
        let mode = if state.phase == 0 {
            PromptMode::Initial
        } else {
            PromptMode::FixedPlusRandom
        };
        if mode == PromptMode::FixedPlusRandom && state.fixed_ids.len() != config.fixed_size {
            return Err(PipelineError::InsufficientExamples(
                "select the fixed few-shot set before the retry rounds".to_string(),
            ));
        }
        let pending: Vec<u64> = state
            .unsolved
            .iter()
            .copied()
            .filter(|id| !state.phase_processed.contains(id))
            .collect();

        let mut cursor = 0;
        while cursor < pending.len() {
            let mut batch = inflight.min(pending.len() - cursor);
            if let Some(budget) = config.request_budget {
                let remaining = budget.saturating_sub(requests_used);
                if remaining == 0 {
                    if let Some(path) = checkpoint_path {
                        save_checkpoint(&state, path)?;
                    }
                    let leftovers = collect_items(&state.unsolved, &by_id);
                    return Ok(BuildOutcome {
                        state,
                        leftovers,
                        interrupted: true,
                        skipped,
                    });
                }
                batch = batch.min(remaining);
            }
            let ids = &pending[cursor..cursor + batch];
            cursor += batch;
            requests_used += batch;

            let mut prompts = Vec::with_capacity(ids.len());
            for &id in ids {
                prompts.push(assemble_prompt(&state, config, by_id[&id], mode)?);
            }

            // Completion and verification run in parallel; commits happen
            // afterwards, serially and in id order, so outputs cannot
            // depend on thread timing.
            let mut results: Vec<Option<Result<(bool, String), PipelineError>>> =
                (0..ids.len()).map(|_| None).collect();
            std::thread::scope(|scope| {
                for (slot, (&id, prompt)) in results.iter_mut().zip(ids.iter().zip(&prompts)) {
                    let target = by_id[&id];
                    let limits = &limits;
                    scope.spawn(move || {
                        *slot = Some(client.complete(prompt).map(|raw| {
                            let code = raw.trim().to_string();
                            let (accepted, _) = verify_candidate(&code, target, limits);
                            (accepted, code)
                        }));
                    });
                }
            });

            for (&id, result) in ids.iter().zip(results) {
                state.phase_processed.insert(id);
                match result.expect("worker filled its slot") {
                    Err(err) => skipped.push((id, err.to_string())),
                    Ok((false, _)) => {}
                    Ok((true, code)) => {
                        let target = by_id[&id];
                        state.examples.push(VerifiedItem {
                            id,
                            question: target.question.clone(),
                            cot_answer: target.cot_answer.clone(),
                            code,
                            origin: Origin::LlmVerified,
                        });
                        state.unsolved.remove(&id);
                        state.acceptances += 1;
                        if state
                            .acceptances
                            .is_multiple_of(config.checkpoint_every as u64)
                        {
                            if let Some(path) = checkpoint_path {
                                save_checkpoint(&state, path)?;
                            }
                        }
                    }
                }
            }
        }

        state.phase += 1;
        state.phase_processed.clear();
        state.round_pool = state.verified_ids();
        if let Some(path) = checkpoint_path {
            save_checkpoint(&state, path)?;
        }
    }

    let leftovers = collect_items(&state.unsolved, &by_id);
    Ok(BuildOutcome {
        state,
        leftovers,
        interrupted: false,
        skipped,
    })
}

fn collect_items(ids: &BTreeSet<u64>, by_id: &HashMap<u64, &QAItem>) -> Vec<QAItem> {
    ids.iter().map(|id| by_id[id].clone()).collect()
}

/// Manually corrected program for one leftover question.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManualItem {
    pub id: u64,
    pub code: String,
}

/// Imports manually corrected programs, applying the same verification
/// as the automatic loop. Rejects on the first failure, naming the id.
pub fn import_manual(
    state: &mut BuilderState,
    corpus: &[QAItem],
    items: &[ManualItem],
    limits: &SolveLimits,
) -> Result<usize, PipelineError> {
    let by_id: HashMap<u64, &QAItem> = corpus.iter().map(|q| (q.id, q)).collect();
    let mut sorted: Vec<&ManualItem> = items.iter().collect();
    sorted.sort_by_key(|m| m.id);
    for item in &sorted {
        if !state.unsolved.contains(&item.id) {
            return Err(PipelineError::Verify {
                id: item.id,
                detail: "id is not an unsolved question".to_string(),
            });
        }
        let target = by_id.get(&item.id).ok_or_else(|| PipelineError::Verify {
            id: item.id,
            detail: "id is not in the corpus".to_string(),
        })?;
        let (accepted, outcome) = verify_candidate(&item.code, target, limits);
        if !accepted {
            return Err(PipelineError::Verify {
                id: item.id,
                detail: format!("manual program yields {outcome}"),
            });
        }
    }
    for item in sorted {
        let target = by_id[&item.id];
        state.examples.push(VerifiedItem {
            id: item.id,
            question: target.question.clone(),
            cot_answer: target.cot_answer.clone(),
            code: item.code.clone(),
            origin: Origin::Manual,
        });
        state.unsolved.remove(&item.id);
    }
    Ok(items.len())
}

/// Renders the verified items as dataset rows in commit order.
pub fn export_dataset(state: &BuilderState, instruction: &str) -> Vec<DatasetItem> {
    state
        .examples
        .iter()
        .map(|e| DatasetItem {
            instruction: instruction.to_string(),
            input: e.question.clone(),
            output: e.code.clone(),
            origin: e.origin.clone(),
        })
        .collect()
}

/// Whitespace-delimited token count, the default length proxy.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Keep an item iff its full rendered form fits the token budget
/// (boundary inclusive). The counting function is pluggable.
pub fn length_filter_with(
    item: &DatasetItem,
    max_tokens: usize,
    count: impl Fn(&str) -> usize,
) -> bool {
    count(&render_alpaca(&item.instruction, &item.input, &item.output)) <= max_tokens
}

pub fn length_filter(item: &DatasetItem, config: &BuilderConfig) -> bool {
    length_filter_with(item, config.max_token_length, token_count)
}

/// Splits a dataset into (kept, discarded) under the length filter.
pub fn apply_length_filter(
    items: Vec<DatasetItem>,
    max_tokens: usize,
) -> (Vec<DatasetItem>, Vec<DatasetItem>) {
    items
        .into_iter()
        .partition(|item| length_filter_with(item, max_tokens, token_count))
}

/// A dataset item that could not be augmented, with the reason.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentWarning {
    pub index: usize,
    pub detail: String,
}

/// Appends up to `n` sampled permutations after each original item.
/// Permuted copies carry the altered instruction; items whose output does
/// not parse pass through unaugmented with a warning.
pub fn augment_with_proper(
    items: &[DatasetItem],
    n: usize,
    seed: u64,
) -> (Vec<DatasetItem>, Vec<AugmentWarning>) {
    let mut out = Vec::with_capacity(items.len().saturating_mul(n + 1));
    let mut warnings = Vec::new();
    for (index, item) in items.iter().enumerate() {
        out.push(item.clone());
        if n == 0 {
            continue;
        }
        let program = match parse_program(&item.output) {
            Ok(program) => program,
            Err(err) => {
                warnings.push(AugmentWarning {
                    index,
                    detail: format!("output does not parse: {err}"),
                });
                continue;
            }
        };
        let set = match permutation_set(&program, DEFAULT_GOAL_LIMIT, DEFAULT_CLAUSE_LIMIT) {
            Ok(set) => set,
            Err(err) => {
                warnings.push(AugmentWarning {
                    index,
                    detail: err.to_string(),
                });
                continue;
            }
        };
        let item_seed = splitmix64(splitmix64(seed) ^ index as u64);
        for (perm_index, member) in sample_augmentations(&set, n, item_seed).iter().enumerate() {
            out.push(DatasetItem {
                instruction: INSTRUCTION_PROLOG_PERMUTED.to_string(),
                input: item.input.clone(),
                output: pretty_print(member),
                origin: Origin::Permuted {
                    parent: index as u64,
                    index: perm_index,
                },
            });
        }
    }
    (out, warnings)
}
