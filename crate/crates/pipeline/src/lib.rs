//! Dataset pipeline around the mathlog interpreter: build verified
//! question-to-Prolog corpora with a completion model in the loop, augment
//! them with semantics-preserving permutations, and score predictions.

pub mod builder;
pub mod client;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod templates;

pub use builder::{
    assemble_prompt, augment_with_proper, bootstrap, import_manual, run_build, select_fixed_set,
    verify_candidate, BuildOutcome, BuilderConfig, BuilderState, PromptMode,
};
pub use client::{CompletionClient, EchoMockClient, MockBehavior, MockClient};
pub use dataset::{retrieve_cot_answer, DatasetItem, Origin, QAItem};
pub use error::PipelineError;
pub use eval::{
    accuracy, classify_report, evaluate_pair, evaluate_pairs, filter_integer, EvalPair, Report,
    Truth,
};
