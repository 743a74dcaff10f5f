//! Corpus and dataset records plus their JSONL readers and writers.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use mathlog_core::Rational;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

/// One source question with its chain-of-thought answer text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: u64,
    pub question: String,
    #[serde(rename = "answer")]
    pub cot_answer: String,
}

/// Provenance of a dataset item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Bootstrap,
    LlmVerified,
    Manual,
    /// Permutation of the item at input position `parent`; `index` is the
    /// position within that item's sampled permutations.
    Permuted {
        parent: u64,
        index: usize,
    },
}

impl From<Origin> for String {
    fn from(origin: Origin) -> String {
        match origin {
            Origin::Bootstrap => "bootstrap".to_string(),
            Origin::LlmVerified => "llm_verified".to_string(),
            Origin::Manual => "manual".to_string(),
            Origin::Permuted { parent, index } => format!("permuted:{parent}:{index}"),
        }
    }
}

impl TryFrom<String> for Origin {
    type Error = String;

    fn try_from(text: String) -> Result<Self, Self::Error> {
        match text.as_str() {
            "bootstrap" => return Ok(Origin::Bootstrap),
            "llm_verified" => return Ok(Origin::LlmVerified),
            "manual" => return Ok(Origin::Manual),
            _ => {}
        }
        if let Some(rest) = text.strip_prefix("permuted:") {
            if let Some((parent, index)) = rest.split_once(':') {
                if let (Ok(parent), Ok(index)) = (parent.parse(), index.parse()) {
                    return Ok(Origin::Permuted { parent, index });
                }
            }
        }
        Err(format!("unknown origin {text:?}"))
    }
}

/// One instruction-tuning sample in Alpaca field layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub instruction: String,
    pub input: String,
    pub output: String,
    #[serde(with = "origin_string")]
    pub origin: Origin,
}

pub(crate) mod origin_string {
    use super::Origin;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(origin: &Origin, ser: S) -> Result<S::Ok, S::Error> {
        String::from(origin.clone()).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Origin, D::Error> {
        let text = String::deserialize(de)?;
        Origin::try_from(text).map_err(serde::de::Error::custom)
    }
}

/// Extracts the final numeric answer from chain-of-thought text using the
/// `#### <answer>` terminal-marker convention; strips currency symbols and
/// thousands separators. The last marker wins.
pub fn retrieve_cot_answer(cot_text: &str) -> Result<Rational, PipelineError> {
    let at = cot_text
        .rfind("####")
        .ok_or_else(|| PipelineError::Answer("no #### answer marker".to_string()))?;
    let payload = cot_text[at + 4..].lines().next().unwrap_or("");
    let cleaned: String = payload.chars().filter(|c| *c != '$').collect();
    let cleaned = cleaned.trim().trim_end_matches('.');
    Rational::parse_decimal(cleaned)
        .ok_or_else(|| PipelineError::Answer(format!("non-numeric answer payload {payload:?}")))
}

/// Reads a question corpus; ids must be unique.
pub fn read_qa_corpus(path: &Path) -> Result<Vec<QAItem>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: QAItem = serde_json::from_str(line)
            .map_err(|e| PipelineError::malformed(path, lineno + 1, e.to_string()))?;
        if !seen.insert(item.id) {
            return Err(PipelineError::malformed(
                path,
                lineno + 1,
                format!("duplicate id {}", item.id),
            ));
        }
        items.push(item);
    }
    Ok(items)
}

/// Parses one dataset JSONL line.
pub fn parse_dataset_line(line: &str) -> Result<DatasetItem, serde_json::Error> {
    serde_json::from_str(line)
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetItem>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut items = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = parse_dataset_line(line)
            .map_err(|e| PipelineError::malformed(path, lineno + 1, e.to_string()))?;
        items.push(item);
    }
    Ok(items)
}

/// Writes items as one compact JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    let mut buffer = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buffer, item)
            .map_err(|e| PipelineError::Invalid(e.to_string()))?;
        buffer.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    file.write_all(&buffer)
        .map_err(|e| PipelineError::io(path, e))?;
    Ok(())
}
