//! Flat key-value configuration (TOML). Secrets never live here: the API
//! key is always read from the environment variable named by
//! `api_key_env`.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::builder::BuilderConfig;
use crate::client::HttpClientConfig;
use crate::error::PipelineError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    // Completion endpoint.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub retries: u32,
    // Build loop.
    pub trial_attempts: u32,
    pub fixed_size: usize,
    pub random_size: usize,
    pub q_gen: String,
    pub instruction: String,
    pub max_token_length: usize,
    pub checkpoint_every: usize,
    pub seed: u64,
    pub inflight: usize,
    // Interpreter budget used for verification.
    pub max_depth: usize,
    pub max_steps: u64,
    pub timeout_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let build = BuilderConfig::default();
        PipelineConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            model: "gpt-4".to_string(),
            temperature: 0.7,
            max_tokens: 1024,
            api_key_env: "OPENAI_API_KEY".to_string(),
            timeout_secs: 60,
            retries: 3,
            trial_attempts: build.trial_attempts,
            fixed_size: build.fixed_size,
            random_size: build.random_size,
            q_gen: build.q_gen,
            instruction: build.instruction,
            max_token_length: build.max_token_length,
            checkpoint_every: build.checkpoint_every,
            seed: build.rng_seed,
            inflight: build.inflight,
            max_depth: build.max_depth,
            max_steps: build.max_steps,
            timeout_ms: build.timeout_ms,
        }
    }
}

impl PipelineConfig {
    pub fn builder_config(&self) -> BuilderConfig {
        BuilderConfig {
            trial_attempts: self.trial_attempts,
            fixed_size: self.fixed_size,
            random_size: self.random_size,
            q_gen: self.q_gen.clone(),
            instruction: self.instruction.clone(),
            max_token_length: self.max_token_length,
            checkpoint_every: self.checkpoint_every,
            rng_seed: self.seed,
            inflight: self.inflight,
            request_budget: None,
            max_depth: self.max_depth,
            max_steps: self.max_steps,
            timeout_ms: self.timeout_ms,
        }
    }

    pub fn http_config(&self) -> HttpClientConfig {
        HttpClientConfig {
            base_url: self.base_url.clone(),
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            api_key_env: self.api_key_env.clone(),
            timeout: Duration::from_secs(self.timeout_secs),
            retries: self.retries,
        }
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    toml::from_str(&text).map_err(|e| PipelineError::malformed(path, 1, e.to_string()))
}
