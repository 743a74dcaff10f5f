//! Completion clients: an OpenAI-compatible HTTP client and deterministic
//! mocks for tests and offline runs.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::Deserialize;

use crate::error::PipelineError;

/// Text-completion backend. Implementations must be safe to call from
/// several threads at once; retry policy lives inside the implementation.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, PipelineError>;
}

/// Connection settings for the HTTP client. The API key is read from the
/// environment variable named here, never from configuration values.
#[derive(Clone, Debug)]
pub struct HttpClientConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub api_key_env: String,
    pub timeout: Duration,
    pub retries: u32,
}

pub struct HttpCompletionClient {
    config: HttpClientConfig,
    api_key: String,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    text: String,
}

impl HttpCompletionClient {
    pub fn new(config: HttpClientConfig) -> Result<Self, PipelineError> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            PipelineError::Invalid(format!(
                "API key environment variable {} is not set",
                config.api_key_env
            ))
        })?;
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| PipelineError::Transport(e.to_string()))?;
        Ok(HttpCompletionClient {
            config,
            api_key,
            http,
        })
    }

    fn attempt(&self, prompt: &str) -> Result<String, (bool, String)> {
        let url = format!("{}/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "prompt": prompt,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let response = self
            .http
            .post(url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| (true, e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            // Rate limits and server errors are worth retrying; the rest
            // (bad request, bad key) will not get better.
            let retryable = status.as_u16() == 429 || status.is_server_error();
            let text = response.text().unwrap_or_default();
            return Err((retryable, format!("HTTP {status}: {text}")));
        }
        let parsed: CompletionResponse = response.json().map_err(|e| (false, e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.text)
            .ok_or((false, "response had no choices".to_string()))
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, prompt: &str) -> Result<String, PipelineError> {
        let mut delay = Duration::from_millis(250);
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            match self.attempt(prompt) {
                Ok(text) => return Ok(text),
                Err((retryable, detail)) => {
                    last = detail;
                    if !retryable || attempt == self.config.retries {
                        break;
                    }
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
        Err(PipelineError::Transport(last))
    }
}

/// How a scripted mock responds once its target question is identified.
#[derive(Clone, Debug)]
pub enum MockBehavior {
    /// Always return this completion.
    Always(String),
    /// Return `code` only when the prompt also contains `required`
    /// (e.g. a specific few-shot example's question); otherwise return
    /// `fallback`.
    WithContext {
        required: String,
        code: String,
        fallback: String,
    },
    /// Always return this (presumably wrong) completion.
    Never(String),
}

/// Deterministic scripted client: maps the target question (the last
/// question block in the prompt) to a canned behavior.
#[derive(Default)]
pub struct MockClient {
    rules: HashMap<String, MockBehavior>,
    calls: AtomicUsize,
}

impl MockClient {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rule(mut self, question: impl Into<String>, behavior: MockBehavior) -> Self {
        self.rules.insert(question.into(), behavior);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl CompletionClient for MockClient {
    fn complete(&self, prompt: &str) -> Result<String, PipelineError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        // The target question is the one introduced last in the prompt.
        let target = self
            .rules
            .iter()
            .filter_map(|(q, b)| prompt.rfind(q.as_str()).map(|at| (at, q, b)))
            .max_by_key(|(at, _, _)| *at);
        let Some((_, _, behavior)) = target else {
            return Err(PipelineError::Transport(
                "mock has no rule for this prompt".to_string(),
            ));
        };
        Ok(match behavior {
            MockBehavior::Always(code) => code.clone(),
            MockBehavior::WithContext {
                required,
                code,
                fallback,
            } => {
                if prompt.contains(required.as_str()) {
                    code.clone()
                } else {
                    fallback.clone()
                }
            }
            MockBehavior::Never(code) => code.clone(),
        })
    }
}

/// Offline client that reads the target's expected answer out of the
/// prompt's trailing chain-of-thought block and emits a minimal correct
/// program for it. Useful for exercising the full build loop without a
/// model.
pub struct EchoMockClient {
    pub delay: Duration,
}

impl EchoMockClient {
    pub fn new(delay: Duration) -> Self {
        EchoMockClient { delay }
    }
}

impl CompletionClient for EchoMockClient {
    fn complete(&self, prompt: &str) -> Result<String, PipelineError> {
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let answer = crate::dataset::retrieve_cot_answer(prompt)
            .map_err(|e| PipelineError::Transport(format!("echo mock: {e}")))?;
        Ok(format!(
            ":- use_module(library(clpq)).\n\nsolve(X) :-\n    {{X = {answer}}}.\n"
        ))
    }
}
