//! Text-completion transport.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::AgentError;

pub trait CompletionClient: Send + Sync {
    /// Identifies the model; becomes part of the backend id and cache keys.
    fn model_id(&self) -> &str;

    fn complete(&self, prompt: &str) -> Result<String, AgentError>;
}

/// Adapter turning a closure into a client. Used for simulated models.
pub struct FnClient<F> {
    model: String,
    f: F,
}

impl<F> FnClient<F>
where
    F: Fn(&str) -> Result<String, AgentError> + Send + Sync,
{
    pub fn new(model: &str, f: F) -> Self {
        FnClient {
            model: model.to_string(),
            f,
        }
    }
}

impl<F> CompletionClient for FnClient<F>
where
    F: Fn(&str) -> Result<String, AgentError> + Send + Sync,
{
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str) -> Result<String, AgentError> {
        (self.f)(prompt)
    }
}

pub const ENV_ENDPOINT: &str = "FACTGRAPH_ENDPOINT";
pub const ENV_API_KEY: &str = "FACTGRAPH_API_KEY";
pub const ENV_MODEL: &str = "FACTGRAPH_MODEL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub endpoint: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            endpoint: String::new(),
            api_key: None,
            model: String::new(),
            temperature: 0.0,
            max_tokens: 1024,
            timeout_secs: 120,
        }
    }
}

impl ModelConfig {
    /// Overlay `FACTGRAPH_ENDPOINT`, `FACTGRAPH_API_KEY` and `FACTGRAPH_MODEL`.
    pub fn with_env(mut self) -> Self {
        if let Ok(v) = std::env::var(ENV_ENDPOINT) {
            self.endpoint = v;
        }
        if let Ok(v) = std::env::var(ENV_API_KEY) {
            self.api_key = Some(v);
        }
        if let Ok(v) = std::env::var(ENV_MODEL) {
            self.model = v;
        }
        self
    }
}

/// POSTs `{model, prompt, temperature, max_tokens}` as JSON and reads the
/// completion text from the reply.
pub struct HttpCompletionClient {
    config: ModelConfig,
    agent: ureq::Agent,
}

impl HttpCompletionClient {
    pub fn new(config: ModelConfig) -> Result<Self, AgentError> {
        if config.endpoint.is_empty() {
            return Err(AgentError::Transport(format!(
                "no endpoint configured (set {ENV_ENDPOINT})"
            )));
        }
        if config.model.is_empty() {
            return Err(AgentError::Transport(format!(
                "no model configured (set {ENV_MODEL})"
            )));
        }
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        Ok(HttpCompletionClient { config, agent })
    }
}

impl CompletionClient for HttpCompletionClient {
    fn model_id(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, prompt: &str) -> Result<String, AgentError> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let body = json!({
            "model": self.config.model,
            "prompt": prompt,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let reply: Value = req
            .send_json(body)
            .map_err(|e| AgentError::Transport(e.to_string()))?
            .into_json()
            .map_err(|e| AgentError::Transport(format!("reply is not JSON: {e}")))?;
        completion_text(&reply)
            .ok_or_else(|| AgentError::Transport(format!("no completion text in reply: {reply}")))
    }
}

/// Accepts `choices[0].text`, `choices[0].message.content`, `text` or
/// `response`.
fn completion_text(v: &Value) -> Option<String> {
    let first = v.get("choices").and_then(|c| c.get(0));
    [
        first.and_then(|c| c.get("text")),
        first.and_then(|c| c.pointer("/message/content")),
        v.get("text"),
        v.get("response"),
    ]
    .into_iter()
    .flatten()
    .find_map(|x| x.as_str().map(str::to_string))
}
