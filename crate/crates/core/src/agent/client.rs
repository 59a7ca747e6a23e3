use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Dialogue;
use crate::prompting::{render_target, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Program,
    Response,
}

/// Where a request comes from; used for audit records and canned lookups.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestTag {
    pub dialogue: String,
    pub turn: usize,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub stop: Vec<String>,
    pub max_tokens: u32,
    pub temperature: f64,
    pub tag: RequestTag,
}

impl CompletionRequest {
    pub fn greedy(prompt: String, max_tokens: u32, tag: RequestTag) -> Self {
        Self {
            prompt,
            stop: vec!["</output>".into()],
            max_tokens,
            temperature: 0.0,
            tag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompletionError {
    #[error("completion backend unavailable: {0}")]
    Unavailable(String),
}

/// A text completion backend. Shared across evaluation workers.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, CompletionError>;
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Serialize)]
struct AuditRecord<'a> {
    timestamp: String,
    dialogue: &'a str,
    turn: usize,
    phase: Phase,
    prompt_hash: String,
    completion: &'a str,
}

/// Client for an OpenAI-style `/completions` endpoint.
pub struct HttpCompletionClient {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
    /// Minimum spacing between requests, shared by all callers.
    pub min_interval: Option<Duration>,
    last_request: Mutex<Option<Instant>>,
    audit: Option<Mutex<File>>,
}

impl HttpCompletionClient {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key,
            model: model.into(),
            timeout: Duration::from_secs(60),
            retries: 3,
            backoff: Duration::from_millis(500),
            min_interval: None,
            last_request: Mutex::new(None),
            audit: None,
        }
    }

    /// Reads `D2A_LLM_ENDPOINT`, `D2A_LLM_API_KEY` and `D2A_LLM_MODEL`.
    pub fn from_env() -> Result<Self, CompletionError> {
        let endpoint = std::env::var("D2A_LLM_ENDPOINT")
            .map_err(|_| CompletionError::Unavailable("D2A_LLM_ENDPOINT is not set".into()))?;
        let model = std::env::var("D2A_LLM_MODEL").unwrap_or_default();
        Ok(Self::new(endpoint, model, std::env::var("D2A_LLM_API_KEY").ok()))
    }

    pub fn with_audit_log(mut self, path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.audit = Some(Mutex::new(file));
        Ok(self)
    }

    fn throttle(&self) {
        let Some(gap) = self.min_interval else { return };
        let mut last = self.last_request.lock().unwrap();
        if let Some(t) = *last {
            let since = t.elapsed();
            if since < gap {
                std::thread::sleep(gap - since);
            }
        }
        *last = Some(Instant::now());
    }

    fn attempt(&self, agent: &ureq::Agent, req: &CompletionRequest) -> Result<String, String> {
        self.throttle();
        let mut call = agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let body = serde_json::json!({
            "model": self.model,
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
            "stop": req.stop,
        });
        let mut resp = call.send_json(body).map_err(|e| e.to_string())?;
        let value: serde_json::Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        value
            .pointer("/choices/0/text")
            .and_then(|t| t.as_str())
            .map(str::to_string)
            .ok_or_else(|| "response has no choices[0].text".to_string())
    }

    fn record(&self, req: &CompletionRequest, completion: &str) {
        let Some(audit) = &self.audit else { return };
        let rec = AuditRecord {
            timestamp: chrono::Utc::now().to_rfc3339(),
            dialogue: &req.tag.dialogue,
            turn: req.tag.turn,
            phase: req.tag.phase,
            prompt_hash: prompt_hash(&req.prompt),
            completion,
        };
        if let Ok(line) = serde_json::to_string(&rec) {
            let mut f = audit.lock().unwrap();
            let _ = writeln!(f, "{line}");
        }
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, req: &CompletionRequest) -> Result<String, CompletionError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .new_agent();
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.attempt(&agent, req) {
                Ok(text) => {
                    self.record(req, &text);
                    return Ok(text);
                }
                Err(e) => last = e,
            }
        }
        Err(CompletionError::Unavailable(format!(
            "{} after {} attempts: {last}",
            self.endpoint,
            self.retries + 1
        )))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CannedEntry {
    dialogue: String,
    turn: usize,
    phase: Phase,
    completion: String,
}

/// Replays fixed completions keyed by dialogue, turn and phase. A missing
/// entry completes to the empty string.
#[derive(Debug, Clone, Default)]
pub struct CannedClient {
    entries: HashMap<(String, usize, Phase), String>,
}

impl CannedClient {
    pub fn new() -> Self {
        Self::default()
    }

    /// Completions that reproduce the annotated programs and responses.
    pub fn from_corpus(corpus: &[Dialogue]) -> Self {
        let mut c = Self::new();
        for d in corpus {
            for t in d.turns() {
                c.set(&d.uid, t.index, Phase::Program, render_target(&Target::Program(t.directives())));
                c.set(&d.uid, t.index, Phase::Response, render_target(&Target::Response(t.response.to_string())));
            }
        }
        c
    }

    /// Reads a JSON list of `{dialogue, turn, phase, completion}` records.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let entries: Vec<CannedEntry> = serde_json::from_str(text)?;
        let mut c = Self::new();
        for e in entries {
            c.set(&e.dialogue, e.turn, e.phase, e.completion);
        }
        Ok(c)
    }

    pub fn set(&mut self, dialogue: &str, turn: usize, phase: Phase, completion: impl Into<String>) {
        self.entries.insert((dialogue.to_string(), turn, phase), completion.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl CompletionClient for CannedClient {
    fn complete(&self, req: &CompletionRequest) -> Result<String, CompletionError> {
        let key = (req.tag.dialogue.clone(), req.tag.turn, req.tag.phase);
        Ok(self.entries.get(&key).cloned().unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag() -> RequestTag {
        RequestTag {
            dialogue: "d".into(),
            turn: 0,
            phase: Phase::Program,
        }
    }

    #[test]
    fn unreachable_endpoint_fails_after_retries() {
        let mut c = HttpCompletionClient::new("http://127.0.0.1:9/v1/completions", "m", None);
        c.timeout = Duration::from_millis(300);
        c.backoff = Duration::from_millis(1);
        let err = c.complete(&CompletionRequest::greedy("p".into(), 8, tag())).unwrap_err();
        assert!(err.to_string().contains("after 4 attempts"), "{err}");
    }

    #[test]
    fn canned_lookup() {
        let c = CannedClient::from_json(r#"[{"dialogue": "d", "turn": 0, "phase": "program", "completion": "x"}]"#).unwrap();
        assert_eq!(c.complete(&CompletionRequest::greedy("p".into(), 8, tag())).unwrap(), "x");
        let mut other = tag();
        other.phase = Phase::Response;
        assert_eq!(c.complete(&CompletionRequest::greedy("p".into(), 8, other)).unwrap(), "");
    }
}
