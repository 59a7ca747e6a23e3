use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use clap::ValueEnum;
use d2a_core::agent::{Agent, CannedClient, CompletionClient, HttpCompletionClient, LlmAgent, NoopAgent, OracleAgent};
use d2a_core::corpus::{Dialogue, FixtureDir};
use d2a_core::lang::ExecLimits;
use d2a_core::prompting::{extract_examples, Embedder, ExamplePool, HashedTrigramEmbedder, HttpEmbedder, PromptConfig, PromptSetting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AgentKind {
    /// Completion model from D2A_LLM_ENDPOINT / D2A_LLM_MODEL / D2A_LLM_API_KEY.
    Llm,
    /// Replays the annotations of the corpus.
    Oracle,
    /// Canned completions (from --completions, else derived from the corpus).
    Mock,
    Noop,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Llm => "llm",
            AgentKind::Oracle => "oracle",
            AgentKind::Mock => "mock",
            AgentKind::Noop => "noop",
        }
    }
}

impl FromStr for AgentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct AgentArgs {
    /// Prompt setting: doc, examples or doc+examples.
    #[arg(long, default_value = "doc+examples", value_parser = PromptSetting::from_str)]
    pub setting: PromptSetting,
    /// Number of retrieved examples.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Weight of utterance similarity in retrieval.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// JSON list of {dialogue, turn, phase, completion} for the mock agent.
    #[arg(long)]
    pub completions: Option<PathBuf>,
    /// Append completion requests to this JSON-lines file (llm agent).
    #[arg(long)]
    pub audit_log: Option<PathBuf>,
    /// External embedding service; the offline trigram embedder otherwise.
    #[arg(long)]
    pub embed_endpoint: Option<String>,
}

impl Default for AgentArgs {
    fn default() -> Self {
        let c = PromptConfig::default();
        Self {
            setting: c.setting,
            k: c.k,
            alpha: c.alpha,
            completions: None,
            audit_log: None,
            embed_endpoint: None,
        }
    }
}

fn pools(
    corpus: &[Dialogue],
    fixtures: &FixtureDir,
    embedder: &dyn Embedder,
) -> Result<(ExamplePool, ExamplePool), String> {
    let mut programs = Vec::new();
    let mut responses = Vec::new();
    for d in corpus {
        let env = fixtures.load(&d.uid).map_err(|e| e.to_string())?;
        let (p, r) = extract_examples(d, env, &ExecLimits::default()).map_err(|e| e.to_string())?;
        programs.extend(p);
        responses.extend(r);
    }
    let p = ExamplePool::build(programs, embedder).map_err(|e| e.to_string())?;
    let r = ExamplePool::build(responses, embedder).map_err(|e| e.to_string())?;
    Ok((p, r))
}

/// Builds an agent. `corpus` provides annotations (oracle, default mock
/// script) and the retrieval pool.
pub fn build_agent(
    kind: AgentKind,
    args: &AgentArgs,
    corpus: &[Dialogue],
    fixtures: &FixtureDir,
) -> Result<Arc<dyn Agent>, String> {
    let client: Arc<dyn CompletionClient> = match kind {
        AgentKind::Noop => return Ok(Arc::new(NoopAgent)),
        AgentKind::Oracle => return Ok(Arc::new(OracleAgent::from_corpus(corpus))),
        AgentKind::Mock => match &args.completions {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                Arc::new(CannedClient::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?)
            }
            None => Arc::new(CannedClient::from_corpus(corpus)),
        },
        AgentKind::Llm => {
            let mut c = HttpCompletionClient::from_env().map_err(|e| e.to_string())?;
            if let Some(path) = &args.audit_log {
                c = c.with_audit_log(path).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            Arc::new(c)
        }
    };
    let embedder: Arc<dyn Embedder> = match &args.embed_endpoint {
        Some(endpoint) => Arc::new(HttpEmbedder {
            endpoint: endpoint.clone(),
            api_key: std::env::var("D2A_EMBED_API_KEY").ok(),
            timeout: Duration::from_secs(30),
        }),
        None => Arc::new(HashedTrigramEmbedder),
    };
    if args.setting.uses_examples() && args.k == 0 {
        return Err("--k must be at least 1 for example-bearing settings".into());
    }
    let (programs, responses) = pools(corpus, fixtures, embedder.as_ref())?;
    if args.setting.uses_examples() && programs.is_empty() {
        return Err(format!("setting {} needs a non-empty example corpus", args.setting));
    }
    let config = PromptConfig {
        setting: args.setting,
        k: args.k,
        alpha: args.alpha,
    };
    Ok(Arc::new(LlmAgent::new(client, config, programs, responses, embedder)))
}
