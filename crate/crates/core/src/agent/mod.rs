//! Agents, the per-turn loop, interactive sessions and evaluation runners.

mod client;
mod eval;
mod session;

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Dialogue;
use crate::lang::ExecLimits;
use crate::prompting::{
    build_program_prompt, build_response_prompt, parse_program_output, parse_response_output, ApiDocument, Embedder,
    Example, ExamplePool, PromptConfig, PromptError, Query, RetrievalError,
};
use crate::s3::S3State;
use crate::stack::{Deferred, Directive, Execution, ProgramStack};

pub use client::{
    prompt_hash, CannedClient, CompletionClient, CompletionError, CompletionRequest, HttpCompletionClient, Phase,
    RequestTag,
};
pub use eval::{
    run_e2e_eval, run_teacher_forced, DialogueReport, EvalCounts, EvalError, EvalOptions, EvalReport, MetricConfig,
    TeacherForcedReport, TeacherForcedTurn, TurnReport,
};
pub use session::{Session, GREETING};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Completion(#[from] CompletionError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// What an agent sees when asked for one phase of a turn.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnContext<'a> {
    pub dialogue: &'a str,
    pub turn: usize,
    /// Serialized stack: before execution for programs, after it for responses.
    pub stack: String,
    pub prev_agent: &'a str,
    pub user: &'a str,
}

impl TurnContext<'_> {
    pub fn query(&self) -> Query {
        Query {
            stack: self.stack.clone(),
            prev_agent: self.prev_agent.to_string(),
            user: self.user.to_string(),
        }
    }
}

/// A parsed prediction; on unreadable output `value` is the empty default
/// and `parse_error` says why.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub value: T,
    pub parse_error: Option<String>,
}

impl<T> Prediction<T> {
    pub fn ok(value: T) -> Self {
        Self {
            value,
            parse_error: None,
        }
    }
}

pub trait Agent: Send + Sync {
    /// Short description recorded in reports.
    fn describe(&self) -> String;
    fn predict_program(&self, ctx: &TurnContext) -> Result<Prediction<Vec<Directive>>, AgentError>;
    fn respond(&self, ctx: &TurnContext) -> Result<Prediction<String>, AgentError>;
}

/// Does nothing and says nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoopAgent;

impl Agent for NoopAgent {
    fn describe(&self) -> String {
        "noop".into()
    }
    fn predict_program(&self, _: &TurnContext) -> Result<Prediction<Vec<Directive>>, AgentError> {
        Ok(Prediction::ok(Vec::new()))
    }
    fn respond(&self, _: &TurnContext) -> Result<Prediction<String>, AgentError> {
        Ok(Prediction::ok(String::new()))
    }
}

/// Replays annotated directives and responses. Unknown turns are no-ops.
#[derive(Debug, Clone, Default)]
pub struct OracleAgent {
    turns: HashMap<(String, usize), (Vec<Directive>, String)>,
}

impl OracleAgent {
    pub fn from_corpus(corpus: &[Dialogue]) -> Self {
        let mut turns = HashMap::new();
        for d in corpus {
            for t in d.turns() {
                turns.insert((d.uid.clone(), t.index), (t.directives(), t.response.to_string()));
            }
        }
        Self { turns }
    }

    fn get(&self, ctx: &TurnContext) -> Option<&(Vec<Directive>, String)> {
        self.turns.get(&(ctx.dialogue.to_string(), ctx.turn))
    }
}

impl Agent for OracleAgent {
    fn describe(&self) -> String {
        "oracle".into()
    }
    fn predict_program(&self, ctx: &TurnContext) -> Result<Prediction<Vec<Directive>>, AgentError> {
        Ok(Prediction::ok(self.get(ctx).map(|t| t.0.clone()).unwrap_or_default()))
    }
    fn respond(&self, ctx: &TurnContext) -> Result<Prediction<String>, AgentError> {
        Ok(Prediction::ok(self.get(ctx).map(|t| t.1.clone()).unwrap_or_default()))
    }
}

/// Prompts a completion model with retrieved examples.
pub struct LlmAgent {
    pub client: Arc<dyn CompletionClient>,
    pub doc: ApiDocument,
    pub config: PromptConfig,
    pub programs: ExamplePool,
    pub responses: ExamplePool,
    pub embedder: Arc<dyn Embedder>,
    pub program_tokens: u32,
    pub response_tokens: u32,
}

impl LlmAgent {
    pub fn new(
        client: Arc<dyn CompletionClient>,
        config: PromptConfig,
        programs: ExamplePool,
        responses: ExamplePool,
        embedder: Arc<dyn Embedder>,
    ) -> Self {
        Self {
            client,
            doc: ApiDocument::s3(),
            config,
            programs,
            responses,
            embedder,
            program_tokens: 512,
            response_tokens: 128,
        }
    }

    fn examples<'p>(&self, pool: &'p ExamplePool, ctx: &TurnContext) -> Result<Vec<&'p Example>, AgentError> {
        if !self.config.setting.uses_examples() {
            return Ok(Vec::new());
        }
        let scored = pool.retrieve(
            &ctx.query(),
            self.config.k,
            self.config.alpha,
            Some(ctx.dialogue),
            self.embedder.as_ref(),
        )?;
        Ok(scored.into_iter().map(|s| s.example).collect())
    }

    fn complete(&self, ctx: &TurnContext, prompt: String, phase: Phase, max_tokens: u32) -> Result<String, AgentError> {
        let tag = RequestTag {
            dialogue: ctx.dialogue.to_string(),
            turn: ctx.turn,
            phase,
        };
        Ok(self.client.complete(&CompletionRequest::greedy(prompt, max_tokens, tag))?)
    }
}

impl Agent for LlmAgent {
    fn describe(&self) -> String {
        format!(
            "llm setting={} k={} alpha={} embedder={}",
            self.config.setting,
            self.config.k,
            self.config.alpha,
            self.embedder.id()
        )
    }

    fn predict_program(&self, ctx: &TurnContext) -> Result<Prediction<Vec<Directive>>, AgentError> {
        let examples = self.examples(&self.programs, ctx)?;
        let prompt = build_program_prompt(self.config.setting, &self.doc, &examples, &ctx.query())?;
        let text = self.complete(ctx, prompt, Phase::Program, self.program_tokens)?;
        Ok(match parse_program_output(&text) {
            Ok(d) => Prediction::ok(d),
            Err(e) => Prediction {
                value: Vec::new(),
                parse_error: Some(e.to_string()),
            },
        })
    }

    fn respond(&self, ctx: &TurnContext) -> Result<Prediction<String>, AgentError> {
        let examples = self.examples(&self.responses, ctx)?;
        let prompt = build_response_prompt(self.config.setting, &examples, &ctx.query())?;
        let text = self.complete(ctx, prompt, Phase::Response, self.response_tokens)?;
        Ok(match parse_response_output(&text) {
            Ok(r) => Prediction::ok(r),
            Err(e) => Prediction {
                value: String::new(),
                parse_error: Some(e.to_string()),
            },
        })
    }
}

/// The user-facing side of one turn.
#[derive(Debug, Clone, Copy)]
pub struct TurnInput<'a> {
    pub dialogue: &'a str,
    pub turn: usize,
    pub prev_agent: &'a str,
    pub user: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnOutput {
    /// Directives as predicted, even when the stack rejected them.
    pub directives: Vec<Directive>,
    pub executions: Vec<Execution>,
    pub deferred: Vec<Deferred>,
    /// False when the stack refused the directives and the turn was a no-op.
    pub applied: bool,
    pub response: String,
    /// Degraded-mode events: unreadable outputs and rejected directives.
    pub notes: Vec<String>,
}

/// Program prediction, stack update with executions, then response
/// generation over the updated stack. Bad model output degrades to a no-op
/// turn or an empty response; only backend failures are errors.
pub fn agent_turn(
    agent: &dyn Agent,
    input: TurnInput,
    stack: &mut ProgramStack,
    env: &mut S3State,
    limits: &ExecLimits,
) -> Result<TurnOutput, AgentError> {
    let mut notes = Vec::new();
    let ctx = TurnContext {
        dialogue: input.dialogue,
        turn: input.turn,
        stack: stack.serialize(),
        prev_agent: input.prev_agent,
        user: input.user,
    };
    let program = agent.predict_program(&ctx)?;
    if let Some(e) = program.parse_error {
        notes.push(format!("program output: {e}"));
    }
    let directives = program.value;
    let (result, applied) = match stack.apply_turn(&directives, env, limits) {
        Ok(r) => (r, true),
        Err(e) => {
            notes.push(format!("directives rejected: {e}"));
            (Default::default(), false)
        }
    };
    let ctx = TurnContext {
        stack: stack.serialize(),
        ..ctx
    };
    let response = agent.respond(&ctx)?;
    if let Some(e) = response.parse_error {
        notes.push(format!("response output: {e}"));
    }
    Ok(TurnOutput {
        directives,
        executions: result.executions,
        deferred: result.deferred,
        applied,
        response: response.value,
        notes,
    })
}
