use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::embed::{cosine, EmbedError, Embedder};
use crate::corpus::{Dialogue, ReplayError};
use crate::lang::{tokenize_lenient, ExecLimits, TokenKind, CONVERSATIONAL_EXCEPTIONS};
use crate::s3::{S3State, API_NAMES};
use crate::stack::{Directive, ProgramStack};

/// API names followed by the conversational exceptions.
pub fn keywords() -> Vec<&'static str> {
    API_NAMES.iter().chain(CONVERSATIONAL_EXCEPTIONS.iter()).copied().collect()
}

/// Identifier-token counts of each keyword in a serialized stack.
pub fn keyword_counts(stack: &str) -> Vec<f64> {
    let kws = keywords();
    let mut counts = vec![0.0; kws.len()];
    for t in tokenize_lenient(stack) {
        if t.kind == TokenKind::Name {
            if let Some(i) = kws.iter().position(|k| *k == t.lexeme) {
                counts[i] += 1.0;
            }
        }
    }
    counts
}

pub fn state_similarity(a: &str, b: &str) -> f64 {
    cosine(&keyword_counts(a), &keyword_counts(b))
}

/// The text compared between a query and an example: previous agent turn
/// followed by the user turn.
pub fn utterance_text(prev_agent: &str, user: &str) -> String {
    format!("{prev_agent} {user}").trim().to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Target {
    Program(Vec<Directive>),
    Response(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    /// Source dialogue, used to keep a dialogue's own turns out of its prompts.
    pub dialogue: String,
    pub turn: usize,
    /// Serialized `<stack>` block.
    pub stack: String,
    pub prev_agent: String,
    pub user: String,
    pub target: Target,
}

/// What the model is asked about.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub stack: String,
    pub prev_agent: String,
    pub user: String,
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("example pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("pool cache was built with embedder {found}, expected {expected}")]
    EmbedderMismatch { expected: String, found: String },
    #[error("pool cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored<'a> {
    pub index: usize,
    pub score: f64,
    pub example: &'a Example,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePool {
    pub embedder: String,
    pub examples: Vec<Example>,
    vectors: Vec<Vec<f64>>,
}

impl ExamplePool {
    pub fn build(examples: Vec<Example>, embedder: &dyn Embedder) -> Result<Self, EmbedError> {
        let vectors = examples
            .iter()
            .map(|e| embedder.embed(&utterance_text(&e.prev_agent, &e.user)))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            embedder: embedder.id(),
            examples,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)
    }

    pub fn load(path: &Path, embedder: &dyn Embedder) -> Result<Self, RetrievalError> {
        let text = std::fs::read_to_string(path).map_err(|e| RetrievalError::Cache(e.to_string()))?;
        let pool: Self = serde_json::from_str(&text).map_err(|e| RetrievalError::Cache(e.to_string()))?;
        if pool.embedder != embedder.id() {
            return Err(RetrievalError::EmbedderMismatch {
                expected: embedder.id(),
                found: pool.embedder,
            });
        }
        Ok(pool)
    }

    /// `sim(stack) + alpha * sim(utterances)` for every usable example.
    pub fn score_all(
        &self,
        query: &Query,
        alpha: f64,
        exclude_dialogue: Option<&str>,
        embedder: &dyn Embedder,
    ) -> Result<Vec<Scored<'_>>, RetrievalError> {
        let q_counts = keyword_counts(&query.stack);
        let q_vec = embedder.embed(&utterance_text(&query.prev_agent, &query.user))?;
        Ok(self
            .examples
            .iter()
            .enumerate()
            .filter(|(_, e)| Some(e.dialogue.as_str()) != exclude_dialogue)
            .map(|(index, example)| Scored {
                index,
                score: cosine(&q_counts, &keyword_counts(&example.stack)) + alpha * cosine(&q_vec, &self.vectors[index]),
                example,
            })
            .collect())
    }

    /// The `k` best examples, worst first so the best sits next to the query.
    /// Ties keep pool order.
    pub fn retrieve(
        &self,
        query: &Query,
        k: usize,
        alpha: f64,
        exclude_dialogue: Option<&str>,
        embedder: &dyn Embedder,
    ) -> Result<Vec<Scored<'_>>, RetrievalError> {
        let mut scored = self.score_all(query, alpha, exclude_dialogue, embedder)?;
        if scored.is_empty() {
            return Err(RetrievalError::EmptyPool);
        }
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
        scored.truncate(k);
        scored.reverse();
        Ok(scored)
    }
}

/// Program and response examples of one dialogue, reconstructed by replay.
pub fn extract_examples(
    d: &Dialogue,
    mut env: S3State,
    limits: &ExecLimits,
) -> Result<(Vec<Example>, Vec<Example>), ReplayError> {
    let mut stack = ProgramStack::new();
    let mut programs = Vec::new();
    let mut responses = Vec::new();
    for turn in d.turns() {
        let before = stack.serialize();
        let directives = turn.directives();
        stack
            .apply_turn(&directives, &mut env, limits)
            .map_err(|error| ReplayError::Stack {
                dialogue: d.uid.clone(),
                turn: turn.index,
                error,
            })?;
        let base = Example {
            dialogue: d.uid.clone(),
            turn: turn.index,
            stack: before,
            prev_agent: turn.prev_agent.to_string(),
            user: turn.user.to_string(),
            target: Target::Program(directives),
        };
        responses.push(Example {
            stack: stack.serialize(),
            target: Target::Response(turn.response.to_string()),
            ..base.clone()
        });
        programs.push(base);
    }
    Ok((programs, responses))
}
