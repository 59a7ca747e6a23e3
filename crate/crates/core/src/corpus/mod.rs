//! Annotated conversations: reading, writing, replay and statistics.

mod format;
mod replay;
mod stats;

use serde_json::Value as Json;

use crate::lang::ErrorRecord;
use crate::s3::Signature;
use crate::stack::{Directive, GoalStatus};

pub use format::{read_corpus, write_corpus, write_dialogue, write_turn, CorpusError};
pub use replay::{annotate, replay, verify, FixtureDir, ReplayError, ReplayStep};
pub use stats::{stats, CorpusStats, StatsError};

/// What the annotator recorded for a goal that reached `final`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedOutcome {
    pub result: Json,
    pub error: Option<ErrorRecord>,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalAnnotation {
    pub uid: String,
    pub status: GoalStatus,
    /// `None` for the self-closing form that keeps the current program.
    pub code: Option<String>,
    /// Present exactly when `status` is final.
    pub outcome: Option<AnnotatedOutcome>,
}

impl GoalAnnotation {
    pub fn directive(&self) -> Directive {
        Directive {
            uid: self.uid.clone(),
            status: self.status,
            code: self.code.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Agent(String),
    User(String),
    Goal(GoalAnnotation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dialogue {
    pub uid: String,
    pub initial_signature: Signature,
    pub events: Vec<Event>,
}

/// One user turn with everything the annotator attached to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Turn<'a> {
    pub index: usize,
    /// The agent utterance right before the user spoke ("" if none).
    pub prev_agent: &'a str,
    pub user: &'a str,
    pub goals: Vec<&'a GoalAnnotation>,
    pub response: &'a str,
}

impl<'a> Turn<'a> {
    pub fn directives(&self) -> Vec<Directive> {
        self.goals.iter().map(|g| g.directive()).collect()
    }

    pub fn executes(&self) -> bool {
        self.goals.iter().any(|g| g.status == GoalStatus::Final)
    }
}

impl Dialogue {
    /// Splits the event list into user turns. Assumes the validated pattern.
    pub fn turns(&self) -> Vec<Turn<'_>> {
        let mut out = Vec::new();
        let mut prev_agent = "";
        let mut current: Option<Turn> = None;
        for e in &self.events {
            match e {
                Event::User(text) => {
                    current = Some(Turn {
                        index: out.len(),
                        prev_agent,
                        user: text,
                        goals: Vec::new(),
                        response: "",
                    })
                }
                Event::Goal(g) => {
                    if let Some(t) = current.as_mut() {
                        t.goals.push(g);
                    }
                }
                Event::Agent(text) => {
                    if let Some(mut t) = current.take() {
                        t.response = text;
                        out.push(t);
                    }
                    prev_agent = text;
                }
            }
        }
        out
    }

    pub fn user_turn_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::User(_))).count()
    }

    pub fn goals(&self) -> impl Iterator<Item = &GoalAnnotation> {
        self.events.iter().filter_map(|e| match e {
            Event::Goal(g) => Some(g),
            _ => None,
        })
    }
}
