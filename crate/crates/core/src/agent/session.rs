use chrono::{DateTime, Utc};

use super::{agent_turn, Agent, AgentError, TurnInput, TurnOutput};
use crate::corpus::{AnnotatedOutcome, Dialogue, Event, GoalAnnotation};
use crate::lang::ExecLimits;
use crate::s3::{signature, S3State, Signature};
use crate::stack::{GoalStatus, ProgramStack};

pub const GREETING: &str = "How can I help you?";

/// One live conversation: its own environment, stack and transcript.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    /// Key agents use to look up scripted turns ("dialogue" in requests).
    pub script: String,
    pub fixture: String,
    pub created_at: DateTime<Utc>,
    pub env: S3State,
    pub stack: ProgramStack,
    pub events: Vec<Event>,
    pub turns: usize,
    /// Bumped by every state-changing operation.
    pub revision: u64,
    initial: S3State,
    opening: Option<String>,
}

impl Session {
    pub fn new(id: impl Into<String>, script: impl Into<String>, fixture: impl Into<String>, env: S3State) -> Self {
        Self {
            id: id.into(),
            script: script.into(),
            fixture: fixture.into(),
            created_at: Utc::now(),
            initial: env.clone(),
            env,
            stack: ProgramStack::new(),
            events: vec![Event::Agent(GREETING.into())],
            turns: 0,
            revision: 0,
            opening: Some(GREETING.into()),
        }
    }

    /// Replaces the agent's opening line; `None` lets the user speak first.
    pub fn with_opening(mut self, opening: Option<&str>) -> Self {
        self.opening = opening.map(str::to_string);
        self.events = self.opening.iter().cloned().map(Event::Agent).collect();
        self
    }

    pub fn initial_signature(&self) -> Signature {
        signature(&self.initial, None)
    }

    /// Signature of the current environment with no outcome attached.
    pub fn environment_signature(&self) -> Signature {
        signature(&self.env, None)
    }

    pub fn last_agent_turn(&self) -> &str {
        self.events
            .iter()
            .rev()
            .find_map(|e| match e {
                Event::Agent(t) => Some(t.as_str()),
                _ => None,
            })
            .unwrap_or("")
    }

    /// Runs one turn. On a backend failure the session is left untouched.
    pub fn user_turn(&mut self, agent: &dyn Agent, utterance: &str, limits: &ExecLimits) -> Result<TurnOutput, AgentError> {
        let mut stack = self.stack.clone();
        let mut env = self.env.clone();
        let input = TurnInput {
            dialogue: &self.script,
            turn: self.turns,
            prev_agent: self.last_agent_turn(),
            user: utterance,
        };
        let out = agent_turn(agent, input, &mut stack, &mut env, limits)?;
        self.stack = stack;
        self.env = env;
        self.events.push(Event::User(utterance.to_string()));
        if out.applied {
            for d in &out.directives {
                let deferred = out.deferred.iter().any(|x| x.uid == d.uid);
                let outcome = out.executions.iter().find(|x| x.uid == d.uid).map(|x| AnnotatedOutcome {
                    result: x.outcome.return_value.clone(),
                    error: x.outcome.error.clone(),
                    signature: x.signature.clone(),
                });
                self.events.push(Event::Goal(GoalAnnotation {
                    uid: d.uid.clone(),
                    status: if deferred { GoalStatus::Drafting } else { d.status },
                    code: d.code.clone(),
                    outcome,
                }));
            }
        }
        self.events.push(Event::Agent(out.response.clone()));
        self.turns += 1;
        self.revision += 1;
        Ok(out)
    }

    pub fn reset(&mut self) {
        self.env = self.initial.clone();
        self.stack = ProgramStack::new();
        self.events = self.opening.iter().cloned().map(Event::Agent).collect();
        self.turns = 0;
        self.revision += 1;
    }

    /// The conversation so far as an annotated corpus dialogue.
    pub fn transcript(&self) -> Dialogue {
        Dialogue {
            uid: self.id.clone(),
            initial_signature: self.initial_signature(),
            events: self.events.clone(),
        }
    }
}
