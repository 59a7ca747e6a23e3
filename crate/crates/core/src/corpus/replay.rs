use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{AnnotatedOutcome, Dialogue, Event};
use crate::lang::{ExecLimits, Outcome};
use crate::s3::{load_fixture, signature, FixtureError, S3State, Signature};
use crate::stack::{ProgramStack, StackError};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayStep {
    /// Index of the user turn the execution belongs to.
    pub turn: usize,
    pub uid: String,
    pub outcome: Outcome,
    pub signature: Signature,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("dialogue {dialogue}: fixture signature {got} does not match initial signature {expected}")]
    FixtureMismatch {
        dialogue: String,
        expected: Signature,
        got: Signature,
    },
    #[error("dialogue {dialogue}, goal {goal}: {field} mismatch: expected {expected}, got {got}")]
    Mismatch {
        dialogue: String,
        goal: String,
        field: &'static str,
        expected: String,
        got: String,
    },
    #[error("dialogue {dialogue}, turn {turn}: {error}")]
    Stack {
        dialogue: String,
        turn: usize,
        error: StackError,
    },
    #[error("dialogue {dialogue}, goal {goal}: final program still has placeholders")]
    Unresolved { dialogue: String, goal: String },
    #[error("dialogue {dialogue}: no fixture found")]
    FixtureMissing { dialogue: String },
    #[error("dialogue {dialogue}: {error}")]
    Fixture { dialogue: String, error: FixtureError },
    #[error("{path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },
}

fn run(
    d: &Dialogue,
    env: &mut S3State,
    limits: &ExecLimits,
) -> Result<Vec<ReplayStep>, ReplayError> {
    let mut stack = ProgramStack::new();
    let mut steps = Vec::new();
    for turn in d.turns() {
        let result = stack
            .apply_turn(&turn.directives(), env, limits)
            .map_err(|error| ReplayError::Stack {
                dialogue: d.uid.clone(),
                turn: turn.index,
                error,
            })?;
        if let Some(def) = result.deferred.first() {
            return Err(ReplayError::Unresolved {
                dialogue: d.uid.clone(),
                goal: def.uid.clone(),
            });
        }
        steps.extend(result.executions.into_iter().map(|e| ReplayStep {
            turn: turn.index,
            uid: e.uid,
            outcome: e.outcome,
            signature: e.signature,
        }));
    }
    Ok(steps)
}

/// Executes every final goal in order, after checking that `env` is the
/// state the dialogue was annotated against.
pub fn replay(
    d: &Dialogue,
    env: &mut S3State,
    limits: &ExecLimits,
) -> Result<Vec<ReplayStep>, ReplayError> {
    let got = signature(env, None);
    if got != d.initial_signature {
        return Err(ReplayError::FixtureMismatch {
            dialogue: d.uid.clone(),
            expected: d.initial_signature.clone(),
            got,
        });
    }
    run(d, env, limits)
}

/// Replays and compares against the annotated signatures, results and
/// error names.
pub fn verify(
    d: &Dialogue,
    env: &mut S3State,
    limits: &ExecLimits,
) -> Result<Vec<ReplayStep>, ReplayError> {
    let steps = replay(d, env, limits)?;
    let annotated = d.goals().filter_map(|g| g.outcome.as_ref().map(|o| (g, o)));
    for (step, (goal, expected)) in steps.iter().zip(annotated) {
        let mismatch = |field, expected: String, got: String| ReplayError::Mismatch {
            dialogue: d.uid.clone(),
            goal: goal.uid.clone(),
            field,
            expected,
            got,
        };
        if step.signature != expected.signature {
            return Err(mismatch("signature", expected.signature.to_string(), step.signature.to_string()));
        }
        if step.outcome.return_value != expected.result {
            return Err(mismatch("result", expected.result.to_string(), step.outcome.return_value.to_string()));
        }
        let name = |e: &Option<crate::lang::ErrorRecord>| e.as_ref().map(|e| e.name.clone()).unwrap_or_default();
        if name(&step.outcome.error) != name(&expected.error) {
            return Err(mismatch("error", name(&expected.error), name(&step.outcome.error)));
        }
    }
    Ok(steps)
}

/// Recomputes the initial signature and every final goal's outcome from
/// `env`, returning the re-annotated dialogue.
pub fn annotate(d: &Dialogue, env: &mut S3State, limits: &ExecLimits) -> Result<Dialogue, ReplayError> {
    let initial_signature = signature(env, None);
    let steps = run(d, env, limits)?;
    let mut steps = steps.into_iter();
    let mut out = d.clone();
    out.initial_signature = initial_signature;
    for e in &mut out.events {
        if let Event::Goal(g) = e {
            if g.status == crate::stack::GoalStatus::Final {
                let step = steps.next().expect("one execution per final goal");
                g.outcome = Some(AnnotatedOutcome {
                    result: step.outcome.return_value,
                    error: step.outcome.error,
                    signature: step.signature,
                });
            }
        }
    }
    Ok(out)
}

/// Directory of fixture documents: `index.json` (dialogue uid to file name)
/// if present, otherwise `<uid>.json`.
#[derive(Debug, Clone)]
pub struct FixtureDir {
    root: PathBuf,
    index: BTreeMap<String, String>,
}

impl FixtureDir {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, ReplayError> {
        let root = root.as_ref().to_path_buf();
        let index_path = root.join("index.json");
        let index = match std::fs::read_to_string(&index_path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| ReplayError::Io {
                path: index_path,
                error: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            })?,
            Err(_) => BTreeMap::new(),
        };
        Ok(Self { root, index })
    }

    pub fn path_for(&self, dialogue: &str) -> PathBuf {
        match self.index.get(dialogue) {
            Some(file) => self.root.join(file),
            None => self.root.join(format!("{dialogue}.json")),
        }
    }

    pub fn load(&self, dialogue: &str) -> Result<S3State, ReplayError> {
        let path = self.path_for(dialogue);
        let text = std::fs::read_to_string(&path).map_err(|_| ReplayError::FixtureMissing {
            dialogue: dialogue.to_string(),
        })?;
        load_fixture(&text).map_err(|error| ReplayError::Fixture {
            dialogue: dialogue.to_string(),
            error,
        })
    }

    /// Loads a fixture by its own file stem, ignoring the index.
    pub fn load_named(&self, name: &str) -> Result<S3State, ReplayError> {
        let path = self.root.join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).map_err(|_| ReplayError::FixtureMissing {
            dialogue: name.to_string(),
        })?;
        load_fixture(&text).map_err(|error| ReplayError::Fixture {
            dialogue: name.to_string(),
            error,
        })
    }
}
