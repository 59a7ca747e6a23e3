//! The program stack: goals with statuses, revisions and execution.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::lang::{execute, parse, Ast, ExecError, ExecLimits, Outcome, ParseError};
use crate::s3::{signature, S3State, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalStatus {
    Drafting,
    Final,
    Abandoned,
}

impl GoalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            GoalStatus::Drafting => "drafting",
            GoalStatus::Final => "final",
            GoalStatus::Abandoned => "abandoned",
        }
    }

    pub fn is_terminal(self) -> bool {
        self != GoalStatus::Drafting
    }
}

impl fmt::Display for GoalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GoalStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "drafting" => Ok(GoalStatus::Drafting),
            "final" => Ok(GoalStatus::Final),
            "abandoned" => Ok(GoalStatus::Abandoned),
            other => Err(format!("unknown goal status {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Goal {
    pub uid: String,
    pub status: GoalStatus,
    /// Program text as written, with common indentation removed.
    pub code: String,
    pub ast: Ast,
    pub outcome: Option<Outcome>,
    pub post_signature: Option<Signature>,
}

/// Goals bottom to top; the last one is the most recently touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProgramStack {
    pub goals: Vec<Goal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    pub uid: String,
    pub status: GoalStatus,
    /// `None` keeps the goal's current code.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub uid: String,
    pub outcome: Outcome,
    pub signature: Signature,
}

/// A finalization that was refused because holes remain; the goal stays drafting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deferred {
    pub uid: String,
    pub placeholders: BTreeSet<u32>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TurnResult {
    pub executions: Vec<Execution>,
    pub deferred: Vec<Deferred>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StackError {
    #[error("goal {uid}: illegal transition {from} -> {to}")]
    IllegalTransition {
        uid: String,
        from: GoalStatus,
        to: GoalStatus,
    },
    #[error("goal {uid}: a new goal needs a program")]
    MissingCode { uid: String },
    #[error("goal {uid}: {error}")]
    Parse { uid: String, error: ParseError },
}

/// Strips blank edge lines, trailing spaces and the common indentation.
pub fn normalize_code(text: &str) -> String {
    let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    let start = lines.iter().position(|l| !l.is_empty()).unwrap_or(lines.len());
    let end = lines.iter().rposition(|l| !l.is_empty()).map_or(start, |i| i + 1);
    let body = &lines[start..end];
    let indent = body
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| l.len() - l.trim_start_matches(' ').len())
        .min()
        .unwrap_or(0);
    body.iter()
        .map(|l| if l.is_empty() { "" } else { &l[indent..] })
        .collect::<Vec<_>>()
        .join("\n")
}

impl ProgramStack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn get(&self, uid: &str) -> Option<&Goal> {
        self.goals.iter().find(|g| g.uid == uid)
    }

    pub fn top(&self) -> Option<&Goal> {
        self.goals.last()
    }

    fn take(&mut self, uid: &str) -> Option<Goal> {
        let at = self.goals.iter().position(|g| g.uid == uid)?;
        Some(self.goals.remove(at))
    }

    /// Applies one turn of directives in order. Structural problems reject
    /// the whole turn and leave both stack and environment untouched; goals
    /// reaching `final` then run sequentially against `env`.
    pub fn apply_turn(
        &mut self,
        directives: &[Directive],
        env: &mut S3State,
        limits: &ExecLimits,
    ) -> Result<TurnResult, StackError> {
        let mut next = self.clone();
        let mut to_run = Vec::new();
        let mut result = TurnResult::default();

        for d in directives {
            let mut goal = match next.take(&d.uid) {
                Some(g) => {
                    if g.status.is_terminal() {
                        return Err(StackError::IllegalTransition {
                            uid: d.uid.clone(),
                            from: g.status,
                            to: d.status,
                        });
                    }
                    g
                }
                None => {
                    let Some(code) = &d.code else {
                        return Err(StackError::MissingCode { uid: d.uid.clone() });
                    };
                    Goal {
                        uid: d.uid.clone(),
                        status: GoalStatus::Drafting,
                        code: normalize_code(code),
                        ast: Ast::default(),
                        outcome: None,
                        post_signature: None,
                    }
                }
            };
            let new_code = d.code.as_ref().map(|c| normalize_code(c));
            if d.status != GoalStatus::Abandoned {
                if let Some(code) = new_code.or_else(|| goal.ast.statements.is_empty().then(|| goal.code.clone())) {
                    goal.ast = parse(&code).map_err(|error| StackError::Parse {
                        uid: d.uid.clone(),
                        error,
                    })?;
                    goal.code = code;
                }
            }
            goal.status = d.status;
            if d.status == GoalStatus::Final {
                let holes = goal.ast.placeholders();
                if holes.is_empty() {
                    to_run.push(goal.uid.clone());
                } else {
                    goal.status = GoalStatus::Drafting;
                    result.deferred.push(Deferred {
                        uid: goal.uid.clone(),
                        placeholders: holes,
                    });
                }
            }
            next.goals.push(goal);
        }

        for uid in to_run {
            let goal = next.goals.iter_mut().find(|g| g.uid == uid).expect("goal kept");
            let outcome = match execute(&goal.ast, env, limits) {
                Ok(o) => o,
                Err(ExecError::PlaceholderUnresolved(_)) => unreachable!("checked above"),
            };
            let sig = signature(env, Some(&outcome));
            goal.outcome = Some(outcome.clone());
            goal.post_signature = Some(sig.clone());
            result.executions.push(Execution {
                uid,
                outcome,
                signature: sig,
            });
        }
        *self = next;
        Ok(result)
    }

    /// The `<stack>` block used in prompts.
    pub fn serialize(&self) -> String {
        if self.goals.is_empty() {
            return "<stack></stack>".to_string();
        }
        let mut out = String::from("<stack>\n");
        for g in &self.goals {
            write_goal(&mut out, &g.uid, g.status, Some(&g.code), g.outcome.as_ref());
        }
        out.push_str("</stack>");
        out
    }
}

/// Appends one `<goal>` element. `code == None` gives the self-closing form.
pub fn write_goal(out: &mut String, uid: &str, status: GoalStatus, code: Option<&str>, outcome: Option<&Outcome>) {
    let head = format!(
        "<goal uid=\"{}\" status=\"{status}\"",
        crate::xml::escape_attr(uid)
    );
    let Some(code) = code else {
        out.push_str(&head);
        out.push_str("/>\n");
        return;
    };
    out.push_str(&head);
    out.push_str(">\n");
    write_program(out, code);
    if let Some(o) = outcome {
        write_outcome(out, o);
    }
    out.push_str("</goal>\n");
}

pub fn write_program(out: &mut String, code: &str) {
    out.push_str("<program>\n");
    for line in code.lines() {
        if !line.is_empty() {
            out.push_str("    ");
            out.push_str(line);
        }
        out.push('\n');
    }
    out.push_str("  </program>\n");
}

pub fn write_outcome(out: &mut String, o: &Outcome) {
    out.push_str(&format!("<result>{}</result>\n", display_json(&o.return_value)));
    match &o.error {
        None => out.push_str("<error/>\n"),
        Some(e) => {
            let record = serde_json::json!({"error": e.name, "message": e.message});
            out.push_str(&format!("<error>{}</error>\n", display_json(&record)));
        }
    }
}

/// JSON with sorted keys and `", "` / `": "` separators, the style the
/// corpus uses for results and error records.
pub fn display_json(v: &Json) -> String {
    let mut out = String::new();
    write_display(v, &mut out);
    out
}

fn write_display(v: &Json, out: &mut String) {
    match v {
        Json::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&Json::String(k.clone()).to_string());
                out.push_str(": ");
                write_display(&m[k], out);
            }
            out.push('}');
        }
        Json::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_display(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}
