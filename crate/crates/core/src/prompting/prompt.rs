use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::doc::ApiDocument;
use super::retrieval::{Example, Query, Target};
use crate::corpus::write_turn;
use crate::stack::{write_goal, Directive, GoalStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptSetting {
    /// Out-of-domain document with format examples, then the real document.
    DocOnly,
    ExamplesOnly,
    DocPlusExamples,
}

impl PromptSetting {
    pub fn uses_examples(self) -> bool {
        self != PromptSetting::DocOnly
    }
}

impl FromStr for PromptSetting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "doc" | "doc_only" => Ok(PromptSetting::DocOnly),
            "examples" | "examples_only" => Ok(PromptSetting::ExamplesOnly),
            "doc+examples" | "doc_plus_examples" => Ok(PromptSetting::DocPlusExamples),
            other => Err(format!("unknown prompt setting {other:?} (expected doc, examples or doc+examples)")),
        }
    }
}

impl fmt::Display for PromptSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptSetting::DocOnly => "doc",
            PromptSetting::ExamplesOnly => "examples",
            PromptSetting::DocPlusExamples => "doc+examples",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub setting: PromptSetting,
    pub k: usize,
    pub alpha: f64,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            setting: PromptSetting::DocPlusExamples,
            k: 5,
            alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("setting {setting} does not take retrieved examples")]
    UnexpectedExamples { setting: PromptSetting },
    #[error("a {found} example cannot be used in a {expected} prompt")]
    WrongTarget { expected: &'static str, found: &'static str },
}

/// Contents of an `<output>` section for a target.
pub fn render_target(target: &Target) -> String {
    match target {
        Target::Program(directives) => {
            let mut out = String::new();
            for d in directives {
                write_goal(&mut out, &d.uid, d.status, d.code.as_deref(), None);
            }
            out
        }
        Target::Response(text) => {
            let mut out = String::new();
            write_turn(&mut out, "Agent", text);
            out
        }
    }
}

/// One context block; `output == None` leaves the section open for generation.
pub fn render_block(query: &Query, output: Option<&Target>) -> String {
    let mut out = format!("{}\n", query.stack);
    if !query.prev_agent.is_empty() {
        write_turn(&mut out, "Agent", &query.prev_agent);
    }
    write_turn(&mut out, "User", &query.user);
    out.push_str("<output>\n");
    if let Some(t) = output {
        out.push_str(&render_target(t));
        out.push_str("</output>\n");
    }
    out
}

pub fn render_example(e: &Example) -> String {
    let q = Query {
        stack: e.stack.clone(),
        prev_agent: e.prev_agent.clone(),
        user: e.user.clone(),
    };
    render_block(&q, Some(&e.target))
}

fn check_kind(examples: &[&Example], program: bool) -> Result<(), PromptError> {
    for e in examples {
        let is_program = matches!(e.target, Target::Program(_));
        if is_program != program {
            let name = |p: bool| if p { "program" } else { "response" };
            return Err(PromptError::WrongTarget {
                expected: name(program),
                found: name(is_program),
            });
        }
    }
    Ok(())
}

fn calendar_examples(program: bool) -> Vec<Example> {
    let draft = "calendar.create_event(Day=?1, Title=\"Dentist\")";
    let first = Example {
        dialogue: "calendar".into(),
        turn: 0,
        stack: "<stack></stack>".into(),
        prev_agent: "How can I help you?".into(),
        user: "What do I have on Monday?".into(),
        target: Target::Program(vec![Directive {
            uid: "1".into(),
            status: GoalStatus::Final,
            code: Some("events = calendar.list_events(Day=\"Monday\")\nreturn [event[\"Title\"] for event in events]".into()),
        }]),
    };
    let mut draft_stack = String::from("<stack>\n");
    write_goal(&mut draft_stack, "1", GoalStatus::Drafting, Some(draft), None);
    draft_stack.push_str("</stack>");
    let second = Example {
        dialogue: "calendar".into(),
        turn: 1,
        stack: draft_stack,
        prev_agent: "Which day should I add the dentist appointment to?".into(),
        user: "Friday at 3pm".into(),
        target: Target::Program(vec![Directive {
            uid: "1".into(),
            status: GoalStatus::Final,
            code: Some("calendar.create_event(Day=\"Friday\", Title=\"Dentist\", Time=\"15:00\")".into()),
        }]),
    };
    if program {
        return vec![first, second];
    }
    let mut done_stack = String::from("<stack>\n");
    write_goal(
        &mut done_stack,
        "1",
        GoalStatus::Final,
        Some("events = calendar.list_events(Day=\"Monday\")\nreturn [event[\"Title\"] for event in events]"),
        Some(&crate::lang::Outcome::returned(serde_json::json!(["Team meeting"]))),
    );
    done_stack.push_str("</stack>");
    vec![
        Example {
            stack: done_stack,
            target: Target::Response("You have one event on Monday: Team meeting.".into()),
            ..first
        },
        Example {
            stack: "<stack></stack>".into(),
            prev_agent: "How can I help you?".into(),
            user: "Add a dentist appointment".into(),
            target: Target::Response("Which day should I add the dentist appointment to?".into()),
            ..second
        },
    ]
}

fn assemble(parts: Vec<String>) -> String {
    parts.join("\n")
}

/// Prompt for program prediction; ends right after the query's `<output>` line.
pub fn build_program_prompt(
    setting: PromptSetting,
    doc: &ApiDocument,
    examples: &[&Example],
    query: &Query,
) -> Result<String, PromptError> {
    check_kind(examples, true)?;
    let mut parts = Vec::new();
    match setting {
        PromptSetting::DocOnly => {
            if !examples.is_empty() {
                return Err(PromptError::UnexpectedExamples { setting });
            }
            parts.push(format!("{}\n", ApiDocument::calendar().render()));
            parts.extend(calendar_examples(true).iter().map(render_example));
            parts.push(format!("{}\n", doc.render()));
        }
        PromptSetting::ExamplesOnly => parts.extend(examples.iter().map(|e| render_example(e))),
        PromptSetting::DocPlusExamples => {
            parts.push(format!("{}\n", doc.render()));
            parts.extend(examples.iter().map(|e| render_example(e)));
        }
    }
    parts.push(render_block(query, None));
    Ok(assemble(parts))
}

/// Prompt for response generation over the post-execution stack. No API document.
pub fn build_response_prompt(setting: PromptSetting, examples: &[&Example], query: &Query) -> Result<String, PromptError> {
    check_kind(examples, false)?;
    let mut parts = Vec::new();
    if setting == PromptSetting::DocOnly {
        if !examples.is_empty() {
            return Err(PromptError::UnexpectedExamples { setting });
        }
        parts.extend(calendar_examples(false).iter().map(render_example));
    } else {
        parts.extend(examples.iter().map(|e| render_example(e)));
    }
    parts.push(render_block(query, None));
    Ok(assemble(parts))
}
