use thiserror::Error;

use super::{AnnotatedOutcome, Dialogue, Event, GoalAnnotation};
use crate::lang::{parse, ErrorRecord, ParseError};
use crate::s3::Signature;
use crate::stack::{display_json, normalize_code, write_program, GoalStatus};
use crate::xml::{self, escape_attr, Element};

const RAW: &[&str] = &["turn", "program", "result", "error", "signature", "initial_signature"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {path}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
    #[error("dialogue {dialogue}, goal {goal}: {error}")]
    Program {
        dialogue: String,
        goal: String,
        error: ParseError,
    },
}

fn schema<T>(path: &str, el: &Element, message: impl Into<String>) -> Result<T, CorpusError> {
    Err(CorpusError::Schema {
        path: path.to_string(),
        line: el.line,
        message: message.into(),
    })
}

pub fn read_corpus(text: &str) -> Result<Vec<Dialogue>, CorpusError> {
    let top = xml::parse(text, RAW).map_err(|e| CorpusError::Schema {
        path: "document".into(),
        line: e.line,
        message: e.message,
    })?;
    let conversations: Vec<&Element> = match top.as_slice() {
        [root] if root.name == "corpus" => root.children.iter().collect(),
        _ => top.iter().collect(),
    };
    let mut out = Vec::new();
    for el in conversations {
        if el.name != "conversation" {
            return schema(&el.name, el, "expected <conversation>");
        }
        out.push(read_dialogue(el)?);
    }
    Ok(out)
}

fn raw_text<'a>(path: &str, el: &'a Element) -> Result<&'a str, CorpusError> {
    match el.text.as_deref() {
        Some(t) => Ok(t),
        None => schema(path, el, "missing text"),
    }
}

fn read_signature(path: &str, el: &Element) -> Result<Signature, CorpusError> {
    let text = raw_text(path, el)?.trim();
    Signature::parse(text).or_else(|e| schema(path, el, e.to_string()))
}

fn read_dialogue(el: &Element) -> Result<Dialogue, CorpusError> {
    let Some(uid) = el.attr("uid") else {
        return schema("conversation", el, "missing uid attribute");
    };
    let path = format!("conversation[{uid}]");
    let Some(meta) = el.child("metadata") else {
        return schema(&path, el, "missing <metadata>");
    };
    let meta_path = format!("{path}/metadata");
    let Some(sig) = meta.child("initial_signature") else {
        return schema(&meta_path, meta, "missing <initial_signature>");
    };
    let initial_signature = read_signature(&format!("{meta_path}/initial_signature"), sig)?;
    let Some(turns) = el.child("turns") else {
        return schema(&path, el, "missing <turns>");
    };
    let turns_path = format!("{path}/turns");

    let mut events = Vec::new();
    for child in &turns.children {
        match child.name.as_str() {
            "turn" => {
                let text = raw_text(&format!("{turns_path}/turn"), child)?.trim();
                if let Some(t) = text.strip_prefix("Agent:") {
                    events.push(Event::Agent(t.trim_start().to_string()));
                } else if let Some(t) = text.strip_prefix("User:") {
                    events.push(Event::User(t.trim_start().to_string()));
                } else {
                    return schema(&format!("{turns_path}/turn"), child, "turn must start with \"Agent:\" or \"User:\"");
                }
            }
            "goal" => events.push(Event::Goal(read_goal(uid, &turns_path, child)?)),
            other => return schema(&turns_path, child, format!("unexpected <{other}>")),
        }
    }
    check_pattern(&turns_path, turns, &events)?;
    Ok(Dialogue {
        uid: uid.to_string(),
        initial_signature,
        events,
    })
}

fn read_goal(dialogue: &str, parent: &str, el: &Element) -> Result<GoalAnnotation, CorpusError> {
    let (Some(uid), Some(status)) = (el.attr("uid"), el.attr("status")) else {
        return schema(&format!("{parent}/goal"), el, "goal needs uid and status");
    };
    let path = format!("{parent}/goal[{uid}]");
    let status: GoalStatus = match status.parse() {
        Ok(s) => s,
        Err(e) => return schema(&path, el, e),
    };
    let code = match el.child("program") {
        Some(p) => {
            let code = normalize_code(raw_text(&format!("{path}/program"), p)?);
            parse(&code).map_err(|error| CorpusError::Program {
                dialogue: dialogue.to_string(),
                goal: uid.to_string(),
                error,
            })?;
            Some(code)
        }
        None => None,
    };
    let outcome = if status == GoalStatus::Final {
        let field = |name: &str| match el.child(name) {
            Some(c) => Ok(c),
            None => schema(&path, el, format!("final goal needs <{name}>")),
        };
        let result_el = field("result")?;
        let result = serde_json::from_str(raw_text(&format!("{path}/result"), result_el)?.trim())
            .or_else(|e| schema(&format!("{path}/result"), result_el, e.to_string()))?;
        let error_el = field("error")?;
        let error = match error_el.text.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(t) => Some(
                serde_json::from_str::<ErrorRecord>(t)
                    .or_else(|e| schema(&format!("{path}/error"), error_el, e.to_string()))?,
            ),
        };
        let signature = read_signature(&format!("{path}/signature"), field("signature")?)?;
        Some(AnnotatedOutcome {
            result,
            error,
            signature,
        })
    } else {
        for name in ["result", "error", "signature"] {
            if el.child(name).is_some() {
                return schema(&path, el, format!("<{name}> is only allowed on final goals"));
            }
        }
        None
    };
    Ok(GoalAnnotation {
        uid: uid.to_string(),
        status,
        code,
        outcome,
    })
}

/// Optional leading agent turn, then (user, goal*, agent) repeated.
fn check_pattern(path: &str, el: &Element, events: &[Event]) -> Result<(), CorpusError> {
    let mut rest = events;
    if let [Event::Agent(_), tail @ ..] = rest {
        rest = tail;
    }
    if rest.is_empty() {
        return schema(path, el, "dialogue has no user turn");
    }
    while !rest.is_empty() {
        let [Event::User(_), tail @ ..] = rest else {
            return schema(path, el, "expected a user turn");
        };
        let goals = tail.iter().take_while(|e| matches!(e, Event::Goal(_))).count();
        match tail.get(goals) {
            Some(Event::Agent(_)) => rest = &tail[goals + 1..],
            _ => return schema(path, el, "user turn must be answered by an agent turn"),
        }
    }
    Ok(())
}

pub fn write_turn(out: &mut String, speaker: &str, text: &str) {
    if text.contains('\n') {
        out.push_str(&format!("<turn>\n{speaker}: {text}\n</turn>\n"));
    } else {
        out.push_str(&format!("<turn>{speaker}: {text}</turn>\n"));
    }
}

pub fn write_dialogue(d: &Dialogue) -> String {
    let mut out = format!(
        "<conversation uid=\"{}\">\n<metadata>\n<initial_signature>{}</initial_signature>\n</metadata>\n<turns>\n",
        escape_attr(&d.uid),
        d.initial_signature
    );
    for e in &d.events {
        match e {
            Event::Agent(t) => write_turn(&mut out, "Agent", t),
            Event::User(t) => write_turn(&mut out, "User", t),
            Event::Goal(g) => {
                out.push_str(&format!("<goal uid=\"{}\" status=\"{}\">\n", escape_attr(&g.uid), g.status));
                if let Some(code) = &g.code {
                    write_program(&mut out, code);
                }
                if let Some(o) = &g.outcome {
                    out.push_str(&format!("<result>{}</result>\n", display_json(&o.result)));
                    match &o.error {
                        None => out.push_str("<error/>\n"),
                        Some(e) => {
                            let record = serde_json::json!({"error": e.name, "message": e.message});
                            out.push_str(&format!("<error>{}</error>\n", display_json(&record)));
                        }
                    }
                    out.push_str(&format!("<signature>{}</signature>\n", o.signature));
                }
                out.push_str("</goal>\n");
            }
        }
    }
    out.push_str("</turns>\n</conversation>\n");
    out
}

pub fn write_corpus(dialogues: &[Dialogue]) -> String {
    let mut out = String::from("<corpus>\n");
    for d in dialogues {
        out.push_str(&write_dialogue(d));
    }
    out.push_str("</corpus>\n");
    out
}
