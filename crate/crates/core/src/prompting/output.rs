use thiserror::Error;

use crate::stack::{normalize_code, Directive, GoalStatus};
use crate::xml;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unreadable model output: {0}")]
pub struct OutputParseError(pub String);

/// Start of the generated region: after `<output>` when the model repeated
/// it, otherwise the beginning (the prompt already opened the section).
fn region(text: &str) -> &str {
    let start = text.find("<output>").map_or(0, |i| i + "<output>".len());
    let rest = &text[start..];
    let end = ["</output>", "<stack>", "<def>"]
        .iter()
        .filter_map(|m| rest.find(m))
        .min()
        .unwrap_or(rest.len());
    &rest[..end]
}

/// Goal directives from a program-prediction completion. An empty section
/// is a valid "no program this turn" answer.
pub fn parse_program_output(text: &str) -> Result<Vec<Directive>, OutputParseError> {
    let elements = xml::parse(region(text), &["program"]).map_err(|e| OutputParseError(e.to_string()))?;
    let mut out = Vec::new();
    for el in elements {
        if el.name != "goal" {
            return Err(OutputParseError(format!("unexpected <{}>", el.name)));
        }
        let (Some(uid), Some(status)) = (el.attr("uid"), el.attr("status")) else {
            return Err(OutputParseError("goal needs uid and status".into()));
        };
        let status: GoalStatus = status.parse().map_err(OutputParseError)?;
        let mut code = None;
        for child in &el.children {
            match (child.name.as_str(), &child.text) {
                ("program", Some(text)) if code.is_none() => code = Some(normalize_code(text)),
                (name, _) => return Err(OutputParseError(format!("unexpected <{name}> in goal"))),
            }
        }
        out.push(Directive {
            uid: uid.to_string(),
            status,
            code,
        });
    }
    Ok(out)
}

/// The agent utterance from a response-generation completion.
pub fn parse_response_output(text: &str) -> Result<String, OutputParseError> {
    let elements = xml::parse(region(text), &["turn"]).map_err(|e| OutputParseError(e.to_string()))?;
    match elements.as_slice() {
        [el] if el.name == "turn" => {
            let body = el.text.as_deref().unwrap_or("").trim();
            body.strip_prefix("Agent:")
                .map(|t| t.trim_start().to_string())
                .ok_or_else(|| OutputParseError("response turn must start with \"Agent:\"".into()))
        }
        _ => Err(OutputParseError("expected exactly one <turn>".into())),
    }
}
