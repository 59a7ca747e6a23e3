//! Minimal reader for the corpus and prompt markup.
//!
//! The format looks like XML but program bodies are stored verbatim, so `<`,
//! `&` and quotes inside them are not escaped. Elements named in `raw` keep
//! their content as uninterpreted text up to the matching close tag.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Element>,
    /// Content of a raw element; `None` when written self-closing.
    pub text: Option<String>,
    pub line: usize,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn child(&self, name: &str) -> Option<&Element> {
        self.children.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for XmlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for XmlError {}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
    raw: &'a [&'a str],
}

impl<'a> Reader<'a> {
    fn line(&self) -> usize {
        line_at(self.src, self.pos)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, XmlError> {
        Err(XmlError {
            line: self.line(),
            message: message.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Skips whitespace, comments and declarations between elements.
    fn skip_misc(&mut self) -> Result<(), XmlError> {
        loop {
            self.skip_ws();
            let rest = self.rest();
            let close = if rest.starts_with("<!--") {
                "-->"
            } else if rest.starts_with("<?") {
                "?>"
            } else {
                return Ok(());
            };
            match rest.find(close) {
                Some(i) => self.pos += i + close.len(),
                None => return self.err("unterminated comment or declaration"),
            }
        }
    }

    fn name(&mut self) -> Result<String, XmlError> {
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == ':'))
            .unwrap_or(rest.len());
        if len == 0 {
            return self.err("expected a tag name");
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn elements_until(&mut self, close: Option<&str>) -> Result<Vec<Element>, XmlError> {
        let mut out = Vec::new();
        loop {
            self.skip_misc()?;
            let rest = self.rest();
            if rest.is_empty() {
                return match close {
                    Some(name) => self.err(format!("missing </{name}>")),
                    None => Ok(out),
                };
            }
            if let Some(after) = rest.strip_prefix("</") {
                let end = after.find('>').unwrap_or(after.len());
                let name = after[..end].trim();
                return match close {
                    Some(expected) if expected == name => {
                        self.pos += 2 + end + 1;
                        Ok(out)
                    }
                    _ => self.err(format!("unexpected </{name}>")),
                };
            }
            if !rest.starts_with('<') {
                let snippet: String = rest.chars().take(30).collect();
                return self.err(format!("unexpected text {snippet:?}"));
            }
            out.push(self.element()?);
        }
    }

    fn element(&mut self) -> Result<Element, XmlError> {
        let line = self.line();
        self.pos += 1;
        let name = self.name()?;
        let mut attrs = Vec::new();
        loop {
            self.skip_ws();
            let rest = self.rest();
            if rest.starts_with("/>") {
                self.pos += 2;
                return Ok(Element {
                    name,
                    attrs,
                    children: Vec::new(),
                    text: None,
                    line,
                });
            }
            if rest.starts_with('>') {
                self.pos += 1;
                break;
            }
            if rest.is_empty() {
                return self.err(format!("unterminated <{name}> tag"));
            }
            let key = self.name()?;
            self.skip_ws();
            if !self.rest().starts_with('=') {
                return self.err(format!("expected = after attribute {key}"));
            }
            self.pos += 1;
            self.skip_ws();
            let rest = self.rest();
            let quote = match rest.chars().next() {
                Some(q @ ('"' | '\'')) => q,
                _ => return self.err(format!("expected quoted value for attribute {key}")),
            };
            let Some(end) = rest[1..].find(quote) else {
                return self.err(format!("unterminated value for attribute {key}"));
            };
            attrs.push((key, unescape_attr(&rest[1..1 + end])));
            self.pos += end + 2;
        }
        if self.raw.contains(&name.as_str()) {
            let close = format!("</{name}>");
            let Some(end) = self.rest().find(&close) else {
                return self.err(format!("missing {close}"));
            };
            let text = self.rest()[..end].to_string();
            self.pos += end + close.len();
            return Ok(Element {
                name,
                attrs,
                children: Vec::new(),
                text: Some(text),
                line,
            });
        }
        let children = self.elements_until(Some(&name))?;
        Ok(Element {
            name,
            attrs,
            children,
            text: None,
            line,
        })
    }
}

fn line_at(src: &str, pos: usize) -> usize {
    src[..pos].matches('\n').count() + 1
}

fn unescape_attr(s: &str) -> String {
    s.replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

pub fn escape_attr(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('"', "&quot;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Parses a sequence of top-level elements.
pub fn parse(src: &str, raw: &[&str]) -> Result<Vec<Element>, XmlError> {
    let mut reader = Reader { src, pos: 0, raw };
    reader.elements_until(None)
}
