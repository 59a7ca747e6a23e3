//! Tokenizer for the program language.
//!
//! Layout follows the usual off-side rule: a change in leading indentation
//! produces `Indent`/`Dedent` tokens, and line breaks inside brackets are
//! joined. The first code line sets the base indentation, so programs that
//! were embedded in an indented document (corpus XML, prompts) lex without
//! any pre-processing.
//!
//! Two modes are provided. [`tokenize`] is strict and reports a [`LexError`]
//! for anything outside the language. [`tokenize_lenient`] never fails: it
//! degrades unknown characters and broken literals into `Unknown` tokens, which
//! is what the code edit distance metric needs for arbitrary model output.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    For,
    In,
    If,
    Return,
    Raise,
    And,
    Or,
    Not,
    Lambda,
    True,
    False,
    None,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Self> {
        Some(match s {
            "for" => Keyword::For,
            "in" => Keyword::In,
            "if" => Keyword::If,
            "return" => Keyword::Return,
            "raise" => Keyword::Raise,
            "and" => Keyword::And,
            "or" => Keyword::Or,
            "not" => Keyword::Not,
            "lambda" => Keyword::Lambda,
            "True" => Keyword::True,
            "False" => Keyword::False,
            "None" => Keyword::None,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Name,
    Keyword(Keyword),
    Number,
    String,
    FString,
    Placeholder,
    Op,
    Newline,
    Indent,
    Dedent,
    Eof,
    /// Only produced in lenient mode.
    Unknown,
}

impl TokenKind {
    /// Layout tokens carry no lexeme of their own.
    pub fn is_layout(self) -> bool {
        matches!(
            self,
            TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent | TokenKind::Eof
        )
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Name => f.write_str("NAME"),
            TokenKind::Keyword(k) => write!(f, "{}", format!("{k:?}").to_uppercase()),
            TokenKind::Number => f.write_str("NUMBER"),
            TokenKind::String => f.write_str("STRING"),
            TokenKind::FString => f.write_str("FSTRING"),
            TokenKind::Placeholder => f.write_str("PLACEHOLDER"),
            TokenKind::Op => f.write_str("OP"),
            TokenKind::Newline => f.write_str("NEWLINE"),
            TokenKind::Indent => f.write_str("INDENT"),
            TokenKind::Dedent => f.write_str("DEDENT"),
            TokenKind::Eof => f.write_str("EOF"),
            TokenKind::Unknown => f.write_str("UNKNOWN"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Source text of the token. Strings keep their quotes and escapes.
    pub lexeme: String,
    pub line: usize,
    pub col: usize,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.lexeme == op
    }

    pub fn is_keyword(&self, kw: Keyword) -> bool {
        self.kind == TokenKind::Keyword(kw)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct LexError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

// Longest first.
const OPERATORS: &[&str] = &[
    "==", "!=", "<=", ">=", "**", "//", "->", "(", ")", "[", "]", "{", "}", ",", ":", ".", "=",
    "<", ">", "+", "-", "*", "/", "%", ";",
];

pub fn tokenize(code: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(code, false).run()
}

/// Never fails; malformed input becomes `Unknown` tokens.
pub fn tokenize_lenient(code: &str) -> Vec<Token> {
    Lexer::new(code, true)
        .run()
        .expect("lenient lexing is infallible")
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    lenient: bool,
    depth: usize,
    indents: Vec<usize>,
    tokens: Vec<Token>,
}

impl Lexer {
    fn new(src: &str, lenient: bool) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            lenient,
            depth: 0,
            indents: Vec::new(),
            tokens: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, col: usize, message: impl Into<String>) -> LexError {
        LexError {
            line,
            col,
            message: message.into(),
        }
    }

    fn push(&mut self, kind: TokenKind, lexeme: String, line: usize, col: usize) {
        self.tokens.push(Token {
            kind,
            lexeme,
            line,
            col,
        });
    }

    fn push_newline(&mut self) {
        let needs = matches!(self.tokens.last(), Some(t) if !matches!(t.kind, TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent));
        if needs {
            self.push(TokenKind::Newline, String::new(), self.line, self.col);
        }
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if !self.handle_indentation()? {
                    break;
                }
            }
            let Some(c) = self.peek() else { break };
            let (line, col) = (self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.push_newline();
                        at_line_start = true;
                    }
                }
                '\r' => {
                    self.bump();
                }
                ' ' | '\t' => {
                    self.bump();
                }
                '#' => {
                    while matches!(self.peek(), Some(c) if c != '\n') {
                        self.bump();
                    }
                }
                '"' | '\'' => self.lex_string(line, col)?,
                'f' if matches!(self.peek_at(1), Some('"' | '\'')) => self.lex_fstring(line, col)?,
                '?' => self.lex_placeholder(line, col)?,
                c if c.is_ascii_digit() => self.lex_number(line, col),
                c if c == '_' || c.is_alphabetic() => self.lex_name(line, col),
                _ => self.lex_op(line, col)?,
            }
        }
        self.push_newline();
        let base_len = usize::from(!self.indents.is_empty());
        while self.indents.len() > base_len {
            self.indents.pop();
            self.push(TokenKind::Dedent, String::new(), self.line, self.col);
        }
        self.push(TokenKind::Eof, String::new(), self.line, self.col);
        Ok(self.tokens)
    }

    /// Consumes leading whitespace of a logical line and emits layout tokens.
    /// Blank and comment-only lines are skipped entirely. Returns false at EOF.
    fn handle_indentation(&mut self) -> Result<bool, LexError> {
        loop {
            let (line, col) = (self.line, self.col);
            let mut width = 0usize;
            while let Some(c) = self.peek() {
                match c {
                    ' ' => width += 1,
                    '\t' if self.lenient => width += 8 - width % 8,
                    '\t' => return Err(self.error(self.line, self.col, "tab in indentation")),
                    '\r' => {}
                    _ => break,
                }
                self.bump();
            }
            match self.peek() {
                None => return Ok(false),
                Some('\n') => {
                    self.bump();
                    continue;
                }
                Some('#') => {
                    while matches!(self.peek(), Some(c) if c != '\n') {
                        self.bump();
                    }
                    continue;
                }
                Some(_) => {}
            }
            let Some(&current) = self.indents.last() else {
                self.indents.push(width);
                return Ok(true);
            };
            if width > current {
                self.indents.push(width);
                self.push(TokenKind::Indent, String::new(), line, col);
            } else if width < current {
                while matches!(self.indents.last(), Some(&w) if w > width) && self.indents.len() > 1
                {
                    self.indents.pop();
                    self.push(TokenKind::Dedent, String::new(), line, col);
                }
                let top = *self.indents.last().expect("base indentation present");
                if top != width {
                    if !self.lenient {
                        return Err(self.error(line, col + width, "inconsistent indentation"));
                    }
                    if width < top {
                        // Below the base level: adopt it as the new base.
                        self.indents[0] = width;
                    } else {
                        self.indents.push(width);
                        self.push(TokenKind::Indent, String::new(), line, col);
                    }
                }
            }
            return Ok(true);
        }
    }

    fn lex_name(&mut self, line: usize, col: usize) {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c == '_' || c.is_alphanumeric() {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let kind = match Keyword::from_ident(&s) {
            Some(k) => TokenKind::Keyword(k),
            None => TokenKind::Name,
        };
        self.push(kind, s, line, col);
    }

    fn lex_number(&mut self, line: usize, col: usize) {
        let mut s = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            s.push(self.bump().unwrap());
        }
        if self.peek() == Some('.') && matches!(self.peek_at(1), Some(c) if c.is_ascii_digit()) {
            s.push(self.bump().unwrap());
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                s.push(self.bump().unwrap());
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if matches!(self.peek_at(digit_at), Some(c) if c.is_ascii_digit()) {
                s.push(self.bump().unwrap());
                if sign {
                    s.push(self.bump().unwrap());
                }
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    s.push(self.bump().unwrap());
                }
            }
        }
        self.push(TokenKind::Number, s, line, col);
    }

    fn lex_placeholder(&mut self, line: usize, col: usize) -> Result<(), LexError> {
        self.bump();
        let mut digits = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            digits.push(self.bump().unwrap());
        }
        let valid = !digits.is_empty() && digits.parse::<u64>().map_or(false, |n| n > 0);
        if valid {
            self.push(TokenKind::Placeholder, format!("?{digits}"), line, col);
            Ok(())
        } else if self.lenient {
            self.push(TokenKind::Unknown, format!("?{digits}"), line, col);
            Ok(())
        } else if digits.is_empty() {
            Err(self.error(line, col, "placeholder `?` must be followed by a number"))
        } else {
            Err(self.error(line, col, "placeholder numbers start at 1"))
        }
    }

    /// Scans a quoted literal body. Returns false when the line ended first.
    fn scan_quoted(&mut self, quote: char, out: &mut String) -> bool {
        while let Some(c) = self.peek() {
            match c {
                '\n' => return false,
                '\\' => {
                    out.push(self.bump().unwrap());
                    match self.peek() {
                        Some('\n') | None => return false,
                        Some(_) => out.push(self.bump().unwrap()),
                    }
                }
                c if c == quote => {
                    out.push(self.bump().unwrap());
                    return true;
                }
                _ => out.push(self.bump().unwrap()),
            }
        }
        false
    }

    fn lex_string(&mut self, line: usize, col: usize) -> Result<(), LexError> {
        let quote = self.bump().unwrap();
        let mut s = String::from(quote);
        if self.scan_quoted(quote, &mut s) {
            self.push(TokenKind::String, s, line, col);
            Ok(())
        } else if self.lenient {
            self.push(TokenKind::Unknown, s, line, col);
            Ok(())
        } else {
            Err(self.error(line, col, "unterminated string literal"))
        }
    }

    fn lex_fstring(&mut self, line: usize, col: usize) -> Result<(), LexError> {
        let mut s = String::new();
        s.push(self.bump().unwrap());
        let quote = self.bump().unwrap();
        s.push(quote);
        let mut closed = false;
        while let Some(c) = self.peek() {
            match c {
                '\n' => break,
                '\\' => {
                    s.push(self.bump().unwrap());
                    if matches!(self.peek(), Some(c) if c != '\n') {
                        s.push(self.bump().unwrap());
                    }
                }
                '{' if self.peek_at(1) == Some('{') => {
                    s.push(self.bump().unwrap());
                    s.push(self.bump().unwrap());
                }
                '{' => {
                    s.push(self.bump().unwrap());
                    if !self.scan_fstring_field(&mut s) {
                        break;
                    }
                }
                c if c == quote => {
                    s.push(self.bump().unwrap());
                    closed = true;
                    break;
                }
                _ => s.push(self.bump().unwrap()),
            }
        }
        if closed {
            self.push(TokenKind::FString, s, line, col);
            Ok(())
        } else if self.lenient {
            self.push(TokenKind::Unknown, s, line, col);
            Ok(())
        } else {
            Err(self.error(line, col, "unterminated f-string literal"))
        }
    }

    /// Scans a replacement field up to and including its closing brace.
    fn scan_fstring_field(&mut self, out: &mut String) -> bool {
        let mut depth = 0usize;
        while let Some(c) = self.peek() {
            match c {
                '\n' => return false,
                '"' | '\'' => {
                    out.push(self.bump().unwrap());
                    if !self.scan_quoted(c, out) {
                        return false;
                    }
                }
                '(' | '[' | '{' => {
                    depth += 1;
                    out.push(self.bump().unwrap());
                }
                ')' | ']' => {
                    depth = depth.saturating_sub(1);
                    out.push(self.bump().unwrap());
                }
                '}' => {
                    out.push(self.bump().unwrap());
                    if depth == 0 {
                        return true;
                    }
                    depth -= 1;
                }
                _ => out.push(self.bump().unwrap()),
            }
        }
        false
    }

    fn lex_op(&mut self, line: usize, col: usize) -> Result<(), LexError> {
        for op in OPERATORS {
            let matches = op
                .chars()
                .enumerate()
                .all(|(i, oc)| self.peek_at(i) == Some(oc));
            if matches {
                for _ in 0..op.chars().count() {
                    self.bump();
                }
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
                    _ => {}
                }
                self.push(TokenKind::Op, (*op).to_string(), line, col);
                return Ok(());
            }
        }
        let c = self.bump().unwrap();
        if self.lenient {
            self.push(TokenKind::Unknown, c.to_string(), line, col);
            Ok(())
        } else {
            Err(self.error(line, col, format!("illegal character {c:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(code: &str) -> Vec<TokenKind> {
        tokenize(code).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn return_statement_uses_keyword_kind() {
        assert_eq!(
            kinds("return 1"),
            vec![
                TokenKind::Keyword(Keyword::Return),
                TokenKind::Number,
                TokenKind::Newline,
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn placeholders_are_tokens() {
        let toks = tokenize("s3.copy_object(Bucket=?1, Key=?3)").unwrap();
        let ph: Vec<_> = toks
            .iter()
            .filter(|t| t.kind == TokenKind::Placeholder)
            .map(|t| t.lexeme.as_str())
            .collect();
        assert_eq!(ph, ["?1", "?3"]);
    }

    #[test]
    fn comments_dropped_and_string_spaces_kept() {
        let toks = tokenize("x = \"a  b\"  # note").unwrap();
        let lex: Vec<_> = toks.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lex, ["x", "=", "\"a  b\"", "", ""]);
        assert_eq!(toks[2].kind, TokenKind::String);
    }

    #[test]
    fn indentation_and_bracket_joining() {
        let code = "for p in ps:\n  s3.copy_object(\n    Bucket=\"b\",\n  )\nreturn 1\n";
        let k = kinds(code);
        assert_eq!(k.iter().filter(|k| **k == TokenKind::Indent).count(), 1);
        assert_eq!(k.iter().filter(|k| **k == TokenKind::Dedent).count(), 1);
        assert_eq!(k.iter().filter(|k| **k == TokenKind::Newline).count(), 3);
    }

    #[test]
    fn embedded_base_indentation_is_accepted() {
        let code = "\n    x = 1\n    if x:\n      return x\n  ";
        let k = kinds(code);
        assert_eq!(k.iter().filter(|k| **k == TokenKind::Indent).count(), 1);
        assert_eq!(k.iter().filter(|k| **k == TokenKind::Dedent).count(), 1);
    }

    #[test]
    fn errors_carry_location() {
        let e = tokenize("x = 1\ny = $").unwrap_err();
        assert_eq!((e.line, e.col), (2, 5));
        let e = tokenize("x = \"abc").unwrap_err();
        assert!(e.message.contains("unterminated"));
        let e = tokenize("if x:\n\treturn 1").unwrap_err();
        assert!(e.message.contains("tab"));
        let e = tokenize("if x:\n    a = 1\n  b = 2").unwrap_err();
        assert!(e.message.contains("inconsistent"));
        assert!(tokenize("x = ?0").is_err());
        assert!(tokenize("x = ?").is_err());
    }

    #[test]
    fn fstring_with_nested_quotes_is_one_token() {
        let toks = tokenize(r#"f"{d["k"]}/{x}" + 'y'"#).unwrap();
        assert_eq!(toks[0].kind, TokenKind::FString);
        assert_eq!(toks[0].lexeme, r#"f"{d["k"]}/{x}""#);
    }

    #[test]
    fn lenient_mode_never_fails() {
        let toks = tokenize_lenient("x = $ \"open\n\tif ?:");
        assert!(toks.iter().any(|t| t.kind == TokenKind::Unknown));
        assert_eq!(toks.last().unwrap().kind, TokenKind::Eof);
    }

    #[test]
    fn numbers() {
        let toks = tokenize("1 2.5 3e4 4.0e-2").unwrap();
        let lex: Vec<_> = toks[..4].iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lex, ["1", "2.5", "3e4", "4.0e-2"]);
    }
}
