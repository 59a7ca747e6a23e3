//! Recursive-descent parser producing an [`Ast`].
//!
//! Expression precedence, loosest first: `lambda`, `or`, `and`, `not`,
//! comparisons (chainable), `+`/`-`, unary minus, then postfix call,
//! attribute, index and slice.

use thiserror::Error;

use super::ast::*;
use super::lexer::{self, Keyword as Kw, LexError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("lex error at {0}")]
    Lex(#[from] LexError),
    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("{line}:{col}: {message}")]
    Invalid {
        line: usize,
        col: usize,
        message: String,
    },
}

impl ParseError {
    pub fn location(&self) -> (usize, usize) {
        match self {
            ParseError::Lex(e) => (e.line, e.col),
            ParseError::Syntax { line, col, .. } | ParseError::Invalid { line, col, .. } => {
                (*line, *col)
            }
        }
    }
}

pub fn parse(code: &str) -> Result<Ast, ParseError> {
    let tokens = lexer::tokenize(code)?;
    let mut p = Parser { tokens, pos: 0 };
    let statements = p.statements_until_eof()?;
    Ok(Ast { statements })
}

/// Parses a single expression, e.g. an f-string replacement field.
pub fn parse_expression(code: &str) -> Result<Expr, ParseError> {
    let tokens = lexer::tokenize(code)?;
    let mut p = Parser { tokens, pos: 0 };
    let expr = p.expr()?;
    p.skip_newlines();
    p.expect_kind(TokenKind::Eof, "end of expression")?;
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn describe(tok: &Token) -> String {
    match tok.kind {
        TokenKind::Newline => "end of line".into(),
        TokenKind::Indent => "indent".into(),
        TokenKind::Dedent => "dedent".into(),
        TokenKind::Eof => "end of input".into(),
        _ => format!("`{}`", tok.lexeme),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let tok = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let tok = self.peek();
        Err(ParseError::Syntax {
            line: tok.line,
            col: tok.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: describe(tok),
        })
    }

    fn invalid<T>(&self, tok: &Token, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Invalid {
            line: tok.line,
            col: tok.col,
            message: message.into(),
        })
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.peek().is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<Token, ParseError> {
        if self.peek().is_op(op) {
            Ok(self.advance())
        } else {
            self.fail(&[&format!("`{op}`")])
        }
    }

    fn eat_keyword(&mut self, kw: Kw) -> bool {
        if self.peek().is_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: Kw, text: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.fail(&[&format!("`{text}`")])
        }
    }

    fn expect_kind(&mut self, kind: TokenKind, what: &str) -> Result<Token, ParseError> {
        if self.peek().kind == kind {
            Ok(self.advance())
        } else {
            self.fail(&[what])
        }
    }

    fn expect_name(&mut self) -> Result<String, ParseError> {
        Ok(self.expect_kind(TokenKind::Name, "name")?.lexeme)
    }

    fn skip_newlines(&mut self) {
        while self.peek().kind == TokenKind::Newline {
            self.advance();
        }
    }

    fn end_of_statement(&mut self) -> Result<(), ParseError> {
        match self.peek().kind {
            TokenKind::Newline => {
                self.advance();
                Ok(())
            }
            TokenKind::Eof | TokenKind::Dedent => Ok(()),
            _ => self.fail(&["end of line"]),
        }
    }

    fn statements_until_eof(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_newlines();
            match self.peek().kind {
                TokenKind::Eof => return Ok(out),
                TokenKind::Indent => return self.fail(&["statement"]),
                _ => out.push(self.statement()?),
            }
        }
    }

    fn suite(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect_op(":")?;
        if self.peek().kind != TokenKind::Newline {
            // `if x: return y` on one line.
            return Ok(vec![self.simple_statement()?]);
        }
        self.advance();
        self.skip_newlines();
        self.expect_kind(TokenKind::Indent, "indented block")?;
        let mut body = Vec::new();
        loop {
            self.skip_newlines();
            match self.peek().kind {
                TokenKind::Dedent => {
                    self.advance();
                    break;
                }
                TokenKind::Eof => break,
                _ => body.push(self.statement()?),
            }
        }
        Ok(body)
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let tok = self.peek();
        if tok.is_keyword(Kw::For) {
            self.advance();
            let var = self.expect_name()?;
            self.expect_keyword(Kw::In, "in")?;
            let iter = self.expr()?;
            let body = self.suite()?;
            return Ok(Stmt::For { var, iter, body });
        }
        if tok.is_keyword(Kw::If) {
            self.advance();
            let cond = self.expr()?;
            let body = self.suite()?;
            return Ok(Stmt::If { cond, body });
        }
        self.simple_statement()
    }

    fn simple_statement(&mut self) -> Result<Stmt, ParseError> {
        let tok = self.peek().clone();
        let stmt = if tok.is_keyword(Kw::Return) {
            self.advance();
            let value = match self.peek().kind {
                TokenKind::Newline | TokenKind::Eof | TokenKind::Dedent => None,
                _ => Some(self.expr()?),
            };
            Stmt::Return(value)
        } else if tok.is_keyword(Kw::Raise) {
            self.advance();
            let name = self.expect_name()?;
            let mut arg = None;
            if self.eat_op("(") {
                if !self.peek().is_op(")") {
                    arg = Some(self.expr()?);
                }
                self.expect_op(")")?;
            }
            Stmt::Raise { name, arg }
        } else if tok.is_keyword(Kw::For) || tok.is_keyword(Kw::If) {
            return self.fail(&["simple statement"]);
        } else if tok.kind == TokenKind::Name && self.peek_at(1).is_op("=") {
            self.advance();
            self.advance();
            let value = self.expr()?;
            Stmt::Assign {
                target: tok.lexeme,
                value,
            }
        } else {
            let expr = self.expr()?;
            if self.peek().is_op("=") {
                let eq = self.peek().clone();
                return self.invalid(&eq, "assignment target must be a single name");
            }
            Stmt::Expr(expr)
        };
        self.end_of_statement()?;
        Ok(stmt)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_keyword(Kw::Lambda) {
            let param = self.expect_name()?;
            self.expect_op(":")?;
            let body = self.expr()?;
            return Ok(Expr::Lambda {
                param,
                body: Box::new(body),
            });
        }
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.and_expr()?;
        while self.eat_keyword(Kw::Or) {
            let right = self.and_expr()?;
            left = Expr::BoolOp {
                op: BoolOp::Or,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.not_expr()?;
        while self.eat_keyword(Kw::And) {
            let right = self.not_expr()?;
            left = Expr::BoolOp {
                op: BoolOp::And,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_keyword(Kw::Not) {
            let operand = self.not_expr()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                operand: Box::new(operand),
            });
        }
        self.comparison()
    }

    fn comparison_op(&mut self) -> Option<CmpOp> {
        let tok = self.peek();
        let op = match (tok.kind, tok.lexeme.as_str()) {
            (TokenKind::Op, "==") => CmpOp::Eq,
            (TokenKind::Op, "!=") => CmpOp::NotEq,
            (TokenKind::Op, "<") => CmpOp::Lt,
            (TokenKind::Op, "<=") => CmpOp::LtE,
            (TokenKind::Op, ">") => CmpOp::Gt,
            (TokenKind::Op, ">=") => CmpOp::GtE,
            (TokenKind::Keyword(Kw::In), _) => CmpOp::In,
            (TokenKind::Keyword(Kw::Not), _) if self.peek_at(1).is_keyword(Kw::In) => {
                self.advance();
                CmpOp::NotIn
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let left = self.additive()?;
        let mut rest = Vec::new();
        while let Some(op) = self.comparison_op() {
            rest.push((op, self.additive()?));
        }
        if rest.is_empty() {
            Ok(left)
        } else {
            Ok(Expr::Compare {
                left: Box::new(left),
                rest,
            })
        }
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                break;
            };
            let right = self.unary()?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op("-") {
            let operand = self.unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Neg,
                operand: Box::new(operand),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut expr = self.atom()?;
        loop {
            if self.eat_op(".") {
                let attr = self.expect_name()?;
                expr = Expr::Attribute {
                    value: Box::new(expr),
                    attr,
                };
            } else if self.eat_op("(") {
                let (args, kwargs) = self.call_arguments()?;
                expr = Expr::Call {
                    func: Box::new(expr),
                    args,
                    kwargs,
                };
            } else if self.eat_op("[") {
                expr = self.subscript(expr)?;
            } else {
                return Ok(expr);
            }
        }
    }

    fn call_arguments(&mut self) -> Result<(Vec<Expr>, Vec<Keyword>), ParseError> {
        let mut args = Vec::new();
        let mut kwargs: Vec<Keyword> = Vec::new();
        while !self.peek().is_op(")") {
            let tok = self.peek().clone();
            if tok.kind == TokenKind::Name && self.peek_at(1).is_op("=") {
                self.advance();
                self.advance();
                if kwargs.iter().any(|k| k.name == tok.lexeme) {
                    return self.invalid(&tok, format!("duplicate keyword argument `{}`", tok.lexeme));
                }
                let value = self.expr()?;
                kwargs.push(Keyword {
                    name: tok.lexeme,
                    value,
                });
            } else {
                if !kwargs.is_empty() {
                    return self.invalid(&tok, "positional argument follows keyword argument");
                }
                args.push(self.expr()?);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok((args, kwargs))
    }

    fn subscript(&mut self, value: Expr) -> Result<Expr, ParseError> {
        let value = Box::new(value);
        let lower = if self.peek().is_op(":") {
            None
        } else {
            Some(Box::new(self.expr()?))
        };
        if self.eat_op(":") {
            let upper = if self.peek().is_op("]") {
                None
            } else {
                Some(Box::new(self.expr()?))
            };
            self.expect_op("]")?;
            return Ok(Expr::Slice {
                value,
                lower,
                upper,
            });
        }
        self.expect_op("]")?;
        Ok(Expr::Index {
            value,
            index: lower.expect("index expression present"),
        })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Name => {
                self.advance();
                Ok(Expr::Name(tok.lexeme))
            }
            TokenKind::Number => {
                self.advance();
                number_literal(&tok)
            }
            TokenKind::String => {
                self.advance();
                Ok(Expr::Literal(Literal::Str(unescape(
                    &tok.lexeme[1..tok.lexeme.len() - 1],
                ))))
            }
            TokenKind::FString => {
                self.advance();
                fstring_parts(&tok).map(Expr::FString)
            }
            TokenKind::Placeholder => {
                self.advance();
                match tok.lexeme[1..].parse::<u32>() {
                    Ok(n) => Ok(Expr::Placeholder(n)),
                    Err(_) => self.invalid(&tok, "placeholder number out of range"),
                }
            }
            TokenKind::Keyword(Kw::True) => {
                self.advance();
                Ok(Expr::Literal(Literal::Bool(true)))
            }
            TokenKind::Keyword(Kw::False) => {
                self.advance();
                Ok(Expr::Literal(Literal::Bool(false)))
            }
            TokenKind::Keyword(Kw::None) => {
                self.advance();
                Ok(Expr::Literal(Literal::None))
            }
            TokenKind::Op if tok.lexeme == "(" => {
                self.advance();
                self.paren()
            }
            TokenKind::Op if tok.lexeme == "[" => {
                self.advance();
                self.list_or_comprehension()
            }
            TokenKind::Op if tok.lexeme == "{" => {
                self.advance();
                self.dict()
            }
            _ => self.fail(&["expression"]),
        }
    }

    fn paren(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op(")") {
            return Ok(Expr::Tuple(Vec::new()));
        }
        let first = self.expr()?;
        if self.eat_op(")") {
            return Ok(first);
        }
        self.expect_op(",")?;
        let mut items = vec![first];
        while !self.peek().is_op(")") {
            items.push(self.expr()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(Expr::Tuple(items))
    }

    fn list_or_comprehension(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op("]") {
            return Ok(Expr::List(Vec::new()));
        }
        let first = self.expr()?;
        if self.eat_keyword(Kw::For) {
            let var = self.expect_name()?;
            self.expect_keyword(Kw::In, "in")?;
            let iter = self.or_expr()?;
            let cond = if self.eat_keyword(Kw::If) {
                Some(Box::new(self.or_expr()?))
            } else {
                None
            };
            self.expect_op("]")?;
            return Ok(Expr::ListComp {
                element: Box::new(first),
                var,
                iter: Box::new(iter),
                cond,
            });
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.peek().is_op("]") {
                break;
            }
            items.push(self.expr()?);
        }
        self.expect_op("]")?;
        Ok(Expr::List(items))
    }

    fn dict(&mut self) -> Result<Expr, ParseError> {
        let mut pairs = Vec::new();
        while !self.peek().is_op("}") {
            let key = self.expr()?;
            self.expect_op(":")?;
            let value = self.expr()?;
            pairs.push((key, value));
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op("}")?;
        Ok(Expr::Dict(pairs))
    }
}

fn number_literal(tok: &Token) -> Result<Expr, ParseError> {
    let text = &tok.lexeme;
    let invalid = |message: &str| ParseError::Invalid {
        line: tok.line,
        col: tok.col,
        message: message.to_string(),
    };
    if text.contains(['.', 'e', 'E']) {
        let v: f64 = text.parse().map_err(|_| invalid("malformed float literal"))?;
        if !v.is_finite() {
            return Err(invalid("float literal out of range"));
        }
        Ok(Expr::Literal(Literal::Float(v)))
    } else {
        let v: i64 = text.parse().map_err(|_| invalid("integer literal out of range"))?;
        Ok(Expr::Literal(Literal::Int(v)))
    }
}

/// Decodes backslash escapes in a string literal body.
pub(crate) fn unescape(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('0') => out.push('\0'),
            Some('\\') => out.push('\\'),
            Some('\'') => out.push('\''),
            Some('"') => out.push('"'),
            Some('u') => {
                let hex: String = (0..4).filter_map(|_| chars.next()).collect();
                match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    Some(ch) if hex.len() == 4 => out.push(ch),
                    _ => {
                        out.push_str("\\u");
                        out.push_str(&hex);
                    }
                }
            }
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn fstring_parts(tok: &Token) -> Result<Vec<FStringPart>, ParseError> {
    let invalid = |message: &str| ParseError::Invalid {
        line: tok.line,
        col: tok.col,
        message: message.to_string(),
    };
    // Strip `f` and the quotes.
    let body: Vec<char> = tok.lexeme.chars().skip(2).collect();
    let body = &body[..body.len() - 1];
    let mut parts = Vec::new();
    let mut lit = String::new();
    let mut i = 0;
    while i < body.len() {
        match body[i] {
            '{' if body.get(i + 1) == Some(&'{') => {
                lit.push('{');
                i += 2;
            }
            '}' if body.get(i + 1) == Some(&'}') => {
                lit.push('}');
                i += 2;
            }
            '}' => return Err(invalid("single `}` in f-string")),
            '{' => {
                let end = field_end(body, i + 1).ok_or_else(|| invalid("unclosed `{` in f-string"))?;
                let src: String = body[i + 1..end].iter().collect();
                if src.trim().is_empty() {
                    return Err(invalid("empty expression in f-string"));
                }
                let expr = parse_expression(&src).map_err(|e| ParseError::Invalid {
                    line: tok.line,
                    col: tok.col,
                    message: format!("in f-string field `{src}`: {e}"),
                })?;
                if !lit.is_empty() {
                    parts.push(FStringPart::Lit(unescape(&std::mem::take(&mut lit))));
                }
                parts.push(FStringPart::Expr(expr));
                i = end + 1;
            }
            '\\' if i + 1 < body.len() => {
                lit.push(body[i]);
                lit.push(body[i + 1]);
                i += 2;
            }
            c => {
                lit.push(c);
                i += 1;
            }
        }
    }
    if !lit.is_empty() {
        parts.push(FStringPart::Lit(unescape(&lit)));
    }
    Ok(parts)
}

fn field_end(body: &[char], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = start;
    while i < body.len() {
        match body[i] {
            q @ ('"' | '\'') => {
                i += 1;
                while i < body.len() && body[i] != q {
                    if body[i] == '\\' {
                        i += 1;
                    }
                    i += 1;
                }
            }
            '(' | '[' | '{' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            '}' if depth == 0 => return Some(i),
            '}' => depth -= 1,
            _ => {}
        }
        i += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE2_FINAL: &str = r#"objects = s3.list_objects(Bucket="zoology-bucket").get("Contents", [])
keys = [obj["Key"] for obj in objects if obj["Key"].endswith(".txt")]
return len(keys)
"#;

    #[test]
    fn counting_program_is_assign_assign_return() {
        let ast = parse(TABLE2_FINAL).unwrap();
        assert!(matches!(
            ast.statements.as_slice(),
            [Stmt::Assign { .. }, Stmt::Assign { .. }, Stmt::Return(Some(_))]
        ));
    }

    #[test]
    fn empty_program() {
        assert_eq!(parse("").unwrap().statements.len(), 0);
        assert_eq!(parse("# Program #1: final\n\n").unwrap().statements.len(), 0);
    }

    #[test]
    fn sort_with_lambda_and_keywords() {
        let ast = parse("pairs.sort(key=lambda pair: pair[1], reverse=True)").unwrap();
        let Stmt::Expr(Expr::Call { args, kwargs, .. }) = &ast.statements[0] else {
            panic!("expected call");
        };
        assert!(args.is_empty());
        assert_eq!(kwargs.len(), 2);
        assert!(matches!(kwargs[0].value, Expr::Lambda { .. }));
        assert_eq!(kwargs[1].value, Expr::Literal(Literal::Bool(true)));
    }

    #[test]
    fn placeholder_sets() {
        let rename = "old_path = ?1\nnew_path = ?1.replace(\".txt\", \".rtf\")\n\
                      s3.copy_object(Bucket=\"my-bucket\", CopySource=f\"my-bucket/{new_path}\", Key=old_path)\n\
                      s3.delete_object(Bucket=\"my-bucket\", Key=old_path)";
        assert_eq!(parse(rename).unwrap().placeholders().into_iter().collect::<Vec<_>>(), [1]);
        assert!(parse("return 1").unwrap().placeholders().is_empty());
        let draft = "s3.copy_object(Bucket=?1, CopySource={\"Bucket\": ?1, \"Key\": ?2}, Key=?3)\n\
                     s3.delete_object(Bucket=?1, Key=?2)";
        assert_eq!(
            parse(draft).unwrap().placeholders().into_iter().collect::<Vec<_>>(),
            [1, 2, 3]
        );
    }

    #[test]
    fn fstring_fields_are_expressions() {
        let Expr::FString(parts) = parse_expression(r#"f"my-bucket/{new_path}""#).unwrap() else {
            panic!()
        };
        assert_eq!(
            parts,
            vec![
                FStringPart::Lit("my-bucket/".into()),
                FStringPart::Expr(Expr::Name("new_path".into()))
            ]
        );
        assert!(parse_expression(r#"f"{}""#).is_err());
        assert!(parse_expression(r#"f"a } b""#).is_err());
    }

    #[test]
    fn syntax_errors_report_expected_tokens() {
        let err = parse("x = [1, 2").unwrap_err();
        let ParseError::Syntax { expected, .. } = &err else {
            panic!("{err:?}")
        };
        assert_eq!(expected, &["`]`"]);
        assert!(parse("x.y = 1").is_err());
        assert!(parse("f(a=1, 2)").is_err());
        assert!(parse("while x:\n  pass").is_err());
        assert!(parse("  x = 1\ny = 2").is_err());
    }

    #[test]
    fn raise_forms() {
        let ast = parse("raise EndDialog()\nraise FAQ(\"x\")\nraise ChitChat").unwrap();
        assert_eq!(
            ast.statements[0],
            Stmt::Raise {
                name: "EndDialog".into(),
                arg: None
            }
        );
        assert!(matches!(&ast.statements[1], Stmt::Raise { arg: Some(_), .. }));
    }

    #[test]
    fn comparisons_and_not_in() {
        let e = parse_expression("a not in b").unwrap();
        assert!(matches!(e, Expr::Compare { ref rest, .. } if rest[0].0 == CmpOp::NotIn));
        let e = parse_expression("not a in b").unwrap();
        assert!(matches!(e, Expr::Unary { op: UnaryOp::Not, .. }));
    }

    #[test]
    fn slices() {
        let e = parse_expression("xs[:3]").unwrap();
        assert!(matches!(e, Expr::Slice { lower: None, upper: Some(_), .. }));
        let e = parse_expression("xs[1:]").unwrap();
        assert!(matches!(e, Expr::Slice { lower: Some(_), upper: None, .. }));
    }
}
