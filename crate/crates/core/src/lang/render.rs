//! Canonical pretty-printer. `parse(render(ast)) == ast` for every parsed program.

use super::ast::*;

const INDENT: &str = "    ";

// Binding strength, loosest first.
const PREC_LAMBDA: u8 = 0;
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;
const PREC_CMP: u8 = 4;
const PREC_ADD: u8 = 5;
const PREC_NEG: u8 = 6;
const PREC_POSTFIX: u8 = 7;

pub fn render(ast: &Ast) -> String {
    let mut lines = Vec::new();
    for stmt in &ast.statements {
        render_stmt(stmt, 0, &mut lines);
    }
    lines.join("\n")
}

fn render_stmt(stmt: &Stmt, depth: usize, out: &mut Vec<String>) {
    let pad = INDENT.repeat(depth);
    match stmt {
        Stmt::Assign { target, value } => out.push(format!("{pad}{target} = {}", expr(value))),
        Stmt::Expr(e) => out.push(format!("{pad}{}", expr(e))),
        Stmt::For { var, iter, body } => {
            out.push(format!("{pad}for {var} in {}:", expr(iter)));
            render_body(body, depth + 1, out);
        }
        Stmt::If { cond, body } => {
            out.push(format!("{pad}if {}:", expr(cond)));
            render_body(body, depth + 1, out);
        }
        Stmt::Return(None) => out.push(format!("{pad}return")),
        Stmt::Return(Some(e)) => out.push(format!("{pad}return {}", expr(e))),
        Stmt::Raise { name, arg } => {
            let arg = arg.as_ref().map(expr).unwrap_or_default();
            out.push(format!("{pad}raise {name}({arg})"));
        }
    }
}

fn render_body(body: &[Stmt], depth: usize, out: &mut Vec<String>) {
    for stmt in body {
        render_stmt(stmt, depth, out);
    }
}

/// Renders a single expression.
pub fn expr(e: &Expr) -> String {
    at(e, PREC_LAMBDA)
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Lambda { .. } => PREC_LAMBDA,
        Expr::BoolOp { op: BoolOp::Or, .. } => PREC_OR,
        Expr::BoolOp { op: BoolOp::And, .. } => PREC_AND,
        Expr::Unary {
            op: UnaryOp::Not, ..
        } => PREC_NOT,
        Expr::Compare { .. } => PREC_CMP,
        Expr::Binary { .. } => PREC_ADD,
        Expr::Unary {
            op: UnaryOp::Neg, ..
        } => PREC_NEG,
        _ => PREC_POSTFIX,
    }
}

fn at(e: &Expr, min: u8) -> String {
    let text = bare(e);
    if precedence(e) < min {
        format!("({text})")
    } else {
        text
    }
}

fn join(items: &[Expr]) -> String {
    items.iter().map(expr).collect::<Vec<_>>().join(", ")
}

fn bare(e: &Expr) -> String {
    match e {
        Expr::Literal(lit) => literal(lit),
        Expr::Name(n) => n.clone(),
        Expr::Placeholder(n) => format!("?{n}"),
        Expr::FString(parts) => fstring(parts),
        Expr::List(items) => format!("[{}]", join(items)),
        Expr::Tuple(items) if items.len() == 1 => format!("({},)", expr(&items[0])),
        Expr::Tuple(items) => format!("({})", join(items)),
        Expr::Dict(pairs) => {
            let body: Vec<_> = pairs
                .iter()
                .map(|(k, v)| format!("{}: {}", expr(k), expr(v)))
                .collect();
            format!("{{{}}}", body.join(", "))
        }
        Expr::ListComp {
            element,
            var,
            iter,
            cond,
        } => {
            let mut s = format!("[{} for {var} in {}", expr(element), at(iter, PREC_OR));
            if let Some(c) = cond {
                s.push_str(&format!(" if {}", at(c, PREC_OR)));
            }
            s.push(']');
            s
        }
        Expr::Lambda { param, body } => format!("lambda {param}: {}", expr(body)),
        Expr::Attribute { value, attr } => format!("{}.{attr}", at(value, PREC_POSTFIX)),
        Expr::Index { value, index } => format!("{}[{}]", at(value, PREC_POSTFIX), expr(index)),
        Expr::Slice {
            value,
            lower,
            upper,
        } => format!(
            "{}[{}:{}]",
            at(value, PREC_POSTFIX),
            lower.as_deref().map(expr).unwrap_or_default(),
            upper.as_deref().map(expr).unwrap_or_default()
        ),
        Expr::Call { func, args, kwargs } => {
            let mut parts: Vec<String> = args.iter().map(expr).collect();
            parts.extend(kwargs.iter().map(|k| format!("{}={}", k.name, expr(&k.value))));
            format!("{}({})", at(func, PREC_POSTFIX), parts.join(", "))
        }
        Expr::Unary {
            op: UnaryOp::Neg,
            operand,
        } => format!("-{}", at(operand, PREC_NEG)),
        Expr::Unary {
            op: UnaryOp::Not,
            operand,
        } => format!("not {}", at(operand, PREC_NOT)),
        Expr::Binary { op, left, right } => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
            };
            format!("{} {sym} {}", at(left, PREC_ADD), at(right, PREC_NEG))
        }
        Expr::Compare { left, rest } => {
            let mut s = at(left, PREC_ADD);
            for (op, e) in rest {
                s.push_str(&format!(" {} {}", op.symbol(), at(e, PREC_ADD)));
            }
            s
        }
        Expr::BoolOp { op, left, right } => {
            let (sym, prec) = match op {
                BoolOp::Or => ("or", PREC_OR),
                BoolOp::And => ("and", PREC_AND),
            };
            format!("{} {sym} {}", at(left, prec), at(right, prec + 1))
        }
    }
}

fn literal(lit: &Literal) -> String {
    match lit {
        Literal::None => "None".into(),
        Literal::Bool(true) => "True".into(),
        Literal::Bool(false) => "False".into(),
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) => format!("{f:?}"),
        Literal::Str(s) => quote(s),
    }
}

fn escape_into(s: &str, out: &mut String, braces: bool) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            '{' if braces => out.push_str("{{"),
            '}' if braces => out.push_str("}}"),
            c => out.push(c),
        }
    }
}

/// Double-quoted string literal.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    escape_into(s, &mut out, false);
    out.push('"');
    out
}

fn fstring(parts: &[FStringPart]) -> String {
    let mut out = String::from("f\"");
    for part in parts {
        match part {
            FStringPart::Lit(s) => escape_into(s, &mut out, true),
            FStringPart::Expr(e) => {
                out.push('{');
                out.push_str(&expr(e));
                out.push('}');
            }
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::*;

    fn roundtrip(code: &str) {
        let ast = parse(code).unwrap();
        let text = render(&ast);
        let again = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(ast, again, "\n{text}");
    }

    #[test]
    fn whitespace_is_normalized() {
        assert_eq!(render(&parse("return  1").unwrap()), "return 1");
    }

    #[test]
    fn placeholders_survive() {
        assert_eq!(render(&parse("x = ?1").unwrap()), "x = ?1");
    }

    #[test]
    fn parenthesization_roundtrips() {
        for code in [
            "return (a + b).c",
            "return a - (b - c)",
            "return -(a + b)",
            "return not (a and b) or c",
            "return (a or b) and c",
            "return (a < b) == c",
            "return (lambda x: x)(1)",
            "f(key=lambda p: p[1] + 1)",
            "return [x for x in (a or b) if (c or d)]",
            "return (1,)",
            "return ()",
            "return {\"a\": [1, 2.5, None, True], \"b\": {}}",
            "return f\"{{lit}} {d[\"k\"]} \\\"q\\\" {x + 1}\"",
            "return \"tab\\tnew\\nline \\\\ quote\\\"\"",
            "return xs[:3] + xs[1:] + xs[a:b]",
            "return a not in b",
        ] {
            roundtrip(code);
        }
    }

    #[test]
    fn blocks_roundtrip() {
        roundtrip(
            "objects = s3.list_objects(Bucket=\"b\").get(\"Contents\", [])\n\
             paths = [obj[\"Key\"] for obj in objects]\n\
             for path in paths:\n  s3.copy_object(\n    Bucket=\"b\",\n    CopySource={\"Bucket\": \"b\", \"Key\": path},\n    Key=path.replace(\".txt\", \".rtf\")\n  )\n  if path:\n    s3.delete_object(Bucket=\"b\", Key=path)\n\
             raise EndDialog()",
        );
    }
}
