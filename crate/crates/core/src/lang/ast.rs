use std::collections::BTreeSet;

/// A parsed program. Immutable once built; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ast {
    pub statements: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign { target: String, value: Expr },
    Expr(Expr),
    For { var: String, iter: Expr, body: Vec<Stmt> },
    If { cond: Expr, body: Vec<Stmt> },
    Return(Option<Expr>),
    Raise { name: String, arg: Option<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FStringPart {
    Lit(String),
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    In,
    NotIn,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::NotEq => "!=",
            CmpOp::Lt => "<",
            CmpOp::LtE => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtE => ">=",
            CmpOp::In => "in",
            CmpOp::NotIn => "not in",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keyword {
    pub name: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Literal),
    Name(String),
    Placeholder(u32),
    FString(Vec<FStringPart>),
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Dict(Vec<(Expr, Expr)>),
    ListComp {
        element: Box<Expr>,
        var: String,
        iter: Box<Expr>,
        cond: Option<Box<Expr>>,
    },
    Lambda {
        param: String,
        body: Box<Expr>,
    },
    Attribute {
        value: Box<Expr>,
        attr: String,
    },
    Index {
        value: Box<Expr>,
        index: Box<Expr>,
    },
    Slice {
        value: Box<Expr>,
        lower: Option<Box<Expr>>,
        upper: Option<Box<Expr>>,
    },
    Call {
        func: Box<Expr>,
        args: Vec<Expr>,
        kwargs: Vec<Keyword>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Compare {
        left: Box<Expr>,
        rest: Vec<(CmpOp, Expr)>,
    },
    BoolOp {
        op: BoolOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
}

impl Ast {
    /// Distinct placeholder numbers appearing anywhere in the program.
    pub fn placeholders(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.walk_exprs(&mut |e| {
            if let Expr::Placeholder(n) = e {
                out.insert(*n);
            }
        });
        out
    }

    /// Static `s3.<api>(...)` call sites, in source order.
    pub fn api_call_sites(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk_exprs(&mut |e| {
            if let Expr::Call { func, .. } = e {
                if let Expr::Attribute { value, attr } = func.as_ref() {
                    if matches!(value.as_ref(), Expr::Name(n) if n == "s3") {
                        out.push(attr.clone());
                    }
                }
            }
        });
        out
    }

    /// Pre-order visit of every expression.
    pub fn walk_exprs(&self, f: &mut dyn FnMut(&Expr)) {
        for stmt in &self.statements {
            walk_stmt(stmt, f);
        }
    }
}

fn walk_stmt(stmt: &Stmt, f: &mut dyn FnMut(&Expr)) {
    match stmt {
        Stmt::Assign { value, .. } | Stmt::Expr(value) => walk_expr(value, f),
        Stmt::For { iter, body, .. } => {
            walk_expr(iter, f);
            body.iter().for_each(|s| walk_stmt(s, f));
        }
        Stmt::If { cond, body } => {
            walk_expr(cond, f);
            body.iter().for_each(|s| walk_stmt(s, f));
        }
        Stmt::Return(value) | Stmt::Raise { arg: value, .. } => {
            if let Some(v) = value {
                walk_expr(v, f);
            }
        }
    }
}

fn walk_expr(expr: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(expr);
    match expr {
        Expr::Literal(_) | Expr::Name(_) | Expr::Placeholder(_) => {}
        Expr::FString(parts) => {
            for part in parts {
                if let FStringPart::Expr(e) = part {
                    walk_expr(e, f);
                }
            }
        }
        Expr::List(items) | Expr::Tuple(items) => items.iter().for_each(|e| walk_expr(e, f)),
        Expr::Dict(pairs) => {
            for (k, v) in pairs {
                walk_expr(k, f);
                walk_expr(v, f);
            }
        }
        Expr::ListComp {
            element,
            iter,
            cond,
            ..
        } => {
            walk_expr(iter, f);
            if let Some(c) = cond {
                walk_expr(c, f);
            }
            walk_expr(element, f);
        }
        Expr::Lambda { body, .. } => walk_expr(body, f),
        Expr::Attribute { value, .. } => walk_expr(value, f),
        Expr::Index { value, index } => {
            walk_expr(value, f);
            walk_expr(index, f);
        }
        Expr::Slice {
            value,
            lower,
            upper,
        } => {
            walk_expr(value, f);
            for e in [lower, upper].into_iter().flatten() {
                walk_expr(e, f);
            }
        }
        Expr::Call { func, args, kwargs } => {
            walk_expr(func, f);
            args.iter().for_each(|e| walk_expr(e, f));
            kwargs.iter().for_each(|k| walk_expr(&k.value, f));
        }
        Expr::Unary { operand, .. } => walk_expr(operand, f),
        Expr::Binary { left, right, .. } | Expr::BoolOp { left, right, .. } => {
            walk_expr(left, f);
            walk_expr(right, f);
        }
        Expr::Compare { left, rest } => {
            walk_expr(left, f);
            rest.iter().for_each(|(_, e)| walk_expr(e, f));
        }
    }
}
