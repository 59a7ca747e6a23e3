//! Sandboxed tree-walking interpreter.
//!
//! A program runs as the body of a single function. The only foreign name is
//! `s3`, which forwards keyword-argument calls to an [`ApiDispatcher`]. Every
//! failure inside a program (faults, `raise`, API errors) is captured in the
//! returned [`Outcome`]; the only hard error is trying to execute a program
//! that still contains placeholders.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;
use std::sync::OnceLock;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use super::ast::*;
use super::methods::{CallArgs, MethodRegistry};
use super::value::{Callable, Closure, Value};

/// Canonical conversational exceptions a program may raise.
pub const CONVERSATIONAL_EXCEPTIONS: [&str; 6] = [
    "OutOfScopeRequestError",
    "AmbiguousRequestError",
    "ChitChat",
    "FAQ",
    "OverSpecificationError",
    "EndDialog",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecLimits {
    pub max_steps: u64,
    pub max_collection_len: usize,
    pub max_string_len: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        Self {
            max_steps: 100_000,
            max_collection_len: 100_000,
            max_string_len: 10 * 1024 * 1024,
        }
    }
}

/// Error record observed by the dialogue model, serialized as
/// `{"error": name, "message": message}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    #[serde(rename = "error")]
    pub name: String,
    pub message: String,
}

/// Result of executing one program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub return_value: Json,
    pub error: Option<ErrorRecord>,
}

impl Outcome {
    pub fn returned(value: Json) -> Self {
        Self {
            return_value: value,
            error: None,
        }
    }

    pub fn failed(name: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            return_value: Json::Null,
            error: Some(ErrorRecord {
                name: name.into(),
                message: message.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultKind {
    NameUndefined,
    TypeMismatch,
    KeyMissing,
    IndexOutOfRange,
    StepLimit,
    SizeLimit,
    NotJsonConvertible,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub kind: FaultKind,
    pub message: String,
}

impl Fault {
    pub fn new(kind: FaultKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn type_mismatch(message: impl Into<String>) -> Self {
        Self::new(FaultKind::TypeMismatch, message)
    }
}

/// Anything that aborts program execution.
#[derive(Debug, Clone, PartialEq)]
pub enum Interrupt {
    Fault(Fault),
    /// `raise Name(msg)` or an error surfaced by the API dispatcher.
    Error(ErrorRecord),
}

impl From<Fault> for Interrupt {
    fn from(f: Fault) -> Self {
        Interrupt::Fault(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DispatchError {
    UnknownApi(String),
    /// An API-level failure, already formatted for the program to observe.
    Api(ErrorRecord),
}

/// Backend for `s3.<api>(**kwargs)` calls.
pub trait ApiDispatcher {
    fn call(
        &mut self,
        api: &str,
        kwargs: serde_json::Map<String, Json>,
    ) -> Result<Json, DispatchError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("program still contains placeholders {0:?}")]
    PlaceholderUnresolved(BTreeSet<u32>),
}

/// Lint finding that does not prevent execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintWarning {
    pub message: String,
}

/// Flags `raise` of names outside the canonical conversational exceptions.
pub fn lint(ast: &Ast) -> Vec<LintWarning> {
    fn visit(stmts: &[Stmt], out: &mut Vec<LintWarning>) {
        for stmt in stmts {
            match stmt {
                Stmt::Raise { name, .. } if !CONVERSATIONAL_EXCEPTIONS.contains(&name.as_str()) => {
                    out.push(LintWarning {
                        message: format!("`{name}` is not a conversational exception"),
                    })
                }
                Stmt::For { body, .. } | Stmt::If { body, .. } => visit(body, out),
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    visit(&ast.statements, &mut out);
    out
}

pub fn standard_registry() -> &'static MethodRegistry {
    static REGISTRY: OnceLock<MethodRegistry> = OnceLock::new();
    REGISTRY.get_or_init(MethodRegistry::standard)
}

pub fn execute(
    ast: &Ast,
    env: &mut dyn ApiDispatcher,
    limits: &ExecLimits,
) -> Result<Outcome, ExecError> {
    execute_with(ast, env, limits, standard_registry())
}

pub fn execute_with(
    ast: &Ast,
    env: &mut dyn ApiDispatcher,
    limits: &ExecLimits,
    registry: &MethodRegistry,
) -> Result<Outcome, ExecError> {
    let holes = ast.placeholders();
    if !holes.is_empty() {
        return Err(ExecError::PlaceholderUnresolved(holes));
    }
    let mut interp = Interpreter {
        env,
        limits: *limits,
        registry,
        globals: HashMap::new(),
        locals: Vec::new(),
        steps: 0,
    };
    let result = interp.block(&ast.statements);
    Ok(match result {
        Ok(Flow::Normal) => Outcome::returned(Json::Null),
        Ok(Flow::Return(v)) => match v.to_json() {
            Ok(json) => Outcome::returned(json),
            Err(msg) => Outcome::failed(FaultKind::NotJsonConvertible.to_string(), msg),
        },
        Err(Interrupt::Fault(f)) => Outcome::failed(f.kind.to_string(), f.message),
        Err(Interrupt::Error(rec)) => Outcome {
            return_value: Json::Null,
            error: Some(rec),
        },
    })
}

enum Flow {
    Normal,
    Return(Value),
}

pub struct Interpreter<'a> {
    env: &'a mut dyn ApiDispatcher,
    limits: ExecLimits,
    registry: &'a MethodRegistry,
    globals: HashMap<String, Value>,
    /// Comprehension variables and lambda parameters, innermost last.
    locals: Vec<(String, Value)>,
    steps: u64,
}

impl Interpreter<'_> {
    pub fn limits(&self) -> &ExecLimits {
        &self.limits
    }

    fn tick(&mut self) -> Result<(), Fault> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(Fault::new(
                FaultKind::StepLimit,
                format!("exceeded {} evaluation steps", self.limits.max_steps),
            ));
        }
        Ok(())
    }

    pub fn check_len(&self, len: usize) -> Result<(), Fault> {
        if len > self.limits.max_collection_len {
            return Err(Fault::new(
                FaultKind::SizeLimit,
                format!(
                    "collection of {len} items exceeds the limit of {}",
                    self.limits.max_collection_len
                ),
            ));
        }
        Ok(())
    }

    pub fn check_str(&self, s: &str) -> Result<(), Fault> {
        if s.len() > self.limits.max_string_len {
            return Err(Fault::new(
                FaultKind::SizeLimit,
                format!(
                    "string of {} bytes exceeds the limit of {}",
                    s.len(),
                    self.limits.max_string_len
                ),
            ));
        }
        Ok(())
    }

    pub fn new_list(&self, items: Vec<Value>) -> Result<Value, Fault> {
        self.check_len(items.len())?;
        Ok(Value::list(items))
    }

    pub fn new_str(&self, s: String) -> Result<Value, Fault> {
        self.check_str(&s)?;
        Ok(Value::Str(s))
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Flow, Interrupt> {
        for stmt in stmts {
            if let Flow::Return(v) = self.stmt(stmt)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<Flow, Interrupt> {
        self.tick()?;
        match stmt {
            Stmt::Assign { target, value } => {
                let v = self.eval(value)?;
                self.globals.insert(target.clone(), v);
            }
            Stmt::Expr(e) => {
                self.eval(e)?;
            }
            Stmt::For { var, iter, body } => {
                let source = self.eval(iter)?;
                let items = self.iterate(&source)?;
                for item in items {
                    self.globals.insert(var.clone(), item);
                    if let Flow::Return(v) = self.block(body)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            Stmt::If { cond, body } => {
                if self.eval(cond)?.truthy() {
                    return self.block(body);
                }
            }
            Stmt::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(e)?,
                    None => Value::Null,
                };
                return Ok(Flow::Return(v));
            }
            Stmt::Raise { name, arg } => {
                let message = match arg {
                    Some(e) => self.eval(e)?.py_str(),
                    None => String::new(),
                };
                return Err(Interrupt::Error(ErrorRecord {
                    name: name.clone(),
                    message,
                }));
            }
        }
        Ok(Flow::Normal)
    }

    /// Snapshot of the items a `for` loop or comprehension walks over.
    fn iterate(&self, v: &Value) -> Result<Vec<Value>, Fault> {
        Ok(match v {
            Value::List(items) => items.borrow().clone(),
            Value::Tuple(items) => items.as_ref().clone(),
            Value::Str(s) => s.chars().map(|c| Value::Str(c.to_string())).collect(),
            Value::Dict(map) => map.borrow().keys().map(|k| Value::Str(k.clone())).collect(),
            other => {
                return Err(Fault::type_mismatch(format!(
                    "'{}' object is not iterable",
                    other.type_name()
                )))
            }
        })
    }

    fn lookup(&self, name: &str) -> Result<Value, Fault> {
        if let Some((_, v)) = self.locals.iter().rev().find(|(n, _)| n == name) {
            return Ok(v.clone());
        }
        if let Some(v) = self.globals.get(name) {
            return Ok(v.clone());
        }
        if name == "s3" {
            return Ok(Value::Callable(Callable::Api));
        }
        if self.registry.has_function(name) {
            return Ok(Value::Callable(Callable::Builtin(name.to_string())));
        }
        Err(Fault::new(
            FaultKind::NameUndefined,
            format!("name '{name}' is not defined"),
        ))
    }

    pub fn eval(&mut self, e: &Expr) -> Result<Value, Interrupt> {
        self.tick()?;
        Ok(match e {
            Expr::Literal(lit) => match lit {
                Literal::None => Value::Null,
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(f) => Value::Float(*f),
                Literal::Str(s) => self.new_str(s.clone())?,
            },
            Expr::Name(n) => self.lookup(n)?,
            Expr::Placeholder(n) => {
                // execute() rejects these up front; reaching one is a caller bug.
                return Err(Fault::type_mismatch(format!("unresolved placeholder ?{n}")).into());
            }
            Expr::FString(parts) => {
                let mut s = String::new();
                for part in parts {
                    match part {
                        FStringPart::Lit(l) => s.push_str(l),
                        FStringPart::Expr(e) => s.push_str(&self.eval(e)?.py_str()),
                    }
                    self.check_str(&s)?;
                }
                Value::Str(s)
            }
            Expr::List(items) => {
                let vals = self.eval_all(items)?;
                self.new_list(vals)?
            }
            Expr::Tuple(items) => {
                let vals = self.eval_all(items)?;
                self.check_len(vals.len())?;
                Value::tuple(vals)
            }
            Expr::Dict(pairs) => {
                let mut map = IndexMap::new();
                for (k, v) in pairs {
                    let key = match self.eval(k)? {
                        Value::Str(s) => s,
                        other => {
                            return Err(Fault::type_mismatch(format!(
                                "dict keys must be str, not {}",
                                other.type_name()
                            ))
                            .into())
                        }
                    };
                    let value = self.eval(v)?;
                    map.insert(key, value);
                }
                self.check_len(map.len())?;
                Value::dict(map)
            }
            Expr::ListComp {
                element,
                var,
                iter,
                cond,
            } => {
                let source = self.eval(iter)?;
                let items = self.iterate(&source)?;
                let mut out = Vec::new();
                for item in items {
                    self.locals.push((var.clone(), item));
                    let res = self.comprehension_step(element, cond.as_deref());
                    self.locals.pop();
                    if let Some(v) = res? {
                        out.push(v);
                        self.check_len(out.len())?;
                    }
                }
                Value::list(out)
            }
            Expr::Lambda { param, body } => Value::Callable(Callable::Lambda(Rc::new(Closure {
                param: param.clone(),
                body: body.as_ref().clone(),
                captured: self.locals.clone(),
            }))),
            Expr::Attribute { value, attr } => {
                let v = self.eval(value)?;
                return Err(Fault::type_mismatch(format!(
                    "attribute '{attr}' of '{}' can only be called",
                    v.type_name()
                ))
                .into());
            }
            Expr::Index { value, index } => {
                let v = self.eval(value)?;
                let i = self.eval(index)?;
                index_value(&v, &i)?
            }
            Expr::Slice {
                value,
                lower,
                upper,
            } => {
                let v = self.eval(value)?;
                let lo = lower.as_deref().map(|e| self.eval(e)).transpose()?;
                let hi = upper.as_deref().map(|e| self.eval(e)).transpose()?;
                slice_value(&v, lo.as_ref(), hi.as_ref())?
            }
            Expr::Call { func, args, kwargs } => self.call_expr(func, args, kwargs)?,
            Expr::Unary { op, operand } => {
                let v = self.eval(operand)?;
                match op {
                    UnaryOp::Not => Value::Bool(!v.truthy()),
                    UnaryOp::Neg => match v {
                        Value::Int(i) => Value::Int(i.checked_neg().ok_or_else(overflow)?),
                        Value::Float(f) => Value::Float(-f),
                        other => {
                            return Err(Fault::type_mismatch(format!(
                                "bad operand type for unary -: '{}'",
                                other.type_name()
                            ))
                            .into())
                        }
                    },
                }
            }
            Expr::Binary { op, left, right } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                self.binary(*op, l, r)?
            }
            Expr::Compare { left, rest } => {
                let mut l = self.eval(left)?;
                for (op, e) in rest {
                    let r = self.eval(e)?;
                    if !compare(*op, &l, &r)? {
                        return Ok(Value::Bool(false));
                    }
                    l = r;
                }
                Value::Bool(true)
            }
            Expr::BoolOp { op, left, right } => {
                let l = self.eval(left)?;
                match (op, l.truthy()) {
                    (BoolOp::And, false) | (BoolOp::Or, true) => l,
                    _ => self.eval(right)?,
                }
            }
        })
    }

    fn comprehension_step(
        &mut self,
        element: &Expr,
        cond: Option<&Expr>,
    ) -> Result<Option<Value>, Interrupt> {
        if let Some(c) = cond {
            if !self.eval(c)?.truthy() {
                return Ok(None);
            }
        }
        self.eval(element).map(Some)
    }

    fn eval_all(&mut self, items: &[Expr]) -> Result<Vec<Value>, Interrupt> {
        items.iter().map(|e| self.eval(e)).collect()
    }

    fn call_expr(
        &mut self,
        func: &Expr,
        args: &[Expr],
        kwargs: &[Keyword],
    ) -> Result<Value, Interrupt> {
        if let Expr::Attribute { value, attr } = func {
            let receiver = self.eval(value)?;
            let call_args = self.eval_args(args, kwargs)?;
            if let Value::Callable(Callable::Api) = receiver {
                return self.call_api(attr, call_args);
            }
            let method = self.registry.method(receiver.tag(), attr).ok_or_else(|| {
                Fault::type_mismatch(format!(
                    "'{}' object has no method '{attr}'",
                    receiver.type_name()
                ))
            })?;
            return method(self, &receiver, call_args);
        }
        let callee = self.eval(func)?;
        let call_args = self.eval_args(args, kwargs)?;
        self.call_value(&callee, call_args)
    }

    fn eval_args(&mut self, args: &[Expr], kwargs: &[Keyword]) -> Result<CallArgs, Interrupt> {
        let positional = self.eval_all(args)?;
        let mut keywords = Vec::with_capacity(kwargs.len());
        for k in kwargs {
            keywords.push((k.name.clone(), self.eval(&k.value)?));
        }
        Ok(CallArgs {
            positional,
            keywords,
        })
    }

    /// Invokes a callable value: a lambda or a registered built-in function.
    pub fn call_value(&mut self, callee: &Value, args: CallArgs) -> Result<Value, Interrupt> {
        match callee {
            Value::Callable(Callable::Lambda(closure)) => {
                if args.positional.len() != 1 || !args.keywords.is_empty() {
                    return Err(Fault::type_mismatch(format!(
                        "lambda takes exactly one positional argument ({} given)",
                        args.positional.len() + args.keywords.len()
                    ))
                    .into());
                }
                let arg = args.positional.into_iter().next().expect("one argument");
                let mut frame = closure.captured.clone();
                frame.push((closure.param.clone(), arg));
                let saved = std::mem::replace(&mut self.locals, frame);
                let res = self.eval(&closure.body);
                self.locals = saved;
                res
            }
            Value::Callable(Callable::Builtin(name)) => {
                let f = self
                    .registry
                    .function(name)
                    .ok_or_else(|| Fault::new(FaultKind::NameUndefined, format!("name '{name}' is not defined")))?;
                f(self, &Value::Null, args)
            }
            other => Err(Fault::type_mismatch(format!(
                "'{}' object is not callable",
                other.type_name()
            ))
            .into()),
        }
    }

    fn call_api(&mut self, api: &str, args: CallArgs) -> Result<Value, Interrupt> {
        if !args.positional.is_empty() {
            return Err(Fault::type_mismatch(format!(
                "s3.{api}() only accepts keyword arguments"
            ))
            .into());
        }
        let mut kwargs = serde_json::Map::new();
        for (k, v) in args.keywords {
            let json = v
                .to_json()
                .map_err(|m| Fault::new(FaultKind::NotJsonConvertible, m))?;
            kwargs.insert(k, json);
        }
        match self.env.call(api, kwargs) {
            Ok(json) => {
                let v = Value::from_json(&json);
                Ok(v)
            }
            Err(DispatchError::UnknownApi(name)) => Err(Interrupt::Error(ErrorRecord {
                name: "UnknownApi".into(),
                message: format!("s3 client has no API named '{name}'"),
            })),
            Err(DispatchError::Api(rec)) => Err(Interrupt::Error(rec)),
        }
    }

    fn binary(&self, op: BinOp, l: Value, r: Value) -> Result<Value, Fault> {
        let sym = match op {
            BinOp::Add => "+",
            BinOp::Sub => "-",
        };
        let mismatch = |l: &Value, r: &Value| {
            Fault::type_mismatch(format!(
                "unsupported operand types for {sym}: '{}' and '{}'",
                l.type_name(),
                r.type_name()
            ))
        };
        Ok(match (op, &l, &r) {
            (BinOp::Add, Value::Int(a), Value::Int(b)) => {
                Value::Int(a.checked_add(*b).ok_or_else(overflow)?)
            }
            (BinOp::Sub, Value::Int(a), Value::Int(b)) => {
                Value::Int(a.checked_sub(*b).ok_or_else(overflow)?)
            }
            (_, Value::Int(_) | Value::Float(_), Value::Int(_) | Value::Float(_)) => {
                let (a, b) = (as_f64(&l), as_f64(&r));
                Value::Float(if op == BinOp::Add { a + b } else { a - b })
            }
            (BinOp::Add, Value::Str(a), Value::Str(b)) => self.new_str(format!("{a}{b}"))?,
            (BinOp::Add, Value::List(a), Value::List(b)) => {
                let mut items = a.borrow().clone();
                items.extend(b.borrow().iter().cloned());
                self.new_list(items)?
            }
            (BinOp::Add, Value::Tuple(a), Value::Tuple(b)) => {
                let mut items = a.as_ref().clone();
                items.extend(b.iter().cloned());
                self.check_len(items.len())?;
                Value::tuple(items)
            }
            _ => return Err(mismatch(&l, &r)),
        })
    }
}

fn overflow() -> Fault {
    Fault::new(FaultKind::SizeLimit, "integer overflow")
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Float(f) => *f,
        _ => unreachable!("numeric operand"),
    }
}

fn compare(op: CmpOp, l: &Value, r: &Value) -> Result<bool, Fault> {
    use std::cmp::Ordering::*;
    let ordered = |l: &Value, r: &Value| {
        l.py_cmp(r).ok_or_else(|| {
            Fault::type_mismatch(format!(
                "'{}' not supported between instances of '{}' and '{}'",
                op.symbol(),
                l.type_name(),
                r.type_name()
            ))
        })
    };
    Ok(match op {
        CmpOp::Eq => l.py_eq(r),
        CmpOp::NotEq => !l.py_eq(r),
        CmpOp::Lt => ordered(l, r)? == Less,
        CmpOp::LtE => ordered(l, r)? != Greater,
        CmpOp::Gt => ordered(l, r)? == Greater,
        CmpOp::GtE => ordered(l, r)? != Less,
        CmpOp::In => contains(r, l)?,
        CmpOp::NotIn => !contains(r, l)?,
    })
}

fn contains(container: &Value, item: &Value) -> Result<bool, Fault> {
    Ok(match (container, item) {
        (Value::Str(hay), Value::Str(needle)) => hay.contains(needle.as_str()),
        (Value::Str(_), other) => {
            return Err(Fault::type_mismatch(format!(
                "'in <string>' requires string as left operand, not {}",
                other.type_name()
            )))
        }
        (Value::List(items), _) => items.borrow().iter().any(|v| v.py_eq(item)),
        (Value::Tuple(items), _) => items.iter().any(|v| v.py_eq(item)),
        (Value::Dict(map), Value::Str(k)) => map.borrow().contains_key(k),
        (Value::Dict(_), _) => false,
        (other, _) => {
            return Err(Fault::type_mismatch(format!(
                "argument of type '{}' is not iterable",
                other.type_name()
            )))
        }
    })
}

fn normalize_index(i: i64, len: usize) -> Option<usize> {
    let len = len as i64;
    let idx = if i < 0 { i + len } else { i };
    (0..len).contains(&idx).then_some(idx as usize)
}

fn index_value(v: &Value, i: &Value) -> Result<Value, Fault> {
    let out_of_range = |kind: &str| Fault::new(FaultKind::IndexOutOfRange, format!("{kind} index out of range"));
    match (v, i) {
        (Value::List(items), Value::Int(n)) => {
            let items = items.borrow();
            normalize_index(*n, items.len())
                .map(|k| items[k].clone())
                .ok_or_else(|| out_of_range("list"))
        }
        (Value::Tuple(items), Value::Int(n)) => normalize_index(*n, items.len())
            .map(|k| items[k].clone())
            .ok_or_else(|| out_of_range("tuple")),
        (Value::Str(s), Value::Int(n)) => {
            let chars: Vec<char> = s.chars().collect();
            normalize_index(*n, chars.len())
                .map(|k| Value::Str(chars[k].to_string()))
                .ok_or_else(|| out_of_range("string"))
        }
        (Value::Dict(map), Value::Str(k)) => map
            .borrow()
            .get(k)
            .cloned()
            .ok_or_else(|| Fault::new(FaultKind::KeyMissing, format!("{}", Value::Str(k.clone()).py_repr()))),
        (Value::List(_) | Value::Tuple(_) | Value::Str(_), other) => Err(Fault::type_mismatch(
            format!("indices must be integers, not {}", other.type_name()),
        )),
        (Value::Dict(_), other) => Err(Fault::type_mismatch(format!(
            "dict keys must be str, not {}",
            other.type_name()
        ))),
        (other, _) => Err(Fault::type_mismatch(format!(
            "'{}' object is not subscriptable",
            other.type_name()
        ))),
    }
}

fn slice_bound(v: Option<&Value>, len: usize, default: usize) -> Result<usize, Fault> {
    match v {
        None | Some(Value::Null) => Ok(default),
        Some(Value::Int(i)) => {
            let len = len as i64;
            let idx = if *i < 0 { (*i + len).max(0) } else { (*i).min(len) };
            Ok(idx as usize)
        }
        Some(other) => Err(Fault::type_mismatch(format!(
            "slice indices must be integers, not {}",
            other.type_name()
        ))),
    }
}

fn slice_value(v: &Value, lo: Option<&Value>, hi: Option<&Value>) -> Result<Value, Fault> {
    fn bounds(len: usize, lo: Option<&Value>, hi: Option<&Value>) -> Result<(usize, usize), Fault> {
        let a = slice_bound(lo, len, 0)?;
        let b = slice_bound(hi, len, len)?;
        Ok((a, b.max(a)))
    }
    match v {
        Value::List(items) => {
            let items = items.borrow();
            let (a, b) = bounds(items.len(), lo, hi)?;
            Ok(Value::list(items[a..b].to_vec()))
        }
        Value::Tuple(items) => {
            let (a, b) = bounds(items.len(), lo, hi)?;
            Ok(Value::tuple(items[a..b].to_vec()))
        }
        Value::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            let (a, b) = bounds(chars.len(), lo, hi)?;
            Ok(Value::Str(chars[a..b].iter().collect()))
        }
        other => Err(Fault::type_mismatch(format!(
            "'{}' object is not subscriptable",
            other.type_name()
        ))),
    }
}
