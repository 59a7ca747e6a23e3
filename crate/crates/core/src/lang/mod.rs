//! The program language: a small, sandboxed, Python-flavoured imperative
//! language in which every goal of a dialogue is written.

pub mod ast;
pub mod interp;
pub mod lexer;
pub mod methods;
pub mod parser;
pub mod render;
pub mod value;

pub use ast::{Ast, Expr, Stmt};
pub use interp::{
    execute, execute_with, lint, ApiDispatcher, DispatchError, ErrorRecord, ExecError, ExecLimits,
    Fault, FaultKind, Interrupt, Outcome, CONVERSATIONAL_EXCEPTIONS,
};
pub use lexer::{tokenize, tokenize_lenient, LexError, Token, TokenKind};
pub use methods::MethodRegistry;
pub use parser::{parse, ParseError};
pub use render::render;
pub use value::Value;
