//! PDDL+ frontend: lexing, parsing, cross-checking and grounding.
//!
//! The supported subset is typing, Boolean predicates, numeric functions,
//! instantaneous and durative actions, processes, events, assign/increase/
//! decrease effects, rate effects written `(* #t expr)`, and duration
//! constraints `(= ?duration expr)` (`<=`/`>=` are accepted as a documented
//! extension). Anything else is rejected with a diagnostic naming the
//! construct and its position.

pub mod ast;
pub mod ground;
pub mod lexer;
pub mod parser;
pub mod render;

pub use ast::{CmpOp, Dir, DomainAst, ProblemAst, Span};
pub use ground::{ground, GroundInstance};
pub use parser::{parse_domain, parse_problem};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PddlError {
    #[error("{file}:{line}:{col}: parse error: {msg}")]
    Parse {
        file: String,
        line: u32,
        col: u32,
        msg: String,
    },
    #[error("{file}:{line}:{col}: unsupported feature: {construct}")]
    Unsupported {
        file: String,
        line: u32,
        col: u32,
        construct: String,
    },
    #[error("{file}:{line}:{col}: undeclared symbol `{symbol}`")]
    UndeclaredSymbol {
        file: String,
        line: u32,
        col: u32,
        symbol: String,
    },
    #[error("{file}:{line}:{col}: type mismatch: {msg}")]
    TypeMismatch {
        file: String,
        line: u32,
        col: u32,
        msg: String,
    },
    #[error("{file}: {msg}")]
    Semantic { file: String, msg: String },
}

impl PddlError {
    pub fn parse(file: &str, span: Span, msg: impl Into<String>) -> Self {
        PddlError::Parse {
            file: file.to_string(),
            line: span.line,
            col: span.col,
            msg: msg.into(),
        }
    }

    pub fn unsupported(file: &str, span: Span, construct: impl Into<String>) -> Self {
        PddlError::Unsupported {
            file: file.to_string(),
            line: span.line,
            col: span.col,
            construct: construct.into(),
        }
    }

    pub fn undeclared(file: &str, span: Span, symbol: impl Into<String>) -> Self {
        PddlError::UndeclaredSymbol {
            file: file.to_string(),
            line: span.line,
            col: span.col,
            symbol: symbol.into(),
        }
    }
}
