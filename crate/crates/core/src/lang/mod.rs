//! Front end for the annotated pointer language.
//!
//! Source files use a Rust-like dialect where specifications and ghost
//! commands live inside `//@` and `/*@ ... @*/` annotations. See
//! `docs/grammar.md` for the accepted grammar.

pub mod ast;
mod lexer;
mod parser;
mod pretty;
mod resolve;

use thiserror::Error;

pub use ast::{Assertion, Expr, FunctionDef, Pat, PredicateDef, Program, Rhs, Span, StmtKind};
pub use parser::{parse_program, TAIL_LOCAL};
pub use pretty::{canonical_encoding, pretty_program};
pub use resolve::{resolve_program, LocalKind, Op, ResolvedFunction, ResolvedProgram, Stmt, RESULT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ResolveError {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("resolve error at {0}")]
    Resolve(#[from] ResolveError),
}

/// Parses and resolves in one step.
pub fn load(src: &str) -> Result<ResolvedProgram, FrontendError> {
    Ok(resolve_program(parse_program(src)?)?)
}
