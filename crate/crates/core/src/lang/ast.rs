//! Surface AST produced by the parser.
//!
//! Pointer casts, type ascriptions and `unsafe` markers are erased while
//! parsing, so every value in the tree is a single pointer-sized sort.

use std::fmt;

/// Source position (1-based).
///
/// Spans never participate in equality: two trees that differ only in
/// layout compare equal.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Span) -> bool {
        true
    }
}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _state: &mut H) {}
}

impl Span {
    pub fn new(line: u32, col: u32) -> Span {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    /// `0`, `std::ptr::null_mut()`, `std::ptr::null()`.
    Null,
    /// `&raw mut x`, `&raw const x`, `&x`, `&mut x`.
    AddrOf(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pat {
    Term(Expr),
    /// `?x`
    Bind(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Assertion {
    True,
    /// `*E |-> P`
    PointsTo(Expr, Pat),
    PredApp(String, Vec<Pat>),
    SepConj(Box<Assertion>, Box<Assertion>),
    /// `if l == r { A } else { B }`
    Cond {
        lhs: Expr,
        rhs: Expr,
        then: Box<Assertion>,
        els: Box<Assertion>,
    },
}

impl Assertion {
    pub fn sep(a: Assertion, b: Assertion) -> Assertion {
        Assertion::SepConj(Box::new(a), Box::new(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Assertion,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub pre: Assertion,
    pub post: Assertion,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub predicates: Vec<PredicateDef>,
    pub functions: Vec<FunctionDef>,
}

/// Right-hand side of a `let`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    Expr(Expr),
    /// `*p`
    Deref(Expr),
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Let { name: String, init: Option<Rhs> },
    /// `*p = v;`
    Write(Expr, Expr),
    /// `if p.is_null() { .. } else { .. }`; the condition is normalized so
    /// `then` always runs when the scrutinee is null.
    IfNull {
        scrutinee: Expr,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
    },
    Call(String, Vec<Expr>),
    Return(Expr),
    Abort,
    Open(String, Vec<Expr>),
    Close(String, Vec<Expr>),
}
