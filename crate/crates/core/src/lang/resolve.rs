//! Name resolution and local classification.
//!
//! A local is `Addressed` iff some `AddrOf` in its function targets it. Such
//! locals live in the heap as `points_to` chunks; every other local lives in
//! the symbolic store.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::ast::{self, Assertion, Expr, Pat, PredicateDef, Program, Rhs, Span, StmtKind};
use super::ResolveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalKind {
    ByValue,
    Addressed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: Op,
    pub span: Span,
}

/// Resolved statement forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    LetValue(String, Expr),
    /// Address-taken local, optionally initialized.
    LetAddressed(String, Option<Expr>),
    WriteDeref(Expr, Expr),
    LetDeref(String, Expr),
    IfNull {
        scrutinee: Expr,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
    },
    Call {
        bind: Option<String>,
        callee: String,
        args: Vec<Expr>,
    },
    Return(Expr),
    Abort,
    GhostOpen(String, Vec<Expr>),
    GhostClose(String, Vec<Expr>),
}

fn join(args: &[Expr]) -> String {
    args.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

/// Single-line rendering; nested blocks are elided.
impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::LetValue(x, e) => write!(f, "let {x} = {e};"),
            Op::LetAddressed(x, Some(e)) => write!(f, "let mut {x} = {e};"),
            Op::LetAddressed(x, None) => write!(f, "let mut {x};"),
            Op::WriteDeref(p, v) => write!(f, "*{p} = {v};"),
            Op::LetDeref(x, p) => write!(f, "let {x} = *{p};"),
            Op::IfNull { scrutinee, .. } => write!(f, "if {scrutinee}.is_null() {{ .. }} else {{ .. }}"),
            Op::Call { bind: Some(x), callee, args } => write!(f, "let {x} = {callee}({});", join(args)),
            Op::Call { bind: None, callee, args } => write!(f, "{callee}({});", join(args)),
            Op::Return(e) => write!(f, "return {e};"),
            Op::Abort => f.write_str("std::process::abort();"),
            Op::GhostOpen(p, args) => write!(f, "//@ open {p}({});", join(args)),
            Op::GhostClose(p, args) => write!(f, "//@ close {p}({});", join(args)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedFunction {
    pub name: String,
    pub params: Vec<String>,
    pub pre: Assertion,
    pub post: Assertion,
    pub body: Vec<Stmt>,
    pub locals: BTreeMap<String, LocalKind>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedProgram {
    pub source: Program,
    pub predicates: Vec<PredicateDef>,
    pub functions: Vec<ResolvedFunction>,
    pred_index: HashMap<String, usize>,
    fn_index: HashMap<String, usize>,
}

impl ResolvedProgram {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDef> {
        self.pred_index.get(name).map(|&i| &self.predicates[i])
    }

    pub fn function(&self, name: &str) -> Option<&ResolvedFunction> {
        self.fn_index.get(name).map(|&i| &self.functions[i])
    }
}

pub const RESULT: &str = "result";

fn err<T>(span: Span, message: impl Into<String>) -> Result<T, ResolveError> {
    Err(ResolveError {
        span,
        message: message.into(),
    })
}

pub fn resolve_program(p: Program) -> Result<ResolvedProgram, ResolveError> {
    let mut pred_index = HashMap::new();
    for (i, pd) in p.predicates.iter().enumerate() {
        if pred_index.insert(pd.name.clone(), i).is_some() {
            return err(pd.span, format!("duplicate predicate `{}`", pd.name));
        }
    }
    let mut fn_index = HashMap::new();
    for (i, f) in p.functions.iter().enumerate() {
        if fn_index.insert(f.name.clone(), i).is_some() {
            return err(f.span, format!("duplicate function `{}`", f.name));
        }
    }
    let arity = |name: &str| pred_index.get(name).map(|&i| p.predicates[i].params.len());
    let fn_arity = |name: &str| fn_index.get(name).map(|&i| p.functions[i].params.len());

    for pd in &p.predicates {
        check_params(&pd.params, pd.span)?;
        let scope: BTreeSet<String> = pd.params.iter().cloned().collect();
        check_assertion(&pd.body, &scope, &arity, pd.span)?;
    }

    let mut functions = Vec::with_capacity(p.functions.len());
    for f in &p.functions {
        check_params(&f.params, f.span)?;
        if f.params.iter().any(|x| x == RESULT) {
            return err(f.span, format!("`{RESULT}` is reserved and cannot name a parameter"));
        }
        let scope: BTreeSet<String> = f.params.iter().cloned().collect();
        check_assertion(&f.pre, &scope, &arity, f.span)?;
        let mut post_scope = scope.clone();
        post_scope.insert(RESULT.to_string());
        check_assertion(&f.post, &post_scope, &arity, f.span)?;

        let mut addressed = BTreeSet::new();
        collect_addr_of(&f.body, &mut addressed);

        let mut cx = BodyCx {
            params: &f.params,
            addressed: &addressed,
            locals: BTreeMap::new(),
            arity: &arity,
            fn_arity: &fn_arity,
        };
        let mut declared: BTreeSet<String> = f.params.iter().cloned().collect();
        let (body, _) = cx.block(&f.body, &mut declared)?;
        for x in &addressed {
            if f.params.contains(x) {
                return err(f.span, format!("cannot take the address of parameter `{x}`"));
            }
        }
        functions.push(ResolvedFunction {
            name: f.name.clone(),
            params: f.params.clone(),
            pre: f.pre.clone(),
            post: f.post.clone(),
            body,
            locals: cx.locals,
            span: f.span,
        });
    }

    Ok(ResolvedProgram {
        predicates: p.predicates.clone(),
        source: p,
        functions,
        pred_index,
        fn_index,
    })
}

fn check_params(params: &[String], span: Span) -> Result<(), ResolveError> {
    let mut seen = BTreeSet::new();
    for x in params {
        if !seen.insert(x) {
            return err(span, format!("duplicate parameter `{x}`"));
        }
    }
    Ok(())
}

fn check_assertion(
    a: &Assertion,
    scope: &BTreeSet<String>,
    arity: &dyn Fn(&str) -> Option<usize>,
    span: Span,
) -> Result<(), ResolveError> {
    let mut binders = BTreeSet::new();
    let mut scope = scope.clone();
    walk_assertion(a, &mut scope, &mut binders, arity, span)
}

fn walk_assertion(
    a: &Assertion,
    scope: &mut BTreeSet<String>,
    binders: &mut BTreeSet<String>,
    arity: &dyn Fn(&str) -> Option<usize>,
    span: Span,
) -> Result<(), ResolveError> {
    let expr = |e: &Expr, scope: &BTreeSet<String>| -> Result<(), ResolveError> {
        match e {
            Expr::Null => Ok(()),
            Expr::Var(x) if scope.contains(x) => Ok(()),
            Expr::Var(x) => err(span, format!("unknown identifier `{x}` in assertion")),
            Expr::AddrOf(x) => err(span, format!("`&{x}` is not allowed in assertions")),
        }
    };
    let mut pat = |p: &Pat, scope: &mut BTreeSet<String>| -> Result<(), ResolveError> {
        match p {
            Pat::Term(e) => expr(e, scope),
            Pat::Bind(x) => {
                if scope.contains(x) || !binders.insert(x.clone()) {
                    return err(span, format!("duplicate binder `?{x}`"));
                }
                scope.insert(x.clone());
                Ok(())
            }
        }
    };
    match a {
        Assertion::True => Ok(()),
        Assertion::PointsTo(e, p) => {
            expr(e, scope)?;
            pat(p, scope)
        }
        Assertion::PredApp(name, args) => {
            match arity(name) {
                None => return err(span, format!("unknown predicate `{name}`")),
                Some(n) if n != args.len() => {
                    return err(
                        span,
                        format!("predicate `{name}` expects {n} arguments, got {}", args.len()),
                    )
                }
                _ => {}
            }
            // term arguments see only binders from earlier conjuncts
            for p in args.iter().filter(|p| matches!(p, Pat::Term(_))) {
                pat(p, scope)?;
            }
            for p in args.iter().filter(|p| matches!(p, Pat::Bind(_))) {
                pat(p, scope)?;
            }
            Ok(())
        }
        Assertion::SepConj(l, r) => {
            walk_assertion(l, scope, binders, arity, span)?;
            walk_assertion(r, scope, binders, arity, span)
        }
        Assertion::Cond { lhs, rhs, then, els } => {
            expr(lhs, scope)?;
            expr(rhs, scope)?;
            // binders introduced inside a branch stay local to it
            walk_assertion(then, &mut scope.clone(), binders, arity, span)?;
            walk_assertion(els, &mut scope.clone(), binders, arity, span)
        }
    }
}

fn collect_addr_of(body: &[ast::Stmt], out: &mut BTreeSet<String>) {
    let expr = |e: &Expr, out: &mut BTreeSet<String>| {
        if let Expr::AddrOf(x) = e {
            out.insert(x.clone());
        }
    };
    for s in body {
        match &s.kind {
            StmtKind::Let { init, .. } => match init {
                Some(Rhs::Expr(e)) | Some(Rhs::Deref(e)) => expr(e, out),
                Some(Rhs::Call(_, args)) => args.iter().for_each(|e| expr(e, out)),
                None => {}
            },
            StmtKind::Write(a, b) => {
                expr(a, out);
                expr(b, out);
            }
            StmtKind::IfNull { scrutinee, then, els } => {
                expr(scrutinee, out);
                collect_addr_of(then, out);
                collect_addr_of(els, out);
            }
            StmtKind::Call(_, args) | StmtKind::Open(_, args) | StmtKind::Close(_, args) => {
                args.iter().for_each(|e| expr(e, out))
            }
            StmtKind::Return(e) => expr(e, out),
            StmtKind::Abort => {}
        }
    }
}

struct BodyCx<'a> {
    params: &'a [String],
    addressed: &'a BTreeSet<String>,
    locals: BTreeMap<String, LocalKind>,
    arity: &'a dyn Fn(&str) -> Option<usize>,
    fn_arity: &'a dyn Fn(&str) -> Option<usize>,
}

impl BodyCx<'_> {
    fn expr(&self, e: &Expr, declared: &BTreeSet<String>, span: Span) -> Result<(), ResolveError> {
        match e {
            Expr::Null => Ok(()),
            Expr::Var(x) => {
                if !declared.contains(x) {
                    return err(span, format!("unknown identifier `{x}`"));
                }
                if self.addressed.contains(x) {
                    return err(
                        span,
                        format!("address-taken local `{x}` can only be used through `&{x}`"),
                    );
                }
                Ok(())
            }
            Expr::AddrOf(x) => {
                if self.params.contains(x) {
                    return err(span, format!("cannot take the address of parameter `{x}`"));
                }
                if !declared.contains(x) {
                    return err(span, format!("unknown identifier `{x}`"));
                }
                Ok(())
            }
        }
    }

    fn declare(&mut self, name: &str, kind: LocalKind, span: Span) -> Result<(), ResolveError> {
        if name == RESULT {
            return err(span, format!("`{RESULT}` is reserved"));
        }
        if self.params.iter().any(|p| p == name) || self.locals.insert(name.to_string(), kind).is_some() {
            return err(span, format!("local `{name}` is declared twice"));
        }
        Ok(())
    }

    fn pred_args(&self, pred: &str, args: &[Expr], declared: &BTreeSet<String>, span: Span) -> Result<(), ResolveError> {
        match (self.arity)(pred) {
            None => return err(span, format!("unknown predicate `{pred}`")),
            Some(n) if n != args.len() => {
                return err(span, format!("predicate `{pred}` expects {n} arguments, got {}", args.len()))
            }
            _ => {}
        }
        args.iter().try_for_each(|e| self.expr(e, declared, span))
    }

    fn call(&self, callee: &str, args: &[Expr], declared: &BTreeSet<String>, span: Span) -> Result<(), ResolveError> {
        match (self.fn_arity)(callee) {
            None => return err(span, format!("call to undefined function `{callee}`")),
            Some(n) if n != args.len() => {
                return err(span, format!("function `{callee}` expects {n} arguments, got {}", args.len()))
            }
            _ => {}
        }
        args.iter().try_for_each(|e| self.expr(e, declared, span))
    }

    /// Resolves a block. Returns the statements and whether every path through
    /// the block ends in `return` or `abort`.
    fn block(&mut self, stmts: &[ast::Stmt], declared: &mut BTreeSet<String>) -> Result<(Vec<Stmt>, bool), ResolveError> {
        let mut out = Vec::with_capacity(stmts.len());
        let mut terminated = false;
        for s in stmts {
            let span = s.span;
            if terminated {
                return err(span, "unreachable statement after `return` or `abort`");
            }
            let kind = match &s.kind {
                StmtKind::Let { name, init } => {
                    let addressed = self.addressed.contains(name);
                    let op = match (init, addressed) {
                        (Some(Rhs::Expr(e)), false) => {
                            self.expr(e, declared, span)?;
                            Op::LetValue(name.clone(), e.clone())
                        }
                        (Some(Rhs::Expr(e)), true) => {
                            self.expr(e, declared, span)?;
                            Op::LetAddressed(name.clone(), Some(e.clone()))
                        }
                        (None, true) => Op::LetAddressed(name.clone(), None),
                        (None, false) => {
                            return err(span, format!("local `{name}` must be initialized"));
                        }
                        (Some(Rhs::Deref(e)), false) => {
                            self.expr(e, declared, span)?;
                            Op::LetDeref(name.clone(), e.clone())
                        }
                        (Some(Rhs::Call(f, args)), false) => {
                            self.call(f, args, declared, span)?;
                            Op::Call {
                                bind: Some(name.clone()),
                                callee: f.clone(),
                                args: args.clone(),
                            }
                        }
                        (Some(_), true) => {
                            return err(
                                span,
                                format!("address-taken local `{name}` must be initialized from a plain value"),
                            );
                        }
                    };
                    let kind = if addressed { LocalKind::Addressed } else { LocalKind::ByValue };
                    self.declare(name, kind, span)?;
                    declared.insert(name.clone());
                    op
                }
                StmtKind::Write(p, v) => {
                    self.expr(p, declared, span)?;
                    self.expr(v, declared, span)?;
                    Op::WriteDeref(p.clone(), v.clone())
                }
                StmtKind::IfNull { scrutinee, then, els } => {
                    self.expr(scrutinee, declared, span)?;
                    let mut d_then = declared.clone();
                    let mut d_else = declared.clone();
                    let (then, t_term) = self.block(then, &mut d_then)?;
                    let (els, e_term) = self.block(els, &mut d_else)?;
                    *declared = match (t_term, e_term) {
                        (true, true) => {
                            terminated = true;
                            d_then
                        }
                        (true, false) => d_else,
                        (false, true) => d_then,
                        (false, false) => d_then.intersection(&d_else).cloned().collect(),
                    };
                    Op::IfNull {
                        scrutinee: scrutinee.clone(),
                        then,
                        els,
                    }
                }
                StmtKind::Call(f, args) => {
                    self.call(f, args, declared, span)?;
                    Op::Call {
                        bind: None,
                        callee: f.clone(),
                        args: args.clone(),
                    }
                }
                StmtKind::Return(e) => {
                    self.expr(e, declared, span)?;
                    terminated = true;
                    Op::Return(e.clone())
                }
                StmtKind::Abort => {
                    terminated = true;
                    Op::Abort
                }
                StmtKind::Open(p, args) => {
                    self.pred_args(p, args, declared, span)?;
                    Op::GhostOpen(p.clone(), args.clone())
                }
                StmtKind::Close(p, args) => {
                    self.pred_args(p, args, declared, span)?;
                    Op::GhostClose(p.clone(), args.clone())
                }
            };
            out.push(Stmt { kind, span });
        }
        Ok((out, terminated))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn resolve(src: &str) -> Result<ResolvedProgram, ResolveError> {
        resolve_program(parse_program(src).unwrap())
    }

    const HDR: &str = "//@ req true;\n//@ ens true;\n";

    #[test]
    fn no_addr_of_means_all_by_value() {
        let rp = resolve(&format!("fn f(x) {HDR}{{ let y = x; let z = *y; return z; }}")).unwrap();
        assert!(rp.functions[0].locals.values().all(|k| *k == LocalKind::ByValue));
    }

    #[test]
    fn undefined_callee() {
        let e = resolve(&format!("fn main() {HDR}{{ foo(); abort(); }}")).unwrap_err();
        assert!(e.message.contains("undefined function `foo`"), "{e}");
    }

    #[test]
    fn arity_mismatch() {
        let src = format!("//@ pred p(a) = true;\nfn f() {HDR}{{ //@ close p();\n return 0; }}");
        assert!(resolve(&src).unwrap_err().message.contains("expects 1"));
        let src = format!("fn g(a) {HDR}{{ return a; }}\nfn f() {HDR}{{ g(); return 0; }}");
        assert!(resolve(&src).unwrap_err().message.contains("expects 1"));
    }

    #[test]
    fn duplicate_binder() {
        let src = format!("//@ pred p(a) = *a |-> ?v &*& *a |-> ?v;\nfn f() {HDR}{{ return 0; }}");
        assert!(resolve(&src).unwrap_err().message.contains("duplicate binder"));
    }

    #[test]
    fn addressed_read_by_name() {
        let src = format!("fn f() {HDR}{{ let mut x = 0; let p = &raw mut x; let y = x; return y; }}");
        assert!(resolve(&src).unwrap_err().message.contains("address-taken"));
    }

    #[test]
    fn free_variable_in_post() {
        let src = "fn f(a) //@ req true;\n//@ ens *b |-> 0;\n{ return 0; }";
        assert!(resolve(src).is_err());
        let src = "fn f(a) //@ req true;\n//@ ens *a |-> result;\n{ return 0; }";
        assert!(resolve(src).is_ok());
    }

    #[test]
    fn statement_after_return() {
        let src = format!("fn f() {HDR}{{ return 0; abort(); }}");
        assert!(resolve(&src).unwrap_err().message.contains("unreachable"));
    }

    #[test]
    fn branch_local_not_visible_after_join() {
        let src = format!("fn f(p) {HDR}{{ if p.is_null() {{ let q = p; }} else {{ }} return q; }}");
        assert!(resolve(&src).is_err());
        let src = format!("fn f(p) {HDR}{{ if p.is_null() {{ return p; }} let q = p; return q; }}");
        assert!(resolve(&src).is_ok());
    }
}
