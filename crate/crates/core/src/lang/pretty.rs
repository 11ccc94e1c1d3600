//! Pretty-printing back to surface syntax, and the canonical encoding used
//! for program digests.

use std::fmt::{self, Write};

use super::ast::*;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(x) => f.write_str(x),
            Expr::Null => f.write_str("0"),
            Expr::AddrOf(x) => write!(f, "&raw mut {x}"),
        }
    }
}

impl fmt::Display for Pat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pat::Term(e) => write!(f, "{e}"),
            Pat::Bind(x) => write!(f, "?{x}"),
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::True => f.write_str("true"),
            Assertion::PointsTo(e, p) => write!(f, "*{e} |-> {p}"),
            Assertion::PredApp(name, args) => {
                write!(f, "{name}(")?;
                comma_list(f, args)?;
                f.write_str(")")
            }
            Assertion::SepConj(l, r) => {
                if matches!(**l, Assertion::SepConj(..)) {
                    write!(f, "({l}) &*& {r}")
                } else {
                    write!(f, "{l} &*& {r}")
                }
            }
            Assertion::Cond { lhs, rhs, then, els } => {
                write!(f, "if {lhs} == {rhs} {{ {then} }} else {{ {els} }}")
            }
        }
    }
}

fn comma_list<T: fmt::Display>(f: &mut impl Write, items: &[T]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for pd in &p.predicates {
        let _ = write!(out, "//@ pred {}(", pd.name);
        let _ = comma_list(&mut out, &pd.params);
        let _ = writeln!(out, ") = {};", pd.body);
    }
    for f in &p.functions {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = write!(out, "fn {}(", f.name);
        let _ = comma_list(&mut out, &f.params);
        let _ = writeln!(out, ")\n//@ req {};\n//@ ens {};", f.pre, f.post);
        out.push_str("{\n");
        block(&mut out, &f.body, 1);
        out.push_str("}\n");
    }
    out
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    let pad = "    ".repeat(depth);
    for s in stmts {
        out.push_str(&pad);
        let _ = match &s.kind {
            StmtKind::Let { name, init: None } => writeln!(out, "let mut {name};"),
            StmtKind::Let { name, init: Some(Rhs::Expr(e)) } => writeln!(out, "let {name} = {e};"),
            StmtKind::Let { name, init: Some(Rhs::Deref(e)) } => writeln!(out, "let {name} = *{e};"),
            StmtKind::Let { name, init: Some(Rhs::Call(g, args)) } => {
                let _ = write!(out, "let {name} = {g}(");
                let _ = comma_list(out, args);
                writeln!(out, ");")
            }
            StmtKind::Write(p, v) => writeln!(out, "*{p} = {v};"),
            StmtKind::IfNull { scrutinee, then, els } => {
                let _ = writeln!(out, "if {scrutinee}.is_null() {{");
                block(out, then, depth + 1);
                let _ = writeln!(out, "{pad}}} else {{");
                block(out, els, depth + 1);
                writeln!(out, "{pad}}}")
            }
            StmtKind::Call(g, args) => {
                let _ = write!(out, "{g}(");
                let _ = comma_list(out, args);
                writeln!(out, ");")
            }
            StmtKind::Return(e) => writeln!(out, "return {e};"),
            StmtKind::Abort => writeln!(out, "std::process::abort();"),
            StmtKind::Open(p, args) | StmtKind::Close(p, args) => {
                let kw = if matches!(s.kind, StmtKind::Open(..)) { "open" } else { "close" };
                let _ = write!(out, "//@ {kw} {p}(");
                let _ = comma_list(out, args);
                writeln!(out, ");")
            }
        };
    }
}

/// Delimiter-explicit, whitespace-free serialization. Spans are omitted, so
/// layout changes leave the encoding (and any digest of it) unchanged.
pub fn canonical_encoding(p: &Program) -> String {
    let mut out = String::new();
    out.push_str("program(preds[");
    for (i, pd) in p.predicates.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "pred({},[{}],", pd.name, pd.params.join(","));
        enc_assertion(&mut out, &pd.body);
        out.push(')');
    }
    out.push_str("],fns[");
    for (i, f) in p.functions.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "fn({},[{}],", f.name, f.params.join(","));
        enc_assertion(&mut out, &f.pre);
        out.push(',');
        enc_assertion(&mut out, &f.post);
        out.push(',');
        enc_block(&mut out, &f.body);
        out.push(')');
    }
    out.push_str("])");
    out
}

fn enc_expr(out: &mut String, e: &Expr) {
    let _ = match e {
        Expr::Var(x) => write!(out, "var({x})"),
        Expr::Null => write!(out, "null"),
        Expr::AddrOf(x) => write!(out, "addr({x})"),
    };
}

fn enc_exprs(out: &mut String, es: &[Expr]) {
    out.push('[');
    for (i, e) in es.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        enc_expr(out, e);
    }
    out.push(']');
}

fn enc_pat(out: &mut String, p: &Pat) {
    match p {
        Pat::Term(e) => {
            out.push_str("term(");
            enc_expr(out, e);
            out.push(')');
        }
        Pat::Bind(x) => {
            let _ = write!(out, "bind({x})");
        }
    }
}

fn enc_assertion(out: &mut String, a: &Assertion) {
    match a {
        Assertion::True => out.push_str("true"),
        Assertion::PointsTo(e, p) => {
            out.push_str("pt(");
            enc_expr(out, e);
            out.push(',');
            enc_pat(out, p);
            out.push(')');
        }
        Assertion::PredApp(name, args) => {
            let _ = write!(out, "app({name},[");
            for (i, p) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                enc_pat(out, p);
            }
            out.push_str("])");
        }
        Assertion::SepConj(l, r) => {
            out.push_str("sep(");
            enc_assertion(out, l);
            out.push(',');
            enc_assertion(out, r);
            out.push(')');
        }
        Assertion::Cond { lhs, rhs, then, els } => {
            out.push_str("cond(");
            enc_expr(out, lhs);
            out.push(',');
            enc_expr(out, rhs);
            out.push(',');
            enc_assertion(out, then);
            out.push(',');
            enc_assertion(out, els);
            out.push(')');
        }
    }
}

fn enc_block(out: &mut String, stmts: &[Stmt]) {
    out.push('[');
    for (i, s) in stmts.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        match &s.kind {
            StmtKind::Let { name, init } => {
                let _ = write!(out, "let({name},");
                match init {
                    None => out.push_str("none"),
                    Some(Rhs::Expr(e)) => enc_expr(out, e),
                    Some(Rhs::Deref(e)) => {
                        out.push_str("deref(");
                        enc_expr(out, e);
                        out.push(')');
                    }
                    Some(Rhs::Call(g, args)) => {
                        let _ = write!(out, "call({g},");
                        enc_exprs(out, args);
                        out.push(')');
                    }
                }
                out.push(')');
            }
            StmtKind::Write(p, v) => {
                out.push_str("write(");
                enc_expr(out, p);
                out.push(',');
                enc_expr(out, v);
                out.push(')');
            }
            StmtKind::IfNull { scrutinee, then, els } => {
                out.push_str("ifnull(");
                enc_expr(out, scrutinee);
                out.push(',');
                enc_block(out, then);
                out.push(',');
                enc_block(out, els);
                out.push(')');
            }
            StmtKind::Call(g, args) => {
                let _ = write!(out, "call({g},");
                enc_exprs(out, args);
                out.push(')');
            }
            StmtKind::Return(e) => {
                out.push_str("return(");
                enc_expr(out, e);
                out.push(')');
            }
            StmtKind::Abort => out.push_str("abort"),
            StmtKind::Open(p, args) => {
                let _ = write!(out, "open({p},");
                enc_exprs(out, args);
                out.push(')');
            }
            StmtKind::Close(p, args) => {
                let _ = write!(out, "close({p},");
                enc_exprs(out, args);
                out.push(')');
            }
        }
    }
    out.push(']');
}
