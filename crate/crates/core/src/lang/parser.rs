use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Name of the hidden local bound by a tail-position call, `f(x)` at the end
/// of a block being sugar for `let __ret = f(x); return __ret;`.
pub const TAIL_LOCAL: &str = "__ret";

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut prog = Program::default();
    while !p.at_end() {
        if p.peek_ghost_kw("pred") {
            prog.predicates.push(p.predicate()?);
        } else {
            prog.functions.push(p.function()?);
        }
    }
    Ok(prog)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

enum CallOrExpr {
    Call(String, Vec<Expr>),
    Abort,
    Expr(Expr),
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + off).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        match self.tokens.get(self.pos) {
            Some(t) => t.span,
            None => self.tokens.last().map(|t| t.span).unwrap_or_default(),
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".to_string(),
        }
    }

    fn err<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError {
            span: self.span(),
            message: format!("expected {expected}, found {}", self.found()),
        })
    }

    fn is(&self, t: &Tok) -> bool {
        self.peek() == Some(t)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.is(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(&t.describe())
        }
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn peek_ghost_kw(&self, kw: &str) -> bool {
        self.peek_kw(kw) && self.tokens[self.pos].ghost
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(kw)
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("identifier"),
        }
    }

    // ---- items ----

    fn predicate(&mut self) -> Result<PredicateDef, ParseError> {
        let span = self.span();
        self.expect_kw("pred")?;
        let name = self.ident()?;
        let params = self.params()?;
        self.expect(Tok::Assign)?;
        let body = self.assertion()?;
        self.expect(Tok::Semi)?;
        Ok(PredicateDef { name, params, body, span })
    }

    fn function(&mut self) -> Result<FunctionDef, ParseError> {
        let span = self.span();
        self.eat_kw("pub");
        self.eat_kw("unsafe");
        if !self.peek_kw("fn") {
            return self.err("`fn` or `pred`");
        }
        self.pos += 1;
        let name = self.ident()?;
        let params = self.params()?;
        if self.eat(&Tok::Arrow) {
            self.ty()?;
        }
        if !self.peek_ghost_kw("req") {
            return self.err("req");
        }
        self.pos += 1;
        let pre = self.assertion()?;
        self.expect(Tok::Semi)?;
        if !self.peek_ghost_kw("ens") {
            return self.err("ens");
        }
        self.pos += 1;
        let post = self.assertion()?;
        self.expect(Tok::Semi)?;
        let body = self.block()?;
        Ok(FunctionDef { name, params, pre, post, body, span })
    }

    fn params(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(out);
        }
        loop {
            self.eat_kw("mut");
            out.push(self.ident()?);
            if self.eat(&Tok::Colon) {
                self.ty()?;
            }
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            self.expect(Tok::Comma)?;
        }
    }

    /// Types are parsed and discarded.
    fn ty(&mut self) -> Result<(), ParseError> {
        if self.eat(&Tok::Star) {
            if !(self.eat_kw("mut") || self.eat_kw("const")) {
                return self.err("`mut` or `const`");
            }
            return self.ty();
        }
        if self.eat(&Tok::Amp) {
            self.eat_kw("mut");
            return self.ty();
        }
        if self.eat(&Tok::LParen) {
            return self.expect(Tok::RParen);
        }
        self.ident()?;
        while self.eat(&Tok::ColonColon) {
            self.ident()?;
        }
        Ok(())
    }

    // ---- statements ----

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.at_end() {
                return self.err("`}`");
            }
            self.stmt(&mut out)?;
        }
        Ok(out)
    }

    fn stmt(&mut self, out: &mut Vec<Stmt>) -> Result<(), ParseError> {
        let span = self.span();
        let push = |out: &mut Vec<Stmt>, kind| out.push(Stmt { kind, span });

        if self.peek_ghost_kw("open") || self.peek_ghost_kw("close") {
            let open = self.peek_kw("open");
            self.pos += 1;
            let pred = self.ident()?;
            let args = self.args()?;
            self.expect(Tok::Semi)?;
            push(out, if open { StmtKind::Open(pred, args) } else { StmtKind::Close(pred, args) });
            return Ok(());
        }
        if self.peek_kw("unsafe") && self.peek_at(1) == Some(&Tok::LBrace) {
            self.pos += 1;
            out.extend(self.block()?);
            return Ok(());
        }
        if self.eat_kw("let") {
            self.eat_kw("mut");
            let name = self.ident()?;
            if self.eat(&Tok::Colon) {
                self.ty()?;
            }
            let init = if self.eat(&Tok::Assign) {
                Some(if self.eat(&Tok::Star) {
                    Rhs::Deref(self.unary()?)
                } else {
                    match self.call_or_expr()? {
                        CallOrExpr::Call(f, args) => Rhs::Call(f, args),
                        CallOrExpr::Expr(e) => Rhs::Expr(e),
                        CallOrExpr::Abort => {
                            return Err(ParseError {
                                span,
                                message: "`abort()` cannot initialize a local".into(),
                            })
                        }
                    }
                })
            } else {
                None
            };
            self.expect(Tok::Semi)?;
            push(out, StmtKind::Let { name, init });
            return Ok(());
        }
        if self.eat_kw("if") {
            push(out, self.if_rest()?);
            return Ok(());
        }
        if self.eat_kw("return") {
            let e = if self.is(&Tok::Semi) { Expr::Null } else { self.expr()? };
            self.expect(Tok::Semi)?;
            push(out, StmtKind::Return(e));
            return Ok(());
        }
        if self.eat(&Tok::Star) {
            let target = self.unary()?;
            self.expect(Tok::Assign)?;
            let value = self.expr()?;
            self.expect(Tok::Semi)?;
            push(out, StmtKind::Write(target, value));
            return Ok(());
        }
        if self.tokens.get(self.pos).is_some_and(|t| t.ghost) {
            return self.err("statement");
        }

        let item = self.call_or_expr()?;
        let tail = !self.eat(&Tok::Semi);
        if tail && !self.is(&Tok::RBrace) {
            return self.err("`;`");
        }
        match (item, tail) {
            (CallOrExpr::Abort, _) => push(out, StmtKind::Abort),
            (CallOrExpr::Call(f, args), false) => push(out, StmtKind::Call(f, args)),
            (CallOrExpr::Call(f, args), true) => {
                push(
                    out,
                    StmtKind::Let {
                        name: TAIL_LOCAL.to_string(),
                        init: Some(Rhs::Call(f, args)),
                    },
                );
                push(out, StmtKind::Return(Expr::Var(TAIL_LOCAL.to_string())));
            }
            (CallOrExpr::Expr(e), true) => push(out, StmtKind::Return(e)),
            (CallOrExpr::Expr(_), false) => {
                return Err(ParseError {
                    span,
                    message: "expression statement has no effect".into(),
                })
            }
        }
        Ok(())
    }

    /// After `if`: condition, then-block and optional else.
    fn if_rest(&mut self) -> Result<StmtKind, ParseError> {
        let negated = self.eat(&Tok::Bang);
        let lhs = self.expr()?;
        let (scrutinee, mut null_is_then) = if self.eat(&Tok::Dot) {
            self.expect_kw("is_null")?;
            self.expect(Tok::LParen)?;
            self.expect(Tok::RParen)?;
            (lhs, true)
        } else if self.is(&Tok::EqEq) || self.is(&Tok::NotEq) {
            let eq = self.eat(&Tok::EqEq);
            if !eq {
                self.pos += 1;
            }
            let rhs = self.expr()?;
            let scrutinee = match (lhs, rhs) {
                (e, Expr::Null) | (Expr::Null, e) => e,
                _ => {
                    return Err(ParseError {
                        span: self.span(),
                        message: "conditions must compare against null".into(),
                    })
                }
            };
            (scrutinee, eq)
        } else {
            return self.err("`.is_null()`, `==` or `!=`");
        };
        if negated {
            null_is_then = !null_is_then;
        }
        let then = self.block()?;
        let els = if self.eat_kw("else") {
            if self.peek_kw("if") {
                let span = self.span();
                self.pos += 1;
                vec![Stmt { kind: self.if_rest()?, span }]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        let (then, els) = if null_is_then { (then, els) } else { (els, then) };
        Ok(StmtKind::IfNull { scrutinee, then, els })
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            self.expect(Tok::Comma)?;
        }
    }

    // ---- expressions ----

    fn call_or_expr(&mut self) -> Result<CallOrExpr, ParseError> {
        if matches!(self.peek(), Some(Tok::Ident(_))) {
            let save = self.pos;
            let mut path = vec![self.ident()?];
            while self.eat(&Tok::ColonColon) {
                path.push(self.ident()?);
            }
            if self.is(&Tok::LParen) {
                let last = path.last().map(String::as_str).unwrap_or_default();
                if path.len() > 1 && matches!(last, "null_mut" | "null") {
                    self.expect(Tok::LParen)?;
                    self.expect(Tok::RParen)?;
                    return Ok(CallOrExpr::Expr(self.casts(Expr::Null)?));
                }
                if path.len() > 1 && last == "abort" {
                    self.expect(Tok::LParen)?;
                    self.expect(Tok::RParen)?;
                    return Ok(CallOrExpr::Abort);
                }
                if path.len() > 1 {
                    return Err(ParseError {
                        span: self.tokens[save].span,
                        message: format!("unsupported library call `{}`", path.join("::")),
                    });
                }
                let args = self.args()?;
                return Ok(CallOrExpr::Call(path.remove(0), args));
            }
            self.pos = save;
        }
        Ok(CallOrExpr::Expr(self.expr()?))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.call_or_expr_primary()? {
            Some(e) => self.casts(e),
            None => Err(ParseError {
                span,
                message: "calls are only allowed as statements or `let` initializers".into(),
            }),
        }
    }

    /// Primary with trailing casts; used after `*`.
    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.expr()
    }

    fn call_or_expr_primary(&mut self) -> Result<Option<Expr>, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Some(e))
            }
            Some(Tok::Amp) => {
                self.pos += 1;
                if self.eat_kw("raw") {
                    if !(self.eat_kw("mut") || self.eat_kw("const")) {
                        return self.err("`mut` or `const`");
                    }
                } else {
                    self.eat_kw("mut");
                }
                Ok(Some(Expr::AddrOf(self.ident()?)))
            }
            Some(Tok::Int(0)) => {
                self.pos += 1;
                Ok(Some(Expr::Null))
            }
            Some(Tok::Int(n)) => Err(ParseError {
                span: self.span(),
                message: format!("only the literal 0 is supported, found `{n}`"),
            }),
            Some(Tok::Ident(_)) => {
                let mut path = vec![self.ident()?];
                while self.eat(&Tok::ColonColon) {
                    path.push(self.ident()?);
                }
                if self.is(&Tok::LParen) {
                    let last = path.last().map(String::as_str).unwrap_or_default();
                    if path.len() > 1 && matches!(last, "null_mut" | "null") {
                        self.pos += 1;
                        self.expect(Tok::RParen)?;
                        return Ok(Some(Expr::Null));
                    }
                    return Ok(None);
                }
                if path.len() > 1 {
                    return Err(ParseError {
                        span: self.span(),
                        message: format!("unsupported path `{}`", path.join("::")),
                    });
                }
                Ok(Some(Expr::Var(path.remove(0))))
            }
            _ => self.err("expression"),
        }
    }

    fn casts(&mut self, e: Expr) -> Result<Expr, ParseError> {
        while self.eat_kw("as") {
            self.ty()?;
        }
        Ok(e)
    }

    // ---- assertions ----

    fn assertion(&mut self) -> Result<Assertion, ParseError> {
        let first = self.conjunct()?;
        if self.eat(&Tok::SepConj) {
            let rest = self.assertion()?;
            Ok(Assertion::sep(first, rest))
        } else {
            Ok(first)
        }
    }

    fn conjunct(&mut self) -> Result<Assertion, ParseError> {
        if self.eat_kw("true") {
            return Ok(Assertion::True);
        }
        if self.eat_kw("if") {
            let lhs = self.expr()?;
            let eq = if self.eat(&Tok::EqEq) {
                true
            } else if self.eat(&Tok::NotEq) {
                false
            } else {
                return self.err("`==` or `!=`");
            };
            let rhs = self.expr()?;
            self.expect(Tok::LBrace)?;
            let a = self.assertion()?;
            self.expect(Tok::RBrace)?;
            self.expect_kw("else")?;
            self.expect(Tok::LBrace)?;
            let b = self.assertion()?;
            self.expect(Tok::RBrace)?;
            let (then, els) = if eq { (a, b) } else { (b, a) };
            return Ok(Assertion::Cond {
                lhs,
                rhs,
                then: Box::new(then),
                els: Box::new(els),
            });
        }
        if self.eat(&Tok::Star) {
            let target = self.unary()?;
            self.expect(Tok::PointsTo)?;
            let pat = self.pat()?;
            return Ok(Assertion::PointsTo(target, pat));
        }
        if self.is(&Tok::LParen) {
            self.pos += 1;
            let a = self.assertion()?;
            self.expect(Tok::RParen)?;
            return Ok(a);
        }
        if matches!(self.peek(), Some(Tok::Ident(_))) && self.peek_at(1) == Some(&Tok::LParen) {
            let name = self.ident()?;
            self.expect(Tok::LParen)?;
            let mut args = Vec::new();
            if !self.eat(&Tok::RParen) {
                loop {
                    args.push(self.pat()?);
                    if self.eat(&Tok::RParen) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
            }
            return Ok(Assertion::PredApp(name, args));
        }
        self.err("assertion")
    }

    fn pat(&mut self) -> Result<Pat, ParseError> {
        if self.eat(&Tok::Question) {
            Ok(Pat::Bind(self.ident()?))
        } else {
            Ok(Pat::Term(self.expr()?))
        }
    }
}
