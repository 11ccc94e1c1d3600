//! Certificate checker. Replays a function under the hints of its tree and
//! never searches: every chunk it touches is named by a hint, and every case
//! split must be matched by a `Branch` node.

// Rejections carry the offending chunk and goal for the report.
#![allow(clippy::result_large_err)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::certificate::{program_digest, Certificate, SymexStep, SymexTree, FORMAT_VERSION};
use crate::heap::{match_chunk, Chunk, ChunkGoal, Env, GoalPat, Mismatch, SymbolicHeap};
use crate::lang::{Assertion, Expr, Op, Pat, ResolvedFunction, ResolvedProgram, Span, Stmt, RESULT};
use crate::logic::{decide_eq, is_infeasible, Decision, Fact, PathCondition, SymbolCounter, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("expected a hint, found {0}")]
    ExpectedStep(&'static str),
    #[error("expected a branch node, found {0}")]
    ExpectedBranch(&'static str),
    #[error("expected end of path, found {0}")]
    ExpectedSuccess(&'static str),
    #[error("`Done` on a path that is not known to be infeasible")]
    FeasibleDone,
    #[error("hint index {index} out of range for heap of length {len}")]
    OutOfRange { index: usize, len: usize },
    #[error("chunk {index} ({chunk}) does not match {goal}: {why}")]
    Mismatch {
        index: usize,
        chunk: Chunk,
        goal: ChunkGoal,
        why: Mismatch,
    },
    #[error("auto-open at {index} is not allowed for goal {goal}")]
    BadAutoOpen { index: usize, goal: ChunkGoal },
    #[error("cannot decide condition {0} == {1}")]
    Undecidable(Term, Term),
    #[error("heap not empty at return: {0}")]
    Leak(SymbolicHeap),
    #[error("path ends without `return` or `abort`")]
    MissingReturn,
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown function or predicate `{0}`")]
    Unknown(String),
}

/// A rejected path. `path` lists the branch choices from the root, `T` for
/// the first child and `E` for the second.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct Reject {
    pub function: String,
    pub path: String,
    pub span: Span,
    pub reason: RejectReason,
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: in `{}`", self.span, self.function)?;
        if !self.path.is_empty() {
            write!(f, " on path {}", self.path)?;
        }
        write!(f, ": {}", self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("unsupported certificate version {0}")]
    Version(u32),
    #[error("certificate digest does not match the program")]
    Digest,
    #[error("no tree for function `{0}`")]
    MissingTree(String),
    #[error("tree for unknown function `{0}`")]
    ExtraTree(String),
    #[error("duplicate tree for function `{0}`")]
    DuplicateTree(String),
    #[error("{0}")]
    Reject(#[from] Reject),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckStats {
    /// Calls to `match_chunk`.
    pub match_attempts: usize,
    pub consume_steps: usize,
    pub auto_open_steps: usize,
    pub branches: usize,
    pub paths: usize,
}

impl std::ops::AddAssign for CheckStats {
    fn add_assign(&mut self, o: CheckStats) {
        self.match_attempts += o.match_attempts;
        self.consume_steps += o.consume_steps;
        self.auto_open_steps += o.auto_open_steps;
        self.branches += o.branches;
        self.paths += o.paths;
    }
}

pub fn check_certificate(rp: &ResolvedProgram, cert: &Certificate) -> Result<CheckStats, CheckError> {
    if cert.version != FORMAT_VERSION {
        return Err(CheckError::Version(cert.version));
    }
    if cert.digest != program_digest(&rp.source) {
        return Err(CheckError::Digest);
    }
    let mut seen = BTreeSet::new();
    for (name, _) in &cert.trees {
        if rp.function(name).is_none() {
            return Err(CheckError::ExtraTree(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            return Err(CheckError::DuplicateTree(name.clone()));
        }
    }
    let mut total = CheckStats::default();
    for f in &rp.functions {
        let tree = cert.tree(&f.name).ok_or_else(|| CheckError::MissingTree(f.name.clone()))?;
        total += check_function_with(rp, f, tree, &[])?;
    }
    Ok(total)
}

pub fn check_function(rp: &ResolvedProgram, fname: &str, tree: &SymexTree) -> Result<CheckStats, Reject> {
    let f = rp.function(fname).ok_or_else(|| Reject {
        function: fname.to_string(),
        path: String::new(),
        span: Span::default(),
        reason: RejectReason::Unknown(fname.to_string()),
    })?;
    check_function_with(rp, f, tree, &[])
}

/// Replays `f` starting from `frame` plus its precondition.
pub fn check_function_with(
    rp: &ResolvedProgram,
    f: &ResolvedFunction,
    tree: &SymexTree,
    frame: &[Chunk],
) -> Result<CheckStats, Reject> {
    let mut r = Replay {
        rp,
        f,
        frame_len: frame.len(),
        stats: CheckStats::default(),
    };
    let mut m = Machine {
        heap: SymbolicHeap::from_chunks(frame.to_vec()),
        locals: BTreeMap::new(),
        pc: PathCondition::new(),
        ctr: SymbolCounter::new(),
    };
    let mut params = Vec::new();
    for p in &f.params {
        let t = m.ctr.fresh(p);
        m.locals.insert(p.clone(), Slot::Val(t.clone()));
        params.push(t);
    }
    let env: Env = f.params.iter().cloned().zip(params.iter().cloned()).collect();
    let cur = Cursor {
        node: tree,
        path: String::new(),
    };
    let body: Vec<&[Stmt]> = vec![&f.body];
    r.produce_then(cur, m, &f.pre, env, f.span, &mut |r, cur, m, _| r.block(cur, m, body.clone(), &params))?;
    Ok(r.stats)
}

#[derive(Debug, Clone)]
enum Slot {
    Val(Term),
    Cell(Term),
}

#[derive(Debug, Clone)]
struct Machine {
    heap: SymbolicHeap,
    locals: BTreeMap<String, Slot>,
    pc: PathCondition,
    ctr: SymbolCounter,
}

#[derive(Clone)]
struct Cursor<'t> {
    node: &'t SymexTree,
    path: String,
}

fn node_name(t: &SymexTree) -> &'static str {
    match t {
        SymexTree::Step(..) => "a hint",
        SymexTree::Done => "Done",
        SymexTree::Branch(..) => "a branch",
        SymexTree::Success => "Success",
    }
}

struct Replay<'p> {
    rp: &'p ResolvedProgram,
    f: &'p ResolvedFunction,
    frame_len: usize,
    stats: CheckStats,
}

type Next<'a, 'p, 't> = dyn FnMut(&mut Replay<'p>, Cursor<'t>, Machine, Env) -> Result<(), Reject> + 'a;

impl<'p> Replay<'p> {
    fn reject(&self, cur: &Cursor, span: Span, reason: RejectReason) -> Reject {
        Reject {
            function: self.f.name.clone(),
            path: cur.path.clone(),
            span,
            reason,
        }
    }

    fn next_step<'t>(&self, cur: &mut Cursor<'t>, span: Span) -> Result<SymexStep, Reject> {
        match cur.node {
            SymexTree::Step(s, rest) => {
                cur.node = rest;
                Ok(*s)
            }
            other => Err(self.reject(cur, span, RejectReason::ExpectedStep(node_name(other)))),
        }
    }

    fn split<'t>(&mut self, cur: &Cursor<'t>, span: Span) -> Result<(Cursor<'t>, Cursor<'t>), Reject> {
        match cur.node {
            SymexTree::Branch(a, b) => {
                self.stats.branches += 1;
                Ok((
                    Cursor { node: a, path: format!("{}T", cur.path) },
                    Cursor { node: b, path: format!("{}E", cur.path) },
                ))
            }
            other => Err(self.reject(cur, span, RejectReason::ExpectedBranch(node_name(other)))),
        }
    }

    fn finish(&mut self, cur: &Cursor, span: Span) -> Result<(), Reject> {
        match cur.node {
            SymexTree::Success => {
                self.stats.paths += 1;
                Ok(())
            }
            other => Err(self.reject(cur, span, RejectReason::ExpectedSuccess(node_name(other)))),
        }
    }

    fn value(&self, cur: &Cursor, span: Span, m: &Machine, e: &Expr) -> Result<Term, Reject> {
        let got = match e {
            Expr::Null => Some(Term::Null),
            Expr::Var(x) => match m.locals.get(x) {
                Some(Slot::Val(t)) => Some(t.clone()),
                _ => None,
            },
            Expr::AddrOf(x) => match m.locals.get(x) {
                Some(Slot::Cell(a)) => Some(a.clone()),
                _ => None,
            },
        };
        got.ok_or_else(|| self.reject(cur, span, RejectReason::Unbound(e.to_string())))
    }

    fn spec_value(&self, cur: &Cursor, span: Span, env: &Env, e: &Expr) -> Result<Term, Reject> {
        match e {
            Expr::Null => Ok(Term::Null),
            Expr::Var(x) if env.contains_key(x) => Ok(env[x].clone()),
            _ => Err(self.reject(cur, span, RejectReason::Unbound(e.to_string()))),
        }
    }

    fn add_cell_or_pred(m: &mut Machine, c: Chunk) {
        if let Chunk::PointsTo(a, _) | Chunk::PointsToMaybe(a, _) = &c {
            if decide_eq(&m.pc, a, &Term::Null) != Decision::ProvablyDistinct {
                m.pc.push(Fact::Neq(a.clone(), Term::Null));
            }
        }
        m.heap.add_front(c);
    }

    /// Produces `a`, then calls `k` once per resulting path. Case splits on
    /// undecided conditions consume a `Branch` node; each path starts at a
    /// checkpoint where `Done` is accepted if the path is infeasible.
    fn produce_then<'t>(
        &mut self,
        cur: Cursor<'t>,
        m: Machine,
        a: &Assertion,
        env: Env,
        span: Span,
        k: &mut Next<'_, 'p, 't>,
    ) -> Result<(), Reject> {
        let mut conj = Vec::new();
        flatten(a, &mut conj);
        self.produce_list(cur, m, &conj, env, span, k)
    }

    fn produce_list<'t>(
        &mut self,
        cur: Cursor<'t>,
        mut m: Machine,
        todo: &[&Assertion],
        mut env: Env,
        span: Span,
        k: &mut Next<'_, 'p, 't>,
    ) -> Result<(), Reject> {
        let mut i = 0;
        while i < todo.len() {
            match todo[i] {
                Assertion::True => {}
                Assertion::SepConj(..) => unreachable!("flattened"),
                Assertion::PointsTo(e, p) => {
                    let a = self.spec_value(&cur, span, &env, e)?;
                    let v = self.bind_or_eval(&cur, span, &mut m, &mut env, p)?;
                    Self::add_cell_or_pred(&mut m, Chunk::PointsTo(a, v));
                }
                Assertion::PredApp(name, pats) => {
                    let mut args = Vec::new();
                    for p in pats {
                        args.push(self.bind_or_eval(&cur, span, &mut m, &mut env, p)?);
                    }
                    Self::add_cell_or_pred(&mut m, Chunk::Pred(name.clone(), args));
                }
                Assertion::Cond { lhs, rhs, then, els } => {
                    let l = self.spec_value(&cur, span, &env, lhs)?;
                    let r = self.spec_value(&cur, span, &env, rhs)?;
                    let rest = &todo[i + 1..];
                    let with_arm = |arm| with_rest(arm, rest);
                    match decide_eq(&m.pc, &l, &r) {
                        Decision::ProvablyEqual => {
                            let v = with_arm(then);
                            return self.produce_list(cur, m, &v, env, span, k);
                        }
                        Decision::ProvablyDistinct => {
                            let v = with_arm(els);
                            return self.produce_list(cur, m, &v, env, span, k);
                        }
                        Decision::Unknown => {
                            let (ct, ce) = self.split(&cur, span)?;
                            let mut mt = m.clone();
                            mt.pc.push(Fact::Eq(l.clone(), r.clone()));
                            let vt = with_arm(then);
                            self.produce_list(ct, mt, &vt, env.clone(), span, k)?;
                            m.pc.push(Fact::Neq(l, r));
                            let ve = with_arm(els);
                            return self.produce_list(ce, m, &ve, env, span, k);
                        }
                    }
                }
            }
            i += 1;
        }
        if let SymexTree::Done = cur.node {
            if is_infeasible(&m.pc) {
                self.stats.paths += 1;
                return Ok(());
            }
            return Err(self.reject(&cur, span, RejectReason::FeasibleDone));
        }
        k(self, cur, m, env)
    }

    fn bind_or_eval(&self, cur: &Cursor, span: Span, m: &mut Machine, env: &mut Env, p: &Pat) -> Result<Term, Reject> {
        match p {
            Pat::Bind(x) => {
                let t = m.ctr.fresh(x);
                env.insert(x.clone(), t.clone());
                Ok(t)
            }
            Pat::Term(e) => self.spec_value(cur, span, env, e),
        }
    }

    /// Consumes `a` following the hints at `cur`.
    fn consume(&mut self, cur: &mut Cursor, span: Span, m: &mut Machine, a: &Assertion, mut env: Env) -> Result<Env, Reject> {
        let mut todo = vec![a];
        while let Some(a) = todo.pop() {
            match a {
                Assertion::True => {}
                Assertion::SepConj(l, r) => {
                    todo.push(r);
                    todo.push(l);
                }
                Assertion::Cond { lhs, rhs, then, els } => {
                    let l = self.spec_value(cur, span, &env, lhs)?;
                    let r = self.spec_value(cur, span, &env, rhs)?;
                    match decide_eq(&m.pc, &l, &r) {
                        Decision::ProvablyEqual => todo.push(then),
                        Decision::ProvablyDistinct => todo.push(els),
                        Decision::Unknown => return Err(self.reject(cur, span, RejectReason::Undecidable(l, r))),
                    }
                }
                Assertion::PointsTo(e, p) => {
                    let goal = ChunkGoal::PointsTo(self.spec_value(cur, span, &env, e)?, self.goal_pat(cur, span, &env, p)?);
                    env = self.take(cur, span, m, &goal, env)?.0;
                }
                Assertion::PredApp(name, pats) => {
                    let gp = pats.iter().map(|p| self.goal_pat(cur, span, &env, p)).collect::<Result<_, _>>()?;
                    env = self.take(cur, span, m, &ChunkGoal::Pred(name.clone(), gp), env)?.0;
                }
            }
        }
        Ok(env)
    }

    fn goal_pat(&self, cur: &Cursor, span: Span, env: &Env, p: &Pat) -> Result<GoalPat, Reject> {
        Ok(match p {
            Pat::Bind(x) => GoalPat::Bind(x.clone()),
            Pat::Term(e) => GoalPat::Term(self.spec_value(cur, span, env, e)?),
        })
    }

    /// One leaf conjunct: auto-open hints, then exactly one consume hint.
    fn take(&mut self, cur: &mut Cursor, span: Span, m: &mut Machine, goal: &ChunkGoal, env: Env) -> Result<(Env, Chunk), Reject> {
        loop {
            match self.next_step(cur, span)? {
                SymexStep::ConsumeChunk(index) => {
                    let chunk = m.heap.remove_at(index).map_err(|e| {
                        self.reject(cur, span, RejectReason::OutOfRange { index: e.index, len: e.len })
                    })?;
                    self.stats.match_attempts += 1;
                    self.stats.consume_steps += 1;
                    return match match_chunk(&m.pc, &chunk, goal, &env) {
                        Ok(env) => Ok((env, chunk)),
                        Err(why) => Err(self.reject(cur, span, RejectReason::Mismatch { index, chunk, goal: goal.clone(), why })),
                    };
                }
                SymexStep::AutoOpenPointsTo(index) => {
                    let ChunkGoal::PointsToMaybe(addr, _) = goal else {
                        return Err(self.reject(cur, span, RejectReason::BadAutoOpen { index, goal: goal.clone() }));
                    };
                    let chunk = m.heap.remove_at(index).map_err(|e| {
                        self.reject(cur, span, RejectReason::OutOfRange { index: e.index, len: e.len })
                    })?;
                    self.stats.match_attempts += 1;
                    self.stats.auto_open_steps += 1;
                    let probe = ChunkGoal::PointsTo(addr.clone(), GoalPat::Any);
                    if let Err(why) = match_chunk(&m.pc, &chunk, &probe, &Env::new()) {
                        return Err(self.reject(cur, span, RejectReason::Mismatch { index, chunk, goal: probe, why }));
                    }
                    let Chunk::PointsTo(l, v) = chunk else { unreachable!("matched a points_to goal") };
                    m.heap.add_front(Chunk::PointsToMaybe(l, Term::some(v)));
                }
            }
        }
    }

    fn args(&self, cur: &Cursor, span: Span, m: &Machine, es: &[Expr]) -> Result<Vec<Term>, Reject> {
        es.iter().map(|e| self.value(cur, span, m, e)).collect()
    }

    fn block<'t>(&mut self, mut cur: Cursor<'t>, mut m: Machine, mut stack: Vec<&'p [Stmt]>, params: &[Term]) -> Result<(), Reject> {
        while let Some(top) = stack.pop() {
            let Some((s, rest)) = top.split_first() else { continue };
            stack.push(rest);
            let span = s.span;
            match &s.kind {
                Op::LetValue(x, e) => {
                    let t = self.value(&cur, span, &m, e)?;
                    m.locals.insert(x.clone(), Slot::Val(t));
                }
                Op::LetAddressed(x, init) => {
                    let v = init.as_ref().map(|e| self.value(&cur, span, &m, e)).transpose()?;
                    let a = m.ctr.fresh(x);
                    Self::add_cell_or_pred(&mut m, Chunk::PointsToMaybe(a.clone(), Term::NoneVal));
                    m.locals.insert(x.clone(), Slot::Cell(a.clone()));
                    if let Some(v) = v {
                        self.take(&mut cur, span, &mut m, &ChunkGoal::PointsToMaybe(a.clone(), GoalPat::Any), Env::new())?;
                        Self::add_cell_or_pred(&mut m, Chunk::PointsTo(a, v));
                    }
                }
                Op::WriteDeref(p, v) => {
                    let a = self.value(&cur, span, &m, p)?;
                    let v = self.value(&cur, span, &m, v)?;
                    self.take(&mut cur, span, &mut m, &ChunkGoal::PointsToMaybe(a.clone(), GoalPat::Any), Env::new())?;
                    Self::add_cell_or_pred(&mut m, Chunk::PointsTo(a, v));
                }
                Op::LetDeref(x, p) => {
                    let a = self.value(&cur, span, &m, p)?;
                    let (_, c) = self.take(&mut cur, span, &mut m, &ChunkGoal::PointsTo(a, GoalPat::Any), Env::new())?;
                    if let Chunk::PointsTo(_, v) = &c {
                        m.locals.insert(x.clone(), Slot::Val(v.clone()));
                    }
                    Self::add_cell_or_pred(&mut m, c);
                }
                Op::IfNull { scrutinee, then, els } => {
                    let t = self.value(&cur, span, &m, scrutinee)?;
                    match decide_eq(&m.pc, &t, &Term::Null) {
                        Decision::ProvablyEqual => stack.push(then),
                        Decision::ProvablyDistinct => stack.push(els),
                        Decision::Unknown => {
                            let (ct, ce) = self.split(&cur, span)?;
                            let mut mt = m.clone();
                            mt.pc.push(Fact::Eq(t.clone(), Term::Null));
                            let mut st = stack.clone();
                            st.push(then);
                            self.checkpoint(ct, mt, st, params, span)?;
                            m.pc.push(Fact::Neq(t, Term::Null));
                            stack.push(els);
                            return self.checkpoint(ce, m, stack, params, span);
                        }
                    }
                }
                Op::Call { bind, callee, args } => {
                    let g = self
                        .rp
                        .function(callee)
                        .ok_or_else(|| self.reject(&cur, span, RejectReason::Unknown(callee.clone())))?;
                    let args = self.args(&cur, span, &m, args)?;
                    let mut env: Env = g.params.iter().cloned().zip(args).collect();
                    self.consume(&mut cur, span, &mut m, &g.pre, env.clone())?;
                    let res = m.ctr.fresh(RESULT);
                    env.insert(RESULT.to_string(), res.clone());
                    let bind = bind.clone();
                    return self.produce_then(cur, m, &g.post, env, span, &mut |r, cur, mut m, _| {
                        if let Some(b) = &bind {
                            m.locals.insert(b.clone(), Slot::Val(res.clone()));
                        }
                        r.block(cur, m, stack.clone(), params)
                    });
                }
                Op::GhostOpen(p, args) => {
                    let pd = self
                        .rp
                        .predicate(p)
                        .ok_or_else(|| self.reject(&cur, span, RejectReason::Unknown(p.clone())))?;
                    let args = self.args(&cur, span, &m, args)?;
                    let goal = ChunkGoal::Pred(p.clone(), args.iter().cloned().map(GoalPat::Term).collect());
                    self.take(&mut cur, span, &mut m, &goal, Env::new())?;
                    let env: Env = pd.params.iter().cloned().zip(args).collect();
                    return self.produce_then(cur, m, &pd.body, env, span, &mut |r, cur, m, _| {
                        r.block(cur, m, stack.clone(), params)
                    });
                }
                Op::GhostClose(p, args) => {
                    let pd = self
                        .rp
                        .predicate(p)
                        .ok_or_else(|| self.reject(&cur, span, RejectReason::Unknown(p.clone())))?;
                    let args = self.args(&cur, span, &m, args)?;
                    let env: Env = pd.params.iter().cloned().zip(args.iter().cloned()).collect();
                    self.consume(&mut cur, span, &mut m, &pd.body, env)?;
                    Self::add_cell_or_pred(&mut m, Chunk::Pred(p.clone(), args));
                }
                Op::Return(e) => {
                    let v = self.value(&cur, span, &m, e)?;
                    let mut env: Env = self.f.params.iter().cloned().zip(params.iter().cloned()).collect();
                    env.insert(RESULT.to_string(), v);
                    self.consume(&mut cur, span, &mut m, &self.f.post, env)?;
                    if m.heap.len() != self.frame_len {
                        return Err(self.reject(&cur, span, RejectReason::Leak(m.heap)));
                    }
                    return self.finish(&cur, span);
                }
                Op::Abort => return self.finish(&cur, span),
            }
        }
        Err(self.reject(&cur, self.f.span, RejectReason::MissingReturn))
    }

    fn checkpoint<'t>(&mut self, cur: Cursor<'t>, m: Machine, stack: Vec<&'p [Stmt]>, params: &[Term], span: Span) -> Result<(), Reject> {
        if let SymexTree::Done = cur.node {
            if is_infeasible(&m.pc) {
                self.stats.paths += 1;
                return Ok(());
            }
            return Err(self.reject(&cur, span, RejectReason::FeasibleDone));
        }
        self.block(cur, m, stack, params)
    }
}

fn with_rest<'a>(arm: &'a Assertion, rest: &[&'a Assertion]) -> Vec<&'a Assertion> {
    let mut v = Vec::new();
    flatten(arm, &mut v);
    v.extend_from_slice(rest);
    v
}

fn flatten<'a>(a: &'a Assertion, out: &mut Vec<&'a Assertion>) {
    match a {
        Assertion::SepConj(l, r) => {
            flatten(l, out);
            flatten(r, out);
        }
        other => out.push(other),
    }
}
