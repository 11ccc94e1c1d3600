//! The verifier: per-function symbolic execution that records a hint tree.
//!
//! Chunk lookup scans the heap front to back and takes the first match; the
//! index it lands on becomes a `ConsumeChunk(k)` hint. Automation steps
//! (turning `points_to` into `points_to_`) are recorded as explicit hints,
//! and paths found infeasible at a production point are closed with `Done`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::certificate::{program_digest, Certificate, SymexStep, SymexTree, FORMAT_VERSION};
use crate::heap::{match_chunk, Chunk, ChunkGoal, Env, GoalPat, SymbolicHeap};
use crate::lang::{Assertion, Expr, Op, Pat, ResolvedFunction, ResolvedProgram, Span, Stmt, RESULT};
use crate::logic::{decide_eq, is_infeasible, Decision, Fact, PathCondition, SymbolCounter, Term};

pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoreEntry {
    ByValue(Term),
    /// Address of an address-taken local; its contents live in the heap.
    Addressed(Term),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymState {
    pub heap: SymbolicHeap,
    pub store: BTreeMap<String, StoreEntry>,
    pub pc: PathCondition,
    pub symctr: SymbolCounter,
}

impl fmt::Display for SymState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}, [", self.heap)?;
        for (i, (x, e)) in self.store.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match e {
                StoreEntry::ByValue(t) => write!(f, "{x} ↦ {t}")?,
                StoreEntry::Addressed(t) => write!(f, "&{x} ↦ {t}")?,
            }
        }
        write!(f, "], {}⟩", self.pc)
    }
}

/// Result of producing an assertion: one leaf per path, with the branch
/// structure of the case splits that created them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Forked<T> {
    Leaf(T),
    Fork(Box<Forked<T>>, Box<Forked<T>>),
}

impl<T> Forked<T> {
    pub fn try_flat_map<U, E>(self, f: &mut impl FnMut(T) -> Result<Forked<U>, E>) -> Result<Forked<U>, E> {
        match self {
            Forked::Leaf(x) => f(x),
            Forked::Fork(a, b) => Ok(Forked::Fork(Box::new(a.try_flat_map(f)?), Box::new(b.try_flat_map(f)?))),
        }
    }

    pub fn leaves(self) -> Vec<T> {
        match self {
            Forked::Leaf(x) => vec![x],
            Forked::Fork(a, b) => {
                let mut v = a.leaves();
                v.extend(b.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsumeError {
    #[error("no chunk matches {goal}")]
    NoMatchingChunk { goal: ChunkGoal },
    #[error("cannot decide condition {lhs} == {rhs}")]
    UndecidableCondition { lhs: Term, rhs: Term },
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyErrorKind {
    #[error("cannot consume: {0}")]
    Consume(#[from] ConsumeError),
    #[error("heap not empty at return ({0} chunk(s) leaked)")]
    Leak(usize),
    #[error("path ends without `return` or `abort`")]
    MissingReturn,
    #[error("out of fuel")]
    OutOfFuel,
    #[error("unknown function or predicate `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct VerifyError {
    pub function: String,
    pub span: Span,
    pub kind: VerifyErrorKind,
    pub state: Box<SymState>,
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: in `{}`: {}", self.span, self.function, self.kind)
    }
}

impl VerifyError {
    /// Symbolic state at the failure, one component per line.
    pub fn render_state(&self) -> String {
        let s = &self.state;
        let store = SymState {
            heap: SymbolicHeap::new(),
            store: s.store.clone(),
            pc: PathCondition::new(),
            symctr: SymbolCounter::new(),
        };
        let store_text = store.to_string();
        let store_text = store_text
            .trim_start_matches("⟨[], ")
            .trim_end_matches(", ∅⟩")
            .to_string();
        format!("  heap:  {}\n  store: {}\n  pc:    {}\n", s.heap, store_text, s.pc)
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub fuel: usize,
    /// Chunks present before the precondition is produced. They must be left
    /// in place at every return.
    pub frame: Vec<Chunk>,
    pub trace: bool,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            fuel: DEFAULT_FUEL,
            frame: Vec::new(),
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionRun {
    pub tree: SymexTree,
    pub trace: Vec<String>,
    /// Heap at each completed `return`.
    pub final_heaps: Vec<SymbolicHeap>,
    /// Leaf conjuncts consumed.
    pub leaf_consumes: usize,
    /// Hints recorded by each executed statement, in execution order.
    pub stmt_hints: Vec<(Span, Vec<SymexStep>)>,
}

pub fn exec_function(rp: &ResolvedProgram, fname: &str) -> Result<SymexTree, VerifyError> {
    exec_function_with(rp, fname, &Options::default()).map(|r| r.tree)
}

pub fn exec_function_with(rp: &ResolvedProgram, fname: &str, opts: &Options) -> Result<FunctionRun, VerifyError> {
    let func = rp.function(fname).ok_or_else(|| VerifyError {
        function: fname.to_string(),
        span: Span::default(),
        kind: VerifyErrorKind::Unknown(fname.to_string()),
        state: Box::default(),
    })?;
    let mut ex = Exec {
        rp,
        func,
        fuel: opts.fuel,
        frame_len: opts.frame.len(),
        param_terms: Vec::new(),
        trace: opts.trace.then(Vec::new),
        branch: Vec::new(),
        final_heaps: Vec::new(),
        leaf_consumes: 0,
        stmt_hints: Vec::new(),
    };

    let mut st = SymState {
        heap: SymbolicHeap::from_chunks(opts.frame.clone()),
        ..SymState::default()
    };
    let mut env = Env::new();
    for p in &func.params {
        let t = st.symctr.fresh(p);
        st.store.insert(p.clone(), StoreEntry::ByValue(t.clone()));
        env.insert(p.clone(), t.clone());
        ex.param_terms.push(t);
    }
    let produced = ex
        .produce(st.clone(), &func.pre, env)
        .map_err(|k| ex.error(func.span, k.into(), &st))?;
    ex.note(|| format!("produce precondition {}", func.pre));
    let tree = ex.continue_forked(produced.try_flat_map(&mut |(s, _)| Ok::<_, VerifyError>(Forked::Leaf(s)))?, &[&func.body])?;
    Ok(FunctionRun {
        tree,
        trace: ex.trace.unwrap_or_default(),
        final_heaps: ex.final_heaps,
        leaf_consumes: ex.leaf_consumes,
        stmt_hints: ex.stmt_hints,
    })
}

/// Verifies every function in source order and assembles the certificate.
pub fn verify_program(rp: &ResolvedProgram) -> Result<Certificate, VerifyError> {
    let mut trees = Vec::with_capacity(rp.functions.len());
    for f in &rp.functions {
        trees.push((f.name.clone(), exec_function(rp, &f.name)?));
    }
    Ok(Certificate {
        version: FORMAT_VERSION,
        digest: program_digest(&rp.source),
        trees,
    })
}

/// Verifies like [`verify_program`], also returning the per-function traces.
pub fn verify_program_traced(rp: &ResolvedProgram) -> (Result<Certificate, VerifyError>, Vec<String>) {
    let mut trees = Vec::new();
    let mut lines = Vec::new();
    let opts = Options { trace: true, ..Options::default() };
    for f in &rp.functions {
        lines.push(format!("== {}", f.name));
        match exec_function_with(rp, &f.name, &opts) {
            Ok(run) => {
                lines.extend(run.trace);
                trees.push((f.name.clone(), run.tree));
            }
            Err(e) => return (Err(e), lines),
        }
    }
    let cert = Certificate {
        version: FORMAT_VERSION,
        digest: program_digest(&rp.source),
        trees,
    };
    (Ok(cert), lines)
}

type Cont<'p> = Vec<&'p [Stmt]>;

struct Exec<'p> {
    rp: &'p ResolvedProgram,
    func: &'p ResolvedFunction,
    fuel: usize,
    frame_len: usize,
    param_terms: Vec<Term>,
    trace: Option<Vec<String>>,
    branch: Vec<char>,
    final_heaps: Vec<SymbolicHeap>,
    leaf_consumes: usize,
    stmt_hints: Vec<(Span, Vec<SymexStep>)>,
}

fn eval_env(env: &Env, e: &Expr) -> Result<Term, ConsumeError> {
    match e {
        Expr::Null => Ok(Term::Null),
        Expr::Var(x) => env.get(x).cloned().ok_or_else(|| ConsumeError::Unbound(x.clone())),
        Expr::AddrOf(x) => Err(ConsumeError::Unbound(format!("&{x}"))),
    }
}

fn eval_store(st: &SymState, e: &Expr) -> Result<Term, ConsumeError> {
    match e {
        Expr::Null => Ok(Term::Null),
        Expr::Var(x) => match st.store.get(x) {
            Some(StoreEntry::ByValue(t)) => Ok(t.clone()),
            _ => Err(ConsumeError::Unbound(x.clone())),
        },
        Expr::AddrOf(x) => match st.store.get(x) {
            Some(StoreEntry::Addressed(a)) => Ok(a.clone()),
            _ => Err(ConsumeError::Unbound(format!("&{x}"))),
        },
    }
}

/// Adds a chunk at the front. Producing a cell also records that its address
/// is not null, unless that is already known.
fn produce_chunk(st: &mut SymState, c: Chunk) {
    if let Chunk::PointsTo(a, _) | Chunk::PointsToMaybe(a, _) = &c {
        if decide_eq(&st.pc, a, &Term::Null) != Decision::ProvablyDistinct {
            st.pc.push(Fact::Neq(a.clone(), Term::Null));
        }
    }
    st.heap.add_front(c);
}

fn params_env(params: &[String], args: &[Term]) -> Env {
    params.iter().cloned().zip(args.iter().cloned()).collect()
}

impl<'p> Exec<'p> {
    fn error(&self, span: Span, kind: VerifyErrorKind, st: &SymState) -> VerifyError {
        VerifyError {
            function: self.func.name.clone(),
            span,
            kind,
            state: Box::new(st.clone()),
        }
    }

    fn note(&mut self, line: impl FnOnce() -> String) {
        if let Some(t) = &mut self.trace {
            let prefix: String = self.branch.iter().collect();
            t.push(format!("{prefix:>4} {}", line()));
        }
    }

    fn produce(&self, st: SymState, a: &Assertion, mut env: Env) -> Result<Forked<(SymState, Env)>, ConsumeError> {
        match a {
            Assertion::True => Ok(Forked::Leaf((st, env))),
            Assertion::PointsTo(e, pat) => {
                let mut st = st;
                let addr = eval_env(&env, e)?;
                let val = self.produce_pat(&mut st, &mut env, pat)?;
                produce_chunk(&mut st, Chunk::PointsTo(addr, val));
                Ok(Forked::Leaf((st, env)))
            }
            Assertion::PredApp(name, pats) => {
                let mut st = st;
                let mut args = Vec::with_capacity(pats.len());
                for p in pats {
                    args.push(self.produce_pat(&mut st, &mut env, p)?);
                }
                produce_chunk(&mut st, Chunk::Pred(name.clone(), args));
                Ok(Forked::Leaf((st, env)))
            }
            Assertion::SepConj(l, r) => self
                .produce(st, l, env)?
                .try_flat_map(&mut |(st, env)| self.produce(st, r, env)),
            Assertion::Cond { lhs, rhs, then, els } => {
                let (l, r) = (eval_env(&env, lhs)?, eval_env(&env, rhs)?);
                match decide_eq(&st.pc, &l, &r) {
                    Decision::ProvablyEqual => self.produce(st, then, env),
                    Decision::ProvablyDistinct => self.produce(st, els, env),
                    Decision::Unknown => {
                        let mut st_then = st.clone();
                        st_then.pc.push(Fact::Eq(l.clone(), r.clone()));
                        let mut st_else = st;
                        st_else.pc.push(Fact::Neq(l, r));
                        Ok(Forked::Fork(
                            Box::new(self.produce(st_then, then, env.clone())?),
                            Box::new(self.produce(st_else, els, env)?),
                        ))
                    }
                }
            }
        }
    }

    fn produce_pat(&self, st: &mut SymState, env: &mut Env, p: &Pat) -> Result<Term, ConsumeError> {
        match p {
            Pat::Term(e) => eval_env(env, e),
            Pat::Bind(x) => {
                let t = st.symctr.fresh(x);
                env.insert(x.clone(), t.clone());
                Ok(t)
            }
        }
    }

    fn goal_pat(env: &Env, p: &Pat) -> Result<GoalPat, ConsumeError> {
        match p {
            Pat::Term(e) => Ok(GoalPat::Term(eval_env(env, e)?)),
            Pat::Bind(x) => Ok(GoalPat::Bind(x.clone())),
        }
    }

    fn consume(&mut self, st: &mut SymState, a: &Assertion, env: Env, steps: &mut Vec<SymexStep>) -> Result<Env, ConsumeError> {
        match a {
            Assertion::True => Ok(env),
            Assertion::SepConj(l, r) => {
                let env = self.consume(st, l, env, steps)?;
                self.consume(st, r, env, steps)
            }
            Assertion::Cond { lhs, rhs, then, els } => {
                let (l, r) = (eval_env(&env, lhs)?, eval_env(&env, rhs)?);
                match decide_eq(&st.pc, &l, &r) {
                    Decision::ProvablyEqual => self.consume(st, then, env, steps),
                    Decision::ProvablyDistinct => self.consume(st, els, env, steps),
                    Decision::Unknown => Err(ConsumeError::UndecidableCondition { lhs: l, rhs: r }),
                }
            }
            Assertion::PointsTo(e, p) => {
                let goal = ChunkGoal::PointsTo(eval_env(&env, e)?, Self::goal_pat(&env, p)?);
                self.consume_goal(st, &goal, env, steps).map(|(env, _)| env)
            }
            Assertion::PredApp(name, pats) => {
                let pats = pats.iter().map(|p| Self::goal_pat(&env, p)).collect::<Result<_, _>>()?;
                let goal = ChunkGoal::Pred(name.clone(), pats);
                self.consume_goal(st, &goal, env, steps).map(|(env, _)| env)
            }
        }
    }

    /// Consumes one chunk: first match front to back. A `points_to_` goal
    /// with no direct match auto-opens the first `points_to` at the same
    /// address.
    fn consume_goal(
        &mut self,
        st: &mut SymState,
        goal: &ChunkGoal,
        env: Env,
        steps: &mut Vec<SymexStep>,
    ) -> Result<(Env, Chunk), ConsumeError> {
        let hit = st
            .heap
            .chunks()
            .iter()
            .enumerate()
            .find_map(|(k, c)| match_chunk(&st.pc, c, goal, &env).ok().map(|env| (k, env)));
        if let Some((k, env)) = hit {
            let chunk = st.heap.remove_at(k).expect("index from scan");
            steps.push(SymexStep::ConsumeChunk(k));
            self.leaf_consumes += 1;
            return Ok((env, chunk));
        }
        if let ChunkGoal::PointsToMaybe(addr, _) = goal {
            let open = st.heap.chunks().iter().position(|c| {
                matches!(c, Chunk::PointsTo(l, _) if decide_eq(&st.pc, l, addr) == Decision::ProvablyEqual)
            });
            if let Some(k) = open {
                let Ok(Chunk::PointsTo(l, v)) = st.heap.remove_at(k) else { unreachable!() };
                st.heap.add_front(Chunk::PointsToMaybe(l, Term::some(v)));
                steps.push(SymexStep::AutoOpenPointsTo(k));
                return self.consume_goal(st, goal, env, steps);
            }
        }
        Err(ConsumeError::NoMatchingChunk { goal: goal.clone() })
    }

    /// Write `v` through `addr`: consume `points_to_(addr, _)`, produce
    /// `points_to(addr, v)`.
    fn write(&mut self, st: &mut SymState, addr: Term, v: Term, steps: &mut Vec<SymexStep>) -> Result<(), ConsumeError> {
        let goal = ChunkGoal::PointsToMaybe(addr.clone(), GoalPat::Any);
        self.consume_goal(st, &goal, Env::new(), steps)?;
        produce_chunk(st, Chunk::PointsTo(addr, v));
        Ok(())
    }

    /// Continues each leaf of a production; infeasible leaves become `Done`.
    fn continue_forked(&mut self, f: Forked<SymState>, k: &[&'p [Stmt]]) -> Result<SymexTree, VerifyError> {
        match f {
            Forked::Leaf(st) => self.checkpoint(st, k.to_vec()),
            Forked::Fork(a, b) => {
                self.branch.push('T');
                let then = self.continue_forked(*a, k);
                self.branch.pop();
                let then = then?;
                self.branch.push('E');
                let els = self.continue_forked(*b, k);
                self.branch.pop();
                Ok(SymexTree::Branch(Box::new(then), Box::new(els?)))
            }
        }
    }

    fn checkpoint(&mut self, st: SymState, k: Cont<'p>) -> Result<SymexTree, VerifyError> {
        if is_infeasible(&st.pc) {
            self.note(|| format!("path infeasible: {}", st.pc));
            return Ok(SymexTree::Done);
        }
        self.note(|| st.to_string());
        self.run(st, k)
    }

    fn run(&mut self, mut st: SymState, mut k: Cont<'p>) -> Result<SymexTree, VerifyError> {
        let mut steps: Vec<SymexStep> = Vec::new();
        loop {
            let Some(top) = k.last_mut() else {
                return Err(self.error(self.func.span, VerifyErrorKind::MissingReturn, &st));
            };
            let cur: &'p [Stmt] = top;
            let Some((stmt, rest)) = cur.split_first() else {
                k.pop();
                continue;
            };
            *top = rest;

            if self.fuel == 0 {
                return Err(self.error(stmt.span, VerifyErrorKind::OutOfFuel, &st));
            }
            self.fuel -= 1;
            let before = steps.len();
            let span = stmt.span;
            let fail = |ex: &Self, e: ConsumeError, st: &SymState| ex.error(span, VerifyErrorKind::Consume(e), st);

            match &stmt.kind {
                Op::LetValue(x, e) => {
                    let t = eval_store(&st, e).map_err(|e| fail(self, e, &st))?;
                    st.store.insert(x.clone(), StoreEntry::ByValue(t));
                }
                Op::LetAddressed(x, init) => {
                    let v = match init {
                        Some(e) => Some(eval_store(&st, e).map_err(|e| fail(self, e, &st))?),
                        None => None,
                    };
                    let a = st.symctr.fresh(x);
                    produce_chunk(&mut st, Chunk::PointsToMaybe(a.clone(), Term::NoneVal));
                    st.store.insert(x.clone(), StoreEntry::Addressed(a.clone()));
                    if let Some(v) = v {
                        let mut work = st.clone();
                        self.write(&mut work, a, v, &mut steps).map_err(|e| fail(self, e, &st))?;
                        st = work;
                    }
                }
                Op::WriteDeref(p, v) => {
                    let addr = eval_store(&st, p).map_err(|e| fail(self, e, &st))?;
                    let v = eval_store(&st, v).map_err(|e| fail(self, e, &st))?;
                    let mut work = st.clone();
                    self.write(&mut work, addr, v, &mut steps).map_err(|e| fail(self, e, &st))?;
                    st = work;
                }
                Op::LetDeref(x, p) => {
                    let addr = eval_store(&st, p).map_err(|e| fail(self, e, &st))?;
                    let goal = ChunkGoal::PointsTo(addr, GoalPat::Any);
                    let mut work = st.clone();
                    let (_, chunk) = self
                        .consume_goal(&mut work, &goal, Env::new(), &mut steps)
                        .map_err(|e| fail(self, e, &st))?;
                    let Chunk::PointsTo(_, v) = &chunk else { unreachable!() };
                    work.store.insert(x.clone(), StoreEntry::ByValue(v.clone()));
                    produce_chunk(&mut work, chunk);
                    st = work;
                }
                Op::IfNull { scrutinee, then, els } => {
                    let t = eval_store(&st, scrutinee).map_err(|e| fail(self, e, &st))?;
                    self.note(|| stmt.kind.to_string());
                    match decide_eq(&st.pc, &t, &Term::Null) {
                        Decision::ProvablyEqual => k.push(then),
                        Decision::ProvablyDistinct => k.push(els),
                        Decision::Unknown => {
                            let mut st_then = st.clone();
                            st_then.pc.push(Fact::Eq(t.clone(), Term::Null));
                            let mut k_then = k.clone();
                            k_then.push(then);
                            st.pc.push(Fact::Neq(t, Term::Null));
                            k.push(els);
                            self.branch.push('T');
                            let a = self.checkpoint(st_then, k_then);
                            self.branch.pop();
                            let a = a?;
                            self.branch.push('E');
                            let b = self.checkpoint(st, k);
                            self.branch.pop();
                            return Ok(SymexTree::with_steps(steps, SymexTree::Branch(Box::new(a), Box::new(b?))));
                        }
                    }
                    continue;
                }
                Op::Call { bind, callee, args } => {
                    let callee_def = self
                        .rp
                        .function(callee)
                        .ok_or_else(|| self.error(span, VerifyErrorKind::Unknown(callee.clone()), &st))?;
                    let args = args
                        .iter()
                        .map(|e| eval_store(&st, e))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| fail(self, e, &st))?;
                    let env = params_env(&callee_def.params, &args);
                    let mut work = st.clone();
                    self.consume(&mut work, &callee_def.pre, env.clone(), &mut steps)
                        .map_err(|e| fail(self, e, &st))?;
                    let mut post_env = env;
                    let result = work.symctr.fresh(RESULT);
                    post_env.insert(RESULT.to_string(), result.clone());
                    let produced = self
                        .produce(work.clone(), &callee_def.post, post_env)
                        .map_err(|e| fail(self, e, &work))?;
                    let hints = &steps[before..];
                    self.stmt_hints.push((span, hints.to_vec()));
                    self.note(|| format!("{}  {}", stmt.kind, fmt_steps(hints)));
                    let bound = produced
                        .try_flat_map(&mut |(mut s, _)| {
                            if let Some(b) = bind {
                                s.store.insert(b.clone(), StoreEntry::ByValue(result.clone()));
                            }
                            Ok::<_, VerifyError>(Forked::Leaf(s))
                        })?;
                    let rest = self.continue_forked(bound, &k)?;
                    return Ok(SymexTree::with_steps(steps, rest));
                }
                Op::GhostOpen(p, args) => {
                    let pred = self
                        .rp
                        .predicate(p)
                        .ok_or_else(|| self.error(span, VerifyErrorKind::Unknown(p.clone()), &st))?;
                    let args = args
                        .iter()
                        .map(|e| eval_store(&st, e))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| fail(self, e, &st))?;
                    let goal = ChunkGoal::Pred(p.clone(), args.iter().cloned().map(GoalPat::Term).collect());
                    let mut work = st.clone();
                    self.consume_goal(&mut work, &goal, Env::new(), &mut steps)
                        .map_err(|e| fail(self, e, &st))?;
                    let produced = self
                        .produce(work.clone(), &pred.body, params_env(&pred.params, &args))
                        .map_err(|e| fail(self, e, &work))?;
                    let hints = &steps[before..];
                    self.stmt_hints.push((span, hints.to_vec()));
                    self.note(|| format!("{}  {}", stmt.kind, fmt_steps(hints)));
                    let leaves = produced.try_flat_map(&mut |(s, _)| Ok::<_, VerifyError>(Forked::Leaf(s)))?;
                    let rest = self.continue_forked(leaves, &k)?;
                    return Ok(SymexTree::with_steps(steps, rest));
                }
                Op::GhostClose(p, args) => {
                    let pred = self
                        .rp
                        .predicate(p)
                        .ok_or_else(|| self.error(span, VerifyErrorKind::Unknown(p.clone()), &st))?;
                    let args = args
                        .iter()
                        .map(|e| eval_store(&st, e))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| fail(self, e, &st))?;
                    let mut work = st.clone();
                    self.consume(&mut work, &pred.body, params_env(&pred.params, &args), &mut steps)
                        .map_err(|e| fail(self, e, &st))?;
                    produce_chunk(&mut work, Chunk::Pred(p.clone(), args));
                    st = work;
                }
                Op::Return(e) => {
                    let v = eval_store(&st, e).map_err(|e| fail(self, e, &st))?;
                    let mut env = params_env(&self.func.params, &self.param_terms);
                    env.insert(RESULT.to_string(), v);
                    let mut work = st.clone();
                    let post = &self.func.post;
                    self.consume(&mut work, post, env, &mut steps)
                        .map_err(|e| fail(self, e, &st))?;
                    let hints = &steps[before..];
                    self.stmt_hints.push((span, hints.to_vec()));
                    self.note(|| format!("{}  {}", stmt.kind, fmt_steps(hints)));
                    if work.heap.len() != self.frame_len {
                        let leaked = work.heap.len().saturating_sub(self.frame_len);
                        return Err(self.error(span, VerifyErrorKind::Leak(leaked), &work));
                    }
                    self.final_heaps.push(work.heap);
                    return Ok(SymexTree::with_steps(steps, SymexTree::Success));
                }
                Op::Abort => {
                    self.note(|| stmt.kind.to_string());
                    return Ok(SymexTree::with_steps(steps, SymexTree::Success));
                }
            }
            let hints = &steps[before..];
                    self.stmt_hints.push((span, hints.to_vec()));
            self.note(|| format!("{}  {}", stmt.kind, fmt_steps(hints)));
            self.note(|| st.to_string());
        }
    }
}

fn fmt_steps(steps: &[SymexStep]) -> String {
    steps.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("; ")
}
