//! Concrete interpreter with undefined-behavior detection.
//!
//! Values are naturals with 0 as the null pointer. Cells are never freed.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lang::{Expr, Op, ResolvedProgram, Stmt};

pub const DEFAULT_FUEL: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UbKind {
    NullDeref,
    UnallocatedAccess,
    UninitRead,
}

impl fmt::Display for UbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Returned(u64),
    Aborted,
    Ub(UbKind),
    OutOfFuel,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Returned(v) => write!(f, "returned {v}"),
            Outcome::Aborted => f.write_str("aborted"),
            Outcome::Ub(k) => write!(f, "undefined behavior: {k}"),
            Outcome::OutOfFuel => f.write_str("out of fuel"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("program has no `main` function")]
    NoMain,
    #[error("`main` must take no parameters")]
    MainParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Uninit,
    Init(u64),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConcreteHeap {
    cells: BTreeMap<u64, CellState>,
    next: u64,
}

impl ConcreteHeap {
    fn alloc(&mut self) -> u64 {
        self.next += 1;
        self.cells.insert(self.next, CellState::Uninit);
        self.next
    }

    pub fn cells(&self) -> &BTreeMap<u64, CellState> {
        &self.cells
    }

    fn check(&self, a: u64) -> Result<CellState, UbKind> {
        match a {
            0 => Err(UbKind::NullDeref),
            a => self.cells.get(&a).copied().ok_or(UbKind::UnallocatedAccess),
        }
    }

    fn write(&mut self, a: u64, v: u64) -> Result<(), UbKind> {
        self.check(a)?;
        self.cells.insert(a, CellState::Init(v));
        Ok(())
    }

    fn read(&self, a: u64) -> Result<u64, UbKind> {
        match self.check(a)? {
            CellState::Init(v) => Ok(v),
            CellState::Uninit => Err(UbKind::UninitRead),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub outcome: Outcome,
    /// Statements executed.
    pub steps: u64,
    pub heap: ConcreteHeap,
}

#[derive(Clone, Copy)]
enum Local {
    Val(u64),
    Cell(u64),
}

struct Frame<'p> {
    locals: BTreeMap<&'p str, Local>,
    stack: Vec<&'p [Stmt]>,
    /// Where the caller wants the result.
    ret_to: Option<&'p str>,
}

impl<'p> Frame<'p> {
    fn eval(&self, e: &Expr) -> u64 {
        match e {
            Expr::Null => 0,
            Expr::Var(x) => match self.locals.get(x.as_str()) {
                Some(Local::Val(v)) => *v,
                _ => panic!("resolver admitted an unbound read of `{x}`"),
            },
            Expr::AddrOf(x) => match self.locals.get(x.as_str()) {
                Some(Local::Cell(a)) => *a,
                _ => panic!("resolver admitted `&{x}` for a non-addressed local"),
            },
        }
    }
}

pub fn run_main(rp: &ResolvedProgram, fuel: u64) -> Result<RunReport, RunError> {
    let main = rp.function("main").ok_or(RunError::NoMain)?;
    if !main.params.is_empty() {
        return Err(RunError::MainParams);
    }
    let mut heap = ConcreteHeap::default();
    let mut frames = vec![Frame {
        locals: BTreeMap::new(),
        stack: vec![&main.body],
        ret_to: None,
    }];
    let mut steps = 0;
    let finish = |outcome, steps, heap| Ok(RunReport { outcome, steps, heap });

    loop {
        let fr = frames.last_mut().expect("at least one frame");
        let Some(top) = fr.stack.last_mut() else {
            // Falling off the end returns 0.
            if let Some(v) = pop_frame(&mut frames, 0) {
                return finish(Outcome::Returned(v), steps, heap);
            }
            continue;
        };
        let cur: &'_ [Stmt] = top;
        let Some((stmt, rest)) = cur.split_first() else {
            fr.stack.pop();
            continue;
        };
        *top = rest;
        if steps == fuel {
            return finish(Outcome::OutOfFuel, steps, heap);
        }
        steps += 1;

        let ub = |k, heap: &ConcreteHeap| Ok(RunReport { outcome: Outcome::Ub(k), steps, heap: heap.clone() });
        match &stmt.kind {
            Op::LetValue(x, e) => {
                let v = fr.eval(e);
                fr.locals.insert(x, Local::Val(v));
            }
            Op::LetAddressed(x, init) => {
                let v = init.as_ref().map(|e| fr.eval(e));
                let a = heap.alloc();
                fr.locals.insert(x, Local::Cell(a));
                if let Some(v) = v {
                    heap.write(a, v).expect("fresh cell");
                }
            }
            Op::WriteDeref(p, v) => {
                let (a, v) = (fr.eval(p), fr.eval(v));
                if let Err(k) = heap.write(a, v) {
                    return ub(k, &heap);
                }
            }
            Op::LetDeref(x, p) => match heap.read(fr.eval(p)) {
                Ok(v) => {
                    fr.locals.insert(x, Local::Val(v));
                }
                Err(k) => return ub(k, &heap),
            },
            Op::IfNull { scrutinee, then, els } => {
                let block = if fr.eval(scrutinee) == 0 { then } else { els };
                fr.stack.push(block);
            }
            Op::Call { bind, callee, args } => {
                let g = rp.function(callee).expect("resolver checked callees");
                let locals = g
                    .params
                    .iter()
                    .zip(args)
                    .map(|(p, a)| (p.as_str(), Local::Val(fr.eval(a))))
                    .collect();
                frames.push(Frame {
                    locals,
                    stack: vec![&g.body],
                    ret_to: bind.as_deref(),
                });
            }
            Op::Return(e) => {
                let v = fr.eval(e);
                if let Some(v) = pop_frame(&mut frames, v) {
                    return finish(Outcome::Returned(v), steps, heap);
                }
            }
            Op::Abort => return finish(Outcome::Aborted, steps, heap),
            Op::GhostOpen(..) | Op::GhostClose(..) => {}
        }
    }
}

/// Pops the current frame and delivers `v` to the caller. Returns `Some(v)`
/// when the outermost frame was popped.
fn pop_frame(frames: &mut Vec<Frame<'_>>, v: u64) -> Option<u64> {
    let done = frames.pop().expect("frame to pop");
    let Some(caller) = frames.last_mut() else {
        return Some(v);
    };
    if let Some(x) = done.ret_to {
        caller.locals.insert(x, Local::Val(v));
    }
    None
}
