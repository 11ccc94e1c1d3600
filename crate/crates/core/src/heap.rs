//! Symbolic heaps: ordered chunk sequences whose positions are the currency of
//! `ConsumeChunk(k)` hints.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::logic::{decide_eq, Decision, PathCondition, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chunk {
    /// `points_to(addr, val)`: initialized cell.
    PointsTo(Term, Term),
    /// `points_to_(addr, init)`: possibly uninitialized cell; `init` is
    /// `some(v)` or `none`.
    PointsToMaybe(Term, Term),
    Pred(String, Vec<Term>),
}

impl fmt::Display for Chunk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chunk::PointsTo(a, v) => write!(f, "points_to({a}, {v})"),
            Chunk::PointsToMaybe(a, v) => write!(f, "points_to_({a}, {v})"),
            Chunk::Pred(name, args) => {
                write!(f, "{name}(")?;
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Assertion-variable bindings, threaded left to right through conjuncts.
pub type Env = BTreeMap<String, Term>;

/// One position of a chunk goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoalPat {
    Term(Term),
    /// Binds the chunk's term at this position.
    Bind(String),
    /// Matches anything and binds nothing.
    Any,
}

impl fmt::Display for GoalPat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalPat::Term(t) => write!(f, "{t}"),
            GoalPat::Bind(x) => write!(f, "?{x}"),
            GoalPat::Any => f.write_str("_"),
        }
    }
}

/// An instantiated conjunct to be consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChunkGoal {
    PointsTo(Term, GoalPat),
    PointsToMaybe(Term, GoalPat),
    Pred(String, Vec<GoalPat>),
}

impl fmt::Display for ChunkGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChunkGoal::PointsTo(a, p) => write!(f, "points_to({a}, {p})"),
            ChunkGoal::PointsToMaybe(a, p) => write!(f, "points_to_({a}, {p})"),
            ChunkGoal::Pred(name, args) => {
                write!(f, "{name}(")?;
                for (i, p) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("chunk index {index} out of range for heap of length {len}")]
pub struct OutOfRange {
    pub index: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Mismatch {
    #[error("chunk kind or predicate name differs")]
    Kind,
    #[error("position {0} is not provably equal")]
    Term(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolicHeap {
    chunks: Vec<Chunk>,
}

impl SymbolicHeap {
    pub fn new() -> SymbolicHeap {
        SymbolicHeap::default()
    }

    pub fn from_chunks(chunks: Vec<Chunk>) -> SymbolicHeap {
        SymbolicHeap { chunks }
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<&Chunk> {
        self.chunks.get(k)
    }

    pub fn add_front(&mut self, c: Chunk) {
        self.chunks.insert(0, c);
    }

    pub fn remove_at(&mut self, k: usize) -> Result<Chunk, OutOfRange> {
        if k >= self.chunks.len() {
            return Err(OutOfRange { index: k, len: self.chunks.len() });
        }
        Ok(self.chunks.remove(k))
    }
}

/// Functional form of [`SymbolicHeap::add_front`].
pub fn add_front(h: &SymbolicHeap, c: Chunk) -> SymbolicHeap {
    let mut h = h.clone();
    h.add_front(c);
    h
}

/// Functional form of [`SymbolicHeap::remove_at`].
pub fn remove_at(h: &SymbolicHeap, k: usize) -> Result<(Chunk, SymbolicHeap), OutOfRange> {
    let mut h = h.clone();
    let c = h.remove_at(k)?;
    Ok((c, h))
}

impl fmt::Display for SymbolicHeap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.chunks.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

fn match_pos(pc: &PathCondition, pos: usize, actual: &Term, pat: &GoalPat, env: &mut Env) -> Result<(), Mismatch> {
    match pat {
        GoalPat::Any => Ok(()),
        GoalPat::Bind(x) => {
            env.insert(x.clone(), actual.clone());
            Ok(())
        }
        GoalPat::Term(t) => match decide_eq(pc, actual, t) {
            Decision::ProvablyEqual => Ok(()),
            _ => Err(Mismatch::Term(pos)),
        },
    }
}

/// Matches one chunk against one goal. Never looks at heap order.
pub fn match_chunk(pc: &PathCondition, c: &Chunk, goal: &ChunkGoal, env: &Env) -> Result<Env, Mismatch> {
    let mut env = env.clone();
    match (c, goal) {
        (Chunk::PointsTo(a, v), ChunkGoal::PointsTo(ga, gv))
        | (Chunk::PointsToMaybe(a, v), ChunkGoal::PointsToMaybe(ga, gv)) => {
            match_pos(pc, 0, a, &GoalPat::Term(ga.clone()), &mut env)?;
            match_pos(pc, 1, v, gv, &mut env)?;
        }
        (Chunk::Pred(name, args), ChunkGoal::Pred(gname, gargs)) => {
            if name != gname || args.len() != gargs.len() {
                return Err(Mismatch::Kind);
            }
            for (i, (t, p)) in args.iter().zip(gargs).enumerate() {
                match_pos(pc, i, t, p, &mut env)?;
            }
        }
        _ => return Err(Mismatch::Kind),
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Fact;
    use proptest::prelude::*;

    fn llist(t: Term) -> Chunk {
        Chunk::Pred("llist".into(), vec![t])
    }

    #[test]
    fn add_front_examples() {
        let node1 = Term::sym(0, "node1");
        let h = add_front(&SymbolicHeap::new(), llist(Term::Null));
        assert_eq!(h.chunks(), &[llist(Term::Null)]);
        let h = add_front(&h, Chunk::PointsTo(node1.clone(), Term::Null));
        assert_eq!(h.chunks(), &[Chunk::PointsTo(node1, Term::Null), llist(Term::Null)]);
    }

    #[test]
    fn remove_at_examples() {
        let node1 = Term::sym(0, "node1");
        let h = SymbolicHeap::from_chunks(vec![Chunk::PointsTo(node1.clone(), Term::Null), llist(Term::Null)]);
        let (c, h) = remove_at(&h, 0).unwrap();
        assert_eq!(c, Chunk::PointsTo(node1, Term::Null));
        assert_eq!(h.chunks(), &[llist(Term::Null)]);
        let (c, h) = remove_at(&h, 0).unwrap();
        assert_eq!(c, llist(Term::Null));
        assert!(h.is_empty());
        assert_eq!(remove_at(&h, 0), Err(OutOfRange { index: 0, len: 0 }));
    }

    #[test]
    fn match_pred_by_env_term() {
        let node3 = Term::sym(5, "node3");
        let goal = ChunkGoal::Pred("llist".into(), vec![GoalPat::Term(node3.clone())]);
        let env = Env::new();
        assert_eq!(match_chunk(&PathCondition::new(), &llist(node3), &goal, &env), Ok(env));
    }

    #[test]
    fn match_binds_value() {
        let original = Term::sym(0, "original");
        let next = Term::sym(2, "next");
        let c = Chunk::PointsTo(original.clone(), next.clone());
        let goal = ChunkGoal::PointsTo(original, GoalPat::Bind("next".into()));
        let env = match_chunk(&PathCondition::new(), &c, &goal, &Env::new()).unwrap();
        assert_eq!(env.get("next"), Some(&next));
    }

    #[test]
    fn unknown_is_not_equal() {
        let (a, b) = (Term::sym(0, "a"), Term::sym(1, "b"));
        let goal = ChunkGoal::Pred("llist".into(), vec![GoalPat::Term(b.clone())]);
        assert_eq!(
            match_chunk(&PathCondition::new(), &llist(a.clone()), &goal, &Env::new()),
            Err(Mismatch::Term(0))
        );
        let pc = PathCondition::new().assume(Fact::Eq(a.clone(), b));
        assert!(match_chunk(&pc, &llist(a), &goal, &Env::new()).is_ok());
    }

    #[test]
    fn kind_mismatch() {
        let a = Term::sym(0, "a");
        let goal = ChunkGoal::PointsToMaybe(a.clone(), GoalPat::Any);
        assert_eq!(
            match_chunk(&PathCondition::new(), &Chunk::PointsTo(a, Term::Null), &goal, &Env::new()),
            Err(Mismatch::Kind)
        );
    }

    fn arb_chunk() -> impl Strategy<Value = Chunk> {
        let term = (0u32..4).prop_map(|i| Term::sym(i, ""));
        prop_oneof![
            (term.clone(), term.clone()).prop_map(|(a, b)| Chunk::PointsTo(a, b)),
            term.clone().prop_map(|a| Chunk::PointsToMaybe(a, Term::NoneVal)),
            proptest::collection::vec(term, 0..3).prop_map(|args| Chunk::Pred("p".into(), args)),
        ]
    }

    proptest! {
        #[test]
        fn remove_after_add_front_is_identity(chunks in proptest::collection::vec(arb_chunk(), 0..6), c in arb_chunk()) {
            let h = SymbolicHeap::from_chunks(chunks);
            let h2 = add_front(&h, c.clone());
            prop_assert_eq!(h2.len(), h.len() + 1);
            prop_assert_eq!(remove_at(&h2, 0).unwrap(), (c, h));
        }

        #[test]
        fn multiset_discipline(
            init in proptest::collection::vec(arb_chunk(), 0..5),
            ops in proptest::collection::vec((any::<bool>(), arb_chunk(), 0usize..8), 0..20),
        ) {
            let mut h = SymbolicHeap::from_chunks(init.clone());
            let mut expected = init;
            for (add, c, k) in ops {
                if add {
                    h.add_front(c.clone());
                    expected.push(c);
                } else if let Ok(removed) = h.remove_at(k) {
                    let pos = expected.iter().position(|x| *x == removed).unwrap();
                    expected.remove(pos);
                }
            }
            let mut got = h.chunks().to_vec();
            got.sort();
            expected.sort();
            prop_assert_eq!(got, expected);
        }
    }
}
