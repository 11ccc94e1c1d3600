use std::fmt;

/// A fresh symbol. The hint is the source name it was created for and only
/// matters for display.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub id: u32,
    pub hint: String,
}

/// First-order terms over fresh symbols.
///
/// `Some` and `NoneVal` are the initialization states carried by
/// `points_to_` chunks. `Null`, `Some(_)` and `NoneVal` are pairwise
/// distinct constructors, and `Some` is injective.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Null,
    Symbol(Symbol),
    Some(Box<Term>),
    NoneVal,
}

impl Term {
    pub fn sym(id: u32, hint: impl Into<String>) -> Term {
        Term::Symbol(Symbol { id, hint: hint.into() })
    }

    pub fn some(t: Term) -> Term {
        Term::Some(Box::new(t))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Null => f.write_str("nullptr"),
            Term::Symbol(s) if s.hint.is_empty() => write!(f, "s{}", s.id),
            Term::Symbol(s) => write!(f, "{}#{}", s.hint, s.id),
            Term::Some(t) => write!(f, "some({t})"),
            Term::NoneVal => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Fact {
    Eq(Term, Term),
    Neq(Term, Term),
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Eq(a, b) => write!(f, "{a} = {b}"),
            Fact::Neq(a, b) => write!(f, "{a} ≠ {b}"),
        }
    }
}

/// Deterministic supply of symbol ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolCounter {
    next: u32,
}

impl SymbolCounter {
    pub fn new() -> SymbolCounter {
        SymbolCounter::default()
    }

    pub fn fresh(&mut self, hint: &str) -> Term {
        let id = self.next;
        self.next += 1;
        Term::sym(id, hint)
    }

    pub fn peek(&self) -> u32 {
        self.next
    }
}

/// Append-only set of (dis)equalities assumed on a path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathCondition {
    facts: Vec<Fact>,
}

impl PathCondition {
    pub fn new() -> PathCondition {
        PathCondition::default()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Returns `self` extended with `f`. Never rejects; infeasibility is a
    /// separate query.
    pub fn assume(&self, f: Fact) -> PathCondition {
        let mut pc = self.clone();
        pc.push(f);
        pc
    }

    pub fn push(&mut self, f: Fact) {
        self.facts.push(f);
    }
}

impl fmt::Display for PathCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.facts.is_empty() {
            return f.write_str("∅");
        }
        f.write_str("{")?;
        for (i, fact) in self.facts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{fact}")?;
        }
        f.write_str("}")
    }
}
