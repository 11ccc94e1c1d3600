//! Terms, path conditions and the equality decision procedure.
//!
//! The procedure is congruence closure plus constructor disjointness,
//! injectivity and acyclicity. Nothing else is used for reasoning, by the
//! verifier or by the certificate checker.

mod closure;
mod term;

pub use closure::Closure;
pub use term::{Fact, PathCondition, Symbol, SymbolCounter, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    ProvablyEqual,
    ProvablyDistinct,
    Unknown,
}

pub fn assume(pc: &PathCondition, f: Fact) -> PathCondition {
    pc.assume(f)
}

/// Decides `a = b` under `pc`.
///
/// An infeasible `pc` entails everything, so it answers `ProvablyEqual`.
pub fn decide_eq(pc: &PathCondition, a: &Term, b: &Term) -> Decision {
    let mut c = Closure::from_pc(pc);
    let (ia, ib) = (c.add(a), c.add(b));
    if c.is_contradictory() || c.equal(ia, ib) {
        return Decision::ProvablyEqual;
    }
    c.merge(ia, ib);
    if c.is_contradictory() {
        Decision::ProvablyDistinct
    } else {
        Decision::Unknown
    }
}

pub fn is_infeasible(pc: &PathCondition) -> bool {
    Closure::from_pc(pc).is_contradictory()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(id: u32) -> Term {
        Term::sym(id, format!("x{id}"))
    }

    fn pc(facts: Vec<Fact>) -> PathCondition {
        let mut pc = PathCondition::new();
        for f in facts {
            pc.push(f);
        }
        pc
    }

    #[test]
    fn fresh_symbols_count_up() {
        let mut ctr = SymbolCounter::new();
        assert_eq!(ctr.fresh("original"), Term::sym(0, "original"));
        assert_eq!(ctr.fresh("next"), Term::sym(1, "next"));
    }

    #[test]
    fn assume_appends() {
        let node1 = s(0);
        let p = assume(&PathCondition::new(), Fact::Neq(node1.clone(), Term::Null));
        assert_eq!(p.facts(), &[Fact::Neq(node1, Term::Null)]);
    }

    #[test]
    fn reflexive_fact_changes_nothing() {
        let base = pc(vec![Fact::Eq(s(0), s(1))]);
        let more = base.assume(Fact::Eq(s(2), s(2)));
        for (a, b) in [(0, 1), (0, 2), (1, 2), (2, 3)] {
            assert_eq!(decide_eq(&base, &s(a), &s(b)), decide_eq(&more, &s(a), &s(b)));
        }
    }

    #[test]
    fn duplicate_assumption_changes_nothing() {
        let f = Fact::Neq(s(0), s(1));
        let once = pc(vec![f.clone()]);
        let twice = once.assume(f);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(decide_eq(&once, &s(a), &s(b)), decide_eq(&twice, &s(a), &s(b)));
            }
        }
    }

    #[test]
    fn transitivity() {
        let p = pc(vec![Fact::Eq(s(0), s(1)), Fact::Eq(s(1), s(2))]);
        assert_eq!(decide_eq(&p, &s(0), &s(2)), Decision::ProvablyEqual);
    }

    #[test]
    fn disequality_with_null() {
        let p = pc(vec![Fact::Neq(s(3), Term::Null)]);
        assert_eq!(decide_eq(&p, &s(3), &Term::Null), Decision::ProvablyDistinct);
    }

    #[test]
    fn unrelated_symbols_unknown() {
        assert_eq!(decide_eq(&PathCondition::new(), &s(0), &s(1)), Decision::Unknown);
    }

    #[test]
    fn constructor_clash() {
        let e = PathCondition::new();
        assert_eq!(decide_eq(&e, &Term::some(s(0)), &Term::NoneVal), Decision::ProvablyDistinct);
        assert_eq!(decide_eq(&e, &Term::Null, &Term::NoneVal), Decision::ProvablyDistinct);
        assert_eq!(decide_eq(&e, &Term::some(s(0)), &Term::some(s(0))), Decision::ProvablyEqual);
        assert_eq!(decide_eq(&e, &s(0), &Term::some(s(0))), Decision::ProvablyDistinct);
    }

    #[test]
    fn injectivity_and_congruence() {
        let p = pc(vec![Fact::Eq(Term::some(s(0)), Term::some(s(1)))]);
        assert_eq!(decide_eq(&p, &s(0), &s(1)), Decision::ProvablyEqual);
        let p = pc(vec![Fact::Eq(s(0), s(1))]);
        assert_eq!(decide_eq(&p, &Term::some(s(0)), &Term::some(s(1))), Decision::ProvablyEqual);
        let p = pc(vec![Fact::Neq(s(0), s(1))]);
        assert_eq!(
            decide_eq(&p, &Term::some(s(0)), &Term::some(s(1))),
            Decision::ProvablyDistinct
        );
    }

    #[test]
    fn infeasibility() {
        assert!(is_infeasible(&pc(vec![Fact::Eq(s(0), Term::Null), Fact::Neq(s(0), Term::Null)])));
        assert!(!is_infeasible(&pc(vec![Fact::Neq(s(0), Term::Null)])));
        assert!(is_infeasible(&pc(vec![
            Fact::Eq(s(0), s(1)),
            Fact::Eq(s(1), s(2)),
            Fact::Neq(s(0), s(2)),
        ])));
        assert!(is_infeasible(&pc(vec![Fact::Eq(s(0), Term::some(s(0)))])));
        assert!(is_infeasible(&pc(vec![
            Fact::Eq(s(0), Term::some(s(1))),
            Fact::Eq(s(1), Term::some(s(0))),
        ])));
        assert!(!is_infeasible(&PathCondition::new()));
    }
}
