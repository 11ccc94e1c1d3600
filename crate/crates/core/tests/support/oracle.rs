//! Brute-force reference for the equality decision procedure.
//!
//! Enumerates every equivalence relation over the subterms in play and keeps
//! the ones that are term-algebra models: congruent, injective on `some`,
//! no two distinct constructors in one class, acyclic, and satisfying every
//! fact. `a = b` is entailed when all models agree.

#![allow(dead_code)]

use mirrorvf::logic::{Decision, Fact, PathCondition, Term};
use rand::rngs::StdRng;
use rand::Rng;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Head {
    Null,
    NoneVal,
    Some(usize),
    Sym,
}

struct Universe {
    terms: Vec<Term>,
    heads: Vec<Head>,
}

impl Universe {
    fn new() -> Universe {
        Universe { terms: Vec::new(), heads: Vec::new() }
    }

    fn add(&mut self, t: &Term) -> usize {
        if let Some(i) = self.terms.iter().position(|u| u == t) {
            return i;
        }
        let head = match t {
            Term::Null => Head::Null,
            Term::NoneVal => Head::NoneVal,
            Term::Symbol(_) => Head::Sym,
            Term::Some(inner) => Head::Some(self.add(inner)),
        };
        self.terms.push(t.clone());
        self.heads.push(head);
        self.terms.len() - 1
    }

    fn index(&self, t: &Term) -> usize {
        self.terms.iter().position(|u| u == t).expect("term in universe")
    }
}

/// All models of `pc`, each given as a class label per universe term.
fn models(u: &Universe, eqs: &[(usize, usize)], neqs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let n = u.terms.len();
    let mut out = Vec::new();
    let mut label = vec![0; n];
    enumerate(u, eqs, neqs, &mut label, 0, 0, &mut out);
    out
}

fn clash(a: Head, b: Head) -> bool {
    let kind = |h| match h {
        Head::Null => 0,
        Head::NoneVal => 1,
        Head::Some(_) => 2,
        Head::Sym => 3,
    };
    let (ka, kb) = (kind(a), kind(b));
    ka != 3 && kb != 3 && ka != kb
}

fn enumerate(
    u: &Universe,
    eqs: &[(usize, usize)],
    neqs: &[(usize, usize)],
    label: &mut Vec<usize>,
    i: usize,
    classes: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if i == label.len() {
        if is_model(u, eqs, neqs, label) {
            out.push(label.clone());
        }
        return;
    }
    for c in 0..=classes {
        label[i] = c;
        // Prune early on constructor clashes and violated facts.
        let done = |a: usize, b: usize| a <= i && b <= i;
        let bad = (0..i).any(|j| label[j] == c && clash(u.heads[i], u.heads[j]))
            || neqs.iter().any(|&(a, b)| done(a, b) && label[a] == label[b])
            || eqs.iter().any(|&(a, b)| done(a, b) && label[a] != label[b]);
        if !bad {
            enumerate(u, eqs, neqs, label, i + 1, classes.max(c + 1), out);
        }
    }
}

fn is_model(u: &Universe, eqs: &[(usize, usize)], neqs: &[(usize, usize)], l: &[usize]) -> bool {
    if eqs.iter().any(|&(a, b)| l[a] != l[b]) || neqs.iter().any(|&(a, b)| l[a] == l[b]) {
        return false;
    }
    let n = l.len();
    for i in 0..n {
        for j in 0..n {
            if l[i] != l[j] {
                continue;
            }
            if clash(u.heads[i], u.heads[j]) {
                return false;
            }
            if let (Head::Some(a), Head::Some(b)) = (u.heads[i], u.heads[j]) {
                if l[a] != l[b] {
                    return false;
                }
            }
        }
    }
    // Congruence: equal arguments force equal `some` applications.
    for i in 0..n {
        for j in 0..n {
            if let (Head::Some(a), Head::Some(b)) = (u.heads[i], u.heads[j]) {
                if l[a] == l[b] && l[i] != l[j] {
                    return false;
                }
            }
        }
    }
    // Acyclicity over the class graph: class of some(x) points to class of x.
    let classes = l.iter().copied().max().map_or(0, |m| m + 1);
    let mut edges = vec![Vec::new(); classes];
    for i in 0..n {
        if let Head::Some(a) = u.heads[i] {
            edges[l[i]].push(l[a]);
        }
    }
    let mut state = vec![0u8; classes];
    fn dfs(v: usize, edges: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[v] = 1;
        for &w in &edges[v] {
            if state[w] == 1 || (state[w] == 0 && !dfs(w, edges, state)) {
                return false;
            }
        }
        state[v] = 2;
        true
    }
    (0..classes).all(|c| state[c] != 0 || dfs(c, &edges, &mut state))
}

pub struct OracleAnswers {
    pub infeasible: bool,
    pub decisions: Vec<Decision>,
}

/// Answers `is_infeasible(pc)` and `decide_eq` for each query pair.
pub fn oracle(pc: &PathCondition, queries: &[(Term, Term)]) -> OracleAnswers {
    let mut u = Universe::new();
    let mut eqs = Vec::new();
    let mut neqs = Vec::new();
    for f in pc.facts() {
        match f {
            Fact::Eq(a, b) => eqs.push((u.add(a), u.add(b))),
            Fact::Neq(a, b) => neqs.push((u.add(a), u.add(b))),
        }
    }
    for (a, b) in queries {
        u.add(a);
        u.add(b);
    }
    let ms = models(&u, &eqs, &neqs);
    let decisions = queries
        .iter()
        .map(|(a, b)| {
            let (ia, ib) = (u.index(a), u.index(b));
            if ms.iter().all(|l| l[ia] == l[ib]) {
                Decision::ProvablyEqual
            } else if ms.iter().all(|l| l[ia] != l[ib]) {
                Decision::ProvablyDistinct
            } else {
                Decision::Unknown
            }
        })
        .collect();
    OracleAnswers {
        infeasible: ms.is_empty(),
        decisions,
    }
}

pub fn random_term(rng: &mut StdRng, symbols: u32, depth: u32) -> Term {
    match rng.random_range(0..10) {
        0 => Term::Null,
        1 => Term::NoneVal,
        2 | 3 if depth > 0 => Term::some(random_term(rng, symbols, depth - 1)),
        _ => {
            let id = rng.random_range(0..symbols);
            Term::sym(id, format!("s{id}"))
        }
    }
}

pub fn random_pc(rng: &mut StdRng, symbols: u32, max_facts: usize) -> PathCondition {
    let mut pc = PathCondition::new();
    for _ in 0..rng.random_range(0..=max_facts) {
        let (a, b) = (random_term(rng, symbols, 1), random_term(rng, symbols, 1));
        pc.push(if rng.random_bool(0.5) { Fact::Eq(a, b) } else { Fact::Neq(a, b) });
    }
    pc
}
