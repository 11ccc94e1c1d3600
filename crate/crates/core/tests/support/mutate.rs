//! Single-point mutations of hint trees.

#![allow(dead_code)]

use mirrorvf::certificate::{Certificate, SymexStep, SymexTree};

use SymexStep::{AutoOpenPointsTo as AO, ConsumeChunk as CC};

/// Every single-point mutant of `t`, labelled with what was changed.
pub fn tree_mutants(t: &SymexTree) -> Vec<(String, SymexTree)> {
    let mut out = Vec::new();
    local(t, &mut out);
    match t {
        SymexTree::Step(s, next) => {
            for (what, m) in tree_mutants(next) {
                out.push((what, SymexTree::Step(*s, Box::new(m))));
            }
        }
        SymexTree::Branch(a, b) => {
            for (what, m) in tree_mutants(a) {
                out.push((format!("then/{what}"), SymexTree::Branch(Box::new(m), b.clone())));
            }
            for (what, m) in tree_mutants(b) {
                out.push((format!("else/{what}"), SymexTree::Branch(a.clone(), Box::new(m))));
            }
        }
        SymexTree::Done | SymexTree::Success => {}
    }
    out.retain(|(_, m)| m != t);
    out
}

fn local(t: &SymexTree, out: &mut Vec<(String, SymexTree)>) {
    let truncate = |out: &mut Vec<(String, SymexTree)>| {
        out.push(("truncate to Done".into(), SymexTree::Done));
        out.push(("truncate to Success".into(), SymexTree::Success));
    };
    match t {
        SymexTree::Step(s, next) => {
            let with = |s: SymexStep| SymexTree::Step(s, next.clone());
            let (k, swapped) = match *s {
                CC(k) => (k, AO(k)),
                AO(k) => (k, CC(k)),
            };
            let bump = |s: SymexStep, k: usize| match s {
                CC(_) => CC(k),
                AO(_) => AO(k),
            };
            out.push((format!("{s} index +1"), with(bump(*s, k + 1))));
            if k > 0 {
                out.push((format!("{s} index -1"), with(bump(*s, k - 1))));
            }
            out.push((format!("{s} kind swap"), with(swapped)));
            out.push((format!("drop {s}"), (**next).clone()));
            truncate(out);
        }
        SymexTree::Branch(a, b) => {
            out.push(("swap branch children".into(), SymexTree::Branch(b.clone(), a.clone())));
            out.push(("branch to then child".into(), (**a).clone()));
            out.push(("branch to else child".into(), (**b).clone()));
            truncate(out);
        }
        SymexTree::Success => {
            out.push(("Success to Done".into(), SymexTree::Done));
            out.push(("extra step".into(), SymexTree::Step(CC(0), Box::new(SymexTree::Success))));
        }
        SymexTree::Done => {
            out.push(("Done to Success".into(), SymexTree::Success));
        }
    }
}

/// Mutants of a whole certificate: one tree mutated, or the header changed.
pub fn certificate_mutants(c: &Certificate) -> Vec<(String, Certificate)> {
    let mut out = Vec::new();
    for (i, (name, tree)) in c.trees.iter().enumerate() {
        for (what, m) in tree_mutants(tree) {
            let mut c2 = c.clone();
            c2.trees[i].1 = m;
            out.push((format!("{name}: {what}"), c2));
        }
    }
    let mut c2 = c.clone();
    c2.version += 1;
    out.push(("version".into(), c2));
    let mut c2 = c.clone();
    c2.digest[0] ^= 1;
    out.push(("digest".into(), c2));
    if !c.trees.is_empty() {
        let mut c2 = c.clone();
        c2.trees.pop();
        out.push(("missing tree".into(), c2));
        let mut c2 = c.clone();
        c2.trees.push(c.trees[0].clone());
        out.push(("duplicate tree".into(), c2));
    }
    out
}
