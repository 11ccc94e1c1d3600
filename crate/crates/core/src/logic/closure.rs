//! Congruence closure over the constructor theory `{Null, Some, NoneVal}`.
//!
//! Besides transitivity and congruence of `Some`, the closure propagates
//! injectivity (`Some(a) = Some(b)` gives `a = b`), and a class is
//! contradictory when it holds two different constructor heads or when the
//! `Some` edges between classes form a cycle (`x = Some(x)` has no finite
//! solution).

use std::collections::HashMap;

use super::term::{Fact, PathCondition, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Null,
    NoneVal,
    Sym(u32),
    Some(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Head {
    Null,
    NoneVal,
    Some,
}

#[derive(Debug, Clone, Default)]
pub struct Closure {
    nodes: Vec<Node>,
    parent: Vec<usize>,
    index: HashMap<Node, usize>,
    /// Node ids of all `Some(_)` applications.
    apps: Vec<usize>,
    neqs: Vec<(usize, usize)>,
    dirty: bool,
}

impl Closure {
    pub fn new() -> Closure {
        Closure::default()
    }

    pub fn from_pc(pc: &PathCondition) -> Closure {
        let mut c = Closure::new();
        for f in pc.facts() {
            c.add_fact(f);
        }
        c
    }

    pub fn add_fact(&mut self, f: &Fact) {
        match f {
            Fact::Eq(a, b) => {
                let (a, b) = (self.add(a), self.add(b));
                self.union(a, b);
            }
            Fact::Neq(a, b) => {
                let (a, b) = (self.add(a), self.add(b));
                self.neqs.push((a, b));
            }
        }
    }

    pub fn add(&mut self, t: &Term) -> usize {
        let node = match t {
            Term::Null => Node::Null,
            Term::NoneVal => Node::NoneVal,
            Term::Symbol(s) => Node::Sym(s.id),
            Term::Some(inner) => Node::Some(self.add(inner)),
        };
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(node);
        self.parent.push(id);
        self.index.insert(node, id);
        if matches!(node, Node::Some(_)) {
            self.apps.push(id);
            self.dirty = true;
        }
        id
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Representative preference: symbols by smallest id, otherwise the
    /// earliest-created node.
    fn prefer(&self, a: usize, b: usize) -> bool {
        match (self.nodes[a], self.nodes[b]) {
            (Node::Sym(x), Node::Sym(y)) => x < y,
            _ => a < b,
        }
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.prefer(ra, rb) {
            self.parent[rb] = ra;
        } else {
            self.parent[ra] = rb;
        }
        self.dirty = true;
        true
    }

    /// Runs congruence and injectivity propagation to a fixpoint.
    fn saturate(&mut self) {
        while self.dirty {
            self.dirty = false;
            let apps = self.apps.clone();
            let mut by_arg: HashMap<usize, usize> = HashMap::new();
            let mut by_class: HashMap<usize, usize> = HashMap::new();
            for &app in &apps {
                let Node::Some(arg) = self.nodes[app] else { unreachable!() };
                let arg_rep = self.find(arg);
                match by_arg.get(&arg_rep) {
                    Some(&other) => {
                        self.union(app, other);
                    }
                    None => {
                        by_arg.insert(arg_rep, app);
                    }
                }
                let app_rep = self.find(app);
                match by_class.get(&app_rep) {
                    Some(&other) => {
                        let Node::Some(other_arg) = self.nodes[other] else { unreachable!() };
                        self.union(arg, other_arg);
                    }
                    None => {
                        by_class.insert(app_rep, app);
                    }
                }
            }
        }
    }

    pub fn equal(&mut self, a: usize, b: usize) -> bool {
        self.saturate();
        self.find(a) == self.find(b)
    }

    pub fn merge(&mut self, a: usize, b: usize) {
        self.union(a, b);
    }

    /// True when the facts added so far have no model.
    pub fn is_contradictory(&mut self) -> bool {
        self.saturate();
        let n = self.nodes.len();

        let mut heads: HashMap<usize, Head> = HashMap::new();
        for i in 0..n {
            let head = match self.nodes[i] {
                Node::Null => Head::Null,
                Node::NoneVal => Head::NoneVal,
                Node::Some(_) => Head::Some,
                Node::Sym(_) => continue,
            };
            let r = self.find(i);
            match heads.get(&r) {
                Some(&h) if h != head => return true,
                Some(_) => {}
                None => {
                    heads.insert(r, head);
                }
            }
        }

        for k in 0..self.neqs.len() {
            let (a, b) = self.neqs[k];
            if self.find(a) == self.find(b) {
                return true;
            }
        }

        // Cycle check on the class graph `class(Some(a)) -> class(a)`.
        let mut edges: HashMap<usize, Vec<usize>> = HashMap::new();
        for k in 0..self.apps.len() {
            let app = self.apps[k];
            let Node::Some(arg) = self.nodes[app] else { unreachable!() };
            let (from, to) = (self.find(app), self.find(arg));
            edges.entry(from).or_default().push(to);
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: HashMap<usize, u8> = HashMap::new();
        for &start in edges.keys() {
            if state.get(&start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            state.insert(start, 1);
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                let succ = edges.get(&v).map(Vec::as_slice).unwrap_or(&[]);
                if *i < succ.len() {
                    let w = succ[*i];
                    *i += 1;
                    match state.get(&w).copied().unwrap_or(0) {
                        0 => {
                            state.insert(w, 1);
                            stack.push((w, 0));
                        }
                        1 => return true,
                        _ => {}
                    }
                } else {
                    state.insert(v, 2);
                    stack.pop();
                }
            }
        }
        false
    }
}
