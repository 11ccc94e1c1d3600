//! Bundled example programs and a random generator of linked-list programs.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::interp::UbKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Verifies,
    /// Rejected by the verifier; `ub` is the interpreter's verdict on `main`.
    Rejected { ub: Option<UbKind> },
}

#[derive(Debug, Clone, Copy)]
pub struct Bundled {
    pub name: &'static str,
    pub source: &'static str,
    pub expect: Expect,
}

pub const REVERSE: &str = include_str!("../programs/reverse.vfm");

pub const BUNDLED: &[Bundled] = &[
    Bundled {
        name: "reverse",
        source: REVERSE,
        expect: Expect::Verifies,
    },
    Bundled {
        name: "null_read",
        source: include_str!("../programs/null_read.vfm"),
        expect: Expect::Rejected { ub: Some(UbKind::NullDeref) },
    },
    Bundled {
        name: "null_write",
        source: include_str!("../programs/null_write.vfm"),
        expect: Expect::Rejected { ub: Some(UbKind::NullDeref) },
    },
    Bundled {
        name: "null_via_call",
        source: include_str!("../programs/null_via_call.vfm"),
        expect: Expect::Rejected { ub: Some(UbKind::NullDeref) },
    },
    Bundled {
        name: "unchecked_next",
        source: include_str!("../programs/unchecked_next.vfm"),
        expect: Expect::Rejected { ub: Some(UbKind::NullDeref) },
    },
    Bundled {
        name: "uninit_read",
        source: include_str!("../programs/uninit_read.vfm"),
        expect: Expect::Rejected { ub: Some(UbKind::UninitRead) },
    },
    Bundled {
        name: "uninit_via_call",
        source: include_str!("../programs/uninit_via_call.vfm"),
        expect: Expect::Rejected { ub: Some(UbKind::UninitRead) },
    },
    Bundled {
        name: "missing_close",
        source: include_str!("../programs/missing_close.vfm"),
        expect: Expect::Rejected { ub: None },
    },
    Bundled {
        name: "leak",
        source: include_str!("../programs/leak.vfm"),
        expect: Expect::Rejected { ub: None },
    },
    Bundled {
        name: "wrong_post",
        source: include_str!("../programs/wrong_post.vfm"),
        expect: Expect::Rejected { ub: None },
    },
    Bundled {
        name: "use_after_close",
        source: include_str!("../programs/use_after_close.vfm"),
        expect: Expect::Rejected { ub: None },
    },
];

pub fn bundled(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}

/// Shared helpers placed in front of every generated `main`.
pub const LIBRARY: &str = r#"/*@
pred llist(head: *mut u8) =
    if head == 0 {
        true
    } else {
        *(head as *mut *mut u8) |-> ?next &*& llist(next)
    };
@*/

unsafe fn reverse_iter(original: *mut u8, reversed: *mut u8) -> *mut u8
//@ req llist(original) &*& llist(reversed);
//@ ens llist(result);
{
    //@ open llist(original);
    if original.is_null() { return reversed; }
    let next = *(original as *mut *mut u8);
    *(original as *mut *mut u8) = reversed;
    //@ close llist(original);
    reverse_iter(next, original)
}

unsafe fn reverse(list: *mut u8) -> *mut u8
//@ req llist(list);
//@ ens llist(result);
{
    //@ close llist(0);
    reverse_iter(list, std::ptr::null_mut())
}

unsafe fn touch(l: *mut u8) -> *mut u8
//@ req llist(l);
//@ ens llist(l);
{
    //@ open llist(l);
    //@ close llist(l);
    return l;
}

unsafe fn set(p: *mut *mut u8, v: *mut u8) -> *mut u8
//@ req *p |-> ?old;
//@ ens *p |-> v;
{
    *p = v;
    return 0;
}

unsafe fn get(p: *mut *mut u8) -> *mut u8
//@ req *p |-> ?v;
//@ ens *p |-> result;
{
    let v = *p;
    return v;
}
"#;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub seed: u64,
    pub source: String,
    /// Whether every statement was chosen to respect ownership. Programs
    /// built with `faults` set may still come out clean.
    pub intended_valid: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_stmts: usize,
    pub max_if_depth: usize,
    /// Probability that a statement is drawn without regard to ownership.
    pub fault_rate: f64,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            max_stmts: 14,
            max_if_depth: 2,
            fault_rate: 0.0,
        }
    }
}

/// The `i`-th program of a reproducible corpus: every fourth one has faults.
pub fn corpus_program(i: u64) -> Generated {
    let cfg = GenConfig {
        fault_rate: if i % 4 == 3 { 0.2 } else { 0.0 },
        ..GenConfig::default()
    };
    generate(0x5eed_0000 + i, &cfg)
}

pub fn generate(seed: u64, cfg: &GenConfig) -> Generated {
    let mut g = Gen {
        rng: StdRng::seed_from_u64(seed),
        cfg: *cfg,
        out: String::new(),
        next_cell: 0,
        next_var: 0,
        next_opaque: 0,
        faulty: false,
    };
    g.out.push_str(LIBRARY);
    g.out.push_str("\nfn main()\n//@ req true;\n//@ ens true;\n{\n    unsafe {\n");
    let budget = g.rng.random_range(2..=cfg.max_stmts);
    g.block(Model::default(), budget, 0, 2);
    g.out.push_str("    }\n}\n");
    Generated {
        seed,
        source: g.out,
        intended_valid: !g.faulty,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    Null,
    Cell(usize),
    Var(usize),
    /// A symbol the program has no name for yet.
    Opaque(usize),
}

#[derive(Debug, Clone)]
struct CellState {
    owned: bool,
    contents: Option<Val>,
}

/// Abstract heap tracked along one path of the generated program.
#[derive(Debug, Clone, Default)]
struct Model {
    cells: Vec<(usize, CellState)>,
    vars: Vec<(usize, Val)>,
    lists: Vec<Val>,
}

impl Model {
    fn cell(&mut self, id: usize) -> &mut CellState {
        &mut self.cells.iter_mut().find(|(c, _)| *c == id).expect("known cell").1
    }

    fn take_list(&mut self, v: Val) -> bool {
        match self.lists.iter().position(|l| *l == v) {
            Some(i) => {
                self.lists.remove(i);
                true
            }
            None => false,
        }
    }

    fn is_empty(&self) -> bool {
        self.lists.is_empty() && self.cells.iter().all(|(_, c)| !c.owned)
    }
}

struct Gen {
    rng: StdRng,
    cfg: GenConfig,
    out: String,
    next_cell: usize,
    next_var: usize,
    next_opaque: usize,
    faulty: bool,
}

fn render(v: Val) -> String {
    match v {
        Val::Null => "std::ptr::null_mut()".to_string(),
        Val::Cell(c) => format!("&raw mut c{c} as *mut u8"),
        Val::Var(x) => format!("v{x}"),
        Val::Opaque(_) => unreachable!("opaque values are named through variables"),
    }
}

impl Gen {
    fn line(&mut self, indent: usize, s: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> Option<T> {
        (!xs.is_empty()).then(|| xs[self.rng.random_range(0..xs.len())])
    }

    /// Any value nameable at this point.
    fn any_val(&mut self, m: &Model) -> Val {
        let mut opts = vec![Val::Null];
        opts.extend(m.cells.iter().map(|(c, _)| Val::Cell(*c)));
        opts.extend(m.vars.iter().map(|(x, _)| Val::Var(*x)));
        self.pick(&opts).unwrap()
    }

    /// A value term as the verifier will see it: variables stand for what
    /// they were assigned.
    fn resolve(m: &Model, v: Val) -> Val {
        match v {
            Val::Var(x) => m.vars.iter().find(|(y, _)| *y == x).map(|(_, v)| *v).unwrap_or(v),
            v => v,
        }
    }

    fn block(&mut self, mut m: Model, mut budget: usize, depth: usize, indent: usize) {
        while budget > 0 {
            budget -= 1;
            if depth < self.cfg.max_if_depth && budget > 2 && self.rng.random_bool(0.12) {
                let vars: Vec<usize> = m.vars.iter().map(|(x, _)| *x).collect();
                if let Some(x) = self.pick(&vars) {
                    self.line(indent, &format!("if v{x}.is_null() {{"));
                    self.block(m.clone(), budget / 2, depth + 1, indent + 1);
                    self.line(indent, "} else {");
                    self.block(m, budget / 2, depth + 1, indent + 1);
                    self.line(indent, "}");
                    return;
                }
            }
            if self.cfg.fault_rate > 0.0 && self.rng.random_bool(self.cfg.fault_rate) {
                self.faulty = true;
                self.fault(&mut m, indent);
            } else {
                self.step(&mut m, indent);
            }
        }
        let ret = if m.is_empty() {
            self.rng.random_bool(0.5)
        } else if self.cfg.fault_rate > 0.0 && self.rng.random_bool(self.cfg.fault_rate) {
            self.faulty = true;
            true
        } else {
            false
        };
        self.line(indent, if ret { "return;" } else { "std::process::abort();" });
    }

    /// One statement that respects the ownership model.
    fn step(&mut self, m: &mut Model, indent: usize) {
        let owned: Vec<usize> = m.cells.iter().filter(|(_, c)| c.owned).map(|(i, _)| *i).collect();
        let readable: Vec<usize> = m
            .cells
            .iter()
            .filter(|(_, c)| c.owned && c.contents.is_some())
            .map(|(i, _)| *i)
            .collect();
        let closable: Vec<usize> = m
            .cells
            .iter()
            .filter(|(_, c)| c.owned && c.contents.is_some_and(|v| m.lists.contains(&v)))
            .map(|(i, _)| *i)
            .collect();
        let openable: Vec<usize> = m
            .lists
            .iter()
            .filter_map(|l| match l {
                Val::Cell(c) => Some(*c),
                _ => None,
            })
            .collect();
        loop {
            match self.rng.random_range(0..10) {
                0 | 1 => {
                    let c = self.next_cell;
                    self.next_cell += 1;
                    let init = self.rng.random_bool(0.85).then(|| self.any_val(m));
                    let contents = init.map(|v| Self::resolve(m, v));
                    match init {
                        Some(v) => self.line(indent, &format!("let mut c{c}: *mut u8 = {};", render(v))),
                        None => {
                            // An uninitialized local must have its address taken.
                            let x = self.next_var;
                            self.next_var += 1;
                            self.line(indent, &format!("let mut c{c}: *mut u8;"));
                            self.line(indent, &format!("let v{x} = &raw mut c{c} as *mut u8;"));
                            m.vars.push((x, Val::Cell(c)));
                        }
                    }
                    m.cells.push((c, CellState { owned: true, contents }));
                }
                2 => {
                    let Some(c) = self.pick(&owned) else { continue };
                    let v = self.any_val(m);
                    if m.cell(c).contents.is_none() || self.rng.random_bool(0.5) {
                        self.line(indent, &format!("*(&raw mut c{c}) = {};", render(v)));
                    } else {
                        self.line(indent, &format!("set(&raw mut c{c}, {});", render(v)));
                    }
                    m.cell(c).contents = Some(Self::resolve(m, v));
                }
                3 => {
                    let Some(c) = self.pick(&readable) else { continue };
                    let x = self.next_var;
                    self.next_var += 1;
                    if self.rng.random_bool(0.5) {
                        self.line(indent, &format!("let v{x} = *(&raw mut c{c});"));
                        let v = m.cell(c).contents.unwrap();
                        m.vars.push((x, v));
                    } else {
                        self.line(indent, &format!("let v{x} = get(&raw mut c{c});"));
                        m.cell(c).contents = Some(Val::Var(x));
                        m.vars.push((x, Val::Var(x)));
                    }
                }
                4 => {
                    self.line(indent, "//@ close llist(0);");
                    m.lists.push(Val::Null);
                }
                5 | 6 => {
                    let Some(c) = self.pick(&closable) else { continue };
                    self.line(indent, &format!("//@ close llist(&c{c} as *mut u8);"));
                    let v = m.cell(c).contents.unwrap();
                    m.take_list(v);
                    m.cell(c).owned = false;
                    m.lists.push(Val::Cell(c));
                }
                7 => {
                    let Some(c) = self.pick(&openable) else { continue };
                    self.line(indent, &format!("//@ open llist(&c{c} as *mut u8);"));
                    m.take_list(Val::Cell(c));
                    // The opened tail is a fresh symbol, not the stored value.
                    let v = Val::Opaque(self.next_opaque);
                    self.next_opaque += 1;
                    let cell = m.cell(c);
                    cell.owned = true;
                    cell.contents = Some(v);
                    m.lists.push(v);
                }
                8 => {
                    let lists = m.lists.clone();
                    let Some(l) = self.pick(&lists) else { continue };
                    let Some(arg) = self.name_of(m, l) else { continue };
                    let x = self.next_var;
                    self.next_var += 1;
                    self.line(indent, &format!("let v{x} = reverse({arg});"));
                    m.take_list(l);
                    m.lists.push(Val::Var(x));
                    m.vars.push((x, Val::Var(x)));
                }
                _ => {
                    let lists = m.lists.clone();
                    let Some(l) = self.pick(&lists) else { continue };
                    let Some(arg) = self.name_of(m, l) else { continue };
                    self.line(indent, &format!("touch({arg});"));
                }
            }
            return;
        }
    }

    /// A source expression denoting `v`, if one is in scope.
    fn name_of(&mut self, m: &Model, v: Val) -> Option<String> {
        match v {
            Val::Null | Val::Cell(_) => Some(render(v)),
            Val::Var(_) | Val::Opaque(_) => {
                let names: Vec<usize> = m.vars.iter().filter(|(_, w)| *w == v).map(|(x, _)| *x).collect();
                self.pick(&names).map(|x| format!("v{x}"))
            }
        }
    }

    /// One statement drawn without looking at ownership.
    fn fault(&mut self, m: &mut Model, indent: usize) {
        let cells: Vec<usize> = m.cells.iter().map(|(c, _)| *c).collect();
        let vars: Vec<usize> = m.vars.iter().map(|(x, _)| *x).collect();
        let x = self.next_var;
        match self.rng.random_range(0..7) {
            0 => {
                let Some(c) = self.pick(&cells) else {
                    return self.line(indent, "*(std::ptr::null_mut() as *mut *mut u8) = std::ptr::null_mut();");
                };
                self.line(indent, &format!("let v{x} = *(&raw mut c{c});"));
            }
            1 => {
                let Some(y) = self.pick(&vars) else {
                    return self.line(indent, "*(std::ptr::null_mut() as *mut *mut u8) = std::ptr::null_mut();");
                };
                self.line(indent, &format!("let v{x} = *(v{y} as *mut *mut u8);"));
            }
            2 => {
                let Some(y) = self.pick(&vars) else { return };
                let v = self.any_val(m);
                self.line(indent, &format!("*(v{y} as *mut *mut u8) = {};", render(v)));
                return;
            }
            3 => {
                let v = self.any_val(m);
                self.line(indent, &format!("//@ close llist({});", render(v).replace("&raw mut ", "&")));
                return;
            }
            4 => {
                let v = self.any_val(m);
                self.line(indent, &format!("//@ open llist({});", render(v).replace("&raw mut ", "&")));
                return;
            }
            5 => {
                let v = self.any_val(m);
                self.line(indent, &format!("let v{x} = reverse({});", render(v)));
            }
            _ => {
                let Some(c) = self.pick(&cells) else { return };
                self.line(indent, &format!("let v{x} = get(&raw mut c{c});"));
            }
        }
        self.next_var += 1;
        m.vars.push((x, Val::Var(x)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        for i in 0..20 {
            assert_eq!(corpus_program(i), corpus_program(i));
        }
    }

    #[test]
    fn bundled_names_unique() {
        for (i, a) in BUNDLED.iter().enumerate() {
            assert!(BUNDLED[i + 1..].iter().all(|b| b.name != a.name));
        }
    }
}
