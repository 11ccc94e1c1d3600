use mirrorvf::certificate::{SymexStep, SymexTree};
use mirrorvf::corpus::REVERSE;
use mirrorvf::heap::Chunk;
use mirrorvf::lang::load;
use mirrorvf::logic::Term;
use mirrorvf::symex::{exec_function_with, verify_program, Options, VerifyErrorKind};

use SymexStep::{AutoOpenPointsTo as AO, ConsumeChunk as CC};

fn line_of(src: &str, needle: &str) -> u32 {
    src.lines().position(|l| l.contains(needle)).expect("needle in source") as u32 + 1
}

fn hints_at(fname: &str, needle: &str) -> Vec<Vec<SymexStep>> {
    let rp = load(REVERSE).unwrap();
    let run = exec_function_with(&rp, fname, &Options::default()).unwrap();
    let line = line_of(REVERSE, needle);
    run.stmt_hints.into_iter().filter(|(s, _)| s.line == line).map(|(_, h)| h).collect()
}

#[test]
fn close_node1_consumes_front_twice() {
    assert_eq!(hints_at("main", "close llist(&node1"), vec![vec![CC(0), CC(0)]]);
}

#[test]
fn reverse_iter_open_takes_second_chunk() {
    assert_eq!(hints_at("reverse_iter", "open llist(original)"), vec![vec![CC(1)]]);
    let rp = load(REVERSE).unwrap();
    let cert = verify_program(&rp).unwrap();
    let paths = cert.tree("reverse_iter").unwrap().paths();
    assert_eq!(paths.len(), 2);
    assert_eq!(paths[0], vec![CC(1), CC(0)]);
    assert_eq!(paths[1], vec![CC(1), CC(1), AO(0), CC(0), CC(0), CC(1), CC(1), CC(0), CC(0)]);
}

#[test]
fn reverse_certificate_shape() {
    let rp = load(REVERSE).unwrap();
    let cert = verify_program(&rp).unwrap();
    let names: Vec<&str> = cert.trees.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["reverse_iter", "reverse", "main"]);
    assert_eq!(cert.tree("reverse").unwrap().paths(), vec![vec![CC(1), CC(0), CC(0)]]);
    assert_eq!(cert.tree("main").unwrap().paths(), vec![vec![CC(0); 11]]);
    let total: usize = cert.trees.iter().map(|(_, t)| t.steps().len()).sum();
    assert_eq!(total, 24);
}

#[test]
fn hint_count_matches_leaf_consumes() {
    let rp = load(REVERSE).unwrap();
    for f in &rp.functions {
        let run = exec_function_with(&rp, &f.name, &Options::default()).unwrap();
        let consumes = run.tree.steps().iter().filter(|s| matches!(s, CC(_))).count();
        assert_eq!(consumes, run.leaf_consumes, "{}", f.name);
    }
}

#[test]
fn frame_is_untouched() {
    let rp = load(REVERSE).unwrap();
    let frame = vec![Chunk::Pred("llist".into(), vec![Term::sym(1000, "frame")])];
    for f in &rp.functions {
        let plain = exec_function_with(&rp, &f.name, &Options::default()).unwrap();
        let framed = exec_function_with(&rp, &f.name, &Options { frame: frame.clone(), ..Options::default() }).unwrap();
        assert_eq!(plain.tree, framed.tree, "{}", f.name);
        for h in &framed.final_heaps {
            assert_eq!(h.chunks(), &frame[..], "{}", f.name);
        }
    }
}

const PRED: &str = "//@ pred llist(head) = if head == 0 { true } else { *head |-> ?next &*& llist(next) };\n";

fn verify_with(body: &str) -> Result<SymexTree, VerifyErrorKind> {
    let rp = load(&format!("{PRED}{body}")).map_err(|e| panic!("{e}")).unwrap();
    let run = exec_function_with(&rp, "f", &Options::default()).map_err(|e| e.kind)?;
    assert!(run.final_heaps.iter().all(|h| h.is_empty()));
    Ok(run.tree)
}

#[test]
fn produce_then_consume_is_identity() {
    for spec in [
        "true",
        "llist(x)",
        "*x |-> ?v &*& llist(v)",
        "llist(x) &*& llist(y)",
        "if x == 0 { true } else { *x |-> y }",
        "if x == y { llist(x) } else { llist(x) &*& llist(y) }",
    ] {
        let src = format!("fn f(x, y)\n//@ req {spec};\n//@ ens {spec};\n{{ return 0; }}");
        assert!(verify_with(&src).is_ok(), "{spec}");
    }
}

#[test]
fn open_then_close_restores() {
    let src = "fn f(x)\n//@ req llist(x);\n//@ ens llist(x);\n{\n//@ open llist(x);\n//@ close llist(x);\nreturn 0;\n}";
    let t = verify_with(src).unwrap();
    assert!(matches!(t, SymexTree::Step(CC(0), _)));
    assert_eq!(t.paths().len(), 2);
}

#[test]
fn missing_close_names_goal() {
    let src = "fn f(x)\n//@ req llist(x);\n//@ ens llist(x);\n{\n//@ open llist(x);\nreturn 0;\n}";
    match verify_with(src) {
        Err(VerifyErrorKind::Consume(e)) => assert!(e.to_string().contains("llist(x#0)"), "{e}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn write_through_initialized_cell_auto_opens() {
    let src = "fn f(p)\n//@ req *p |-> ?v;\n//@ ens *p |-> 0;\n{\n*p = 0;\nreturn 0;\n}";
    let t = verify_with(src).unwrap();
    assert_eq!(t.paths(), vec![vec![AO(0), CC(0), CC(0)]]);
}

#[test]
fn decided_if_has_no_branch() {
    let src = "fn f(x)\n//@ req *x |-> ?v;\n//@ ens true;\n{ if x.is_null() { std::process::abort(); } return 0; }";
    // The cell makes `x` non-null, so only the else arm runs; it leaks.
    assert_eq!(verify_with(src), Err(VerifyErrorKind::Leak(1)));
}

#[test]
fn verification_is_deterministic() {
    let rp = load(REVERSE).unwrap();
    assert_eq!(verify_program(&rp).unwrap(), verify_program(&rp).unwrap());
}
