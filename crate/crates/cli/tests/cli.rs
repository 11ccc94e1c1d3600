use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mirrorvf::corpus::{bundled, REVERSE};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mirrorvf"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&Path]) -> Output {
    let mut c = bin();
    for a in args {
        c.arg(a);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_emit_then_check() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "reverse.vfm", REVERSE);
    let cert = dir.path().join("reverse.cert");
    let o = bin().arg("verify").arg(&src).arg("--emit-cert").arg(&cert).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&cert).unwrap();
    assert_eq!(text.matches("\"name\"").count(), 3);
    let o = run(&["check".as_ref(), &src, &cert]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn bumped_index_rejected() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "reverse.vfm", REVERSE);
    let cert = dir.path().join("reverse.cert");
    bin().arg("verify").arg(&src).arg("--emit-cert").arg(&cert).output().unwrap();
    let text = fs::read_to_string(&cert).unwrap().replacen("\"k\": 1", "\"k\": 2", 1);
    let bad = write(&dir, "bad.cert", &text);
    let o = run(&["check".as_ref(), &src, &bad]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("rejected"), "{}", stderr(&o));
}

#[test]
fn empty_program() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "empty.vfm", "");
    let cert = dir.path().join("empty.cert");
    let o = bin().arg("verify").arg(&src).arg("--emit-cert").arg(&cert).output().unwrap();
    assert_eq!(code(&o), 0);
    let o = run(&["check".as_ref(), &src, &cert]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn missing_close_diagnostic() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "m.vfm", bundled("missing_close").unwrap().source);
    let o = run(&["verify".as_ref(), &src]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("m.vfm:40:"), "{err}");
    assert!(err.contains("llist(node2"), "{err}");
    assert!(err.contains("heap:") && err.contains("store:") && err.contains("pc:"), "{err}");
}

#[test]
fn syntax_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "bad.vfm", "fn main( {");
    assert_eq!(code(&run(&["verify".as_ref(), &src])), 2);
    assert_eq!(code(&run(&["run".as_ref(), &src])), 2);
    let good = write(&dir, "good.vfm", REVERSE);
    let cert = write(&dir, "bad.cert", "{ not json");
    assert_eq!(code(&run(&["check".as_ref(), &good, &cert])), 2);
    assert_eq!(code(&run(&["check".as_ref(), &src, &cert])), 2);
}

#[test]
fn io_errors_exit_three() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.vfm");
    assert_eq!(code(&run(&["verify".as_ref(), &missing])), 3);
    assert_eq!(code(&run(&["run".as_ref(), &missing])), 3);
    let src = write(&dir, "r.vfm", REVERSE);
    assert_eq!(code(&run(&["check".as_ref(), &src, &missing])), 3);
    let o = bin().arg("verify").arg(&src).arg("--emit-cert").arg(dir.path().join("no/such/dir.cert")).output().unwrap();
    assert_eq!(code(&o), 3);
}

#[test]
fn run_exit_codes() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "r.vfm", REVERSE);
    let o = run(&["run".as_ref(), &src]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("aborted"));
    let src = write(&dir, "n.vfm", bundled("null_read").unwrap().source);
    let o = run(&["run".as_ref(), &src]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("NullDeref"));
    let spin = "fn spin()\n//@ req true;\n//@ ens true;\n{ spin() }\nfn main()\n//@ req true;\n//@ ens true;\n{ spin(); std::process::abort(); }";
    let src = write(&dir, "s.vfm", spin);
    let o = bin().arg("run").arg(&src).arg("--fuel").arg("10").output().unwrap();
    assert_eq!(code(&o), 5);
}

#[test]
fn trace_goes_to_stderr() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "r.vfm", REVERSE);
    let o = bin().arg("verify").arg(&src).env("MIRRORVF_TRACE", "1").output().unwrap();
    assert_eq!(code(&o), 0);
    let err = stderr(&o);
    assert!(err.contains("== reverse_iter"), "{err}");
    assert!(err.contains("points_to(original#0, next#2)"), "{err}");
    let o = run(&["verify".as_ref(), &src]);
    assert!(o.stderr.is_empty());
}

#[test]
fn pipeline_succeeds_only_if_both_accept() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "r.vfm", REVERSE);
    let other = write(&dir, "o.vfm", &REVERSE.replace("reverse(reversed);", ""));
    let cert = dir.path().join("r.cert");
    assert_eq!(code(&bin().arg("verify").arg(&src).arg("--emit-cert").arg(&cert).output().unwrap()), 0);
    assert_eq!(code(&run(&["check".as_ref(), &other, &cert])), 1);
}
