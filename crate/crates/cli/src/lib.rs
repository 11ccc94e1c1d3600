//! Subcommand implementations. Each returns the process exit code and writes
//! its report to the given streams.

use std::fs;
use std::io::Write;
use std::path::Path;

use mirrorvf::certificate::Certificate;
use mirrorvf::interp::{run_main, Outcome};
use mirrorvf::lang::{load, FrontendError, ResolvedProgram};
use mirrorvf::mirror::check_certificate;
use mirrorvf::symex::{verify_program, verify_program_traced, VerifyErrorKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_SYNTAX: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_UB: i32 = 4;
pub const EXIT_FUEL: i32 = 5;

fn read(path: &Path, err: &mut dyn Write) -> Result<String, i32> {
    fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "{}: {e}", path.display());
        EXIT_IO
    })
}

fn front(path: &Path, src: &str, err: &mut dyn Write) -> Result<ResolvedProgram, i32> {
    load(src).map_err(|e| {
        let (span, kind, msg) = match &e {
            FrontendError::Parse(p) => (p.span, "parse error", &p.message),
            FrontendError::Resolve(r) => (r.span, "error", &r.message),
        };
        let _ = writeln!(err, "{}:{span}: {kind}: {msg}", path.display());
        EXIT_SYNTAX
    })
}

/// Verifies `src`; on success optionally writes the certificate to `emit`.
pub fn cmd_verify(src: &Path, emit: Option<&Path>, trace: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match read(src, err) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let rp = match front(src, &text, err) {
        Ok(rp) => rp,
        Err(code) => return code,
    };
    let result = if trace {
        let (result, lines) = verify_program_traced(&rp);
        for l in lines {
            let _ = writeln!(err, "{l}");
        }
        result
    } else {
        verify_program(&rp)
    };
    let cert = match result {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "{}:{}: error: in `{}`: {}", src.display(), e.span, e.function, e.kind);
            if let VerifyErrorKind::Consume(_) | VerifyErrorKind::Leak(_) = e.kind {
                let _ = write!(err, "{}", e.render_state());
            }
            return EXIT_REJECTED;
        }
    };
    if let Some(path) = emit {
        if let Err(e) = fs::write(path, cert.to_text()) {
            let _ = writeln!(err, "{}: {e}", path.display());
            return EXIT_IO;
        }
    }
    let hints: usize = cert.trees.iter().map(|(_, t)| t.steps().len()).sum();
    let _ = writeln!(out, "verified {} function(s), {hints} hint(s)", cert.trees.len());
    EXIT_OK
}

/// Replays the certificate at `cert` against the program at `src`.
pub fn cmd_check(src: &Path, cert: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match read(src, err) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let cert_text = match read(cert, err) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let rp = match front(src, &text, err) {
        Ok(rp) => rp,
        Err(code) => return code,
    };
    let cert_value = match Certificate::from_text(&cert_text) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "{}: malformed certificate: {e}", cert.display());
            return EXIT_SYNTAX;
        }
    };
    match check_certificate(&rp, &cert_value) {
        Ok(stats) => {
            let _ = writeln!(
                out,
                "accepted: {} function(s), {} consume and {} auto-open step(s)",
                cert_value.trees.len(),
                stats.consume_steps,
                stats.auto_open_steps
            );
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "{}: rejected: {e}", src.display());
            EXIT_REJECTED
        }
    }
}

/// Runs `main` of `src` under the concrete interpreter.
pub fn cmd_run(src: &Path, fuel: u64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match read(src, err) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let rp = match front(src, &text, err) {
        Ok(rp) => rp,
        Err(code) => return code,
    };
    let report = match run_main(&rp, fuel) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "{}: error: {e}", src.display());
            return EXIT_SYNTAX;
        }
    };
    match report.outcome {
        Outcome::Returned(_) | Outcome::Aborted => {
            let _ = writeln!(out, "{} after {} step(s)", report.outcome, report.steps);
            EXIT_OK
        }
        Outcome::Ub(kind) => {
            let _ = writeln!(err, "undefined behavior: {kind} after {} step(s)", report.steps);
            EXIT_UB
        }
        Outcome::OutOfFuel => {
            let _ = writeln!(err, "out of fuel after {} step(s)", report.steps);
            EXIT_FUEL
        }
    }
}
