use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mirrorvf::interp::DEFAULT_FUEL;
use mirrorvf_cli::{cmd_check, cmd_run, cmd_verify};

#[derive(Parser)]
#[command(name = "mirrorvf", version, about = "Verify pointer programs and check their hint certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a program, optionally writing its certificate.
    Verify {
        src: PathBuf,
        #[arg(long, value_name = "PATH")]
        emit_cert: Option<PathBuf>,
    },
    /// Replay a certificate against a program.
    Check { src: PathBuf, cert: PathBuf },
    /// Run `main` under the concrete interpreter.
    Run {
        src: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match &cli.command {
        Command::Verify { src, emit_cert } => {
            let trace = std::env::var("MIRRORVF_TRACE").is_ok_and(|v| v == "1");
            cmd_verify(src, emit_cert.as_deref(), trace, &mut out, &mut err)
        }
        Command::Check { src, cert } => cmd_check(src, cert, &mut out, &mut err),
        Command::Run { src, fuel } => cmd_run(src, *fuel, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
