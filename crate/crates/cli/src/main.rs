use clap::Parser;
use nzbc_cli::error::ExitStatus;
use nzbc_cli::{run, Args};
use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = match run(&args) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("nzbc: {e}");
            return ExitCode::from(e.status() as u8);
        }
    };
    let written = match &args.out {
        Some(path) => std::fs::write(path, &outcome.text),
        None => std::io::stdout().write_all(outcome.text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("nzbc: output: {e}");
        return ExitCode::from(ExitStatus::Region as u8);
    }
    if outcome.status == ExitStatus::Acceptance {
        eprintln!("nzbc: acceptance failure, see report");
    }
    ExitCode::from(outcome.status as u8)
}
