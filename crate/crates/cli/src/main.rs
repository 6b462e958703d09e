//! `bellgap`: command-line front end for Bell-bound computations.
//!
//! Exit codes: 0 all checks passed, 1 bad input, 2 a check failed,
//! 3 a size cap was exceeded.

mod args;
mod commands;

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use bellgap::BellError;
use clap::Parser;

use args::{Cli, Command, Format};

/// Why a run stopped, mapped onto the exit-code convention.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Check(String),
    Capacity(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Check(_) => 2,
            Failure::Capacity(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Check(m) | Failure::Capacity(m) => m,
        }
    }
}

impl From<BellError> for Failure {
    fn from(e: BellError) -> Self {
        match e {
            BellError::Domain(_) => Failure::Input(e.to_string()),
            BellError::Capacity { .. } => Failure::Capacity(e.to_string()),
            BellError::Inconsistent(_) => Failure::Check(e.to_string()),
        }
    }
}

/// Rendered report plus whether every check inside it passed.
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("BELLGAP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Input(format!("BELLGAP_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Input(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    configure_threads()?;
    if cli.format == Format::Csv && !matches!(cli.command, Command::Ghz(_)) {
        return Err(Failure::Input("csv output is only available for the ghz command".into()));
    }
    let outcome = match &cli.command {
        Command::Bounds(a) => commands::bounds(a)?,
        Command::Ghz(a) => commands::ghz(a, cli.format)?,
        Command::Optimize(a) => commands::optimize(a)?,
        Command::VerifyLhv(a) => commands::verify_lhv(a)?,
        Command::Schmidt(a) => commands::schmidt(a)?,
        Command::Report(a) => commands::report(a)?,
    };
    match &cli.out {
        Some(path) => fs::write(path, &outcome.text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(outcome.text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Input(format!("cannot write output: {e}")))?;
        }
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(o) if o.passed => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("check failed: see report");
            ExitCode::from(2)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
