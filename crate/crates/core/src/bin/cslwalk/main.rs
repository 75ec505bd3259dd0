//! Command-line front end.
//!
//! Exit status: 0 success, 2 parse or unit error, 3 domain error, 4 oracle
//! divergence, 5 i/o error.

mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use cslwalk::paramfile::ParamSet;
use cslwalk::units::AMU;
use cslwalk::{Error, Result};

use args::{Cli, Command, Format};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Unit(_) => 2,
        Error::ParameterDomain { .. } | Error::ModelDomain(_) | Error::InsufficientData(_) => 3,
        Error::OracleDivergence { .. } => 4,
        Error::Io(_) => 5,
    }
}

/// Per-command defaults applied beneath the parameter file and flags.
fn command_defaults(cmd: &Command) -> ParamSet {
    match cmd {
        // The design mass oscillates too fast for nanometre differences.
        Command::ResidualCheck { .. } => ParamSet {
            mass: Some(1e3 * AMU),
            lambda_alpha: Some(1e8),
            ..ParamSet::default()
        },
        _ => ParamSet::default(),
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::ParameterDomain {
                field: "threads",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
    }
    let mut set = command_defaults(&cli.command);
    if let Some(path) = &cli.global.params {
        set = set.overlay(&ParamSet::parse(&commands::read(path)?)?);
    }
    // A flag-level lambda replaces a file- or default-level lambda_alpha.
    let flags = cli.physics.to_param_set();
    if flags.lambda.is_some() {
        set.lambda_alpha = None;
    }
    if flags.lambda_alpha.is_some() {
        set.lambda = None;
    }
    let resolved = set.overlay(&flags).resolve()?;

    let report = commands::run(&cli.command, &resolved, cli.global.seed)?;
    if cli.global.explain {
        eprint!("{}", report.explanation());
    }
    let text = report.render(cli.global.format);
    match &cli.global.output {
        Some(path) => report::write_atomic(path, &text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    eprintln!("{}: {}", report.command, report.summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match cli.global.format {
                Format::Json => eprintln!(
                    "{}",
                    serde_json::json!({"error": {"category": e.category(), "message": e.to_string()}})
                ),
                Format::Csv => eprintln!("error[{}]: {e}", e.category()),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
