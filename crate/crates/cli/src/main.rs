//! Entry point: parse, dispatch, write the run manifest, and translate
//! failures into documented exit codes with a JSON record on stderr.

mod cli;
mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use error::AppError;
use manifest::Manifest;

/// Runs one parsed invocation. `argv` is everything after the program name,
/// kept verbatim for the manifest.
fn dispatch(parsed: Cli, argv: &[String]) -> Result<(), AppError> {
    let name = parsed.command.name();
    let result = match &parsed.command {
        Command::Ingest(args) => commands::cmd_ingest(args)?,
        Command::Corr(args) => commands::cmd_corr(args)?,
        Command::Coint(args) => commands::cmd_coint(args)?,
        Command::SelectLag(args) => commands::cmd_select_lag(args)?,
        Command::Fit(args) => commands::cmd_fit(args)?,
        Command::Diagnose(args) => commands::cmd_diagnose(args)?,
        Command::Forecast(args) => commands::cmd_forecast(args)?,
        Command::Backtest(args) => commands::cmd_backtest(args)?,
        Command::Rerun(args) => {
            commands::cmd_rerun(&args.manifest)?;
            return Ok(());
        }
    };

    let manifest_path = manifest_destination(&parsed.command, name);
    let manifest = Manifest::for_run(name, parsed.seed, argv, &result.inputs, &result.outputs)?;
    manifest.write(&manifest_path)?;
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

/// The manifest lands next to the subcommand's artifacts.
fn manifest_destination(command: &Command, name: &str) -> PathBuf {
    let out_dir = match command {
        Command::Ingest(a) => &a.out_dir,
        Command::Corr(a) => &a.out_dir,
        Command::Coint(a) => &a.out_dir,
        Command::SelectLag(a) => &a.out_dir,
        Command::Fit(a) => &a.out_dir,
        Command::Diagnose(a) => &a.out_dir,
        Command::Forecast(a) => &a.out_dir,
        Command::Backtest(a) => &a.out_dir,
        Command::Rerun(_) => unreachable!("rerun writes no manifest"),
    };
    out_dir.join(format!("{name}.manifest.txt"))
}

/// Replays a recorded argv on behalf of `rerun`. Usage errors in a recorded
/// argv surface as manifest verification problems, not process aborts.
pub fn run_recorded(args: &[String]) -> Result<(), AppError> {
    let mut argv = Vec::with_capacity(args.len() + 1);
    argv.push("varcast".to_string());
    argv.extend(args.iter().cloned());
    let parsed = Cli::try_parse_from(&argv).map_err(|e| {
        AppError::manifest_verify(format!("recorded arguments no longer parse: {e}"))
    })?;
    if matches!(parsed.command, Command::Rerun(_)) {
        return Err(AppError::usage("refusing to replay a manifest that records a rerun"));
    }
    dispatch(parsed, args)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    // Usage errors keep clap's text and its exit code 2.
    let parsed = match Cli::try_parse_from(std::iter::once("varcast".to_string()).chain(argv.iter().cloned())) {
        Ok(p) => p,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(parsed, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
