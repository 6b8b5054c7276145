//! `krigelab`: the command-line front end.
//!
//! Parsing and dispatch only — every resolved command lives in the library
//! crate so the integration tests can drive it without a subprocess. Exit
//! codes: 0 success, 1 verdict mismatch (for CI), 2 invalid configuration,
//! 3 numerical failure. Clap's own usage errors also exit with 2.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use krigelab_cli::acceptance::{render_line, run_criterion, CRITERIA_COUNT};
use krigelab_cli::commands::{
    cmd_band, cmd_catalog, cmd_fcond, cmd_lemma1, cmd_sweep, lemma1_instance_listing,
};
use krigelab_cli::config::{
    resolve_band, resolve_fcond, resolve_lemma1, resolve_sweep, BandArgs, FcondArgs, Lemma1Args,
    SweepArgs,
};
use krigelab_cli::{CliError, CommandResult, EXIT_OK, EXIT_VERDICT};

#[derive(Parser)]
#[command(
    name = "krigelab",
    version,
    about = "Numerical laboratory for the screening effect in optimal linear prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the near/full error-variance ratio over a shrinking-scale grid.
    Sweep(SweepArgs),
    /// Spectral diagnostics: band shares and density-flatness checks.
    #[command(subcommand)]
    Spectral(SpectralCommand),
    /// Track scaled near-far covariance matrices toward their limits.
    Lemma1(Lemma1Args),
    /// Print, save, or check the built-in scenario catalog.
    Catalog(CatalogArgs),
    /// Run the numbered acceptance criteria and report one line each.
    Selfcheck(SelfcheckArgs),
}

#[derive(Subcommand)]
enum SpectralCommand {
    /// Low-frequency share of the prediction-error spectrum.
    Band(BandArgs),
    /// Heuristic flatness check of a model's spectral density.
    Fcond(FcondArgs),
}

#[derive(Args)]
struct CatalogArgs {
    /// Write the catalog JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare an existing file against the built-in catalog (exit 1 if stale).
    #[arg(long, conflicts_with_all = ["out", "summary"])]
    check: Option<PathBuf>,
    /// Print a readable table instead of JSON.
    #[arg(long)]
    summary: bool,
}

#[derive(Args)]
struct SelfcheckArgs {
    /// Run only these criterion numbers, e.g. `--only 1,9,13`.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<usize>>,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("krigelab: error: {error}");
            error.exit_code()
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Sweep(args) => {
            let run = resolve_sweep(&args)?;
            finish(cmd_sweep(&run)?)
        }
        Command::Spectral(SpectralCommand::Band(args)) => {
            let run = resolve_band(&args)?;
            finish(cmd_band(&run)?)
        }
        Command::Spectral(SpectralCommand::Fcond(args)) => {
            let run = resolve_fcond(&args)?;
            finish(cmd_fcond(&run)?)
        }
        Command::Lemma1(args) => {
            if args.list {
                print!("{}", lemma1_instance_listing());
                return Ok(EXIT_OK);
            }
            let run = resolve_lemma1(&args)?;
            finish(cmd_lemma1(&run)?)
        }
        Command::Catalog(args) => finish(cmd_catalog(args.out, args.check, args.summary)?),
        Command::Selfcheck(args) => selfcheck(&args),
    }
}

/// Write every artifact (stdout when no path was given), then map the
/// result onto an exit code.
fn finish(result: CommandResult) -> Result<i32, CliError> {
    for artifact in &result.artifacts {
        match &artifact.path {
            Some(path) => std::fs::write(path, &artifact.contents).map_err(|e| {
                CliError::config(format!("cannot write {}: {e}", path.display()))
            })?,
            None => print!("{}", artifact.contents),
        }
    }
    Ok(result.exit_code())
}

fn selfcheck(args: &SelfcheckArgs) -> Result<i32, CliError> {
    let numbers: Vec<usize> = match &args.only {
        Some(only) if !only.is_empty() => only.clone(),
        _ => (1..=CRITERIA_COUNT).collect(),
    };
    let mut all_passed = true;
    for number in numbers {
        let outcome = run_criterion(number)?;
        println!("{}", render_line(&outcome));
        if !outcome.passed {
            all_passed = false;
            for detail in &outcome.details {
                println!("    {detail}");
            }
        }
    }
    Ok(if all_passed { EXIT_OK } else { EXIT_VERDICT })
}
