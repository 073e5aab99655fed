use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use plap_cli::error::{EXIT_BOUND_VIOLATION, EXIT_CONFIG, EXIT_OK};
use plap_cli::{parse_config_for, run, CliError, Format, Subcommand};

/// Eigenvalues of the one-dimensional weighted p-Laplacian.
#[derive(Debug, Parser)]
#[command(name = "plap", version)]
struct Args {
    /// Subcommand; may instead be given by the config's `subcommand` key.
    #[arg(value_enum)]
    subcommand: Option<Subcommand>,
    /// TOML or JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Print diagnostics to standard error.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(args: &Args) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Config {
        path: args.config.display().to_string(),
        message: e.to_string(),
    })?;
    let mut cfg = parse_config_for(&text, args.subcommand)?;
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    if let Some(p) = &args.out {
        cfg.output.path = Some(p.clone());
    }
    if args.verbose {
        eprintln!("running `{}`", cfg.subcommand);
    }
    let outcome = run(&cfg)?;
    if args.verbose {
        for n in &outcome.notes {
            eprintln!("{n}");
        }
    }
    match &cfg.output.path {
        Some(path) => std::fs::write(path, &outcome.body)?,
        None => print!("{}", outcome.body),
    }
    if outcome.violation {
        eprintln!("bound violation detected");
        return Ok(EXIT_BOUND_VIOLATION);
    }
    Ok(EXIT_OK)
}
