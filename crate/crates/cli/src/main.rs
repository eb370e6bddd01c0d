use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use polydom_cli::{run, Command, Overrides};

/// Operator-theoretic checks on commuting matrix tuples.
#[derive(Parser)]
#[command(name = "polydom", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Problem spec (or generator parameters for `gen`).
    #[arg(long)]
    input: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    trunc_degree: Option<usize>,
    /// Residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let input = match std::fs::read_to_string(&cli.input) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("polydom: cannot read {}: {e}", cli.input.display());
            return ExitCode::from(1);
        }
    };
    let ov = Overrides {
        trunc_degree: cli.trunc_degree,
        tol: cli.tol,
        seed: cli.seed,
    };
    let (text, code) = run(cli.command, &input, ov);
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("polydom: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code as u8)
}
