//! Reference parking fee calculator with switchable faults.
//!
//! Reads a script of `lot`, `entry`, `exit` and `calc` lines and prints one
//! fee per `calc`.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use gramtao::corpus::{self, FaultSet, EXIT_INPUT};
use gramtao::semantics::RateTable;

#[derive(Parser)]
#[command(name = "gramtao-park", version)]
struct Args {
    /// Rate table; the shipped one by default.
    #[arg(long)]
    rates: Option<PathBuf>,
    /// Comma-separated faults to enable, or `all`.
    #[arg(long, default_value = "", value_parser = FaultSet::parse_list)]
    faults: FaultSet,
    /// Read the script from this file instead of standard input.
    file: Option<PathBuf>,
}

fn setup(args: &Args) -> Result<(RateTable, String)> {
    let rates = match &args.rates {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            RateTable::parse(&text)?
        }
        None => RateTable::default(),
    };
    let input = match &args.file {
        Some(path) => {
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    Ok((rates, input))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (rates, input) = match setup(&args) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    match corpus::run_park(&rates, args.faults, &input) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(code) => ExitCode::from(code as u8),
    }
}
