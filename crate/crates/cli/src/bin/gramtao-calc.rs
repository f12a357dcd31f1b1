//! Reference integer calculator with selectable bugs.
//!
//! Reads one expression from standard input, or from the file named as the
//! last argument, and prints its value. Exit status 2 means the input did
//! not parse, 3 means division by zero.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use gramtao::corpus::{self, Mutant, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "gramtao-calc", version)]
struct Args {
    /// Which calculator: m0 is correct, m1..m5 carry one bug each.
    #[arg(long, default_value = "m0")]
    mutant: Mutant,
    /// Read the expression from this file instead of standard input.
    file: Option<PathBuf>,
}

fn read_input(file: Option<&PathBuf>) -> Result<String> {
    match file {
        Some(path) => {
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
        }
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let input = match read_input(args.file.as_ref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    match corpus::run_calc(args.mutant, &input) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(code) => ExitCode::from(code as u8),
    }
}
