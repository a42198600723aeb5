use std::process::ExitCode;

use clap::Parser;
use genflow_harness::cli::Cli;
use genflow_harness::config::KEYS;
use genflow_harness::{execute, exit, exit_code};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    if cli.keys {
        for (k, doc) in KEYS {
            println!("{k:<18} {doc}");
        }
        return ExitCode::SUCCESS;
    }
    let result = cli.config().and_then(|cfg| execute(&cfg, &mut std::io::stdout().lock()));
    let code = match result {
        Ok(outcome) => exit_code(&outcome),
        Err(e) => {
            eprintln!("genflow: {e}");
            exit::USAGE
        }
    };
    ExitCode::from(code as u8)
}
