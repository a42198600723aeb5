//! Command-line harness around `genflow-core`: experiment presets, a flat
//! config format, CSV/JSON output and the property-check suites.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod setup;

use std::io::Write;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiments::Outcome;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const CHECK_FAILED: i32 = 2;
}

/// Run an experiment and write its files to `cfg.out` (or stdout).
pub fn execute(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<Outcome> {
    let outcome = experiments::run(cfg)?;
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            for (name, contents) in &outcome.files {
                formats::write_file(&dir.join(name), contents)?;
            }
            writeln!(stdout, "{}", outcome.summary).map_err(|e| HarnessError::io("<stdout>", e))?;
        }
        None => {
            // Only the first file (summary or report) goes to stdout.
            if let Some((_, contents)) = outcome.files.first() {
                stdout.write_all(contents.as_bytes()).map_err(|e| HarnessError::io("<stdout>", e))?;
            }
        }
    }
    Ok(outcome)
}

/// Exit code for an outcome: failed acceptance checks map to 2.
pub fn exit_code(outcome: &Outcome) -> i32 {
    if outcome.passed {
        exit::OK
    } else {
        exit::CHECK_FAILED
    }
}
