use std::path::PathBuf;

use clap::Parser;

use crate::config::{parse_kv, read_kv_file, ExperimentConfig};
use crate::error::{HarnessError, Result};

/// Fixed-time gradient flows: simulations, settling-time sweeps, saddle
/// evasion, min-max dynamics and property checks.
#[derive(Debug, Parser)]
#[command(name = "genflow", version)]
pub struct Cli {
    /// simulate | settling | evade | minimax | check
    #[arg(long)]
    pub experiment: Option<String>,
    /// quadratic | saddle | logistic | pl_nonconvex | quadratic_game
    #[arg(long)]
    pub problem: Option<String>,
    /// gradient | genflow | fxts | genflow_m
    #[arg(long)]
    pub flow: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long = "max-steps")]
    pub max_steps: Option<String>,
    #[arg(long = "grad-tol")]
    pub grad_tol: Option<String>,
    /// Comma-separated initial point.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// Flat `key = value` config file, applied before the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` assignments (any config key), applied last.
    #[arg(long = "set", value_name = "KEY=VALUE", allow_hyphen_values = true)]
    pub set: Vec<String>,
    /// Test hook for `check`: flip_exponent | gradient_sign
    #[arg(long)]
    pub fault: Option<String>,
    /// List config keys and exit.
    #[arg(long)]
    pub keys: bool,
}

impl Cli {
    /// Layered `(key, value)` pairs: config file, then flags, then `--set`.
    pub fn pairs(&self) -> Result<Vec<(String, String)>> {
        let mut pairs = match &self.config {
            Some(path) => read_kv_file(path)?,
            None => Vec::new(),
        };
        let flags: [(&str, &Option<String>); 13] = [
            ("experiment", &self.experiment),
            ("problem", &self.problem),
            ("flow", &self.flow),
            ("p", &self.p),
            ("q", &self.q),
            ("step", &self.step),
            ("beta", &self.beta),
            ("max_steps", &self.max_steps),
            ("grad_tol", &self.grad_tol),
            ("x0", &self.x0),
            ("seed", &self.seed),
            ("format", &self.format),
            ("fault", &self.fault),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                pairs.push((k.to_string(), v.clone()));
            }
        }
        if let Some(out) = &self.out {
            pairs.push(("out".into(), out.display().to_string()));
        }
        for s in &self.set {
            let mut parsed = parse_kv(s)?;
            if parsed.len() != 1 {
                return Err(HarnessError::usage(format!("--set expects KEY=VALUE, got `{s}`")));
            }
            pairs.push(parsed.remove(0));
        }
        Ok(pairs)
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_pairs(self.pairs()?)
    }
}
