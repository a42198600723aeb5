//! Experiment configuration: presets, a flat `key = value` file format, and
//! overrides from the command line.
//!
//! Values are layered: the preset for the chosen experiment, then the config
//! file, then command-line flags. Every flag is an alias for a file key, so both
//! go through [`ExperimentConfig::set`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use genflow_core::flows::FlowParams;
use genflow_core::integrators::{IntegratorConfig, MomentumUpdate, Scheme};

use crate::error::{HarnessError, Result};

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($(#[$vm:meta])* $variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
        pub enum $name { $($(#[$vm])* #[serde(rename = $text)] $variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = HarnessError;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($text => Ok($name::$variant),)+
                    other => Err(HarnessError::usage(format!(
                        "unknown {} `{}` (expected one of: {})",
                        stringify!($name),
                        other,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(Experiment {
    Simulate => "simulate",
    Settling => "settling",
    Evade => "evade",
    Minimax => "minimax",
    Check => "check",
});

keyword_enum!(ProblemKind {
    Quadratic => "quadratic",
    Saddle => "saddle",
    Logistic => "logistic",
    PlNonconvex => "pl_nonconvex",
    QuadraticGame => "quadratic_game",
});

keyword_enum!(FlowKind {
    Gradient => "gradient",
    GenFlow => "genflow",
    Fxts => "fxts",
    GenFlowMomentum => "genflow_m",
});

keyword_enum!(SchemeKind {
    Euler => "euler",
    Rk4 => "rk4",
});

keyword_enum!(Format {
    Csv => "csv",
    Json => "json",
});

keyword_enum!(
    /// Deliberate defects for exercising the failure path of `check`.
    Fault {
        /// Negate the exponent of the dimension factor in the power inequality.
        FlipExponent => "flip_exponent",
        /// Report the negated analytic gradient in the finite-difference suite.
        GradientSign => "gradient_sign",
    }
);

keyword_enum!(MomentumKind {
    Damped => "damped",
    Literal => "literal",
});

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub problem: ProblemKind,
    pub flow: FlowKind,
    pub p: f64,
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
    pub eps_guard: f64,
    pub literal: bool,
    pub step: f64,
    pub beta: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    pub record_stride: usize,
    pub scheme: SchemeKind,
    pub max_displacement: Option<f64>,
    pub momentum_update: MomentumKind,
    pub dim: usize,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    pub norms: Vec<f64>,
    pub seed: u64,
    pub settle_tol: f64,
    /// Allowed ratio of measured settling time to the bound; flow-dependent when unset.
    pub bound_factor: Option<f64>,
    /// Smallest allowed `min/max` ratio between settling times.
    pub uniformity: f64,
    pub control: bool,
    pub slack: f64,
    pub count: usize,
    pub radii: Vec<f64>,
    pub taylor_radius: f64,
    pub grid_density: usize,
    /// Initial points with `|y|` below this are on (or too close to) the stable
    /// manifold of the saddle and are excluded.
    pub manifold_gap: f64,
    pub iteration_ratio: f64,
    pub inits: Option<Vec<[f64; 2]>>,
    pub mu1: f64,
    pub mu2: f64,
    pub l2: f64,
    pub samples: usize,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub fault: Option<Fault>,
}

/// Every key accepted in a config file, with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("experiment", "simulate | settling | evade | minimax | check"),
    ("problem", "quadratic | saddle | logistic | pl_nonconvex | quadratic_game"),
    ("flow", "gradient | genflow | fxts | genflow_m"),
    ("p", "first exponent, > 2"),
    ("q", "second exponent, in (1, 2)"),
    ("c1", "gain of the p-term"),
    ("c2", "gain of the q-term"),
    ("eps_guard", "denominator guard in literal mode"),
    ("literal", "true: quotient form with eps_guard"),
    ("step", "step size"),
    ("beta", "momentum parameter in (0, 1)"),
    ("max_steps", "step budget per run"),
    ("grad_tol", "stop when the gradient norm is at most this"),
    ("record_stride", "record every k-th step"),
    ("scheme", "euler | rk4"),
    ("max_displacement", "cap on the per-step displacement, or `none`"),
    ("momentum_update", "damped | literal"),
    ("dim", "problem dimension (quadratic, logistic features, game blocks)"),
    ("x0", "comma-separated initial point"),
    ("y0", "comma-separated initial y (quadratic_game)"),
    ("norms", "comma-separated initial norms"),
    ("seed", "RNG seed"),
    ("settle_tol", "settling tolerance on the distance to the optimum"),
    ("bound_factor", "allowed measured/bound ratio, or `none` for the flow default"),
    ("uniformity", "smallest allowed min/max ratio of settling times"),
    ("control", "run the gradient-flow control in `settling`"),
    ("slack", "slack constant of the Lyapunov decay check"),
    ("count", "number of initial points in `evade`"),
    ("radii", "comma-separated ball radii in `evade`"),
    ("taylor_radius", "starting radius for the Taylor-constant estimate"),
    ("grid_density", "grid points per axis for the Taylor-constant estimate"),
    ("manifold_gap", "exclude `evade` starts with |y| below this"),
    ("iteration_ratio", "required gradient-descent / momentum iteration ratio"),
    ("inits", "explicit `evade` starts: `x,y;x,y;...`"),
    ("mu1", "x-modulus of quadratic_game"),
    ("mu2", "y-modulus of quadratic_game"),
    ("l2", "logistic ridge weight"),
    ("samples", "synthetic logistic sample count"),
    ("data", "logistic CSV (header label,f1..fd)"),
    ("out", "output directory"),
    ("format", "csv | json"),
    ("fault", "flip_exponent | gradient_sign, or `none`"),
];

impl ExperimentConfig {
    fn base(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            problem: ProblemKind::Quadratic,
            flow: FlowKind::GenFlow,
            p: 2.1,
            q: 1.99,
            c1: 1.0,
            c2: 1.0,
            eps_guard: FlowParams::DEFAULT_EPS_GUARD,
            literal: false,
            step: 1e-3,
            beta: 0.9,
            max_steps: 1_000_000,
            grad_tol: 1e-7,
            record_stride: 1,
            scheme: SchemeKind::Euler,
            max_displacement: None,
            momentum_update: MomentumKind::Damped,
            dim: 2,
            x0: None,
            y0: None,
            norms: vec![1.0, 1e2, 1e4],
            seed: 42,
            settle_tol: 1e-6,
            bound_factor: None,
            uniformity: 0.5,
            control: true,
            slack: 10.0,
            count: 50,
            radii: vec![0.01, 0.02, 0.05, 0.1],
            taylor_radius: 0.1,
            grid_density: 100,
            manifold_gap: 1e-3,
            iteration_ratio: 6.0,
            inits: None,
            mu1: 1.0,
            mu2: 1.0,
            l2: 1e-2,
            samples: 200,
            data: None,
            out: None,
            format: Format::Json,
            fault: None,
        }
    }

    /// Defaults for an experiment.
    pub fn preset(experiment: Experiment) -> Self {
        let mut c = Self::base(experiment);
        match experiment {
            Experiment::Simulate | Experiment::Check => {}
            Experiment::Settling => {
                c.dim = 10;
                c.p = 3.0;
                c.q = 1.5;
                c.step = 1e-4;
                c.beta = 0.5;
                c.max_steps = 400_000;
            }
            Experiment::Evade => {
                c.problem = ProblemKind::Saddle;
                c.p = 3.0;
                c.q = 1.8;
                c.step = 2e-3;
                c.beta = 0.5;
                c.grad_tol = 1e-5;
                c.max_steps = 400_000;
            }
            Experiment::Minimax => {
                c.problem = ProblemKind::QuadraticGame;
                c.p = 3.0;
                c.q = 1.5;
                c.step = 1e-4;
                c.max_displacement = Some(1e3);
            }
        }
        c
    }

    /// Build a config from `(key, value)` pairs layered in order over the preset
    /// of the experiment they name. The last `experiment` entry wins.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(k, v)| (k.as_ref().trim().to_string(), v.as_ref().trim().to_string()))
            .collect();
        let experiment = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "experiment")
            .ok_or_else(|| HarnessError::usage("no experiment given (use --experiment or `experiment = ...`)"))?
            .1
            .parse()?;
        let mut cfg = Self::preset(experiment);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assign one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "experiment" => self.experiment = v.parse()?,
            "problem" => self.problem = v.parse()?,
            "flow" => self.flow = v.parse()?,
            "p" => self.p = num(key, v)?,
            "q" => self.q = num(key, v)?,
            "c1" => self.c1 = num(key, v)?,
            "c2" => self.c2 = num(key, v)?,
            "eps_guard" => self.eps_guard = num(key, v)?,
            "literal" => self.literal = boolean(key, v)?,
            "step" => self.step = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "max_steps" => self.max_steps = num(key, v)?,
            "grad_tol" => self.grad_tol = num(key, v)?,
            "record_stride" => self.record_stride = num(key, v)?,
            "scheme" => self.scheme = v.parse()?,
            "max_displacement" => self.max_displacement = optional(key, v)?,
            "momentum_update" => self.momentum_update = v.parse()?,
            "dim" => self.dim = num(key, v)?,
            "x0" => self.x0 = Some(list(key, v)?),
            "y0" => self.y0 = Some(list(key, v)?),
            "norms" => self.norms = list(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "settle_tol" => self.settle_tol = num(key, v)?,
            "bound_factor" => self.bound_factor = optional(key, v)?,
            "uniformity" => self.uniformity = num(key, v)?,
            "control" => self.control = boolean(key, v)?,
            "slack" => self.slack = num(key, v)?,
            "count" => self.count = num(key, v)?,
            "radii" => self.radii = list(key, v)?,
            "taylor_radius" => self.taylor_radius = num(key, v)?,
            "grid_density" => self.grid_density = num(key, v)?,
            "manifold_gap" => self.manifold_gap = num(key, v)?,
            "iteration_ratio" => self.iteration_ratio = num(key, v)?,
            "inits" => self.inits = Some(pairs(key, v)?),
            "mu1" => self.mu1 = num(key, v)?,
            "mu2" => self.mu2 = num(key, v)?,
            "l2" => self.l2 = num(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "data" => self.data = Some(PathBuf::from(v)),
            "out" => self.out = Some(PathBuf::from(v)),
            "format" => self.format = v.parse()?,
            "fault" => self.fault = if v == "none" { None } else { Some(v.parse()?) },
            other => return Err(HarnessError::usage(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |e: genflow_core::Error| HarnessError::usage(e.to_string());
        self.flow_params().map_err(|e| match e {
            HarnessError::Core(c) => usage(c),
            other => other,
        })?;
        self.integrator()?.validate().map_err(usage)?;
        if self.dim == 0 {
            return Err(HarnessError::usage("dim must be positive"));
        }
        if self.norms.is_empty() || self.norms.iter().any(|n| !(n.is_finite() && *n >= 0.0)) {
            return Err(HarnessError::usage("norms must be a non-empty list of non-negative numbers"));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(HarnessError::usage("radii must be positive"));
        }
        if !(self.settle_tol > 0.0) {
            return Err(HarnessError::usage("settle_tol must be positive"));
        }
        Ok(())
    }

    pub fn flow_params(&self) -> Result<FlowParams> {
        Ok(FlowParams::new(self.p, self.q)?
            .with_gains(self.c1, self.c2)?
            .with_eps_guard(self.eps_guard)?
            .literal_quotient(self.literal))
    }

    /// Integrator settings for the configured flow (momentum scheme for `genflow_m`).
    pub fn integrator(&self) -> Result<IntegratorConfig> {
        let base = match (self.flow, self.scheme) {
            (FlowKind::GenFlowMomentum, _) => IntegratorConfig::momentum(self.step, self.beta),
            (_, SchemeKind::Euler) => IntegratorConfig::euler(self.step),
            (_, SchemeKind::Rk4) => IntegratorConfig::rk4(self.step),
        };
        let mut cfg = base
            .with_max_steps(self.max_steps)
            .with_grad_tol(self.grad_tol)
            .with_record_stride(self.record_stride)
            .with_max_displacement(self.max_displacement)
            .with_momentum_update(match self.momentum_update {
                MomentumKind::Damped => MomentumUpdate::Damped,
                MomentumKind::Literal => MomentumUpdate::Literal,
            });
        cfg.momentum_beta = self.beta;
        Ok(cfg)
    }

    pub fn with_scheme(&self, scheme: Scheme) -> Result<IntegratorConfig> {
        let mut cfg = self.integrator()?;
        cfg.scheme = scheme;
        Ok(cfg)
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| HarnessError::usage(format!("`{key}`: cannot parse `{v}`")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(HarnessError::usage(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn optional(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "none" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn pairs(key: &str, v: &str) -> Result<Vec<[f64; 2]>> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let xy = list(key, s)?;
            <[f64; 2]>::try_from(xy).map_err(|_| HarnessError::usage(format!("`{key}`: each entry needs two numbers")))
        })
        .collect()
}

/// Parse a flat config document: one `key = value` per line, `#` starts a
/// comment, blank lines are ignored.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| HarnessError::Format {
            what: "config",
            detail: format!("line {}: expected `key = value`", lineno + 1),
        })?;
        let k = k.trim();
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(HarnessError::usage(format!("config line {}: unknown key `{k}`", lineno + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_kv_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_kv(&text)
}
