//! One module per experiment. Each returns an [`Outcome`]: the files to write
//! (or print) and whether the experiment's acceptance check passed.

pub mod check;
pub mod evade;
pub mod minimax;
pub mod settling;
pub mod simulate;

use genflow_core::integrators::Trajectory;
use genflow_core::{Flow, FlowParams, IntegratorConfig, Problem};

use crate::config::{Experiment, ExperimentConfig, FlowKind};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `(file name, contents)` in output order.
    pub files: Vec<(String, String)>,
    pub passed: bool,
    /// One-line human summary.
    pub summary: String,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::Simulate => simulate::run(cfg),
        Experiment::Settling => settling::run(cfg),
        Experiment::Evade => evade::run(cfg),
        Experiment::Minimax => minimax::run(cfg),
        Experiment::Check => check::run(cfg),
    }
}

/// Run `flow` (or the momentum flow) on `problem` from `x0`.
pub(crate) fn run_flow(
    problem: &dyn Problem,
    flow: FlowKind,
    params: &FlowParams,
    integ: &IntegratorConfig,
    x0: &[f64],
) -> Result<Trajectory> {
    use genflow_core::integrators::{integrate, integrate_momentum};
    Ok(match flow {
        FlowKind::Gradient => integrate(problem, Flow::GradientFlow, params, integ, x0)?,
        FlowKind::GenFlow => integrate(problem, Flow::GenFlow, params, integ, x0)?,
        FlowKind::Fxts => integrate(problem, Flow::FxtsGf, params, integ, x0)?,
        FlowKind::GenFlowMomentum => integrate_momentum(problem, params, integ, x0, None)?,
    })
}

/// First recorded time with `‖∇f‖ ≤ tol`, in steps of size `step`.
pub(crate) fn iterations_to_tol(traj: &Trajectory, tol: f64, step: f64) -> Option<u64> {
    traj.samples().iter().find(|s| s.grad_norm <= tol).map(|s| (s.t / step).round() as u64)
}
