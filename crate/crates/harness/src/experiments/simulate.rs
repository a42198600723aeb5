use genflow_core::analysis::{measure_settling_time, theorem1_coefficients, theorem2_coefficients, theorem4_coefficients, SettlingBound};
use genflow_core::integrators::{integrate_minimax, Trajectory};
use genflow_core::MinimaxProblem;
use serde::Serialize;

use super::{run_flow, Outcome};
use crate::config::{ExperimentConfig, FlowKind, Format, ProblemKind};
use crate::error::{HarnessError, Result};
use crate::formats::{to_json, trajectory_csv_string, trajectory_records};
use crate::setup::{build_game, build_problem, offset, rng, unit_direction};

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct BoundRecord {
    pub a: f64,
    pub b: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub t_bar: f64,
}

impl From<SettlingBound> for BoundRecord {
    fn from(b: SettlingBound) -> Self {
        BoundRecord {
            a: b.a,
            b: b.b,
            gamma1: b.gamma1,
            gamma2: b.gamma2,
            t_bar: b.t_bar,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub problem: &'static str,
    pub flow: &'static str,
    pub x0: Vec<f64>,
    pub terminated_by: &'static str,
    pub steps: usize,
    pub final_f: f64,
    pub final_grad_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settling_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundRecord>,
}

/// Explicit `x0`, or `center + norms[0] · (seeded unit direction)`.
pub(crate) fn initial_point(cfg: &ExperimentConfig, given: Option<&Vec<f64>>, center: &[f64]) -> Result<Vec<f64>> {
    match given {
        Some(x) if x.len() == center.len() => Ok(x.clone()),
        Some(x) => Err(HarnessError::usage(format!("initial point has {} entries, problem needs {}", x.len(), center.len()))),
        None => Ok(offset(center, &unit_direction(&mut rng(cfg.seed), center.len()), cfg.norms[0])),
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let params = cfg.flow_params()?;
    let integ = cfg.integrator()?;
    let (traj, summary) = if cfg.problem == ProblemKind::QuadraticGame {
        if cfg.flow != FlowKind::GenFlow {
            return Err(HarnessError::usage("min-max dynamics run with flow = genflow"));
        }
        let game = build_game(cfg)?;
        let (n, m) = game.dims();
        let (xs, ys) = game.saddle().expect("quadratic game has a known saddle");
        let z0 = match (&cfg.x0, &cfg.y0) {
            (Some(x), Some(y)) => [initial_point(cfg, Some(x), &xs)?, initial_point(cfg, Some(y), &ys)?].concat(),
            (None, None) => initial_point(cfg, None, &[xs.clone(), ys.clone()].concat())?,
            _ => return Err(HarnessError::usage("give both x0 and y0, or neither")),
        };
        let traj = integrate_minimax(&game, &params, &integ, &z0[..n], &z0[n..])?;
        let star = [xs, ys].concat();
        let (mu1, mu2) = game.moduli();
        let bound = theorem4_coefficients(mu1, mu2, &params)?;
        let summary = summarize(cfg, game.name(), z0, &traj, Some(&star), Some(bound))?;
        debug_assert_eq!(star.len(), n + m);
        (traj, summary)
    } else {
        let problem = build_problem(cfg)?;
        let center = problem.x_star().unwrap_or_else(|| vec![0.0; problem.dim()]);
        let x0 = initial_point(cfg, cfg.x0.as_ref(), &center)?;
        let traj = run_flow(problem.as_ref(), cfg.flow, &params, &integ, &x0)?;
        let bound = match (problem.pl_modulus(), cfg.flow) {
            (Some(mu), FlowKind::GenFlow) => Some(theorem1_coefficients(mu, problem.dim(), &params)?),
            (Some(mu), FlowKind::GenFlowMomentum) => Some(theorem2_coefficients(mu, problem.dim(), &params)?),
            _ => None,
        };
        let star = problem.x_star();
        let summary = summarize(cfg, problem.name(), x0, &traj, star.as_deref(), bound)?;
        (traj, summary)
    };
    let trajectory = match cfg.format {
        Format::Csv => ("trajectory.csv".to_string(), trajectory_csv_string(&traj)?),
        Format::Json => ("trajectory.json".to_string(), to_json(&trajectory_records(&traj))?),
    };
    let line = format!(
        "simulate: {} on {} stopped by {} after {} steps, f = {:e}, |grad| = {:e}",
        summary.flow, summary.problem, summary.terminated_by, summary.steps, summary.final_f, summary.final_grad_norm
    );
    Ok(Outcome {
        files: vec![("summary.json".to_string(), to_json(&summary)?), trajectory],
        passed: true,
        summary: line,
    })
}

fn summarize(
    cfg: &ExperimentConfig,
    problem: &'static str,
    x0: Vec<f64>,
    traj: &Trajectory,
    star: Option<&[f64]>,
    bound: Option<SettlingBound>,
) -> Result<SimulateSummary> {
    let last = traj.last();
    let settling_time = match star {
        Some(s) => measure_settling_time(traj, s, cfg.settle_tol)?,
        None => None,
    };
    Ok(SimulateSummary {
        problem,
        flow: cfg.flow.as_str(),
        x0,
        terminated_by: traj.terminated_by().as_str(),
        steps: traj.steps(),
        final_f: last.f,
        final_grad_norm: last.grad_norm,
        settling_time,
        bound: bound.map(BoundRecord::from),
    })
}
