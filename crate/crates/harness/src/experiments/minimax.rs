use genflow_core::analysis::{max_lyapunov_increase, measure_settling_time, theorem4_coefficients};
use genflow_core::integrators::integrate_minimax;
use genflow_core::MinimaxProblem;
use rayon::prelude::*;
use serde::Serialize;

use super::simulate::BoundRecord;
use super::Outcome;
use crate::config::{ExperimentConfig, FlowKind, Format};
use crate::error::{HarnessError, Result};
use crate::formats::{fmt_f64, opt_f64, table_csv, to_json};
use crate::setup::{build_game, offset, rng, unit_direction};

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxRun {
    pub run: usize,
    pub initial_norm: f64,
    pub settling_time: Option<f64>,
    pub within_bound: bool,
    /// Largest step-to-step increase of `½‖∇G‖²`; `≤ 0` when non-increasing.
    pub max_lyapunov_increase: f64,
    pub monotone: bool,
    pub terminated_by: &'static str,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxReport {
    pub problem: &'static str,
    pub mu1: f64,
    pub mu2: f64,
    pub p: f64,
    pub q: f64,
    pub step: f64,
    pub max_displacement: Option<f64>,
    pub settle_tol: f64,
    pub direction: Vec<f64>,
    pub bound: BoundRecord,
    pub bound_factor: f64,
    pub runs: Vec<MinimaxRun>,
    pub passed: bool,
}

pub fn report(cfg: &ExperimentConfig) -> Result<MinimaxReport> {
    if cfg.flow != FlowKind::GenFlow {
        return Err(HarnessError::usage("min-max dynamics run with flow = genflow"));
    }
    let game = build_game(cfg)?;
    let params = cfg.flow_params()?;
    let integ = cfg.integrator()?;
    let (n, m) = game.dims();
    let (xs, ys) = game.saddle().expect("quadratic game has a known saddle");
    let star = [xs, ys].concat();
    let (mu1, mu2) = game.moduli();
    let bound = theorem4_coefficients(mu1, mu2, &params)?;
    let factor = cfg.bound_factor.unwrap_or(1.1);
    let direction = unit_direction(&mut rng(cfg.seed), n + m);

    let runs = cfg
        .norms
        .par_iter()
        .enumerate()
        .map(|(run, &norm)| {
            let z0 = offset(&star, &direction, norm);
            let traj = integrate_minimax(&game, &params, &integ, &z0[..n], &z0[n..])?;
            let settling_time = measure_settling_time(&traj, &star, cfg.settle_tol)?;
            let inc = max_lyapunov_increase(&traj);
            Ok(MinimaxRun {
                run,
                initial_norm: norm,
                settling_time,
                within_bound: settling_time.is_some_and(|t| t <= factor * bound.t_bar),
                max_lyapunov_increase: inc,
                monotone: inc <= 0.0,
                terminated_by: traj.terminated_by().as_str(),
                steps: traj.steps(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = runs.iter().all(|r| r.within_bound && r.monotone);
    let report = MinimaxReport {
        problem: game.name(),
        mu1,
        mu2,
        p: cfg.p,
        q: cfg.q,
        step: cfg.step,
        max_displacement: cfg.max_displacement,
        settle_tol: cfg.settle_tol,
        direction,
        bound: bound.into(),
        bound_factor: factor,
        runs,
        passed,
    };
    Ok(report)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let report = report(cfg)?;
    let passed = report.passed;
    let summary = format!(
        "minimax: {} (dim {}), times {:?}, t_bar {}, {}",
        report.problem,
        report.direction.len() / 2,
        report.runs.iter().map(|r| r.settling_time).collect::<Vec<_>>(),
        fmt_f64(report.bound.t_bar),
        if passed { "PASS" } else { "FAIL" }
    );
    let file = match cfg.format {
        Format::Json => ("minimax.json".to_string(), to_json(&report)?),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .runs
                .iter()
                .map(|r| {
                    vec![
                        r.run.to_string(),
                        fmt_f64(r.initial_norm),
                        opt_f64(r.settling_time),
                        fmt_f64(report.bound.t_bar),
                        r.within_bound.to_string(),
                        fmt_f64(r.max_lyapunov_increase),
                        r.monotone.to_string(),
                        r.terminated_by.to_string(),
                        r.steps.to_string(),
                    ]
                })
                .collect();
            let header = [
                "run", "initial_norm", "settling_time", "t_bar", "within_bound", "max_lyapunov_increase", "monotone",
                "terminated_by", "steps",
            ];
            ("minimax.csv".to_string(), table_csv(&header, &rows)?)
        }
    };
    Ok(Outcome {
        files: vec![file],
        passed,
        summary,
    })
}
