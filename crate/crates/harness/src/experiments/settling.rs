use genflow_core::analysis::{
    lyapunov_decay_check, measure_settling_time, theorem1_coefficients, theorem2_coefficients, LyapunovSelector,
    SettlingBound,
};
use rayon::prelude::*;
use serde::Serialize;

use super::simulate::BoundRecord;
use super::{run_flow, Outcome};
use crate::config::{ExperimentConfig, FlowKind, Format};
use crate::error::{HarnessError, Result};
use crate::formats::{fmt_f64, opt_f64, table_csv, to_json};
use crate::setup::{build_problem, offset, rng, unit_direction};

#[derive(Debug, Clone, Serialize)]
pub struct SettlingRun {
    pub run: usize,
    pub flow: &'static str,
    pub initial_norm: f64,
    pub settling_time: Option<f64>,
    pub terminated_by: &'static str,
    pub steps: usize,
    /// `settling_time ≤ bound_factor · t_bar`; absent without a bound.
    pub within_bound: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayRecord>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayRecord {
    pub checked: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub worst_time: f64,
    pub slack_constant: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SettlingReport {
    pub problem: &'static str,
    pub flow: &'static str,
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub step: f64,
    pub settle_tol: f64,
    pub direction: Vec<f64>,
    pub bound: Option<BoundRecord>,
    pub bound_factor: Option<f64>,
    pub runs: Vec<SettlingRun>,
    /// `min/max` of the settling times; absent if any run did not settle.
    pub uniformity_ratio: Option<f64>,
    pub uniformity_passed: bool,
    pub bound_passed: bool,
    pub decay_passed: bool,
    pub control: Vec<SettlingRun>,
    /// Control settling times strictly increase with the initial norm.
    pub control_increasing: Option<bool>,
    pub passed: bool,
}

fn default_factor(flow: FlowKind) -> Option<f64> {
    match flow {
        FlowKind::GenFlow => Some(1.1),
        FlowKind::GenFlowMomentum => Some(1.2),
        _ => None,
    }
}

pub fn report(cfg: &ExperimentConfig) -> Result<SettlingReport> {
    let problem = build_problem(cfg)?;
    let n = problem.dim();
    let star = problem
        .x_star()
        .ok_or_else(|| HarnessError::usage(format!("settling needs a known minimizer; `{}` has none", problem.name())))?;
    let params = cfg.flow_params()?;
    let integ = cfg.integrator()?;
    let bound: Option<SettlingBound> = match (cfg.flow, problem.pl_modulus()) {
        (FlowKind::GenFlow, Some(mu)) => Some(theorem1_coefficients(mu, n, &params)?),
        (FlowKind::GenFlowMomentum, Some(mu)) => Some(theorem2_coefficients(mu, n, &params)?),
        _ => None,
    };
    let factor = cfg.bound_factor.or_else(|| default_factor(cfg.flow)).filter(|_| bound.is_some());
    let direction = match &cfg.x0 {
        Some(x) if x.len() == n => {
            let d: Vec<f64> = x.iter().zip(&star).map(|(a, b)| a - b).collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(HarnessError::usage("x0 must differ from the minimizer to define a direction"));
            }
            d.into_iter().map(|v| v / norm).collect()
        }
        Some(x) => return Err(HarnessError::usage(format!("x0 has {} entries, problem needs {n}", x.len()))),
        None => unit_direction(&mut rng(cfg.seed), n),
    };

    let sweep = |flow: FlowKind, integ: &genflow_core::IntegratorConfig| -> Result<Vec<SettlingRun>> {
        cfg.norms
            .par_iter()
            .enumerate()
            .map(|(run, &norm)| {
                let x0 = offset(&star, &direction, norm);
                let traj = run_flow(problem.as_ref(), flow, &params, integ, &x0)?;
                let settling_time = measure_settling_time(&traj, &star, cfg.settle_tol)?;
                let within_bound = match (bound, factor) {
                    (Some(b), Some(k)) if flow == cfg.flow => Some(settling_time.is_some_and(|t| t <= k * b.t_bar)),
                    _ => None,
                };
                let decay = match (bound, flow) {
                    (Some(b), FlowKind::GenFlow) => {
                        let r = lyapunov_decay_check(&traj, &b, LyapunovSelector::Recorded, cfg.slack)?;
                        Some(DecayRecord {
                            checked: r.checked,
                            violations: r.violations,
                            worst_margin: r.worst_margin,
                            worst_time: r.worst_time,
                            slack_constant: r.slack_constant,
                        })
                    }
                    _ => None,
                };
                Ok(SettlingRun {
                    run,
                    flow: flow.as_str(),
                    initial_norm: norm,
                    settling_time,
                    terminated_by: traj.terminated_by().as_str(),
                    steps: traj.steps(),
                    within_bound,
                    decay,
                })
            })
            .collect::<Result<Vec<_>>>()
    };

    let runs = sweep(cfg.flow, &integ)?;
    let control = if cfg.control && cfg.flow != FlowKind::Gradient {
        let mut c = cfg.clone();
        c.flow = FlowKind::Gradient;
        sweep(FlowKind::Gradient, &c.integrator()?)?
    } else {
        Vec::new()
    };

    let times: Option<Vec<f64>> = runs.iter().map(|r| r.settling_time).collect();
    let uniformity_ratio = times.as_ref().map(|t| {
        let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = t.iter().cloned().fold(0.0, f64::max);
        if hi == 0.0 {
            1.0
        } else {
            lo / hi
        }
    });
    let uniformity_passed = uniformity_ratio.is_some_and(|r| r >= cfg.uniformity);
    let bound_passed = runs.iter().all(|r| r.within_bound != Some(false));
    let decay_passed = runs.iter().all(|r| r.decay.is_none_or(|d| d.violations == 0));
    let control_increasing = (!control.is_empty()).then(|| {
        let t: Option<Vec<f64>> = control.iter().map(|r| r.settling_time).collect();
        t.is_some_and(|t| t.windows(2).all(|w| w[1] > w[0]))
    });
    let passed = uniformity_passed && bound_passed && decay_passed && control_increasing != Some(false);

    let report = SettlingReport {
        problem: problem.name(),
        flow: cfg.flow.as_str(),
        dim: n,
        p: cfg.p,
        q: cfg.q,
        step: cfg.step,
        settle_tol: cfg.settle_tol,
        direction,
        bound: bound.map(BoundRecord::from),
        bound_factor: factor,
        runs,
        uniformity_ratio,
        uniformity_passed,
        bound_passed,
        decay_passed,
        control,
        control_increasing,
        passed,
    };
    Ok(report)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let report = report(cfg)?;
    let passed = report.passed;
    let summary = format!(
        "settling: {} on {} (n = {}), times {:?}, t_bar {}, uniformity {}, {}",
        report.flow,
        report.problem,
        report.dim,
        report.runs.iter().map(|r| r.settling_time).collect::<Vec<_>>(),
        report.bound.map_or("n/a".into(), |b| fmt_f64(b.t_bar)),
        report.uniformity_ratio.map_or("n/a".into(), fmt_f64),
        if passed { "PASS" } else { "FAIL" }
    );
    let file = match cfg.format {
        Format::Json => ("settling.json".to_string(), to_json(&report)?),
        Format::Csv => ("settling.csv".to_string(), settling_table(&report)?),
    };
    Ok(Outcome {
        files: vec![file],
        passed,
        summary,
    })
}

fn settling_table(r: &SettlingReport) -> Result<String> {
    let t_bar = opt_f64(r.bound.map(|b| b.t_bar));
    let rows: Vec<Vec<String>> = r
        .runs
        .iter()
        .chain(&r.control)
        .map(|run| {
            vec![
                run.run.to_string(),
                run.flow.to_string(),
                fmt_f64(run.initial_norm),
                opt_f64(run.settling_time),
                if run.flow == r.flow { t_bar.clone() } else { String::new() },
                run.within_bound.map(|b| b.to_string()).unwrap_or_default(),
                run.decay.map(|d| d.violations.to_string()).unwrap_or_default(),
                run.terminated_by.to_string(),
                run.steps.to_string(),
            ]
        })
        .collect();
    table_csv(
        &["run", "flow", "initial_norm", "settling_time", "t_bar", "within_bound", "decay_violations", "terminated_by", "steps"],
        &rows,
    )
}
