use genflow_core::analysis::{estimate_taylor_constants, theorem3_evasion_bound, EvasionCertificate};
use genflow_core::numerics::{symmetric_eigen, time_in_ball};
use genflow_core::problems::SaddleTestFunction;
use genflow_core::Problem;
use rayon::prelude::*;
use serde::Serialize;

use super::{iterations_to_tol, run_flow, Outcome};
use crate::config::{ExperimentConfig, FlowKind, Format, ProblemKind};
use crate::error::{HarnessError, Result};
use crate::formats::{fmt_f64, table_csv, to_json};
use crate::setup::saddle_starts;

/// Largest coordinate magnitude of the sampled starts; keeps them inside the
/// ball of radius 0.5 around the saddle.
pub const START_HALF_WIDTH: f64 = 0.35;

#[derive(Debug, Clone, Serialize)]
pub struct TaylorRecord {
    pub k1: f64,
    pub k2: f64,
    pub radius: f64,
    pub max_value_ratio: f64,
    pub min_gradient_ratio: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusRecord {
    pub r: f64,
    pub bound: f64,
    pub bound_p: f64,
    pub bound_q: f64,
    /// `r` lies within the radius on which `k1`, `k2` were certified.
    pub certified: bool,
    pub max_time_in_ball: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateRecord {
    pub n: usize,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub r_hat: f64,
    pub k3: f64,
    pub k4: f64,
    pub flat_bound: f64,
}

impl From<&EvasionCertificate> for CertificateRecord {
    fn from(c: &EvasionCertificate) -> Self {
        CertificateRecord {
            n: c.n,
            lambda_max: c.lambda_max,
            lambda_min: c.lambda_min,
            r_hat: c.r_hat,
            k3: c.k3,
            k4: c.k4,
            flat_bound: c.flat_bound(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvadeRun {
    pub run: usize,
    pub x0: [f64; 2],
    /// Started on (or within `manifold_gap` of) the stable manifold `y = 0`.
    pub excluded: bool,
    pub iterations_genflow: Option<u64>,
    pub iterations_genflow_m: Option<u64>,
    pub iterations_gradient: Option<u64>,
    /// Gradient-descent iterations over GenFlow(M) iterations.
    pub iteration_ratio: Option<f64>,
    pub final_point: [f64; 2],
    pub time_in_ball: Vec<f64>,
    pub monotone_in_r: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvadeReport {
    pub p: f64,
    pub q: f64,
    pub step: f64,
    pub beta: f64,
    pub grad_tol: f64,
    pub seed: u64,
    pub taylor: TaylorRecord,
    pub certificate: CertificateRecord,
    pub radii: Vec<RadiusRecord>,
    pub runs: Vec<EvadeRun>,
    pub excluded: usize,
    pub min_iteration_ratio: Option<f64>,
    pub required_iteration_ratio: f64,
    pub iterations_passed: bool,
    pub bounds_passed: bool,
    pub monotone_passed: bool,
    pub passed: bool,
}

pub fn report(cfg: &ExperimentConfig) -> Result<EvadeReport> {
    if cfg.problem != ProblemKind::Saddle {
        return Err(HarnessError::usage("the evade experiment runs on problem = saddle"));
    }
    if cfg.radii.is_empty() {
        return Err(HarnessError::usage("radii must not be empty"));
    }
    let f = SaddleTestFunction::new();
    let saddle = SaddleTestFunction::SADDLE;
    let hess = f.hessian(&saddle).expect("test function has a Hessian");
    let spec = symmetric_eigen(&hess)?;
    let taylor = estimate_taylor_constants(&f, &saddle, &spec, cfg.taylor_radius, cfg.grid_density)?;
    let params = cfg.flow_params()?;
    let certs = cfg
        .radii
        .iter()
        .map(|&r| Ok(theorem3_evasion_bound(&spec, taylor.k1, taylor.k2, f.dim(), r, &params)?.with_valid_radius(taylor.radius)))
        .collect::<Result<Vec<_>>>()?;

    let with_flow = |flow: FlowKind| {
        let mut c = cfg.clone();
        c.flow = flow;
        c.scheme = crate::config::SchemeKind::Euler;
        c.integrator()
    };
    let integ_gf = with_flow(FlowKind::GenFlow)?;
    let integ_m = with_flow(FlowKind::GenFlowMomentum)?;
    let integ_gd = with_flow(FlowKind::Gradient)?;

    let starts = match &cfg.inits {
        Some(v) => v.clone(),
        None => saddle_starts(cfg.seed, cfg.count, cfg.manifold_gap, START_HALF_WIDTH),
    };
    let runs = starts
        .par_iter()
        .enumerate()
        .map(|(run, x0)| {
            let excluded = x0[1].abs() < cfg.manifold_gap;
            let gf = run_flow(&f, FlowKind::GenFlow, &params, &integ_gf, x0)?;
            let times = cfg.radii.iter().map(|&r| Ok(time_in_ball(&gf, &saddle, r)?)).collect::<Result<Vec<f64>>>()?;
            let (it_m, it_gd) = if excluded {
                (None, None)
            } else {
                let m = run_flow(&f, FlowKind::GenFlowMomentum, &params, &integ_m, x0)?;
                let gd = run_flow(&f, FlowKind::Gradient, &params, &integ_gd, x0)?;
                (iterations_to_tol(&m, cfg.grad_tol, cfg.step), iterations_to_tol(&gd, cfg.grad_tol, cfg.step))
            };
            let mut order: Vec<usize> = (0..cfg.radii.len()).collect();
            order.sort_by(|&a, &b| cfg.radii[a].total_cmp(&cfg.radii[b]));
            let monotone_in_r = order.windows(2).all(|w| times[w[0]] <= times[w[1]]);
            let last = gf.last();
            Ok(EvadeRun {
                run,
                x0: *x0,
                excluded,
                iterations_genflow: iterations_to_tol(&gf, cfg.grad_tol, cfg.step),
                iterations_genflow_m: it_m,
                iterations_gradient: it_gd,
                iteration_ratio: match (it_gd, it_m) {
                    (Some(gd), Some(m)) if m > 0 => Some(gd as f64 / m as f64),
                    _ => None,
                },
                final_point: [last.x[0], last.x[1]],
                time_in_ball: times,
                monotone_in_r,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let kept: Vec<&EvadeRun> = runs.iter().filter(|r| !r.excluded).collect();
    let radii: Vec<RadiusRecord> = cfg
        .radii
        .iter()
        .zip(&certs)
        .enumerate()
        .map(|(i, (&r, c))| {
            let max_time = kept.iter().map(|run| run.time_in_ball[i]).fold(0.0, f64::max);
            RadiusRecord {
                r,
                bound: c.bound,
                bound_p: c.bound_p,
                bound_q: c.bound_q,
                certified: r <= taylor.radius,
                max_time_in_ball: max_time,
                passed: max_time <= c.bound,
            }
        })
        .collect();
    let ratios: Option<Vec<f64>> = kept.iter().map(|r| r.iteration_ratio).collect();
    let min_iteration_ratio = ratios.and_then(|v| v.into_iter().reduce(f64::min));
    let iterations_passed = !kept.is_empty()
        && min_iteration_ratio.is_some_and(|r| r >= cfg.iteration_ratio)
        && kept.iter().all(|r| r.iterations_genflow.is_some());
    let bounds_passed = radii.iter().all(|r| r.passed);
    let monotone_passed = kept.iter().all(|r| r.monotone_in_r);
    let passed = iterations_passed && bounds_passed && monotone_passed;
    let t = &taylor;
    let report = EvadeReport {
        p: cfg.p,
        q: cfg.q,
        step: cfg.step,
        beta: cfg.beta,
        grad_tol: cfg.grad_tol,
        seed: cfg.seed,
        taylor: TaylorRecord {
            k1: t.k1,
            k2: t.k2,
            radius: t.radius,
            max_value_ratio: t.max_value_ratio,
            min_gradient_ratio: t.min_gradient_ratio,
            points: t.points,
        },
        certificate: CertificateRecord::from(&certs[0]),
        radii,
        excluded: runs.len() - kept.len(),
        runs,
        min_iteration_ratio,
        required_iteration_ratio: cfg.iteration_ratio,
        iterations_passed,
        bounds_passed,
        monotone_passed,
        passed,
    };
    Ok(report)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let report = report(cfg)?;
    let passed = report.passed;
    let summary = format!(
        "evade: {} starts ({} excluded), worst time/bound {}, min GD/GenFlow(M) iteration ratio {}, {}",
        report.runs.len(),
        report.excluded,
        fmt_f64(report.radii.iter().map(|r| r.max_time_in_ball / r.bound).fold(0.0, f64::max)),
        report.min_iteration_ratio.map_or("n/a".into(), fmt_f64),
        if passed { "PASS" } else { "FAIL" }
    );
    let file = match cfg.format {
        Format::Json => ("evade.json".to_string(), to_json(&report)?),
        Format::Csv => ("evade.csv".to_string(), evade_table(&report, &cfg.radii)?),
    };
    Ok(Outcome {
        files: vec![file],
        passed,
        summary,
    })
}

fn evade_table(report: &EvadeReport, radii: &[f64]) -> Result<String> {
    let mut header: Vec<String> = [
        "run", "x", "y", "excluded", "iterations_genflow", "iterations_genflow_m", "iterations_gradient", "iteration_ratio",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(radii.iter().map(|r| format!("time_in_ball_{}", fmt_f64(*r))));
    let opt = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
    let rows: Vec<Vec<String>> = report
        .runs
        .iter()
        .map(|r| {
            let mut row = vec![
                r.run.to_string(),
                fmt_f64(r.x0[0]),
                fmt_f64(r.x0[1]),
                r.excluded.to_string(),
                opt(r.iterations_genflow),
                opt(r.iterations_genflow_m),
                opt(r.iterations_gradient),
                r.iteration_ratio.map(fmt_f64).unwrap_or_default(),
            ];
            row.extend(r.time_in_ball.iter().map(|t| fmt_f64(*t)));
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    table_csv(&header, &rows)
}
