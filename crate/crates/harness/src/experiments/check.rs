//! Property suites run from the command line.

use genflow_core::analysis::{gradient_check, hessian_check, pl_residual, power_inequality_check};
use genflow_core::numerics::{finite_diff_gradient, symmetric_eigen, tilde_distance, Matrix, DEFAULT_FD_STEP};
use genflow_core::problems::{synthetic_clouds, PlNonconvex, Quadratic, QuadraticGame, SaddleTestFunction};
use genflow_core::{MinimaxProblem, Problem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::Outcome;
use crate::config::{ExperimentConfig, Fault, Format};
use crate::error::Result;
use crate::formats::{fmt_f64, table_csv, to_json};
use crate::setup::rng;

pub const POWER_VECTORS: usize = 10_000;
pub const POWER_EXPONENTS: [f64; 5] = [0.3, 0.75, 1.0, 1.5, 3.0];
pub const POWER_TOL: f64 = 1e-12;
pub const GRADIENT_POINTS: usize = 100;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const MATRIX_CASES: usize = 1_000;
pub const EIGEN_TOL: f64 = 1e-10;
pub const PL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub cases: usize,
    pub failures: usize,
    /// Worst observed value of the suite's error measure (see `measure`).
    pub worst: f64,
    pub tolerance: f64,
    pub measure: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub fault: Option<Fault>,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

struct Tally {
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Tally {
            cases: 0,
            failures: 0,
            worst: f64::NEG_INFINITY,
        }
    }

    /// Record an error value; the case fails when `err > tol` (or is NaN).
    fn add(&mut self, err: f64, tol: f64) {
        self.cases += 1;
        if !(err <= tol) {
            self.failures += 1;
        }
        if err > self.worst || err.is_nan() {
            self.worst = err;
        }
    }

    fn finish(self, suite: impl Into<String>, tolerance: f64, measure: &'static str) -> SuiteResult {
        SuiteResult {
            suite: suite.into(),
            cases: self.cases,
            failures: self.failures,
            worst: self.worst,
            tolerance,
            measure,
            passed: self.failures == 0 && self.cases > 0,
        }
    }
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.random_range(-scale..scale);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

fn power_inequality(seed: u64, fault: Option<Fault>) -> Result<SuiteResult> {
    let mut rng = rng(seed);
    let mut tally = Tally::new();
    for k in 0..POWER_VECTORS {
        let n = rng.random_range(1..=16usize);
        let z = uniform_vec(&mut rng, n, -10.0, 10.0);
        let e = POWER_EXPONENTS[k % POWER_EXPONENTS.len()];
        let (lhs, mut rhs) = power_inequality_check(&z, e)?;
        if fault == Some(Fault::FlipExponent) && e > 1.0 {
            rhs *= (n as f64).powf(2.0 * (1.0 - e));
        }
        tally.add(lhs - rhs, POWER_TOL);
    }
    Ok(tally.finish("power_inequality", POWER_TOL, "lhs - rhs"))
}

/// Reports the negated gradient: the fault hook of the gradient suite.
struct SignFlipped<'a>(&'a dyn Problem);

impl Problem for SignFlipped<'_> {
    fn name(&self) -> &'static str {
        self.0.name()
    }
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(x)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.0.gradient_into(x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    }
    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        self.0.hessian(x)
    }
}

fn spd(rng: &mut ChaCha8Rng, n: usize) -> Result<Quadratic> {
    let m = Matrix::from_row_major(n, n, uniform_vec(rng, n * n, -1.0, 1.0))?;
    let mut a = m.transpose().matmul(&m)?;
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    // Symmetrize away rounding in the product.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let b = uniform_vec(rng, n, -1.0, 1.0);
    Ok(Quadratic::new(a, b)?)
}

fn derivative_suites(seed: u64, fault: Option<Fault>) -> Result<Vec<SuiteResult>> {
    let mut rng = rng(seed.wrapping_add(1));
    let problems: Vec<Box<dyn Problem>> = vec![
        Box::new(Quadratic::isotropic(4)?),
        Box::new(spd(&mut rng, 5)?),
        Box::new(SaddleTestFunction::new()),
        Box::new(PlNonconvex::new()),
        Box::new(synthetic_clouds(60, 3, 1e-2, seed)?),
    ];
    let mut out = Vec::new();
    for (idx, p) in problems.iter().enumerate() {
        let flipped = SignFlipped(p.as_ref());
        let target: &dyn Problem = if fault == Some(Fault::GradientSign) { &flipped } else { p.as_ref() };
        let mut grad = Tally::new();
        let mut hess = Tally::new();
        for _ in 0..GRADIENT_POINTS {
            let x = uniform_vec(&mut rng, p.dim(), -2.0, 2.0);
            grad.add(gradient_check(target, &x, DEFAULT_FD_STEP)?, GRADIENT_TOL);
            if let Some(e) = hessian_check(target, &x, DEFAULT_FD_STEP)? {
                hess.add(e, GRADIENT_TOL);
            }
        }
        let tag = format!("{}#{idx}", p.name());
        out.push(grad.finish(format!("gradient/{tag}"), GRADIENT_TOL, "relative FD error"));
        if hess.cases > 0 {
            out.push(hess.finish(format!("hessian/{tag}"), GRADIENT_TOL, "relative FD error"));
        }
    }

    // Both partial gradients of the game against differences of its value.
    let coupling = Matrix::from_row_major(2, 2, uniform_vec(&mut rng, 4, -1.0, 1.0))?;
    let game = QuadraticGame::new(1.0, 2.0, coupling)?;
    let mut tally = Tally::new();
    for _ in 0..GRADIENT_POINTS {
        let x = uniform_vec(&mut rng, 2, -2.0, 2.0);
        let y = uniform_vec(&mut rng, 2, -2.0, 2.0);
        let sign = if fault == Some(Fault::GradientSign) { -1.0 } else { 1.0 };
        let gx: Vec<f64> = game.grad_x(&x, &y).iter().map(|v| sign * v).collect();
        let gy = game.grad_y(&x, &y);
        let fx = finite_diff_gradient(|z| game.value(z, &y), &x, DEFAULT_FD_STEP)?;
        let fy = finite_diff_gradient(|z| game.value(&x, z), &y, DEFAULT_FD_STEP)?;
        let err = |a: &[f64], b: &[f64]| {
            let d = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
            d / a.iter().map(|u| u * u).sum::<f64>().sqrt().max(1.0)
        };
        tally.add(err(&gx, &fx).max(err(&gy, &fy)), GRADIENT_TOL);
    }
    out.push(tally.finish("gradient/quadratic_game", GRADIENT_TOL, "relative FD error"));
    Ok(out)
}

fn matrix_suites(seed: u64) -> Result<Vec<SuiteResult>> {
    let mut rng = rng(seed.wrapping_add(2));
    let mut recon = Tally::new();
    let mut abs_sq = Tally::new();
    let mut sandwich = Tally::new();
    let mut implication = Tally::new();
    let mut curvature = Tally::new();
    for _ in 0..MATRIX_CASES {
        let n = rng.random_range(1..=8usize);
        let h = random_symmetric(&mut rng, n, 5.0);
        let spec = symmetric_eigen(&h)?;
        let scale = h.frobenius().max(1.0);
        recon.add(spec.reconstruct().sub(&h).frobenius() / scale, EIGEN_TOL);
        let abs2 = spec.abs_matrix.matmul(&spec.abs_matrix)?;
        let hth = h.transpose().matmul(&h)?;
        abs_sq.add(abs2.sub(&hth).frobenius() / hth.frobenius().max(1.0), EIGEN_TOL);

        let x = uniform_vec(&mut rng, n, -3.0, 3.0);
        let xs = uniform_vec(&mut rng, n, -3.0, 3.0);
        let d = tilde_distance(&x, &xs, &spec)?;
        let e = x.iter().zip(&xs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let (smax, smin) = (spec.lambda_abs_max.sqrt(), spec.lambda_abs_min.sqrt());
        let slack = 1e-9 * (1.0 + smax * e);
        // Positive when a side of the sandwich is violated beyond rounding.
        sandwich.add((smin * e - d).max(d - smax * e) - slack, 0.0);

        // ‖e‖ ≤ a/√Λmax ⟹ d̃ ≤ a, and d̃ ≤ a ⟹ ‖e‖ ≤ a/√Λmin, each at the tightest
        // radius that makes the premise hold (with a little room).
        if smin > 1e-6 {
            let a1 = smax * e * (1.0 + 1e-12);
            let a2 = d * (1.0 + 1e-12);
            implication.add((d - a1).max(e - a2 / smin) - slack, 0.0);
        }

        // Curvature of the game blocks: eigenvalues of ∇²ₓₓ at least μ₁, of ∇²ᵧᵧ at most -μ₂.
        let mu1 = rng.random_range(0.1..5.0);
        let mu2 = rng.random_range(0.1..5.0);
        let game = QuadraticGame::new(mu1, mu2, random_symmetric(&mut rng, n, 2.0))?;
        let (hxx, hyy) = game.hessian_blocks(&x, &xs).expect("quadratic game has Hessian blocks");
        let ex = symmetric_eigen(&hxx)?;
        let ey = symmetric_eigen(&hyy)?;
        let lo_x = ex.eigenvalues.first().copied().unwrap_or(mu1);
        let hi_y = ey.eigenvalues.last().copied().unwrap_or(-mu2);
        curvature.add((mu1 - lo_x).max(hi_y + mu2), 1e-12);
    }
    Ok(vec![
        recon.finish("eigen/reconstruction", EIGEN_TOL, "relative Frobenius error"),
        abs_sq.finish("eigen/abs_squared", EIGEN_TOL, "relative Frobenius error of |H|² - HᵀH"),
        sandwich.finish("tilde_distance/sandwich", 0.0, "excess over the sandwich bounds"),
        implication.finish("tilde_distance/implications", 0.0, "excess over the implied bound"),
        curvature.finish("game/curvature", 1e-12, "modulus deficit"),
    ])
}

fn pl_suites() -> Result<Vec<SuiteResult>> {
    let grid: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.25).collect();
    let mut equality = Tally::new();
    for mu in [0.5, 1.0, 2.0, 4.0] {
        let q = Quadratic::new(Matrix::diag(&[mu; 3]), vec![0.0; 3])?;
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    equality.add(pl_residual(&q, &[a, b, c])?.abs(), PL_TOL);
                }
            }
        }
    }
    let mut aniso = Tally::new();
    let q = Quadratic::new(Matrix::diag(&[1.0, 4.0]), vec![0.5, -1.0])?;
    for &a in &grid {
        for &b in &grid {
            aniso.add(-pl_residual(&q, &[a, b])?, PL_TOL);
        }
    }
    let mut nonconvex = Tally::new();
    let f = PlNonconvex::new();
    for k in -10_000..=10_000 {
        nonconvex.add(-pl_residual(&f, &[k as f64 * 1e-3])?, PL_TOL);
    }
    Ok(vec![
        equality.finish("pl/isotropic_quadratic", PL_TOL, "|residual|"),
        aniso.finish("pl/anisotropic_quadratic", PL_TOL, "-residual"),
        nonconvex.finish("pl/pl_nonconvex", PL_TOL, "-residual"),
    ])
}

pub fn run_suites(seed: u64, fault: Option<Fault>) -> Result<CheckReport> {
    let jobs: Vec<Box<dyn Fn() -> Result<Vec<SuiteResult>> + Send + Sync>> = vec![
        Box::new(move || Ok(vec![power_inequality(seed, fault)?])),
        Box::new(move || derivative_suites(seed, fault)),
        Box::new(move || matrix_suites(seed)),
        Box::new(pl_suites),
    ];
    let parts = jobs.par_iter().map(|job| job()).collect::<Result<Vec<_>>>()?;
    let suites: Vec<SuiteResult> = parts.into_iter().flatten().collect();
    let passed = suites.iter().all(|s| s.passed);
    Ok(CheckReport {
        seed,
        fault,
        suites,
        passed,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let report = run_suites(cfg.seed, cfg.fault)?;
    let failed: Vec<&str> = report.suites.iter().filter(|s| !s.passed).map(|s| s.suite.as_str()).collect();
    let summary = if failed.is_empty() {
        format!("check: {} suites passed", report.suites.len())
    } else {
        format!("check: FAIL in {}", failed.join(", "))
    };
    let file = match cfg.format {
        Format::Json => ("check.json".to_string(), to_json(&report)?),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .suites
                .iter()
                .map(|s| {
                    vec![
                        s.suite.clone(),
                        s.cases.to_string(),
                        s.failures.to_string(),
                        fmt_f64(s.worst),
                        fmt_f64(s.tolerance),
                        s.passed.to_string(),
                    ]
                })
                .collect();
            ("check.csv".to_string(), table_csv(&["suite", "cases", "failures", "worst", "tolerance", "passed"], &rows)?)
        }
    };
    Ok(Outcome {
        files: vec![file],
        passed: report.passed,
        summary,
    })
}
