use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::flows::FlowParams;
use crate::math::{exp, ln, norm1, norm2, powf, sqrt};
use crate::numerics::{tilde_distance, SpectralData};
use crate::problems::Problem;

/// Safety factor applied to the sampled Taylor ratios.
const MARGIN: f64 = 0.01;
const MIN_RADIUS: f64 = 1e-6;
const DENOMINATOR_FLOOR: f64 = 1e-12;
/// Upper limit on `grid_density^n`.
pub const MAX_GRID_POINTS: usize = 4_000_000;

/// Constants `k₁ > ½`, `0 < k₂ < 1` such that, on the ball of radius `radius`
/// around the saddle,
/// `|f(x) - f(x*)| ≤ k₁ d̃(x)²` and `‖∇f(x)‖₁ ≥ k₂ ‖H(x - x*)‖₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorConstants {
    pub k1: f64,
    pub k2: f64,
    /// Radius on which the sampled ratios certified `k1`, `k2`.
    pub radius: f64,
    pub max_value_ratio: f64,
    pub min_gradient_ratio: f64,
    pub points: usize,
}

/// Estimate [`TaylorConstants`] by evaluating both ratios on a uniform grid of
/// `grid_density` points per axis over the cube around `x_star`, keeping the
/// points inside the ball.
///
/// `k₁ = max(1.01 · max ratio, 0.505)` and `k₂ = min(0.99 · min ratio, 0.99)`:
/// enlarging `k₁` or shrinking `k₂` keeps both inequalities true while meeting
/// `k₁ > ½`, `k₂ < 1`. If `k₂` comes out non-positive the radius is halved and
/// the grid re-evaluated, down to `1e-6`.
pub fn estimate_taylor_constants<P: Problem + ?Sized>(
    problem: &P,
    x_star: &[f64],
    spec: &SpectralData,
    radius: f64,
    grid_density: usize,
) -> Result<TaylorConstants> {
    let n = problem.dim();
    ensure_dim(n, x_star.len())?;
    ensure_dim(n, spec.dim())?;
    ensure_finite(x_star, "saddle point")?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::param("radius", "must be positive"));
    }
    if grid_density < 2 {
        return Err(Error::param("grid_density", "need at least two points per axis"));
    }
    let total = powf(grid_density as f64, n as f64);
    if total > MAX_GRID_POINTS as f64 {
        return Err(Error::param("grid_density", format!("grid of {total} points exceeds {MAX_GRID_POINTS}")));
    }
    if !(spec.lambda_abs_min > 0.0) {
        return Err(Error::param("spec", "Hessian at the saddle must be non-singular"));
    }

    let h = spec.reconstruct();
    let f0 = problem.value(x_star);
    let mut r = radius;
    while r >= MIN_RADIUS {
        let mut max_value_ratio = 0.0f64;
        let mut min_gradient_ratio = f64::INFINITY;
        let mut points = 0usize;
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut hd = vec![0.0; n];
        let step = 2.0 * r / (grid_density - 1) as f64;
        'grid: loop {
            for i in 0..n {
                d[i] = -r + step * idx[i] as f64;
                x[i] = x_star[i] + d[i];
            }
            if norm2(&d) <= r {
                let dt = tilde_distance(&x, x_star, spec)?;
                let dt2 = dt * dt;
                h.mul_vec_into(&d, &mut hd);
                let hn = norm1(&hd);
                if dt2 >= DENOMINATOR_FLOOR && hn >= DENOMINATOR_FLOOR {
                    points += 1;
                    max_value_ratio = max_value_ratio.max((problem.value(&x) - f0).abs() / dt2);
                    min_gradient_ratio = min_gradient_ratio.min(norm1(&problem.gradient(&x)) / hn);
                }
            }
            for i in 0..n {
                idx[i] += 1;
                if idx[i] < grid_density {
                    continue 'grid;
                }
                idx[i] = 0;
            }
            break;
        }
        if points > 0 {
            let k1 = ((1.0 + MARGIN) * max_value_ratio).max(0.5 * (1.0 + MARGIN));
            let k2 = ((1.0 - MARGIN) * min_gradient_ratio).min(1.0 - MARGIN);
            if k2 > 0.0 && k1.is_finite() {
                return Ok(TaylorConstants {
                    k1,
                    k2,
                    radius: r,
                    max_value_ratio,
                    min_gradient_ratio,
                    points,
                });
            }
        }
        r *= 0.5;
    }
    Err(Error::Failed(format!("no radius down to {MIN_RADIUS:e} certifies the Taylor constants")))
}

/// Time-in-ball bound around a strict saddle for GenFlow.
///
/// `bound_p(r) = n^(1/(p-1)) · 8k₁/k₂^(p/(p-1)) · Λmax^((p-2)/(2(p-1))) / Λmin^(p/(2(p-1))) · r^((p-2)/(p-1))`,
/// `bound_q` the same with `q`; `bound_p` grows with `r` and `bound_q` shrinks,
/// so the two meet at `r_hat`. With gains, `bound_p` is divided by `c1` and
/// `bound_q` by `c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvasionCertificate {
    pub n: usize,
    pub k1: f64,
    pub k2: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// Radius on which `k1`, `k2` were certified, if known.
    pub valid_radius: Option<f64>,
    pub r: f64,
    pub bound_p: f64,
    pub bound_q: f64,
    pub bound: f64,
    pub r_hat: f64,
    /// `(n^(-1/p) k₂ √Λmin)^(p/(p-1))`.
    pub k3: f64,
    /// `(n^(-1/q) k₂ √Λmin)^(q/(q-1))`.
    pub k4: f64,
    coeff_p: f64,
    coeff_q: f64,
    exp_p: f64,
    exp_q: f64,
}

impl EvasionCertificate {
    pub fn with_valid_radius(mut self, radius: f64) -> Self {
        self.valid_radius = Some(radius);
        self
    }

    pub fn bound_p_at(&self, r: f64) -> f64 {
        self.coeff_p * powf(r, self.exp_p)
    }

    pub fn bound_q_at(&self, r: f64) -> f64 {
        self.coeff_q * powf(r, self.exp_q)
    }

    pub fn bound_at(&self, r: f64) -> f64 {
        self.bound_p_at(r).min(self.bound_q_at(r))
    }

    /// The radius-independent bound: the value at `r_hat`, or at the certified
    /// radius when `r_hat` lies beyond it. Dominates [`Self::bound_at`] for
    /// every `r` up to that radius.
    pub fn flat_bound(&self) -> f64 {
        let r = match self.valid_radius {
            Some(v) if self.r_hat > v => v,
            _ => self.r_hat,
        };
        self.bound_at(r)
    }
}

pub fn theorem3_evasion_bound(
    spec: &SpectralData,
    k1: f64,
    k2: f64,
    n: usize,
    r: f64,
    params: &FlowParams,
) -> Result<EvasionCertificate> {
    if !(k1.is_finite() && k1 > 0.5) {
        return Err(Error::param("k1", "must exceed 0.5"));
    }
    if !(k2 > 0.0 && k2 < 1.0) {
        return Err(Error::param("k2", "must lie in (0, 1)"));
    }
    if n == 0 {
        return Err(Error::param("n", "dimension must be positive"));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    let (lmax, lmin) = (spec.lambda_abs_max, spec.lambda_abs_min);
    if !(lmin > 0.0 && lmin.is_finite()) {
        return Err(Error::param("spec", "Hessian at the saddle must be non-singular"));
    }
    let nf = n as f64;
    let coeff = |e: f64, gain: f64| {
        powf(nf, 1.0 / (e - 1.0)) * 8.0 * k1 / powf(k2, e / (e - 1.0)) * powf(lmax, (e - 2.0) / (2.0 * (e - 1.0)))
            / powf(lmin, e / (2.0 * (e - 1.0)))
            / gain
    };
    let (p, q) = (params.p(), params.q());
    let coeff_p = coeff(p, params.c1());
    let coeff_q = coeff(q, params.c2());
    let exp_p = (p - 2.0) / (p - 1.0);
    let exp_q = (q - 2.0) / (q - 1.0);
    // coeff_p r^exp_p = coeff_q r^exp_q, solved in logs.
    let r_hat = exp((ln(coeff_q) - ln(coeff_p)) / (exp_p - exp_q));
    let bound_p = coeff_p * powf(r, exp_p);
    let bound_q = coeff_q * powf(r, exp_q);
    let k3 = powf(powf(nf, -1.0 / p) * k2 * sqrt(lmin), p / (p - 1.0));
    let k4 = powf(powf(nf, -1.0 / q) * k2 * sqrt(lmin), q / (q - 1.0));
    Ok(EvasionCertificate {
        n,
        k1,
        k2,
        lambda_max: lmax,
        lambda_min: lmin,
        valid_radius: None,
        r,
        bound_p,
        bound_q,
        bound: bound_p.min(bound_q),
        r_hat,
        k3,
        k4,
        coeff_p,
        coeff_q,
        exp_p,
        exp_q,
    })
}

/// Radii `radius · 2^-k`, `k = 0..count`.
pub fn halving_radii(radius: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| radius * powf(0.5, k as f64)).collect()
}
