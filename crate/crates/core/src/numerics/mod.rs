//! Numerical kernels: finite differences, symmetric eigen-decomposition, the
//! saddle-adapted distance `d̃` and the time a trajectory spends in a ball.

mod eigen;
mod matrix;

use alloc::vec;
use alloc::vec::Vec;

pub use eigen::{symmetric_eigen, SpectralData};
pub use matrix::Matrix;

use crate::error::{ensure_dim, Error, Result};
use crate::integrators::Trajectory;
use crate::math::{dist2, sqrt};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central-difference gradient `(f(x + h eᵢ) - f(x - h eᵢ)) / 2h`.
pub fn finite_diff_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::param("h", "finite-difference step must be positive"));
    }
    let mut probe = x.to_vec();
    let mut out = vec![0.0; x.len()];
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
    Ok(out)
}

/// Central-difference Jacobian of a vector map; row `i` holds `∂gᵢ/∂x`.
/// Applied to a gradient it yields a Hessian estimate.
pub fn finite_diff_jacobian<G>(g: G, x: &[f64], h: f64) -> Result<Matrix>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::param("h", "finite-difference step must be positive"));
    }
    let n = x.len();
    let mut probe = x.to_vec();
    let mut jac: Option<Matrix> = None;
    for j in 0..n {
        probe[j] = x[j] + h;
        let gp = g(&probe);
        probe[j] = x[j] - h;
        let gm = g(&probe);
        probe[j] = x[j];
        let m = jac.get_or_insert_with(|| Matrix::zeros(gp.len(), n));
        for i in 0..gp.len() {
            m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    Ok(jac.unwrap_or_else(|| Matrix::zeros(0, 0)))
}

/// `d̃(x) = sqrt((x - x*)ᵀ |H| (x - x*))`.
pub fn tilde_distance(x: &[f64], x_star: &[f64], spec: &SpectralData) -> Result<f64> {
    ensure_dim(spec.dim(), x.len())?;
    ensure_dim(spec.dim(), x_star.len())?;
    let d: Vec<f64> = x.iter().zip(x_star).map(|(a, b)| a - b).collect();
    Ok(sqrt(spec.abs_matrix.quad_form(&d).max(0.0)))
}

/// Lebesgue measure of `{t : 0 < ‖x(t) - center‖ < r}` along a recorded trajectory.
///
/// Between consecutive samples the distance is interpolated linearly, so a
/// boundary crossing contributes the matching fraction of the interval. An
/// interval whose endpoints both sit exactly on `center` contributes nothing.
pub fn time_in_ball(traj: &Trajectory, center: &[f64], r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    let samples = traj.samples();
    if let Some(s) = samples.first() {
        ensure_dim(center.len(), s.x.len())?;
    }
    let mut total = 0.0;
    for w in samples.windows(2) {
        let dt = w[1].t - w[0].t;
        let d0 = dist2(&w[0].x, center);
        let d1 = dist2(&w[1].x, center);
        if d0 == 0.0 && d1 == 0.0 {
            continue;
        }
        let inside = match (d0 < r, d1 < r) {
            (true, true) => 1.0,
            (false, false) => 0.0,
            (true, false) => (r - d0) / (d1 - d0),
            (false, true) => (r - d1) / (d0 - d1),
        };
        total += inside * dt;
    }
    Ok(total)
}
