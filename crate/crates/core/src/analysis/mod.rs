//! Closed-form settling and evasion bounds, Lyapunov functions, and the
//! empirical measurements compared against them.

mod decay;
mod evasion;

use alloc::vec::Vec;

use crate::error::{ensure_dim, Error, Result};
use crate::flows::FlowParams;
use crate::integrators::Trajectory;
use crate::math::{dist2, dot, norm2, powf};
use crate::numerics::{finite_diff_gradient, finite_diff_jacobian};
use crate::problems::{MinimaxProblem, Problem};

pub use decay::{lyapunov_decay_check, DecayReport, LyapunovSelector, DEFAULT_SLACK_CONSTANT};
pub use evasion::{estimate_taylor_constants, halving_radii, theorem3_evasion_bound, EvasionCertificate, TaylorConstants, MAX_GRID_POINTS};

/// Default state tolerance for [`measure_settling_time`].
pub const DEFAULT_SETTLING_TOL: f64 = 1e-6;

/// Coefficients of `V̇ ≤ -a V^γ₁ - b V^γ₂` and the resulting settling-time bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettlingBound {
    pub a: f64,
    pub b: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// `1/(a(1-γ₁)) + 1/(b(γ₂-1))`.
    pub t_bar: f64,
}

pub fn lemma1_settling_time(a: f64, b: f64, gamma1: f64, gamma2: f64) -> Result<SettlingBound> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::param("a", "must be positive"));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::param("b", "must be positive"));
    }
    if !(gamma1 > 0.0 && gamma1 < 1.0) {
        return Err(Error::param("gamma1", "must lie in (0, 1)"));
    }
    if !(gamma2.is_finite() && gamma2 > 1.0) {
        return Err(Error::param("gamma2", "must exceed 1"));
    }
    let t_bar = 1.0 / (a * (1.0 - gamma1)) + 1.0 / (b * (gamma2 - 1.0));
    Ok(SettlingBound { a, b, gamma1, gamma2, t_bar })
}

fn exponents(params: &FlowParams) -> (f64, f64) {
    let (p, q) = (params.p(), params.q());
    (p / (2.0 * (p - 1.0)), q / (2.0 * (q - 1.0)))
}

fn check_mu(mu: f64, name: &'static str) -> Result<()> {
    if mu.is_finite() && mu > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, "modulus must be positive"))
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::param("n", "dimension must be positive"))
    } else {
        Ok(())
    }
}

/// `κ = n^((q-2)/(2(q-1)))`.
fn dimension_factor(n: usize, params: &FlowParams) -> f64 {
    let q = params.q();
    powf(n as f64, (q - 2.0) / (2.0 * (q - 1.0)))
}

/// GenFlow on a `μ`-PL objective in `ℝⁿ`, Lyapunov function `f - f*`.
///
/// `a = (2μ)^γ₁`, `b = κ (2μ)^γ₂` with `γ₁ = p/(2(p-1))`, `γ₂ = q/(2(q-1))`.
/// Non-unit gains scale `a` by `c1` and `b` by `c2`.
pub fn theorem1_coefficients(mu: f64, n: usize, params: &FlowParams) -> Result<SettlingBound> {
    check_mu(mu, "mu")?;
    check_n(n)?;
    let (g1, g2) = exponents(params);
    let a = params.c1() * powf(2.0 * mu, g1);
    let b = params.c2() * dimension_factor(n, params) * powf(2.0 * mu, g2);
    lemma1_settling_time(a, b, g1, g2)
}

/// GenFlow(M), Lyapunov function `f - f* + ½‖v‖²`.
///
/// `a = 2^γ₁ min(1, μ^γ₁)`, `b = 2κ min(1, μ^γ₂)`.
pub fn theorem2_coefficients(mu: f64, n: usize, params: &FlowParams) -> Result<SettlingBound> {
    check_mu(mu, "mu")?;
    check_n(n)?;
    let (g1, g2) = exponents(params);
    let a = params.c1() * powf(2.0, g1) * powf(mu, g1).min(1.0);
    let b = params.c2() * 2.0 * dimension_factor(n, params) * powf(mu, g2).min(1.0);
    lemma1_settling_time(a, b, g1, g2)
}

/// Saddle-point dynamics on a `(μ₁, μ₂)` strongly convex-concave game, Lyapunov
/// function `½‖∇G‖²`.
pub fn theorem4_coefficients(mu1: f64, mu2: f64, params: &FlowParams) -> Result<SettlingBound> {
    check_mu(mu1, "mu1")?;
    check_mu(mu2, "mu2")?;
    let (g1, g2) = exponents(params);
    let m = mu1.min(mu2);
    lemma1_settling_time(params.c1() * m * powf(2.0, g1), params.c2() * m * powf(2.0, g2), g1, g2)
}

fn require_f_star<P: Problem + ?Sized>(problem: &P) -> Result<f64> {
    problem.f_star().ok_or(Error::MissingGroundTruth("optimal value"))
}

/// `f(x) - f*`.
pub fn lyapunov_pl<P: Problem + ?Sized>(problem: &P, x: &[f64]) -> Result<f64> {
    ensure_dim(problem.dim(), x.len())?;
    Ok(problem.value(x) - require_f_star(problem)?)
}

/// `f(x) - f* + ½‖v‖²`.
pub fn lyapunov_momentum<P: Problem + ?Sized>(problem: &P, x: &[f64], v: &[f64]) -> Result<f64> {
    ensure_dim(problem.dim(), v.len())?;
    Ok(lyapunov_pl(problem, x)? + 0.5 * dot(v, v))
}

/// `½‖∇ₓg‖² + ½‖∇ᵧg‖²`.
pub fn lyapunov_minimax<M: MinimaxProblem + ?Sized>(problem: &M, x: &[f64], y: &[f64]) -> Result<f64> {
    let (n, m) = problem.dims();
    ensure_dim(n, x.len())?;
    ensure_dim(m, y.len())?;
    let gx = problem.grad_x(x, y);
    let gy = problem.grad_y(x, y);
    Ok(0.5 * (dot(&gx, &gx) + dot(&gy, &gy)))
}

/// `½‖∇f(x)‖² - μ (f(x) - f*)`; non-negative wherever the PL inequality holds.
pub fn pl_residual<P: Problem + ?Sized>(problem: &P, x: &[f64]) -> Result<f64> {
    let mu = problem.pl_modulus().ok_or(Error::MissingGroundTruth("PL modulus"))?;
    let gap = lyapunov_pl(problem, x)?;
    let g = problem.gradient(x);
    Ok(0.5 * dot(&g, &g) - mu * gap)
}

/// Both sides of the power inequality for `z ∈ ℝⁿ`:
/// `|Σ zᵢ|^e ≤ Σ |zᵢ|^e` for `e ≤ 1`, and `≤ n^(e-1) Σ |zᵢ|^e` for `e > 1`.
pub fn power_inequality_check(z: &[f64], p_exp: f64) -> Result<(f64, f64)> {
    if !(p_exp.is_finite() && p_exp > 0.0) {
        return Err(Error::param("p_exp", "must be positive"));
    }
    let lhs = powf(z.iter().sum::<f64>().abs(), p_exp);
    let sum: f64 = z.iter().map(|v| powf(v.abs(), p_exp)).sum();
    let rhs = if p_exp <= 1.0 { sum } else { powf(z.len() as f64, p_exp - 1.0) * sum };
    Ok((lhs, rhs))
}

/// First recorded time with `‖x - x*‖ ≤ tol`, or `None` if never reached.
///
/// Resolution is the recording interval of the trajectory.
pub fn measure_settling_time(traj: &Trajectory, x_star: &[f64], tol: f64) -> Result<Option<f64>> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if let Some(s) = traj.samples().first() {
        ensure_dim(x_star.len(), s.x.len())?;
    }
    Ok(traj.samples().iter().find(|s| dist2(&s.x, x_star) <= tol).map(|s| s.t))
}

/// `‖∇f - ∇f_fd‖ / max(1, ‖∇f‖)` at `x`, central differences with step `h`.
pub fn gradient_check<P: Problem + ?Sized>(problem: &P, x: &[f64], h: f64) -> Result<f64> {
    ensure_dim(problem.dim(), x.len())?;
    let g = problem.gradient(x);
    let fd = finite_diff_gradient(|z| problem.value(z), x, h)?;
    Ok(dist2(&g, &fd) / norm2(&g).max(1.0))
}

/// Relative Frobenius error of the analytic Hessian against differences of the
/// gradient; `None` when the problem has no Hessian.
pub fn hessian_check<P: Problem + ?Sized>(problem: &P, x: &[f64], h: f64) -> Result<Option<f64>> {
    ensure_dim(problem.dim(), x.len())?;
    let Some(hess) = problem.hessian(x) else {
        return Ok(None);
    };
    let fd = finite_diff_jacobian(|z| problem.gradient(z), x, h)?;
    Ok(Some(hess.sub(&fd).frobenius() / hess.frobenius().max(1.0)))
}

/// Values of `lyapunov` along a trajectory (`None` entries where not recorded).
pub fn recorded_lyapunov(traj: &Trajectory) -> Vec<Option<f64>> {
    traj.samples().iter().map(|s| s.lyapunov).collect()
}

/// Largest increase between consecutive recorded Lyapunov values; zero or
/// negative for a non-increasing sequence.
pub fn max_lyapunov_increase(traj: &Trajectory) -> f64 {
    let vals: Vec<f64> = traj.samples().iter().filter_map(|s| s.lyapunov).collect();
    let mut worst = f64::NEG_INFINITY;
    for w in vals.windows(2) {
        worst = worst.max(w[1] - w[0]);
    }
    if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::integrators::{integrate, IntegratorConfig, Sample, Termination};
    use crate::numerics::Matrix;
    use crate::problems::{PlNonconvex, Quadratic, QuadraticGame};
    use crate::Flow;
    use proptest::prelude::*;

    fn p3() -> FlowParams {
        FlowParams::new(3.0, 1.5).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn lemma1_examples() {
        assert_eq!(lemma1_settling_time(1.0, 1.0, 0.5, 2.0).unwrap().t_bar, 3.0);
        assert_eq!(lemma1_settling_time(2.0, 1.0, 0.5, 1.5).unwrap().t_bar, 3.0);
        let a = 2f64.powf(0.75);
        let b = 2f64.powf(1.5);
        let t = lemma1_settling_time(a, b, 0.75, 1.5).unwrap().t_bar;
        assert!(close(t, 4.0 / a + 2.0 / b, 1e-15));
        assert!((t - 3.08552).abs() < 1e-5);
        assert!(lemma1_settling_time(0.0, 1.0, 0.5, 2.0).is_err());
        assert!(lemma1_settling_time(1.0, 1.0, 1.0, 2.0).is_err());
        assert!(lemma1_settling_time(1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn theorem1_examples() {
        let s = theorem1_coefficients(1.0, 1, &p3()).unwrap();
        assert!(close(s.a, 2f64.powf(0.75), 1e-15) && close(s.b, 2f64.powf(1.5), 1e-15));
        assert_eq!((s.gamma1, s.gamma2), (0.75, 1.5));
        assert!((s.t_bar - 3.08552).abs() < 1e-5);
        let s = theorem1_coefficients(0.5, 1, &p3()).unwrap();
        assert_eq!(s.a, 1.0);
        let b1 = theorem1_coefficients(1.0, 1, &p3()).unwrap().b;
        let b4 = theorem1_coefficients(1.0, 4, &p3()).unwrap().b;
        assert!(close(b4, 0.5 * b1, 1e-15));
        assert!(theorem1_coefficients(0.0, 1, &p3()).is_err());
        assert!(theorem1_coefficients(1.0, 0, &p3()).is_err());
    }

    #[test]
    fn theorem2_examples() {
        let s = theorem2_coefficients(1.0, 1, &p3()).unwrap();
        assert!(close(s.a, 2f64.powf(0.75), 1e-15));
        assert_eq!(s.b, 2.0);
        assert!((s.t_bar - (4.0 / 2f64.powf(0.75) + 1.0)).abs() < 1e-14);
        assert!((s.t_bar - 3.37841).abs() < 1e-5);
        let big = theorem2_coefficients(7.0, 1, &p3()).unwrap();
        assert_eq!((big.a, big.b), (s.a, s.b));
        for q in [1.1, 1.5, 1.9] {
            let pq = FlowParams::new(3.0, q).unwrap();
            assert_eq!(theorem2_coefficients(1.0, 1, &pq).unwrap().b, 2.0);
        }
    }

    #[test]
    fn theorem4_examples() {
        let s = theorem4_coefficients(1.0, 1.0, &p3()).unwrap();
        assert_eq!(s, theorem1_coefficients(1.0, 1, &p3()).unwrap());
        let d = theorem4_coefficients(2.0, 3.0, &p3()).unwrap();
        assert!(close(d.a, 2.0 * s.a, 1e-15) && close(d.b, 2.0 * s.b, 1e-15));
        assert!(close(d.t_bar, 0.5 * s.t_bar, 1e-15));
    }

    #[test]
    fn lyapunov_examples() {
        let q = Quadratic::isotropic(2).unwrap();
        assert_eq!(lyapunov_pl(&q, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(lyapunov_pl(&q, &[1.0, 1.0]).unwrap(), 1.0);
        let f = PlNonconvex::new();
        let pi = core::f64::consts::PI;
        assert!(close(lyapunov_pl(&f, &[pi]).unwrap(), pi * pi, 1e-14));

        let q1 = Quadratic::isotropic(1).unwrap();
        assert_eq!(lyapunov_momentum(&q1, &[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(lyapunov_momentum(&q1, &[1.0], &[2.0]).unwrap(), 2.5);
        assert_eq!(lyapunov_momentum(&q, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);

        let g = QuadraticGame::new(1.0, 1.0, Matrix::identity(1)).unwrap();
        assert_eq!(lyapunov_minimax(&g, &[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(lyapunov_minimax(&g, &[1.0], &[1.0]).unwrap(), 2.0);
        assert_eq!(lyapunov_minimax(&g, &[2.0], &[2.0]).unwrap(), 8.0);

        let s = crate::problems::SaddleTestFunction::new();
        assert!(lyapunov_pl(&s, &[0.0, 0.0]).is_ok());
        let no_truth = crate::problems::synthetic_clouds(4, 2, 0.0, 1).unwrap();
        assert!(matches!(lyapunov_pl(&no_truth, &[0.0, 0.0]), Err(Error::MissingGroundTruth(_))));
    }

    #[test]
    fn pl_residual_examples() {
        let q = Quadratic::isotropic(3).unwrap();
        assert_eq!(pl_residual(&q, &[0.3, -2.0, 5.0]).unwrap(), 0.0);
        let q = Quadratic::new(Matrix::diag(&[1.0, 4.0]), vec![0.0, 0.0]).unwrap();
        assert!((pl_residual(&q, &[0.0, 1.0]).unwrap() - 6.0).abs() < 1e-14);
        assert_eq!(pl_residual(&q, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn power_inequality_examples() {
        assert_eq!(power_inequality_check(&[1.0, 1.0], 2.0).unwrap(), (4.0, 4.0));
        for e in [0.3, 1.0, 3.0] {
            assert_eq!(power_inequality_check(&[1.0, -1.0], e).unwrap().0, 0.0);
        }
        let (l, r) = power_inequality_check(&[3.0, -4.0], 0.5).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
        assert!((r - (3f64.sqrt() + 2.0)).abs() < 1e-14);
        assert!(power_inequality_check(&[1.0], 0.0).is_err());
    }

    fn pinned(x: f64) -> Trajectory {
        let s = |t| Sample { t, x: vec![x], v: None, f: 0.0, grad_norm: 0.0, lyapunov: None };
        Trajectory::from_parts(vec![s(0.0), s(1.0)], Termination::MaxSteps, 1)
    }

    #[test]
    fn settling_measurement() {
        assert_eq!(measure_settling_time(&pinned(0.0), &[0.0], 1e-6).unwrap(), Some(0.0));
        assert_eq!(measure_settling_time(&pinned(1.0), &[0.0], 1e-6).unwrap(), None);
        let q = Quadratic::isotropic(1).unwrap();
        let cfg = IntegratorConfig::euler(1e-4);
        let tr = integrate(&q, Flow::GenFlow, &p3(), &cfg, &[1e4]).unwrap();
        let t = measure_settling_time(&tr, &[0.0], DEFAULT_SETTLING_TOL).unwrap().unwrap();
        assert!(t <= 1.1 * theorem1_coefficients(1.0, 1, &p3()).unwrap().t_bar);
    }

    #[test]
    fn gradient_checks_flag_wrong_gradients() {
        struct Wrong;
        impl Problem for Wrong {
            fn name(&self) -> &'static str {
                "wrong"
            }
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, x: &[f64]) -> f64 {
                x[0] * x[0]
            }
            fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
                out[0] = x[0];
            }
        }
        assert!(gradient_check(&Wrong, &[1.0], 1e-5).unwrap() > 0.1);
        assert_eq!(hessian_check(&Wrong, &[1.0], 1e-5).unwrap(), None);
        let q = Quadratic::isotropic(2).unwrap();
        assert!(gradient_check(&q, &[1.0, 2.0], 1e-5).unwrap() < 1e-9);
        assert!(hessian_check(&q, &[1.0, 2.0], 1e-5).unwrap().unwrap() < 1e-9);
    }

    proptest! {
        #[test]
        fn t_bar_decreases_in_a_and_b(
            a in 0.01f64..10.0, b in 0.01f64..10.0, g1 in 0.05f64..0.95, g2 in 1.05f64..5.0, k in 1.01f64..4.0,
        ) {
            let base = lemma1_settling_time(a, b, g1, g2).unwrap().t_bar;
            prop_assert!(lemma1_settling_time(k * a, b, g1, g2).unwrap().t_bar < base);
            prop_assert!(lemma1_settling_time(a, k * b, g1, g2).unwrap().t_bar < base);
        }

        #[test]
        fn coefficients_in_admissible_region(
            p in 2.0001f64..20.0, q in 1.01f64..1.9999, mu in 1e-3f64..1e3, n in 1usize..100, mu2 in 1e-3f64..1e3,
        ) {
            let params = FlowParams::new(p, q).unwrap();
            for s in [
                theorem1_coefficients(mu, n, &params).unwrap(),
                theorem2_coefficients(mu, n, &params).unwrap(),
                theorem4_coefficients(mu, mu2, &params).unwrap(),
            ] {
                prop_assert!(s.gamma1 > 0.0 && s.gamma1 < 1.0);
                prop_assert!(s.gamma2 > 1.0);
                prop_assert!(s.t_bar > 0.0 && s.t_bar.is_finite());
            }
        }

        #[test]
        fn power_inequality_holds(
            z in prop::collection::vec(-10.0f64..10.0, 1..=16),
            idx in 0usize..5,
        ) {
            let e = [0.3, 0.75, 1.0, 1.5, 3.0][idx];
            let (l, r) = power_inequality_check(&z, e).unwrap();
            prop_assert!(l <= r + 1e-12 * r.max(1.0));
        }

        #[test]
        fn pl_residual_nonnegative_on_quadratics(
            d in prop::collection::vec(0.1f64..10.0, 1..=6),
            x in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let n = d.len();
            let q = Quadratic::new(Matrix::diag(&d), vec![0.0; n]).unwrap();
            prop_assert!(pl_residual(&q, &x[..n]).unwrap() >= -1e-12);
        }
    }
}
