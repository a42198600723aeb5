use alloc::vec::Vec;

use super::SettlingBound;
use crate::error::{Error, Result};
use crate::integrators::Trajectory;
use crate::math::powf;

pub const DEFAULT_SLACK_CONSTANT: f64 = 10.0;

/// Which Lyapunov value to read off each sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LyapunovSelector {
    /// The value stored by the integrator.
    Recorded,
    /// `f - f*`.
    ObjectiveGap { f_star: f64 },
    /// `½‖∇‖²` from the recorded gradient norm.
    GradientEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    /// Intervals tested (those starting at `V > 0`).
    pub checked: usize,
    pub violations: usize,
    /// Smallest `rhs + slack - lhs`; negative when violated. `+∞` if nothing was checked.
    pub worst_margin: f64,
    /// Time at the start of the worst interval.
    pub worst_time: f64,
    pub slack_constant: f64,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Discrete check of `V̇ ≤ -a V^γ₁ - b V^γ₂` along a trajectory.
///
/// For consecutive samples `k, k+1` it requires
/// `(V_{k+1} - V_k)/dt ≤ -a V_k^γ₁ - b V_k^γ₂ + c · dt · |V̈|`, where `|V̈|` is the
/// larger of the second differences centred at `k` and `k+1` (whichever exist).
/// A forward difference overestimates `V̇(t_k)` by about `½ dt V̈`, so any
/// `c ≥ ½` absorbs the discretization error of a smooth run.
pub fn lyapunov_decay_check(
    traj: &Trajectory,
    bound: &SettlingBound,
    lyap: LyapunovSelector,
    slack_constant: f64,
) -> Result<DecayReport> {
    if !(slack_constant.is_finite() && slack_constant >= 0.0) {
        return Err(Error::param("slack_constant", "must be non-negative"));
    }
    let samples = traj.samples();
    let mut v = Vec::with_capacity(samples.len());
    for s in samples {
        let val = match lyap {
            LyapunovSelector::Recorded => s.lyapunov.ok_or(Error::MissingGroundTruth("recorded Lyapunov value"))?,
            LyapunovSelector::ObjectiveGap { f_star } => s.f - f_star,
            LyapunovSelector::GradientEnergy => 0.5 * s.grad_norm * s.grad_norm,
        };
        v.push(val);
    }
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let slope = |k: usize| (v[k + 1] - v[k]) / (t[k + 1] - t[k]);
    // Second difference centred at interior index k.
    let curvature = |k: usize| (slope(k) - slope(k - 1)) / (0.5 * (t[k + 1] - t[k - 1]));

    let mut report = DecayReport {
        checked: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        worst_time: 0.0,
        slack_constant,
    };
    let m = v.len();
    for k in 0..m.saturating_sub(1) {
        if !(v[k] > 0.0) {
            continue;
        }
        let dt = t[k + 1] - t[k];
        let mut ddv = 0.0f64;
        if k >= 1 {
            ddv = ddv.max(curvature(k).abs());
        }
        if k + 2 < m {
            ddv = ddv.max(curvature(k + 1).abs());
        }
        let rhs = -bound.a * powf(v[k], bound.gamma1) - bound.b * powf(v[k], bound.gamma2);
        let margin = rhs + slack_constant * dt * ddv - slope(k);
        report.checked += 1;
        if margin < 0.0 {
            report.violations += 1;
        }
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_time = t[k];
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::theorem1_coefficients;
    use crate::flows::{Flow, FlowParams};
    use crate::integrators::{integrate, IntegratorConfig, Sample, Termination};
    use crate::problems::Quadratic;
    use alloc::vec;

    fn run(flow: Flow, x0: &[f64]) -> Trajectory {
        let q = Quadratic::isotropic(x0.len()).unwrap();
        let p = FlowParams::new(3.0, 1.5).unwrap();
        integrate(&q, flow, &p, &IntegratorConfig::euler(1e-4).with_max_steps(400_000), x0).unwrap()
    }

    #[test]
    fn genflow_satisfies_the_inequality() {
        let p = FlowParams::new(3.0, 1.5).unwrap();
        let b = theorem1_coefficients(1.0, 3, &p).unwrap();
        let tr = run(Flow::GenFlow, &[3.0, -0.2, 40.0]);
        let r = lyapunov_decay_check(&tr, &b, LyapunovSelector::Recorded, DEFAULT_SLACK_CONSTANT).unwrap();
        assert!(r.checked > 1000);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn constant_trajectory_at_optimum_is_vacuous() {
        let s = |t| Sample { t, x: vec![0.0], v: None, f: 0.0, grad_norm: 0.0, lyapunov: Some(0.0) };
        let tr = Trajectory::from_parts(vec![s(0.0), s(0.1), s(0.2)], Termination::MaxSteps, 2);
        let b = theorem1_coefficients(1.0, 1, &FlowParams::new(3.0, 1.5).unwrap()).unwrap();
        let r = lyapunov_decay_check(&tr, &b, LyapunovSelector::Recorded, 10.0).unwrap();
        assert_eq!((r.checked, r.violations), (0, 0));
    }

    #[test]
    fn gradient_flow_violates_fixed_time_rates() {
        let p = FlowParams::new(3.0, 1.5).unwrap();
        let b = theorem1_coefficients(1.0, 2, &p).unwrap();
        let tr = run(Flow::GradientFlow, &[1.0, 2.0]);
        let r = lyapunov_decay_check(&tr, &b, LyapunovSelector::ObjectiveGap { f_star: 0.0 }, 10.0).unwrap();
        assert!(r.violations > 0);
        assert!(r.worst_margin < 0.0);
    }
}
