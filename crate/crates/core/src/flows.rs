//! Vector fields of the continuous-time dynamics.
//!
//! Every field is a pure function of a gradient (and, for the momentum flow, the
//! co-state). None of them evaluates the objective, so any gradient oracle can
//! drive them: analytic, finite-difference or noisy.
//!
//! The per-coordinate normalizations `g / |g|^((p-2)/(p-1))` are evaluated in the
//! equivalent exponent form `sign(g) |g|^(1/(p-1))`, which is continuous and exactly
//! zero at `g = 0`. [`FlowParams::literal_quotient`] switches to the quotient form with
//! `|g| + eps_guard` in the denominator instead.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::math::{norm2, powf, signum0};

/// Exponents and gains shared by all normalized flows.
///
/// `p > 2` drives the sub-linear term that dominates near the optimum and
/// `q ∈ (1, 2)` the super-linear term that dominates far from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    p: f64,
    q: f64,
    c1: f64,
    c2: f64,
    eps_guard: f64,
    literal: bool,
}

impl FlowParams {
    pub const DEFAULT_EPS_GUARD: f64 = 1e-7;

    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && p > 2.0) {
            return Err(Error::param("p", "must satisfy p > 2"));
        }
        if !(q.is_finite() && q > 1.0 && q < 2.0) {
            return Err(Error::param("q", "must lie in the open interval (1, 2)"));
        }
        Ok(FlowParams {
            p,
            q,
            c1: 1.0,
            c2: 1.0,
            eps_guard: Self::DEFAULT_EPS_GUARD,
            literal: false,
        })
    }

    pub fn with_gains(mut self, c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c1 > 0.0) {
            return Err(Error::param("c1", "must be positive"));
        }
        if !(c2.is_finite() && c2 > 0.0) {
            return Err(Error::param("c2", "must be positive"));
        }
        self.c1 = c1;
        self.c2 = c2;
        Ok(self)
    }

    pub fn with_eps_guard(mut self, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::param("eps_guard", "must be finite and non-negative"));
        }
        self.eps_guard = eps;
        Ok(self)
    }

    /// Evaluate normalizations as `g / (|g| + eps_guard)^e` instead of the exponent form.
    pub fn literal_quotient(mut self, on: bool) -> Self {
        self.literal = on;
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn eps_guard(&self) -> f64 {
        self.eps_guard
    }

    pub fn is_literal(&self) -> bool {
        self.literal
    }

    /// `(p-2)/(p-1)`, the denominator exponent of the first term.
    pub fn p_norm_exponent(&self) -> f64 {
        (self.p - 2.0) / (self.p - 1.0)
    }

    /// `(q-2)/(q-1)`, negative for admissible `q`.
    pub fn q_norm_exponent(&self) -> f64 {
        (self.q - 2.0) / (self.q - 1.0)
    }

    /// Scalar normalization `c1 g/|g|^((p-2)/(p-1)) + c2 g/|g|^((q-2)/(q-1))`.
    #[inline]
    pub fn normalize(&self, g: f64) -> f64 {
        if self.literal {
            let d = g.abs() + self.eps_guard;
            if d == 0.0 {
                return 0.0;
            }
            self.c1 * g / powf(d, self.p_norm_exponent()) + self.c2 * g / powf(d, self.q_norm_exponent())
        } else {
            let a = g.abs();
            if a == 0.0 {
                return 0.0;
            }
            signum0(g) * (self.c1 * powf(a, 1.0 / (self.p - 1.0)) + self.c2 * powf(a, 1.0 / (self.q - 1.0)))
        }
    }

    /// Scale factor `c1 s^-((p-2)/(p-1)) + c2 s^-((q-2)/(q-1))` applied to a whole
    /// vector whose Euclidean norm is `s`. Zero when `s = 0` in exponent form.
    #[inline]
    pub fn norm_scale(&self, s: f64) -> f64 {
        let d = if self.literal { s + self.eps_guard } else { s };
        if d == 0.0 {
            return 0.0;
        }
        self.c1 * powf(d, -self.p_norm_exponent()) + self.c2 * powf(d, -self.q_norm_exponent())
    }
}

/// Dynamics selectable for the plain (non-momentum) integrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flow {
    /// `ẋ = -∇f`.
    GradientFlow,
    /// Per-coordinate normalized flow.
    GenFlow,
    /// Flow normalized by the Euclidean norm of the whole gradient.
    FxtsGf,
}

impl Flow {
    pub fn name(&self) -> &'static str {
        match self {
            Flow::GradientFlow => "gradient",
            Flow::GenFlow => "genflow",
            Flow::FxtsGf => "fxts",
        }
    }

    /// Evaluate the field without validating the gradient.
    pub fn eval_into(&self, grad: &[f64], params: &FlowParams, out: &mut [f64]) {
        match self {
            Flow::GradientFlow => {
                for (o, g) in out.iter_mut().zip(grad) {
                    *o = -g;
                }
            }
            Flow::GenFlow => genflow_field_into(grad, params, out),
            Flow::FxtsGf => fxts_gf_field_into(grad, params, out),
        }
    }

    pub fn eval(&self, grad: &[f64], params: &FlowParams) -> Result<Vec<f64>> {
        ensure_finite(grad, "gradient")?;
        let mut out = vec![0.0; grad.len()];
        self.eval_into(grad, params, &mut out);
        Ok(out)
    }
}

pub fn genflow_field_into(grad: &[f64], params: &FlowParams, out: &mut [f64]) {
    for (o, &g) in out.iter_mut().zip(grad) {
        *o = -params.normalize(g);
    }
}

/// GenFlow: `ẋᵢ = -c1 gᵢ/|gᵢ|^((p-2)/(p-1)) - c2 gᵢ/|gᵢ|^((q-2)/(q-1))`.
pub fn genflow_field(grad: &[f64], params: &FlowParams) -> Result<Vec<f64>> {
    Flow::GenFlow.eval(grad, params)
}

pub fn fxts_gf_field_into(grad: &[f64], params: &FlowParams, out: &mut [f64]) {
    let scale = params.norm_scale(norm2(grad));
    for (o, g) in out.iter_mut().zip(grad) {
        *o = -g * scale;
    }
}

/// FxTS-GF: like GenFlow but normalized by `‖∇f‖₂` instead of per coordinate.
pub fn fxts_gf_field(grad: &[f64], params: &FlowParams) -> Result<Vec<f64>> {
    Flow::FxtsGf.eval(grad, params)
}

pub fn gradient_flow_field(grad: &[f64]) -> Result<Vec<f64>> {
    ensure_finite(grad, "gradient")?;
    Ok(grad.iter().map(|g| -g).collect())
}

/// Time derivative of the momentum flow's augmented state `(x, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDerivative {
    pub dx: Vec<f64>,
    pub dv: Vec<f64>,
}

pub fn genflow_momentum_field_into(grad: &[f64], v: &[f64], params: &FlowParams, dx: &mut [f64], dv: &mut [f64]) {
    for i in 0..grad.len() {
        dv[i] = grad[i] - params.normalize(v[i]);
        dx[i] = -v[i] - params.normalize(grad[i]);
    }
}

/// GenFlow(M):
/// `v̇ᵢ = gᵢ - N(vᵢ)`, `ẋᵢ = -vᵢ - N(gᵢ)` with `N` the per-coordinate normalization.
pub fn genflow_momentum_field(grad: &[f64], v: &[f64], params: &FlowParams) -> Result<AugmentedDerivative> {
    ensure_dim(grad.len(), v.len())?;
    ensure_finite(grad, "gradient")?;
    ensure_finite(v, "momentum")?;
    let mut dx = vec![0.0; grad.len()];
    let mut dv = vec![0.0; grad.len()];
    genflow_momentum_field_into(grad, v, params, &mut dx, &mut dv);
    Ok(AugmentedDerivative { dx, dv })
}

pub fn saddle_dynamics_field_into(grad_x: &[f64], grad_y: &[f64], params: &FlowParams, dx: &mut [f64], dy: &mut [f64]) {
    // ‖∇G‖ with ∇G = (∇ₓg, -∇ᵧg); the sign does not affect the norm.
    let s = libm::sqrt(grad_x.iter().chain(grad_y).map(|g| g * g).sum());
    let scale = params.norm_scale(s);
    for (o, g) in dx.iter_mut().zip(grad_x) {
        *o = -g * scale;
    }
    for (o, g) in dy.iter_mut().zip(grad_y) {
        *o = g * scale;
    }
}

/// Saddle-point dynamics: descent in `x`, ascent in `y`, both scaled by the same
/// function of `‖∇G‖`.
pub fn saddle_dynamics_field(grad_x: &[f64], grad_y: &[f64], params: &FlowParams) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure_finite(grad_x, "x-gradient")?;
    ensure_finite(grad_y, "y-gradient")?;
    let mut dx = vec![0.0; grad_x.len()];
    let mut dy = vec![0.0; grad_y.len()];
    saddle_dynamics_field_into(grad_x, grad_y, params, &mut dx, &mut dy);
    Ok((dx, dy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p3() -> FlowParams {
        FlowParams::new(3.0, 1.5).unwrap()
    }

    // Quotient form written straight from the definition; independent of `normalize`.
    fn quotient_form(g: f64, p: f64, q: f64) -> f64 {
        -(g / g.abs().powf((p - 2.0) / (p - 1.0))) - g / g.abs().powf((q - 2.0) / (q - 1.0))
    }

    #[test]
    fn rejects_out_of_range_exponents() {
        assert!(FlowParams::new(2.0, 1.5).is_err());
        assert!(FlowParams::new(3.0, 1.0).is_err());
        assert!(FlowParams::new(3.0, 2.0).is_err());
        assert!(FlowParams::new(f64::NAN, 1.5).is_err());
        assert!(p3().with_gains(0.0, 1.0).is_err());
        assert!(p3().with_eps_guard(-1.0).is_err());
    }

    #[test]
    fn genflow_examples() {
        assert_eq!(genflow_field(&[0.0, 0.0], &p3()).unwrap(), vec![0.0, 0.0]);
        assert_eq!(genflow_field(&[1.0], &p3()).unwrap(), vec![-2.0]);
        let oracle = -(2.0 / 2f64.powf(0.5) + 2.0 / 2f64.powf(-1.0));
        let got = genflow_field(&[2.0], &p3()).unwrap()[0];
        assert!((got - oracle).abs() < 1e-12);
        assert!((got + 5.414213562373095).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        assert_eq!(genflow_field(&[f64::NAN], &p3()), Err(Error::NonFinite("gradient")));
        assert!(fxts_gf_field(&[f64::INFINITY], &p3()).is_err());
        assert!(saddle_dynamics_field(&[0.0], &[f64::NAN], &p3()).is_err());
    }

    #[test]
    fn momentum_examples() {
        let d = genflow_momentum_field(&[0.0], &[0.0], &p3()).unwrap();
        assert_eq!((d.dx, d.dv), (vec![0.0], vec![0.0]));
        let d = genflow_momentum_field(&[1.0], &[0.0], &p3()).unwrap();
        assert_eq!((d.dx, d.dv), (vec![-2.0], vec![1.0]));
        let d = genflow_momentum_field(&[0.0], &[2.0], &p3()).unwrap();
        assert_eq!(d.dx, vec![-2.0]);
        assert!((d.dv[0] - quotient_form(2.0, 3.0, 1.5)).abs() < 1e-12);
        assert!(genflow_momentum_field(&[0.0], &[0.0, 1.0], &p3()).is_err());
    }

    #[test]
    fn fxts_examples() {
        assert_eq!(fxts_gf_field(&[0.0, 0.0], &p3()).unwrap(), vec![0.0, 0.0]);
        assert_eq!(fxts_gf_field(&[1.0, 0.0], &p3()).unwrap(), vec![-2.0, 0.0]);
        let got = fxts_gf_field(&[3.0, 4.0], &p3()).unwrap();
        let k = 5f64.powf(-0.5) + 5.0;
        assert!((got[0] + 3.0 * k).abs() < 1e-12);
        assert!((got[1] + 4.0 * k).abs() < 1e-12);
        assert!((got[0] + 16.34164078649987).abs() < 1e-10);
        assert!((got[1] + 21.78885438199983).abs() < 1e-10);
    }

    #[test]
    fn gradient_flow_examples() {
        assert_eq!(gradient_flow_field(&[0.0]).unwrap(), vec![-0.0]);
        assert_eq!(gradient_flow_field(&[1.0, -2.0]).unwrap(), vec![-1.0, 2.0]);
        assert_eq!(gradient_flow_field(&[0.5]).unwrap(), vec![-0.5]);
    }

    #[test]
    fn saddle_examples() {
        let (dx, dy) = saddle_dynamics_field(&[0.0], &[0.0], &p3()).unwrap();
        assert_eq!((dx, dy), (vec![0.0], vec![0.0]));
        let (dx, dy) = saddle_dynamics_field(&[1.0], &[0.0], &p3()).unwrap();
        assert_eq!((dx, dy), (vec![-2.0], vec![0.0]));
        let (dx, dy) = saddle_dynamics_field(&[2.0], &[0.0], &p3()).unwrap();
        assert!((dx[0] - quotient_form(2.0, 3.0, 1.5)).abs() < 1e-12);
        assert_eq!(dy, vec![0.0]);
    }

    #[test]
    fn continuity_at_zero() {
        let mut last = f64::INFINITY;
        for k in 1..=12 {
            let g = 10f64.powi(-k);
            let out = genflow_field(&[g, -g], &p3()).unwrap();
            let n = (out[0] * out[0] + out[1] * out[1]).sqrt();
            assert!(n < last);
            last = n;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn literal_mode_uses_guard() {
        let lit = p3().literal_quotient(true);
        assert_eq!(genflow_field(&[0.0], &lit).unwrap(), vec![0.0]);
        let got = genflow_field(&[1.0], &lit).unwrap()[0];
        let d: f64 = 1.0 + 1e-7;
        let want = -(1.0 / d.powf(0.5) + 1.0 / d.powf(-1.0));
        assert!((got - want).abs() < 1e-14);
    }

    fn params_strategy() -> impl Strategy<Value = FlowParams> {
        (2.05f64..20.0, 1.02f64..1.98).prop_map(|(p, q)| FlowParams::new(p, q).unwrap())
    }

    proptest! {
        #[test]
        fn coordinatewise_descent(g in prop::collection::vec(-1e3f64..1e3, 1..8), params in params_strategy()) {
            let out = genflow_field(&g, &params).unwrap();
            for (o, gi) in out.iter().zip(&g) {
                prop_assert!(o * gi <= 0.0);
                if *gi != 0.0 { prop_assert!(o * gi < 0.0); } else { prop_assert_eq!(*o, 0.0); }
            }
        }

        #[test]
        fn odd_symmetry(g in prop::collection::vec(-1e3f64..1e3, 1..8), params in params_strategy()) {
            let neg: Vec<f64> = g.iter().map(|x| -x).collect();
            let a = genflow_field(&g, &params).unwrap();
            let b = genflow_field(&neg, &params).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(*x, -*y);
            }
        }

        #[test]
        fn exponent_form_matches_quotient_form(
            mag in 1.001e-3f64..1e3, neg in any::<bool>(), params in params_strategy()
        ) {
            let g = if neg { -mag } else { mag };
            let got = genflow_field(&[g], &params).unwrap()[0];
            let want = quotient_form(g, params.p(), params.q());
            prop_assert!(((got - want) / want).abs() <= 1e-12, "{} vs {}", got, want);
        }

        #[test]
        fn saddle_field_descends_the_gradient_energy(
            gx in prop::collection::vec(-10f64..10.0, 1..5),
            gy in prop::collection::vec(-10f64..10.0, 1..5),
            params in params_strategy(),
        ) {
            let (dx, dy) = saddle_dynamics_field(&gx, &gy, &params).unwrap();
            let ip: f64 = dx.iter().zip(&gx).map(|(a, b)| a * b).sum::<f64>()
                - dy.iter().zip(&gy).map(|(a, b)| a * b).sum::<f64>();
            let zero = gx.iter().chain(&gy).all(|g| *g == 0.0);
            prop_assert!(ip <= 0.0);
            prop_assert_eq!(ip == 0.0, zero);
        }

        #[test]
        fn fxts_and_genflow_agree_in_one_dimension(g in -1e3f64..1e3, params in params_strategy()) {
            let a = genflow_field(&[g], &params).unwrap()[0];
            let b = fxts_gf_field(&[g], &params).unwrap()[0];
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }
}
