use alloc::vec;
use alloc::vec::Vec;

use super::Problem;
use crate::math::{cos, sin};
use crate::numerics::Matrix;

/// `f(x) = x² + 3 sin²(x)`: satisfies the PL inequality with `μ = 1/32` but is
/// not convex (`f''` changes sign). A stand-in benchmark for the PL-but-nonconvex
/// class.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlNonconvex;

impl PlNonconvex {
    pub const MODULUS: f64 = 1.0 / 32.0;

    pub fn new() -> Self {
        PlNonconvex
    }
}

impl Problem for PlNonconvex {
    fn name(&self) -> &'static str {
        "pl_nonconvex"
    }

    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s = sin(x[0]);
        x[0] * x[0] + 3.0 * s * s
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 2.0 * x[0] + 6.0 * sin(x[0]) * cos(x[0]);
    }

    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        Some(Matrix::diag(&[2.0 + 6.0 * cos(2.0 * x[0])]))
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn x_star(&self) -> Option<Vec<f64>> {
        Some(vec![0.0])
    }

    fn pl_modulus(&self) -> Option<f64> {
        Some(Self::MODULUS)
    }
}
