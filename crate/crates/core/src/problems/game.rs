use alloc::vec;
use alloc::vec::Vec;

use super::MinimaxProblem;
use crate::error::{ensure_finite, Error, Result};
use crate::math::dot;
use crate::numerics::Matrix;

/// `g(x, y) = (μ₁/2)‖x‖² + xᵀBy - (μ₂/2)‖y‖²`, saddle at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGame {
    mu1: f64,
    mu2: f64,
    coupling: Matrix,
}

impl QuadraticGame {
    pub fn new(mu1: f64, mu2: f64, coupling: Matrix) -> Result<Self> {
        if !(mu1.is_finite() && mu1 > 0.0) {
            return Err(Error::param("mu1", "must be positive"));
        }
        if !(mu2.is_finite() && mu2 > 0.0) {
            return Err(Error::param("mu2", "must be positive"));
        }
        ensure_finite(coupling.as_slice(), "coupling matrix")?;
        if coupling.rows() == 0 || coupling.cols() == 0 {
            return Err(Error::param("B", "coupling matrix must be non-empty"));
        }
        Ok(QuadraticGame { mu1, mu2, coupling })
    }

    pub fn coupling(&self) -> &Matrix {
        &self.coupling
    }
}

impl MinimaxProblem for QuadraticGame {
    fn name(&self) -> &'static str {
        "quadratic_game"
    }

    fn dims(&self) -> (usize, usize) {
        (self.coupling.rows(), self.coupling.cols())
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        0.5 * self.mu1 * dot(x, x) + dot(x, &self.coupling.mul_vec(y)) - 0.5 * self.mu2 * dot(y, y)
    }

    fn grad_x_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.coupling.mul_vec_into(y, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += self.mu1 * xi;
        }
    }

    fn grad_y_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.coupling.tr_mul_vec_into(x, out);
        for (o, yi) in out.iter_mut().zip(y) {
            *o -= self.mu2 * yi;
        }
    }

    fn moduli(&self) -> (f64, f64) {
        (self.mu1, self.mu2)
    }

    fn saddle(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let (n, m) = self.dims();
        Some((vec![0.0; n], vec![0.0; m]))
    }

    fn hessian_blocks(&self, _x: &[f64], _y: &[f64]) -> Option<(Matrix, Matrix)> {
        let (n, m) = self.dims();
        Some((Matrix::diag(&vec![self.mu1; n]), Matrix::diag(&vec![-self.mu2; m])))
    }
}
