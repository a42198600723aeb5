use alloc::vec;
use alloc::vec::Vec;

use super::Problem;
use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::math::dot;
use crate::numerics::{symmetric_eigen, Matrix};

/// `f(x) = ½ xᵀAx - bᵀx` with `A` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    a: Matrix,
    b: Vec<f64>,
    x_star: Vec<f64>,
    f_star: f64,
    mu: f64,
}

impl Quadratic {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        ensure_dim(a.rows(), b.len())?;
        ensure_finite(a.as_slice(), "quadratic matrix")?;
        ensure_finite(&b, "quadratic offset")?;
        let spec = symmetric_eigen(&a)?;
        let mu = spec.eigenvalues.first().copied().unwrap_or(0.0);
        if !(mu > 0.0) {
            return Err(Error::param("A", "matrix must be positive definite"));
        }
        // x* = S diag(1/λ) Sᵀ b
        let n = b.len();
        let s = &spec.eigenvectors;
        let mut coeff = vec![0.0; n];
        s.tr_mul_vec_into(&b, &mut coeff);
        for (c, l) in coeff.iter_mut().zip(&spec.eigenvalues) {
            *c /= l;
        }
        let x_star = s.mul_vec(&coeff);
        let f_star = -0.5 * dot(&b, &x_star);
        Ok(Quadratic { a, b, x_star, f_star, mu })
    }

    /// `f(x) = ½ ‖x‖²` on `ℝⁿ`.
    pub fn isotropic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "dimension must be positive"));
        }
        Self::new(Matrix::identity(n), vec![0.0; n])
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn offset(&self) -> &[f64] {
        &self.b
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.a.quad_form(x) - dot(&self.b, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.a.mul_vec_into(x, out);
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o -= b;
        }
    }

    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(self.a.clone())
    }

    fn f_star(&self) -> Option<f64> {
        Some(self.f_star)
    }

    fn x_star(&self) -> Option<Vec<f64>> {
        Some(self.x_star.clone())
    }

    fn pl_modulus(&self) -> Option<f64> {
        Some(self.mu)
    }
}
