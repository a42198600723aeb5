//! Objectives with exact derivatives and, where known, their optimum.

mod game;
mod logistic;
mod nonconvex;
mod quadratic;
mod saddle;

use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::Matrix;

pub use game::QuadraticGame;
pub use logistic::{synthetic_clouds, LogisticRegression};
pub use nonconvex::PlNonconvex;
pub use quadratic::Quadratic;
pub use saddle::{CriticalKind, CriticalPoint, SaddleTestFunction};

/// A smooth objective on `ℝⁿ`.
///
/// Implementations are immutable after construction, so oracles can be called
/// from several threads at once.
pub trait Problem: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `out` (length `dim`).
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }

    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        None
    }

    fn f_star(&self) -> Option<f64> {
        None
    }

    fn x_star(&self) -> Option<Vec<f64>> {
        None
    }

    /// Modulus `μ` of `½‖∇f‖² ≥ μ (f - f*)`, when one is known.
    fn pl_modulus(&self) -> Option<f64> {
        None
    }
}

/// `min_x max_y g(x, y)` with `g` strongly convex in `x` and strongly concave in `y`.
pub trait MinimaxProblem: Send + Sync {
    fn name(&self) -> &'static str;

    /// `(n, m)`: sizes of `x` and `y`.
    fn dims(&self) -> (usize, usize);

    fn value(&self, x: &[f64], y: &[f64]) -> f64;

    fn grad_x_into(&self, x: &[f64], y: &[f64], out: &mut [f64]);

    fn grad_y_into(&self, x: &[f64], y: &[f64], out: &mut [f64]);

    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dims().0];
        self.grad_x_into(x, y, &mut g);
        g
    }

    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dims().1];
        self.grad_y_into(x, y, &mut g);
        g
    }

    /// `(μ₁, μ₂)`.
    fn moduli(&self) -> (f64, f64);

    fn saddle(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    /// `(∇²ₓₓ g, ∇²ᵧᵧ g)` at `(x, y)`, when available.
    fn hessian_blocks(&self, _x: &[f64], _y: &[f64]) -> Option<(Matrix, Matrix)> {
        None
    }
}

impl<P: Problem + ?Sized> Problem for &P {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient_into(x, out)
    }
    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        (**self).hessian(x)
    }
    fn f_star(&self) -> Option<f64> {
        (**self).f_star()
    }
    fn x_star(&self) -> Option<Vec<f64>> {
        (**self).x_star()
    }
    fn pl_modulus(&self) -> Option<f64> {
        (**self).pl_modulus()
    }
}
