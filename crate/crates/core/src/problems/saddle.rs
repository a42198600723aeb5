use alloc::vec;
use alloc::vec::Vec;

use super::Problem;
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Saddle,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub point: [f64; 2],
    pub kind: CriticalKind,
}

/// `f(x, y) = ½x² + ¼y⁴ - ½y²`: a strict saddle at the origin between the two
/// minima `(0, ±1)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SaddleTestFunction;

impl SaddleTestFunction {
    pub const SADDLE: [f64; 2] = [0.0, 0.0];

    pub fn new() -> Self {
        SaddleTestFunction
    }

    pub fn critical_points(&self) -> [CriticalPoint; 3] {
        [
            CriticalPoint {
                point: Self::SADDLE,
                kind: CriticalKind::Saddle,
            },
            CriticalPoint {
                point: [0.0, -1.0],
                kind: CriticalKind::Minimum,
            },
            CriticalPoint {
                point: [0.0, 1.0],
                kind: CriticalKind::Minimum,
            },
        ]
    }
}

impl Problem for SaddleTestFunction {
    fn name(&self) -> &'static str {
        "saddle"
    }

    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        0.5 * a * a + 0.25 * b * b * b * b - 0.5 * b * b
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0];
        out[1] = x[1] * x[1] * x[1] - x[1];
    }

    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        Some(Matrix::diag(&[1.0, 3.0 * x[1] * x[1] - 1.0]))
    }

    fn f_star(&self) -> Option<f64> {
        Some(-0.25)
    }

    /// The minimizer is not unique; see [`SaddleTestFunction::critical_points`].
    fn x_star(&self) -> Option<Vec<f64>> {
        None
    }
}

impl SaddleTestFunction {
    /// The minimizer nearest to `x`.
    pub fn nearest_minimizer(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0, if x[1] < 0.0 { -1.0 } else { 1.0 }]
    }
}
