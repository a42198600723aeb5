use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Problem;
use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::math::{dot, exp, ln_1p};
use crate::numerics::Matrix;

/// Regularized logistic loss
/// `f(w) = (1/N) Σ log(1 + exp(-yᵢ wᵀxᵢ)) + (l2/2)‖w‖²` with labels `yᵢ ∈ {-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    features: Matrix,
    labels: Vec<f64>,
    l2: f64,
}

/// `log(1 + eᶻ)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + ln_1p(exp(-z.abs()))
}

/// `1 / (1 + e⁻ᶻ)` without overflow.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

impl LogisticRegression {
    pub fn new(features: Matrix, labels: Vec<f64>, l2: f64) -> Result<Self> {
        ensure_dim(features.rows(), labels.len())?;
        if labels.is_empty() || features.cols() == 0 {
            return Err(Error::param("features", "need at least one sample and one feature"));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::param("labels", "labels must be -1 or +1"));
        }
        ensure_finite(features.as_slice(), "features")?;
        if !(l2.is_finite() && l2 >= 0.0) {
            return Err(Error::param("l2", "must be non-negative"));
        }
        Ok(LogisticRegression { features, labels, l2 })
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    fn margin(&self, i: usize, w: &[f64]) -> f64 {
        self.labels[i] * dot(self.features.row(i), w)
    }
}

impl Problem for LogisticRegression {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.features.cols()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let n = self.samples() as f64;
        let loss: f64 = (0..self.samples()).map(|i| softplus(-self.margin(i, w))).sum();
        loss / n + 0.5 * self.l2 * dot(w, w)
    }

    fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        let n = self.samples() as f64;
        for (o, wi) in out.iter_mut().zip(w) {
            *o = self.l2 * wi;
        }
        for i in 0..self.samples() {
            let c = -self.labels[i] * sigmoid(-self.margin(i, w)) / n;
            for (o, xij) in out.iter_mut().zip(self.features.row(i)) {
                *o += c * xij;
            }
        }
    }

    fn hessian(&self, w: &[f64]) -> Option<Matrix> {
        let d = self.dim();
        let n = self.samples() as f64;
        let mut h = Matrix::diag(&vec![self.l2; d]);
        for i in 0..self.samples() {
            let s = sigmoid(self.margin(i, w));
            let c = s * (1.0 - s) / n;
            let row = self.features.row(i);
            for a in 0..d {
                for b in a..d {
                    h[(a, b)] += c * row[a] * row[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        Some(h)
    }

    /// `l2` when positive: the loss is then `l2`-strongly convex, which implies
    /// the PL inequality with the same constant.
    fn pl_modulus(&self) -> Option<f64> {
        (self.l2 > 0.0).then_some(self.l2)
    }
}

/// Two Gaussian clouds in `ℝᵈ` centred at `±1.5·(1, …, 1)` with unit variance.
///
/// Sample `i` has label `+1` for even `i` and `-1` for odd `i`; coordinates are
/// `label · 1.5 + ξ` with `ξ` standard normal drawn from a ChaCha8 stream seeded
/// by `seed`, row by row.
pub fn synthetic_clouds(samples: usize, dim: usize, l2: f64, seed: u64) -> Result<LogisticRegression> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(samples * dim);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        labels.push(y);
        for _ in 0..dim {
            let xi: f64 = StandardNormal.sample(&mut rng);
            data.push(1.5 * y + xi);
        }
    }
    LogisticRegression::new(Matrix::from_row_major(samples, dim, data)?, labels, l2)
}
