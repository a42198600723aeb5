use alloc::vec::Vec;

use super::Matrix;
use crate::error::{Error, Result};
use crate::math::sqrt;

const MAX_SWEEPS: usize = 100;
const REL_TOL: f64 = 1e-12;

/// Eigen-decomposition of a symmetric matrix and the derived quantities used by
/// the saddle analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal; column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Matrix,
    /// `Λmax = max |λ|`.
    pub lambda_abs_max: f64,
    /// `Λmin = min |λ|`.
    pub lambda_abs_min: f64,
    /// `|H| = S |D| Sᵀ`.
    pub abs_matrix: Matrix,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Rebuild `S diag(λ) Sᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        rebuild(&self.eigenvectors, &self.eigenvalues)
    }

    /// True when no eigenvalue is zero (within `tol`) and at least one is negative.
    pub fn is_strict_saddle(&self, tol: f64) -> bool {
        self.lambda_abs_min > tol && self.eigenvalues[0] < 0.0
    }
}

fn rebuild(s: &Matrix, d: &[f64]) -> Matrix {
    let n = d.len();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (0..n).map(|k| s[(i, k)] * d[k] * s[(j, k)]).sum();
        }
    }
    out
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Sweeps plane rotations over every off-diagonal pair until the off-diagonal
/// Frobenius norm drops to `1e-12 ‖H‖_F`. Input asymmetry above `1e-12 ‖H‖_F` is
/// rejected; smaller asymmetry is averaged away.
pub fn symmetric_eigen(h: &Matrix) -> Result<SpectralData> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            actual: h.cols(),
        });
    }
    if h.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let n = h.rows();
    let scale = h.frobenius();
    let asym = h.max_asymmetry();
    if asym > REL_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    let mut a = h.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = Matrix::identity(n);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= REL_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > REL_TOL * scale {
        return Err(Error::Failed("Jacobi sweeps did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[(k, k)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[(row, col)] = v[(row, k)];
        }
    }

    let abs_vals: Vec<f64> = eigenvalues.iter().map(|l| l.abs()).collect();
    let lambda_abs_max = abs_vals.iter().copied().fold(0.0, f64::max);
    let lambda_abs_min = abs_vals.iter().copied().fold(f64::INFINITY, f64::min);
    let abs_matrix = rebuild(&eigenvectors, &abs_vals);

    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
        lambda_abs_max,
        lambda_abs_min: if n == 0 { 0.0 } else { lambda_abs_min },
        abs_matrix,
    })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sqrt(s)
}

// A <- JᵀAJ, V <- VJ with J the (p, q) rotation that annihilates a_pq.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + sqrt(1.0 + tau * tau))
    };
    let c = 1.0 / sqrt(1.0 + t * t);
    let s = t * c;
    let n = a.rows();
    for k in 0..n {
        let x = a[(k, p)];
        let y = a[(k, q)];
        a[(k, p)] = c * x - s * y;
        a[(k, q)] = s * x + c * y;
    }
    for k in 0..n {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = c * x - s * y;
        a[(q, k)] = s * x + c * y;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let x = v[(k, p)];
        let y = v[(k, q)];
        v[(k, p)] = c * x - s * y;
        v[(k, q)] = s * x + c * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::vec;

    // Closed-form roots of the characteristic polynomial, ascending.
    fn char_poly_roots(h: &Matrix) -> Vec<f64> {
        match h.rows() {
            1 => vec![h[(0, 0)]],
            2 => {
                let (a, b, d) = (h[(0, 0)], h[(0, 1)], h[(1, 1)]);
                let m = 0.5 * (a + d);
                let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                vec![m - r, m + r]
            }
            3 => {
                // Trigonometric solution of det(H - λI) = 0 for symmetric H.
                let p1 = h[(0, 1)].powi(2) + h[(0, 2)].powi(2) + h[(1, 2)].powi(2);
                let tr = h[(0, 0)] + h[(1, 1)] + h[(2, 2)];
                let qm = tr / 3.0;
                let p2 = (h[(0, 0)] - qm).powi(2) + (h[(1, 1)] - qm).powi(2) + (h[(2, 2)] - qm).powi(2) + 2.0 * p1;
                let pp = (p2 / 6.0).sqrt();
                if pp == 0.0 {
                    return vec![qm; 3];
                }
                let mut b = Matrix::zeros(3, 3);
                for i in 0..3 {
                    for j in 0..3 {
                        b[(i, j)] = (h[(i, j)] - if i == j { qm } else { 0.0 }) / pp;
                    }
                }
                let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
                    - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
                    + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
                let r = (det / 2.0).clamp(-1.0, 1.0);
                let phi = r.acos() / 3.0;
                let l1 = qm + 2.0 * pp * phi.cos();
                let l3 = qm + 2.0 * pp * (phi + 2.0 * core::f64::consts::PI / 3.0).cos();
                let mut out = vec![l1, 3.0 * qm - l1 - l3, l3];
                out.sort_by(f64::total_cmp);
                out
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn diagonal_input() {
        let s = symmetric_eigen(&Matrix::diag(&[-1.0, 2.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 2.0]);
        assert_eq!(s.abs_matrix, Matrix::diag(&[1.0, 2.0]));
        assert_eq!(s.lambda_abs_max, 2.0);
        assert_eq!(s.lambda_abs_min, 1.0);
        assert!(s.is_strict_saddle(1e-12));
    }

    #[test]
    fn swap_matrix_has_identity_abs() {
        let h = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let s = symmetric_eigen(&h).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(s.abs_matrix.sub(&Matrix::identity(2)).frobenius() < 1e-14);
    }

    #[test]
    fn two_by_two_against_hand_roots() {
        // det([[2-λ,1],[1,2-λ]]) = (2-λ)² - 1 → λ ∈ {1, 3}
        let h = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let s = symmetric_eigen(&h).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_symmetric_and_non_square() {
        let h = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&h), Err(Error::NotSymmetric { .. })));
        assert!(symmetric_eigen(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn zero_matrix() {
        let s = symmetric_eigen(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0; 3]);
        assert_eq!(s.lambda_abs_min, 0.0);
    }

    fn sym_matrix(max_n: usize) -> impl Strategy<Value = Matrix> {
        (1..=max_n).prop_flat_map(|n| {
            prop::collection::vec(-10.0f64..10.0, n * n).prop_map(move |raw| {
                let mut m = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..=i {
                        m[(i, j)] = raw[i * n + j];
                        m[(j, i)] = raw[i * n + j];
                    }
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn decomposition_invariants(h in sym_matrix(8)) {
            let s = symmetric_eigen(&h).unwrap();
            let n = h.rows();
            let scale = h.frobenius().max(1e-300);
            prop_assert!(s.reconstruct().sub(&h).frobenius() / scale <= 1e-10);
            let sts = s.eigenvectors.transpose().matmul(&s.eigenvectors).unwrap();
            prop_assert!(sts.sub(&Matrix::identity(n)).frobenius() <= 1e-10);
            let abs2 = s.abs_matrix.matmul(&s.abs_matrix).unwrap();
            let hth = h.transpose().matmul(&h).unwrap();
            prop_assert!(abs2.sub(&hth).frobenius() / (scale * scale) <= 1e-10);
            prop_assert!(s.abs_matrix.max_asymmetry() <= 1e-12 * scale);
            let amax = s.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
            prop_assert_eq!(s.lambda_abs_max, amax);
        }

        #[test]
        fn eigenvalues_match_characteristic_polynomial(h in sym_matrix(3)) {
            let s = symmetric_eigen(&h).unwrap();
            let roots = char_poly_roots(&h);
            for (a, b) in s.eigenvalues.iter().zip(&roots) {
                prop_assert!((a - b).abs() <= 1e-8, "{:?} vs {:?}", s.eigenvalues, roots);
            }
        }
    }
}
