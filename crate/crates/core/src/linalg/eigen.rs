//! Eigen-solvers for small dense matrices.
//!
//! Hermitian problems use cyclic complex Jacobi rotations. General matrices
//! only need eigenvalues here, computed by shifted QR iteration with
//! Householder factorizations.

use super::matrix::{c64, CMatrix, C64};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `m = Q·diag(λ)·Q†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::diag_real(&self.values);
        &(&self.vectors * &d) * &self.vectors.adjoint()
    }

    /// `Q·diag(f(λ))·Q†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let d = CMatrix::diag_real(&mapped);
        (&(&self.vectors * &d) * &self.vectors.adjoint()).hermitian_part()
    }
}

/// Hermitian eigen-decomposition by cyclic Jacobi rotations.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    m.check_finite()?;
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::InvalidInput("matrix is not Hermitian".into()));
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut q = CMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for qi in (p + 1)..n {
                let apq = a[(p, qi)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag; // e^{iφ}
                let app = a[(p, p)].re;
                let aqq = a[(qi, qi)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let e_neg = phase.conj();
                // columns: A ← A·G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, qi)];
                    a[(k, p)] = akp * c - akq * e_neg * s;
                    a[(k, qi)] = akp * s + akq * e_neg * c;
                    let qkp = q[(k, p)];
                    let qkq = q[(k, qi)];
                    q[(k, p)] = qkp * c - qkq * e_neg * s;
                    q[(k, qi)] = qkp * s + qkq * e_neg * c;
                }
                // rows: A ← G†·A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(qi, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(qi, k)] = apk * s + aqk * phase * c;
                }
                a[(p, qi)] = c64(0.0, 0.0);
                a[(qi, p)] = c64(0.0, 0.0);
                a[(p, p)] = c64(a[(p, p)].re, 0.0);
                a[(qi, qi)] = c64(a[(qi, qi)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep solver order
    order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).unwrap());
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &q.column(src));
    }
    Ok(HermitianEig { values, vectors })
}

/// Householder QR of a square matrix: returns `(Q, R)` with `Q` unitary.
pub(crate) fn householder_qr(m: &CMatrix) -> (CMatrix, CMatrix) {
    let n = m.rows();
    let cols = m.cols();
    let mut r = m.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.min(cols) {
        let x: Vec<C64> = (k..n).map(|i| r[(i, k)]).collect();
        let alpha_mag = super::matrix::norm(&x);
        if alpha_mag == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            c64(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let mut v = x.clone();
        v[0] += phase * alpha_mag;
        let vnorm = super::matrix::norm(&v);
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // R ← (I − 2vv†) R on rows k..n
        for j in 0..cols {
            let dot: C64 = (k..n).map(|i| v[i - k].conj() * r[(i, j)]).sum();
            for i in k..n {
                r[(i, j)] -= v[i - k] * dot * 2.0;
            }
        }
        // Q ← Q (I − 2vv†)
        for i in 0..n {
            let dot: C64 = (k..n).map(|l| q[(i, l)] * v[l - k]).sum();
            for l in k..n {
                q[(i, l)] -= dot * v[l - k].conj() * 2.0;
            }
        }
    }
    (q, r)
}

/// Eigenvalues of a general square matrix (unordered), by shifted QR
/// iteration with deflation of the trailing row.
pub fn eigenvalues_general(m: &CMatrix) -> Result<Vec<C64>> {
    m.check_finite()?;
    if !m.is_square() {
        return Err(Error::InvalidInput("eigenvalues need a square matrix".into()));
    }
    let mut a = m.clone();
    let mut out = Vec::with_capacity(m.rows());
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let mut iters_since_deflation = 0usize;
    while a.rows() > 0 {
        let n = a.rows();
        if n == 1 {
            out.push(a[(0, 0)]);
            break;
        }
        let off: f64 = (0..n - 1).map(|j| a[(n - 1, j)].norm()).fold(0.0, f64::max);
        if off <= 1e-15 * scale {
            out.push(a[(n - 1, n - 1)]);
            a = CMatrix::from_fn(n - 1, n - 1, |i, j| a[(i, j)]);
            iters_since_deflation = 0;
            continue;
        }
        // Wilkinson shift from the trailing 2x2 block.
        let (p, q, r, s) = (
            a[(n - 2, n - 2)],
            a[(n - 2, n - 1)],
            a[(n - 1, n - 2)],
            a[(n - 1, n - 1)],
        );
        let tr = p + s;
        let det = p * s - q * r;
        let disc = (tr * tr * 0.25 - det).sqrt();
        let l1 = tr * 0.5 + disc;
        let l2 = tr * 0.5 - disc;
        let mut mu = if (l1 - s).norm() < (l2 - s).norm() { l1 } else { l2 };
        iters_since_deflation += 1;
        if iters_since_deflation % 11 == 10 {
            // exceptional shift against stagnation
            mu += c64(0.75 * off, 0.3 * off);
        }
        if iters_since_deflation > 10_000 {
            return Err(Error::InvalidInput("QR iteration failed to converge".into()));
        }
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= mu;
        }
        let (qm, rm) = householder_qr(&shifted);
        a = &rm * &qm;
        for i in 0..n {
            a[(i, i)] += mu;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_eigenvalues() {
        let e = hermitian_eig(&CMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
    }

    #[test]
    fn diagonal_a_matrix() {
        let a = CMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let e = hermitian_eig(&a).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn golden_ratio_pair() {
        // λ² − 3λ + 1 = 0
        let c = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let e = hermitian_eig(&c).unwrap();
        let r5 = 5f64.sqrt();
        assert!((e.values[0] - (3.0 + r5) / 2.0).abs() < 1e-14);
        assert!((e.values[1] - (3.0 - r5) / 2.0).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&c) < 1e-14);
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                c64(i as f64 + 1.0, 0.0)
            } else if i < j {
                c64(0.3 * (i + j) as f64, 0.2 * (j as f64 - i as f64))
            } else {
                c64(0.3 * (i + j) as f64, -0.2 * (i as f64 - j as f64))
            }
        });
        let e = hermitian_eig(&m).unwrap();
        assert!(e.reconstruct().max_abs_diff(&m) < 1e-13);
        let qq = &e.vectors.adjoint() * &e.vectors;
        assert!(qq.max_abs_diff(&CMatrix::identity(4)) < 1e-13);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(hermitian_eig(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn general_eigenvalues_of_rotation() {
        let m = CMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let mut ev = eigenvalues_general(&m).unwrap();
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] - c64(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - c64(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn general_eigenvalues_of_triangular() {
        let m = CMatrix::from_real_rows(&[&[1.0, 5.0, 2.0], &[0.0, 3.0, 7.0], &[0.0, 0.0, -2.0]]);
        let mut ev: Vec<f64> = eigenvalues_general(&m).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
