//! Norms, factorization-derived functions and small solvers.

use super::eigen::hermitian_eig;
use super::matrix::{norm, CMatrix, CVector, C64};
use super::svd::{svd, Svd};
use crate::error::{Error, Result};

/// Condition-number ceiling above which an operator is treated as singular.
pub const MAX_CONDITION: f64 = 1e8;

const PSD_TOL: f64 = 1e-12;

/// Schatten-1 norm: the sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    svd(m).map(|r| r.s.iter().sum()).unwrap_or(f64::NAN)
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    svd(m).map(|r| r.s[0]).unwrap_or(f64::NAN)
}

/// Ratio of extreme singular values, `+∞` for singular matrices.
pub fn condition_number(m: &CMatrix) -> f64 {
    match svd(m) {
        Ok(r) => {
            let smin = *r.s.last().unwrap();
            if smin == 0.0 {
                f64::INFINITY
            } else {
                r.s[0] / smin
            }
        }
        Err(_) => f64::NAN,
    }
}

/// Rejects non-square matrices and those with condition number above
/// [`MAX_CONDITION`].
pub fn check_invertible(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidInput("expected a square operator".into()));
    }
    let cond = condition_number(m);
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned {
            cond,
            limit: MAX_CONDITION,
        });
    }
    Ok(())
}

/// Polar decomposition `m = u·|m|`.
#[derive(Debug, Clone)]
pub struct Polar {
    /// Partial isometry (unitary when `m` is invertible).
    pub isometry: CMatrix,
    /// `|m| = (m†m)^{1/2}`.
    pub absolute: CMatrix,
}

/// Polar decomposition of a square matrix, built from its SVD
/// `m = U Σ V†` as `u = U V†` and `|m| = V Σ V†`. On the kernel of `|m|`
/// the isometry is set to zero so that it is a genuine partial isometry.
pub fn polar(m: &CMatrix) -> Result<Polar> {
    if !m.is_square() {
        return Err(Error::InvalidInput("polar decomposition needs a square matrix".into()));
    }
    let Svd { u, s, v } = svd(m)?;
    let n = m.rows();
    let smax = s[0];
    let rank = s.iter().filter(|&&x| x > 0.0 && x > 1e-14 * smax).count();
    let mut iso = CMatrix::zeros(n, n);
    for k in 0..rank {
        iso += &CMatrix::outer(&u.column(k), &v.column(k));
    }
    let absolute = (&(&v * &CMatrix::diag_real(&s)) * &v.adjoint()).hermitian_part();
    Ok(Polar {
        isometry: iso,
        absolute,
    })
}

/// Positive square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    let scale = m.max_abs().max(1.0);
    if let Some(&neg) = eig.values.iter().find(|&&l| l < -PSD_TOL * scale) {
        return Err(Error::InvalidInput(format!(
            "matrix is not positive semidefinite (eigenvalue {neg:.3e})"
        )));
    }
    Ok(eig.map(|l| l.max(0.0).sqrt()))
}

/// `(m†m + ε·I)^{1/2}`: an invertible positive operator with
/// `‖A(ε)x‖ ≥ ‖m x‖` for every `x`.
pub fn eps_regularize(m: &CMatrix, eps: f64) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::InvalidInput("eps_regularize needs a square matrix".into()));
    }
    if eps.is_nan() || eps <= 0.0 || !eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "regularization parameter must be positive, got {eps}"
        )));
    }
    m.check_finite()?;
    let gram = (&m.adjoint() * m).hermitian_part();
    let eig = hermitian_eig(&gram)?;
    Ok(eig.map(|l| (l.max(0.0) + eps).sqrt()))
}

/// Inverse of a square matrix by Gauss–Jordan elimination with partial
/// pivoting. Fails on exactly singular input; callers that care about
/// conditioning check it first.
pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::InvalidInput("inverse needs a square matrix".into()));
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = CMatrix::identity(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().partial_cmp(&a[(j, col)].norm()).unwrap())
            .unwrap();
        if a[(piv, col)].norm() == 0.0 {
            return Err(Error::IllConditioned {
                cond: f64::INFINITY,
                limit: MAX_CONDITION,
            });
        }
        if piv != col {
            for j in 0..n {
                let t = a[(col, j)];
                a[(col, j)] = a[(piv, j)];
                a[(piv, j)] = t;
                let t = inv[(col, j)];
                inv[(col, j)] = inv[(piv, j)];
                inv[(piv, j)] = t;
            }
        }
        let d = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[(i, col)];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let ac = a[(col, j)];
                let ic = inv[(col, j)];
                a[(i, j)] -= f * ac;
                inv[(i, j)] -= f * ic;
            }
        }
    }
    Ok(inv)
}

/// Solves the square system `m x = b`.
pub fn solve(m: &CMatrix, b: &[C64]) -> Result<CVector> {
    Ok(inverse(m)?.mul_vec(b))
}

/// Orthonormal basis (as columns) of the kernel of `m`, using singular
/// values `≤ tol` as the cutoff.
pub fn nullspace(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let r = svd(m)?;
    let n = m.cols();
    let rank = r.s.iter().filter(|&&x| x > tol).count();
    let cols: Vec<CVector> = (rank..n).map(|j| r.v.column(j)).collect();
    // an n×0 matrix when the kernel is trivial
    Ok(CMatrix::from_columns(n, &cols))
}

/// Orthonormal basis of the column span of `m`, cutoff `tol` on singular
/// values.
pub fn orth(m: &CMatrix, tol: f64) -> Result<Vec<CVector>> {
    let r = svd(m)?;
    let rank = r.s.iter().filter(|&&x| x > tol).count();
    Ok((0..rank).map(|j| r.u.column(j)).collect())
}

/// The rank-one operator `g ⊗ h : f ↦ ⟨f|h⟩ g`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOne {
    pub g: CVector,
    pub h: CVector,
}

impl RankOne {
    pub fn new(g: CVector, h: CVector) -> Self {
        RankOne { g, h }
    }

    /// Materializes `g·h†`.
    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::outer(&self.g, &self.h)
    }

    /// `‖g‖·‖h‖`, which is both the operator and the trace norm.
    pub fn norm(&self) -> f64 {
        norm(&self.g) * norm(&self.h)
    }

    pub fn apply(&self, f: &[C64]) -> CVector {
        let c = super::matrix::inner(f, &self.h);
        self.g.iter().map(|z| z * c).collect()
    }
}
