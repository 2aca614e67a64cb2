//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Output convention: singular values descending (stable with respect to
//! the rotation order on ties), and every column of `u` has its first
//! nonzero component real and positive. For the leading `min(rows, cols)`
//! columns the matching column of `v` absorbs the same phase, so
//! `u·diag(s)·v†` is unchanged.

use super::matrix::{inner, norm, CMatrix, CVector, C64};
use crate::error::Result;

const MAX_SWEEPS: usize = 80;

/// `m = u · Σ · v†` with `u`, `v` square unitary and `Σ` the
/// `rows × cols` rectangular diagonal built from `s`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    /// Number of singular values above `rel_tol · s_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&x| x > rel_tol * smax).count()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut sigma = CMatrix::zeros(m, n);
        for (i, &x) in self.s.iter().enumerate() {
            sigma[(i, i)] = C64::new(x, 0.0);
        }
        &(&self.u * &sigma) * &self.v.adjoint()
    }
}

/// Index of the first component whose modulus is non-negligible.
fn first_nonzero(v: &[C64]) -> Option<usize> {
    let scale = norm(v);
    if scale == 0.0 {
        return None;
    }
    v.iter().position(|z| z.norm() > 1e-10 * scale)
}

fn phase_of_first(v: &[C64]) -> C64 {
    match first_nonzero(v) {
        Some(k) => v[k].conj() / v[k].norm(),
        None => C64::new(1.0, 0.0),
    }
}

/// Extends orthonormal columns to a full orthonormal basis of `C^n` by
/// Gram–Schmidt against the standard basis.
pub(crate) fn complete_basis(n: usize, cols: &mut Vec<CVector>) {
    let mut k = 0;
    while cols.len() < n && k < n {
        let mut cand = super::matrix::basis(n, k);
        for _ in 0..2 {
            for c in cols.iter() {
                let proj = inner(&cand, c);
                for (a, b) in cand.iter_mut().zip(c) {
                    *a -= proj * b;
                }
            }
        }
        let nrm = norm(&cand);
        if nrm > 1e-8 {
            for a in cand.iter_mut() {
                *a /= nrm;
            }
            cols.push(cand);
        }
        k += 1;
    }
}

/// Applies the plane rotation to columns `p < q`.
fn rotate(cols: &mut [CVector], p: usize, q: usize, c: f64, s: f64, e_neg: C64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let xp = *x;
        let yq = *y * e_neg;
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

/// One-sided Jacobi on a tall (rows ≥ cols) matrix.
fn svd_tall(m: &CMatrix) -> Svd {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<CVector> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<CVector> = (0..cols).map(|j| super::matrix::basis(cols, j)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = inner(&a[q], &a[p]); // a_p† a_q
                let gmag = gamma.norm();
                if gmag == 0.0 || gmag <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e_neg = gamma.conj() / gmag; // e^{-iφ}
                let zeta = (beta - alpha) / (2.0 * gmag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s, e_neg);
                rotate(&mut v, p, q, c, s, e_neg);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let smax = norms.iter().copied().fold(0.0, f64::max);
    let mut s = Vec::with_capacity(cols);
    let mut vcols: Vec<CVector> = Vec::with_capacity(cols);
    let mut slots: Vec<Option<CVector>> = Vec::with_capacity(cols);
    for &j in &order {
        let sj = norms[j];
        s.push(sj);
        if sj > 0.0 && sj > 1e-14 * smax {
            slots.push(Some(a[j].iter().map(|z| z / sj).collect()));
        } else {
            slots.push(None);
        }
        vcols.push(v[j].clone());
    }
    // Left vectors for (numerically) zero singular values come from basis
    // completion; they carry no information about m.
    let mut ucols: Vec<CVector> = slots.iter().flatten().cloned().collect();
    let known = ucols.len();
    complete_basis(rows, &mut ucols);
    let mut extra = ucols.split_off(known).into_iter();
    let mut ucols: Vec<CVector> = slots
        .into_iter()
        .map(|slot| slot.unwrap_or_else(|| extra.next().expect("basis completion")))
        .collect();
    ucols.extend(extra);

    for j in 0..rows {
        let ph = phase_of_first(&ucols[j]);
        for z in ucols[j].iter_mut() {
            *z *= ph;
        }
        if j < cols {
            for z in vcols[j].iter_mut() {
                *z *= ph;
            }
        }
    }
    Svd {
        u: CMatrix::from_columns(rows, &ucols),
        s,
        v: CMatrix::from_columns(cols, &vcols),
    }
}

/// Full SVD of an arbitrary finite matrix.
pub fn svd(m: &CMatrix) -> Result<Svd> {
    m.check_finite()?;
    if m.rows() >= m.cols() {
        return Ok(svd_tall(m));
    }
    // m = (m†)† = (U Σ V†)† = V Σᵀ U†
    let t = svd_tall(&m.adjoint());
    let mut u = t.v;
    let mut v = t.u;
    // re-impose the phase convention on the new left factor
    for j in 0..u.cols() {
        let col = u.column(j);
        let ph = phase_of_first(&col);
        u.set_column(j, &super::matrix::scale_vec(&col, ph));
        if j < t.s.len() {
            let vc = v.column(j);
            v.set_column(j, &super::matrix::scale_vec(&vc, ph));
        }
    }
    Ok(Svd { u, s: t.s, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::c64;

    fn unitary_err(m: &CMatrix) -> f64 {
        (&m.adjoint() * m).max_abs_diff(&CMatrix::identity(m.cols()))
    }

    #[test]
    fn diagonal_input_is_fixed_point() {
        let d = CMatrix::diag_real(&[2.0, 1.0]);
        let r = svd(&d).unwrap();
        assert_eq!(r.s, vec![2.0, 1.0]);
        assert!(r.u.max_abs_diff(&CMatrix::identity(2)) < 1e-15);
        assert!(r.v.max_abs_diff(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn zero_matrix() {
        let r = svd(&CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(r.s, vec![0.0, 0.0]);
        assert!(unitary_err(&r.u) < 1e-15);
        assert!(unitary_err(&r.v) < 1e-15);
    }

    #[test]
    fn positive_two_by_two() {
        let c = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let r = svd(&c).unwrap();
        let r5 = 5f64.sqrt();
        assert!((r.s[0] - (3.0 + r5) / 2.0).abs() < 1e-14);
        assert!((r.s[1] - (3.0 - r5) / 2.0).abs() < 1e-14);
        assert!(r.reconstruct().max_abs_diff(&c) < 1e-14);
    }

    #[test]
    fn rectangular_and_rank_deficient() {
        let x = vec![c64(1.0, 1.0), c64(0.0, 2.0), c64(-1.0, 0.5)];
        let y = vec![c64(0.5, 0.0), c64(1.0, -1.0)];
        for m in [CMatrix::outer(&x, &y), CMatrix::outer(&y, &x)] {
            let r = svd(&m).unwrap();
            assert!(r.reconstruct().max_abs_diff(&m) < 1e-13);
            assert!(unitary_err(&r.u) < 1e-13);
            assert!(unitary_err(&r.v) < 1e-13);
            assert!((r.s[0] - norm(&x) * norm(&y)).abs() < 1e-13);
            assert_eq!(r.rank(1e-12), 1);
        }
    }

    #[test]
    fn phase_convention_holds() {
        let m = CMatrix::from_fn(3, 3, |i, j| {
            c64((i * 3 + j) as f64 * 0.1 + 0.3, (i as f64) - (j as f64) * 0.7)
        });
        let r = svd(&m).unwrap();
        for j in 0..3 {
            let col = r.u.column(j);
            let k = first_nonzero(&col).unwrap();
            assert!(col[k].im.abs() < 1e-14 && col[k].re > 0.0);
        }
        assert!(r.reconstruct().max_abs_diff(&m) < 1e-13);
    }
}
