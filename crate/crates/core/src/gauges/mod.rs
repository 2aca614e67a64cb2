//! Gauges attached to a family of operator pairs `(A_i, B_i)`.
//!
//! * the majorant `g(x, y) = Σ_i ‖A_i x‖‖B_i y‖`;
//! * the Δ-gauge `Σ_i ‖A_i T B_i†‖₁`;
//! * the dual gauge `sup |⟨Ux|y⟩| / g(x, y)` (see [`kstar_gauge`]);
//! * the atomic gauge of `conv K`, `K = {x y† : g(x, y) ≤ 1}`, by column
//!   generation (see [`convk_gauge`]).
//!
//! Shapes: `x ∈ C^{dim H}`, `y ∈ C^{dim K}`, forms `U` are
//! `dim K × dim H` and trace-class arguments `T` are `dim H × dim K`, so
//! that `tr(U·x y†) = ⟨Ux|y⟩`.

mod convk;
mod kstar;
mod lp;

pub use convk::{convk_gauge, in_convk, Atom, ConvkConfig, GaugeReport, Membership};
pub use kstar::{kstar_gauge, KStarConfig, KStarResult};

use crate::error::{Error, Result};
use crate::linalg::{check_invertible, norm, nullspace, svd, trace_norm, CMatrix, CVector};

/// An ordered list of pairs `(A_i, B_i)` with `A_i` acting on `H` and
/// `B_i` on `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFamily {
    pairs: Vec<(CMatrix, CMatrix)>,
    invertible: Vec<bool>,
}

impl FormFamily {
    pub fn new(pairs: Vec<(CMatrix, CMatrix)>) -> Result<Self> {
        let Some((a0, b0)) = pairs.first() else {
            return Err(Error::InvalidInput("a form family needs at least one pair".into()));
        };
        let (h, k) = (a0.rows(), b0.rows());
        for (i, (a, b)) in pairs.iter().enumerate() {
            if !a.is_square() || !b.is_square() {
                return Err(Error::InvalidInput(format!("pair {i}: operators must be square")));
            }
            if a.rows() != h || b.rows() != k {
                return Err(Error::DimensionMismatch(format!(
                    "pair {i} acts on C^{} x C^{}, pair 0 on C^{h} x C^{k}",
                    a.rows(),
                    b.rows()
                )));
            }
            a.check_finite()?;
            b.check_finite()?;
        }
        let invertible = pairs
            .iter()
            .map(|(a, b)| check_invertible(a).is_ok() && check_invertible(b).is_ok())
            .collect();
        Ok(FormFamily { pairs, invertible })
    }

    /// The single pair `(I, I)`, whose gauges are the classical trace and
    /// operator norms.
    pub fn trivial(dim_h: usize, dim_k: usize) -> Self {
        Self::new(vec![(CMatrix::identity(dim_h), CMatrix::identity(dim_k))]).expect("identity pair is valid")
    }

    pub fn pairs(&self) -> &[(CMatrix, CMatrix)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim_h(&self) -> usize {
        self.pairs[0].0.rows()
    }

    pub fn dim_k(&self) -> usize {
        self.pairs[0].1.rows()
    }

    /// Whether both operators of pair `i` have condition number at most
    /// [`crate::linalg::MAX_CONDITION`].
    pub fn is_invertible(&self, i: usize) -> bool {
        self.invertible[i]
    }

    pub fn all_invertible(&self) -> bool {
        self.invertible.iter().all(|&b| b)
    }

    pub(crate) fn check_form(&self, u: &CMatrix) -> Result<()> {
        if u.rows() != self.dim_k() || u.cols() != self.dim_h() {
            return Err(Error::DimensionMismatch(format!(
                "form must be {}x{}, got {}x{}",
                self.dim_k(),
                self.dim_h(),
                u.rows(),
                u.cols()
            )));
        }
        u.check_finite()
    }

    pub(crate) fn check_trace_class(&self, t: &CMatrix) -> Result<()> {
        if t.rows() != self.dim_h() || t.cols() != self.dim_k() {
            return Err(Error::DimensionMismatch(format!(
                "trace-class argument must be {}x{}, got {}x{}",
                self.dim_h(),
                self.dim_k(),
                t.rows(),
                t.cols()
            )));
        }
        t.check_finite()
    }

    /// `g(x, y)` without dimension checks.
    pub(crate) fn majorant_unchecked(&self, x: &[crate::linalg::C64], y: &[crate::linalg::C64]) -> f64 {
        self.pairs
            .iter()
            .map(|(a, b)| norm(&a.mul_vec(x)) * norm(&b.mul_vec(y)))
            .sum()
    }

    /// Pairs of subspaces `(N_A, N_B)` on which the majorant vanishes
    /// identically, as orthonormal column bases. For every split of the
    /// index set into `S` and its complement, `N_A` is the joint kernel of
    /// `A_i, i ∈ S` and `N_B` that of `B_i, i ∉ S`; only splits where both
    /// are nontrivial are returned.
    pub fn vanishing_subspaces(&self) -> Vec<(CMatrix, CMatrix)> {
        let n = self.len();
        let scale = self
            .pairs
            .iter()
            .flat_map(|(a, b)| [a.max_abs(), b.max_abs()])
            .fold(1.0, f64::max);
        let tol = 1e-12 * scale;
        let joint_kernel = |mats: Vec<&CMatrix>, dim: usize| -> CMatrix {
            if mats.is_empty() {
                return CMatrix::identity(dim);
            }
            let stacked = CMatrix::from_fn(mats.len() * dim, dim, |r, c| mats[r / dim][(r % dim, c)]);
            nullspace(&stacked, tol).expect("finite family")
        };
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << n) {
            let (mut in_s, mut out_s) = (Vec::new(), Vec::new());
            for (i, (a, b)) in self.pairs.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    in_s.push(a);
                } else {
                    out_s.push(b);
                }
            }
            let na = joint_kernel(in_s, self.dim_h());
            if na.cols() == 0 {
                continue;
            }
            let nb = joint_kernel(out_s, self.dim_k());
            if nb.cols() == 0 {
                continue;
            }
            out.push((na, nb));
        }
        out
    }

    pub fn is_degenerate(&self) -> bool {
        !self.vanishing_subspaces().is_empty()
    }
}

/// `Σ_i ‖A_i x‖·‖B_i y‖`.
pub fn majorant(family: &FormFamily, x: &[crate::linalg::C64], y: &[crate::linalg::C64]) -> Result<f64> {
    if x.len() != family.dim_h() || y.len() != family.dim_k() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length ({}, {}) for a family on C^{} x C^{}",
            x.len(),
            y.len(),
            family.dim_h(),
            family.dim_k()
        )));
    }
    Ok(family.majorant_unchecked(x, y))
}

/// `Σ_i ‖A_i T B_i†‖₁`; `T` lies in Δ exactly when this is at most one.
pub fn delta_gauge(family: &FormFamily, t: &CMatrix) -> Result<f64> {
    family.check_trace_class(t)?;
    Ok(family
        .pairs
        .iter()
        .map(|(a, b)| trace_norm(&(&(a * t) * &b.adjoint())))
        .sum())
}

/// Top singular pair of `Q_B† U Q_A` lifted back: the largest value of
/// `|⟨Ux|y⟩|` over unit `x ∈ N_A`, `y ∈ N_B`.
pub(crate) fn restricted_norm(u: &CMatrix, na: &CMatrix, nb: &CMatrix) -> (f64, CVector, CVector) {
    let m = &(&nb.adjoint() * u) * na;
    let r = svd(&m).expect("finite form");
    let x = na.mul_vec(&r.v.column(0));
    let y = nb.mul_vec(&r.u.column(0));
    (r.s[0], x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis, c64};

    fn three_term() -> FormFamily {
        let i = CMatrix::identity(2);
        let a = CMatrix::diag_real(&[2.0, 1.0]);
        let c = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        FormFamily::new(vec![(i.clone(), i.clone()), (a, i.clone()), (c, i)]).unwrap()
    }

    #[test]
    fn majorant_examples() {
        let f = FormFamily::trivial(2, 2);
        assert_eq!(majorant(&f, &basis(2, 0), &basis(2, 0)).unwrap(), 1.0);
        let g = majorant(&three_term(), &basis(2, 0), &basis(2, 0)).unwrap();
        assert!((g - (3.0 + 5f64.sqrt())).abs() < 1e-15);
        let zero = vec![c64(0.0, 0.0); 2];
        assert_eq!(majorant(&three_term(), &zero, &basis(2, 1)).unwrap(), 0.0);
        assert!(majorant(&f, &basis(3, 0), &basis(2, 0)).is_err());
    }

    #[test]
    fn delta_examples() {
        let f = three_term();
        let t0 = CMatrix::identity(2).scale_real(0.125);
        assert_eq!(delta_gauge(&f, &t0).unwrap(), 1.0);
        assert_eq!(delta_gauge(&f, &CMatrix::zeros(2, 2)).unwrap(), 0.0);
        let x = vec![c64(1.0, -1.0), c64(0.5, 2.0)];
        let y = vec![c64(0.0, 1.0), c64(3.0, 0.0)];
        let d = delta_gauge(&FormFamily::trivial(2, 2), &CMatrix::outer(&x, &y)).unwrap();
        assert!((d - norm(&x) * norm(&y)).abs() < 1e-13);
    }

    #[test]
    fn family_validation() {
        assert!(FormFamily::new(vec![]).is_err());
        let r = FormFamily::new(vec![
            (CMatrix::identity(2), CMatrix::identity(2)),
            (CMatrix::identity(3), CMatrix::identity(2)),
        ]);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        let f = FormFamily::new(vec![
            (CMatrix::identity(2), CMatrix::identity(2)),
            (CMatrix::diag_real(&[1.0, 0.0]), CMatrix::identity(2)),
        ])
        .unwrap();
        assert!(f.is_invertible(0) && !f.is_invertible(1));
    }

    #[test]
    fn vanishing_subspaces_detected() {
        assert!(!three_term().is_degenerate());
        let p = CMatrix::diag_real(&[1.0, 0.0]);
        let f = FormFamily::new(vec![(p.clone(), p)]).unwrap();
        // x = e₂ kills the only term for every y
        assert!(f.is_degenerate());
        let f = FormFamily::new(vec![
            (CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)),
            (CMatrix::identity(2), CMatrix::identity(2)),
        ])
        .unwrap();
        assert!(!f.is_degenerate());
    }
}
