//! Finite tensors `w = Σ x_i ⊗ y_i ∈ H ⊗ K` and the SVD construction that
//! simultaneously diagonalizes `C ⊗ D` on a fixed tensor.
//!
//! Tensors here are bilinear: `w` is identified with the linear operator
//! `T_w = Σ y_i x_iᵀ : C^{dim H} → C^{dim K}`, and `‖w‖_π = ‖T_w‖₁`.
//! Under this identification `(C ⊗ D)w` corresponds to `D·T_w·Cᵀ`.

use crate::error::{Error, Result};
use crate::linalg::{check_invertible, inner, norm, scale_vec, svd, trace_norm, CMatrix, CVector, C64};

/// Relative cutoff below which singular values of `T_w` count as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Relative singular-value gap under which the left unitary of an SVD is
/// not uniquely determined.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Entrywise tolerance of the unitary comparison in [`three_term_compat`].
pub const COMPAT_TOL: f64 = 1e-8;

/// A finite representation `Σ x_i ⊗ y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRep {
    dim_h: usize,
    dim_k: usize,
    pairs: Vec<(CVector, CVector)>,
}

impl TensorRep {
    pub fn new(dim_h: usize, dim_k: usize, pairs: Vec<(CVector, CVector)>) -> Result<Self> {
        if dim_h == 0 || dim_k == 0 {
            return Err(Error::InvalidInput("tensor factors need positive dimension".into()));
        }
        for (i, (x, y)) in pairs.iter().enumerate() {
            if x.len() != dim_h || y.len() != dim_k {
                return Err(Error::InvalidInput(format!(
                    "pair {i} has dimensions ({}, {}), expected ({dim_h}, {dim_k})",
                    x.len(),
                    y.len()
                )));
            }
            if x.iter().chain(y).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("pair {i} has non-finite entries")));
            }
        }
        Ok(TensorRep { dim_h, dim_k, pairs })
    }

    /// Infers the dimensions from the first pair.
    pub fn from_pairs(pairs: Vec<(CVector, CVector)>) -> Result<Self> {
        let Some((x, y)) = pairs.first() else {
            return Err(Error::InvalidInput("cannot infer dimensions of an empty tensor".into()));
        };
        let (h, k) = (x.len(), y.len());
        Self::new(h, k, pairs)
    }

    pub fn zero(dim_h: usize, dim_k: usize) -> Result<Self> {
        Self::new(dim_h, dim_k, Vec::new())
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn pairs(&self) -> &[(CVector, CVector)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `T_w = Σ y_i x_iᵀ`, a `dim K × dim H` matrix.
    pub fn induced_operator(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim_k, self.dim_h);
        for (x, y) in &self.pairs {
            for (r, yr) in y.iter().enumerate() {
                for (c, xc) in x.iter().enumerate() {
                    m[(r, c)] += yr * xc;
                }
            }
        }
        m
    }

    /// `(C ⊗ D)w = Σ Cx_i ⊗ Dy_i`.
    pub fn apply(&self, c: &CMatrix, d: &CMatrix) -> Result<TensorRep> {
        if c.cols() != self.dim_h || d.cols() != self.dim_k {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}x{} ⊗ {}x{} to a tensor in C^{} ⊗ C^{}",
                c.rows(),
                c.cols(),
                d.rows(),
                d.cols(),
                self.dim_h,
                self.dim_k
            )));
        }
        let pairs = self.pairs.iter().map(|(x, y)| (c.mul_vec(x), d.mul_vec(y))).collect();
        TensorRep::new(c.rows(), d.rows(), pairs)
    }

    /// `Σ ‖x_i‖‖y_i‖`, an upper bound for the projective norm.
    pub fn representation_cost(&self) -> f64 {
        self.pairs.iter().map(|(x, y)| norm(x) * norm(y)).sum()
    }
}

/// Projective tensor norm `‖T_w‖₁`.
pub fn pi_norm(w: &TensorRep) -> f64 {
    trace_norm(&w.induced_operator())
}

/// Orthogonal representation `w = Σ ξ_k ⊗ η_k` read off the SVD
/// `T_w = Σ s_k u_k v_k†`: `ξ_k = √s_k·v̄_k`, `η_k = √s_k·u_k`, so that
/// `‖ξ_k‖² = ‖η_k‖² = s_k`. The number of pairs is the numerical rank.
pub fn canonical_rep(w: &TensorRep) -> TensorRep {
    let m = w.induced_operator();
    let r = svd(&m).expect("tensor entries are finite");
    let rank = r.rank(RANK_TOL);
    let pairs = (0..rank)
        .map(|k| {
            let root = r.s[k].sqrt();
            let xi = r.v.column(k).iter().map(|z| z.conj() * root).collect();
            let eta = r.u.column(k).iter().map(|z| z * root).collect();
            (xi, eta)
        })
        .collect();
    TensorRep {
        dim_h: w.dim_h,
        dim_k: w.dim_k,
        pairs,
    }
}

fn check_square_invertible(m: &CMatrix, dim: usize, name: &str) -> Result<()> {
    if !m.is_square() || m.rows() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be {dim}x{dim}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    check_invertible(m)
}

/// Coefficients of `v` in the orthogonal family `basis`.
fn coefficients(v: &[C64], basis: &[CVector]) -> CVector {
    basis
        .iter()
        .map(|b| inner(v, b) / b.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .collect()
}

struct Transfer {
    rho: Vec<CVector>,
    sigma: Vec<CVector>,
    alpha: CMatrix,
    beta: CMatrix,
}

fn transfer(w: &TensorRep, c: &CMatrix, d: &CMatrix) -> Result<Transfer> {
    check_square_invertible(c, w.dim_h, "C")?;
    check_square_invertible(d, w.dim_k, "D")?;
    let image = canonical_rep(&w.apply(c, d)?);
    let n = w.len();
    if image.len() != n {
        return Err(Error::InvalidInput(format!(
            "representation has {n} pairs but (C⊗D)w has rank {}; pass a canonical representation",
            image.len()
        )));
    }
    let (rho, sigma): (Vec<_>, Vec<_>) = image.pairs.into_iter().unzip();
    let mut alpha = CMatrix::zeros(n, n);
    let mut beta = CMatrix::zeros(n, n);
    for (i, (xi, eta)) in w.pairs.iter().enumerate() {
        let a = coefficients(&c.mul_vec(xi), &rho);
        let b = coefficients(&d.mul_vec(eta), &sigma);
        for j in 0..n {
            alpha[(i, j)] = a[j];
            beta[(i, j)] = b[j];
        }
    }
    Ok(Transfer {
        rho,
        sigma,
        alpha,
        beta,
    })
}

/// Transfer matrices with `Cξ_i = Σ_j α_ij ρ_j` and `Dη_i = Σ_j β_ij σ_j`,
/// where `(ρ, σ)` is the canonical representation of `(C ⊗ D)w`.
/// They satisfy `β·αᵀ = I`.
pub fn alpha_beta(w_canon: &TensorRep, c: &CMatrix, d: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let t = transfer(w_canon, c, d)?;
    Ok((t.alpha, t.beta))
}

/// The rotated systems with `Cξ̂_i = d_i ρ̂_i` and `Dη̂_i = d_i⁻¹ σ̂_i`.
#[derive(Debug, Clone)]
pub struct HatSystem {
    pub xi_hat: Vec<CVector>,
    pub eta_hat: Vec<CVector>,
    pub rho_hat: Vec<CVector>,
    pub sigma_hat: Vec<CVector>,
    /// Singular values of `α`, descending.
    pub d: Vec<f64>,
    /// Left unitary of `α = U·diag(d)·V`.
    pub u_mat: CMatrix,
    /// Right unitary of `α = U·diag(d)·V`.
    pub v_mat: CMatrix,
    pub alpha: CMatrix,
    pub beta: CMatrix,
    /// The canonical pairs of `(C ⊗ D)w` before rotation.
    pub rho: Vec<CVector>,
    pub sigma: Vec<CVector>,
    /// Smallest relative gap between distinct positions of `d` when it is
    /// below [`DEGENERACY_TOL`]; the unitaries are then not unique.
    pub degenerate_gap: Option<f64>,
}

/// Residuals of the identities a [`HatSystem`] is built to satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatResiduals {
    /// `max_i ‖Cξ̂_i − d_i ρ̂_i‖` and `max_i ‖Dη̂_i − d_i⁻¹ σ̂_i‖`.
    pub diagonalization: f64,
    /// `‖Σ ξ̂_i⊗η̂_i − w‖` as operators (max entry).
    pub reconstruction: f64,
    /// `‖Σ ρ̂_i⊗σ̂_i − (C⊗D)w‖` as operators (max entry).
    pub image_reconstruction: f64,
    /// Largest deviation among the four norm totals from the
    /// corresponding projective norms.
    pub norm_totals: f64,
    /// `|β·αᵀ − I|` (max entry).
    pub transfer: f64,
}

impl HatResiduals {
    pub fn max(&self) -> f64 {
        self.diagonalization
            .max(self.reconstruction)
            .max(self.image_reconstruction)
            .max(self.norm_totals)
            .max(self.transfer)
    }
}

fn sum_sq(vs: &[CVector]) -> f64 {
    vs.iter().flat_map(|v| v.iter()).map(|z| z.norm_sqr()).sum()
}

fn relative_gap(s: &[f64]) -> Option<f64> {
    let smax = s.first().copied().unwrap_or(0.0);
    if s.len() < 2 || smax == 0.0 {
        return None;
    }
    let gap = s.windows(2).map(|p| (p[0] - p[1]) / smax).fold(f64::INFINITY, f64::min);
    (gap < DEGENERACY_TOL).then_some(gap)
}

/// Builds the hatted vectors from the SVD `α = U·diag(d)·V`:
/// `ξ̂_i = Σ_j Ū_ji ξ_j`, `η̂_i = Σ_j U_ji η_j`, `ρ̂_i = Σ_j V_ij ρ_j`,
/// `σ̂_i = Σ_j V̄_ij σ_j`.
pub fn hat_construction(w_canon: &TensorRep, c: &CMatrix, d: &CMatrix) -> Result<HatSystem> {
    let t = transfer(w_canon, c, d)?;
    let n = w_canon.len();
    let r = svd(&t.alpha)?;
    let u = r.u;
    let v = r.v.adjoint();
    let (xi, eta): (Vec<&CVector>, Vec<&CVector>) = w_canon.pairs.iter().map(|(x, y)| (x, y)).unzip();

    let combine = |family: &[&CVector], coef: &dyn Fn(usize, usize) -> C64, i: usize| {
        let dim = family.first().map_or(0, |f| f.len());
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for (j, f) in family.iter().enumerate() {
            let cj = coef(i, j);
            for (o, z) in out.iter_mut().zip(f.iter()) {
                *o += cj * z;
            }
        }
        out
    };
    let rho: Vec<&CVector> = t.rho.iter().collect();
    let sigma: Vec<&CVector> = t.sigma.iter().collect();
    let xi_hat = (0..n).map(|i| combine(&xi, &|i, j| u[(j, i)].conj(), i)).collect();
    let eta_hat = (0..n).map(|i| combine(&eta, &|i, j| u[(j, i)], i)).collect();
    let rho_hat = (0..n).map(|i| combine(&rho, &|i, j| v[(i, j)], i)).collect();
    let sigma_hat = (0..n).map(|i| combine(&sigma, &|i, j| v[(i, j)].conj(), i)).collect();

    Ok(HatSystem {
        xi_hat,
        eta_hat,
        rho_hat,
        sigma_hat,
        degenerate_gap: relative_gap(&r.s),
        d: r.s,
        u_mat: u,
        v_mat: v,
        alpha: t.alpha,
        beta: t.beta,
        rho: t.rho,
        sigma: t.sigma,
    })
}

impl HatSystem {
    /// Evaluates every defining identity against the inputs the system was
    /// built from.
    pub fn residuals(&self, w: &TensorRep, c: &CMatrix, d: &CMatrix) -> Result<HatResiduals> {
        let n = self.d.len();
        let mut diag: f64 = 0.0;
        for i in 0..n {
            let lhs = c.mul_vec(&self.xi_hat[i]);
            let rhs = scale_vec(&self.rho_hat[i], C64::new(self.d[i], 0.0));
            diag = diag.max(norm(&crate::linalg::sub_vec(&lhs, &rhs)));
            let lhs = d.mul_vec(&self.eta_hat[i]);
            let rhs = scale_vec(&self.sigma_hat[i], C64::new(1.0 / self.d[i], 0.0));
            diag = diag.max(norm(&crate::linalg::sub_vec(&lhs, &rhs)));
        }
        let zip = |a: &[CVector], b: &[CVector], dh, dk| {
            TensorRep::new(dh, dk, a.iter().cloned().zip(b.iter().cloned()).collect())
        };
        let hat = zip(&self.xi_hat, &self.eta_hat, w.dim_h, w.dim_k)?;
        let image = w.apply(c, d)?;
        let hat_image = zip(&self.rho_hat, &self.sigma_hat, c.rows(), d.rows())?;
        let reconstruction = hat.induced_operator().max_abs_diff(&w.induced_operator());
        let image_reconstruction = hat_image.induced_operator().max_abs_diff(&image.induced_operator());

        let pw = pi_norm(w);
        let pcd = pi_norm(&image);
        let norm_totals = [
            (sum_sq(&self.xi_hat) - pw).abs(),
            (sum_sq(&self.eta_hat) - pw).abs(),
            (sum_sq(&self.rho_hat) - pcd).abs(),
            (sum_sq(&self.sigma_hat) - pcd).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let transfer = (&self.beta * &self.alpha.transpose()).max_abs_diff(&CMatrix::identity(n));
        Ok(HatResiduals {
            diagonalization: diag,
            reconstruction,
            image_reconstruction,
            norm_totals,
            transfer,
        })
    }
}

/// Both sides of the two-term estimate
/// `|Σ u(x_i, y_i)| ≤ ‖w‖_π + ‖(C⊗D)w‖_π` for the bilinear form
/// `u(x, y) = yᵀ U x`. The right side is a bound whenever
/// `|u(x, y)| ≤ ‖x‖‖y‖ + ‖Cx‖‖Dy‖` for all `x, y`.
pub fn two_term_estimate(u: &CMatrix, w: &TensorRep, c: &CMatrix, d: &CMatrix) -> Result<(f64, f64)> {
    if u.rows() != w.dim_k || u.cols() != w.dim_h {
        return Err(Error::DimensionMismatch(format!(
            "form matrix must be {}x{}, got {}x{}",
            w.dim_k,
            w.dim_h,
            u.rows(),
            u.cols()
        )));
    }
    let pairing: C64 = w
        .pairs
        .iter()
        .map(|(x, y)| {
            let ux = u.mul_vec(x);
            ux.iter().zip(y).map(|(a, b)| a * b).sum::<C64>()
        })
        .sum();
    let rhs = pi_norm(w) + pi_norm(&w.apply(c, d)?);
    Ok((pairing.norm(), rhs))
}

/// Outcome of comparing the left unitaries of two transfer matrices.
#[derive(Debug, Clone)]
pub struct CompatReport {
    pub compatible: bool,
    /// Left unitary `U` of `α = U d V` for `(C, D)`.
    pub u: CMatrix,
    pub d: Vec<f64>,
    /// Left unitary `S` of `α̃ = S e T` for `(E, F)`.
    pub s: CMatrix,
    pub e: Vec<f64>,
    /// `max |U_ij − S_ij|`.
    pub max_diff: f64,
    /// Set when either singular-value list has a relative gap below
    /// [`DEGENERACY_TOL`], so that a negative verdict may be an artifact of
    /// the choice of singular vectors.
    pub degenerate_gap: Option<f64>,
}

/// Tests whether the pairs `(C, D)` and `(E, F)` produce the same left
/// unitary in their SVD constructions on `w`, which lets one rotated
/// representation diagonalize both simultaneously.
pub fn three_term_compat(
    w_canon: &TensorRep,
    c: &CMatrix,
    d: &CMatrix,
    e: &CMatrix,
    f: &CMatrix,
) -> Result<CompatReport> {
    let first = hat_construction(w_canon, c, d)?;
    let second = hat_construction(w_canon, e, f)?;
    let max_diff = first.u_mat.max_abs_diff(&second.u_mat);
    let degenerate_gap = match (first.degenerate_gap, second.degenerate_gap) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(CompatReport {
        compatible: max_diff <= COMPAT_TOL,
        u: first.u_mat,
        d: first.d,
        s: second.u_mat,
        e: second.d,
        max_diff,
        degenerate_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis, c64};

    fn e(k: usize) -> CVector {
        basis(2, k)
    }

    fn identity_tensor() -> TensorRep {
        TensorRep::from_pairs(vec![(e(0), e(0)), (e(1), e(1))]).unwrap()
    }

    #[test]
    fn pi_norm_examples() {
        assert!((pi_norm(&identity_tensor()) - 2.0).abs() < 1e-15);
        let x = vec![c64(1.0, 2.0), c64(0.0, -1.0)];
        let y = vec![c64(3.0, 0.0), c64(1.0, 1.0), c64(0.5, 0.0)];
        let w = TensorRep::from_pairs(vec![(x.clone(), y.clone())]).unwrap();
        assert!((pi_norm(&w) - norm(&x) * norm(&y)).abs() < 1e-13);
        let w = TensorRep::from_pairs(vec![(e(0), e(0)), (e(0), e(0))]).unwrap();
        assert!((pi_norm(&w) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_pairs() {
        let r = TensorRep::from_pairs(vec![(e(0), e(0)), (basis(3, 0), e(1))]);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn canonical_of_rank_one_sum() {
        let w = TensorRep::from_pairs(vec![(e(0), e(0)), (e(0), e(1))]).unwrap();
        let c = canonical_rep(&w);
        assert_eq!(c.len(), 1);
        let (xi, eta) = &c.pairs()[0];
        let r2 = 2f64.sqrt();
        assert!((norm(xi).powi(2) - r2).abs() < 1e-14);
        assert!((norm(eta).powi(2) - r2).abs() < 1e-14);
        assert!(c.induced_operator().max_abs_diff(&w.induced_operator()) < 1e-14);
    }

    #[test]
    fn canonical_of_zero_is_empty() {
        assert!(canonical_rep(&TensorRep::zero(2, 3).unwrap()).is_empty());
        let w = TensorRep::from_pairs(vec![(vec![c64(0.0, 0.0); 2], e(1))]).unwrap();
        assert!(canonical_rep(&w).is_empty());
    }

    #[test]
    fn identity_transfer() {
        let w = canonical_rep(&identity_tensor());
        let i = CMatrix::identity(2);
        let h = hat_construction(&w, &i, &i).unwrap();
        assert!(h.d.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        assert!(h.residuals(&w, &i, &i).unwrap().max() < 1e-14);
    }

    #[test]
    fn diagonal_c_gives_diagonal_alpha() {
        let w = canonical_rep(&identity_tensor());
        let c = CMatrix::diag_real(&[2.0, 1.0]);
        let (alpha, beta) = alpha_beta(&w, &c, &CMatrix::identity(2)).unwrap();
        assert!(alpha[(0, 1)].norm() < 1e-14 && alpha[(1, 0)].norm() < 1e-14);
        assert!((&beta * &alpha.transpose()).max_abs_diff(&CMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn singular_c_is_rejected() {
        let w = canonical_rep(&identity_tensor());
        let c = CMatrix::diag_real(&[1.0, 0.0]);
        let r = alpha_beta(&w, &c, &CMatrix::identity(2));
        assert!(matches!(r, Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn two_term_trivial_cases() {
        let w = TensorRep::from_pairs(vec![(e(0), e(0))]).unwrap();
        let i = CMatrix::identity(2);
        let (lhs, rhs) = two_term_estimate(&i, &w, &i, &i).unwrap();
        assert!((lhs - 1.0).abs() < 1e-15 && (rhs - 2.0).abs() < 1e-15);
        let (lhs, _) = two_term_estimate(&CMatrix::zeros(2, 2), &w, &i, &i).unwrap();
        assert_eq!(lhs, 0.0);
    }

    #[test]
    fn self_compatibility() {
        let w = canonical_rep(&identity_tensor());
        let c = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let i = CMatrix::identity(2);
        let r = three_term_compat(&w, &c, &i, &c, &i).unwrap();
        assert!(r.compatible);
        assert_eq!(r.max_diff, 0.0);
    }
}
