//! Seeded generators for random test instances.
//!
//! Everything draws from a caller-supplied RNG so that identical seeds give
//! identical instances.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{eigen::householder_qr, svd, CMatrix, CVector, C64};

pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as InstanceRng;

pub fn rng(seed: u64) -> InstanceRng {
    InstanceRng::seed_from_u64(seed)
}

pub fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    (0..n).map(|_| gaussian_c64(rng)).collect()
}

/// Uniform point on the unit sphere of `C^n`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = gaussian_vector(rng, n);
        let nrm = crate::linalg::norm(&v);
        if nrm > 1e-8 {
            return v.into_iter().map(|z| z / nrm).collect();
        }
    }
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    let (mut q, r) = householder_qr(&g);
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

/// Random matrix with operator norm exactly `norm`.
pub fn contraction<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, norm: f64) -> CMatrix {
    let g = gaussian_matrix(rng, rows, cols);
    let s = svd(&g).expect("finite").s[0];
    g.scale_real(norm / s)
}

/// Random invertible matrix with singular values log-uniform in
/// `[1, max_cond]` up to an overall scale.
pub fn invertible<R: Rng + ?Sized>(rng: &mut R, n: usize, max_cond: f64) -> CMatrix {
    let u = unitary(rng, n);
    let v = unitary(rng, n);
    let lc = max_cond.ln();
    let mut s: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * lc).exp()).collect();
    if n > 1 {
        s[0] = 1.0;
    }
    &(&u * &CMatrix::diag_real(&s)) * &v.adjoint()
}

/// Random positive definite matrix with eigenvalues in `[lo, hi]`.
pub fn positive_definite<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> CMatrix {
    let u = unitary(rng, n);
    let s: Vec<f64> = (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    (&(&u * &CMatrix::diag_real(&s)) * &u.adjoint()).hermitian_part()
}

/// Random positive semidefinite matrix of the given rank.
pub fn positive_semidefinite<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for _ in 0..rank {
        let v = gaussian_vector(rng, n);
        m += &CMatrix::outer(&v, &v);
    }
    m.hermitian_part()
}
