//! Dense complex linear algebra for small matrices.

pub mod eigen;
pub mod functions;
pub mod matrix;
pub mod svd;

pub use eigen::{eigenvalues_general, hermitian_eig, HermitianEig};
pub use functions::{
    check_invertible, condition_number, eps_regularize, inverse, nullspace, operator_norm, orth, polar, solve,
    sqrt_psd, trace_norm, Polar, RankOne, MAX_CONDITION,
};
pub use matrix::{add_vec, basis, c64, conj_vec, inner, norm, scale_vec, sub_vec, CMatrix, CVector, C64};
pub use svd::{svd, Svd};
