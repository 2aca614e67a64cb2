//! Decomposition of majorized sesquilinear forms on finite-dimensional
//! Hilbert spaces.
//!
//! A form `u(x, y) = ⟨Ux|y⟩` satisfying
//! `|⟨Ux|y⟩| ≤ Σ_i ‖A_i x‖‖B_i y‖` may or may not split into terms
//! `U = Σ U_i` with `|⟨U_i x|y⟩| ≤ ‖A_i x‖‖B_i y‖`. The split exists for
//! every such `U` exactly when the convex hull of the normalized rank-one
//! atoms coincides with the unit ball of `T ↦ Σ_i ‖A_i T B_i†‖₁`.
//!
//! * [`linalg`]: dense complex matrices, Jacobi eigen/SVD, trace norms.
//! * [`tensor`]: projective tensor norms and the SVD-based two-term
//!   construction.
//! * [`gauges`]: the majorant, the Δ-gauge, the dual gauge and the
//!   atomic (conv K) gauge via column generation.
//! * [`decomposer`]: alternating projections onto contraction witnesses,
//!   separation certificates and ε-regularization.
//! * [`counterexample`]: the two-dimensional three-term instance that
//!   admits no decomposition.

pub mod counterexample;
pub mod decomposer;
pub mod error;
pub mod gauges;
pub mod linalg;
pub mod random;
pub mod tensor;

pub use error::{Error, Result};
