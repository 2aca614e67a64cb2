//! Atomic gauge of `conv K` by column generation.
//!
//! Primal: `min Σ λ_j` subject to `Σ λ_j x_j y_j† = T`, `λ ≥ 0`, over a
//! growing set of atoms normalized to `g(x_j, y_j) = 1`. The complex
//! equality is split into `2·dim H·dim K` real rows. The LP dual is a form
//! `W` with `Re⟨Wx_j|y_j⟩ ≤ 1` on the current atoms; pricing looks for an
//! atom violating this through the dual gauge of `W`.
//!
//! The duals of a degenerate basis are poor pricing points, so pricing is
//! done at a convex combination of the LP dual and a stability center: the
//! best-pairing form seen so far, scaled to dual gauge one and seeded with
//! the form that realizes the Δ-gauge.

use super::kstar::{kstar_from, KStarConfig};
use super::lp::{self, LpError};
use super::{delta_gauge, FormFamily};
use crate::error::{Error, Result};
use crate::linalg::{basis, inner, svd, CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvkConfig {
    /// Column generation stops once `upper - lower <= tol·max(1, upper)`;
    /// also the membership margin.
    pub tol: f64,
    /// Cap on pricing rounds.
    pub max_iter: usize,
    /// Distinct violating local maxima added per round.
    pub atoms_per_iter: usize,
    pub kstar: KStarConfig,
}

impl Default for ConvkConfig {
    fn default() -> Self {
        ConvkConfig {
            tol: 1e-6,
            max_iter: 300,
            atoms_per_iter: 8,
            kstar: KStarConfig::default(),
        }
    }
}

/// An atom `x y†` with `g(x, y) = 1` and its weight in the combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: CVector,
    pub y: CVector,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeReport {
    pub delta_value: f64,
    /// `max(Δ-gauge, Re tr(W T))` for the returned `dual_w`, clamped to
    /// `convk_upper`.
    pub convk_lower: f64,
    /// `Σ weights` of the explicit combination in `atoms`.
    pub convk_upper: f64,
    /// Atoms with positive weight; `Σ weight·x y† = T`.
    pub atoms: Vec<Atom>,
    /// The best dual found, scaled to dual gauge one; it certifies
    /// `convk_lower` through `Re tr(W T)`.
    pub dual_w: CMatrix,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    Inside,
    Outside,
    Undecided,
}

impl std::fmt::Display for Membership {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Membership::Inside => "inside",
            Membership::Outside => "outside",
            Membership::Undecided => "undecided",
        })
    }
}

impl GaugeReport {
    pub fn membership(&self, tol: f64) -> Membership {
        if self.convk_upper <= 1.0 + tol {
            Membership::Inside
        } else if self.convk_lower > 1.0 + tol {
            Membership::Outside
        } else {
            Membership::Undecided
        }
    }

    /// `Σ weight·x y†`.
    pub fn reconstruct(&self, dim_h: usize, dim_k: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim_h, dim_k);
        for a in &self.atoms {
            m += &CMatrix::outer(&a.x, &a.y).scale_real(a.weight);
        }
        m
    }
}

/// Row-major real image of an outer product `x y†`.
fn column(x: &[C64], y: &[C64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * x.len() * y.len());
    for xk in x {
        for yl in y {
            let v = xk * yl.conj();
            out.push(v.re);
            out.push(v.im);
        }
    }
    out
}

fn flatten(t: &CMatrix) -> Vec<f64> {
    t.entries().iter().flat_map(|z| [z.re, z.im]).collect()
}

/// The form `W` with `Re tr(W X) = zᵀ vec(X)`.
fn dual_form(z: &[f64], dim_h: usize, dim_k: usize) -> CMatrix {
    CMatrix::from_fn(dim_k, dim_h, |l, k| {
        let r = 2 * (k * dim_k + l);
        C64::new(z[r], -z[r + 1])
    })
}

/// Bounds on the atomic gauge `inf{Σλ : T = Σλ_j a_j, a_j ∈ K}`.
pub fn convk_gauge(family: &FormFamily, t: &CMatrix, config: &ConvkConfig) -> Result<GaugeReport> {
    family.check_trace_class(t)?;
    if family.is_degenerate() {
        return Err(Error::DegenerateFamily);
    }
    let (dh, dk) = (family.dim_h(), family.dim_k());
    let delta_value = delta_gauge(family, t)?;
    if t.max_abs() == 0.0 {
        return Ok(GaugeReport {
            delta_value,
            convk_lower: 0.0,
            convk_upper: 0.0,
            atoms: Vec::new(),
            dual_w: CMatrix::zeros(dk, dh),
            iterations: 0,
            converged: true,
        });
    }

    let b = flatten(t);
    let mut atoms: Vec<(CVector, CVector)> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let push = |x: CVector, y: CVector, atoms: &mut Vec<(CVector, CVector)>, cols: &mut Vec<Vec<f64>>| {
        let g = family.majorant_unchecked(&x, &y);
        let x: CVector = x.iter().map(|z| z / g).collect();
        cols.push(column(&x, &y));
        atoms.push((x, y));
    };
    let phases = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, -1.0),
    ];
    let mut start_basis = Vec::with_capacity(b.len());
    for k in 0..dh {
        for l in 0..dk {
            let base = atoms.len();
            for p in phases {
                let x: CVector = basis(dh, k).iter().map(|z| z * p).collect();
                push(x, basis(dk, l), &mut atoms, &mut cols);
            }
            let r = 2 * (k * dk + l);
            start_basis.push(if b[r] >= 0.0 { base } else { base + 2 });
            start_basis.push(if b[r + 1] >= 0.0 { base + 1 } else { base + 3 });
        }
    }
    let initial_basis = start_basis.clone();
    // the singular terms of T, which settle rank-one targets at once
    let r = svd(t)?;
    for k in 0..r.rank(1e-12) {
        push(r.u.column(k), r.v.column(k), &mut atoms, &mut cols);
    }

    let mut basis_idx = start_basis;
    let mut center = Some(delta_dual(family, t)?);
    let mut iterations = 0;
    loop {
        let cost = vec![1.0; cols.len()];
        let sol = match lp::solve(&cols, &cost, &b, basis_idx.clone()) {
            Ok(s) => s,
            Err(LpError::SingularBasis | LpError::Infeasible) => {
                lp::solve(&cols, &cost, &b, initial_basis.clone()).map_err(lp_error)?
            }
            Err(e) => return Err(lp_error(e)),
        };
        basis_idx = sol.basis.clone();
        let upper = sol.objective;
        let warm: Vec<(CVector, CVector)> = sol.basis.iter().map(|&j| atoms[j].clone()).collect();
        let w_lp = dual_form(&sol.duals, dh, dk);

        // Price at a point between the LP dual and the best feasible dual so
        // far; the LP duals of a degenerate basis jump around otherwise.
        let mut found = match &center {
            Some((wc, _)) => {
                let w = &wc.scale_real(SMOOTHING) + &w_lp.scale_real(1.0 - SMOOTHING);
                price(family, &w, &w_lp, t, &warm, &mut center, config)?
            }
            None => Vec::new(),
        };
        if found.is_empty() {
            found = price(family, &w_lp, &w_lp, t, &warm, &mut center, config)?;
        }
        let paired = center.as_ref().map_or(0.0, |c| c.1);
        let lower = delta_value.max(paired).min(upper);
        let converged = upper - lower <= config.tol * upper.max(1.0);

        let mut added = 0;
        if !converged && iterations < config.max_iter {
            for (x, y) in found {
                let candidate = column(&x, &y);
                if cols.iter().any(|c| nearly_parallel(c, &candidate)) {
                    continue;
                }
                push(x, y, &mut atoms, &mut cols);
                added += 1;
            }
        }

        if converged || added == 0 {
            let atoms = sol
                .x
                .iter()
                .zip(&atoms)
                .filter(|(&l, _)| l > 0.0)
                .map(|(&weight, (x, y))| Atom {
                    x: x.clone(),
                    y: y.clone(),
                    weight,
                })
                .collect();
            return Ok(GaugeReport {
                delta_value,
                convk_lower: lower,
                convk_upper: upper,
                atoms,
                dual_w: center.map_or_else(|| CMatrix::zeros(dk, dh), |c| c.0),
                iterations,
                converged,
            });
        }
        iterations += 1;
    }
}

/// `W = Σ B_i† V_i A_i` with `V_i` the partial isometry aligning with
/// `A_i T B_i†`. Then `|⟨Wx|y⟩| ≤ g(x, y)` and `Re tr(W T)` is the Δ-gauge.
fn delta_dual(family: &FormFamily, t: &CMatrix) -> Result<(CMatrix, f64)> {
    let mut w = CMatrix::zeros(family.dim_k(), family.dim_h());
    for (a, b) in family.pairs() {
        let r = svd(&(&(a * t) * &b.adjoint()))?;
        let v = CMatrix::from_fn(r.v.rows(), r.u.rows(), |k, h| {
            (0..r.s.len()).map(|j| r.v[(k, j)] * r.u[(h, j)].conj()).sum()
        });
        w += &(&(&b.adjoint() * &v) * a);
    }
    let paired = (&w * t).trace().re;
    Ok((w, paired))
}

/// Weight of the stability center in the pricing point.
const SMOOTHING: f64 = 0.85;

/// Runs the dual gauge on `w`, keeps `w / K*(w)` as the center if it pairs
/// better with `T`, and returns the local maximizers that violate the LP
/// dual `w_lp`, phase-aligned against it.
fn price(
    family: &FormFamily,
    w: &CMatrix,
    w_lp: &CMatrix,
    t: &CMatrix,
    warm: &[(CVector, CVector)],
    center: &mut Option<(CMatrix, f64)>,
    config: &ConvkConfig,
) -> Result<Vec<(CVector, CVector)>> {
    let ks = kstar_from(family, w, &config.kstar, warm)?;
    if ks.value > 0.0 && ks.value.is_finite() {
        let scaled = w.scale_real(1.0 / ks.value);
        let paired = (&scaled * t).trace().re;
        if center.as_ref().is_none_or(|c| paired > c.1) {
            *center = Some((scaled, paired));
        }
    }
    let mut out = Vec::new();
    for m in &ks.local_maxima {
        if out.len() >= config.atoms_per_iter {
            break;
        }
        let s = inner(&w_lp.mul_vec(&m.x), &m.y);
        let g = family.majorant_unchecked(&m.x, &m.y);
        if g == 0.0 || s.norm() <= (1.0 + VIOLATION) * g {
            continue;
        }
        let phase = s.conj() / s.norm();
        out.push((m.x.iter().map(|z| z * phase).collect(), m.y.clone()));
    }
    Ok(out)
}

/// Relative excess over one that makes an atom worth adding.
const VIOLATION: f64 = 1e-10;

fn nearly_parallel(a: &[f64], b: &[f64]) -> bool {
    let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let na: f64 = a.iter().map(|p| p * p).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|p| p * p).sum::<f64>().sqrt();
    dot > (1.0 - 1e-12) * na * nb
}

fn lp_error(e: LpError) -> Error {
    Error::InvalidInput(format!("column-generation LP failed: {e:?}"))
}

/// Tri-state membership of `T` in `conv K` with margin `config.tol`.
pub fn in_convk(family: &FormFamily, t: &CMatrix, config: &ConvkConfig) -> Result<Membership> {
    if delta_gauge(family, t)? > 1.0 + config.tol {
        return Ok(Membership::Outside);
    }
    Ok(convk_gauge(family, t, config)?.membership(config.tol))
}
