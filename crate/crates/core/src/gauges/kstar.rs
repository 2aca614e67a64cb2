//! Multistart search for `sup |⟨Ux|y⟩| / g(x, y)`.
//!
//! Each start runs BFGS ascent with Armijo backtracking on the smooth
//! objective `log|⟨Ux|y⟩|² − 2·log g(x, y)` in real coordinates. The
//! objective is invariant under `x ↦ cx`, `y ↦ c'y`, so iterates are
//! renormalized whenever their length drifts.

use super::{restricted_norm, FormFamily};
use crate::error::{Error, Result};
use crate::linalg::{inner, norm, svd, CMatrix, CVector, C64};
use crate::random;

/// Budget of the multistart search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KStarConfig {
    /// Number of random starting pairs (one extra start from the top
    /// singular pair of `U` is always added).
    pub starts: usize,
    pub seed: u64,
    /// Iteration cap of each local ascent.
    pub max_steps: usize,
    /// Gradient-norm threshold declaring a local ascent converged.
    pub grad_tol: f64,
}

impl Default for KStarConfig {
    fn default() -> Self {
        KStarConfig {
            starts: 64,
            seed: 0,
            max_steps: 600,
            grad_tol: 1e-10,
        }
    }
}

/// A local maximizer reached from some start.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMax {
    pub value: f64,
    pub x: CVector,
    pub y: CVector,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KStarResult {
    /// Best ratio found; a lower bound on the supremum, `+∞` when the form
    /// is nonzero on a pair where the majorant vanishes.
    pub value: f64,
    /// Unit vectors attaining `value`.
    pub x: CVector,
    pub y: CVector,
    /// Starts whose ascent met the gradient threshold.
    pub converged_starts: usize,
    pub total_starts: usize,
    /// Distinct local maxima, best first.
    pub local_maxima: Vec<LocalMax>,
}

/// Lower estimate of the dual gauge `sup_{x,y≠0} |⟨Ux|y⟩| / g(x, y)`.
/// A value at most one means `U` satisfies the majorization hypothesis on
/// every sampled direction.
pub fn kstar_gauge(family: &FormFamily, u: &CMatrix, config: &KStarConfig) -> Result<KStarResult> {
    kstar_from(family, u, config, &[])
}

/// [`kstar_gauge`] with extra starting points tried after the random ones.
pub(crate) fn kstar_from(
    family: &FormFamily,
    u: &CMatrix,
    config: &KStarConfig,
    extra: &[(CVector, CVector)],
) -> Result<KStarResult> {
    family.check_form(u)?;
    let (nh, nk) = (family.dim_h(), family.dim_k());

    let vanishing = family.vanishing_subspaces();
    if !vanishing.is_empty() {
        let scale = u.max_abs();
        for (na, nb) in &vanishing {
            let (s, x, y) = restricted_norm(u, na, nb);
            if s > 1e-12 * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
                return Ok(KStarResult {
                    value: f64::INFINITY,
                    x,
                    y,
                    converged_starts: 0,
                    total_starts: 0,
                    local_maxima: Vec::new(),
                });
            }
        }
        return Err(Error::DegenerateFamily);
    }

    if u.max_abs() == 0.0 {
        let x = crate::linalg::basis(nh, 0);
        let y = crate::linalg::basis(nk, 0);
        return Ok(KStarResult {
            value: 0.0,
            local_maxima: vec![LocalMax {
                value: 0.0,
                x: x.clone(),
                y: y.clone(),
                start: 0,
            }],
            x,
            y,
            converged_starts: 1,
            total_starts: 1,
        });
    }

    let top = svd(u)?;
    let mut inits = vec![(top.v.column(0), top.u.column(0))];
    let mut rng = random::rng(config.seed);
    for _ in 0..config.starts {
        inits.push((random::unit_vector(&mut rng, nh), random::unit_vector(&mut rng, nk)));
    }
    inits.extend(extra.iter().cloned());
    let total_starts = inits.len();

    let objective = Objective { family, u };
    let mut found: Vec<LocalMax> = Vec::new();
    let mut converged_starts = 0;
    for (start, (x0, y0)) in inits.into_iter().enumerate() {
        let Some((x, y, converged)) = objective.ascend(x0, y0, config) else {
            continue;
        };
        converged_starts += converged as usize;
        let value = objective.ratio(&x, &y);
        found.push(LocalMax { value, x, y, start });
    }
    // stable: ties keep the lower start index first
    found.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap());
    let mut distinct: Vec<LocalMax> = Vec::new();
    for m in found {
        if !distinct
            .iter()
            .any(|d| same_direction(&d.x, &m.x) && same_direction(&d.y, &m.y))
        {
            distinct.push(m);
        }
    }
    let best = distinct
        .first()
        .cloned()
        .ok_or_else(|| Error::InvalidInput("no start produced a finite objective".into()))?;
    Ok(KStarResult {
        value: best.value,
        x: best.x,
        y: best.y,
        converged_starts,
        total_starts,
        local_maxima: distinct,
    })
}

fn same_direction(a: &[C64], b: &[C64]) -> bool {
    inner(a, b).norm() > (1.0 - 1e-8) * norm(a) * norm(b)
}

struct Objective<'a> {
    family: &'a FormFamily,
    u: &'a CMatrix,
}

fn pack(x: &[C64], y: &[C64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(2 * (x.len() + y.len()));
    for v in [x, y] {
        z.extend(v.iter().map(|c| c.re));
        z.extend(v.iter().map(|c| c.im));
    }
    z
}

fn unpack(z: &[f64], nh: usize, nk: usize) -> (CVector, CVector) {
    let x = (0..nh).map(|k| C64::new(z[k], z[nh + k])).collect();
    let off = 2 * nh;
    let y = (0..nk).map(|k| C64::new(z[off + k], z[off + nk + k])).collect();
    (x, y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

impl Objective<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.family.dim_h(), self.family.dim_k())
    }

    fn ratio(&self, x: &[C64], y: &[C64]) -> f64 {
        let g = self.family.majorant_unchecked(x, y);
        let s = inner(&self.u.mul_vec(x), y).norm();
        if g > 0.0 {
            s / g
        } else {
            0.0
        }
    }

    /// Objective value and real gradient at `z`.
    fn eval(&self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (nh, nk) = self.dims();
        let (x, y) = unpack(z, nh, nk);
        let ux = self.u.mul_vec(&x);
        let s = inner(&ux, &y);
        if s.norm() == 0.0 {
            return None;
        }
        let mut ax_norms = Vec::with_capacity(self.family.len());
        let mut by_norms = Vec::with_capacity(self.family.len());
        let mut ax = Vec::with_capacity(self.family.len());
        let mut by = Vec::with_capacity(self.family.len());
        for (a, b) in self.family.pairs() {
            let av = a.mul_vec(&x);
            let bv = b.mul_vec(&y);
            ax_norms.push(norm(&av));
            by_norms.push(norm(&bv));
            ax.push(av);
            by.push(bv);
        }
        let g: f64 = ax_norms.iter().zip(&by_norms).map(|(p, q)| p * q).sum();
        if g.is_nan() || g <= 0.0 {
            return None;
        }
        let f = s.norm_sqr().ln() - 2.0 * g.ln();

        // df = Re(G_x† dx) + Re(G_y† dy)
        let uty = self.u.adjoint().mul_vec(&y);
        let sc = s.conj();
        let mut gx: CVector = uty.iter().map(|v| v * 2.0 / sc).collect();
        let mut gy: CVector = ux.iter().map(|v| v * 2.0 / s).collect();
        for (i, (a, b)) in self.family.pairs().iter().enumerate() {
            if ax_norms[i] > 0.0 && by_norms[i] > 0.0 {
                let cx = 2.0 * by_norms[i] / (g * ax_norms[i]);
                for (gk, v) in gx.iter_mut().zip(a.adjoint().mul_vec(&ax[i])) {
                    *gk -= v * cx;
                }
                let cy = 2.0 * ax_norms[i] / (g * by_norms[i]);
                for (gk, v) in gy.iter_mut().zip(b.adjoint().mul_vec(&by[i])) {
                    *gk -= v * cy;
                }
            }
        }
        Some((f, pack(&gx, &gy)))
    }

    /// BFGS ascent from `(x0, y0)`; returns unit vectors and whether the
    /// gradient threshold was met.
    fn ascend(&self, x0: CVector, y0: CVector, cfg: &KStarConfig) -> Option<(CVector, CVector, bool)> {
        let (nh, nk) = self.dims();
        let dim = 2 * (nh + nk);
        let normalize = |z: &[f64]| -> Vec<f64> {
            let (x, y) = unpack(z, nh, nk);
            let (a, b) = (norm(&x), norm(&y));
            let x: CVector = x.iter().map(|c| c / a).collect();
            let y: CVector = y.iter().map(|c| c / b).collect();
            pack(&x, &y)
        };
        let mut z = normalize(&pack(&x0, &y0));
        let (mut f, mut g) = self.eval(&z)?;
        let mut h = identity(dim);
        let mut converged = false;
        let mut stalls = 0;

        for _ in 0..cfg.max_steps {
            let gnorm = dot(&g, &g).sqrt();
            if gnorm < cfg.grad_tol {
                converged = true;
                break;
            }
            let mut p = mat_vec(&h, &g, dim);
            if dot(&p, &g) <= 0.0 {
                h = identity(dim);
                p = g.clone();
            }
            let slope = dot(&p, &g);
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-20 {
                let trial: Vec<f64> = z.iter().zip(&p).map(|(a, b)| a + t * b).collect();
                if let Some((ft, gt)) = self.eval(&trial) {
                    if ft >= f + 1e-4 * t * slope {
                        accepted = Some((trial, ft, gt));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((z_new, f_new, g_new)) = accepted else {
                converged = gnorm < 1e3 * cfg.grad_tol;
                break;
            };
            let step: Vec<f64> = z_new.iter().zip(&z).map(|(a, b)| a - b).collect();
            // curvature pair for the minimization of −f
            let yv: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
            let sy = dot(&step, &yv);
            if f_new - f <= 1e-15 * f.abs().max(1.0) {
                stalls += 1;
            } else {
                stalls = 0;
            }
            z = z_new;
            f = f_new;
            g = g_new;
            if stalls >= 4 {
                converged = dot(&g, &g).sqrt() < 1e3 * cfg.grad_tol;
                break;
            }
            if sy > 1e-14 * dot(&step, &step).sqrt() * dot(&yv, &yv).sqrt() {
                bfgs_update(&mut h, &step, &yv, sy, dim);
            }
            let (x, y) = unpack(&z, nh, nk);
            let (a, b) = (norm(&x), norm(&y));
            if !(0.5..=2.0).contains(&a) || !(0.5..=2.0).contains(&b) {
                z = normalize(&z);
                (f, g) = self.eval(&z)?;
                h = identity(dim);
            }
        }
        let z = normalize(&z);
        let (x, y) = unpack(&z, nh, nk);
        Some((x, y, converged))
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
}

/// Inverse-Hessian update `H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
