//! Dense revised simplex for `min cᵀλ s.t. Mλ = b, λ ≥ 0`.
//!
//! Sized for column generation: a few dozen rows, a few hundred columns,
//! and a feasible starting basis supplied by the caller (the previous
//! optimal basis stays feasible when columns are appended). The basis
//! inverse is refactored from scratch at every pivot.

const PIVOT_TOL: f64 = 1e-12;
const COST_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 20_000;
/// Non-improving pivots in a row before switching to Bland's rule.
const BLAND_AFTER: usize = 30;
/// Non-improving pivots in a row after which the basis is accepted as
/// optimal up to rounding.
const STALL_AFTER: usize = 200;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    /// Primal values, one per column.
    pub x: Vec<f64>,
    /// Row multipliers `z` with `Bᵀz = c_B`.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpError {
    SingularBasis,
    Infeasible,
    Unbounded,
    PivotLimit,
}

fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().partial_cmp(&m[j * n + col].abs()).unwrap())
            .unwrap();
        if m[piv * n + col].abs() <= 1e-13 * scale {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
                inv.swap(col * n + j, piv * n + j);
            }
        }
        let d = m[col * n + col];
        for j in 0..n {
            m[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[i * n + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                m[i * n + j] -= f * m[col * n + j];
                inv[i * n + j] -= f * inv[col * n + j];
            }
        }
    }
    Some(inv)
}

/// Phase-II revised simplex from the feasible basis `basis`.
pub(crate) fn solve(cols: &[Vec<f64>], cost: &[f64], b: &[f64], mut basis: Vec<usize>) -> Result<LpSolution, LpError> {
    let m = b.len();
    let bscale = b.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let mut degenerate_run = 0;
    let mut best_objective = f64::INFINITY;

    for _ in 0..MAX_PIVOTS {
        let mut bmat = vec![0.0; m * m];
        for (k, &j) in basis.iter().enumerate() {
            for i in 0..m {
                bmat[i * m + k] = cols[j][i];
            }
        }
        let binv = invert(&bmat, m).ok_or(LpError::SingularBasis)?;
        let mut xb: Vec<f64> = (0..m).map(|i| (0..m).map(|k| binv[i * m + k] * b[k]).sum()).collect();
        for v in xb.iter_mut() {
            if *v < 0.0 {
                if *v < -1e-9 * bscale {
                    return Err(LpError::Infeasible);
                }
                *v = 0.0;
            }
        }
        // z = B⁻ᵀ c_B
        let z: Vec<f64> = (0..m)
            .map(|k| (0..m).map(|i| binv[i * m + k] * cost[basis[i]]).sum())
            .collect();

        let objective: f64 = basis.iter().zip(&xb).map(|(&j, v)| cost[j] * v).sum();
        if objective < best_objective - 1e-13 * objective.abs().max(1.0) {
            best_objective = objective;
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }

        let in_basis = |j: usize| basis.contains(&j);
        let reduced = |j: usize| cost[j] - cols[j].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        let entering = if degenerate_run >= BLAND_AFTER {
            (0..cols.len()).find(|&j| !in_basis(j) && reduced(j) < -COST_TOL)
        } else {
            (0..cols.len())
                .filter(|&j| !in_basis(j))
                .map(|j| (j, reduced(j)))
                .filter(|&(_, r)| r < -COST_TOL)
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(j, _)| j)
        };
        let entering = if degenerate_run >= STALL_AFTER { None } else { entering };
        let Some(e) = entering else {
            let mut x = vec![0.0; cols.len()];
            for (k, &j) in basis.iter().enumerate() {
                x[j] = xb[k];
            }
            return Ok(LpSolution {
                x,
                duals: z,
                objective,
                basis,
            });
        };

        let d: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|k| binv[i * m + k] * cols[e][k]).sum())
            .collect();
        let dmax = d.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if d[i] > PIVOT_TOL * dmax.max(1.0) {
                let ratio = xb[i] / d[i];
                let better = match leave {
                    None => true,
                    Some((l, r)) => ratio < r - 1e-15 || (ratio <= r + 1e-15 && basis[i] < basis[l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((l, _)) = leave else {
            return Err(LpError::Unbounded);
        };
        basis[l] = e;
    }
    Err(LpError::PivotLimit)
}
