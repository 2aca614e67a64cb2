//! The two-dimensional three-term instance where `conv K ≠ Δ`.
//!
//! With `A = diag(2, 1)` and `C = [[2, 1], [1, 1]]` the family
//! `{(I, I), (A, I), (C, I)}` majorizes `U = I + A + C`, and
//! `T0 = I/8` has Δ-gauge exactly one while lying outside `conv K`. A form
//! separating `T0` from `conv K` satisfies the majorization hypothesis but
//! has no decomposition.
//!
//! The obstruction is spectral: equality `‖S‖₁ = Σ‖x_j‖‖y_j‖` for a positive
//! `S = Σ x_j y_j†` forces every `y_j` to be a positive multiple of `x_j`
//! (see [`representation_check`]), and a representation of `T0` that is tight for
//! all three terms would need common eigenvectors of `A` and `C`.

use crate::decomposer::{decompose, find_separating_form, DecomposeConfig, SeparationCertificate, Status};
use crate::error::{Error, Result};
use crate::gauges::{convk_gauge, delta_gauge, kstar_gauge, ConvkConfig, FormFamily, KStarConfig, Membership};
use crate::linalg::{
    eigenvalues_general, hermitian_eig, inner, norm, nullspace, operator_norm, trace_norm, CMatrix, CVector, C64,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleInstance {
    pub a: CMatrix,
    pub c: CMatrix,
    /// `I + A + C`.
    pub u: CMatrix,
    /// `(‖I‖₁ + ‖A‖₁ + ‖C‖₁)⁻¹`.
    pub scale: f64,
    /// `scale · I`.
    pub t0: CMatrix,
}

impl CounterexampleInstance {
    pub fn family(&self) -> FormFamily {
        let i = CMatrix::identity(2);
        FormFamily::new(vec![
            (i.clone(), i.clone()),
            (self.a.clone(), i.clone()),
            (self.c.clone(), i),
        ])
        .expect("2x2 family")
    }

    /// `(‖T0‖₁, ‖A T0‖₁, ‖C T0‖₁)`.
    pub fn term_norms(&self) -> [f64; 3] {
        [
            trace_norm(&self.t0),
            trace_norm(&(&self.a * &self.t0)),
            trace_norm(&(&self.c * &self.t0)),
        ]
    }

    /// Checks positivity, non-commutation and the normalization of `T0`.
    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("A", &self.a), ("C", &self.c)] {
            if !m.is_hermitian(1e-14) || hermitian_eig(m)?.values.iter().any(|&l| l <= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be Hermitian positive definite"
                )));
            }
        }
        if commutator(&self.a, &self.c).max_abs() == 0.0 {
            return Err(Error::InvalidInput("A and C commute".into()));
        }
        let i = CMatrix::identity(2);
        let expected = 1.0 / (trace_norm(&i) + trace_norm(&self.a) + trace_norm(&self.c));
        if (self.scale - expected).abs() > 1e-15 || self.t0.max_abs_diff(&i.scale_real(self.scale)) > 0.0 {
            return Err(Error::InvalidInput(format!("T0 must be I/{}", 1.0 / expected)));
        }
        Ok(())
    }
}

pub fn build_instance() -> CounterexampleInstance {
    let a = CMatrix::diag_real(&[2.0, 1.0]);
    let c = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
    let u = CMatrix::from_real_rows(&[&[5.0, 1.0], &[1.0, 3.0]]);
    let scale = 0.125;
    let instance = CounterexampleInstance {
        t0: CMatrix::identity(2).scale_real(scale),
        a,
        c,
        u,
        scale,
    };
    instance.validate().expect("built-in instance is valid");
    instance
}

/// `XY - YX`.
pub fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    &(x * y) - &(y * x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: &'static str,
    pub passed: bool,
    pub values: Vec<(&'static str, f64)>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub stages: Vec<Stage>,
    /// The separated form of stage four.
    pub separating_form: Option<CMatrix>,
    pub certificate: Option<SeparationCertificate>,
}

impl CounterexampleReport {
    pub fn all_passed(&self) -> bool {
        self.stages.iter().all(|s| s.passed)
    }
}

fn failed(name: &'static str, e: Error) -> Stage {
    Stage {
        name,
        passed: false,
        values: Vec::new(),
        detail: format!("error: {e}"),
    }
}

/// Runs the five checks; failures are recorded in the report.
///
/// 1. the Δ-gauge of `T0` is one, with its three summands;
/// 2. `U` is majorized (multistart dual gauge) and equals `I + A + C`;
/// 3. column generation places `T0` outside `conv K`;
/// 4. the separating form is certified non-decomposable;
/// 5. `U` itself decomposes.
pub fn verify_all(instance: &CounterexampleInstance, seed: u64) -> CounterexampleReport {
    let family = instance.family();
    let kstar = KStarConfig {
        seed,
        ..KStarConfig::default()
    };
    let convk = ConvkConfig {
        tol: 1e-9,
        kstar,
        ..ConvkConfig::default()
    };
    let mut stages = Vec::with_capacity(5);

    let name = "delta-gauge";
    stages.push(match delta_gauge(&family, &instance.t0) {
        Ok(d) => {
            let [n1, n2, n3] = instance.term_norms();
            Stage {
                name,
                passed: (d - 1.0).abs() <= 1e-12,
                values: vec![("N1", n1), ("N2", n2), ("N3", n3), ("delta", d)],
                detail: "sum of trace norms of T0, A T0, C T0".into(),
            }
        }
        Err(e) => failed(name, e),
    });

    let name = "majorization";
    stages.push(match kstar_gauge(&family, &instance.u, &kstar) {
        Ok(k) => {
            let i = CMatrix::identity(2);
            let sum = &(&i + &instance.a) + &instance.c;
            let identity_gap = sum.max_abs_diff(&instance.u);
            Stage {
                name,
                passed: k.value <= 1.0 + 1e-9 && identity_gap == 0.0,
                values: vec![("kstar", k.value), ("identity_gap", identity_gap)],
                detail: format!("{} of {} starts converged", k.converged_starts, k.total_starts),
            }
        }
        Err(e) => failed(name, e),
    });

    let name = "non-membership";
    stages.push(match convk_gauge(&family, &instance.t0, &convk) {
        Ok(r) => {
            let membership = r.membership(convk.tol);
            Stage {
                name,
                passed: membership == Membership::Outside,
                values: vec![
                    ("convk_lower", r.convk_lower),
                    ("convk_upper", r.convk_upper),
                    ("gap", r.convk_lower - 1.0),
                ],
                detail: format!("{membership} after {} rounds", r.iterations),
            }
        }
        Err(e) => failed(name, e),
    });

    let name = "separation";
    let mut separating_form = None;
    let mut certificate = None;
    stages.push(match find_separating_form(&family, &instance.t0, &convk) {
        Ok((ustar, cert)) => {
            let k = kstar_gauge(&family, &ustar, &kstar)
                .map(|k| k.value)
                .unwrap_or(f64::NAN);
            let pair = (&ustar * &instance.t0).trace().re;
            let (status, detail) = match decompose(&family, &ustar, &DecomposeConfig::default()) {
                Ok(o) => {
                    let status = o.status();
                    if let Some(c) = o.certificate() {
                        certificate = Some(c.clone());
                    }
                    (Some(status), format!("decompose: {status}"))
                }
                Err(e) => (None, format!("decompose failed: {e}")),
            };
            separating_form = Some(ustar);
            Stage {
                name,
                passed: k <= 1.0 + 1e-6
                    && pair > 1.0
                    && cert.certifies()
                    && status == Some(Status::CertifiedInfeasible),
                values: vec![("kstar", k), ("pairing", pair), ("delta", cert.delta_value)],
                detail,
            }
        }
        Err(e) => failed(name, e),
    });

    let name = "displayed-form";
    stages.push(match decompose(&family, &instance.u, &DecomposeConfig::default()) {
        Ok(o) => {
            let d = o.decomposition();
            Stage {
                name,
                passed: o.status() == Status::Feasible,
                values: vec![
                    ("residual", d.map_or(f64::NAN, |d| d.residual)),
                    (
                        "max_term_norm",
                        d.map_or(f64::NAN, |d| d.per_term_norms.iter().copied().fold(0.0, f64::max)),
                    ),
                ],
                detail: format!("decompose: {}", o.status()),
            }
        }
        Err(e) => failed(name, e),
    });

    CounterexampleReport {
        stages,
        separating_form,
        certificate,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationCheck {
    pub trace_norm: f64,
    /// `Σ ‖x_j‖‖y_j‖`.
    pub representation_cost: f64,
    /// Whether the cost equals the trace norm to `1e-9` (relative).
    pub equality: bool,
    /// `None` when `equality` fails and the check is skipped.
    pub proportional: Option<bool>,
    /// `⟨y_j|x_j⟩ / ‖x_j‖²` for each pair, zero for vanishing terms.
    pub ratios: Vec<C64>,
}

impl RepresentationCheck {
    /// False exactly when equality holds without proportionality.
    pub fn consistent(&self) -> bool {
        self.proportional != Some(false)
    }
}

/// Tests the claim that a tight representation `S = Σ x_j y_j†` of a
/// positive `S` has every `y_j` a positive multiple of `x_j`.
pub fn representation_check(s: &CMatrix, rep: &[(CVector, CVector)]) -> Result<RepresentationCheck> {
    if !s.is_square() {
        return Err(Error::InvalidInput("S must be square".into()));
    }
    let scale = s.max_abs().max(1.0);
    if !s.is_hermitian(1e-12 * scale)
        || hermitian_eig(&s.hermitian_part())?
            .values
            .iter()
            .any(|&l| l < -1e-12 * scale)
    {
        return Err(Error::InvalidInput("S must be positive semidefinite".into()));
    }
    let n = s.rows();
    let mut sum = CMatrix::zeros(n, n);
    for (j, (x, y)) in rep.iter().enumerate() {
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "pair {j} has lengths ({}, {})",
                x.len(),
                y.len()
            )));
        }
        sum += &CMatrix::outer(x, y);
    }
    if sum.max_abs_diff(s) > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "representation misses S by {:.3e}",
            sum.max_abs_diff(s)
        )));
    }

    let tn = trace_norm(s);
    let cost: f64 = rep.iter().map(|(x, y)| norm(x) * norm(y)).sum();
    let equality = (cost - tn).abs() <= 1e-9 * tn.max(1.0);
    let mut ratios = Vec::with_capacity(rep.len());
    let mut all = true;
    for (x, y) in rep {
        let (nx, ny) = (norm(x), norm(y));
        if nx * ny == 0.0 {
            ratios.push(C64::new(0.0, 0.0));
            continue;
        }
        let alpha = inner(y, x) / (nx * nx);
        ratios.push(alpha);
        let rest: CVector = y.iter().zip(x).map(|(yk, xk)| yk - alpha * xk).collect();
        let positive = alpha.re > 0.0 && alpha.im.abs() <= 1e-8 * alpha.norm();
        all &= positive && norm(&rest) <= 1e-8 * ny;
    }
    Ok(RepresentationCheck {
        trace_norm: tn,
        representation_cost: cost,
        equality,
        proportional: equality.then_some(all),
        ratios,
    })
}

/// A unit vector that is an eigenvector of both matrices up to residual
/// `tol`, found among the joint kernels `ker(M1 - λ) ∩ ker(M2 - μ)` over
/// pairs of eigenvalues. Repeated eigenvalues are handled through the
/// kernel dimension.
pub fn common_eigenvector(m1: &CMatrix, m2: &CMatrix, tol: f64) -> Result<Option<CVector>> {
    if !m1.is_square() || !m2.is_square() || m1.rows() != m2.rows() {
        return Err(Error::DimensionMismatch(format!(
            "need two square matrices of one size, got {}x{} and {}x{}",
            m1.rows(),
            m1.cols(),
            m2.rows(),
            m2.cols()
        )));
    }
    let n = m1.rows();
    let distinct = |m: &CMatrix| -> Result<Vec<C64>> {
        let scale = m.max_abs().max(1.0);
        let mut out: Vec<C64> = Vec::new();
        for l in eigenvalues_general(m)? {
            if !out.iter().any(|o| (o - l).norm() <= 1e-9 * scale) {
                out.push(l);
            }
        }
        Ok(out)
    };
    let shifted = |m: &CMatrix, l: C64| -> CMatrix { m - &CMatrix::identity(n).scale(l) };
    for l1 in distinct(m1)? {
        let s1 = shifted(m1, l1);
        for l2 in distinct(m2)? {
            let s2 = shifted(m2, l2);
            let stacked = CMatrix::from_fn(2 * n, n, |r, c| if r < n { s1[(r, c)] } else { s2[(r - n, c)] });
            let kernel = nullspace(&stacked, tol)?;
            if kernel.cols() == 0 {
                continue;
            }
            let v = kernel.column(0);
            if norm(&s1.mul_vec(&v)) <= tol && norm(&s2.mul_vec(&v)) <= tol {
                return Ok(Some(v));
            }
        }
    }
    Ok(None)
}

/// Operator norm of `AC - CA` for the instance.
pub fn commutator_norm(instance: &CounterexampleInstance) -> f64 {
    operator_norm(&commutator(&instance.a, &instance.c))
}
