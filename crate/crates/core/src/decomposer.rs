//! Splitting a majorized form into terms bounded by single pairs.
//!
//! For an invertible pair the bound `|⟨U_i x|y⟩| ≤ ‖A_i x‖‖B_i y‖` holds
//! exactly when `V_i = B_i^{-†} U_i A_i^{-1}` is a contraction, so a
//! decomposition is a point of the affine set `{Σ B_i† V_i A_i = U}` lying
//! in the product of operator-norm unit balls. [`decompose`] searches for one
//! with Dykstra's alternating projections. It only calls a form infeasible
//! when it also holds a trace-class `T0` with
//! `Σ ‖A_i T0 B_i†‖₁ < Re tr(U T0)`, which no decomposition can satisfy.

use crate::error::{Error, Result};
use crate::gauges::{convk_gauge, delta_gauge, kstar_gauge, Atom, ConvkConfig, FormFamily, KStarConfig, Membership};
use crate::linalg::{
    check_invertible, eps_regularize, hermitian_eig, inner, inverse, norm, operator_norm, svd, CMatrix, CVector, C64,
};
use crate::random;

/// Relative excess of `Re tr(U T0)` over the Δ-gauge of `T0` required
/// before a certificate is trusted.
pub const CERT_MARGIN: f64 = 1e-9;

/// Dykstra iterations between attempts to read a certificate off the
/// current displacement.
const CERT_EVERY: usize = 50;

/// Samples used by [`verify_decomposition`] for non-invertible pairs.
const RATIO_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeConfig {
    /// Feasibility slack on both the sum and the witness norms.
    pub tol: f64,
    pub max_iter: usize,
    /// Candidate operators `T0` tried as certificates before iterating.
    pub hints: Vec<CMatrix>,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            tol: 1e-8,
            max_iter: 20_000,
            hints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `U_i = B_i† V_i A_i`.
    pub terms: Vec<CMatrix>,
    pub witnesses: Vec<CMatrix>,
    /// Frobenius norm of `Σ U_i - U`.
    pub residual: f64,
    /// `‖V_i‖`.
    pub per_term_norms: Vec<f64>,
    pub iterations: usize,
    /// Frobenius distance from each ball iterate to the affine set.
    pub distance_trace: Vec<f64>,
}

impl Decomposition {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.residual <= tol && self.per_term_norms.iter().all(|&s| s <= 1.0 + tol)
    }

    /// Steps at which the distance to the affine set went up.
    pub fn monotone_violations(&self) -> usize {
        count_increases(&self.distance_trace)
    }
}

fn count_increases(trace: &[f64]) -> usize {
    trace.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-9) + 1e-15).count()
}

/// A trace-class `T0` pairing with `U` above its Δ-gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCertificate {
    pub t0: CMatrix,
    /// `Σ ‖A_i T0 B_i†‖₁`, an upper bound for `|Σ tr(U_i T0)|` over every
    /// decomposition.
    pub delta_value: f64,
    /// `Re tr(U T0)`.
    pub dual_pair_value: f64,
    /// Atoms of a `conv K` combination of `T0`, when it came from column
    /// generation.
    pub generating_atoms: Vec<Atom>,
}

impl SeparationCertificate {
    /// Evaluates both sides for `T0` scaled to Δ-gauge one.
    pub fn new(family: &FormFamily, u: &CMatrix, t0: &CMatrix) -> Result<Self> {
        family.check_form(u)?;
        let d = delta_gauge(family, t0)?;
        let t0 = if d > 0.0 { t0.scale_real(1.0 / d) } else { t0.clone() };
        let delta_value = if d > 0.0 { delta_gauge(family, &t0)? } else { 0.0 };
        Ok(SeparationCertificate {
            dual_pair_value: (u * &t0).trace().re,
            t0,
            delta_value,
            generating_atoms: Vec::new(),
        })
    }

    pub fn margin(&self) -> f64 {
        self.dual_pair_value - self.delta_value
    }

    /// Whether the chain `|Σ tr(U_i T0)| ≤ Σ ‖A_i T0 B_i†‖₁ < Re tr(U T0)`
    /// holds with room to spare.
    pub fn certifies(&self) -> bool {
        self.delta_value > 0.0 && self.margin() > CERT_MARGIN * self.delta_value.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infeasibility {
    /// Present exactly when infeasibility is proven.
    pub certificate: Option<SeparationCertificate>,
    pub iterations: usize,
    pub final_distance: f64,
    pub distance_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Feasible,
    CertifiedInfeasible,
    Undecided,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Feasible => "feasible",
            Status::CertifiedInfeasible => "certified-infeasible",
            Status::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Feasible(Decomposition),
    Infeasible(Infeasibility),
}

impl Outcome {
    pub fn status(&self) -> Status {
        match self {
            Outcome::Feasible(_) => Status::Feasible,
            Outcome::Infeasible(i) if i.certificate.is_some() => Status::CertifiedInfeasible,
            Outcome::Infeasible(_) => Status::Undecided,
        }
    }

    pub fn decomposition(&self) -> Option<&Decomposition> {
        match self {
            Outcome::Feasible(d) => Some(d),
            Outcome::Infeasible(_) => None,
        }
    }

    pub fn certificate(&self) -> Option<&SeparationCertificate> {
        match self {
            Outcome::Feasible(_) => None,
            Outcome::Infeasible(i) => i.certificate.as_ref(),
        }
    }
}

/// `V_i = (B_i†)⁻¹ U_i A_i⁻¹`; its operator norm is the best constant in
/// `|⟨U_i x|y⟩| ≤ c‖A_i x‖‖B_i y‖`.
pub fn contraction_reduction(family: &FormFamily, u_i: &CMatrix, i: usize) -> Result<CMatrix> {
    family.check_form(u_i)?;
    let (a, b) = family
        .pairs()
        .get(i)
        .ok_or_else(|| Error::InvalidInput(format!("pair index {i} out of range ({} pairs)", family.len())))?;
    check_invertible(a)?;
    check_invertible(b)?;
    Ok(&(&inverse(&b.adjoint())? * u_i) * &inverse(a)?)
}

/// The linear map `L(V) = Σ B_i† V_i A_i` and the inverse of `L L†`.
struct Witnesses<'a> {
    pairs: &'a [(CMatrix, CMatrix)],
    dk: usize,
    dh: usize,
    /// Pseudo-inverse of `L L† : R ↦ Σ B_i†B_i R A_i†A_i` on column-major
    /// vectorizations.
    gram_inv: CMatrix,
}

impl<'a> Witnesses<'a> {
    fn new(family: &'a FormFamily) -> Result<Self> {
        let (dh, dk) = (family.dim_h(), family.dim_k());
        let m = dh * dk;
        let mut gram = CMatrix::zeros(m, m);
        for (a, b) in family.pairs() {
            let left = (&a.adjoint() * a).transpose();
            gram += &left.kron(&(&b.adjoint() * b));
        }
        let eig = hermitian_eig(&gram.hermitian_part())?;
        let cut = 1e-13 * eig.values[0].max(f64::MIN_POSITIVE);
        let gram_inv = eig.map(|l| if l > cut { 1.0 / l } else { 0.0 });
        Ok(Witnesses {
            pairs: family.pairs(),
            dk,
            dh,
            gram_inv,
        })
    }

    fn apply(&self, v: &[CMatrix]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dk, self.dh);
        for ((a, b), vi) in self.pairs.iter().zip(v) {
            out += &(&(&b.adjoint() * vi) * a);
        }
        out
    }

    /// `(L L†)⁻¹ E`.
    fn solve_gram(&self, e: &CMatrix) -> CMatrix {
        let r = self.gram_inv.mul_vec(&e.vec_col_major());
        CMatrix::from_vec_col_major(self.dk, self.dh, &r)
    }

    /// `L† R = (B_i R A_i†)_i`.
    fn adjoint(&self, r: &CMatrix) -> Vec<CMatrix> {
        self.pairs.iter().map(|(a, b)| &(b * r) * &a.adjoint()).collect()
    }

    /// Nearest point of `{L V = U}` to `v`.
    fn project_affine(&self, v: &[CMatrix], u: &CMatrix) -> Vec<CMatrix> {
        let e = &self.apply(v) - u;
        let corr = self.adjoint(&self.solve_gram(&e));
        v.iter().zip(&corr).map(|(vi, ci)| vi - ci).collect()
    }

    /// [`Self::project_affine`] repeated while the residual keeps
    /// shrinking, which recovers accuracy lost to an ill-conditioned `L L†`.
    fn project_affine_refined(&self, v: &[CMatrix], u: &CMatrix) -> Vec<CMatrix> {
        let mut x = self.project_affine(v, u);
        let mut res = (&self.apply(&x) - u).frobenius_norm();
        for _ in 0..4 {
            let next = self.project_affine(&x, u);
            let r = (&self.apply(&next) - u).frobenius_norm();
            if r.is_nan() || r >= res {
                break;
            }
            x = next;
            res = r;
        }
        x
    }

    /// Separating operator read off the displacement of a ball point `y`
    /// from the affine set: with `R = (L L†)⁻¹(U - L y)`, every point of the
    /// balls has `Re⟨L V, R⟩ ≤ Σ‖A_i R† B_i†‖₁`.
    fn displacement_t0(&self, y: &[CMatrix], u: &CMatrix) -> CMatrix {
        let e = u - &self.apply(y);
        self.solve_gram(&e).adjoint()
    }
}

/// Nearest contraction in Frobenius norm: singular values clipped at one.
fn clip_to_ball(m: &CMatrix) -> Result<CMatrix> {
    let r = svd(m)?;
    if r.s.first().is_none_or(|&s| s <= 1.0) {
        return Ok(m.clone());
    }
    Ok(CMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        r.s.iter()
            .enumerate()
            .map(|(k, &s)| r.u[(i, k)] * r.v[(j, k)].conj() * s.min(1.0))
            .sum()
    }))
}

fn frobenius_distance(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

fn build_decomposition(
    family: &FormFamily,
    u: &CMatrix,
    witnesses: Vec<CMatrix>,
    iterations: usize,
    distance_trace: Vec<f64>,
) -> Decomposition {
    let terms: Vec<CMatrix> = family
        .pairs()
        .iter()
        .zip(&witnesses)
        .map(|((a, b), v)| &(&b.adjoint() * v) * a)
        .collect();
    let mut sum = CMatrix::zeros(u.rows(), u.cols());
    for t in &terms {
        sum += t;
    }
    Decomposition {
        residual: (&sum - u).frobenius_norm(),
        per_term_norms: witnesses.iter().map(operator_norm).collect(),
        terms,
        witnesses,
        iterations,
        distance_trace,
    }
}

/// The refined affine iterate as a decomposition, if it meets `tol`.
fn accept(
    family: &FormFamily,
    w: &Witnesses,
    u: &CMatrix,
    x: &[CMatrix],
    tol: f64,
    iterations: usize,
    trace: &[f64],
) -> Option<Decomposition> {
    if !x.iter().all(|v| operator_norm(v) <= 1.0 + tol) {
        return None;
    }
    let d = build_decomposition(family, u, w.project_affine_refined(x, u), iterations, trace.to_vec());
    d.is_feasible(tol).then_some(d)
}

/// Searches for `U = Σ U_i` with `|⟨U_i x|y⟩| ≤ ‖A_i x‖‖B_i y‖`.
///
/// Requires every pair to be invertible; see [`eps_decompose`] otherwise.
/// Starting from the minimum-norm solution of `Σ B_i† V_i A_i = U`, Dykstra's
/// scheme alternates the affine projection with per-block clipping of
/// singular values. The affine iterate is returned as soon as all its
/// witnesses have norm at most `1 + tol`. Every `CERT_EVERY` steps the
/// current displacement is tested as a separating operator, so infeasible
/// forms usually end with a certificate well before `max_iter`.
pub fn decompose(family: &FormFamily, u: &CMatrix, config: &DecomposeConfig) -> Result<Outcome> {
    family.check_form(u)?;
    for (a, b) in family.pairs() {
        check_invertible(a)?;
        check_invertible(b)?;
    }
    for hint in &config.hints {
        let cert = SeparationCertificate::new(family, u, hint)?;
        if cert.certifies() {
            return Ok(Outcome::Infeasible(Infeasibility {
                certificate: Some(cert),
                iterations: 0,
                final_distance: f64::NAN,
                distance_trace: Vec::new(),
            }));
        }
    }

    let w = Witnesses::new(family)?;
    let zero: Vec<CMatrix> = vec![CMatrix::zeros(w.dk, w.dh); family.len()];
    let mut x = w.project_affine_refined(&zero, u);
    let mut p = zero;
    let mut trace = Vec::new();
    let mut last_y = x.clone();

    for it in 0..config.max_iter {
        if let Some(d) = accept(family, &w, u, &x, config.tol, it, &trace) {
            return Ok(Outcome::Feasible(d));
        }
        let mut y = Vec::with_capacity(x.len());
        for (xi, pi) in x.iter().zip(&p) {
            let z = xi + pi;
            let yi = clip_to_ball(&z)?;
            y.push(yi);
        }
        for ((pi, xi), yi) in p.iter_mut().zip(&x).zip(&y) {
            *pi += &(xi - yi);
        }
        let x_next = w.project_affine(&y, u);
        trace.push(frobenius_distance(&x_next, &y));
        x = x_next;

        if (it + 1) % CERT_EVERY == 0 {
            let t0 = w.displacement_t0(&y, u);
            if t0.max_abs() > 0.0 {
                let cert = SeparationCertificate::new(family, u, &t0)?;
                if cert.certifies() {
                    return Ok(Outcome::Infeasible(Infeasibility {
                        certificate: Some(cert),
                        iterations: it + 1,
                        final_distance: *trace.last().unwrap(),
                        distance_trace: trace,
                    }));
                }
            }
        }
        last_y = y;
    }

    if let Some(d) = accept(family, &w, u, &x, config.tol, config.max_iter, &trace) {
        return Ok(Outcome::Feasible(d));
    }
    let t0 = w.displacement_t0(&last_y, u);
    let certificate = if t0.max_abs() > 0.0 {
        Some(SeparationCertificate::new(family, u, &t0)?).filter(SeparationCertificate::certifies)
    } else {
        None
    };
    Ok(Outcome::Infeasible(Infeasibility {
        certificate,
        iterations: config.max_iter,
        final_distance: trace.last().copied().unwrap_or(0.0),
        distance_trace: trace,
    }))
}

/// `4^{-k}` for `k = 0..=20`.
pub fn default_eps_grid() -> Vec<f64> {
    (0..=20).map(|k| 4f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsStep {
    pub eps: f64,
    /// `None` when the regularized family was still too ill-conditioned.
    pub status: Option<Status>,
    /// Witness norms `‖V_i‖` for the regularized pairs.
    pub per_term_norms: Vec<f64>,
    /// Operator norms `‖U_i‖` of the terms.
    pub term_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsDecomposition {
    pub trajectory: Vec<EpsStep>,
    /// Smallest grid value with a feasible solution.
    pub eps: Option<f64>,
    pub decomposition: Option<Decomposition>,
}

impl EpsDecomposition {
    pub fn is_feasible(&self) -> bool {
        self.decomposition.is_some()
    }
}

/// The pairs `((A_i†A_i + εI)^{1/2}, (B_i†B_i + εI)^{1/2})`.
pub fn regularized_family(family: &FormFamily, eps: f64) -> Result<FormFamily> {
    let pairs = family
        .pairs()
        .iter()
        .map(|(a, b)| Ok((eps_regularize(a, eps)?, eps_regularize(b, eps)?)))
        .collect::<Result<Vec<_>>>()?;
    FormFamily::new(pairs)
}

/// Runs [`decompose`] on the ε-regularized family for each `ε` in the
/// descending grid. Since `‖A(ε)x‖` decreases with `ε`, the feasible set
/// shrinks along the grid and the loop stops at the first certified
/// infeasibility.
pub fn eps_decompose(
    family: &FormFamily,
    u: &CMatrix,
    eps_grid: &[f64],
    config: &DecomposeConfig,
) -> Result<EpsDecomposition> {
    family.check_form(u)?;
    if eps_grid.is_empty() {
        return Err(Error::InvalidInput("empty ε grid".into()));
    }
    if eps_grid.iter().any(|&e| e.is_nan() || e <= 0.0 || !e.is_finite()) || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(
            "ε grid must be positive and strictly decreasing".into(),
        ));
    }
    let mut out = EpsDecomposition {
        trajectory: Vec::new(),
        eps: None,
        decomposition: None,
    };
    for &eps in eps_grid {
        let reg = regularized_family(family, eps)?;
        let outcome = match decompose(&reg, u, config) {
            Ok(o) => o,
            Err(Error::IllConditioned { .. }) => {
                out.trajectory.push(EpsStep {
                    eps,
                    status: None,
                    per_term_norms: Vec::new(),
                    term_norms: Vec::new(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let status = outcome.status();
        let (per_term_norms, term_norms) = match outcome.decomposition() {
            Some(d) => (d.per_term_norms.clone(), d.terms.iter().map(operator_norm).collect()),
            None => (Vec::new(), Vec::new()),
        };
        out.trajectory.push(EpsStep {
            eps,
            status: Some(status),
            per_term_norms,
            term_norms,
        });
        match outcome {
            Outcome::Feasible(d) => {
                out.eps = Some(eps);
                out.decomposition = Some(d);
            }
            Outcome::Infeasible(i) if i.certificate.is_some() => break,
            Outcome::Infeasible(_) => {}
        }
    }
    Ok(out)
}

/// A form with dual gauge at most one pairing with `t0` above one.
///
/// Fails with `PreconditionFailed` unless column generation places `t0`
/// outside `conv K`. The returned form satisfies the majorization
/// hypothesis (up to the multistart estimate of its dual gauge) and, when
/// the certificate [`certifies`](SeparationCertificate::certifies), admits
/// no decomposition.
pub fn find_separating_form(
    family: &FormFamily,
    t0: &CMatrix,
    config: &ConvkConfig,
) -> Result<(CMatrix, SeparationCertificate)> {
    let report = convk_gauge(family, t0, config)?;
    if report.membership(config.tol) != Membership::Outside {
        return Err(Error::PreconditionFailed(format!(
            "target is not certified outside conv K (gauge in [{:.9}, {:.9}])",
            report.convk_lower, report.convk_upper
        )));
    }
    let check = KStarConfig {
        starts: config.kstar.starts * 4,
        seed: config.kstar.seed.wrapping_add(1),
        ..config.kstar
    };
    let kappa = kstar_gauge(family, &report.dual_w, &check)?.value;
    let u = if kappa > 1.0 {
        report.dual_w.scale_real(1.0 / kappa)
    } else {
        report.dual_w.clone()
    };
    let pair = (&u * t0).trace().re;
    if pair <= 1.0 {
        return Err(Error::PreconditionFailed(format!(
            "dual form pairs to {pair:.12} with the target after rescaling"
        )));
    }
    let certificate = SeparationCertificate {
        t0: t0.clone(),
        delta_value: report.delta_value,
        dual_pair_value: pair,
        generating_atoms: report.atoms,
    };
    Ok((u, certificate))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundMethod {
    /// Exact: the operator norm of the reduced contraction.
    Contraction,
    /// Maximum ratio over random unit vectors.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermCheck {
    pub index: usize,
    pub method: BoundMethod,
    /// Largest observed `|⟨U_i x|y⟩| / (‖A_i x‖‖B_i y‖)`.
    pub ratio: f64,
    /// `1 - ratio`.
    pub slack: f64,
    /// A pair attaining `ratio` when it exceeds `1 + tol`.
    pub violation: Option<(CVector, CVector)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// Frobenius norm of `Σ U_i - U`.
    pub sum_residual: f64,
    pub sum_ok: bool,
    pub terms: Vec<TermCheck>,
    pub passed: bool,
}

/// Checks `Σ terms = U` to `1e-10` relative to `‖U‖ + Σ‖U_i‖`, and each
/// per-term bound to `1 + tol`. An empty term list stands for the zero
/// decomposition.
pub fn verify_decomposition(
    family: &FormFamily,
    u: &CMatrix,
    terms: &[CMatrix],
    tol: f64,
) -> Result<VerificationReport> {
    family.check_form(u)?;
    if !terms.is_empty() && terms.len() != family.len() {
        return Err(Error::InvalidInput(format!(
            "{} terms for a family of {} pairs",
            terms.len(),
            family.len()
        )));
    }
    let mut sum = CMatrix::zeros(u.rows(), u.cols());
    let mut scale = operator_norm(u);
    for t in terms {
        family.check_form(t)?;
        sum += t;
        scale += operator_norm(t);
    }
    let sum_residual = (&sum - u).frobenius_norm();
    let sum_ok = sum_residual <= 1e-10 * scale;

    let mut checks = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        let (ratio, witness, method) = if family.is_invertible(i) {
            let (a, b) = &family.pairs()[i];
            let v = contraction_reduction(family, t, i)?;
            let r = svd(&v)?;
            let x = crate::linalg::solve(a, &r.v.column(0))?;
            let y = crate::linalg::solve(b, &r.u.column(0))?;
            (r.s[0], (x, y), BoundMethod::Contraction)
        } else {
            let (ratio, x, y) = sampled_ratio(family, t, i)?;
            (ratio, (x, y), BoundMethod::Sampled)
        };
        checks.push(TermCheck {
            index: i,
            method,
            ratio,
            slack: 1.0 - ratio,
            violation: (ratio > 1.0 + tol).then_some(witness),
        });
    }
    let passed = sum_ok && checks.iter().all(|c| c.violation.is_none());
    Ok(VerificationReport {
        sum_residual,
        sum_ok,
        terms: checks,
        passed,
    })
}

fn sampled_ratio(family: &FormFamily, t: &CMatrix, i: usize) -> Result<(f64, CVector, CVector)> {
    let (a, b) = &family.pairs()[i];
    let scale = t.max_abs();
    let ratio = |x: &[C64], y: &[C64]| -> f64 {
        let num = inner(&t.mul_vec(x), y).norm();
        let den = norm(&a.mul_vec(x)) * norm(&b.mul_vec(y));
        if den > 0.0 {
            num / den
        } else if num > 1e-14 * scale {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let top = svd(t)?;
    let mut best = (
        ratio(&top.v.column(0), &top.u.column(0)),
        top.v.column(0),
        top.u.column(0),
    );
    let mut rng = random::rng(0x7e57 ^ i as u64);
    for _ in 0..RATIO_SAMPLES {
        let x = random::unit_vector(&mut rng, family.dim_h());
        let y = random::unit_vector(&mut rng, family.dim_k());
        let r = ratio(&x, &y);
        if r > best.0 {
            best = (r, x, y);
        }
    }
    Ok(best)
}
