//! Subcommand bodies. Each returns the process exit code or a [`Failure`]
//! carrying the code and a one-line diagnostic.

use std::path::Path;

use formdecomp::counterexample::{build_instance, verify_all, CounterexampleReport};
use formdecomp::decomposer::{
    decompose as run_decompose, default_eps_grid, eps_decompose, find_separating_form, regularized_family,
    verify_decomposition, DecomposeConfig, Decomposition, Outcome, SeparationCertificate, Status, VerificationReport,
};
use formdecomp::gauges::{convk_gauge, delta_gauge, ConvkConfig, FormFamily, KStarConfig};
use formdecomp::linalg::{c64, CMatrix, CVector};
use formdecomp::random;
use formdecomp::tensor::{canonical_rep, hat_construction, pi_norm, three_term_compat, TensorRep};
use formdecomp::Error;

use crate::files::{self, InputError};
use crate::json::Json;

pub const FEASIBLE: u8 = 0;
pub const FAILED: u8 = 1;
pub const INTERNAL: u8 = 2;
pub const CERTIFIED_INFEASIBLE: u8 = 3;
pub const UNDECIDED: u8 = 4;
pub const ILL_CONDITIONED: u8 = 5;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::new(FAILED, e.0)
    }
}

/// Input problems exit with 1, anything else with 2.
fn library(e: Error) -> Failure {
    match e {
        Error::InvalidInput(_) | Error::DimensionMismatch(_) => Failure::new(FAILED, e.to_string()),
        _ => Failure::new(INTERNAL, e.to_string()),
    }
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(INTERNAL, format!("{}: {e}", path.display()))
}

type Result<T> = std::result::Result<T, Failure>;

fn vector_json(v: &CVector) -> Json {
    Json::Arr(v.iter().map(|z| Json::nums(&[z.re, z.im])).collect())
}

fn certificate_json(cert: &SeparationCertificate) -> Json {
    Json::obj([
        ("t0", files::matrix_json(&cert.t0)),
        ("delta_value", Json::Num(cert.delta_value)),
        ("dual_pair_value", Json::Num(cert.dual_pair_value)),
        ("margin", Json::Num(cert.margin())),
        ("certifies", Json::Bool(cert.certifies())),
    ])
}

fn print_certificate(cert: &SeparationCertificate) {
    println!(
        "certificate: Re tr(U T0) = {} against Δ(T0) = {} (margin {:.3e})",
        cert.dual_pair_value,
        cert.delta_value,
        cert.margin()
    );
}

pub fn counterexample(seed: u64, json: bool, instance: Option<&Path>, export: Option<&Path>) -> Result<u8> {
    if let Some(dir) = export {
        let inst = build_instance();
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, doc) in [
            ("instance.json", files::instance_json(&inst)),
            ("family.json", files::family_json(&inst.family())),
            ("t0.json", files::matrix_json(&inst.t0)),
        ] {
            let path = dir.join(name);
            files::write_json(&path, &doc).map_err(|e| io(&path, e))?;
        }
        return Ok(FEASIBLE);
    }
    let inst = match instance {
        Some(path) => files::read_instance(path).map_err(|e| Failure::new(INTERNAL, e.0))?,
        None => build_instance(),
    };
    let validation = inst.validate().err().map(|e| e.to_string());
    let report = verify_all(&inst, seed);
    if json {
        print!("{}", counterexample_json(&report, seed, validation.as_deref()).render());
    } else {
        if let Some(v) = &validation {
            println!("instance: {v}");
        }
        for (k, stage) in report.stages.iter().enumerate() {
            let values: Vec<String> = stage.values.iter().map(|(n, v)| format!("{n}={v}")).collect();
            println!(
                "[{}] {} {}: {} ({})",
                k + 1,
                if stage.passed { "PASS" } else { "FAIL" },
                stage.name,
                values.join(", "),
                stage.detail
            );
        }
        if let Some(cert) = &report.certificate {
            print_certificate(cert);
        }
    }
    Ok(if report.all_passed() { FEASIBLE } else { FAILED })
}

fn counterexample_json(report: &CounterexampleReport, seed: u64, validation: Option<&str>) -> Json {
    let stages = report
        .stages
        .iter()
        .map(|s| {
            Json::obj([
                ("name", Json::Str(s.name.into())),
                ("passed", Json::Bool(s.passed)),
                ("values", Json::obj(s.values.iter().map(|&(n, v)| (n, Json::Num(v))))),
                ("detail", Json::Str(s.detail.clone())),
            ])
        })
        .collect();
    Json::obj([
        ("seed", Json::Int(seed as i64)),
        ("instance_error", validation.map_or(Json::Null, |v| Json::Str(v.into()))),
        ("all_passed", Json::Bool(report.all_passed())),
        ("stages", Json::Arr(stages)),
        (
            "separating_form",
            report.separating_form.as_ref().map_or(Json::Null, files::matrix_json),
        ),
        (
            "certificate",
            report.certificate.as_ref().map_or(Json::Null, certificate_json),
        ),
    ])
}

pub fn gauge(family: &Path, t: &Path, tol: f64, seed: u64, json: bool) -> Result<u8> {
    let family = files::read_family(family)?;
    let t = files::read_matrix(t)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Failure::new(FAILED, "--tol must be positive"));
    }
    let config = ConvkConfig {
        tol,
        kstar: KStarConfig {
            seed,
            ..Default::default()
        },
        ..Default::default()
    };
    let delta = delta_gauge(&family, &t).map_err(library)?;
    let report = convk_gauge(&family, &t, &config).map_err(library)?;
    let membership = report.membership(tol);
    if json {
        let doc = Json::obj([
            ("delta", Json::Num(delta)),
            ("convk_lower", Json::Num(report.convk_lower)),
            ("convk_upper", Json::Num(report.convk_upper)),
            ("membership", Json::Str(membership.to_string())),
            ("iterations", Json::Int(report.iterations as i64)),
            ("converged", Json::Bool(report.converged)),
            ("atoms", Json::Int(report.atoms.len() as i64)),
        ]);
        print!("{}", doc.render());
    } else {
        println!("delta       {delta}");
        println!("convK       [{}, {}]", report.convk_lower, report.convk_upper);
        println!("membership  {membership}");
        println!(
            "rounds      {}{}",
            report.iterations,
            if report.converged { "" } else { " (not converged)" }
        );
    }
    Ok(FEASIBLE)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    if spec == "default" {
        return Ok(default_eps_grid());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Failure::new(FAILED, format!("--eps-grid: {s:?}: {e}")))
        })
        .collect()
}

fn verification_json(v: &VerificationReport) -> Json {
    let terms = v
        .terms
        .iter()
        .map(|t| {
            Json::obj([
                ("index", Json::Int(t.index as i64)),
                ("method", Json::Str(format!("{:?}", t.method).to_lowercase())),
                ("ratio", Json::Num(t.ratio)),
                ("slack", Json::Num(t.slack)),
                ("violation", Json::Bool(t.violation.is_some())),
            ])
        })
        .collect();
    Json::obj([
        ("sum_residual", Json::Num(v.sum_residual)),
        ("sum_ok", Json::Bool(v.sum_ok)),
        ("passed", Json::Bool(v.passed)),
        ("terms", Json::Arr(terms)),
    ])
}

fn write_decomposition(out: &Path, d: &Decomposition) -> Result<()> {
    for (i, (term, witness)) in d.terms.iter().zip(&d.witnesses).enumerate() {
        for (name, m) in [("term", term), ("witness", witness)] {
            let path = out.join(format!("{name}_{i}.json"));
            files::write_json(&path, &files::matrix_json(m)).map_err(|e| io(&path, e))?;
        }
    }
    Ok(())
}

pub fn decompose(
    family: &Path,
    u: &Path,
    tol: f64,
    max_iter: usize,
    eps_grid: Option<&str>,
    out: &Path,
    json: bool,
) -> Result<u8> {
    let family = files::read_family(family)?;
    let u = files::read_matrix(u)?;
    let grid = eps_grid.map(parse_grid).transpose()?;
    let config = DecomposeConfig {
        tol,
        max_iter,
        ..Default::default()
    };

    // (status, decomposition, family it refers to, certificate, extra report fields)
    let (status, decomposition, target, certificate, mut fields) = match &grid {
        None => {
            let outcome = match run_decompose(&family, &u, &config) {
                Err(e @ Error::IllConditioned { .. }) => {
                    return Err(Failure::new(FAILED, format!("{e}; retry with --eps-grid")))
                }
                r => r.map_err(library)?,
            };
            let status = outcome.status();
            let mut fields = Vec::new();
            let (d, cert) = match outcome {
                Outcome::Feasible(d) => (Some(d), None),
                Outcome::Infeasible(i) => {
                    fields.push(("final_distance", Json::Num(i.final_distance)));
                    fields.push(("iterations", Json::Int(i.iterations as i64)));
                    (None, i.certificate)
                }
            };
            (status, d, family.clone(), cert, fields)
        }
        Some(grid) => {
            let run = eps_decompose(&family, &u, grid, &config).map_err(library)?;
            let last = run.trajectory.last().and_then(|s| s.status);
            let status = if run.is_feasible() {
                Status::Feasible
            } else if last == Some(Status::CertifiedInfeasible) {
                Status::CertifiedInfeasible
            } else {
                Status::Undecided
            };
            let trajectory = run
                .trajectory
                .iter()
                .map(|s| {
                    Json::obj([
                        ("eps", Json::Num(s.eps)),
                        ("status", s.status.map_or(Json::Null, |st| Json::Str(st.to_string()))),
                        ("per_term_norms", Json::nums(&s.per_term_norms)),
                        ("term_norms", Json::nums(&s.term_norms)),
                    ])
                })
                .collect();
            let target = match run.eps {
                Some(eps) => regularized_family(&family, eps).map_err(library)?,
                None => family.clone(),
            };
            let fields = vec![("eps", Json::opt_num(run.eps)), ("trajectory", Json::Arr(trajectory))];
            (status, run.decomposition, target, None, fields)
        }
    };

    std::fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let mut report = vec![("status", Json::Str(status.to_string()))];
    if let Some(d) = &decomposition {
        let verification = verify_decomposition(&target, &u, &d.terms, tol).map_err(library)?;
        write_decomposition(out, d)?;
        report.push(("iterations", Json::Int(d.iterations as i64)));
        report.push(("residual", Json::Num(d.residual)));
        report.push(("per_term_norms", Json::nums(&d.per_term_norms)));
        report.push(("monotone_violations", Json::Int(d.monotone_violations() as i64)));
        report.push(("verification", verification_json(&verification)));
        if !json {
            println!("status      {status}");
            println!("iterations  {}", d.iterations);
            println!("residual    {:.3e}", d.residual);
            println!("witnesses   {:?}", d.per_term_norms);
            println!("verified    {}", verification.passed);
            println!("wrote {} terms and witnesses to {}", d.terms.len(), out.display());
        }
    } else if !json {
        println!("status      {status}");
    }
    if let Some(cert) = &certificate {
        let path = out.join("certificate.json");
        files::write_json(&path, &certificate_json(cert)).map_err(|e| io(&path, e))?;
        report.push(("certificate", certificate_json(cert)));
        if !json {
            print_certificate(cert);
        }
    }
    report.append(&mut fields);
    let report = Json::obj(report);
    let path = out.join("report.json");
    files::write_json(&path, &report).map_err(|e| io(&path, e))?;
    if json {
        print!("{}", report.render());
    }
    Ok(match status {
        Status::Feasible => FEASIBLE,
        Status::CertifiedInfeasible => CERTIFIED_INFEASIBLE,
        Status::Undecided => UNDECIDED,
    })
}

fn standard_tensor(dim_h: usize, dim_k: usize) -> Result<TensorRep> {
    let pairs = (0..dim_h.min(dim_k))
        .map(|i| {
            let e = |n: usize| (0..n).map(|k| c64(if k == i { 1.0 } else { 0.0 }, 0.0)).collect();
            (e(dim_h), e(dim_k))
        })
        .collect();
    TensorRep::new(dim_h, dim_k, pairs).map_err(library)
}

/// Ill-conditioning exits with its own code.
fn demo_error(e: Error) -> Failure {
    match e {
        Error::IllConditioned { .. } => Failure::new(ILL_CONDITIONED, e.to_string()),
        e => library(e),
    }
}

pub fn svd_demo(c: &Path, d: &Path, w: Option<&Path>, second: Option<&[std::path::PathBuf]>, json: bool) -> Result<u8> {
    let c = files::read_matrix(c)?;
    let d = files::read_matrix(d)?;
    let w = match w {
        Some(path) => files::read_tensor(path)?,
        None => standard_tensor(c.rows(), d.rows())?,
    };
    let w = canonical_rep(&w);
    let hat = hat_construction(&w, &c, &d).map_err(demo_error)?;
    let residuals = hat.residuals(&w, &c, &d).map_err(demo_error)?;
    let image = w.apply(&c, &d).map_err(demo_error)?;
    let (pi_w, pi_image) = (pi_norm(&w), pi_norm(&image));
    let compat = match second {
        Some([e, f]) => {
            let e = files::read_matrix(e)?;
            let f = files::read_matrix(f)?;
            Some(three_term_compat(&w, &c, &d, &e, &f).map_err(demo_error)?)
        }
        _ => None,
    };
    if json {
        let mut fields = vec![
            ("alpha", files::matrix_json(&hat.alpha)),
            ("beta", files::matrix_json(&hat.beta)),
            ("d", Json::nums(&hat.d)),
            (
                "residuals",
                Json::obj([
                    ("diagonalization", Json::Num(residuals.diagonalization)),
                    ("reconstruction", Json::Num(residuals.reconstruction)),
                    ("image_reconstruction", Json::Num(residuals.image_reconstruction)),
                    ("norm_totals", Json::Num(residuals.norm_totals)),
                    ("transfer", Json::Num(residuals.transfer)),
                ]),
            ),
            ("pi_norm_w", Json::Num(pi_w)),
            ("pi_norm_image", Json::Num(pi_image)),
            ("degenerate_gap", Json::opt_num(hat.degenerate_gap)),
            ("xi_hat", Json::Arr(hat.xi_hat.iter().map(vector_json).collect())),
            ("eta_hat", Json::Arr(hat.eta_hat.iter().map(vector_json).collect())),
        ];
        if let Some(r) = &compat {
            fields.push((
                "compatibility",
                Json::obj([
                    ("compatible", Json::Bool(r.compatible)),
                    ("max_diff", Json::Num(r.max_diff)),
                    ("e", Json::nums(&r.e)),
                    ("degenerate_gap", Json::opt_num(r.degenerate_gap)),
                ]),
            ));
        }
        print!("{}", Json::obj(fields).render());
    } else {
        println!("d           {:?}", hat.d);
        println!("alpha       {}", matrix_text(&hat.alpha));
        println!("beta        {}", matrix_text(&hat.beta));
        println!("‖w‖_π       {pi_w}");
        println!("‖(C⊗D)w‖_π  {pi_image}");
        println!(
            "residuals   diagonalization {:.2e}, reconstruction {:.2e}, image {:.2e}, norm totals {:.2e}, transfer {:.2e}",
            residuals.diagonalization,
            residuals.reconstruction,
            residuals.image_reconstruction,
            residuals.norm_totals,
            residuals.transfer
        );
        if let Some(gap) = hat.degenerate_gap {
            println!("warning     singular values nearly repeated (gap {gap:.2e}); unitaries not unique");
        }
        if let Some(r) = &compat {
            println!(
                "compatible  {} (max unitary difference {:.2e})",
                r.compatible, r.max_diff
            );
        }
    }
    Ok(FEASIBLE)
}

fn matrix_text(m: &CMatrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let row: Vec<String> = m.row(i).iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
            row.join(" ")
        })
        .collect();
    format!("[{}]", rows.join("; "))
}

struct Trial {
    passed: bool,
    status: String,
    detail: Json,
}

/// `U = Σ B_i† V_i A_i` with `‖V_i‖ = 0.99` over `(I, I)` and random
/// invertible pairs, so a decomposition exists.
fn feasible_trial(seed: u64, dim: usize, terms: usize) -> Result<Trial> {
    let mut rng = random::rng(seed);
    let mut pairs = vec![(CMatrix::identity(dim), CMatrix::identity(dim))];
    for _ in 1..terms {
        pairs.push((
            random::invertible(&mut rng, dim, 1e3),
            random::invertible(&mut rng, dim, 1e3),
        ));
    }
    let mut u = CMatrix::zeros(dim, dim);
    for (a, b) in &pairs {
        let v = random::contraction(&mut rng, dim, dim, 0.99);
        u = &u + &(&(&b.adjoint() * &v) * a);
    }
    let family = FormFamily::new(pairs).map_err(library)?;
    let outcome = run_decompose(&family, &u, &DecomposeConfig::default()).map_err(library)?;
    let status = outcome.status().to_string();
    Ok(match outcome.decomposition() {
        Some(d) => {
            let check = verify_decomposition(&family, &u, &d.terms, 1e-8).map_err(library)?;
            Trial {
                passed: check.passed,
                status,
                detail: Json::obj([
                    ("iterations", Json::Int(d.iterations as i64)),
                    ("residual", Json::Num(d.residual)),
                    (
                        "max_witness_norm",
                        Json::Num(d.per_term_norms.iter().copied().fold(0.0, f64::max)),
                    ),
                ]),
            }
        }
        None => Trial {
            passed: false,
            status,
            detail: Json::Null,
        },
    })
}

/// Perturbs `T0` of the three-term instance, separates it from `conv K` and
/// requires the resulting form to be certified non-decomposable. Perturbed
/// points that column generation does not place outside are skipped.
fn separated_trial(seed: u64) -> Result<Option<Trial>> {
    let inst = build_instance();
    let family = inst.family();
    let mut rng = random::rng(seed);
    let g = random::gaussian_matrix(&mut rng, 2, 2);
    let t = &inst.t0 + &g.scale_real(1e-3 * inst.t0.frobenius_norm() / g.frobenius_norm());
    let config = ConvkConfig {
        kstar: KStarConfig {
            seed,
            ..Default::default()
        },
        ..Default::default()
    };
    let (ustar, cert) = match find_separating_form(&family, &t, &config) {
        Ok(found) => found,
        Err(Error::PreconditionFailed(_)) => return Ok(None),
        Err(e) => return Err(library(e)),
    };
    let outcome = run_decompose(&family, &ustar, &DecomposeConfig::default()).map_err(library)?;
    Ok(Some(Trial {
        passed: outcome.status() == Status::CertifiedInfeasible,
        status: outcome.status().to_string(),
        detail: Json::obj([
            ("pairing", Json::Num(cert.dual_pair_value)),
            ("delta", Json::Num(cert.delta_value)),
            (
                "certificate_margin",
                Json::opt_num(outcome.certificate().map(|c| c.margin())),
            ),
        ]),
    }))
}

pub fn random_suite(trials: usize, dim: usize, seed: u64, terms: usize, separated: bool, json: bool) -> Result<u8> {
    if separated && terms != 3 {
        return Err(Failure::new(
            FAILED,
            "--separated uses the three-term family; pass --terms 3",
        ));
    }
    if !separated && (dim == 0 || terms == 0) {
        return Err(Failure::new(FAILED, "--dim and --terms must be positive"));
    }
    let (mut passed, mut failed, mut skipped) = (0usize, 0usize, 0usize);
    let mut results = Vec::with_capacity(trials);
    for k in 0..trials {
        let trial_seed = seed.wrapping_add(k as u64);
        let trial = if separated {
            separated_trial(trial_seed)?
        } else {
            Some(feasible_trial(trial_seed, dim, terms)?)
        };
        let (verdict, entry) = match trial {
            None => {
                skipped += 1;
                (
                    "skip",
                    Json::obj([
                        ("trial", Json::Int(k as i64)),
                        ("status", Json::Str("not separated".into())),
                    ]),
                )
            }
            Some(t) => {
                if t.passed {
                    passed += 1;
                } else {
                    failed += 1;
                }
                (
                    if t.passed { "pass" } else { "FAIL" },
                    Json::obj([
                        ("trial", Json::Int(k as i64)),
                        ("status", Json::Str(t.status)),
                        ("passed", Json::Bool(t.passed)),
                        ("detail", t.detail),
                    ]),
                )
            }
        };
        if !json {
            println!("trial {k:>4}  {verdict}");
        }
        results.push(entry);
    }
    if json {
        let doc = Json::obj([
            (
                "mode",
                Json::Str(if separated { "separated" } else { "feasible" }.into()),
            ),
            ("trials", Json::Int(trials as i64)),
            ("passed", Json::Int(passed as i64)),
            ("failed", Json::Int(failed as i64)),
            ("skipped", Json::Int(skipped as i64)),
            ("results", Json::Arr(results)),
        ]);
        print!("{}", doc.render());
    } else {
        println!("passed {passed}, failed {failed}, skipped {skipped} of {trials}");
    }
    Ok(if failed == 0 { FEASIBLE } else { FAILED })
}
