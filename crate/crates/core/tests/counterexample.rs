use formdecomp::counterexample::*;
use formdecomp::linalg::*;
use formdecomp::random;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn golden_numbers() {
    let inst = build_instance();
    let [n1, n2, n3] = inst.term_norms();
    assert!((n1 - 0.25).abs() < 1e-12);
    assert!((n2 - 0.375).abs() < 1e-12);
    assert!((n3 - 0.375).abs() < 1e-12);
    assert_eq!(inst.scale, 1.0 / 8.0);
}

#[test]
fn commutator_is_recomputed() {
    let inst = build_instance();
    let k = commutator(&inst.a, &inst.c);
    assert!(k.max_abs_diff(&CMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]])) < 1e-15);
    assert_eq!(common_eigenvector(&inst.a, &inst.c, 1e-9).unwrap(), None);
}

#[test]
fn all_stages_pass() {
    let inst = build_instance();
    let r = verify_all(&inst, 0);
    for s in &r.stages {
        assert!(s.passed, "{}: {:?} {}", s.name, s.values, s.detail);
    }
    assert_eq!(r.stages.len(), 5);
    let gap = r.stages[2].values.iter().find(|v| v.0 == "gap").unwrap().1;
    assert!(gap > 8e-3, "gap {gap}");
    let cert = r.certificate.unwrap();
    assert!(cert.certifies() && (cert.delta_value - 1.0).abs() < 1e-12);
    assert_eq!(verify_all(&inst, 0), verify_all(&build_instance(), 0));
}

#[test]
fn tampered_instance_fails_validation_and_a_stage() {
    let mut inst = build_instance();
    inst.a = inst.c.clone();
    assert!(inst.validate().is_err());
    // with A = C the displayed form is no longer I + A + C
    let r = verify_all(&inst, 0);
    assert!(!r.all_passed());
}

#[test]
fn non_tight_representation_skips_the_check() {
    // x₁ = (e₁+e₂)/√2, y₁ = (e₁−e₂)/√2, completed to I by the singular terms
    // of I − x₁y₁†
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x1 = vec![c64(h, 0.0), c64(h, 0.0)];
    let y1 = vec![c64(h, 0.0), c64(-h, 0.0)];
    let i = CMatrix::identity(2);
    let rest = &i - &CMatrix::outer(&x1, &y1);
    let r = svd(&rest).unwrap();
    let mut rep = vec![(x1, y1)];
    for k in 0..2 {
        rep.push((r.u.column(k).iter().map(|z| z * r.s[k]).collect(), r.v.column(k)));
    }
    let check = representation_check(&i, &rep).unwrap();
    assert_eq!(check.proportional, None);
    assert!(check.representation_cost > check.trace_norm + 0.1);
    assert!(check.consistent());
}

#[test]
fn repeated_eigenvalues_are_searched() {
    // M1 = I has a two-dimensional eigenspace; M2 picks a line in it
    let m2 = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
    let v = common_eigenvector(&CMatrix::identity(2), &m2, 1e-9).unwrap().unwrap();
    assert!((v[0].norm() - v[1].norm()).abs() < 1e-9);
    let m1 = CMatrix::diag_real(&[3.0, 3.0, 1.0]);
    let m2 = CMatrix::from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 5.0]]);
    let v = common_eigenvector(&m1, &m2, 1e-9).unwrap().unwrap();
    let r1 = m1.mul_vec(&v);
    let l1 = inner(&r1, &v);
    assert!(norm(&sub_vec(&r1, &scale_vec(&v, l1))) < 1e-9);
    assert!(common_eigenvector(&m1, &CMatrix::identity(2), 1e-9).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn tight_representations_are_proportional(seed in 0u64..1_000_000) {
        let mut rng = random::rng(seed);
        let n = 2 + (seed % 3) as usize;
        let rank = 1 + (seed / 3 % n as u64) as usize;
        let s = random::positive_semidefinite(&mut rng, n, rank);
        let eig = hermitian_eig(&s).unwrap();
        let mut rep = Vec::new();
        for (k, &l) in eig.values.iter().enumerate() {
            if l <= 1e-12 {
                continue;
            }
            // x y† = α x x† = λ v v† with a random α > 0 and phase
            let alpha = 0.2 + 3.0 * rng.random::<f64>();
            let phase = C64::from_polar(1.0, 6.0 * rng.random::<f64>());
            let x = scale_vec(&eig.vectors.column(k), phase * (l / alpha).sqrt());
            let y = scale_vec(&x, c64(alpha, 0.0));
            rep.push((x, y));
        }
        let check = representation_check(&s, &rep).unwrap();
        prop_assert!(check.equality);
        prop_assert_eq!(check.proportional, Some(true));
    }

    #[test]
    fn skewed_representations_are_strict(seed in 0u64..1_000_000) {
        // S = (S^{1/2} G)(S^{1/2} G^{-†})† with G far from unitary
        let mut rng = random::rng(seed);
        let n = 2 + (seed % 3) as usize;
        let s = random::positive_definite(&mut rng, n, 0.1, 2.0);
        let root = sqrt_psd(&s).unwrap();
        let g = random::invertible(&mut rng, n, 20.0);
        let left = &root * &g;
        let right = &root * &inverse(&g.adjoint()).unwrap();
        let rep: Vec<(CVector, CVector)> = (0..n).map(|k| (left.column(k), right.column(k))).collect();
        let skewed = rep.iter().any(|(x, y)| {
            let a = inner(y, x) / inner(x, x).re;
            norm(&sub_vec(y, &scale_vec(x, a))) > 1e-6 * norm(y) || a.re <= 0.0
        });
        prop_assume!(skewed);
        let check = representation_check(&s, &rep).unwrap();
        prop_assert!(!check.equality);
        prop_assert!(check.representation_cost - check.trace_norm > 1e-9 * check.trace_norm);
        prop_assert!(check.consistent());
    }
}
