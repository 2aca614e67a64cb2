//! End-to-end runs of the `formdecomp` binary: exit codes, file formats
//! and reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formdecomp"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Exports the built-in instance and extracts `U` into its own file.
fn exported() -> (TempDir, PathBuf, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["counterexample", "--export", p(dir.path())])), 0);
    let inst: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("instance.json")).unwrap()).unwrap();
    let u = dir.path().join("u.json");
    fs::write(&u, inst["U"].to_string()).unwrap();
    let (family, t0) = (dir.path().join("family.json"), dir.path().join("t0.json"));
    (dir, family, t0, u)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn identity_family(dir: &Path) -> PathBuf {
    let i = r#"{"rows": 2, "cols": 2, "entries": [[1, 0], [0, 0], [0, 0], [1, 0]]}"#;
    write(
        dir,
        "family_i.json",
        &format!(r#"{{"pairs": [{{"A": {i}, "B": {i}}}]}}"#),
    )
}

/// `(re, im)` of every entry, read back from a matrix file.
fn entries(path: &Path) -> Vec<(f64, f64)> {
    let m: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    m["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| (z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
        .collect()
}

#[test]
fn counterexample_reports_the_golden_numbers() {
    let out = run(&["counterexample"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.matches("PASS").count(), 5, "{text}");
    assert!(text.contains("N1=0.25"));

    let report = json(&run(&["counterexample", "--json"]));
    assert_eq!(report["all_passed"], true);
    let values = &report["stages"][0]["values"];
    for (name, want) in [("N1", 0.25), ("N2", 0.375), ("N3", 0.375), ("delta", 1.0)] {
        assert!((values[name].as_f64().unwrap() - want).abs() <= 1e-12, "{name}");
    }
    assert!(report["stages"][2]["values"]["convk_lower"].as_f64().unwrap() > 1.008);
    assert_eq!(report["certificate"]["certifies"], true);
}

#[test]
fn json_output_is_deterministic() {
    let a = run(&["counterexample", "--json", "--seed", "3"]);
    let b = run(&["counterexample", "--json", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let a = run(&["random-suite", "--json", "--trials", "5", "--seed", "11"]);
    let b = run(&["random-suite", "--json", "--trials", "5", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tampered_instance_fails() {
    let (dir, ..) = exported();
    let mut inst: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("instance.json")).unwrap()).unwrap();
    inst["A"] = inst["C"].clone();
    let path = write(dir.path(), "tampered.json", &inst.to_string());
    let out = run(&["counterexample", "--json", "--instance", p(&path)]);
    assert_ne!(code(&out), 0);
    let report = json(&out);
    assert_eq!(report["all_passed"], false);
    assert!(report["instance_error"].as_str().unwrap().contains("commute"));

    let garbage = write(dir.path(), "garbage.json", "{");
    assert_eq!(code(&run(&["counterexample", "--instance", p(&garbage)])), 2);
}

#[test]
fn gauge_of_the_normalized_identity() {
    let (dir, family, t0, _) = exported();
    let report = json(&run(&["gauge", p(&family), p(&t0), "--json"]));
    assert!((report["delta"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert_eq!(report["membership"], "outside");

    let zero = write(
        dir.path(),
        "zero.json",
        r#"{"rows": 2, "cols": 2, "entries": [[0,0],[0,0],[0,0],[0,0]]}"#,
    );
    let report = json(&run(&["gauge", p(&family), p(&zero), "--json"]));
    assert_eq!(report["delta"].as_f64(), Some(0.0));
    assert_eq!(report["convk_lower"].as_f64(), Some(0.0));
    assert_eq!(report["convk_upper"].as_f64(), Some(0.0));
    assert_eq!(report["membership"], "inside");
}

#[test]
fn gauge_rejects_bad_input() {
    let (dir, family, ..) = exported();
    let small = write(
        dir.path(),
        "small.json",
        r#"{"rows": 1, "cols": 1, "entries": [[1, 0]]}"#,
    );
    let out = run(&["gauge", p(&family), p(&small)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("dimension mismatch"), "{}", stderr(&out));

    let broken = write(
        dir.path(),
        "broken.json",
        "{\n  \"rows\": 1,\n  \"cols\": 1,\n  \"entries\": [[1, ]]\n}\n",
    );
    let out = run(&["gauge", p(&family), p(&broken)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("broken.json:4:"), "{}", stderr(&out));
}

#[test]
fn decompose_a_contraction_over_one_pair() {
    let dir = tempfile::tempdir().unwrap();
    let family = identity_family(dir.path());
    let u = write(
        dir.path(),
        "u.json",
        r#"{"rows": 2, "cols": 2, "entries": [[0.3, 0.1], [-0.2, 0], [0.1, 0.4], [0.5, -0.1]]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["decompose", p(&family), p(&u), "--out", p(&out_dir), "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["status"], "feasible");
    assert_eq!(report["verification"]["passed"], true);
    assert!(out_dir.join("term_0.json").exists());
    assert!(!out_dir.join("term_1.json").exists());
    assert_eq!(entries(&out_dir.join("term_0.json")), entries(&u));
}

#[test]
fn written_matrices_round_trip() {
    let (dir, family, _, u) = exported();
    let out_dir = dir.path().join("out");
    assert_eq!(code(&run(&["decompose", p(&family), p(&u), "--out", p(&out_dir)])), 0);
    let mut sum = [(0.0, 0.0); 4];
    for i in 0..3 {
        let path = out_dir.join(format!("term_{i}.json"));
        let text = fs::read_to_string(&path).unwrap();
        let values = entries(&path);
        // re-emitting the parsed values with 17 digits reproduces the file
        for (re, im) in &values {
            assert!(text.contains(&format!("[{re:.16e}, {im:.16e}]")));
        }
        for (s, (re, im)) in sum.iter_mut().zip(values) {
            s.0 += re;
            s.1 += im;
        }
    }
    for (s, (re, im)) in sum.iter().zip(entries(&u)) {
        assert!((s.0 - re).abs() < 1e-9 && (s.1 - im).abs() < 1e-9);
    }
}

#[test]
fn separated_form_exits_with_a_certificate() {
    let (dir, family, ..) = exported();
    let report = json(&run(&["counterexample", "--json"]));
    let ustar = write(dir.path(), "ustar.json", &report["separating_form"].to_string());
    let out_dir = dir.path().join("out");
    let out = run(&["decompose", p(&family), p(&ustar), "--out", p(&out_dir)]);
    assert_eq!(code(&out), 3, "{}", stdout(&out));
    let cert: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["certifies"], true);
    assert!(cert["dual_pair_value"].as_f64().unwrap() > cert["delta_value"].as_f64().unwrap());
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "certified-infeasible");
    assert!(!out_dir.join("term_0.json").exists());
}

#[test]
fn undecided_and_eps_grid() {
    let (dir, family, _, u) = exported();
    let out = run(&[
        "decompose",
        p(&family),
        p(&u),
        "--max-iter",
        "5",
        "--out",
        p(&dir.path().join("a")),
    ]);
    assert_eq!(code(&out), 4);
    let out = run(&[
        "decompose",
        p(&family),
        p(&u),
        "--eps-grid",
        "0.25,0.0625",
        "--json",
        "--out",
        p(&dir.path().join("b")),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["trajectory"].as_array().unwrap().len(), 2);
    assert_eq!(report["eps"].as_f64(), Some(0.0625));
    let out = run(&[
        "decompose",
        p(&family),
        p(&u),
        "--eps-grid",
        "0.1,0.5",
        "--out",
        p(&dir.path().join("c")),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn svd_demo_examples() {
    let dir = tempfile::tempdir().unwrap();
    let i = write(
        dir.path(),
        "i.json",
        r#"{"rows": 2, "cols": 2, "entries": [[1, 0], [0, 0], [0, 0], [1, 0]]}"#,
    );
    let c = write(
        dir.path(),
        "c.json",
        r#"{"rows": 2, "cols": 2, "entries": [[2, 0], [1, 0], [1, 0], [1, 0]]}"#,
    );
    let s = write(
        dir.path(),
        "s.json",
        r#"{"rows": 2, "cols": 2, "entries": [[1, 0], [1, 0], [1, 0], [1, 0]]}"#,
    );

    let report = json(&run(&[
        "svd-demo",
        p(&i),
        p(&i),
        "--second-pair",
        p(&i),
        p(&i),
        "--json",
    ]));
    assert_eq!(report["d"], serde_json::json!([1.0, 1.0]));
    assert_eq!(report["compatibility"]["compatible"], true);

    let report = json(&run(&[
        "svd-demo",
        p(&c),
        p(&i),
        "--second-pair",
        p(&c),
        p(&i),
        "--json",
    ]));
    for (name, r) in report["residuals"].as_object().unwrap() {
        assert!(r.as_f64().unwrap() <= 1e-10, "{name}");
    }
    assert_eq!(report["compatibility"]["compatible"], true);

    let w = write(
        dir.path(),
        "w.json",
        r#"{"dim_h": 2, "dim_k": 2, "pairs": [{"x": [[1, 0], [0, 1]], "y": [[0.5, 0], [2, 0]]}]}"#,
    );
    assert_eq!(code(&run(&["svd-demo", p(&c), p(&i), p(&w)])), 0);

    let out = run(&["svd-demo", p(&s), p(&i)]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("ill-conditioned"));
}

#[test]
fn random_suite_examples() {
    let out = run(&["random-suite", "--trials", "0"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("passed 0, failed 0"));

    let report = json(&run(&[
        "random-suite",
        "--terms",
        "2",
        "--trials",
        "50",
        "--dim",
        "3",
        "--json",
    ]));
    assert_eq!(report["passed"].as_u64(), Some(50));

    let out = run(&["random-suite", "--terms", "3", "--separated", "--trials", "3", "--json"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_eq!(report["failed"].as_u64(), Some(0));
    assert_eq!(
        report["passed"].as_u64().unwrap() + report["skipped"].as_u64().unwrap(),
        3
    );

    assert_eq!(code(&run(&["random-suite", "--separated", "--terms", "2"])), 1);
}
