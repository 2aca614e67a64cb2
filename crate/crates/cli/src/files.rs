//! On-disk formats: matrices, families, tensors and counterexample
//! instances, all JSON with complex numbers written as `[re, im]`.

use std::fs;
use std::path::Path;

use formdecomp::counterexample::CounterexampleInstance;
use formdecomp::gauges::FormFamily;
use formdecomp::linalg::{c64, trace_norm, CMatrix, CVector};
use formdecomp::tensor::TensorRep;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::json::Json;

/// A failure reading an input file, prefixed by `path:line:column` when
/// the location is known.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Result<T> = std::result::Result<T, InputError>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairFile {
    #[serde(rename = "A")]
    a: MatrixFile,
    #[serde(rename = "B")]
    b: MatrixFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    pairs: Vec<PairFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorPairFile {
    x: Vec<[f64; 2]>,
    y: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorFile {
    dim_h: usize,
    dim_k: usize,
    pairs: Vec<TensorPairFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    #[serde(rename = "A")]
    a: MatrixFile,
    #[serde(rename = "C")]
    c: MatrixFile,
    #[serde(rename = "U")]
    u: MatrixFile,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        let msg = e.to_string();
        // serde_json appends " at line L column C"; move it to the front
        let msg = msg.split(" at line ").next().unwrap_or(&msg);
        InputError(format!("{}:{}:{}: {msg}", path.display(), e.line(), e.column()))
    })
}

fn to_vector(entries: &[[f64; 2]]) -> CVector {
    entries.iter().map(|&[re, im]| c64(re, im)).collect()
}

impl MatrixFile {
    fn into_matrix(self, what: &str) -> std::result::Result<CMatrix, String> {
        if self.entries.len() != self.rows * self.cols {
            return Err(format!(
                "{what}: {} entries for a {}x{} matrix",
                self.entries.len(),
                self.rows,
                self.cols
            ));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(format!("{what}: empty matrix"));
        }
        CMatrix::from_vec(self.rows, self.cols, to_vector(&self.entries)).map_err(|e| format!("{what}: {e}"))
    }
}

fn located(path: &Path, msg: String) -> InputError {
    InputError(format!("{}: {msg}", path.display()))
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let file: MatrixFile = read_json(path)?;
    file.into_matrix("matrix").map_err(|m| located(path, m))
}

pub fn read_family(path: &Path) -> Result<FormFamily> {
    let file: FamilyFile = read_json(path)?;
    if file.pairs.is_empty() {
        return Err(located(path, "family has no pairs".into()));
    }
    let pairs = file
        .pairs
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            Ok((
                p.a.into_matrix(&format!("pair {i} A"))?,
                p.b.into_matrix(&format!("pair {i} B"))?,
            ))
        })
        .collect::<std::result::Result<Vec<_>, String>>()
        .map_err(|m| located(path, m))?;
    FormFamily::new(pairs).map_err(|e| located(path, e.to_string()))
}

pub fn read_tensor(path: &Path) -> Result<TensorRep> {
    let file: TensorFile = read_json(path)?;
    let pairs = file.pairs.iter().map(|p| (to_vector(&p.x), to_vector(&p.y))).collect();
    TensorRep::new(file.dim_h, file.dim_k, pairs).map_err(|e| located(path, e.to_string()))
}

/// Reads `A`, `C` and `U`; the scale and `T0` are derived from `A` and `C`
/// so that a tampered file is judged by the stages, not rejected here.
pub fn read_instance(path: &Path) -> Result<CounterexampleInstance> {
    let file: InstanceFile = read_json(path)?;
    let a = file.a.into_matrix("A").map_err(|m| located(path, m))?;
    let c = file.c.into_matrix("C").map_err(|m| located(path, m))?;
    let u = file.u.into_matrix("U").map_err(|m| located(path, m))?;
    for (name, m) in [("A", &a), ("C", &c), ("U", &u)] {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(located(path, format!("{name} must be 2x2")));
        }
    }
    let i = CMatrix::identity(2);
    let scale = 1.0 / (trace_norm(&i) + trace_norm(&a) + trace_norm(&c));
    Ok(CounterexampleInstance {
        t0: i.scale_real(scale),
        a,
        c,
        u,
        scale,
    })
}

pub fn matrix_json(m: &CMatrix) -> Json {
    Json::obj([
        ("rows", Json::Int(m.rows() as i64)),
        ("cols", Json::Int(m.cols() as i64)),
        (
            "entries",
            Json::Arr(m.entries().iter().map(|z| Json::nums(&[z.re, z.im])).collect()),
        ),
    ])
}

pub fn family_json(f: &FormFamily) -> Json {
    Json::obj([(
        "pairs",
        Json::Arr(
            f.pairs()
                .iter()
                .map(|(a, b)| Json::obj([("A", matrix_json(a)), ("B", matrix_json(b))]))
                .collect(),
        ),
    )])
}

pub fn instance_json(inst: &CounterexampleInstance) -> Json {
    Json::obj([
        ("A", matrix_json(&inst.a)),
        ("C", matrix_json(&inst.c)),
        ("U", matrix_json(&inst.u)),
    ])
}

pub fn write_json(path: &Path, doc: &Json) -> std::io::Result<()> {
    fs::write(path, doc.render())
}
