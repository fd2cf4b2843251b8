//! Regression fixtures with oracle provenance.
//!
//! Each group is recomputed from scratch by [`generate`] and stored as one
//! JSON file. Records carry the bracket produced by the library, an oracle
//! value computed independently, and a transcript of how both were
//! obtained; the transcript is hashed so that edits to a fixture file are
//! detectable.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::linalg::Matrix;
use crate::oracle::{brute_rank_approx, lp_distance, Certificate, OracleResult, RankBudget};
use crate::report::Table;
use crate::schemes::{ModelOperator, Sequence};
use crate::snumbers::{
    approximation_number, kolmogorov_number, surrogate, symmetrized_number, SNumberValue, SolverSettings, Witness,
};
use crate::spaces::{adjoint, half_extreme_points, LinearOperator, NormExp, Vector};
use crate::{seeded_rng, Error, Result};

/// Fixture groups, one file each.
pub const GROUPS: [&str; 4] = ["gamma", "injection", "oracle", "tau"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRecord {
    pub matrix: Matrix,
    pub domain: NormExp,
    pub codomain: NormExp,
}

impl OperatorRecord {
    pub fn of(t: &LinearOperator) -> Self {
        Self { matrix: t.matrix().clone(), domain: t.domain().p(), codomain: t.codomain().p() }
    }

    pub fn operator(&self) -> Result<LinearOperator> {
        LinearOperator::between(self.matrix.clone(), self.domain, self.codomain)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureRecord {
    pub id: String,
    pub operator: OperatorRecord,
    pub n: usize,
    pub kind: String,
    pub lower: f64,
    pub upper: f64,
    /// Oracle value for the same quantity (or an upper bound for it).
    pub value: f64,
    pub transcript: Value,
    pub transcript_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureFile {
    pub group: String,
    pub records: Vec<FixtureRecord>,
}

impl FixtureFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fixtures serialise");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn record(&self, id: &str) -> Option<&FixtureRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Every stored hash matches its transcript.
    pub fn hashes_match(&self) -> bool {
        self.records.iter().all(|r| transcript_hash(&r.transcript) == r.transcript_hash)
    }
}

/// Hex SHA-256 of the compact JSON of `transcript` (object keys sorted).
pub fn transcript_hash(transcript: &Value) -> String {
    hex::encode(Sha256::digest(transcript.to_string().as_bytes()))
}

/// One changed field of one fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureDelta {
    pub id: String,
    pub field: String,
    pub old: String,
    pub new: String,
}

/// Field-by-field differences; added and removed records are reported with
/// the field `record`.
pub fn diff(old: &FixtureFile, new: &FixtureFile) -> Vec<FixtureDelta> {
    let flat = |f: &FixtureFile| -> BTreeMap<String, BTreeMap<String, String>> {
        f.records
            .iter()
            .map(|r| {
                let Value::Object(map) = serde_json::to_value(r).expect("records serialise") else { unreachable!() };
                (r.id.clone(), map.into_iter().map(|(k, v)| (k, v.to_string())).collect())
            })
            .collect()
    };
    let (a, b) = (flat(old), flat(new));
    let mut out = Vec::new();
    for (id, fields) in &a {
        match b.get(id) {
            None => {
                out.push(FixtureDelta { id: id.clone(), field: "record".into(), old: "present".into(), new: "absent".into() })
            }
            Some(other) => {
                for (k, v) in fields {
                    let w = other.get(k).cloned().unwrap_or_default();
                    if *v != w {
                        out.push(FixtureDelta { id: id.clone(), field: k.clone(), old: v.clone(), new: w });
                    }
                }
            }
        }
    }
    for id in b.keys().filter(|id| !a.contains_key(*id)) {
        out.push(FixtureDelta { id: id.clone(), field: "record".into(), old: "absent".into(), new: "present".into() });
    }
    out
}

fn record(
    id: String,
    t: &LinearOperator,
    n: usize,
    kind: &str,
    v: &SNumberValue,
    value: f64,
    transcript: Value,
) -> FixtureRecord {
    let transcript_hash = transcript_hash(&transcript);
    FixtureRecord {
        id,
        operator: OperatorRecord::of(t),
        n,
        kind: kind.to_string(),
        lower: v.lower,
        upper: v.upper,
        value,
        transcript,
        transcript_hash,
    }
}

fn oracle_transcript(r: &OracleResult) -> Value {
    match &r.certificate {
        Certificate::Approximant { transcript, .. } => json!({
            "oracle": "brute_rank_approx",
            "seed": transcript.seed,
            "restarts": transcript.restarts,
            "max_iters": transcript.max_iters,
            "winning_start": transcript.winning_start,
            "iterations": transcript.iterations,
            "certified": r.certified,
        }),
        other => json!({ "oracle": "other", "certificate": other, "certified": r.certified }),
    }
}

fn solver_transcript(v: &SNumberValue, s: &SolverSettings) -> Value {
    json!({
        "method": v.method.as_str(),
        "nodes": v.nodes,
        "consistent": v.consistent,
        "seed": s.seed,
        "restarts": s.restarts,
        "refine_budget": s.refine_budget,
    })
}

fn merge(a: Value, b: Value) -> Value {
    let (Value::Object(mut x), Value::Object(y)) = (a, b) else { unreachable!("objects") };
    x.extend(y);
    Value::Object(x)
}

fn injection(s: &SolverSettings) -> Result<Vec<FixtureRecord>> {
    let budget = RankBudget { seed: s.seed, ..RankBudget::default() };
    let mut out = Vec::new();
    for d in 2..=6 {
        let t = LinearOperator::between(Matrix::identity(d), NormExp::One, NormExp::Inf)?;
        let a = approximation_number(&t, 2, s)?;
        let b = approximation_number(&adjoint(&t), 2, s)?;
        let oracle = brute_rank_approx(&t, 2, &budget)?;
        let transcript = merge(
            merge(solver_transcript(&a, s), oracle_transcript(&oracle)),
            json!({ "adjoint_lower": b.lower, "adjoint_upper": b.upper, "adjoint_method": b.method.as_str() }),
        );
        out.push(record(format!("injection/d{d}"), &t, 2, "a", &a, oracle.value, transcript));
    }
    Ok(out)
}

fn oracle_group(s: &SolverSettings) -> Result<Vec<FixtureRecord>> {
    let budget = RankBudget { seed: s.seed, ..RankBudget::default() };
    let cases = [
        ("oracle/identity2_l1_linf", LinearOperator::between(Matrix::identity(2), NormExp::One, NormExp::Inf)?),
        ("oracle/diag321_l2", LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::Two, NormExp::Two)?),
    ];
    let mut out = Vec::new();
    for (id, t) in cases {
        let a = approximation_number(&t, 2, s)?;
        let oracle = brute_rank_approx(&t, 2, &budget)?;
        let transcript = merge(solver_transcript(&a, s), oracle_transcript(&oracle));
        out.push(record(id.to_string(), &t, 2, "a", &a, oracle.value, transcript));
    }
    Ok(out)
}

/// The seeded `3 × 3` operator `ℓ∞³ → ℓ₁³` of the τ fixtures.
pub fn tau_random_operator(seed: u64) -> LinearOperator {
    let mut rng = seeded_rng(seed, 0x7461_7500);
    let m = Matrix::from_vec(3, 3, (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("shape");
    LinearOperator::between(m, NormExp::Inf, NormExp::One).expect("dimensions")
}

fn tau(s: &SolverSettings) -> Result<Vec<FixtureRecord>> {
    let budget = RankBudget { seed: s.seed, ..RankBudget::default() };
    let diag = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::One, NormExp::Inf)?;
    let mut cases: Vec<(String, LinearOperator, usize)> = Vec::new();
    cases.push(("tau/diag321/T/n2".into(), diag.clone(), 2));
    cases.push(("tau/diag321/adjoint/n2".into(), adjoint(&diag), 2));
    let r = tau_random_operator(s.seed);
    for n in 1..=3 {
        cases.push((format!("tau/random/T/n{n}"), r.clone(), n));
        cases.push((format!("tau/random/adjoint/n{n}"), adjoint(&r), n));
    }
    let mut out = Vec::new();
    for (id, t, n) in cases {
        let v = symmetrized_number(&t, n, s)?;
        let sur = surrogate(&t, s)?;
        let oracle = brute_rank_approx(&sur.operator, n, &budget)?;
        let transcript = merge(
            merge(solver_transcript(&v, s), oracle_transcript(&oracle)),
            json!({ "spread": v.spread.unwrap_or(0.0), "surrogate_shape": sur.operator.matrix().shape() }),
        );
        out.push(record(id, &t, n, "tau", &v, oracle.value, transcript));
    }
    Ok(out)
}

/// Largest distance from the images of the cube vertices to the witness
/// subspace, each distance solved as its own linear program.
fn vertex_width(t: &LinearOperator, frame: &Matrix, s: &SolverSettings) -> Result<f64> {
    let y = t.codomain();
    let basis: Vec<Vector> = (0..frame.cols()).map(|c| Vector::new(y, frame.column(c))).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for e in half_extreme_points(t.domain(), s.vertex_cap)? {
        let p = Vector::new(y, t.apply(&e))?;
        let d = if basis.is_empty() { y.norm(p.coords()) } else { lp_distance(&p, &basis, y.p())?.value };
        worst = worst.max(d);
    }
    Ok(worst)
}

fn gamma(s: &SolverSettings) -> Result<Vec<FixtureRecord>> {
    let model = ModelOperator::weighted_shift(Sequence::Constant { value: 1.0 });
    let mut out = Vec::new();
    for d in 2..=6 {
        let t = model.truncate(d)?;
        for n in 1..=3usize.min(d) {
            let v = kolmogorov_number(&t, n, s)?;
            let Witness::Subspace { frame } = &v.witness else {
                return Err(Error::InvalidSettings("Kolmogorov witness is not a subspace".into()));
            };
            let value = vertex_width(&t, frame, s)?;
            let transcript = merge(solver_transcript(&v, s), json!({ "oracle": "lp_distance_over_vertices" }));
            out.push(record(format!("gamma/shift/d{d}/n{n}"), &t, n, "d", &v, value, transcript));
        }
    }
    Ok(out)
}

/// Bitwise comparison of an injection study table against the injection
/// fixtures. Returns one message per mismatch.
pub fn compare_injection_table(file: &FixtureFile, table: &Table) -> Vec<String> {
    let mut out = Vec::new();
    if table.len() != file.records.len() {
        out.push(format!("{} rows against {} records", table.len(), file.records.len()));
    }
    for row in 0..table.len() {
        let d = table.get(row, "d").and_then(|c| c.as_f64()).unwrap_or(f64::NAN);
        let id = format!("injection/d{d}");
        let Some(r) = file.record(&id) else {
            out.push(format!("{id}: no fixture"));
            continue;
        };
        let stored = |k: &str| r.transcript.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN);
        let pairs = [
            ("lower", r.lower),
            ("upper", r.upper),
            ("oracle_upper", r.value),
            ("adjoint_lower", stored("adjoint_lower")),
            ("adjoint_upper", stored("adjoint_upper")),
        ];
        for (col, want) in pairs {
            let got = table.float(row, col).unwrap_or(f64::NAN);
            if got.to_bits() != want.to_bits() {
                out.push(format!("{id} {col}: fixture {want:e}, computed {got:e}"));
            }
        }
    }
    out
}

/// Recomputes one fixture group under the default settings with `seed`.
pub fn generate(group: &str, seed: u64) -> Result<FixtureFile> {
    let s = SolverSettings { seed, ..SolverSettings::default() };
    let records = match group {
        "injection" => injection(&s)?,
        "oracle" => oracle_group(&s)?,
        "tau" => tau(&s)?,
        "gamma" => gamma(&s)?,
        other => return Err(Error::InvalidSettings(format!("unknown fixture group {other:?}"))),
    };
    Ok(FixtureFile { group: group.to_string(), records })
}
