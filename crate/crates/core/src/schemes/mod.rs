//! Generalized approximation schemes and Q-compactness tooling.
//!
//! A scheme is a nested family `Q₀ = {0} ⊆ Q₁ ⊆ …` of sets of subsets of
//! `ℝ^d`. Members are represented as linear spans of generator columns,
//! which covers every scheme built in here: arbitrary subspaces of bounded
//! dimension, coordinate subspaces of bounded support, and the truncated
//! `ℓₙ` ladder in which every member is the whole space. Indices in this
//! module are 0-based, so `Q₀ = {0}` and `δ₀(T; Q) = ‖T‖`.

mod diagnostics;
mod model;
mod shift;
mod width;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::oracle::svd;
use crate::report::Table;
use crate::spaces::NormExp;
use crate::{seeded_rng, Error, Result};

pub use diagnostics::{gamma_estimate, q_compact_diagnostic, tau_duality_check, QDiagnostic, Verdict};
pub use model::{ModelFamily, ModelOperator, Sequence, Tail, Weights};
pub use shift::{shift_decompose, shift_decompose_with, ShiftDecomposition};
pub use width::{generalized_kolmogorov, scheme_approximation_number, GeneralizedWidth, WidthInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    DimSubspaces,
    SparseSupport,
    Custom,
}

/// The span of the generator columns; `d × 0` is the trivial subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Member {
    generators: Matrix,
}

impl Member {
    pub fn zero(dim: usize) -> Self {
        Self { generators: Matrix::zeros(dim, 0) }
    }

    pub fn span(generators: Matrix) -> Self {
        Self { generators }
    }

    pub fn whole(dim: usize) -> Self {
        Self { generators: Matrix::identity(dim) }
    }

    pub fn coordinates(dim: usize, support: &[usize]) -> Self {
        let mut g = Matrix::zeros(dim, support.len());
        for (c, &i) in support.iter().enumerate() {
            g[(i, c)] = 1.0;
        }
        Self { generators: g }
    }

    pub fn generators(&self) -> &Matrix {
        &self.generators
    }

    pub fn ambient(&self) -> usize {
        self.generators.rows()
    }

    pub fn rank(&self) -> usize {
        self.basis().cols()
    }

    /// Coordinates on which some generator is non-zero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.ambient()).filter(|&i| self.generators.row(i).iter().any(|&x| x != 0.0)).collect()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { generators: self.generators.scale(lambda) }
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        Ok(Self { generators: self.generators.hcat(&other.generators)? })
    }

    /// Orthonormal basis of the span (left singular vectors above `1e-10`
    /// relative to the largest).
    pub fn basis(&self) -> Matrix {
        let (d, k) = self.generators.shape();
        if k == 0 || self.generators.is_zero() {
            return Matrix::zeros(d, 0);
        }
        let f = svd(&self.generators).expect("SVD of a generator matrix");
        let tol = f.values[0] * 1e-10;
        let r = f.values.iter().filter(|&&s| s > tol).count();
        f.u.select_cols(&(0..r).collect::<Vec<_>>())
    }

    /// Distance from `point` to the span in the `ℓ_p` norm.
    pub fn distance(&self, point: &[f64], p: NormExp) -> Result<f64> {
        let b = self.basis();
        if b.cols() == 0 {
            return Ok(p.norm(point));
        }
        Ok(crate::oracle::best_approximation(point, &b, p)?.0)
    }
}

type MemberFn = dyn Fn(usize, &Member) -> bool + Send + Sync;
type DistanceFn = dyn Fn(usize, &[f64], NormExp) -> f64 + Send + Sync;
type SampleFn = dyn Fn(usize, usize, &mut ChaCha8Rng) -> Member + Send + Sync;

#[derive(Clone)]
enum Rule {
    Dim,
    Sparse,
    Ladder,
    ExactSupport,
    Custom { member: Arc<MemberFn>, distance: Arc<DistanceFn>, sample: Arc<SampleFn> },
}

#[derive(Clone)]
pub struct ApproximationScheme {
    name: String,
    kind: SchemeKind,
    rule: Rule,
}

impl fmt::Debug for ApproximationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApproximationScheme").field("name", &self.name).field("kind", &self.kind).finish()
    }
}

fn random_on(dim: usize, support: &[usize], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for &i in support {
        v[i] = rng.gen_range(-2.0..2.0);
    }
    v
}

fn random_subset(dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dim).collect();
    for i in 0..k.min(dim) {
        let j = rng.gen_range(i..dim);
        idx.swap(i, j);
    }
    let mut s = idx[..k.min(dim)].to_vec();
    s.sort_unstable();
    s
}

/// Generators for a random member: `cols` random vectors on `support`,
/// with a redundant combination appended half of the time.
fn random_span(dim: usize, support: &[usize], cols: usize, rng: &mut ChaCha8Rng) -> Member {
    let mut columns: Vec<Vec<f64>> = (0..cols).map(|_| random_on(dim, support, rng)).collect();
    if cols >= 2 && rng.gen_bool(0.5) {
        let a = rng.gen_range(-1.0..1.0);
        let extra: Vec<f64> = columns[0].iter().zip(&columns[1]).map(|(x, y)| x + a * y).collect();
        columns.push(extra);
    }
    if columns.is_empty() {
        return Member::zero(dim);
    }
    Member::span(Matrix::from_columns(&columns).expect("equal lengths"))
}

fn best_n_term(point: &[f64], n: usize, p: NormExp) -> f64 {
    let mut mags: Vec<f64> = point.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    p.norm(&mags[n.min(mags.len())..])
}

impl ApproximationScheme {
    /// `Qₙ` = subspaces of dimension at most `n`.
    pub fn dim_subspaces() -> Self {
        Self { name: "dim_subspaces".into(), kind: SchemeKind::DimSubspaces, rule: Rule::Dim }
    }

    /// `Qₙ` = subspaces of coordinate subspaces spanned by at most `n` unit
    /// vectors, so the union of `Qₙ` is the set of `n`-sparse vectors.
    pub fn sparse_support() -> Self {
        Self { name: "sparse_support".into(), kind: SchemeKind::SparseSupport, rule: Rule::Sparse }
    }

    /// Truncation of `Aₙ = ℓₙ(ℕ)` on `c₀`: finitely supported vectors lie
    /// in every `ℓₙ`, so `Qₙ` is the whole space for `n ≥ 1`.
    pub fn lp_ladder() -> Self {
        Self { name: "lp_ladder".into(), kind: SchemeKind::Custom, rule: Rule::Ladder }
    }

    /// Members with support of exactly `n` coordinates: not nested, so the
    /// scheme violates GA1.
    pub fn broken_exact_support() -> Self {
        Self { name: "broken_exact_support".into(), kind: SchemeKind::Custom, rule: Rule::ExactSupport }
    }

    pub fn custom(
        name: impl Into<String>,
        member: impl Fn(usize, &Member) -> bool + Send + Sync + 'static,
        distance: impl Fn(usize, &[f64], NormExp) -> f64 + Send + Sync + 'static,
        sample: impl Fn(usize, usize, &mut ChaCha8Rng) -> Member + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            kind: SchemeKind::Custom,
            rule: Rule::Custom { member: Arc::new(member), distance: Arc::new(distance), sample: Arc::new(sample) },
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "dim_subspaces" => Ok(Self::dim_subspaces()),
            "sparse_support" => Ok(Self::sparse_support()),
            "lp_ladder" => Ok(Self::lp_ladder()),
            "broken_exact_support" => Ok(Self::broken_exact_support()),
            _ => Err(Error::InvalidSettings(format!("unknown scheme {name:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub(crate) fn is_ladder(&self) -> bool {
        matches!(self.rule, Rule::Ladder)
    }

    pub(crate) fn is_exact_support(&self) -> bool {
        matches!(self.rule, Rule::ExactSupport)
    }

    pub fn member(&self, n: usize, a: &Member) -> bool {
        match &self.rule {
            Rule::Dim => a.rank() <= n,
            Rule::Sparse => a.support().len() <= n,
            Rule::Ladder => n >= 1 || a.rank() == 0,
            Rule::ExactSupport => a.support().len() == n,
            Rule::Custom { member, .. } => member(n, a),
        }
    }

    /// Distance from `point` to the union of `Qₙ` in the `ℓ_p` norm.
    pub fn best_distance(&self, n: usize, point: &[f64], p: NormExp) -> f64 {
        match &self.rule {
            Rule::Dim | Rule::Ladder => {
                if n == 0 {
                    p.norm(point)
                } else {
                    0.0
                }
            }
            Rule::Sparse => best_n_term(point, n, p),
            Rule::ExactSupport => {
                if n > point.len() {
                    f64::INFINITY
                } else {
                    best_n_term(point, n, p)
                }
            }
            Rule::Custom { distance, .. } => distance(n, point, p),
        }
    }

    /// A random member of `Qₙ` on `ℝ^dim`.
    pub fn sample(&self, n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Member {
        match &self.rule {
            Rule::Dim => {
                let k = rng.gen_range(0..=n.min(dim));
                random_span(dim, &(0..dim).collect::<Vec<_>>(), k, rng)
            }
            Rule::Sparse => {
                let k = rng.gen_range(0..=n.min(dim));
                let support = random_subset(dim, k, rng);
                let cols = if k == 0 { 0 } else { rng.gen_range(1..=k) };
                random_span(dim, &support, cols, rng)
            }
            Rule::Ladder => {
                if n == 0 {
                    Member::zero(dim)
                } else {
                    let cols = rng.gen_range(1..=dim);
                    random_span(dim, &(0..dim).collect::<Vec<_>>(), cols, rng)
                }
            }
            Rule::ExactSupport => Member::coordinates(dim, &random_subset(dim, n, rng)),
            Rule::Custom { sample, .. } => sample(n, dim, rng),
        }
    }
}

/// Ambient dimension and index range of the sampled members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSampler {
    pub dim: usize,
    pub max_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeAxiomCheck {
    pub axiom: String,
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeAxiomReport {
    pub scheme: String,
    pub trials: usize,
    pub checks: Vec<SchemeAxiomCheck>,
    /// Samples the scheme itself did not recognise as members.
    pub invalid_samples: usize,
}

impl SchemeAxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, axiom: &str) -> Option<&SchemeAxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new("scheme_axioms", ["axiom", "checks", "failures", "passed", "counterexample"])
            .with_meta("scheme", self.scheme.clone());
        for c in &self.checks {
            t.push(vec![
                c.axiom.as_str().into(),
                c.checks.into(),
                c.failures.into(),
                c.passed.into(),
                c.counterexample.clone().unwrap_or_default().into(),
            ]);
        }
        t
    }
}

fn describe(a: &Member) -> String {
    format!("span of {:?}", a.generators().to_rows())
}

/// Samples members and checks GA1 (`Q₀ = {0}`, `Qₙ ⊆ Qₙ₊₁`), GA2
/// (`λQₙ ⊆ Qₙ`) and GA3 (`Qₙ + Q_m ⊆ Q_{n+m}`).
pub fn check_scheme_axioms(q: &ApproximationScheme, sampler: &SchemeSampler, trials: usize, seed: u64) -> SchemeAxiomReport {
    let mut checks: Vec<SchemeAxiomCheck> = ["GA1", "GA2", "GA3"]
        .iter()
        .map(|a| SchemeAxiomCheck { axiom: a.to_string(), passed: true, checks: 0, failures: 0, counterexample: None })
        .collect();
    let mut record = |idx: usize, ok: bool, what: &dyn Fn() -> String| {
        let c = &mut checks[idx];
        c.checks += 1;
        if !ok {
            c.failures += 1;
            c.passed = false;
            if c.counterexample.is_none() {
                c.counterexample = Some(what());
            }
        }
    };
    let mut invalid = 0;
    let dim = sampler.dim;
    let zero = Member::zero(dim);
    record(0, q.member(0, &zero), &|| "the trivial subspace is not in Q_0".into());
    let mut rng = seeded_rng(seed, 0x5343_4845);
    for _ in 0..trials {
        let n = rng.gen_range(0..=sampler.max_n);
        let m = rng.gen_range(0..=sampler.max_n);
        let lambda = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(-3.0..3.0) };
        let a = q.sample(n, dim, &mut rng);
        let b = q.sample(m, dim, &mut rng);
        if !q.member(n, &a) || !q.member(m, &b) {
            invalid += 1;
            continue;
        }
        if n == 0 {
            record(0, a.rank() == 0, &|| format!("Q_0 contains the non-trivial {}", describe(&a)));
        }
        record(0, q.member(n + 1, &a), &|| format!("{} lies in Q_{n} but not in Q_{}", describe(&a), n + 1));
        let scaled = a.scaled(lambda);
        record(1, q.member(n, &scaled), &|| format!("{} lies in Q_{n} but its multiple by {lambda} does not", describe(&a)));
        let sum = a.sum(&b).expect("same ambient dimension");
        record(2, q.member(n + m, &sum), &|| {
            format!("{} in Q_{n} plus {} in Q_{m} is not in Q_{}", describe(&a), describe(&b), n + m)
        });
    }
    SchemeAxiomReport { scheme: q.name().to_string(), trials, checks, invalid_samples: invalid }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler() -> SchemeSampler {
        SchemeSampler { dim: 5, max_n: 4 }
    }

    #[test]
    fn builtin_schemes_satisfy_the_axioms() {
        for q in [ApproximationScheme::dim_subspaces(), ApproximationScheme::sparse_support(), ApproximationScheme::lp_ladder()] {
            let r = check_scheme_axioms(&q, &sampler(), 300, 7);
            assert!(r.passed(), "{r:?}");
            assert_eq!(r.invalid_samples, 0);
        }
    }

    #[test]
    fn broken_scheme_fails_nesting() {
        let r = check_scheme_axioms(&ApproximationScheme::broken_exact_support(), &SchemeSampler { dim: 5, max_n: 3 }, 200, 1);
        let ga1 = r.check("GA1").unwrap();
        assert!(!ga1.passed && ga1.counterexample.is_some());
    }

    #[test]
    fn member_operations() {
        let a = Member::coordinates(4, &[0, 2]);
        assert_eq!(a.rank(), 2);
        assert_eq!(a.support(), vec![0, 2]);
        assert_eq!(a.scaled(0.0).rank(), 0);
        let b = Member::span(Matrix::from_columns(&[[1.0, 0.0, 1.0, 0.0]]).unwrap());
        assert_eq!(a.sum(&b).unwrap().rank(), 2);
        let d = a.distance(&[1.0, 5.0, -2.0, 3.0], NormExp::Inf).unwrap();
        assert!((d - 5.0).abs() <= 1e-12);
    }

    #[test]
    fn best_n_term_distances() {
        let q = ApproximationScheme::sparse_support();
        assert_eq!(q.best_distance(1, &[1.0, -3.0, 2.0], NormExp::One), 3.0);
        assert_eq!(q.best_distance(1, &[1.0, 1.0], NormExp::Inf), 1.0);
        assert_eq!(q.best_distance(3, &[1.0, 1.0], NormExp::Two), 0.0);
        assert_eq!(ApproximationScheme::dim_subspaces().best_distance(0, &[3.0, 4.0], NormExp::Two), 5.0);
    }

    #[test]
    fn custom_scheme_round_trip() {
        let q = ApproximationScheme::custom(
            "first_coordinate",
            |n, a: &Member| a.support().iter().all(|&i| i == 0) || n >= a.ambient(),
            |n, x: &[f64], p: NormExp| if n == 0 { p.norm(x) } else { p.norm(&x[1..]) },
            |n, dim, _rng: &mut ChaCha8Rng| if n == 0 { Member::zero(dim) } else { Member::coordinates(dim, &[0]) },
        );
        assert_eq!(q.kind(), SchemeKind::Custom);
        let r = check_scheme_axioms(&q, &sampler(), 50, 0);
        assert!(r.passed(), "{r:?}");
    }
}
