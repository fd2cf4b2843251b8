use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::report::Table;
use crate::spaces::{operator_norm_with, LinearOperator, NormBracket, NormExp, NormedSpace};
use crate::{seeded_rng, Error, Result};

use super::{SNumberKind, SNumberValue, SolverSettings};

/// Node budget of the first, unrefined pass.
const QUICK_BUDGET: usize = 3_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    /// `s₁(T) = ‖T‖ ≥ s₂(T) ≥ …`
    NormAndMonotone,
    /// `s_{m+n−1}(S + T) ≤ s_m(S) + s_n(T)`
    Additivity,
    /// `sₙ(R T K) ≤ ‖R‖ sₙ(T) ‖K‖`
    Ideal,
    /// `rank T < n ⇒ sₙ(T) = 0`
    Rank,
    /// `sₙ(Iₙ) = 1`
    Identity,
    /// `|sₙ(S) − sₙ(T)| ≤ ‖S − T‖`
    Continuity,
}

impl Axiom {
    pub const ALL: [Axiom; 6] =
        [Axiom::NormAndMonotone, Axiom::Additivity, Axiom::Ideal, Axiom::Rank, Axiom::Identity, Axiom::Continuity];

    pub fn as_str(self) -> &'static str {
        match self {
            Axiom::NormAndMonotone => "norm_and_monotone",
            Axiom::Additivity => "additivity",
            Axiom::Ideal => "ideal",
            Axiom::Rank => "rank",
            Axiom::Identity => "identity",
            Axiom::Continuity => "continuity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomGeometry {
    /// Every space is Euclidean.
    Hilbert,
    /// Domains and codomains cycle through pairs of `ℓ₁` and `ℓ∞`.
    Polyhedral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomSuiteConfig {
    pub max_dim: usize,
    pub geometry: AxiomGeometry,
    /// Pass threshold for the slack; defaults to `s.tol` on Euclidean
    /// spaces and `1e-4` otherwise.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    /// Largest violation over all sampled instances.
    pub slack: f64,
    pub checks: usize,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub kind: SNumberKind,
    pub geometry: AxiomGeometry,
    pub instances: usize,
    pub tolerance: f64,
    pub checks: Vec<AxiomCheck>,
    /// Largest violation of `s_{m+n−1}(S + T) ≤ s_m(T) + s_n(T)`, the
    /// additivity axiom with `S` replaced by `T` on the right; logged only.
    pub literal_additivity_slack: f64,
    /// Checks that were recomputed with the full search budget.
    pub refined: usize,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, axiom: Axiom) -> &AxiomCheck {
        self.checks.iter().find(|c| c.axiom == axiom).expect("every axiom is checked")
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new("axioms", ["axiom", "checks", "slack", "passed", "counterexample"])
            .with_meta("kind", self.kind.symbol())
            .with_meta("tolerance", crate::report::format_float(self.tolerance))
            .with_meta("literal_additivity_slack", crate::report::format_float(self.literal_additivity_slack));
        for c in &self.checks {
            t.push(vec![
                c.axiom.as_str().into(),
                c.checks.into(),
                c.slack.into(),
                c.passed.into(),
                c.counterexample.clone().unwrap_or_default().into(),
            ]);
        }
        t
    }
}

/// Operators of one sampled tuple; indices into `ops`.
const T: usize = 0;
const S: usize = 1;
const SUM: usize = 2;
const RTK: usize = 3;
const LOW: usize = 4;
const NEAR: usize = 5;
const ID: usize = 6;

struct Instance {
    ops: Vec<LinearOperator>,
    /// `R` and `K` of the ideal check.
    outer: (LinearOperator, LinearOperator),
    low_rank: usize,
    label: String,
}

struct Evaluator<'a> {
    kind: SNumberKind,
    quick: SolverSettings,
    full: &'a SolverSettings,
    inst: &'a Instance,
    cache: HashMap<(usize, usize, bool), SNumberValue>,
    norms: HashMap<usize, NormBracket>,
}

impl Evaluator<'_> {
    fn value(&mut self, op: usize, n: usize, refined: bool) -> Result<SNumberValue> {
        if let Some(v) = self.cache.get(&(op, n, refined)) {
            return Ok(v.clone());
        }
        let s = if refined { self.full } else { &self.quick };
        let v = self.kind.compute(&self.inst.ops[op], n, s)?;
        self.cache.insert((op, n, refined), v.clone());
        Ok(v)
    }

    /// Norm brackets of `ops[0..]`, then `R` (index 100) and `K` (101) and
    /// `NEAR − T` (102).
    fn norm(&mut self, key: usize) -> Result<NormBracket> {
        if let Some(b) = self.norms.get(&key) {
            return Ok(b.clone());
        }
        let op = match key {
            100 => self.inst.outer.0.clone(),
            101 => self.inst.outer.1.clone(),
            102 => self.inst.ops[NEAR].sub(&self.inst.ops[T])?,
            k => self.inst.ops[k].clone(),
        };
        let b = operator_norm_with(&op, &self.full.norm_options())?;
        self.norms.insert(key, b.clone());
        Ok(b)
    }
}

/// One check: its axiom, a description, and the slack as a function of the
/// evaluator and the refinement flag. The second slack is the literal
/// additivity variant where applicable.
type Check = (Axiom, String, Box<dyn Fn(&mut Evaluator, bool) -> Result<(f64, f64)> + Send + Sync>);

fn pairs(kind: SNumberKind) -> &'static [(NormExp, NormExp)] {
    use NormExp::{Inf, One};
    match kind {
        SNumberKind::Approximation => &[(One, Inf), (One, One), (Inf, Inf)],
        _ => &[(One, Inf), (One, One), (Inf, Inf), (Inf, One)],
    }
}

fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("shape")
}

fn sample(kind: SNumberKind, cfg: &AxiomSuiteConfig, seed: u64, i: usize) -> Result<Instance> {
    let mut rng = seeded_rng(seed, 0x6178_0000 + i as u64);
    let lo = if cfg.geometry == AxiomGeometry::Hilbert { 1 } else { 2 };
    let m = rng.gen_range(lo..=cfg.max_dim.max(lo));
    let d = rng.gen_range(lo..=cfg.max_dim.max(lo));
    let (p, q) = match cfg.geometry {
        AxiomGeometry::Hilbert => (NormExp::Two, NormExp::Two),
        AxiomGeometry::Polyhedral => pairs(kind)[i % pairs(kind).len()],
    };
    let (x, y) = (NormedSpace::new(d, p)?, NormedSpace::new(m, q)?);
    let t = LinearOperator::new(random_matrix(m, d, &mut rng), x, y)?;
    let s = LinearOperator::new(random_matrix(m, d, &mut rng), x, y)?;
    let r = LinearOperator::new(random_matrix(m, m, &mut rng), y, y)?;
    let k = LinearOperator::new(random_matrix(d, d, &mut rng), x, x)?;
    let sum = s.add(&t)?;
    let rtk = k.then(&t)?.then(&r)?;
    let low_rank = if m.min(d) > 1 { rng.gen_range(1..m.min(d)) } else { 0 };
    let low = LinearOperator::new(&random_matrix(m, low_rank, &mut rng) * &random_matrix(low_rank, d, &mut rng), x, y)?;
    let near = t.add(&LinearOperator::new(random_matrix(m, d, &mut rng).scale(0.1), x, y)?)?;
    let id_dim = m.min(d);
    let id_p = if cfg.geometry == AxiomGeometry::Hilbert {
        NormExp::Two
    } else if rng.gen_bool(0.5) {
        NormExp::One
    } else {
        NormExp::Inf
    };
    let id = LinearOperator::identity(NormedSpace::new(id_dim, id_p)?);
    Ok(Instance {
        ops: vec![t, s, sum, rtk, low, near, id],
        outer: (r, k),
        low_rank,
        label: format!("instance {i} ({x} -> {y})"),
    })
}

fn checks(inst: &Instance, kind: SNumberKind) -> Vec<Check> {
    let (m, d) = inst.ops[T].matrix().shape();
    let top = kind.max_index(m, d).min(m.min(d) + 1);
    let mut out: Vec<Check> = Vec::new();
    out.push((
        Axiom::NormAndMonotone,
        "s_1(T) = ||T||".into(),
        Box::new(|ev, r| {
            let s1 = ev.value(T, 1, r)?;
            let nb = ev.norm(T)?;
            Ok(((s1.upper - nb.lower).max(nb.upper - s1.lower).max(0.0), 0.0))
        }),
    ));
    for n in 1..top {
        out.push((
            Axiom::NormAndMonotone,
            format!("s_{}(T) <= s_{n}(T)", n + 1),
            Box::new(move |ev, r| {
                let (a, b) = (ev.value(T, n + 1, r)?, ev.value(T, n, r)?);
                Ok(((a.upper - b.lower).max(0.0), 0.0))
            }),
        ));
    }
    for i in 1..=2 {
        for j in 1..=2 {
            let k = i + j - 1;
            if k > top {
                continue;
            }
            out.push((
                Axiom::Additivity,
                format!("s_{k}(S+T) <= s_{i}(S) + s_{j}(T)"),
                Box::new(move |ev, r| {
                    let left = ev.value(SUM, k, r)?.upper;
                    let right = ev.value(S, i, r)?.lower + ev.value(T, j, r)?.lower;
                    let literal = ev.value(T, i, r)?.lower + ev.value(T, j, r)?.lower;
                    Ok(((left - right).max(0.0), (left - literal).max(0.0)))
                }),
            ));
        }
    }
    for n in 1..=top {
        out.push((
            Axiom::Ideal,
            format!("s_{n}(RTK) <= ||R|| s_{n}(T) ||K||"),
            Box::new(move |ev, r| {
                let left = ev.value(RTK, n, r)?.upper;
                let right = ev.norm(100)?.lower * ev.value(T, n, r)?.lower * ev.norm(101)?.lower;
                Ok(((left - right).max(0.0), 0.0))
            }),
        ));
    }
    let low_rank = inst.low_rank;
    if low_rank > 0 {
        for n in low_rank + 1..=top {
            out.push((
                Axiom::Rank,
                format!("rank {low_rank} < {n} => s_{n} = 0"),
                Box::new(move |ev, r| Ok((ev.value(LOW, n, r)?.upper.max(0.0), 0.0))),
            ));
        }
    }
    let id_dim = inst.ops[ID].matrix().rows();
    out.push((
        Axiom::Identity,
        format!("s_{id_dim}(I_{id_dim}) = 1"),
        Box::new(move |ev, r| {
            let v = ev.value(ID, id_dim, r)?;
            Ok(((v.upper - 1.0).max(1.0 - v.lower).max(0.0), 0.0))
        }),
    ));
    for n in 1..=top {
        out.push((
            Axiom::Continuity,
            format!("|s_{n}(S') - s_{n}(T)| <= ||S' - T||"),
            Box::new(move |ev, r| {
                let (a, b) = (ev.value(NEAR, n, r)?, ev.value(T, n, r)?);
                let left = (a.upper - b.lower).max(b.upper - a.lower);
                Ok(((left - ev.norm(102)?.lower).max(0.0), 0.0))
            }),
        ));
    }
    out
}

/// Per-instance outcome: `(axiom, slack, literal slack, description, refined)`.
type Outcome = Vec<(Axiom, f64, f64, String, bool)>;

fn run_instance(kind: SNumberKind, inst: &Instance, s: &SolverSettings, tol: f64, hilbert: bool) -> Outcome {
    let mut ev = Evaluator {
        kind,
        quick: s.with_budget(s.refine_budget.min(QUICK_BUDGET)),
        full: s,
        inst,
        cache: HashMap::new(),
        norms: HashMap::new(),
    };
    let mut out = Vec::new();
    for (axiom, what, f) in checks(inst, kind) {
        let first = f(&mut ev, false);
        let needs = !hilbert && first.as_ref().map_or(true, |(sl, _)| *sl > tol);
        let (res, refined) = if needs { (f(&mut ev, true), true) } else { (first, false) };
        match res {
            Ok((slack, literal)) => out.push((axiom, slack, literal, format!("{}: {what}", inst.label), refined)),
            Err(e) => out.push((axiom, f64::INFINITY, 0.0, format!("{}: {what}: {e}", inst.label), refined)),
        }
    }
    out
}

/// Samples `instance_count` random operator tuples and checks the five
/// s-number axioms and the continuity bound for `kind`.
///
/// Left-hand sides use upper bracket ends and right-hand sides lower ends.
/// Values are first computed with a small search budget; only checks whose
/// slack exceeds the tolerance are recomputed with the full budget.
pub fn axiom_suite(kind: SNumberKind, instance_count: usize, dims: &AxiomSuiteConfig, s: &SolverSettings) -> Result<AxiomReport> {
    if kind == SNumberKind::Symmetrized {
        return Err(Error::InvalidSettings("the axiom suite covers a, d and c".into()));
    }
    s.validate()?;
    let hilbert = dims.geometry == AxiomGeometry::Hilbert;
    let tol = dims.tolerance.unwrap_or(if hilbert { s.tol } else { 1e-4 });
    let instances: Vec<Instance> = (0..instance_count).map(|i| sample(kind, dims, s.seed, i)).collect::<Result<_>>()?;
    let outcomes: Vec<Outcome> = instances.par_iter().map(|inst| run_instance(kind, inst, s, tol, hilbert)).collect();

    let mut checks: Vec<AxiomCheck> =
        Axiom::ALL.iter().map(|&axiom| AxiomCheck { axiom, passed: true, slack: 0.0, checks: 0, counterexample: None }).collect();
    let mut literal = 0.0f64;
    let mut refined = 0;
    for outcome in outcomes {
        for (axiom, slack, lit, what, was_refined) in outcome {
            let c = checks.iter_mut().find(|c| c.axiom == axiom).expect("axiom");
            c.checks += 1;
            refined += was_refined as usize;
            literal = literal.max(lit);
            if slack > c.slack || slack.is_nan() {
                c.slack = slack;
                if slack > tol || slack.is_nan() {
                    c.counterexample = Some(format!("{what} (slack {slack:e})"));
                }
            }
        }
    }
    for c in &mut checks {
        c.passed = c.slack <= tol;
    }
    Ok(AxiomReport {
        kind,
        geometry: dims.geometry,
        instances: instance_count,
        tolerance: tol,
        checks,
        literal_additivity_slack: literal,
        refined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_suite_is_exact() {
        let cfg = AxiomSuiteConfig { max_dim: 4, geometry: AxiomGeometry::Hilbert, tolerance: None };
        let r = axiom_suite(SNumberKind::Approximation, 10, &cfg, &SolverSettings::default()).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.checks.iter().all(|c| c.checks > 0 && c.slack <= 1e-9));
    }

    #[test]
    fn rank_axiom_example() {
        let t =
            LinearOperator::between(Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap(), NormExp::Two, NormExp::Two).unwrap();
        for kind in [SNumberKind::Approximation, SNumberKind::Kolmogorov, SNumberKind::Gelfand] {
            assert!(kind.compute(&t, 2, &SolverSettings::default()).unwrap().upper <= 1e-12);
        }
    }

    #[test]
    fn identity_axiom_example() {
        let id = LinearOperator::identity(NormedSpace::l2(4));
        let v = SNumberKind::Approximation.compute(&id, 4, &SolverSettings::default()).unwrap();
        assert!((v.lower - 1.0).abs() <= 1e-12 && (v.upper - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn symmetrized_kind_is_rejected() {
        let cfg = AxiomSuiteConfig { max_dim: 2, geometry: AxiomGeometry::Hilbert, tolerance: None };
        assert!(axiom_suite(SNumberKind::Symmetrized, 1, &cfg, &SolverSettings::default()).is_err());
    }
}
