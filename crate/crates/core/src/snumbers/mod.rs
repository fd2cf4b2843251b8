//! The four s-number families of an operator between finite-dimensional
//! `ℓ_p` spaces, with certified brackets and re-checkable witnesses.
//!
//! Indices are 1-based: `s₁(T) = ‖T‖` and `aₙ(T) = inf{‖T − A‖ : rank A < n}`.

mod approximation;
mod axioms;
mod bounds;
mod duality;
mod gelfand;
mod kolmogorov;
mod symmetrized;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::oracle::width::SearchConfig;
use crate::oracle::{svd, Svd};
use crate::spaces::{operator_norm_with, LinearOperator, NormBracket, NormExp, NormOptions};
use crate::{Error, Result};

pub use approximation::approximation_number;
pub use axioms::{axiom_suite, Axiom, AxiomCheck, AxiomGeometry, AxiomReport, AxiomSuiteConfig};
pub use bounds::{domain_bernstein_bound, range_bernstein_bound, scaled_singular_bound};
pub use duality::{duality_report, injection_gap_study};
pub use gelfand::{epsilon_form, gelfand_number};
pub use kolmogorov::kolmogorov_number;
pub use symmetrized::{surrogate, symmetrized_number};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SNumberKind {
    Approximation,
    Kolmogorov,
    Gelfand,
    Symmetrized,
}

impl SNumberKind {
    pub const ALL: [SNumberKind; 4] =
        [SNumberKind::Approximation, SNumberKind::Kolmogorov, SNumberKind::Gelfand, SNumberKind::Symmetrized];

    /// Short symbol used in tables: `a`, `d`, `c`, `tau`.
    pub fn symbol(self) -> &'static str {
        match self {
            SNumberKind::Approximation => "a",
            SNumberKind::Kolmogorov => "d",
            SNumberKind::Gelfand => "c",
            SNumberKind::Symmetrized => "tau",
        }
    }

    /// Largest admissible index for an `m × d` operator.
    pub fn max_index(self, m: usize, d: usize) -> usize {
        match self {
            SNumberKind::Kolmogorov => m + 1,
            SNumberKind::Gelfand => d + 1,
            SNumberKind::Approximation | SNumberKind::Symmetrized => m.min(d) + 1,
        }
    }

    /// Dispatches to the solver for this kind.
    pub fn compute(self, t: &LinearOperator, n: usize, s: &SolverSettings) -> Result<SNumberValue> {
        match self {
            SNumberKind::Approximation => approximation_number(t, n, s),
            SNumberKind::Kolmogorov => kolmogorov_number(t, n, s),
            SNumberKind::Gelfand => gelfand_number(t, n, s),
            SNumberKind::Symmetrized => symmetrized_number(t, n, s),
        }
    }
}

impl std::fmt::Display for SNumberKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    HilbertExact,
    PolyhedralExact,
    Heuristic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::HilbertExact => "hilbert_exact",
            Method::PolyhedralExact => "polyhedral_exact",
            Method::Heuristic => "heuristic",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Object certifying the upper end of a bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// `A` with `rank A ≤ n − 1` and `‖T − A‖ ≤ upper`.
    Approximant { matrix: Matrix },
    /// Columns spanning `G ⊆ Y` with `dim G ≤ n − 1`.
    Subspace { frame: Matrix },
    /// Rows `a₁, …, a_k ∈ X*` with `k ≤ n − 1`.
    Functionals { rows: Matrix },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SNumberValue {
    pub kind: SNumberKind,
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
    pub witness: Witness,
    /// False when two formulations of the same number disagree beyond
    /// their brackets.
    pub consistent: bool,
    /// Gelfand numbers: value of the ε-inequality form at the witness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Symmetrized numbers: spread between the equivalent surrogates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    /// Work spent by the subspace search.
    pub nodes: usize,
}

impl SNumberValue {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// Distance between the two brackets, zero when they overlap.
    pub fn gap(&self, other: &SNumberValue) -> f64 {
        (self.lower - other.upper).max(other.lower - self.upper).max(0.0)
    }

    pub(crate) fn exact(kind: SNumberKind, n: usize, value: f64, method: Method, witness: Witness) -> Self {
        Self { kind, n, lower: value, upper: value, method, witness, consistent: true, epsilon: None, spread: None, nodes: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    /// Node budget of the certified subspace search.
    pub refine_budget: usize,
    /// Relative bracket width at which the subspace search stops.
    pub refine_gap: f64,
    pub vertex_cap: usize,
    /// Grid resolution of the ε-net used for symmetrized numbers on `ℓ₂`;
    /// `None` disables the net.
    pub net_resolution: Option<usize>,
    /// Largest acceptable bracket width in ε-net mode.
    pub net_tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0,
            max_iters: 200,
            tol: crate::TOL,
            refine_budget: 200_000,
            refine_gap: 1e-5,
            vertex_cap: crate::VERTEX_CAP,
            net_resolution: None,
            net_tolerance: 1e-1,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |f: &str| Err(Error::InvalidSettings(format!("{f} must be positive")));
        if self.restarts == 0 {
            return bad("restarts");
        }
        if self.max_iters == 0 {
            return bad("max_iters");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol");
        }
        if !(self.refine_gap > 0.0 && self.refine_gap.is_finite()) {
            return bad("refine_gap");
        }
        if self.vertex_cap == 0 {
            return bad("vertex_cap");
        }
        if self.net_resolution == Some(0) {
            return bad("net_resolution");
        }
        if !(self.net_tolerance > 0.0) {
            return bad("net_tolerance");
        }
        Ok(())
    }

    /// Copy with a different node budget for the subspace search.
    pub fn with_budget(&self, budget: usize) -> Self {
        Self { refine_budget: budget, ..self.clone() }
    }

    pub(crate) fn norm_options(&self) -> NormOptions {
        NormOptions { vertex_cap: self.vertex_cap, allow_bracket: true, restarts: self.restarts, seed: self.seed }
    }

    pub(crate) fn search(&self, scale: f64) -> SearchConfig {
        SearchConfig {
            budget: self.refine_budget,
            gap: self.refine_gap * scale.max(1e-300),
            restarts: self.restarts,
            seed: self.seed,
            polish_evals: 4 * self.max_iters,
            max_params: 16,
        }
    }
}

/// σ₁ ≥ σ₂ ≥ … of a Hilbert-space operator, the common value of all four
/// kinds.
pub fn hilbert_profile(t: &LinearOperator) -> Result<Vec<SNumberValue>> {
    if !t.is_hilbert() {
        return Err(Error::NotHilbert(format!("{} → {}", t.domain(), t.codomain())));
    }
    let f = svd(t.matrix())?;
    let (m, d) = t.matrix().shape();
    Ok((1..=m.min(d)).map(|n| hilbert_value(SNumberKind::Approximation, &f, n)).collect())
}

/// Checks `1 ≤ n ≤ kind.max_index(..)`.
pub(crate) fn check_index(kind: SNumberKind, t: &LinearOperator, n: usize) -> Result<()> {
    let (m, d) = t.matrix().shape();
    let max = kind.max_index(m, d);
    if n == 0 || n > max {
        return Err(Error::IndexOutOfRange { n, max });
    }
    Ok(())
}

/// `σₙ` with the singular-vector witness appropriate to `kind`.
pub(crate) fn hilbert_value(kind: SNumberKind, f: &Svd, n: usize) -> SNumberValue {
    let sigma = f.values.get(n - 1).copied().unwrap_or(0.0);
    let k = (n - 1).min(f.values.len());
    let witness = singular_witness(kind, f, k);
    SNumberValue::exact(kind, n, sigma, Method::HilbertExact, witness)
}

/// Witness built from the leading `k` singular pairs.
fn singular_witness(kind: SNumberKind, f: &Svd, k: usize) -> Witness {
    let (m, d) = (f.u.rows(), f.v.rows());
    match kind {
        SNumberKind::Approximation | SNumberKind::Symmetrized => Witness::Approximant { matrix: f.truncate(k) },
        SNumberKind::Kolmogorov => Witness::Subspace { frame: f.u.select_cols(&(0..k.min(m)).collect::<Vec<_>>()) },
        SNumberKind::Gelfand => Witness::Functionals { rows: f.v.select_cols(&(0..k.min(d)).collect::<Vec<_>>()).transpose() },
    }
}

/// Numerical rank used for the exact-zero shortcut.
pub(crate) fn numerical_rank(f: &Svd) -> usize {
    let top = f.values.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    let dims = (f.u.rows().max(f.v.rows())) as f64;
    f.rank(top * 1e-13 * dims)
}

/// Values that need no search: Hilbert spaces, `n = 1`, and `n > rank T`.
pub(crate) fn trivial_value(
    kind: SNumberKind,
    t: &LinearOperator,
    n: usize,
    s: &SolverSettings,
) -> Result<(Option<SNumberValue>, Svd, NormBracket)> {
    check_index(kind, t, n)?;
    let f = svd(t.matrix())?;
    let norm = operator_norm_with(t, &s.norm_options())?;
    if t.is_hilbert() {
        return Ok((Some(hilbert_value(kind, &f, n)), f, norm));
    }
    let r = numerical_rank(&f);
    if n > r {
        let witness = match kind {
            SNumberKind::Approximation | SNumberKind::Symmetrized => Witness::Approximant { matrix: t.matrix().clone() },
            _ => singular_witness(kind, &f, r),
        };
        return Ok((Some(SNumberValue::exact(kind, n, 0.0, Method::PolyhedralExact, witness)), f, norm));
    }
    if n == 1 {
        let (m, d) = t.matrix().shape();
        let witness = match kind {
            SNumberKind::Approximation | SNumberKind::Symmetrized => Witness::Approximant { matrix: Matrix::zeros(m, d) },
            SNumberKind::Kolmogorov => Witness::Subspace { frame: Matrix::zeros(m, 0) },
            SNumberKind::Gelfand => Witness::Functionals { rows: Matrix::zeros(0, d) },
        };
        let method = if norm.exact { Method::PolyhedralExact } else { Method::Heuristic };
        let mut v = SNumberValue::exact(kind, n, norm.upper, method, witness);
        v.lower = norm.lower;
        return Ok((Some(v), f, norm));
    }
    Ok((None, f, norm))
}

/// Exact when the bracket has closed to the requested relative gap.
pub(crate) fn method_for(lower: f64, upper: f64, s: &SolverSettings, scale: f64) -> Method {
    if upper - lower <= s.refine_gap * scale.max(f64::MIN_POSITIVE) + s.tol * 1e-3 {
        Method::PolyhedralExact
    } else {
        Method::Heuristic
    }
}

pub(crate) fn is_polyhedral_pair(t: &LinearOperator) -> bool {
    t.domain().is_polyhedral() && t.codomain().is_polyhedral()
}

pub(crate) fn p_of(t: &LinearOperator) -> (NormExp, NormExp) {
    (t.domain().p(), t.codomain().p())
}
