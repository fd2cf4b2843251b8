//! Experiment specifications.
//!
//! A spec is a JSON document naming operators and the computations to run
//! on them. Parsing is strict: unknown fields are errors, and
//! [`validate`] rejects fields that the chosen computation kind does not
//! use.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use snum_core::schemes::{ApproximationScheme, ModelOperator, Sequence, Weights};
use snum_core::snumbers::{AxiomGeometry, SNumberKind, SolverSettings};
use snum_core::{LinearOperator, Matrix, NormExp, MAX_DIM};

use crate::error::CliError;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub spec_version: u32,
    pub operators: Vec<OperatorSpec>,
    pub computations: Vec<ComputationSpec>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Matrix {
        name: String,
        rows: Vec<Vec<f64>>,
        domain: NormExp,
        codomain: NormExp,
    },
    Diagonal {
        name: String,
        lambda: Sequence,
        p: NormExp,
        dim: Sweep,
    },
    WeightedShift {
        name: String,
        weights: Sequence,
        #[serde(default)]
        bound: Option<f64>,
        dim: Sweep,
    },
    CanonicalInjection {
        name: String,
        dim: Sweep,
    },
}

/// A single value, an inclusive range or an explicit list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    One(usize),
    List(Vec<usize>),
    Range(RangeSpec),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub from: usize,
    pub to: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Sweep::One(v) => vec![*v],
            Sweep::Range(r) => (r.from..=r.to).collect(),
            Sweep::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComputationKind {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "profile")]
    Profile,
    #[serde(rename = "duality")]
    Duality,
    #[serde(rename = "axioms")]
    Axioms,
    #[serde(rename = "scheme_width")]
    SchemeWidth,
    #[serde(rename = "q_diag")]
    QDiag,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "injection_study")]
    InjectionStudy,
    #[serde(rename = "tau_duality")]
    TauDuality,
    #[serde(rename = "scheme_approx")]
    SchemeApprox,
}

impl ComputationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ComputationKind::A => "a",
            ComputationKind::C => "c",
            ComputationKind::D => "d",
            ComputationKind::Tau => "tau",
            ComputationKind::Profile => "profile",
            ComputationKind::Duality => "duality",
            ComputationKind::Axioms => "axioms",
            ComputationKind::SchemeWidth => "scheme_width",
            ComputationKind::QDiag => "q_diag",
            ComputationKind::Gamma => "gamma",
            ComputationKind::InjectionStudy => "injection_study",
            ComputationKind::TauDuality => "tau_duality",
            ComputationKind::SchemeApprox => "scheme_approx",
        }
    }

    /// The s-number family of the four single-number kinds.
    pub fn s_number(self) -> Option<SNumberKind> {
        match self {
            ComputationKind::A => Some(SNumberKind::Approximation),
            ComputationKind::C => Some(SNumberKind::Gelfand),
            ComputationKind::D => Some(SNumberKind::Kolmogorov),
            ComputationKind::Tau => Some(SNumberKind::Symmetrized),
            _ => None,
        }
    }

    /// Optional fields the kind accepts besides `kind`, and which of them
    /// are mandatory.
    fn fields(self) -> (&'static [&'static str], &'static [&'static str]) {
        use ComputationKind::*;
        match self {
            A | C | D | Tau => (&["operator", "n"], &["operator", "n"]),
            Profile => (&["operator"], &["operator"]),
            Duality | TauDuality | Gamma | InjectionStudy => (&["operator", "n"], &["operator", "n"]),
            SchemeWidth | QDiag | SchemeApprox => (&["operator", "n", "scheme"], &["operator", "n", "scheme"]),
            Axioms => (&["number", "instances", "geometry", "max_dim", "tolerance"], &["number", "geometry"]),
        }
    }
}

/// s-number family accepted by the axiom suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum AxiomNumber {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "d")]
    D,
}

impl AxiomNumber {
    pub fn kind(self) -> SNumberKind {
        match self {
            AxiomNumber::A => SNumberKind::Approximation,
            AxiomNumber::C => SNumberKind::Gelfand,
            AxiomNumber::D => SNumberKind::Kolmogorov,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputationSpec {
    pub kind: ComputationKind,
    #[serde(default)]
    pub operator: Option<String>,
    #[serde(default)]
    pub n: Option<Sweep>,
    #[serde(default)]
    pub scheme: Option<SchemeSpec>,
    #[serde(default)]
    pub number: Option<AxiomNumber>,
    #[serde(default)]
    pub instances: Option<usize>,
    #[serde(default)]
    pub geometry: Option<AxiomGeometry>,
    #[serde(default)]
    pub max_dim: Option<usize>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl ComputationSpec {
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let flags = [
            ("operator", self.operator.is_some()),
            ("n", self.n.is_some()),
            ("scheme", self.scheme.is_some()),
            ("number", self.number.is_some()),
            ("instances", self.instances.is_some()),
            ("geometry", self.geometry.is_some()),
            ("max_dim", self.max_dim.is_some()),
            ("tolerance", self.tolerance.is_some()),
        ];
        for (name, set) in flags {
            if set {
                out.push(name);
            }
        }
        out
    }

    pub fn indices(&self) -> Vec<usize> {
        self.n.as_ref().map(Sweep::values).unwrap_or_default()
    }
}

/// A built-in scheme by name or an external membership oracle.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    Builtin(String),
    /// Executable answering JSON requests on stdin; relative paths are
    /// resolved against the spec's directory.
    Script(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Plotdata,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Plotdata => "dat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Format,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl OperatorSpec {
    pub fn name(&self) -> &str {
        match self {
            OperatorSpec::Matrix { name, .. }
            | OperatorSpec::Diagonal { name, .. }
            | OperatorSpec::WeightedShift { name, .. }
            | OperatorSpec::CanonicalInjection { name, .. } => name,
        }
    }

    /// The infinite-dimensional model behind a truncated family.
    pub fn model(&self) -> Option<ModelOperator> {
        match self {
            OperatorSpec::Matrix { .. } => None,
            OperatorSpec::Diagonal { lambda, p, .. } => Some(ModelOperator::diagonal(lambda.clone(), *p)),
            OperatorSpec::WeightedShift { weights, .. } => Some(ModelOperator::weighted_shift(weights.clone())),
            OperatorSpec::CanonicalInjection { .. } => Some(ModelOperator::canonical_injection()),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match self {
            OperatorSpec::Matrix { rows, .. } => vec![rows.first().map_or(0, Vec::len)],
            OperatorSpec::Diagonal { dim, .. }
            | OperatorSpec::WeightedShift { dim, .. }
            | OperatorSpec::CanonicalInjection { dim, .. } => dim.values(),
        }
    }

    /// One finite section per dimension of the sweep, labelled by the
    /// domain dimension.
    pub fn sections(&self) -> snum_core::Result<Vec<(usize, LinearOperator)>> {
        match self {
            OperatorSpec::Matrix { rows, domain, codomain, .. } => {
                let t = LinearOperator::between(Matrix::from_rows(rows)?, *domain, *codomain)?;
                Ok(vec![(t.domain().dim(), t)])
            }
            _ => {
                let model = self.model().expect("model family");
                self.dims().into_iter().map(|d| Ok((d, model.truncate(d)?))).collect()
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            OperatorSpec::Matrix { rows, domain, codomain, .. } => {
                let (m, d) = (rows.len(), rows.first().map_or(0, Vec::len));
                format!("matrix l{}^{d} -> l{}^{m}", p_label(*domain), p_label(*codomain))
            }
            OperatorSpec::Diagonal { p, .. } => format!("diagonal on l{}", p_label(*p)),
            OperatorSpec::WeightedShift { .. } => "weighted shift on c0".to_string(),
            OperatorSpec::CanonicalInjection { .. } => "canonical injection l1 -> c0".to_string(),
        }
    }
}

fn p_label(p: NormExp) -> &'static str {
    match p {
        NormExp::One => "1",
        NormExp::Two => "2",
        NormExp::Inf => "inf",
    }
}

/// Parses a spec; syntax and schema errors carry their line and column.
pub fn parse(text: &str) -> Result<ExperimentSpec, CliError> {
    Ok(serde_json::from_str(text)?)
}

pub fn load(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation { field: "spec".into(), message: format!("cannot read {}: {e}", path.display()) })?;
    parse(&text)
}

/// Resolves a scheme descriptor.
pub fn resolve_scheme(spec: &SchemeSpec, base: &Path) -> Result<ApproximationScheme, CliError> {
    match spec {
        SchemeSpec::Builtin(name) => {
            ApproximationScheme::by_name(name).map_err(|e| CliError::validation("scheme.builtin", e.to_string()))
        }
        SchemeSpec::Script(path) => {
            let full = base.join(path);
            if !full.is_file() {
                return Err(CliError::validation("scheme.script", format!("{} is not a file", full.display())));
            }
            // a bare file name would otherwise be looked up on PATH
            let full = std::fs::canonicalize(&full).map_err(|e| CliError::validation("scheme.script", e.to_string()))?;
            Ok(crate::script::script_scheme(full))
        }
    }
}

/// Semantic checks beyond the schema. `base` is the directory against
/// which script paths are resolved.
pub fn validate(spec: &ExperimentSpec, base: &Path) -> Result<(), CliError> {
    if spec.spec_version != SPEC_VERSION {
        return Err(CliError::validation(
            "spec_version",
            format!("unsupported version {}, expected {SPEC_VERSION}", spec.spec_version),
        ));
    }
    if spec.computations.is_empty() {
        return Err(CliError::validation("computations", "at least one computation is required"));
    }
    spec.solver.validate().map_err(|e| CliError::validation("solver", e.to_string()))?;

    let mut names = BTreeSet::new();
    for (i, op) in spec.operators.iter().enumerate() {
        let field = |f: &str| format!("operators[{i}].{f}");
        if op.name().is_empty() {
            return Err(CliError::validation(field("name"), "must not be empty"));
        }
        if !names.insert(op.name().to_string()) {
            return Err(CliError::validation(field("name"), format!("duplicate operator name {:?}", op.name())));
        }
        validate_operator(op, &field)?;
    }

    for (i, c) in spec.computations.iter().enumerate() {
        validate_computation(spec, c, base, &|f: &str| format!("computations[{i}].{f}"))?;
    }
    Ok(())
}

fn validate_operator(op: &OperatorSpec, field: &dyn Fn(&str) -> String) -> Result<(), CliError> {
    match op {
        OperatorSpec::Matrix { rows, .. } => {
            if rows.is_empty() || rows[0].is_empty() {
                return Err(CliError::validation(field("rows"), "matrix must have at least one entry"));
            }
            if rows.len() > MAX_DIM || rows[0].len() > MAX_DIM {
                return Err(CliError::validation(field("rows"), format!("dimensions exceed {MAX_DIM}")));
            }
            if let Some(r) = rows.iter().position(|r| r.len() != rows[0].len()) {
                return Err(CliError::validation(field(&format!("rows[{r}]")), "rows must have equal length"));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(CliError::validation(field("rows"), "entries must be finite"));
            }
        }
        OperatorSpec::Diagonal { dim, .. } | OperatorSpec::CanonicalInjection { dim, .. } => validate_sweep(dim, &field("dim"))?,
        OperatorSpec::WeightedShift { weights, bound, dim, .. } => {
            validate_sweep(dim, &field("dim"))?;
            Weights::new(weights.clone(), *bound).map_err(|e| CliError::validation(field("bound"), e.to_string()))?;
        }
    }
    Ok(())
}

fn validate_sweep(s: &Sweep, field: &str) -> Result<(), CliError> {
    if let Sweep::Range(r) = s {
        if r.from > r.to {
            return Err(CliError::validation(field, format!("empty range {}..={}", r.from, r.to)));
        }
    }
    let v = s.values();
    if v.is_empty() {
        return Err(CliError::validation(field, "no dimensions"));
    }
    if let Some(d) = v.iter().find(|&&d| d == 0 || d > MAX_DIM) {
        return Err(CliError::validation(field, format!("dimension {d} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

fn validate_computation(
    spec: &ExperimentSpec,
    c: &ComputationSpec,
    base: &Path,
    field: &dyn Fn(&str) -> String,
) -> Result<(), CliError> {
    let (allowed, required) = c.kind.fields();
    for f in c.present() {
        if !allowed.contains(&f) {
            return Err(CliError::validation(field(f), format!("not used by kind {}", c.kind.as_str())));
        }
    }
    for f in required {
        if !c.present().contains(f) {
            return Err(CliError::validation(field(f), format!("required by kind {}", c.kind.as_str())));
        }
    }
    if let Some(n) = &c.n {
        validate_indices(n, &field("n"))?;
    }
    if let Some(s) = &c.scheme {
        resolve_scheme(s, base).map_err(|e| match e {
            CliError::Validation { field: f, message } => CliError::validation(field(&f), message),
            other => other,
        })?;
    }
    if c.kind == ComputationKind::Axioms {
        if c.instances == Some(0) {
            return Err(CliError::validation(field("instances"), "must be positive"));
        }
        if let Some(d) = c.max_dim {
            if d == 0 || d > 8 {
                return Err(CliError::validation(field("max_dim"), "must lie in 1..=8"));
            }
        }
        if let Some(t) = c.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::validation(field("tolerance"), "must be positive"));
            }
        }
        return Ok(());
    }

    let name = c.operator.as_deref().expect("operator is required");
    let op = spec
        .operators
        .iter()
        .find(|o| o.name() == name)
        .ok_or_else(|| CliError::validation(field("operator"), format!("no operator named {name:?}")))?;
    match c.kind {
        ComputationKind::QDiag | ComputationKind::Gamma if op.model().is_none() => {
            return Err(CliError::validation(
                field("operator"),
                "needs a diagonal, weighted_shift or canonical_injection family",
            ));
        }
        ComputationKind::InjectionStudy if !matches!(op, OperatorSpec::CanonicalInjection { .. }) => {
            return Err(CliError::validation(field("operator"), "needs a canonical_injection operator"));
        }
        _ => {}
    }
    let sections = op.sections().map_err(|e| CliError::validation(field("operator"), e.to_string()))?;
    let ns = c.indices();
    match c.kind {
        ComputationKind::A | ComputationKind::C | ComputationKind::D | ComputationKind::Tau => {
            let kind = c.kind.s_number().expect("single-number kind");
            for (_, t) in &sections {
                let (m, d) = t.matrix().shape();
                let max = kind.max_index(m, d);
                if let Some(n) = ns.iter().find(|&&n| n == 0 || n > max) {
                    return Err(CliError::validation(field("n"), format!("index {n} outside 1..={max} for {m}x{d}")));
                }
            }
        }
        ComputationKind::Duality | ComputationKind::TauDuality | ComputationKind::InjectionStudy => {
            if ns.len() != 1 {
                return Err(CliError::validation(field("n"), "a single largest index is expected"));
            }
            for (_, t) in &sections {
                let (m, d) = t.matrix().shape();
                let max = m.min(d) + 1;
                if ns[0] == 0 || ns[0] > max {
                    return Err(CliError::validation(field("n"), format!("index {} outside 1..={max} for {m}x{d}", ns[0])));
                }
            }
        }
        ComputationKind::QDiag => {
            if ns.len() != 1 || ns[0] == 0 {
                return Err(CliError::validation(field("n"), "a single positive largest index is expected"));
            }
        }
        ComputationKind::Gamma => {
            if ns.contains(&0) {
                return Err(CliError::validation(field("n"), "indices start at 1"));
            }
        }
        _ => {}
    }
    Ok(())
}

fn validate_indices(n: &Sweep, field: &str) -> Result<(), CliError> {
    if let Sweep::Range(r) = n {
        if r.from > r.to {
            return Err(CliError::validation(field, format!("empty range {}..={}", r.from, r.to)));
        }
    }
    if n.values().is_empty() {
        return Err(CliError::validation(field, "no indices"));
    }
    Ok(())
}
