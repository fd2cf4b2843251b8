//! Executes validated specs and writes their outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use snum_core::report::{Cell, Table};
use snum_core::schemes::{
    gamma_estimate, generalized_kolmogorov, q_compact_diagnostic, scheme_approximation_number, tau_duality_check, WidthInput,
};
use snum_core::snumbers::{
    axiom_suite, duality_report, hilbert_profile, injection_gap_study, AxiomGeometry, AxiomSuiteConfig, SNumberKind,
    SolverSettings,
};
use snum_core::LinearOperator;

use crate::error::CliError;
use crate::spec::{self, ComputationKind, ComputationSpec, ExperimentSpec, Format};

/// Options given on the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads; `None` reads `SNUM_THREADS`.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub computation: usize,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    pub file: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub snum: &'static str,
    pub snum_core: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub spec: String,
    pub spec_sha256: String,
    pub spec_version: u32,
    pub seed: u64,
    pub threads: usize,
    pub format: Format,
    pub versions: Versions,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputRecord>,
}

/// Thread count from `SNUM_THREADS`, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var("SNUM_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Parses, validates and runs the spec at `path`; returns the manifest
/// that was written next to the outputs.
pub fn run(path: &Path, opts: &RunOptions) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation("spec", format!("cannot read {}: {e}", path.display())))?;
    let mut spec = spec::parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if let Some(seed) = opts.seed {
        spec.solver.seed = seed;
    }
    spec::validate(&spec, &base)?;
    let out = opts.out.clone().or_else(|| spec.output.path.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let threads = opts.threads.or_else(env_threads).unwrap_or_else(rayon::current_num_threads);

    let started = Instant::now();
    let tables = execute(&spec, &base, threads)?;
    let wall = started.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let format = spec.output.format;
    let mut outputs = Vec::new();
    for (i, ((table, seconds), c)) in tables.into_iter().zip(&spec.computations).enumerate() {
        let file = format!("{i:02}_{}.{}", c.kind.as_str(), format.extension());
        let body = match format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
            Format::Plotdata => table.to_plotdata(),
        };
        let target = out.join(&file);
        std::fs::write(&target, body).map_err(|e| CliError::io(&target, e))?;
        outputs.push(OutputRecord { computation: i, kind: c.kind.as_str().into(), operator: c.operator.clone(), file, seconds });
    }
    let manifest = Manifest {
        spec: path.display().to_string(),
        spec_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        spec_version: spec.spec_version,
        seed: spec.solver.seed,
        threads,
        format,
        versions: Versions { snum: env!("CARGO_PKG_VERSION"), snum_core: snum_core::VERSION },
        wall_time_seconds: wall,
        outputs,
    };
    let target = out.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    body.push('\n');
    std::fs::write(&target, body).map_err(|e| CliError::io(&target, e))?;
    Ok(manifest)
}

/// Runs every computation of a validated spec on a pool of `threads`
/// workers and returns the tables in spec order with their run times.
pub fn execute(spec: &ExperimentSpec, base: &Path, threads: usize) -> Result<Vec<(Table, f64)>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Io { path: "thread pool".into(), message: e.to_string() })?;
    let results: Vec<Result<(Table, f64), CliError>> = pool.install(|| {
        spec.computations
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let t = Instant::now();
                let table = compute(spec, c, base).map_err(|e| match e {
                    CliError::Solver { source, .. } => {
                        CliError::Solver { context: format!("computations[{i}] ({})", c.kind.as_str()), source }
                    }
                    other => other,
                })?;
                Ok((table, t.elapsed().as_secs_f64()))
            })
            .collect()
    });
    results.into_iter().collect()
}

fn solver(e: snum_core::Error) -> CliError {
    CliError::Solver { context: String::new(), source: e }
}

fn with_section_column(sections: Vec<(usize, Table)>) -> Table {
    let first = &sections[0].1;
    let mut columns = vec!["d".to_string()];
    columns.extend(first.columns.iter().cloned());
    let mut out = Table::new(first.name.clone(), columns);
    out.meta = first.meta.clone();
    for (d, t) in sections {
        for row in t.rows {
            let mut r = vec![Cell::from(d)];
            r.extend(row);
            out.push(r);
        }
    }
    out
}

fn bracket_table(name: &str) -> Table {
    Table::new(name, ["d", "n", "lower", "upper", "method"])
}

fn compute(spec: &ExperimentSpec, c: &ComputationSpec, base: &Path) -> Result<Table, CliError> {
    let s = &spec.solver;
    if c.kind == ComputationKind::Axioms {
        return axioms(c, s);
    }
    let name = c.operator.as_deref().expect("validated");
    let op = spec.operators.iter().find(|o| o.name() == name).expect("validated");
    let sections = op.sections().map_err(solver)?;
    let ns = c.indices();
    let scheme = c.scheme.as_ref().map(|q| spec::resolve_scheme(q, base)).transpose()?;
    let mut table = match c.kind {
        ComputationKind::A | ComputationKind::C | ComputationKind::D | ComputationKind::Tau => {
            let kind = c.kind.s_number().expect("single-number kind");
            let mut t = bracket_table(kind.symbol());
            for (d, op) in &sections {
                for &n in &ns {
                    let v = kind.compute(op, n, s).map_err(solver)?;
                    t.push(vec![(*d).into(), n.into(), v.lower.into(), v.upper.into(), v.method.as_str().into()]);
                }
            }
            t
        }
        ComputationKind::Profile => {
            let mut t = bracket_table("profile");
            for (d, op) in &sections {
                for v in profile(op, s).map_err(solver)? {
                    t.push(vec![(*d).into(), v.n.into(), v.lower.into(), v.upper.into(), v.method.as_str().into()]);
                }
            }
            t
        }
        ComputationKind::Duality | ComputationKind::TauDuality => {
            let n = ns[0];
            let mut parts = Vec::new();
            for (d, op) in &sections {
                let t = if c.kind == ComputationKind::Duality { duality_report(op, n, s) } else { tau_duality_check(op, n, s) };
                parts.push((*d, t.map_err(solver)?));
            }
            with_section_column(parts)
        }
        ComputationKind::SchemeWidth => {
            let q = scheme.expect("validated");
            let mut t = Table::new("scheme_width", ["d", "n", "lower", "upper", "method", "radius", "revalidated"])
                .with_meta("scheme", q.name());
            for (d, op) in &sections {
                let input = WidthInput::Operator(op.clone());
                for &n in &ns {
                    let w = generalized_kolmogorov(&input, n, &q, s).map_err(solver)?;
                    let method = if w.lower == w.upper { "exact" } else { "bracket" };
                    t.push(vec![
                        (*d).into(),
                        n.into(),
                        w.lower.into(),
                        w.upper.into(),
                        method.into(),
                        w.radius.into(),
                        w.revalidated.into(),
                    ]);
                }
            }
            t
        }
        ComputationKind::SchemeApprox => {
            let q = scheme.expect("validated");
            let mut t = bracket_table("scheme_approx").with_meta("scheme", q.name());
            for (d, op) in &sections {
                for &n in &ns {
                    let v = scheme_approximation_number(op, n, &q, s).map_err(solver)?;
                    t.push(vec![(*d).into(), n.into(), v.lower.into(), v.upper.into(), v.method.as_str().into()]);
                }
            }
            t
        }
        ComputationKind::QDiag => {
            let q = scheme.expect("validated");
            let model = op.model().expect("validated");
            let mut t =
                Table::new("q_diagnostic", ["d", "n", "lower", "upper", "method", "certified"]).with_meta("scheme", q.name());
            for d in op.dims() {
                let r = q_compact_diagnostic(&model, &q, ns[0], d, s).map_err(solver)?;
                t.meta.insert(format!("verdict_d{d}"), r.verdict.as_str().into());
                t.meta.insert(format!("monotone_d{d}"), r.monotone.to_string());
                for row in r.rows {
                    t.push(vec![
                        d.into(),
                        row.n.into(),
                        row.lower.into(),
                        row.upper.into(),
                        row.route.into(),
                        row.certified.into(),
                    ]);
                }
            }
            t
        }
        ComputationKind::Gamma => gamma_estimate(&op.model().expect("validated"), &op.dims(), &ns, s).map_err(solver)?,
        ComputationKind::InjectionStudy => injection_gap_study(&op.dims(), ns[0], s).map_err(solver)?,
        ComputationKind::Axioms => unreachable!(),
    };
    table.meta.insert("operator".into(), format!("{name}: {}", op.describe()));
    table.meta.insert("kind".into(), c.kind.as_str().into());
    Ok(table)
}

/// All admissible approximation numbers; the singular values on
/// Euclidean spaces.
fn profile(t: &LinearOperator, s: &SolverSettings) -> snum_core::Result<Vec<snum_core::snumbers::SNumberValue>> {
    if t.is_hilbert() {
        return hilbert_profile(t);
    }
    let (m, d) = t.matrix().shape();
    (1..=m.min(d)).map(|n| SNumberKind::Approximation.compute(t, n, s)).collect()
}

fn axioms(c: &ComputationSpec, s: &SolverSettings) -> Result<Table, CliError> {
    let geometry = c.geometry.expect("validated");
    let (instances, max_dim) = match geometry {
        AxiomGeometry::Hilbert => (100, 5),
        AxiomGeometry::Polyhedral => (50, 4),
    };
    let config = AxiomSuiteConfig { max_dim: c.max_dim.unwrap_or(max_dim), geometry, tolerance: c.tolerance };
    let kind = c.number.expect("validated").kind();
    let report = axiom_suite(kind, c.instances.unwrap_or(instances), &config, s).map_err(solver)?;
    let mut t = report.to_table();
    t.meta.insert("kind".into(), "axioms".into());
    t.meta.insert("number".into(), kind.symbol().into());
    Ok(t)
}
