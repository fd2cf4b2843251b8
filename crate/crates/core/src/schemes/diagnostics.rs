use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{generalized_kolmogorov, shift_decompose, ApproximationScheme, ModelFamily, ModelOperator, Weights, WidthInput};
use crate::report::{format_float, Table};
use crate::snumbers::{kolmogorov_number, symmetrized_number, SolverSettings};
use crate::spaces::{adjoint, operator_norm_with, LinearOperator};
use crate::{seeded_rng, Result};

/// Ball points decomposed per index on the certificate route.
const DECOMPOSITION_SAMPLES: usize = 200;

/// Evidence threshold: `δ_{n_max} ≤ 0.01 · δ₀`.
const DECAY: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    QCompactEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::QCompactEvidence => "q_compact_evidence",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QRow {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    /// `width` (generalized Kolmogorov number of the section) or
    /// `decomposition` (shift certificates on sampled ball points).
    pub route: String,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDiagnostic {
    pub scheme: String,
    pub d: usize,
    pub rows: Vec<QRow>,
    pub monotone: bool,
    pub verdict: Verdict,
}

impl QDiagnostic {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new("q_diagnostic", ["n", "lower", "upper", "route", "certified"])
            .with_meta("scheme", self.scheme.clone())
            .with_meta("d", self.d.to_string())
            .with_meta("monotone", self.monotone.to_string())
            .with_meta("verdict", self.verdict.as_str());
        for r in &self.rows {
            t.push(vec![r.n.into(), r.lower.into(), r.upper.into(), r.route.as_str().into(), r.certified.into()]);
        }
        t
    }
}

/// Shift certificates for `m = 1..=n_max` on seeded points of the unit
/// ball of `ℓ∞^d` (the unit vectors and random points).
fn decomposition_rows(weights: &Weights, d: usize, n_max: usize, s: &SolverSettings) -> Result<Vec<QRow>> {
    let mut rng = seeded_rng(s.seed, 0x7368_6966);
    let mut samples: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            e
        })
        .collect();
    while samples.len() < DECOMPOSITION_SAMPLES.max(d) {
        samples.push((0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect());
    }
    let mut rows = Vec::new();
    for m in 1..=n_max {
        let mut certified = true;
        for x in &samples {
            certified &= shift_decompose(x, weights, m)?.is_valid();
        }
        let r = 0.5f64.powi(m as i32);
        rows.push(QRow { n: m, lower: 0.0, upper: r, route: "decomposition".into(), certified });
    }
    Ok(rows)
}

/// `δₙ(truncate(d); Q)` for `n = 0..=n_max` with a monotonicity check and a
/// decay verdict.
///
/// The truncated `ℓₙ` ladder makes every section width vanish, so a
/// weighted shift under that scheme is certified through shift
/// decompositions of sampled ball points instead, each giving radius `2⁻ᵐ`.
pub fn q_compact_diagnostic(
    model: &ModelOperator,
    q: &ApproximationScheme,
    n_max: usize,
    d: usize,
    s: &SolverSettings,
) -> Result<QDiagnostic> {
    let t = model.truncate(d)?;
    let norm = operator_norm_with(&t, &s.norm_options())?;
    let mut rows = vec![QRow { n: 0, lower: norm.lower, upper: norm.upper, route: "norm".into(), certified: norm.exact }];
    match (&model.family, q.is_ladder()) {
        (ModelFamily::WeightedShift { weights }, true) => {
            let w = Weights::new(weights.clone(), None)?;
            rows.extend(decomposition_rows(&w, d, n_max, s)?);
        }
        _ => {
            let input = WidthInput::Operator(t);
            for n in 1..=n_max {
                let w = generalized_kolmogorov(&input, n, q, s)?;
                rows.push(QRow { n, lower: w.lower, upper: w.upper, route: "width".into(), certified: w.revalidated });
            }
        }
    }
    let monotone = rows.windows(2).all(|p| p[1].lower <= p[0].upper + s.tol * p[0].upper.max(1.0));
    let first = rows[0].upper;
    let last = rows.last().expect("row for n = 0").upper;
    let verdict = if monotone && last <= DECAY * first { Verdict::QCompactEvidence } else { Verdict::Inconclusive };
    Ok(QDiagnostic { scheme: q.name().to_string(), d, rows, monotone, verdict })
}

/// Classical `δₙ` of the sections over a `d × n` grid.
///
/// The metadata carries the bracket at the largest `d` and `n` as the
/// estimate of the ball measure of non-compactness, and flags for
/// non-increase in `n` and non-decrease in `d`.
pub fn gamma_estimate(model: &ModelOperator, d_list: &[usize], n_list: &[usize], s: &SolverSettings) -> Result<Table> {
    let mut table = Table::new("gamma", ["d", "n", "lower", "upper", "method"]);
    let mut grid: Vec<(usize, usize, f64, f64)> = Vec::new();
    for &d in d_list {
        let t = model.truncate(d)?;
        for &n in n_list {
            let (lower, upper, method) = if n > d + 1 {
                (0.0, 0.0, if t.is_hilbert() { "hilbert_exact" } else { "polyhedral_exact" })
            } else {
                let v = kolmogorov_number(&t, n, s)?;
                (v.lower, v.upper, v.method.as_str())
            };
            table.push(vec![d.into(), n.into(), lower.into(), upper.into(), method.into()]);
            grid.push((d, n, lower, upper));
        }
    }
    let tol = |u: f64| s.tol * u.max(1.0);
    let mut monotone_n = true;
    let mut monotone_d = true;
    for a in &grid {
        for b in &grid {
            if a.0 == b.0 && a.1 < b.1 {
                monotone_n &= b.2 <= a.3 + tol(a.3);
            }
            if a.1 == b.1 && a.0 < b.0 {
                monotone_d &= a.2 <= b.3 + tol(b.3);
            }
        }
    }
    let estimate = grid.iter().max_by_key(|g| (g.0, g.1)).copied();
    let (gl, gu) = estimate.map_or((f64::NAN, f64::NAN), |g| (g.2, g.3));
    Ok(table
        .with_meta("gamma_lower", format_float(gl))
        .with_meta("gamma_upper", format_float(gu))
        .with_meta("monotone_in_n", monotone_n.to_string())
        .with_meta("monotone_in_d", monotone_d.to_string()))
}

/// `τₙ(T)` against `τₙ(T*)` for `n = 1..=n_max`.
pub fn tau_duality_check(t: &LinearOperator, n_max: usize, s: &SolverSettings) -> Result<Table> {
    let ta = adjoint(t);
    let mut table = Table::new(
        "tau_duality",
        ["n", "lower", "upper", "method", "adjoint_lower", "adjoint_upper", "adjoint_method", "gap", "pass"],
    );
    for n in 1..=n_max {
        let a = symmetrized_number(t, n, s)?;
        let b = symmetrized_number(&ta, n, s)?;
        let gap = a.gap(&b);
        let scale = a.upper.max(b.upper).max(1.0);
        table.push(vec![
            n.into(),
            a.lower.into(),
            a.upper.into(),
            a.method.as_str().into(),
            b.lower.into(),
            b.upper.into(),
            b.method.as_str().into(),
            gap.into(),
            (gap <= s.tol * scale).into(),
        ]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::schemes::Sequence;
    use crate::spaces::NormExp;

    #[test]
    fn shift_under_the_ladder_is_certified() {
        let model = ModelOperator::weighted_shift(Sequence::Constant { value: 1.0 });
        let r = q_compact_diagnostic(&model, &ApproximationScheme::lp_ladder(), 10, 8, &SolverSettings::default()).unwrap();
        assert_eq!(r.rows.len(), 11);
        for row in &r.rows[1..] {
            assert!(row.certified && row.upper <= 0.5f64.powi(row.n as i32));
        }
        assert_eq!(r.verdict, Verdict::QCompactEvidence);
    }

    #[test]
    fn harmonic_diagonal_follows_its_entries() {
        let model = ModelOperator::diagonal(Sequence::Harmonic, NormExp::Two);
        let r = q_compact_diagnostic(&model, &ApproximationScheme::dim_subspaces(), 5, 6, &SolverSettings::default()).unwrap();
        for row in &r.rows {
            assert!((row.upper - 1.0 / (row.n + 1) as f64).abs() <= 1e-12, "{row:?}");
        }
        assert!(r.monotone);
    }

    #[test]
    fn zero_model_vanishes() {
        let model = ModelOperator::diagonal(Sequence::Constant { value: 0.0 }, NormExp::Inf);
        let r = q_compact_diagnostic(&model, &ApproximationScheme::sparse_support(), 3, 3, &SolverSettings::default()).unwrap();
        assert!(r.rows.iter().all(|row| row.upper == 0.0));
    }

    #[test]
    fn identity_model_keeps_unit_widths() {
        let model = ModelOperator::diagonal(Sequence::Constant { value: 1.0 }, NormExp::Two);
        let t = gamma_estimate(&model, &[3, 4], &[1, 2, 3], &SolverSettings::default()).unwrap();
        for r in 0..t.len() {
            assert!((t.float(r, "upper").unwrap() - 1.0).abs() <= 1e-12);
        }
        assert_eq!(t.meta["monotone_in_n"], "true");
    }

    #[test]
    fn tau_duality_on_zero_and_diagonal() {
        let s = SolverSettings::default();
        let z = LinearOperator::between(Matrix::zeros(2, 2), NormExp::One, NormExp::Inf).unwrap();
        let t = tau_duality_check(&z, 2, &s).unwrap();
        assert!((0..t.len()).all(|r| t.float(r, "upper") == Some(0.0)));
        let d = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::One, NormExp::Inf).unwrap();
        let t = tau_duality_check(&d, 3, &s).unwrap();
        assert!((0..t.len()).all(|r| t.get(r, "pass").unwrap().as_bool() == Some(true)));
    }
}
