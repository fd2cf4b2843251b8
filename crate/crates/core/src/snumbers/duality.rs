use crate::linalg::Matrix;
use crate::oracle::{brute_rank_approx, RankBudget};
use crate::report::{Cell, Table};
use crate::spaces::{adjoint, LinearOperator, NormExp};
use crate::{Error, Result};

use super::{is_polyhedral_pair, SNumberKind, SNumberValue, SolverSettings};

/// Identities compared by [`duality_report`]: label, left side, right side,
/// and whether the identity holds for every operator.
fn identities(polyhedral: bool) -> Vec<(&'static str, (SNumberKind, bool), (SNumberKind, bool))> {
    use SNumberKind::*;
    let mut out = vec![
        ("a(T)=a(T*)", (Approximation, false), (Approximation, true)),
        ("d(T*)=d(T)", (Kolmogorov, true), (Kolmogorov, false)),
        ("c(T*)=c(T)", (Gelfand, true), (Gelfand, false)),
        ("d(T*)=c(T)", (Kolmogorov, true), (Gelfand, false)),
    ];
    if polyhedral {
        out.push(("tau(T)=tau(T*)", (Symmetrized, false), (Symmetrized, true)));
    }
    out
}

/// Compares the s-numbers of `T` and `T*` for `n = 1..=n_max`.
///
/// One row per `(n, identity)` with both brackets, the gap between them and
/// a pass flag (gap within `tol`). `expected` is false for the Kolmogorov
/// and Gelfand self-duality rows unless the domain is `ℓ₁` and the codomain
/// `ℓ∞` (or both are Euclidean), the only geometries here where those two
/// identities are guaranteed.
pub fn duality_report(t: &LinearOperator, n_max: usize, s: &SolverSettings) -> Result<Table> {
    let (m, d) = t.matrix().shape();
    let max = m.min(d) + 1;
    if n_max == 0 || n_max > max {
        return Err(Error::IndexOutOfRange { n: n_max, max });
    }
    let ta = adjoint(t);
    let polyhedral = is_polyhedral_pair(t);
    let lifting = t.is_hilbert() || (t.domain().p() == NormExp::One && t.codomain().p() == NormExp::Inf);
    let mut table = Table::new(
        "duality",
        [
            "n",
            "identity",
            "lhs_lower",
            "lhs_upper",
            "lhs_method",
            "rhs_lower",
            "rhs_upper",
            "rhs_method",
            "gap",
            "expected",
            "pass",
        ],
    )
    .with_meta("operator", format!("{} -> {}", t.domain(), t.codomain()));
    for n in 1..=n_max {
        let mut cache: Vec<((SNumberKind, bool), SNumberValue)> = Vec::new();
        let mut get = |key: (SNumberKind, bool)| -> Result<SNumberValue> {
            if let Some((_, v)) = cache.iter().find(|(k, _)| *k == key) {
                return Ok(v.clone());
            }
            let op = if key.1 { &ta } else { t };
            let v = key.0.compute(op, n, s)?;
            cache.push((key, v.clone()));
            Ok(v)
        };
        for (label, lhs, rhs) in identities(polyhedral) {
            let (l, r) = (get(lhs)?, get(rhs)?);
            let gap = l.gap(&r);
            let expected = !matches!(label, "d(T*)=d(T)" | "c(T*)=c(T)") || lifting;
            let scale = l.upper.max(r.upper).max(1.0);
            table.push(vec![
                n.into(),
                label.into(),
                l.lower.into(),
                l.upper.into(),
                l.method.as_str().into(),
                r.lower.into(),
                r.upper.into(),
                r.method.as_str().into(),
                gap.into(),
                expected.into(),
                (gap <= s.tol * scale).into(),
            ]);
        }
    }
    Ok(table)
}

/// `aₙ` of the truncated injections `I_d : ℓ₁^d → ℓ∞^d` and of their
/// adjoints, with an independent heavily restarted upper bound and the
/// monotonicity of the brackets in `d`.
pub fn injection_gap_study(d_list: &[usize], n: usize, s: &SolverSettings) -> Result<Table> {
    let mut table = Table::new(
        "injection_gap",
        [
            "d",
            "n",
            "lower",
            "upper",
            "method",
            "adjoint_lower",
            "adjoint_upper",
            "adjoint_method",
            "oracle_upper",
            "gap_lower",
            "gap_upper",
            "monotone",
        ],
    )
    .with_meta("operator", "identity l1^d -> linf^d");
    let mut previous: Option<SNumberValue> = None;
    for &d in d_list {
        let t = LinearOperator::between(Matrix::identity(d), NormExp::One, NormExp::Inf)?;
        let ta = adjoint(&t);
        let a = super::approximation_number(&t, n, s)?;
        let b = super::approximation_number(&ta, n, s)?;
        let oracle = brute_rank_approx(&t, n, &RankBudget { seed: s.seed, ..RankBudget::default() })?;
        let monotone = previous.as_ref().map_or(true, |p| p.lower <= a.upper + s.tol);
        table.push(vec![
            Cell::from(d),
            n.into(),
            a.lower.into(),
            a.upper.into(),
            a.method.as_str().into(),
            b.lower.into(),
            b.upper.into(),
            b.method.as_str().into(),
            oracle.value.into(),
            (a.lower - b.upper).into(),
            (a.upper - b.lower).into(),
            monotone.into(),
        ]);
        previous = Some(a);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::NormedSpace;

    #[test]
    fn hilbert_diagonal_has_no_gaps() {
        let t = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::Two, NormExp::Two).unwrap();
        let table = duality_report(&t, 3, &SolverSettings::default()).unwrap();
        assert_eq!(table.len(), 12);
        for r in 0..table.len() {
            assert!(table.float(r, "gap").unwrap() <= 1e-9);
            assert_eq!(table.get(r, "pass").unwrap().as_bool(), Some(true));
        }
    }

    #[test]
    fn zero_operator_is_all_zero() {
        let t = LinearOperator::zero(NormedSpace::l1(2), NormedSpace::linf(2));
        let table = duality_report(&t, 2, &SolverSettings::default()).unwrap();
        for r in 0..table.len() {
            assert_eq!(table.float(r, "lhs_upper"), Some(0.0));
            assert_eq!(table.float(r, "rhs_upper"), Some(0.0));
        }
    }

    #[test]
    fn injection_study_small() {
        let table = injection_gap_study(&[1, 2], 1, &SolverSettings::default()).unwrap();
        for r in 0..2 {
            assert_eq!(table.float(r, "upper"), Some(1.0));
            assert_eq!(table.float(r, "adjoint_upper"), Some(1.0));
        }
    }
}
