use crate::linalg::{combinations, Matrix};
use crate::oracle::best_approximation;
use crate::oracle::width::{minimize_over_subspaces, WidthProblem, WidthSearch};
use crate::spaces::{half_extreme_points, norm_upper, LinearOperator, NormExp};
use crate::{Error, Result};

use super::bounds::kolmogorov_lower;
use super::{method_for, trivial_value, SNumberKind, SNumberValue, SolverSettings, Witness};

/// `δₙ(T) = inf{ sup_{x ∈ B_X} dist_Y(Tx, G) : dim G < n }`.
///
/// Polyhedral codomains use the dual description
/// `sup{‖Tᵀψ‖_{X*} : ψ ∈ B_{Y*}, ψ ⊥ G}`; Euclidean codomains measure the
/// images of the extreme points of `B_X` directly. The witness subspace is
/// re-measured with the primal distance programs when `X` is polyhedral.
pub fn kolmogorov_number(t: &LinearOperator, n: usize, s: &SolverSettings) -> Result<SNumberValue> {
    let (trivial, f, norm) = trivial_value(SNumberKind::Kolmogorov, t, n, s)?;
    if let Some(v) = trivial {
        return Ok(v);
    }
    let k = n - 1;
    let m = t.codomain().dim();
    let sigma = f.values.get(n - 1).copied().unwrap_or(0.0);
    let prior = kolmogorov_lower(t, n, sigma);

    let problem = width_problem(t, norm.upper, s)?;
    let mut seeds = vec![f.u.select_cols(&(0..k).collect::<Vec<_>>())];
    for cols in combinations(m, k).into_iter().take(64) {
        seeds.push(Matrix::identity(m).select_cols(&cols));
    }
    let search = minimize_over_subspaces(&problem, k, &s.search(norm.upper), &seeds, prior);
    Ok(finish(t, search, prior, norm.upper, n, s))
}

pub(crate) fn width_problem(t: &LinearOperator, op_norm: f64, s: &SolverSettings) -> Result<WidthProblem> {
    let (p, q) = (t.domain().p(), t.codomain().p());
    if q.is_polyhedral() {
        if q == NormExp::One && t.codomain().dim() > s.vertex_cap {
            return Err(Error::VertexCapExceeded { dim: t.codomain().dim(), cap: s.vertex_cap });
        }
        return Ok(WidthProblem::Slice { op: t.matrix().transpose(), p: q.dual(), q: p.dual(), op_norm, cap: s.vertex_cap });
    }
    let points = half_extreme_points(t.domain(), s.vertex_cap)?.iter().map(|e| t.apply(e)).collect();
    Ok(WidthProblem::Projection { points })
}

/// `sup_{e ∈ ext B_X} dist_Y(Te, G)` through the primal distance programs.
pub(crate) fn primal_width(t: &LinearOperator, frame: &Matrix, s: &SolverSettings) -> Option<f64> {
    let q = t.codomain().p();
    let vertices = half_extreme_points(t.domain(), s.vertex_cap).ok()?;
    if frame.cols() == 0 {
        return Some(norm_upper(t.matrix(), t.domain().p(), q, s.vertex_cap));
    }
    let mut worst = 0.0f64;
    for e in vertices {
        let (dist, _) = best_approximation(&t.apply(&e), frame, q).ok()?;
        worst = worst.max(dist);
    }
    Some(worst)
}

fn finish(t: &LinearOperator, search: WidthSearch, prior: f64, op_norm: f64, n: usize, s: &SolverSettings) -> SNumberValue {
    let verified = primal_width(t, &search.frame, s);
    let mut upper = search.upper;
    let mut consistent = true;
    if let Some(v) = verified {
        consistent = (v - search.upper).abs() <= 1e-7 * op_norm.max(1.0);
        upper = upper.max(v);
    }
    let mut frame = search.frame;
    if op_norm < upper {
        upper = op_norm;
        frame = Matrix::zeros(t.codomain().dim(), 0);
    }
    let lower = search.lower.max(prior).min(upper);
    SNumberValue {
        kind: SNumberKind::Kolmogorov,
        n,
        lower,
        upper,
        method: method_for(lower, upper, s, op_norm),
        witness: Witness::Subspace { frame },
        consistent,
        epsilon: None,
        spread: None,
        nodes: search.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snumbers::Method;
    use crate::spaces::NormedSpace;

    fn diag(p: NormExp, q: NormExp) -> LinearOperator {
        LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), p, q).unwrap()
    }

    #[test]
    fn diagonal_on_hilbert_space() {
        let v = kolmogorov_number(&diag(NormExp::Two, NormExp::Two), 3, &SolverSettings::default()).unwrap();
        assert_eq!(v.method, Method::HilbertExact);
        assert!((v.upper - 1.0).abs() <= 1e-12 && v.width() <= 1e-9);
    }

    #[test]
    fn first_number_is_the_norm() {
        let t =
            LinearOperator::between(Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap(), NormExp::One, NormExp::One).unwrap();
        let v = kolmogorov_number(&t, 1, &SolverSettings::default()).unwrap();
        assert_eq!((v.lower, v.upper), (6.0, 6.0));
    }

    #[test]
    fn zero_operator_vanishes() {
        let t = LinearOperator::zero(NormedSpace::linf(3), NormedSpace::l1(2));
        for n in 1..=3 {
            let v = kolmogorov_number(&t, n, &SolverSettings::default()).unwrap();
            assert_eq!(v.upper, 0.0);
        }
    }

    #[test]
    fn index_range_is_checked() {
        let t = diag(NormExp::One, NormExp::Inf);
        assert!(matches!(kolmogorov_number(&t, 5, &SolverSettings::default()), Err(Error::IndexOutOfRange { n: 5, max: 4 })));
        assert!(kolmogorov_number(&t, 0, &SolverSettings::default()).is_err());
    }

    #[test]
    fn diagonal_sup_norm_widths() {
        // D(B_∞) is the box [−3,3]×[−2,2]×[−1,1]; in ℓ∞ dropping the
        // largest axes is optimal
        let t = diag(NormExp::Inf, NormExp::Inf);
        let s = SolverSettings::default();
        for (n, expect) in [(2, 2.0), (3, 1.0)] {
            let v = kolmogorov_number(&t, n, &s).unwrap();
            assert!(v.lower <= expect + 1e-9 && v.upper >= expect - 1e-9, "{v:?}");
            assert!(v.width() <= 1e-4, "{v:?}");
        }
    }

    #[test]
    fn witness_dimension() {
        let t = LinearOperator::between(
            Matrix::from_rows(&[[1.0, 0.5, -0.2], [0.3, -1.0, 0.4], [0.1, 0.2, 0.9]]).unwrap(),
            NormExp::One,
            NormExp::Two,
        )
        .unwrap();
        let v = kolmogorov_number(&t, 2, &SolverSettings::default()).unwrap();
        let Witness::Subspace { frame } = &v.witness else { panic!() };
        assert_eq!(frame.shape(), (3, 1));
        let again = primal_width(&t, frame, &SolverSettings::default()).unwrap();
        assert!(again <= v.upper + 1e-9);
    }
}
