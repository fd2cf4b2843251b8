use crate::linalg::Matrix;
use crate::oracle::best_approximation;
use crate::oracle::lowrank::{rank_search, RankConfig};
use crate::spaces::{norm_upper, LinearOperator, NormExp};
use crate::Result;

use super::bounds::scaled_singular_bound;
use super::{
    gelfand_number, kolmogorov_number, method_for, p_of, trivial_value, SNumberKind, SNumberValue, SolverSettings, Witness,
};

/// `aₙ(T) = inf{‖T − A‖ : rank A < n}`.
///
/// The upper end is the best of the SVD truncation, approximants assembled
/// from the Kolmogorov witness (column-wise nearest points, exact for `ℓ₁`
/// domains) and the Gelfand witness (row-wise nearest functionals, exact
/// for `ℓ∞` codomains), and a multi-start low-rank search for the other
/// pairs while the bracket is open. The lower end is the largest of the Kolmogorov,
/// Gelfand and scaled singular value bounds.
pub fn approximation_number(t: &LinearOperator, n: usize, s: &SolverSettings) -> Result<SNumberValue> {
    let (trivial, f, norm) = trivial_value(SNumberKind::Approximation, t, n, s)?;
    if let Some(v) = trivial {
        return Ok(v);
    }
    let k = n - 1;
    let (p, q) = p_of(t);
    let measure = |a: &Matrix| norm_upper(&(t.matrix() - a), p, q, s.vertex_cap);

    let truncation = f.truncate(k);
    let mut best = (measure(&truncation), truncation.clone());
    let offer = |a: Matrix, best: &mut (f64, Matrix)| {
        let v = measure(&a);
        if v < best.0 {
            *best = (v, a);
        }
    };
    offer(Matrix::zeros(t.matrix().rows(), t.matrix().cols()), &mut best);

    let sigma = f.values.get(n - 1).copied().unwrap_or(0.0);
    let mut lower = scaled_singular_bound(t, sigma);
    let mut nodes = 0;
    let closed = |best: &(f64, Matrix), lower: f64| best.0 - lower <= s.refine_gap * norm.upper;
    // the exact route first; the other only when the bracket is still open
    let order: [bool; 2] = if q == NormExp::Inf && p != NormExp::One { [false, true] } else { [true, false] };
    for use_kolmogorov in order {
        if closed(&best, lower) {
            break;
        }
        if use_kolmogorov {
            let v = kolmogorov_number(t, n, s)?;
            lower = lower.max(v.lower);
            nodes += v.nodes;
            if let (NormExp::One, Witness::Subspace { frame }) = (p, &v.witness) {
                if let Some(a) = lift_columns(t, frame) {
                    offer(a, &mut best);
                }
            }
        } else {
            let v = gelfand_number(t, n, s)?;
            lower = lower.max(v.lower);
            nodes += v.nodes;
            if let (NormExp::Inf, Witness::Functionals { rows }) = (q, &v.witness) {
                if let Some(a) = extend_rows(t, rows) {
                    offer(a, &mut best);
                }
            }
        }
    }
    // with an ℓ₁ domain or ℓ∞ codomain the assembled approximant already
    // attains the width found by the subspace search
    let exact_route = p == NormExp::One || q == NormExp::Inf;
    if !exact_route && !closed(&best, lower) {
        let cfg = RankConfig { restarts: s.restarts, seed: s.seed, stream: 0, max_iters: s.max_iters, cap: s.vertex_cap };
        let seeds = [truncation, best.1.clone()];
        let fit = rank_search(t.matrix(), p, q, k, &seeds, &cfg);
        offer(fit.approximant, &mut best);
    }
    let upper = best.0.min(norm.upper);
    let lower = lower.max(0.0).min(upper);
    Ok(SNumberValue {
        kind: SNumberKind::Approximation,
        n,
        lower,
        upper,
        method: method_for(lower, upper, s, norm.upper),
        witness: Witness::Approximant { matrix: best.1 },
        consistent: true,
        epsilon: None,
        spread: None,
        nodes,
    })
}

/// `A e_j` = nearest point of `span G` to `T e_j`; `‖T − A‖_{1→q}` then
/// equals the width of `T(B_{ℓ₁})` with respect to `G`.
fn lift_columns(t: &LinearOperator, frame: &Matrix) -> Option<Matrix> {
    let (m, d) = t.matrix().shape();
    if frame.cols() == 0 {
        return Some(Matrix::zeros(m, d));
    }
    let mut a = Matrix::zeros(m, d);
    for j in 0..d {
        let (_, c) = best_approximation(&t.matrix().column(j), frame, t.codomain().p()).ok()?;
        let col = frame.mul_vec(&c);
        for i in 0..m {
            a[(i, j)] = col[i];
        }
    }
    Some(a)
}

/// Row `i` of `A` = nearest functional in the span of the witness
/// functionals to row `i` of `T`, measured in `X*`.
fn extend_rows(t: &LinearOperator, rows: &Matrix) -> Option<Matrix> {
    let (m, d) = t.matrix().shape();
    if rows.rows() == 0 {
        return Some(Matrix::zeros(m, d));
    }
    let basis = rows.transpose();
    let dual = t.domain().p().dual();
    let mut a = Matrix::zeros(m, d);
    for i in 0..m {
        let (_, c) = best_approximation(t.matrix().row(i), &basis, dual).ok()?;
        let row = basis.mul_vec(&c);
        for j in 0..d {
            a[(i, j)] = row[j];
        }
    }
    Some(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::svd;
    use crate::snumbers::Method;
    use crate::spaces::{operator_norm, NormedSpace};

    fn rank(a: &Matrix) -> usize {
        let f = svd(a).unwrap();
        let top = f.values[0].max(1e-300);
        f.values.iter().filter(|&&v| v > 1e-9 * top).count()
    }

    #[test]
    fn hilbert_examples() {
        let t = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::Two, NormExp::Two).unwrap();
        let v = approximation_number(&t, 2, &SolverSettings::default()).unwrap();
        assert_eq!(v.method, Method::HilbertExact);
        assert!((v.upper - 2.0).abs() <= 1e-12);
        let t =
            LinearOperator::between(Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap(), NormExp::Two, NormExp::Two).unwrap();
        assert!(approximation_number(&t, 2, &SolverSettings::default()).unwrap().upper <= 1e-15);
    }

    #[test]
    fn first_number_is_the_norm() {
        let t =
            LinearOperator::between(Matrix::from_rows(&[[1.0, -2.0], [0.5, 4.0]]).unwrap(), NormExp::Inf, NormExp::One).unwrap();
        let v = approximation_number(&t, 1, &SolverSettings::default()).unwrap();
        let norm = operator_norm(&t).unwrap();
        assert_eq!((v.lower, v.upper), (norm.lower, norm.upper));
    }

    #[test]
    fn identity_into_sup_norm() {
        let t = LinearOperator::between(Matrix::identity(3), NormExp::One, NormExp::Inf).unwrap();
        let v = approximation_number(&t, 2, &SolverSettings::default()).unwrap();
        assert!((v.lower - 0.5).abs() <= 1e-9 && (v.upper - 0.5).abs() <= 1e-9, "{v:?}");
        assert_eq!(v.method, Method::PolyhedralExact);
    }

    #[test]
    fn witness_revalidates() {
        let t = LinearOperator::between(
            Matrix::from_rows(&[[1.0, 0.4, -0.3], [0.2, -0.8, 0.5], [-0.6, 0.1, 0.7]]).unwrap(),
            NormExp::Inf,
            NormExp::Inf,
        )
        .unwrap();
        let s = SolverSettings::default();
        for n in 2..=3 {
            let v = approximation_number(&t, n, &s).unwrap();
            let Witness::Approximant { matrix } = &v.witness else { panic!() };
            assert!(rank(matrix) <= n - 1);
            let resid = norm_upper(&(t.matrix() - matrix), NormExp::Inf, NormExp::Inf, 16);
            assert!(resid <= v.upper + s.tol);
            assert!(v.lower <= v.upper);
        }
    }

    #[test]
    fn zero_operator() {
        let t = LinearOperator::zero(NormedSpace::l1(2), NormedSpace::linf(3));
        for n in 1..=3 {
            assert_eq!(approximation_number(&t, n, &SolverSettings::default()).unwrap().upper, 0.0);
        }
    }
}
