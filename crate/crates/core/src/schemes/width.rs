use rand::Rng;
use serde::Serialize;

use super::{ApproximationScheme, Member, SchemeKind};
use crate::linalg::{combinations, Matrix};
use crate::snumbers::{approximation_number, kolmogorov_number, Method, SNumberKind, SNumberValue, SolverSettings, Witness};
use crate::spaces::{half_extreme_points, operator_norm_with, LinearOperator, NormExp, NormedSpace};
use crate::{seeded_rng, Error, Result};

/// Supports enumerated before falling back to a greedy choice.
const SUPPORT_CAP: usize = 100_000;

/// The set `D` whose generalized width is measured.
#[derive(Debug, Clone)]
pub enum WidthInput {
    /// `D` itself, in `space`.
    Points { space: NormedSpace, points: Vec<Vec<f64>> },
    /// `D = T(B_X)`.
    Operator(LinearOperator),
}

/// `δₙ(D; Q) = inf{r : D ⊆ r B + A, A ∈ Qₙ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedWidth {
    pub n: usize,
    pub scheme: String,
    pub lower: f64,
    pub upper: f64,
    /// Largest distance from a sampled point of `D` to the witness.
    pub radius: f64,
    pub witness: Member,
    /// The radius is within the reported upper end and the witness is a
    /// member of `Qₙ`.
    pub revalidated: bool,
    pub points: usize,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Points of `D` used for lower bounds and re-validation: all images of
/// extreme points for polyhedral domains, otherwise singular directions and
/// seeded random points of the Euclidean sphere.
fn sample_points(input: &WidthInput, s: &SolverSettings) -> Result<(Vec<Vec<f64>>, NormedSpace)> {
    match input {
        WidthInput::Points { space, points } => {
            if let Some(p) = points.iter().find(|p| p.len() != space.dim()) {
                return Err(Error::ShapeMismatch {
                    expected: format!("points of length {}", space.dim()),
                    found: p.len().to_string(),
                });
            }
            Ok((points.clone(), *space))
        }
        WidthInput::Operator(t) => {
            let x = t.domain();
            let pts: Vec<Vec<f64>> = if x.is_polyhedral() {
                half_extreme_points(x, s.vertex_cap)?
            } else {
                let f = crate::oracle::svd(t.matrix())?;
                let mut pts: Vec<Vec<f64>> = (0..x.dim()).map(|j| f.v.column(j)).collect();
                let mut rng = seeded_rng(s.seed, 0x7769_6474);
                for _ in 0..64 {
                    let v: Vec<f64> = (0..x.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let nrm = crate::linalg::norm2(&v);
                    if nrm > 0.0 {
                        pts.push(v.iter().map(|c| c / nrm).collect());
                    }
                }
                pts
            };
            Ok((pts.iter().map(|e| t.apply(e)).collect(), t.codomain()))
        }
    }
}

/// For operators with `ℓ₁` domain the ball image is the absolutely convex
/// hull of the columns; distances to a linear span are convex and even, so
/// this operator has the same subspace widths as the point set.
fn hull_operator(points: &[Vec<f64>], space: NormedSpace) -> Result<LinearOperator> {
    let m = Matrix::from_columns(points)?;
    LinearOperator::new(m, NormedSpace::new(points.len(), NormExp::One)?, space)
}

fn radius(points: &[Vec<f64>], a: &Member, p: NormExp) -> Result<f64> {
    points.iter().try_fold(0.0f64, |r, x| Ok(r.max(a.distance(x, p)?)))
}

fn complement_norm(x: &[f64], support: &[usize], p: NormExp) -> f64 {
    let rest: Vec<f64> = (0..x.len()).filter(|i| !support.contains(i)).map(|i| x[i]).collect();
    p.norm(&rest)
}

/// Coordinate supports of size `k`, exhaustively when there are at most
/// [`SUPPORT_CAP`] of them, otherwise the single greedy choice given by
/// `score` (larger first).
fn supports(dim: usize, k: usize, score: &[f64]) -> Vec<Vec<usize>> {
    if binomial(dim, k) <= SUPPORT_CAP {
        return combinations(dim, k);
    }
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut s = idx[..k].to_vec();
    s.sort_unstable();
    vec![s]
}

/// Generalized Kolmogorov number `δₙ(D; Q)` with a 0-based index.
///
/// For `dim_subspaces` this is the classical width with subspaces of
/// dimension at most `n`, computed by [`kolmogorov_number`] at index
/// `n + 1`. For coordinate schemes every support of the admissible size
/// is tried, and the distance to a coordinate subspace is the norm of the
/// remaining entries. The lower end is never below the largest distance
/// from a sampled point to the union of `Qₙ`.
pub fn generalized_kolmogorov(
    input: &WidthInput,
    n: usize,
    q: &ApproximationScheme,
    s: &SolverSettings,
) -> Result<GeneralizedWidth> {
    if let WidthInput::Operator(t) = input {
        if q.kind() != SchemeKind::DimSubspaces && !t.domain().is_polyhedral() {
            return Err(Error::NotPolyhedral(format!("{}", t.domain())));
        }
    }
    let (points, space) = sample_points(input, s)?;
    let p = space.p();
    let dim = space.dim();
    let pointwise = points.iter().map(|x| q.best_distance(n, x, p)).fold(0.0, f64::max);
    let largest = points.iter().map(|x| p.norm(x)).fold(0.0, f64::max);

    let (lower, upper, witness) = if n == 0 {
        (largest, largest, Member::zero(dim))
    } else if q.kind() == SchemeKind::DimSubspaces {
        let t = match input {
            WidthInput::Operator(t) => t.clone(),
            WidthInput::Points { .. } if points.is_empty() => LinearOperator::zero(NormedSpace::l1(1), space),
            WidthInput::Points { .. } => hull_operator(&points, space)?,
        };
        let (rows, cols) = t.matrix().shape();
        if n >= rows.min(cols) {
            (0.0, 0.0, Member::span(t.matrix().clone()))
        } else {
            let v = kolmogorov_number(&t, n + 1, s)?;
            let witness = match v.witness {
                Witness::Subspace { frame } => Member::span(frame),
                Witness::Approximant { matrix } => Member::span(matrix),
                Witness::Functionals { .. } => Member::zero(dim),
            };
            (v.lower, v.upper, witness)
        }
    } else if q.is_ladder() {
        (0.0, 0.0, Member::whole(dim))
    } else if q.kind() == SchemeKind::SparseSupport || q.is_exact_support() {
        if q.is_exact_support() && n > dim {
            return Err(Error::IndexOutOfRange { n, max: dim });
        }
        let k = n.min(dim);
        let score: Vec<f64> = (0..dim).map(|i| points.iter().fold(0.0f64, |m, x| m.max(x[i].abs()))).collect();
        let cands = supports(dim, k, &score);
        let exhaustive = cands.len() == binomial(dim, k);
        let mut best = (f64::INFINITY, Vec::new());
        for sup in cands {
            let r = points.iter().map(|x| complement_norm(x, &sup, p)).fold(0.0, f64::max);
            if r < best.0 {
                best = (r, sup);
            }
        }
        let lower = if exhaustive { best.0 } else { pointwise };
        (lower, best.0, Member::coordinates(dim, &best.1))
    } else {
        (0.0, largest, Member::zero(dim))
    };

    let lower = lower.max(pointwise).min(upper);
    let r = radius(&points, &witness, p)?;
    let revalidated = r <= upper + s.tol * upper.max(1.0) && q.member(n, &witness);
    Ok(GeneralizedWidth { n, scheme: q.name().to_string(), lower, upper, radius: r, witness, revalidated, points: points.len() })
}

/// `aₙ(T; Q) = inf{‖T − B‖ : the range of B lies in one member of Qₙ}`,
/// 0-based.
///
/// For `dim_subspaces` this is [`approximation_number`] at index `n + 1`.
/// For coordinate schemes the rows of `B` outside the support vanish, and
/// copying the rows of `T` inside it is optimal because `ℓ_p` norms are
/// monotone in the absolute values of coordinates; supports are
/// enumerated.
pub fn scheme_approximation_number(
    t: &LinearOperator,
    n: usize,
    q: &ApproximationScheme,
    s: &SolverSettings,
) -> Result<SNumberValue> {
    let (m, d) = t.matrix().shape();
    let kind = SNumberKind::Approximation;
    let full = |method| SNumberValue::exact(kind, n, 0.0, method, Witness::Approximant { matrix: t.matrix().clone() });
    let exact_method = if t.is_hilbert() { Method::HilbertExact } else { Method::PolyhedralExact };
    if n == 0 {
        let norm = operator_norm_with(t, &s.norm_options())?;
        let mut v = SNumberValue::exact(kind, 0, norm.upper, exact_method, Witness::Approximant { matrix: Matrix::zeros(m, d) });
        v.lower = norm.lower;
        if !norm.exact {
            v.method = Method::Heuristic;
        }
        return Ok(v);
    }
    if q.kind() == SchemeKind::DimSubspaces {
        if n >= m.min(d) {
            return Ok(full(exact_method));
        }
        let mut v = approximation_number(t, n + 1, s)?;
        v.n = n;
        return Ok(v);
    }
    if q.is_ladder() {
        return Ok(full(exact_method));
    }
    if q.kind() == SchemeKind::SparseSupport || q.is_exact_support() {
        if q.is_exact_support() && n > m {
            return Err(Error::IndexOutOfRange { n, max: m });
        }
        let k = n.min(m);
        if k == m {
            return Ok(full(exact_method));
        }
        let score: Vec<f64> = (0..m).map(|i| t.matrix().row(i).iter().fold(0.0f64, |a, x| a.max(x.abs()))).collect();
        let cands = supports(m, k, &score);
        let exhaustive = cands.len() == binomial(m, k);
        let opts = s.norm_options();
        let mut best: Option<(f64, f64, Matrix)> = None;
        let mut lower = f64::INFINITY;
        let mut all_exact = true;
        for sup in cands {
            let mut b = Matrix::zeros(m, d);
            for &i in &sup {
                for j in 0..d {
                    b[(i, j)] = t.matrix()[(i, j)];
                }
            }
            let norm = operator_norm_with(&t.with_matrix(t.matrix() - &b)?, &opts)?;
            all_exact &= norm.exact;
            lower = lower.min(norm.lower);
            if best.as_ref().map_or(true, |(u, ..)| norm.upper < *u) {
                best = Some((norm.upper, norm.lower, b));
            }
        }
        let (upper, _, b) = best.expect("at least one support");
        if !exhaustive {
            lower = 0.0;
        }
        let mut v = SNumberValue::exact(kind, n, upper, exact_method, Witness::Approximant { matrix: b });
        v.lower = lower.min(upper);
        if !(exhaustive && all_exact) {
            v.method = Method::Heuristic;
        }
        return Ok(v);
    }
    let norm = operator_norm_with(t, &s.norm_options())?;
    let mut v = SNumberValue::exact(kind, n, norm.upper, Method::Heuristic, Witness::Approximant { matrix: Matrix::zeros(m, d) });
    v.lower = 0.0;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::adjoint;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn diagonal_triple_matches_kolmogorov() {
        let pts = vec![vec![3.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]];
        let input = WidthInput::Points { space: NormedSpace::l2(3), points: pts };
        // the absolutely convex hull of the triple is the image of the ℓ₁ ball
        let diag = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::One, NormExp::Two).unwrap();
        let q = ApproximationScheme::dim_subspaces();
        for n in 0..3 {
            let w = generalized_kolmogorov(&input, n, &q, &settings()).unwrap();
            let k = kolmogorov_number(&diag, n + 1, &settings()).unwrap();
            assert!(w.lower <= k.upper + 1e-9 && k.lower <= w.upper + 1e-9, "{n}: {w:?} {k:?}");
            assert!(w.revalidated);
        }
        // best plane: normal u with 3|u₁| = 2|u₂| = |u₃|
        let w = generalized_kolmogorov(&input, 2, &q, &settings()).unwrap();
        assert!(w.lower <= 6.0 / 7.0 + 1e-9 && w.upper >= 6.0 / 7.0 - 1e-9 && w.upper - w.lower <= 1e-4, "{w:?}");
        assert_eq!(generalized_kolmogorov(&input, 0, &q, &settings()).unwrap().upper, 3.0);
    }

    #[test]
    fn containing_member_gives_zero() {
        let input = WidthInput::Points { space: NormedSpace::linf(3), points: vec![vec![1.0, -2.0, 0.5]] };
        for q in [ApproximationScheme::dim_subspaces(), ApproximationScheme::sparse_support(), ApproximationScheme::lp_ladder()] {
            let w = generalized_kolmogorov(&input, 3, &q, &settings()).unwrap();
            assert_eq!(w.upper, 0.0);
        }
    }

    #[test]
    fn cube_vertices_one_sparse() {
        let id = LinearOperator::identity(NormedSpace::linf(2));
        let w =
            generalized_kolmogorov(&WidthInput::Operator(id), 1, &ApproximationScheme::sparse_support(), &settings()).unwrap();
        assert_eq!((w.lower, w.upper), (1.0, 1.0));
        assert!(w.revalidated);
    }

    #[test]
    fn euclidean_domain_needs_subspaces() {
        let t = LinearOperator::identity(NormedSpace::l2(2));
        let q = ApproximationScheme::sparse_support();
        assert!(matches!(
            generalized_kolmogorov(&WidthInput::Operator(t.clone()), 1, &q, &settings()),
            Err(Error::NotPolyhedral(_))
        ));
        let w = generalized_kolmogorov(&WidthInput::Operator(t), 1, &ApproximationScheme::dim_subspaces(), &settings()).unwrap();
        assert!((w.upper - 1.0).abs() <= 1e-12 && w.revalidated);
    }

    #[test]
    fn widths_do_not_increase() {
        let t = LinearOperator::between(
            Matrix::from_rows(&[[1.0, 0.5, -0.2], [0.3, -0.7, 0.9], [0.4, 0.1, 0.6]]).unwrap(),
            NormExp::One,
            NormExp::Inf,
        )
        .unwrap();
        for q in [ApproximationScheme::dim_subspaces(), ApproximationScheme::sparse_support()] {
            let ws: Vec<GeneralizedWidth> =
                (0..=3).map(|n| generalized_kolmogorov(&WidthInput::Operator(t.clone()), n, &q, &settings()).unwrap()).collect();
            assert!((ws[0].upper - crate::operator_norm(&t).unwrap().upper).abs() <= 1e-12);
            for pair in ws.windows(2) {
                assert!(pair[1].lower <= pair[0].upper + 1e-9);
            }
        }
    }

    #[test]
    fn sparse_diagonal_approximation() {
        let t = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::Inf, NormExp::Inf).unwrap();
        let q = ApproximationScheme::sparse_support();
        let v = scheme_approximation_number(&t, 1, &q, &settings()).unwrap();
        assert_eq!((v.lower, v.upper), (2.0, 2.0));
        assert_eq!(v.method, Method::PolyhedralExact);
        assert_eq!(scheme_approximation_number(&t, 3, &q, &settings()).unwrap().upper, 0.0);
    }

    #[test]
    fn subspace_scheme_matches_approximation_numbers() {
        let t =
            LinearOperator::between(Matrix::from_rows(&[[2.0, 1.0, 0.0], [0.5, -1.0, 0.3]]).unwrap(), NormExp::Two, NormExp::Two)
                .unwrap();
        let q = ApproximationScheme::dim_subspaces();
        for n in 0..=2 {
            let v = scheme_approximation_number(&t, n, &q, &settings()).unwrap();
            let a = approximation_number(&t, n + 1, &settings()).unwrap();
            assert!((v.upper - a.upper).abs() <= 1e-9);
            // self-dual under transposition
            let w = scheme_approximation_number(&adjoint(&t), n, &q, &settings()).unwrap();
            assert!((v.upper - w.upper).abs() <= 1e-9);
        }
    }
}
