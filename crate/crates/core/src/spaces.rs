//! Normed sequence spaces, operators between them and operator norms.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm2, Matrix};
use crate::oracle::svd;
use crate::{seeded_rng, Error, Result, MAX_DIM, VERTEX_CAP};

/// Norm exponent of an `ℓ_p` space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NormExp {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl NormExp {
    pub fn dual(self) -> Self {
        match self {
            NormExp::One => NormExp::Inf,
            NormExp::Two => NormExp::Two,
            NormExp::Inf => NormExp::One,
        }
    }

    pub fn is_polyhedral(self) -> bool {
        self != NormExp::Two
    }

    /// `1/p`
    pub fn reciprocal(self) -> f64 {
        match self {
            NormExp::One => 1.0,
            NormExp::Two => 0.5,
            NormExp::Inf => 0.0,
        }
    }

    pub fn norm(self, x: &[f64]) -> f64 {
        match self {
            NormExp::One => x.iter().map(|v| v.abs()).sum(),
            NormExp::Two => norm2(x),
            NormExp::Inf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Smallest `C` with `‖x‖_to ≤ C ‖x‖_from` on `ℝ^dim`.
    pub fn equivalence(dim: usize, from: NormExp, to: NormExp) -> f64 {
        let e = to.reciprocal() - from.reciprocal();
        if e <= 0.0 {
            1.0
        } else {
            (dim as f64).powf(e)
        }
    }
}

impl fmt::Display for NormExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormExp::One => "1",
            NormExp::Two => "2",
            NormExp::Inf => "inf",
        })
    }
}

/// `ℝ^dim` with the `ℓ_p` norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormedSpace {
    dim: usize,
    p: NormExp,
}

impl NormedSpace {
    pub fn new(dim: usize, p: NormExp) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidDimension { dim, max: MAX_DIM });
        }
        Ok(Self { dim, p })
    }

    pub fn l1(dim: usize) -> Self {
        Self::new(dim, NormExp::One).expect("valid dimension")
    }

    pub fn l2(dim: usize) -> Self {
        Self::new(dim, NormExp::Two).expect("valid dimension")
    }

    pub fn linf(dim: usize) -> Self {
        Self::new(dim, NormExp::Inf).expect("valid dimension")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn p(&self) -> NormExp {
        self.p
    }

    pub fn dual(&self) -> Self {
        Self { dim: self.dim, p: self.p.dual() }
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.p.norm(x)
    }

    pub fn is_polyhedral(&self) -> bool {
        self.p.is_polyhedral()
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == NormExp::Two
    }
}

impl fmt::Display for NormedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}^{}", self.p, self.dim)
    }
}

/// An element of a [`NormedSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    coords: Vec<f64>,
    space: NormedSpace,
}

impl Vector {
    pub fn new(space: NormedSpace, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != space.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} coordinates", space.dim()),
                found: format!("{}", coords.len()),
            });
        }
        Ok(Self { coords, space })
    }

    pub fn zero(space: NormedSpace) -> Self {
        Self { coords: vec![0.0; space.dim()], space }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn space(&self) -> NormedSpace {
        self.space
    }
}

/// `ℓ_p` norm of `x` in its own space.
pub fn vector_norm(x: &Vector) -> f64 {
    x.space.norm(&x.coords)
}

/// A matrix together with its domain and codomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOperator {
    matrix: Matrix,
    domain: NormedSpace,
    codomain: NormedSpace,
}

impl LinearOperator {
    pub fn new(matrix: Matrix, domain: NormedSpace, codomain: NormedSpace) -> Result<Self> {
        if matrix.rows() != codomain.dim() || matrix.cols() != domain.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", codomain.dim(), domain.dim()),
                found: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        Ok(Self { matrix, domain, codomain })
    }

    /// Same matrix, `ℓ_p^d → ℓ_q^m` with dimensions read from the matrix.
    pub fn between(matrix: Matrix, p: NormExp, q: NormExp) -> Result<Self> {
        let domain = NormedSpace::new(matrix.cols(), p)?;
        let codomain = NormedSpace::new(matrix.rows(), q)?;
        Self::new(matrix, domain, codomain)
    }

    pub fn identity(space: NormedSpace) -> Self {
        Self { matrix: Matrix::identity(space.dim()), domain: space, codomain: space }
    }

    pub fn zero(domain: NormedSpace, codomain: NormedSpace) -> Self {
        Self { matrix: Matrix::zeros(codomain.dim(), domain.dim()), domain, codomain }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn domain(&self) -> NormedSpace {
        self.domain
    }

    pub fn codomain(&self) -> NormedSpace {
        self.codomain
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    /// Same spaces, different matrix.
    pub fn with_matrix(&self, matrix: Matrix) -> Result<Self> {
        Self::new(matrix, self.domain, self.codomain)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self { matrix: self.matrix.scale(alpha), ..self.clone() }
    }

    fn check_same_spaces(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::ShapeMismatch {
                expected: format!("{} -> {}", self.domain, self.codomain),
                found: format!("{} -> {}", other.domain, other.codomain),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_spaces(other)?;
        Ok(Self { matrix: &self.matrix + &other.matrix, ..self.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_spaces(other)?;
        Ok(Self { matrix: &self.matrix - &other.matrix, ..self.clone() })
    }

    /// `outer ∘ self`
    pub fn then(&self, outer: &Self) -> Result<Self> {
        if outer.domain != self.codomain {
            return Err(Error::ShapeMismatch {
                expected: format!("domain {}", self.codomain),
                found: format!("{}", outer.domain),
            });
        }
        Ok(Self { matrix: &outer.matrix * &self.matrix, domain: self.domain, codomain: outer.codomain })
    }

    pub fn is_hilbert(&self) -> bool {
        self.domain.is_hilbert() && self.codomain.is_hilbert()
    }
}

/// `T* : Y* → X*`, represented by the transpose.
pub fn adjoint(t: &LinearOperator) -> LinearOperator {
    LinearOperator { matrix: t.matrix.transpose(), domain: t.codomain.dual(), codomain: t.domain.dual() }
}

/// Two-sided enclosure of an operator norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormBracket {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    /// Unit-ball vector attaining `lower`.
    pub witness: Vector,
}

impl NormBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Tuning for [`operator_norm_with`].
#[derive(Debug, Clone, Copy)]
pub struct NormOptions {
    pub vertex_cap: usize,
    /// When an exact path is unavailable, return a bracket instead of failing.
    pub allow_bracket: bool,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { vertex_cap: VERTEX_CAP, allow_bracket: true, restarts: 32, seed: 0 }
    }
}

pub fn operator_norm(t: &LinearOperator) -> Result<NormBracket> {
    operator_norm_with(t, &NormOptions::default())
}

/// `‖T‖ = sup_{‖x‖≤1} ‖Tx‖`, exact whenever a closed form or a complete
/// vertex enumeration is available, a certified bracket otherwise.
pub fn operator_norm_with(t: &LinearOperator, opts: &NormOptions) -> Result<NormBracket> {
    let (p, q) = (t.domain.p(), t.codomain.p());
    if let Some((value, x)) = exact_norm(&t.matrix, p, q, opts.vertex_cap) {
        return Ok(NormBracket { lower: value, upper: value, exact: true, witness: Vector::new(t.domain, x)? });
    }
    if !opts.allow_bracket {
        let dim = if p == NormExp::Inf { t.domain.dim() } else { t.codomain.dim() };
        return Err(Error::VertexCapExceeded { dim, cap: opts.vertex_cap });
    }
    let (lower, x) = ascent_lower(&t.matrix, p, q, opts);
    let upper = equivalence_upper(&t.matrix, p, q).max(lower);
    Ok(NormBracket { lower, upper, exact: false, witness: Vector::new(t.domain, x)? })
}

/// Closed forms and complete enumerations; `None` when none applies.
pub(crate) fn exact_norm(a: &Matrix, p: NormExp, q: NormExp, cap: usize) -> Option<(f64, Vec<f64>)> {
    let (m, d) = a.shape();
    if m == 0 || d == 0 {
        return Some((0.0, vec![0.0; d]));
    }
    match (p, q) {
        (NormExp::One, _) => {
            let (j, v) = (0..d).map(|j| (j, q.norm(&a.column(j)))).fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            let mut x = vec![0.0; d];
            x[j] = 1.0;
            Some((v, x))
        }
        (_, NormExp::Inf) => {
            let pd = p.dual();
            let (i, v) = (0..m).map(|i| (i, pd.norm(a.row(i)))).fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            Some((v, norming_vector(a.row(i), p)))
        }
        (NormExp::Two, NormExp::Two) => {
            let s = svd(a).ok()?;
            let x = if s.values[0] > 0.0 { s.v.column(0) } else { unit(d, 0) };
            Some((s.values[0], x))
        }
        (NormExp::Inf, _) if d <= cap => {
            let mut best = (-1.0, Vec::new());
            for sign in half_sign_vectors(d) {
                let v = q.norm(&a.mul_vec(&sign));
                if v > best.0 {
                    best = (v, sign);
                }
            }
            Some(best)
        }
        (NormExp::Two, NormExp::One) if m <= cap => {
            // ‖T‖_{2→1} = ‖Tᵀ‖_{∞→2}
            let mut best = (-1.0, Vec::new());
            for sign in half_sign_vectors(m) {
                let g = a.tr_mul_vec(&sign);
                let v = norm2(&g);
                if v > best.0 {
                    best = (v, g);
                }
            }
            let (v, g) = best;
            let x = if v > 0.0 { g.iter().map(|c| c / v).collect() } else { unit(d, 0) };
            Some((v, x))
        }
        _ => None,
    }
}

/// Unit vector `x` in `ℓ_p` with `⟨f, x⟩ = ‖f‖_{p'}`.
pub(crate) fn norming_vector(f: &[f64], p: NormExp) -> Vec<f64> {
    match p {
        NormExp::Inf => f.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect(),
        NormExp::Two => {
            let n = norm2(f);
            if n == 0.0 {
                unit(f.len(), 0)
            } else {
                f.iter().map(|v| v / n).collect()
            }
        }
        NormExp::One => {
            let (j, _) = f.iter().enumerate().fold((0, -1.0), |b, (j, v)| if v.abs() > b.1 { (j, v.abs()) } else { b });
            let mut x = vec![0.0; f.len()];
            x[j] = if f[j] < 0.0 { -1.0 } else { 1.0 };
            x
        }
    }
}

fn unit(d: usize, j: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    x[j] = 1.0;
    x
}

/// The `2^(dim-1)` sign vectors with a leading `+1`.
pub(crate) fn half_sign_vectors(dim: usize) -> impl Iterator<Item = Vec<f64>> {
    let count = 1usize << (dim - 1);
    (0..count).map(move |mask| {
        let mut s = vec![1.0; dim];
        for (j, sj) in s.iter_mut().enumerate().skip(1) {
            if mask >> (j - 1) & 1 == 1 {
                *sj = -1.0;
            }
        }
        s
    })
}

/// One representative of each `±` pair of extreme points of the unit ball.
pub(crate) fn half_extreme_points(space: NormedSpace, cap: usize) -> Result<Vec<Vec<f64>>> {
    match space.p() {
        NormExp::One => Ok((0..space.dim()).map(|j| unit(space.dim(), j)).collect()),
        NormExp::Inf => {
            if space.dim() > cap {
                return Err(Error::VertexCapExceeded { dim: space.dim(), cap });
            }
            Ok(half_sign_vectors(space.dim()).collect())
        }
        NormExp::Two => Err(Error::NotPolyhedral(format!("{space}"))),
    }
}

/// All extreme points of the closed unit ball of a polyhedral space.
pub fn extreme_points(space: NormedSpace) -> Result<Vec<Vector>> {
    extreme_points_capped(space, VERTEX_CAP)
}

pub fn extreme_points_capped(space: NormedSpace, cap: usize) -> Result<Vec<Vector>> {
    let half = half_extreme_points(space, cap)?;
    let mut out = Vec::with_capacity(2 * half.len());
    for e in half {
        let neg: Vec<f64> = e.iter().map(|v| -v).collect();
        out.push(Vector::new(space, e)?);
        out.push(Vector::new(space, neg)?);
    }
    Ok(out)
}

fn ascent_lower(a: &Matrix, p: NormExp, q: NormExp, opts: &NormOptions) -> (f64, Vec<f64>) {
    let d = a.cols();
    let mut best = (0.0, vec![0.0; d]);
    for r in 0..opts.restarts.max(1) {
        let mut rng = seeded_rng(opts.seed, r as u64);
        let (v, x) = match p {
            NormExp::Inf => {
                let mut s: Vec<f64> = (0..d).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
                let mut y = a.mul_vec(&s);
                let mut cur = q.norm(&y);
                loop {
                    let mut improved = false;
                    for j in 0..d {
                        let delta = -2.0 * s[j];
                        let trial: Vec<f64> = y.iter().enumerate().map(|(i, yi)| yi + delta * a[(i, j)]).collect();
                        let v = q.norm(&trial);
                        if v > cur * (1.0 + 1e-15) {
                            s[j] = -s[j];
                            y = trial;
                            cur = v;
                            improved = true;
                        }
                    }
                    if !improved {
                        break;
                    }
                }
                (cur, s)
            }
            _ => {
                // alternate between a norming functional of Tx and the
                // dual-norm maximiser of Tᵀψ
                let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = p.norm(&x).max(f64::MIN_POSITIVE);
                x.iter_mut().for_each(|v| *v /= n);
                let mut cur = q.norm(&a.mul_vec(&x));
                for _ in 0..200 {
                    let psi = norming_vector(&a.mul_vec(&x), q.dual());
                    let g = a.tr_mul_vec(&psi);
                    let nx = norming_vector(&g, p);
                    let v = q.norm(&a.mul_vec(&nx));
                    if v <= cur * (1.0 + 1e-14) {
                        break;
                    }
                    x = nx;
                    cur = v;
                }
                (cur, x)
            }
        };
        if v > best.0 {
            best = (v, x);
        }
    }
    best
}

/// `min ‖id: X → X'‖ · ‖T‖_{X'→Y'} · ‖id: Y' → Y‖` over the exact cases.
pub(crate) fn equivalence_upper(a: &Matrix, p: NormExp, q: NormExp) -> f64 {
    let (m, d) = a.shape();
    let all = [NormExp::One, NormExp::Two, NormExp::Inf];
    let mut best = f64::INFINITY;
    for &pp in &all {
        for &qq in &all {
            let cheap = pp == NormExp::One || qq == NormExp::Inf || (pp == NormExp::Two && qq == NormExp::Two);
            if !cheap {
                continue;
            }
            if let Some((v, _)) = exact_norm(a, pp, qq, 0) {
                let c = NormExp::equivalence(d, p, pp) * v * NormExp::equivalence(m, qq, q);
                best = best.min(c);
            }
        }
    }
    best
}

/// Certified upper bound on `‖A‖_{p→q}`, exact whenever possible.
pub(crate) fn norm_upper(a: &Matrix, p: NormExp, q: NormExp, cap: usize) -> f64 {
    match exact_norm(a, p, q, cap) {
        Some((v, _)) => v,
        None => equivalence_upper(a, p, q),
    }
}

/// Helper for tests and callers needing `⟨ψ, T x⟩`.
pub fn bilinear(a: &Matrix, psi: &[f64], x: &[f64]) -> f64 {
    dot(psi, &a.mul_vec(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(rows: &[[f64; 2]], p: NormExp, q: NormExp) -> LinearOperator {
        LinearOperator::between(Matrix::from_rows(rows).unwrap(), p, q).unwrap()
    }

    #[test]
    fn vector_norm_examples() {
        let v = [1.0, -2.0, 2.0];
        assert_eq!(vector_norm(&Vector::new(NormedSpace::l2(3), v.to_vec()).unwrap()), 3.0);
        assert_eq!(vector_norm(&Vector::new(NormedSpace::l1(3), v.to_vec()).unwrap()), 5.0);
        assert_eq!(vector_norm(&Vector::zero(NormedSpace::linf(3))), 0.0);
        assert!(Vector::new(NormedSpace::l1(2), vec![1.0]).is_err());
    }

    #[test]
    fn space_invariants() {
        assert!(NormedSpace::new(0, NormExp::One).is_err());
        for p in [NormExp::One, NormExp::Two, NormExp::Inf] {
            let s = NormedSpace::new(3, p).unwrap();
            assert_eq!(s.dual().dual(), s);
        }
        assert_eq!(NormedSpace::l1(2).dual(), NormedSpace::linf(2));
    }

    #[test]
    fn adjoint_transposes_between_duals() {
        let t = op(&[[1.0, 2.0], [3.0, 4.0]], NormExp::One, NormExp::Inf);
        let ts = adjoint(&t);
        assert_eq!(ts.matrix().to_rows(), vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        assert_eq!(ts.domain(), NormedSpace::l1(2));
        assert_eq!(ts.codomain(), NormedSpace::linf(2));
        assert_eq!(adjoint(&ts), t);
        let sym = op(&[[2.0, 1.0], [1.0, 5.0]], NormExp::Two, NormExp::Two);
        assert_eq!(adjoint(&sym), sym);
    }

    #[test]
    fn operator_norm_examples() {
        let id = LinearOperator::between(Matrix::identity(2), NormExp::Inf, NormExp::One).unwrap();
        let b = operator_norm(&id).unwrap();
        assert!(b.exact && b.lower == 2.0);

        let t = op(&[[1.0, 2.0], [3.0, 4.0]], NormExp::One, NormExp::One);
        assert_eq!(operator_norm(&t).unwrap().upper, 6.0);

        let d = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::Two, NormExp::Two).unwrap();
        let b = operator_norm(&d).unwrap();
        assert!(b.exact && (b.upper - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_path_when_vertex_cap_is_zero() {
        let mut rng = seeded_rng(3, 0);
        let t = LinearOperator::between(Matrix::random(4, 5, &mut rng), NormExp::Inf, NormExp::Two).unwrap();
        let exact = operator_norm(&t).unwrap();
        let opts = NormOptions { vertex_cap: 2, ..Default::default() };
        let b = operator_norm_with(&t, &opts).unwrap();
        assert!(!b.exact);
        assert!(b.lower <= exact.upper + 1e-12 && exact.upper <= b.upper + 1e-12);
        let strict = NormOptions { allow_bracket: false, ..opts };
        assert!(matches!(operator_norm_with(&t, &strict), Err(Error::VertexCapExceeded { .. })));
    }

    #[test]
    fn extreme_point_sets() {
        let e1 = extreme_points(NormedSpace::l1(2)).unwrap();
        let coords: Vec<Vec<f64>> = e1.iter().map(|v| v.coords().to_vec()).collect();
        assert_eq!(coords, vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        assert_eq!(extreme_points(NormedSpace::linf(2)).unwrap().len(), 4);
        assert!(matches!(extreme_points(NormedSpace::l2(2)), Err(Error::NotPolyhedral(_))));
        assert!(matches!(extreme_points(NormedSpace::linf(VERTEX_CAP + 1)), Err(Error::VertexCapExceeded { .. })));
    }
}
