use crate::linalg::{norm2, Matrix};
use crate::spaces::{half_extreme_points, LinearOperator, NormExp, NormedSpace};
use crate::{Error, Result};

use super::{
    approximation_number, check_index, gelfand_number, is_polyhedral_pair, kolmogorov_number, trivial_value, SNumberKind,
    SNumberValue, SolverSettings,
};

/// Finite surrogate `M = J_Y T Q_X : ℓ₁^N → ℓ∞^K`.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub operator: LinearOperator,
    /// Rows are the functionals `ψ ∈ B_{Y*}` defining `J_Y` (`K × m`).
    pub inject: Matrix,
    /// Columns are the points of `B_X` defining `Q_X` (`d × N`).
    pub quotient: Matrix,
    /// `1 / (cos θ_X · cos θ_Y)`; equal to 1 for polyhedral spaces.
    pub distortion: f64,
}

/// One point per `±` pair of a grid on the boundary of the cube
/// `[−g, g]^d`, normalised to the Euclidean sphere, together with a lower
/// bound for `cos` of the largest angle from a unit vector to the net.
fn sphere_net(d: usize, g: usize) -> (Vec<Vec<f64>>, f64) {
    let side = 2 * g + 1;
    let total = side.pow(d as u32);
    let mut pts = Vec::new();
    for idx in 0..total {
        let mut r = idx;
        let v: Vec<i64> = (0..d)
            .map(|_| {
                let c = (r % side) as i64 - g as i64;
                r /= side;
                c
            })
            .collect();
        if v.iter().map(|c| c.unsigned_abs() as usize).max() != Some(g) {
            continue;
        }
        // keep the representative whose first non-zero entry is positive
        if v.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
            continue;
        }
        let x: Vec<f64> = v.iter().map(|&c| c as f64).collect();
        let n = norm2(&x);
        pts.push(x.into_iter().map(|c| c / n).collect());
    }
    let sin = 0.5 * ((d - 1) as f64).sqrt() / g as f64;
    (pts, (1.0 - sin * sin).max(0.0).sqrt())
}

fn ball_points(space: NormedSpace, s: &SolverSettings) -> Result<(Vec<Vec<f64>>, f64)> {
    match space.p() {
        NormExp::Two => match s.net_resolution {
            Some(_) if space.dim() == 1 => Ok((vec![vec![1.0]], 1.0)),
            Some(g) => Ok(sphere_net(space.dim(), g)),
            None => Err(Error::NotPolyhedral(format!("{space}"))),
        },
        _ => Ok((half_extreme_points(space, s.vertex_cap)?, 1.0)),
    }
}

/// Builds `M = J_Y T Q_X` from the extreme points of `B_{Y*}` and `B_X`, or
/// from ε-nets on Euclidean sides when the net is enabled.
pub fn surrogate(t: &LinearOperator, s: &SolverSettings) -> Result<Surrogate> {
    let (psis, cy) = ball_points(t.codomain().dual(), s)?;
    let (points, cx) = ball_points(t.domain(), s)?;
    let inject = Matrix::from_rows(&psis)?;
    let quotient = Matrix::from_columns(&points)?;
    let m = &(&inject * t.matrix()) * &quotient;
    let (k, n) = m.shape();
    let operator = LinearOperator::new(m, NormedSpace::new(n, NormExp::One)?, NormedSpace::new(k, NormExp::Inf)?)?;
    Ok(Surrogate { operator, inject, quotient, distortion: 1.0 / (cx * cy) })
}

/// `τₙ(T) = aₙ(J_Y T Q_X)`.
///
/// Polyhedral spaces give an exact surrogate, and the equivalent forms
/// `δₙ(J_Y T)` and `cₙ(T Q_X)` are computed alongside; the reported
/// bracket is their intersection and `spread` the largest gap between
/// them. With ε-nets the upper end is inflated by the net distortion.
pub fn symmetrized_number(t: &LinearOperator, n: usize, s: &SolverSettings) -> Result<SNumberValue> {
    check_index(SNumberKind::Symmetrized, t, n)?;
    if t.is_hilbert() {
        return Ok(trivial_value(SNumberKind::Symmetrized, t, n, s)?.0.expect("Hilbert path"));
    }
    let sur = surrogate(t, s)?;
    let a = approximation_number(&sur.operator, n, s)?;
    let mut v = SNumberValue { kind: SNumberKind::Symmetrized, ..a.clone() };
    if !is_polyhedral_pair(t) {
        v.upper = a.upper * sur.distortion;
        if v.width() > s.net_tolerance {
            return Err(Error::NetTooCoarse { width: v.width(), requested: s.net_tolerance });
        }
        v.method = super::Method::Heuristic;
        return Ok(v);
    }
    let jt = LinearOperator::new(&sur.inject * t.matrix(), t.domain(), sur.operator.codomain())?;
    let tq = LinearOperator::new(t.matrix() * &sur.quotient, sur.operator.domain(), t.codomain())?;
    let d = kolmogorov_number(&jt, n, s)?;
    let c = gelfand_number(&tq, n, s)?;
    let spread = a.gap(&d).max(a.gap(&c)).max(d.gap(&c));
    v.lower = a.lower.max(d.lower).max(c.lower);
    v.upper = a.upper.min(d.upper).min(c.upper).max(v.lower);
    v.spread = Some(spread);
    v.consistent = spread <= s.tol * a.upper.max(1.0);
    v.nodes = a.nodes + d.nodes + c.nodes;
    v.method = super::method_for(v.lower, v.upper, s, a.upper.max(a.lower));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{adjoint, operator_norm};

    #[test]
    fn zero_operator_vanishes() {
        let t = LinearOperator::zero(NormedSpace::linf(2), NormedSpace::l1(3));
        for n in 1..=3 {
            let v = symmetrized_number(&t, n, &SolverSettings::default()).unwrap();
            assert_eq!(v.upper, 0.0);
        }
    }

    #[test]
    fn first_number_is_the_norm() {
        let t = LinearOperator::between(
            Matrix::from_rows(&[[1.0, -0.5, 0.2], [0.3, 0.8, -0.4]]).unwrap(),
            NormExp::Inf,
            NormExp::One,
        )
        .unwrap();
        let v = symmetrized_number(&t, 1, &SolverSettings::default()).unwrap();
        let norm = operator_norm(&t).unwrap();
        assert!((v.upper - norm.upper).abs() <= 1e-9 && (v.lower - norm.lower).abs() <= 1e-9);
    }

    #[test]
    fn surrogate_shape() {
        let t = LinearOperator::between(Matrix::identity(3), NormExp::Inf, NormExp::One).unwrap();
        let sur = surrogate(&t, &SolverSettings::default()).unwrap();
        // four cube vertices on each side
        assert_eq!(sur.operator.matrix().shape(), (4, 4));
        assert_eq!(sur.distortion, 1.0);
    }

    #[test]
    fn euclidean_sides_need_the_net() {
        let t = LinearOperator::between(Matrix::identity(2), NormExp::Two, NormExp::One).unwrap();
        let s = SolverSettings::default();
        assert!(matches!(symmetrized_number(&t, 2, &s), Err(Error::NotPolyhedral(_))));
        let coarse = SolverSettings { net_resolution: Some(1), net_tolerance: 1e-6, ..s.clone() };
        assert!(matches!(symmetrized_number(&t, 1, &coarse), Err(Error::NetTooCoarse { .. })));
        let fine = SolverSettings { net_resolution: Some(8), net_tolerance: 0.05, ..s };
        let v = symmetrized_number(&t, 1, &fine).unwrap();
        // ‖id: ℓ₂² → ℓ₁²‖ = √2
        assert!(v.lower <= 2f64.sqrt() + 1e-9 && v.upper >= 2f64.sqrt() - 1e-9, "{v:?}");
    }

    #[test]
    fn net_covers_the_sphere() {
        let (pts, cos) = sphere_net(2, 4);
        assert_eq!(pts.len(), 16);
        // the worst direction lies halfway between neighbouring points
        for step in 0..360 {
            let a = (step as f64).to_radians();
            let u = [a.cos(), a.sin()];
            let best = pts.iter().map(|p| (p[0] * u[0] + p[1] * u[1]).abs()).fold(0.0, f64::max);
            assert!(best >= cos - 1e-12);
        }
    }

    #[test]
    fn diagonal_symmetry() {
        let t = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::One, NormExp::Inf).unwrap();
        let s = SolverSettings::default();
        let a = symmetrized_number(&t, 2, &s).unwrap();
        let b = symmetrized_number(&adjoint(&t), 2, &s).unwrap();
        assert!(a.gap(&b) <= 1e-9, "{a:?} {b:?}");
    }
}
