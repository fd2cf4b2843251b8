//! Brute-force ground truth at desk scale.
//!
//! Everything here is deliberately simple: complete vertex enumeration,
//! a dense simplex solver, a Jacobi SVD and heavily restarted rank
//! approximation. The solvers in [`crate::snumbers`] are checked against
//! these routines.

pub(crate) mod lowrank;
pub mod simplex;
pub mod svd;
pub(crate) mod width;

use serde::{Deserialize, Serialize};

use crate::linalg::{orthonormalize, projection_residual, Matrix};
use crate::spaces::{half_extreme_points, norm_upper, LinearOperator, NormExp, Vector};
use crate::{Error, Result};

pub use simplex::{LinearProgram, LpSolution, Relation};
pub use svd::{singular_values, svd, Svd};
pub use width::Chart;

/// A value together with the evidence that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub certificate: Certificate,
    /// Work counter: vertices visited, simplex pivots or restart iterations.
    pub cost: usize,
    /// `false` when a budget ran out or a self-check failed.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate {
    /// The maximising extreme point of the domain ball.
    Vertex { argmax: Vec<f64>, visited: usize },
    /// Coefficients of the nearest subspace element and, for polyhedral
    /// norms, the optimal simplex basis.
    Nearest { coefficients: Vec<f64>, basis: Vec<usize>, dual_feasible: bool },
    /// An approximant of the requested rank and the search transcript.
    Approximant { matrix: Matrix, transcript: RankTranscript },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTranscript {
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub winning_start: usize,
    pub iterations: usize,
}

/// Exact `‖T‖` by enumerating the extreme points of `B_X`.
pub fn vertex_norm_oracle(t: &LinearOperator) -> Result<OracleResult> {
    vertex_norm_oracle_capped(t, crate::VERTEX_CAP)
}

pub fn vertex_norm_oracle_capped(t: &LinearOperator, cap: usize) -> Result<OracleResult> {
    let verts = half_extreme_points(t.domain(), cap)?;
    let q = t.codomain().p();
    let mut best = (0.0, verts[0].clone());
    for v in &verts {
        let val = q.norm(&t.apply(v));
        if val > best.0 {
            best = (val, v.clone());
        }
    }
    Ok(OracleResult {
        value: best.0,
        certificate: Certificate::Vertex { argmax: best.1, visited: 2 * verts.len() },
        cost: 2 * verts.len(),
        certified: true,
    })
}

/// Exact distance from `point` to `span(frame)` in the `ℓ_q` norm.
pub fn lp_distance(point: &Vector, frame: &[Vector], q: NormExp) -> Result<OracleResult> {
    let m = point.space().dim();
    for f in frame {
        if f.space().dim() != m {
            return Err(Error::ShapeMismatch {
                expected: format!("frame vectors of dimension {m}"),
                found: format!("{}", f.space().dim()),
            });
        }
    }
    let cols: Vec<Vec<f64>> = frame.iter().map(|f| f.coords().to_vec()).collect();
    let basis = if cols.is_empty() { Matrix::zeros(m, 0) } else { orthonormalize(&Matrix::from_columns(&cols)?, 1e-10)? };
    let (value, coefficients, basis_idx, dual_feasible, cost) = nearest(point.coords(), &basis, q)?;
    Ok(OracleResult {
        value,
        certificate: Certificate::Nearest { coefficients, basis: basis_idx, dual_feasible },
        cost,
        certified: dual_feasible,
    })
}

type Nearest = (f64, Vec<f64>, Vec<usize>, bool, usize);

/// `min_c ‖p − F c‖_q` with `F` of full column rank.
fn nearest(p: &[f64], f: &Matrix, q: NormExp) -> Result<Nearest> {
    let (m, k) = f.shape();
    if k == 0 {
        return Ok((q.norm(p), Vec::new(), Vec::new(), true, 0));
    }
    match q {
        NormExp::Two => {
            let basis = orthonormalize(f, 1e-12)?;
            let resid = projection_residual(p, &basis);
            let target: Vec<f64> = p.iter().zip(&resid).map(|(a, b)| a - b).collect();
            let gram = &f.transpose() * f;
            let c = crate::linalg::solve(&gram, &f.tr_mul_vec(&target)).ok_or(Error::DegenerateFrame { residual: 0.0 })?;
            Ok((q.norm(&resid), c, Vec::new(), true, 0))
        }
        _ => {
            // variables: c (free), then one bound per residual coordinate
            let (n_aux, mut obj) = match q {
                NormExp::Inf => (1, vec![0.0; k + 1]),
                _ => (m, vec![0.0; k + m]),
            };
            obj[k..].iter_mut().for_each(|v| *v = 1.0);
            let mut lp = LinearProgram::minimize(obj);
            for j in 0..k {
                lp.set_free(j);
            }
            for i in 0..m {
                let aux = if n_aux == 1 { k } else { k + i };
                let mut up = vec![0.0; k + n_aux];
                let mut dn = vec![0.0; k + n_aux];
                for j in 0..k {
                    up[j] = f[(i, j)];
                    dn[j] = -f[(i, j)];
                }
                up[aux] = -1.0;
                dn[aux] = -1.0;
                lp.constrain(up, Relation::Le, p[i]);
                lp.constrain(dn, Relation::Le, -p[i]);
            }
            let sol = lp.solve()?;
            let c = sol.x[..k].to_vec();
            let resid: Vec<f64> = (0..m).map(|i| p[i] - (0..k).map(|j| f[(i, j)] * c[j]).sum::<f64>()).collect();
            Ok((q.norm(&resid), c, sol.basis, sol.dual_feasible, sol.pivots))
        }
    }
}

/// Coefficients of a nearest point of `span(frame)` (frame of full column
/// rank) and the attained distance, without re-orthogonalisation.
pub(crate) fn best_approximation(p: &[f64], frame: &Matrix, q: NormExp) -> Result<(f64, Vec<f64>)> {
    let (v, c, ..) = nearest(p, frame, q)?;
    Ok((v, c))
}

/// Budget for [`brute_rank_approx`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankBudget {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for RankBudget {
    /// Ten times the default solver restarts.
    fn default() -> Self {
        Self { restarts: 320, max_iters: 200, seed: 0 }
    }
}

/// Heavily restarted rank-`(n−1)` approximation of `T`.
///
/// On Euclidean spaces the result is compared with `σₙ`; a mismatch beyond
/// `1e-9` marks the result as not certified.
pub fn brute_rank_approx(t: &LinearOperator, n: usize, budget: &RankBudget) -> Result<OracleResult> {
    brute_rank_approx_seeded(t, n, budget, &[])
}

/// As [`brute_rank_approx`], with extra starting approximants.
pub fn brute_rank_approx_seeded(t: &LinearOperator, n: usize, budget: &RankBudget, seeds: &[Matrix]) -> Result<OracleResult> {
    let (m, d) = t.matrix().shape();
    let max = m.min(d) + 1;
    if n == 0 || n > max {
        return Err(Error::IndexOutOfRange { n, max });
    }
    let cfg = lowrank::RankConfig {
        restarts: budget.restarts,
        seed: budget.seed,
        stream: 0,
        max_iters: budget.max_iters,
        cap: crate::VERTEX_CAP,
    };
    let (p, q) = (t.domain().p(), t.codomain().p());
    let fit = lowrank::rank_search(t.matrix(), p, q, n - 1, seeds, &cfg);
    let mut certified = fit.value.is_finite();
    if t.is_hilbert() {
        let sv = singular_values(t.matrix())?;
        let sigma = sv.get(n - 1).copied().unwrap_or(0.0);
        certified &= (fit.value - sigma).abs() <= 1e-9;
    }
    // re-measure the approximant independently of the search
    let value = norm_upper(&(t.matrix() - &fit.approximant), p, q, crate::VERTEX_CAP);
    Ok(OracleResult {
        value,
        cost: fit.iterations,
        certified,
        certificate: Certificate::Approximant {
            matrix: fit.approximant,
            transcript: RankTranscript {
                seed: budget.seed,
                restarts: budget.restarts,
                max_iters: budget.max_iters,
                winning_start: fit.start,
                iterations: fit.iterations,
            },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::NormedSpace;

    fn vec_in(space: NormedSpace, c: &[f64]) -> Vector {
        Vector::new(space, c.to_vec()).unwrap()
    }

    #[test]
    fn vertex_oracle_examples() {
        let t =
            LinearOperator::between(Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap(), NormExp::One, NormExp::One).unwrap();
        let r = vertex_norm_oracle(&t).unwrap();
        assert_eq!(r.value, 6.0);
        let Certificate::Vertex { argmax, .. } = &r.certificate else { panic!() };
        assert_eq!(NormExp::One.norm(&t.apply(argmax)), r.value);

        let id = LinearOperator::between(Matrix::identity(3), NormExp::Inf, NormExp::One).unwrap();
        assert_eq!(vertex_norm_oracle(&id).unwrap().value, 3.0);

        let z = LinearOperator::between(Matrix::zeros(2, 3), NormExp::Inf, NormExp::Two).unwrap();
        assert_eq!(vertex_norm_oracle(&z).unwrap().value, 0.0);

        let e = LinearOperator::between(Matrix::identity(2), NormExp::Two, NormExp::Two).unwrap();
        assert!(matches!(vertex_norm_oracle(&e), Err(Error::NotPolyhedral(_))));
    }

    #[test]
    fn lp_distance_examples() {
        let s2 = NormedSpace::l2(2);
        let p = vec_in(s2, &[1.0, 1.0]);
        let f = [vec_in(s2, &[1.0, 0.0])];
        assert!((lp_distance(&p, &f, NormExp::Two).unwrap().value - 1.0).abs() < 1e-15);
        let r = lp_distance(&p, &f, NormExp::Inf).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.certified);

        let s3 = NormedSpace::l1(3);
        let p = vec_in(s3, &[3.0, 4.0, 0.0]);
        let f = [vec_in(s3, &[1.0, 0.0, 0.0]), vec_in(s3, &[0.0, 1.0, 0.0])];
        assert!(lp_distance(&p, &f, NormExp::One).unwrap().value.abs() < 1e-12);

        let dep = [vec_in(s2, &[1.0, 0.0]), vec_in(s2, &[2.0, 0.0])];
        assert!(matches!(lp_distance(&vec_in(s2, &[0.0, 1.0]), &dep, NormExp::One), Err(Error::DegenerateFrame { .. })));
    }

    #[test]
    fn lp_distance_certificate_reproduces_value() {
        let s = NormedSpace::linf(4);
        let p = vec_in(s, &[1.0, -2.0, 0.5, 3.0]);
        let f = [vec_in(s, &[1.0, 1.0, 0.0, 1.0]), vec_in(s, &[0.0, 1.0, -1.0, 2.0])];
        for q in [NormExp::One, NormExp::Inf] {
            let r = lp_distance(&p, &f, q).unwrap();
            let Certificate::Nearest { coefficients, .. } = &r.certificate else { panic!() };
            // coefficients refer to the orthonormalised frame
            let cols: Vec<Vec<f64>> = f.iter().map(|v| v.coords().to_vec()).collect();
            let basis = orthonormalize(&Matrix::from_columns(&cols).unwrap(), 1e-10).unwrap();
            let g = basis.mul_vec(coefficients);
            let resid: Vec<f64> = p.coords().iter().zip(&g).map(|(a, b)| a - b).collect();
            assert!((q.norm(&resid) - r.value).abs() <= 1e-12);
            // the Euclidean projection is one feasible candidate
            assert!(r.value <= q.norm(&projection_residual(p.coords(), &basis)) + 1e-12);
        }
    }

    #[test]
    fn brute_rank_examples() {
        let b = RankBudget { restarts: 20, ..Default::default() };
        let d = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::Two, NormExp::Two).unwrap();
        let r = brute_rank_approx(&d, 2, &b).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9 && r.certified);

        let rank1 =
            LinearOperator::between(Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap(), NormExp::One, NormExp::Inf).unwrap();
        assert!(brute_rank_approx(&rank1, 2, &b).unwrap().value < 1e-12);
        assert!(matches!(brute_rank_approx(&d, 5, &b), Err(Error::IndexOutOfRange { .. })));
    }
}
