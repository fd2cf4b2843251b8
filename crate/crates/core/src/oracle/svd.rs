//! One-sided Jacobi (Hestenes) singular value decomposition.

use crate::linalg::{dot, norm2, Matrix};
use crate::{Error, Result};

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 50;

/// `A = U Σ Vᵀ` with `U` (`m×m`) and `V` (`n×n`) orthogonal and `values`
/// the `min(m, n)` singular values in non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub values: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    /// Sum of the leading `k` rank-one terms.
    pub fn truncate(&self, k: usize) -> Matrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = Matrix::zeros(m, n);
        for r in 0..k.min(self.values.len()) {
            let s = self.values[r];
            for i in 0..m {
                let ui = self.u[(i, r)] * s;
                if ui == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += ui * self.v[(j, r)];
                }
            }
        }
        out
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.values.iter().filter(|&&s| s > tol).count()
    }
}

pub fn svd(a: &Matrix) -> Result<Svd> {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.transpose())?;
        return Ok(Svd { u: t.v, values: t.values, v: t.u });
    }
    if n == 0 {
        return Ok(Svd { u: Matrix::identity(m), values: Vec::new(), v: Matrix::identity(0) });
    }

    // columns of the working copy, rotated until mutually orthogonal
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    // columns at roundoff level of the whole matrix are treated as zero
    let tiny = {
        let frob2: f64 = w.iter().map(|c| dot(c, c)).sum();
        frob2 * (f64::EPSILON * (m * n) as f64).powi(2)
    };
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if alpha <= tiny || beta <= tiny || gamma == 0.0 {
                    continue;
                }
                let rel = gamma.abs() / (alpha * beta).sqrt();
                off = off.max(rel);
                if rel <= OFF_DIAGONAL_TOL {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if off <= OFF_DIAGONAL_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));

    let values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = values[0];
    let cutoff = smax * 1e-14 * m as f64;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (&j, &s) in order.iter().zip(&values) {
        if s > cutoff && s > 0.0 {
            u_cols.push(w[j].iter().map(|x| x / s).collect());
        } else {
            break;
        }
    }
    complete_basis(&mut u_cols, m);

    let v_cols: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    Ok(Svd {
        u: Matrix::from_columns(&u_cols).expect("square basis"),
        values,
        v: Matrix::from_columns(&v_cols).expect("square basis"),
    })
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    let (a, b) = (&mut lo[i], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Extends orthonormal `cols` to a basis of `ℝ^m` by Gram–Schmidt on the
/// standard basis.
fn complete_basis(cols: &mut Vec<Vec<f64>>, m: usize) {
    for k in 0..m {
        if cols.len() == m {
            break;
        }
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        for _ in 0..2 {
            for c in cols.iter() {
                let p = dot(c, &e);
                e.iter_mut().zip(c).for_each(|(x, ci)| *x -= p * ci);
            }
        }
        let nrm = norm2(&e);
        if nrm > 1e-8 {
            cols.push(e.into_iter().map(|x| x / nrm).collect());
        }
    }
}

/// Singular values only.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use proptest::prelude::*;

    fn orthogonality_residual(q: &Matrix) -> f64 {
        let g = &q.transpose() * q;
        (&g - &Matrix::identity(q.cols())).max_abs()
    }

    #[test]
    fn diagonal_values() {
        let s = svd(&Matrix::diag(&[3.0, 2.0, 1.0])).unwrap();
        assert_eq!(s.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn orthogonal_matrix_has_unit_values() {
        let (c, s) = (0.6, 0.8);
        let q = Matrix::from_rows(&[[c, -s], [s, c]]).unwrap();
        for v in svd(&q).unwrap().values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nilpotent_rank_one() {
        let s = svd(&Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(s.values, vec![1.0, 0.0]);
        assert!(orthogonality_residual(&s.u) < 1e-14);
        assert!(orthogonality_residual(&s.v) < 1e-14);
    }

    #[test]
    fn wide_and_zero_matrices() {
        let z = svd(&Matrix::zeros(2, 3)).unwrap();
        assert_eq!(z.values, vec![0.0, 0.0]);
        assert_eq!(z.u.shape(), (2, 2));
        assert_eq!(z.v.shape(), (3, 3));
        assert!(orthogonality_residual(&z.v) < 1e-14);
    }

    proptest! {
        #[test]
        fn reconstruction_and_orthogonality(seed in 0u64..1000, m in 1usize..9, n in 1usize..9) {
            let a = Matrix::random(m, n, &mut seeded_rng(seed, 7));
            let s = svd(&a).unwrap();
            let scale = s.values[0].max(1.0);
            let rebuilt = s.truncate(m.min(n));
            prop_assert!((&rebuilt - &a).max_abs() <= 1e-10 * scale);
            prop_assert!(orthogonality_residual(&s.u) <= 1e-10);
            prop_assert!(orthogonality_residual(&s.v) <= 1e-10);
            prop_assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
