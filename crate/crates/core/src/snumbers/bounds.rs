//! Certified lower bounds for s-numbers.

use crate::linalg::{combinations, Matrix};
use crate::oracle::{svd, LinearProgram, Relation};
use crate::spaces::{adjoint, half_sign_vectors, LinearOperator, NormExp};

/// Largest number of small linear programs spent on one bound.
const LP_BUDGET: usize = 4096;

/// `σₙ / (‖id: Y → ℓ₂‖ · ‖id: ℓ₂ → X‖)`, valid for every s-number.
pub fn scaled_singular_bound(t: &LinearOperator, sigma_n: f64) -> f64 {
    let (m, d) = t.matrix().shape();
    let alpha = NormExp::equivalence(m, t.codomain().p(), NormExp::Two);
    let beta = NormExp::equivalence(d, NormExp::Two, t.domain().p());
    sigma_n / (alpha * beta)
}

/// `min ‖M x‖_q` over `x` (free or non-negative) subject to `rows`.
fn min_image_norm(mat: &Matrix, q: NormExp, free: bool, rows: &[(Vec<f64>, Relation, f64)]) -> Option<f64> {
    let (m, nv) = mat.shape();
    let extra = if q == NormExp::One { m } else { 1 };
    let mut obj = vec![0.0; nv + extra];
    obj[nv..].iter_mut().for_each(|c| *c = 1.0);
    let mut lp = LinearProgram::minimize(obj);
    if free {
        for j in 0..nv {
            lp.set_free(j);
        }
    }
    for i in 0..m {
        let slot = if q == NormExp::One { nv + i } else { nv };
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; nv + extra];
            for j in 0..nv {
                c[j] = sign * mat[(i, j)];
            }
            c[slot] = -1.0;
            lp.constrain(c, Relation::Le, 0.0);
        }
    }
    for (coeffs, rel, rhs) in rows {
        let mut c = coeffs.clone();
        c.resize(nv + extra, 0.0);
        lp.constrain(c, *rel, *rhs);
    }
    lp.solve().ok().map(|s| s.objective.max(0.0))
}

/// Polyhedral norm used inside linear programs; `ℓ₂` is bounded below by
/// `ℓ∞`.
fn lp_norm(q: NormExp) -> NormExp {
    if q == NormExp::Two {
        NormExp::Inf
    } else {
        q
    }
}

/// `min ‖x‖_X` subject to `T x = v`, or `None` when `v ∉ T(X)`.
fn gauge(t: &LinearOperator, v: &[f64]) -> Option<f64> {
    let a = t.matrix();
    let (m, d) = a.shape();
    if t.domain().p() == NormExp::Two {
        // minimum-norm solution through the pseudo-inverse
        let f = svd(a).ok()?;
        let top = f.values.first().copied().unwrap_or(0.0);
        let mut x = vec![0.0; d];
        for (r, &sv) in f.values.iter().enumerate() {
            if sv <= top * 1e-12 {
                break;
            }
            let coef: f64 = (0..m).map(|i| f.u[(i, r)] * v[i]).sum::<f64>() / sv;
            for (j, xj) in x.iter_mut().enumerate() {
                *xj += coef * f.v[(j, r)];
            }
        }
        let resid = a.mul_vec(&x).iter().zip(v).fold(0.0f64, |acc, (y, w)| acc.max((y - w).abs()));
        let scale = v.iter().fold(0.0f64, |acc, w| acc.max(w.abs())).max(1.0);
        return (resid <= 1e-9 * scale).then(|| crate::linalg::norm2(&x));
    }
    let rows: Vec<(Vec<f64>, Relation, f64)> = (0..m).map(|i| (a.row(i).to_vec(), Relation::Eq, v[i])).collect();
    min_image_norm(&Matrix::identity(d), t.domain().p(), true, &rows)
}

/// Bernstein bound through coordinate sections of the codomain ball:
/// if `T(B_X) ⊇ ρ (B_Y ∩ E_R)` with `dim E_R = n`, then `δₙ(T) ≥ ρ` and
/// hence `aₙ(T) ≥ ρ`. Zero unless `Y` is polyhedral.
pub fn range_bernstein_bound(t: &LinearOperator, n: usize) -> f64 {
    let q = t.codomain().p();
    let m = t.codomain().dim();
    if !q.is_polyhedral() || n == 0 || n > m {
        return 0.0;
    }
    let sets = combinations(m, n);
    let per = if q == NormExp::Inf { 1usize << (n - 1) } else { n };
    if sets.len() * per > LP_BUDGET {
        return 0.0;
    }
    let mut best = 0.0f64;
    for r in sets {
        let vertices: Vec<Vec<f64>> = match q {
            NormExp::Inf => half_sign_vectors(n).collect(),
            _ => (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        };
        let mut worst = 0.0f64;
        for local in vertices {
            let mut v = vec![0.0; m];
            for (i, &c) in r.iter().zip(&local) {
                v[*i] = c;
            }
            match gauge(t, &v) {
                Some(g) => worst = worst.max(g),
                None => {
                    worst = f64::INFINITY;
                    break;
                }
            }
        }
        if worst.is_finite() && worst > 0.0 {
            best = best.max(1.0 / worst);
        }
    }
    best
}

/// Bernstein bound through coordinate subspaces of the domain:
/// `β_C = min{‖Tx‖ : x ∈ E_C, ‖x‖ = 1}` with `|C| = n` bounds `cₙ`, `δₙ`
/// and `aₙ` from below.
pub fn domain_bernstein_bound(t: &LinearOperator, n: usize) -> f64 {
    let (p, q) = (t.domain().p(), t.codomain().p());
    let (m, d) = t.matrix().shape();
    if n == 0 || n > d {
        return 0.0;
    }
    let sets = combinations(d, n);
    let per = match p {
        NormExp::One => 1usize << (n - 1),
        NormExp::Inf => n,
        NormExp::Two => 0,
    };
    if sets.len() * per > LP_BUDGET {
        return 0.0;
    }
    let alpha = NormExp::equivalence(m, q, NormExp::Two);
    let mut best = 0.0f64;
    for c in sets {
        let tc = t.matrix().select_cols(&c);
        let beta = match p {
            NormExp::Two => {
                if m < n {
                    0.0
                } else {
                    svd(&tc).ok().and_then(|f| f.values.last().copied()).unwrap_or(0.0) / alpha
                }
            }
            NormExp::One => {
                // the sphere is the union of simplices conv(±e_j)
                let mut low = f64::INFINITY;
                for signs in half_sign_vectors(n) {
                    let mut ms = tc.clone();
                    for i in 0..m {
                        for (j, s) in signs.iter().enumerate() {
                            ms[(i, j)] *= s;
                        }
                    }
                    let rows = vec![(vec![1.0; n], Relation::Eq, 1.0)];
                    low = low.min(min_image_norm(&ms, lp_norm(q), false, &rows).unwrap_or(0.0));
                }
                low
            }
            NormExp::Inf => {
                // the sphere is the union of facets x_j = ±1
                let mut low = f64::INFINITY;
                for j in 0..n {
                    let mut rows = Vec::new();
                    for i in 0..n {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        if i == j {
                            rows.push((e, Relation::Eq, 1.0));
                        } else {
                            rows.push((e.clone(), Relation::Le, 1.0));
                            rows.push((e, Relation::Ge, -1.0));
                        }
                    }
                    low = low.min(min_image_norm(&tc, lp_norm(q), true, &rows).unwrap_or(0.0));
                }
                low
            }
        };
        best = best.max(beta);
    }
    best
}

/// Lower bound for `δₙ(T)`. Uses `δₙ(T) = cₙ(T*)` to add the domain bound
/// of the adjoint.
pub(crate) fn kolmogorov_lower(t: &LinearOperator, n: usize, sigma_n: f64) -> f64 {
    let ta = adjoint(t);
    scaled_singular_bound(t, sigma_n)
        .max(range_bernstein_bound(t, n))
        .max(domain_bernstein_bound(t, n))
        .max(domain_bernstein_bound(&ta, n))
}

/// Lower bound for `cₙ(T) = δₙ(T*)`.
pub(crate) fn gelfand_lower(t: &LinearOperator, n: usize, sigma_n: f64) -> f64 {
    kolmogorov_lower(&adjoint(t), n, sigma_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(rows: &[[f64; 3]], p: NormExp, q: NormExp) -> LinearOperator {
        LinearOperator::between(Matrix::from_rows(rows).unwrap(), p, q).unwrap()
    }

    #[test]
    fn identity_into_sup_norm_is_half() {
        let id = LinearOperator::between(Matrix::identity(3), NormExp::One, NormExp::Inf).unwrap();
        assert!((range_bernstein_bound(&id, 2) - 0.5).abs() <= 1e-12);
        assert!((range_bernstein_bound(&id, 3) - 1.0 / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn domain_bound_on_diagonal() {
        let t = op(&[[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]], NormExp::Inf, NormExp::Inf);
        // E_{0,1}: min over the square boundary of max(3|x₀|, 2|x₁|) is 2
        assert!((domain_bernstein_bound(&t, 2) - 2.0).abs() <= 1e-12);
        let t2 = op(&[[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]], NormExp::Two, NormExp::Two);
        assert!((domain_bernstein_bound(&t2, 2) - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn gauge_detects_range() {
        let t = op(&[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]], NormExp::One, NormExp::Inf);
        assert_eq!(gauge(&t, &[1.0, -1.0, 0.0]), None);
        assert!((gauge(&t, &[1.0, 1.0, 0.0]).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn scaled_bound_constants() {
        let t = op(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], NormExp::One, NormExp::Inf);
        assert!((scaled_singular_bound(&t, 1.0) - 1.0 / 3.0).abs() <= 1e-12);
    }
}
