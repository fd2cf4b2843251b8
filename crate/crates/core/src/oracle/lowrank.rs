//! Low-rank approximation in operator norms between `ℓ_p` spaces.

use rand::Rng;
use rayon::prelude::*;

use crate::linalg::Matrix;
use crate::oracle::simplex::{LinearProgram, Relation};
use crate::oracle::svd::svd;
use crate::seeded_rng;
use crate::spaces::{half_extreme_points, norm_upper, NormExp};

#[derive(Debug, Clone, Copy)]
pub(crate) struct RankConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Stream offset so independent callers do not share random starts.
    pub stream: u64,
    pub max_iters: usize,
    pub cap: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct RankFit {
    pub value: f64,
    pub approximant: Matrix,
    /// Index of the winning start (`0` is the SVD seed, then user seeds,
    /// coordinate candidates, random restarts).
    pub start: usize,
    pub iterations: usize,
}

struct Geometry<'a> {
    t: &'a Matrix,
    p: NormExp,
    q: NormExp,
    cap: usize,
    /// Half vertex sets of `B_{Y*}` and `B_X` when both are polyhedral.
    vertices: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>,
}

impl Geometry<'_> {
    fn residual(&self, a: &Matrix) -> f64 {
        norm_upper(&(self.t - a), self.p, self.q, self.cap)
    }
}

fn product(u: &Matrix, v: &Matrix) -> Matrix {
    u * &v.transpose()
}

/// `min_u max_r |h_r − w_r·u|` through its dual, which has as many rows as
/// `u` has entries.
fn chebyshev_fit(h: &[f64], w: &[Vec<f64>]) -> Option<Vec<f64>> {
    let nu = w.first()?.len();
    let nr = h.len();
    let mut cost = Vec::with_capacity(2 * nr);
    for r in 0..nr {
        cost.push(-h[r]);
        cost.push(h[r]);
    }
    let mut lp = LinearProgram::minimize(cost);
    for c in 0..nu {
        let mut row = Vec::with_capacity(2 * nr);
        for wr in w {
            row.push(wr[c]);
            row.push(-wr[c]);
        }
        lp.constrain(row, Relation::Eq, 0.0);
    }
    lp.constrain(vec![1.0; 2 * nr], Relation::Eq, 1.0);
    let sol = lp.solve().ok()?;
    if !sol.dual_feasible {
        return None;
    }
    Some(sol.duals[..nu].iter().map(|y| -y).collect())
}

/// Alternating exact Chebyshev steps on the factors of `A = U Vᵀ`.
fn alternate(g: &Geometry, mut u: Matrix, mut v: Matrix, iters: usize) -> (f64, Matrix, usize) {
    let (psi, ext) = g.vertices.as_ref().expect("polyhedral geometry");
    let r = u.cols();
    let (m, d) = g.t.shape();
    let h: Vec<f64> =
        psi.iter().flat_map(|y| ext.iter().map(move |e| (y, e))).map(|(y, e)| crate::spaces::bilinear(g.t, y, e)).collect();
    let mut best = product(&u, &v);
    let mut value = g.residual(&best);
    let mut used = 0;
    for _ in 0..iters {
        used += 1;
        let before = value;
        // U-step: ψᵀ U Vᵀ e = Σ ψ_i (Vᵀe)_c U_ic
        let ve: Vec<Vec<f64>> = ext.iter().map(|e| v.tr_mul_vec(e)).collect();
        let w: Vec<Vec<f64>> = psi
            .iter()
            .flat_map(|y| ve.iter().map(move |x| (y, x)))
            .map(|(y, x)| (0..m).flat_map(|i| x.iter().map(move |xc| y[i] * xc)).collect())
            .collect();
        if let Some(sol) = chebyshev_fit(&h, &w) {
            let cand = Matrix::from_vec(m, r, sol).expect("factor shape");
            let a = product(&cand, &v);
            let val = g.residual(&a);
            if val <= value {
                u = cand;
                value = val;
                best = a;
            }
        }
        // V-step: ψᵀ U Vᵀ e = Σ e_j (Uᵀψ)_c V_jc
        let up: Vec<Vec<f64>> = psi.iter().map(|y| u.tr_mul_vec(y)).collect();
        let w: Vec<Vec<f64>> = up
            .iter()
            .flat_map(|x| ext.iter().map(move |e| (x, e)))
            .map(|(x, e)| (0..d).flat_map(|j| x.iter().map(move |xc| e[j] * xc)).collect())
            .collect();
        if let Some(sol) = chebyshev_fit(&h, &w) {
            let cand = Matrix::from_vec(d, r, sol).expect("factor shape");
            let a = product(&u, &cand);
            let val = g.residual(&a);
            if val <= value {
                v = cand;
                value = val;
                best = a;
            }
        }
        if before - value <= 1e-15 * before.max(1.0) {
            break;
        }
    }
    (value, best, used)
}

/// Coordinate pattern search on the entries of both factors.
fn pattern(g: &Geometry, u: Matrix, v: Matrix, iters: usize) -> (f64, Matrix, usize) {
    let (m, r) = u.shape();
    let mut x: Vec<f64> = u.as_slice().iter().chain(v.as_slice()).copied().collect();
    let split = m * r;
    let eval = |x: &[f64]| {
        let uu = Matrix::from_vec(m, r, x[..split].to_vec()).expect("shape");
        let vv = Matrix::from_vec(x[split..].len() / r, r, x[split..].to_vec()).expect("shape");
        let a = product(&uu, &vv);
        (g.residual(&a), a)
    };
    let (mut fx, mut best) = eval(&x);
    let mut step = 0.25 * g.t.max_abs().max(1e-3);
    let floor = step * 1e-9;
    let mut sweeps = 0;
    while step > floor && sweeps < iters * 10 {
        sweeps += 1;
        let mut improved = false;
        for j in 0..x.len() {
            for dir in [1.0, -1.0] {
                x[j] += dir * step;
                let (fy, a) = eval(&x);
                if fy < fx - 1e-15 {
                    fx = fy;
                    best = a;
                    improved = true;
                    break;
                }
                x[j] -= dir * step;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (fx, best, sweeps)
}

/// Sequential linear programming on both factors at once: the bilinear
/// residual is linearised around `(U, V)` inside a trust region.
fn joint_polish(g: &Geometry, mut u: Matrix, mut v: Matrix, iters: usize) -> (f64, Matrix, usize) {
    let (psi, ext) = g.vertices.as_ref().expect("polyhedral geometry");
    let r = u.cols();
    let (m, d) = g.t.shape();
    let nu = m * r;
    let nv = d * r;
    let mut best = product(&u, &v);
    let mut value = g.residual(&best);
    let scale = g.t.max_abs().max(1e-3);
    let mut radius = 0.1 * scale;
    let mut used = 0;
    while used < iters && radius > 1e-11 * scale {
        used += 1;
        let mut lp = LinearProgram::minimize({
            let mut c = vec![0.0; nu + nv + 1];
            c[nu + nv] = 1.0;
            c
        });
        for j in 0..nu + nv {
            lp.set_free(j);
        }
        let ve: Vec<Vec<f64>> = ext.iter().map(|e| v.tr_mul_vec(e)).collect();
        for y in psi {
            let uy = u.tr_mul_vec(y);
            for (e, vx) in ext.iter().zip(&ve) {
                let resid = crate::spaces::bilinear(g.t, y, e) - crate::spaces::bilinear(&best, y, e);
                let mut row = vec![0.0; nu + nv + 1];
                for i in 0..m {
                    for c in 0..r {
                        row[i * r + c] = y[i] * vx[c];
                    }
                }
                for j in 0..d {
                    for c in 0..r {
                        row[nu + j * r + c] = e[j] * uy[c];
                    }
                }
                // resid − lin ≤ t and lin − resid ≤ t
                let mut lo = row.iter().map(|a| -a).collect::<Vec<_>>();
                lo[nu + nv] = -1.0;
                lp.constrain(lo, Relation::Le, -resid);
                row[nu + nv] = -1.0;
                lp.constrain(row, Relation::Le, resid);
            }
        }
        for j in 0..nu + nv {
            let mut row = vec![0.0; nu + nv + 1];
            row[j] = 1.0;
            lp.constrain(row.clone(), Relation::Le, radius);
            row[j] = -1.0;
            lp.constrain(row, Relation::Le, radius);
        }
        let Ok(sol) = lp.solve() else { break };
        let mut cu = u.clone();
        cu.as_mut_slice().iter_mut().zip(&sol.x[..nu]).for_each(|(a, b)| *a += b);
        let mut cv = v.clone();
        cv.as_mut_slice().iter_mut().zip(&sol.x[nu..nu + nv]).for_each(|(a, b)| *a += b);
        let a = product(&cu, &cv);
        let val = g.residual(&a);
        if val < value - 1e-15 * value.max(1.0) {
            value = val;
            best = a;
            u = cu;
            v = cv;
            radius = (radius * 2.0).min(scale);
        } else {
            radius *= 0.25;
        }
    }
    (value, best, used)
}

/// Alternation stalls at kinks of the max-norm; a joint pattern step can
/// move both factors at once, after which alternation resumes.
fn alternate_and_pattern<R: Rng>(g: &Geometry, u: Matrix, v: Matrix, iters: usize, rng: &mut R) -> (f64, Matrix, usize) {
    let r = u.cols();
    let (mut value, mut best, mut used) = alternate(g, u, v, iters);
    // random kicks of shrinking size around the incumbent
    let scale = g.t.max_abs().max(1e-3);
    for round in 0..8 {
        let (mut uu, mut vv) = factor(&best, r);
        let kick = 0.3 * scale * 0.5f64.powi(round / 2);
        for x in uu.as_mut_slice() {
            *x += kick * rng.gen_range(-1.0..1.0);
        }
        for x in vv.as_mut_slice() {
            *x += kick * rng.gen_range(-1.0..1.0);
        }
        let (kv, ka, ku) = alternate(g, uu, vv, iters);
        used += ku;
        if kv < value {
            value = kv;
            best = ka;
        }
    }
    let (uu, vv) = factor(&best, r);
    let (jv, ja, ju) = joint_polish(g, uu, vv, iters);
    used += ju;
    if jv < value {
        value = jv;
        best = ja;
    }
    for _ in 0..4 {
        let (uu, vv) = factor(&best, r);
        let (pv, pa, pu) = pattern(g, uu, vv, iters / 4 + 1);
        used += pu;
        if pv >= value - 1e-13 * value.max(1.0) {
            break;
        }
        let (uu, vv) = factor(&pa, r);
        let (av, aa, au) = alternate(g, uu, vv, iters);
        used += au;
        let (nv, na) = if av <= pv { (av, aa) } else { (pv, pa) };
        value = nv;
        best = na;
    }
    (value, best, used)
}

/// Rank-`r` factors of `a` from its SVD.
fn factor(a: &Matrix, r: usize) -> (Matrix, Matrix) {
    let s = svd(a).expect("SVD of a small matrix");
    let (m, d) = a.shape();
    let mut u = Matrix::zeros(m, r);
    let mut v = Matrix::zeros(d, r);
    for c in 0..r.min(s.values.len()) {
        for i in 0..m {
            u[(i, c)] = s.u[(i, c)] * s.values[c];
        }
        for j in 0..d {
            v[(j, c)] = s.v[(j, c)];
        }
    }
    (u, v)
}

/// Best rank-`r` approximation found from SVD, seeded, coordinate and random
/// starts. Starts run in parallel and are reduced in index order.
pub(crate) fn rank_search(t: &Matrix, p: NormExp, q: NormExp, r: usize, seeds: &[Matrix], cfg: &RankConfig) -> RankFit {
    let (m, d) = t.shape();
    if r == 0 {
        let value = norm_upper(t, p, q, cfg.cap);
        return RankFit { value, approximant: Matrix::zeros(m, d), start: 0, iterations: 0 };
    }
    if r >= m.min(d) {
        return RankFit { value: 0.0, approximant: t.clone(), start: 0, iterations: 0 };
    }
    let vertices = match (
        half_extreme_points(crate::NormedSpace::new(m, q.dual()).expect("dim"), cfg.cap),
        half_extreme_points(crate::NormedSpace::new(d, p).expect("dim"), cfg.cap),
    ) {
        (Ok(a), Ok(b)) => Some((a, b)),
        _ => None,
    };
    let g = Geometry { t, p, q, cap: cfg.cap, vertices };

    let mut starts: Vec<(Matrix, Matrix)> = vec![factor(t, r)];
    starts.extend(seeds.iter().filter(|s| s.shape() == (m, d)).map(|s| factor(s, r)));
    // keep r columns or r rows of T
    let scale = t.max_abs().max(1e-3);
    for cols in crate::linalg::combinations(d, r).into_iter().take(16) {
        let u = t.select_cols(&cols);
        let mut v = Matrix::zeros(d, r);
        for (c, &j) in cols.iter().enumerate() {
            v[(j, c)] = 1.0;
        }
        starts.push((u, v));
    }
    for rows in crate::linalg::combinations(m, r).into_iter().take(16) {
        let mut u = Matrix::zeros(m, r);
        for (c, &i) in rows.iter().enumerate() {
            u[(i, c)] = 1.0;
        }
        starts.push((u, t.select_rows(&rows).transpose()));
    }
    let structured = starts.len();
    let total = structured + cfg.restarts;

    let results: Vec<(f64, Matrix, usize)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rng = seeded_rng(cfg.seed, cfg.stream + idx as u64);
            let (u, v) = if idx < structured {
                starts[idx].clone()
            } else {
                let u = Matrix::from_vec(m, r, (0..m * r).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()).expect("shape");
                let v = Matrix::from_vec(d, r, (0..d * r).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("shape");
                (u, v)
            };
            if g.vertices.is_some() {
                alternate_and_pattern(&g, u, v, cfg.max_iters, &mut rng)
            } else {
                pattern(&g, u, v, cfg.max_iters)
            }
        })
        .collect();

    let mut best = RankFit { value: f64::INFINITY, approximant: Matrix::zeros(m, d), start: 0, iterations: 0 };
    let mut iterations = 0;
    for (idx, (value, a, used)) in results.into_iter().enumerate() {
        iterations += used;
        if value < best.value {
            best = RankFit { value, approximant: a, start: idx, iterations: 0 };
        }
    }
    best.iterations = iterations;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RankConfig {
        RankConfig { restarts: 8, seed: 0, stream: 0, max_iters: 100, cap: 16 }
    }

    #[test]
    fn chebyshev_fit_line() {
        // min_u max |h_r − u| over h = (0, 2) → u = 1
        let u = chebyshev_fit(&[0.0, 2.0], &[vec![1.0], vec![1.0]]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euclidean_matches_singular_values() {
        let t = Matrix::diag(&[3.0, 2.0, 1.0]);
        let fit = rank_search(&t, NormExp::Two, NormExp::Two, 1, &[], &cfg());
        assert!((fit.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_into_sup_norm_halves() {
        // ‖I − A‖_{1→∞} = max |δ_ij − A_ij| ≥ 1/2 for rank-one A in two dims
        let t = Matrix::identity(2);
        let fit = rank_search(&t, NormExp::One, NormExp::Inf, 1, &[], &cfg());
        assert!((fit.value - 0.5).abs() < 1e-9, "{}", fit.value);
        assert!(fit.approximant.rows() == 2);
    }
}
