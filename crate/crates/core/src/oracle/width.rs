//! Certified minimisation over `k`-dimensional subspaces.
//!
//! Every `k`-dimensional subspace of `ℝ^N` has a basis whose rows indexed by
//! some pivot set `S` form the identity while all other entries lie in
//! `[−1, 1]` (take `S` of maximal volume). The search therefore runs over
//! the finitely many charts `S` and the parameter cube `[−1, 1]^{k(N−k)}`,
//! using Lipschitz bounds per box to certify a lower bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{combinations, norm2, orthonormalize, projection_residual, solve, Matrix};
use crate::seeded_rng;
use crate::spaces::{exact_norm, half_sign_vectors, NormExp};

/// `sup ‖op x‖_q` over the vertices of `B_p ∩ ker F`, or the compression of
/// a finite point cloud onto a subspace in the Euclidean norm.
#[derive(Debug, Clone)]
pub(crate) enum WidthProblem {
    /// The subspace is spanned by functionals; the value is the norm of
    /// `op` restricted to their common kernel.
    Slice { op: Matrix, p: NormExp, q: NormExp, op_norm: f64, cap: usize },
    /// The value is the largest Euclidean distance from a point to the
    /// subspace.
    Projection { points: Vec<Vec<f64>> },
}

impl WidthProblem {
    pub(crate) fn ambient(&self) -> usize {
        match self {
            WidthProblem::Slice { op, .. } => op.cols(),
            WidthProblem::Projection { points } => points.first().map_or(0, |p| p.len()),
        }
    }

    /// Objective at an arbitrary full-rank frame (`ambient × k`).
    pub(crate) fn eval(&self, frame: &Matrix) -> f64 {
        match self {
            WidthProblem::Slice { op, p, q, cap, .. } => slice_value(op, *p, *q, &frame.transpose(), *cap),
            WidthProblem::Projection { points } => {
                if frame.cols() == 0 {
                    return points.iter().map(|x| norm2(x)).fold(0.0, f64::max);
                }
                let Ok(basis) = orthonormalize(frame, 1e-12) else { return f64::INFINITY };
                points.iter().map(|x| norm2(&projection_residual(x, &basis))).fold(0.0, f64::max)
            }
        }
    }

    /// Value at the box centre and a lower bound valid on the whole box.
    fn bound(&self, chart: &Chart, center: &[f64], half: &[f64]) -> (f64, f64) {
        let frame = chart.frame(center);
        // per pivot column: Σ over free rows of the half-widths
        let k = chart.pivots.len();
        let mut spread = vec![0.0; k];
        for (idx, h) in half.iter().enumerate() {
            spread[idx % k] += h;
        }
        match self {
            WidthProblem::Slice { op, op_norm, p, q, cap } => {
                let functionals = frame.transpose();
                let candidates = slice_maximisers(op, *p, *q, &functionals, *cap);
                let value = candidates.iter().map(|x| q.norm(&op.mul_vec(x))).fold(0.0, f64::max);
                let eta = p.norm(&spread);
                let mut lb = (value - op_norm * eta) / (1.0 + eta);
                for x in &candidates {
                    lb = lb.max(robust_value(op, *p, *q, chart, x, half));
                }
                (value, lb.max(0.0))
            }
            WidthProblem::Projection { points } => {
                let Ok(basis) = orthonormalize(&frame, 1e-12) else { return (f64::INFINITY, 0.0) };
                let s = norm2(&spread);
                let mut value = 0.0f64;
                let mut lb = 0.0f64;
                for x in points {
                    let d = norm2(&projection_residual(x, &basis));
                    value = value.max(d);
                    lb = lb.max(d - 2.0 * norm2(x) * s);
                }
                (value, lb.max(0.0))
            }
        }
    }
}

/// `max ‖op x‖_q` over `x ∈ B_p` with `F x = 0` (`F` has full row rank).
pub(crate) fn slice_value(op: &Matrix, p: NormExp, q: NormExp, functionals: &Matrix, cap: usize) -> f64 {
    let d = op.cols();
    let k = functionals.rows();
    if k >= d {
        return 0.0;
    }
    match p {
        NormExp::Two => {
            let basis = kernel_basis(functionals);
            let Ok(n) = orthonormalize(&basis, 1e-12) else { return f64::INFINITY };
            let tn = op * &n;
            exact_norm(&tn, NormExp::Two, q, cap).map_or(f64::INFINITY, |r| r.0)
        }
        _ => slice_vertices(functionals, p).iter().map(|x| q.norm(&op.mul_vec(x))).fold(0.0, f64::max),
    }
}

/// Points of `B_p ∩ ker F` among which `‖op x‖_q` is maximal: the slice
/// vertices, or the top singular direction when `p = 2`.
fn slice_maximisers(op: &Matrix, p: NormExp, q: NormExp, functionals: &Matrix, cap: usize) -> Vec<Vec<f64>> {
    let d = op.cols();
    if functionals.rows() >= d {
        return Vec::new();
    }
    match p {
        NormExp::Two => {
            let Ok(n) = orthonormalize(&kernel_basis(functionals), 1e-12) else { return Vec::new() };
            match exact_norm(&(op * &n), NormExp::Two, q, cap) {
                Some((_, z)) => vec![n.mul_vec(&z)],
                None => Vec::new(),
            }
        }
        _ => slice_vertices(functionals, p),
    }
}

/// Lower bound for `‖op x(M)‖_q / ‖x(M)‖_p` over the box, where `x(M)`
/// keeps the free coordinates of `x` and solves the pivot coordinates
/// from the kernel equations.
fn robust_value(op: &Matrix, p: NormExp, q: NormExp, chart: &Chart, x: &[f64], half: &[f64]) -> f64 {
    let k = chart.pivots.len();
    // worst-case movement of each pivot coordinate
    let mut wobble = vec![0.0; k];
    for (r, &o) in chart.others.iter().enumerate() {
        let xr = x[o].abs();
        for (i, w) in wobble.iter_mut().enumerate() {
            *w += half[r * k + i] * xr;
        }
    }
    let mut extent = x.iter().map(|v| v.abs()).collect::<Vec<_>>();
    for (i, &pv) in chart.pivots.iter().enumerate() {
        extent[pv] += wobble[i];
    }
    let scale = p.norm(&extent);
    if scale == 0.0 {
        return 0.0;
    }
    let y = op.mul_vec(x);
    let floor: Vec<f64> = (0..op.rows())
        .map(|j| {
            let drift: f64 = chart.pivots.iter().zip(&wobble).map(|(&pv, w)| op[(j, pv)].abs() * w).sum();
            (y[j].abs() - drift).max(0.0)
        })
        .collect();
    q.norm(&floor) / scale
}

/// One vertex from each `±` pair of `B_p ∩ ker F` for polyhedral `p`.
pub(crate) fn slice_vertices(functionals: &Matrix, p: NormExp) -> Vec<Vec<f64>> {
    let (k, d) = functionals.shape();
    let mut out = Vec::new();
    if k >= d {
        return out;
    }
    if k == 0 {
        return match p {
            NormExp::One => (0..d).map(|j| unit(d, j)).collect(),
            _ => half_sign_vectors(d).collect(),
        };
    }
    match p {
        NormExp::Inf => {
            // k free coordinates solve F_free x_free = −F_fixed s
            for free in combinations(d, k) {
                let fixed: Vec<usize> = (0..d).filter(|j| !free.contains(j)).collect();
                let a = functionals.select_cols(&free);
                let b = functionals.select_cols(&fixed);
                for s in half_sign_vectors(fixed.len()) {
                    let rhs: Vec<f64> = b.mul_vec(&s).iter().map(|v| -v).collect();
                    let Some(xf) = solve(&a, &rhs) else { break };
                    if xf.iter().all(|v| v.abs() <= 1.0 + 1e-12) {
                        let mut x = vec![0.0; d];
                        for (j, v) in fixed.iter().zip(&s) {
                            x[*j] = *v;
                        }
                        for (j, v) in free.iter().zip(&xf) {
                            x[*j] = v.clamp(-1.0, 1.0);
                        }
                        out.push(x);
                    }
                }
            }
        }
        NormExp::One => {
            // supports of size k + 1 carry a one-dimensional null space
            for support in combinations(d, k + 1) {
                if let Some(v) = null_vector(&functionals.select_cols(&support)) {
                    let l1: f64 = v.iter().map(|c| c.abs()).sum();
                    let mut x = vec![0.0; d];
                    for (j, c) in support.iter().zip(&v) {
                        x[*j] = c / l1;
                    }
                    out.push(x);
                }
            }
        }
        NormExp::Two => unreachable!("Euclidean balls have no vertices"),
    }
    out
}

/// Spanning vector of the null space of a `k × (k+1)` matrix of rank `k`.
fn null_vector(a: &Matrix) -> Option<Vec<f64>> {
    let (k, n) = a.shape();
    debug_assert_eq!(n, k + 1);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for drop in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&j| j != drop).collect();
        let sub = a.select_cols(&keep);
        let rhs: Vec<f64> = (0..k).map(|i| -a[(i, drop)]).collect();
        if let Some(sol) = solve(&sub, &rhs) {
            let mut v = vec![0.0; n];
            v[drop] = 1.0;
            for (j, s) in keep.iter().zip(sol) {
                v[*j] = s;
            }
            let resid = a.mul_vec(&v).iter().fold(0.0f64, |m, r| m.max(r.abs()));
            if resid <= 1e-9 * scale * (1.0 + v.iter().fold(0.0f64, |m, c| m.max(c.abs()))) {
                return Some(v);
            }
        }
    }
    None
}

/// Basis of `ker F` (`d × (d−k)`), assuming `F` has full row rank.
pub(crate) fn kernel_basis(functionals: &Matrix) -> Matrix {
    let (k, d) = functionals.shape();
    if k == 0 {
        return Matrix::identity(d);
    }
    let chart = Chart::fit(&functionals.transpose());
    let params = chart.params_of(&functionals.transpose());
    let mut basis = Matrix::zeros(d, d - k);
    for (r, &o) in chart.others.iter().enumerate() {
        basis[(o, r)] = 1.0;
        for (i, &pv) in chart.pivots.iter().enumerate() {
            basis[(pv, r)] = -params[r * k + i];
        }
    }
    basis
}

fn unit(d: usize, j: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    x[j] = 1.0;
    x
}

/// Pivot rows `S` of a frame; row `others[r]` column `i` holds parameter
/// `r * k + i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    pub pivots: Vec<usize>,
    pub others: Vec<usize>,
}

impl Chart {
    fn new(ambient: usize, pivots: Vec<usize>) -> Self {
        let others = (0..ambient).filter(|j| !pivots.contains(j)).collect();
        Self { pivots, others }
    }

    fn ambient(&self) -> usize {
        self.pivots.len() + self.others.len()
    }

    pub fn frame(&self, params: &[f64]) -> Matrix {
        let k = self.pivots.len();
        let mut f = Matrix::zeros(self.ambient(), k);
        for (i, &pv) in self.pivots.iter().enumerate() {
            f[(pv, i)] = 1.0;
        }
        for (r, &o) in self.others.iter().enumerate() {
            for i in 0..k {
                f[(o, i)] = params[r * k + i];
            }
        }
        f
    }

    /// Chart with a pivot block of (greedily) maximal volume.
    fn fit(frame: &Matrix) -> Self {
        let (n, k) = frame.shape();
        let mut work = frame.clone();
        let mut pivots = Vec::with_capacity(k);
        for c in 0..k {
            let (r, _) = (0..n)
                .filter(|r| !pivots.contains(r))
                .map(|r| (r, work[(r, c)].abs()))
                .fold((usize::MAX, -1.0), |b, x| if x.1 > b.1 { x } else { b });
            pivots.push(r);
            let pv = work[(r, c)];
            if pv == 0.0 {
                continue;
            }
            for rr in 0..n {
                if rr != r {
                    let f = work[(rr, c)] / pv;
                    for cc in c..k {
                        let v = work[(r, cc)];
                        work[(rr, cc)] -= f * v;
                    }
                }
            }
        }
        pivots.sort_unstable();
        Self::new(n, pivots)
    }

    /// Parameters `M` with `frame · frame_S⁻¹ = chart.frame(M)`.
    fn params_of(&self, frame: &Matrix) -> Vec<f64> {
        let k = self.pivots.len();
        let b = frame.select_rows(&self.pivots);
        let bt = b.transpose();
        let mut params = vec![0.0; self.others.len() * k];
        for (r, &o) in self.others.iter().enumerate() {
            // row_o · B⁻¹ solves Bᵀ yᵀ = row_oᵀ
            let y = solve(&bt, frame.row(o)).unwrap_or_else(|| vec![0.0; k]);
            params[r * k..(r + 1) * k].copy_from_slice(&y);
        }
        params
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchConfig {
    pub budget: usize,
    pub gap: f64,
    pub restarts: usize,
    pub seed: u64,
    pub polish_evals: usize,
    /// Largest parameter count for which the box search runs at all.
    pub max_params: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct WidthSearch {
    pub upper: f64,
    pub lower: f64,
    /// `ambient × k` frame attaining `upper`.
    pub frame: Matrix,
    pub nodes: usize,
    /// The bracket closed before the node budget ran out.
    #[cfg_attr(not(test), allow(dead_code))]
    pub converged: bool,
}

struct Node {
    lb: f64,
    seq: usize,
    chart: usize,
    center: Vec<f64>,
    half: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap on the reversed key pops the smallest bound, oldest first
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb).then(other.seq.cmp(&self.seq))
    }
}

/// Coordinate pattern search from `start`; returns the best point found.
fn polish(problem: &WidthProblem, chart: &Chart, start: &[f64], start_value: f64, evals: usize) -> (Vec<f64>, f64, usize) {
    let mut x = start.to_vec();
    let mut fx = start_value;
    let mut step = 0.25;
    let mut used = 0;
    while step > 1e-9 && used < evals {
        let mut improved = false;
        for j in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] += dir * step;
                let fy = problem.eval(&chart.frame(&y));
                used += 1;
                if fy < fx - 1e-15 {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx, used)
}

/// Minimises `problem` over all `k`-dimensional subspaces.
pub(crate) fn minimize_over_subspaces(
    problem: &WidthProblem,
    k: usize,
    cfg: &SearchConfig,
    seeds: &[Matrix],
    prior_lower: f64,
) -> WidthSearch {
    let n = problem.ambient();
    if k == 0 || k >= n {
        let frame = if k == 0 { Matrix::zeros(n, 0) } else { Matrix::identity(n) };
        let v = problem.eval(&frame);
        return WidthSearch { upper: v, lower: v, frame, nodes: 1, converged: true };
    }
    let charts: Vec<Chart> = combinations(n, k).into_iter().map(|s| Chart::new(n, s)).collect();
    let dim = k * (n - k);

    // incumbent from seeds
    let mut best = (f64::INFINITY, 0usize, vec![0.0; dim]);
    let mut nodes = 0;
    for seed in seeds {
        if seed.shape() != (n, k) {
            continue;
        }
        let chart = Chart::fit(seed);
        let Some(ci) = charts.iter().position(|c| *c == chart) else { continue };
        let params = chart.params_of(seed);
        let v = problem.eval(&chart.frame(&params));
        let (x, fx, used) = polish(problem, &chart, &params, v, cfg.polish_evals);
        nodes += used + 1;
        if fx < best.0 {
            best = (fx, ci, x);
        }
    }

    // seeded multi-start, reduced in restart order
    let starts: Vec<(f64, usize, Vec<f64>, usize)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeded_rng(cfg.seed, r as u64);
            let ci = r % charts.len();
            let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f0 = problem.eval(&charts[ci].frame(&x0));
            let (x, fx, used) = polish(problem, &charts[ci], &x0, f0, cfg.polish_evals);
            (fx, ci, x, used + 1)
        })
        .collect();
    for (fx, ci, x, used) in starts {
        nodes += used;
        if fx < best.0 {
            best = (fx, ci, x);
        }
    }

    let finish = |best: (f64, usize, Vec<f64>), lower: f64, nodes: usize, converged: bool| WidthSearch {
        upper: best.0,
        lower: lower.min(best.0),
        frame: charts[best.1].frame(&best.2),
        nodes,
        converged,
    };

    if prior_lower >= best.0 - cfg.gap {
        return finish(best, prior_lower, nodes, true);
    }
    if dim > cfg.max_params || cfg.budget == 0 {
        return finish(best, prior_lower, nodes, false);
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut pruned_min = f64::INFINITY;
    for (ci, chart) in charts.iter().enumerate() {
        let center = vec![0.0; dim];
        let half = vec![1.0; dim];
        let (v, lb) = problem.bound(chart, &center, &half);
        nodes += 1;
        if v < best.0 {
            best = (v, ci, center.clone());
        }
        heap.push(Node { lb, seq, chart: ci, center, half });
        seq += 1;
    }

    let mut converged = false;
    while let Some(node) = heap.pop() {
        if node.lb.max(prior_lower) >= best.0 - cfg.gap {
            pruned_min = pruned_min.min(node.lb);
            converged = true;
            break;
        }
        if nodes >= cfg.budget {
            heap.push(node);
            break;
        }
        let axis = node.half.iter().enumerate().fold(0, |b, (j, h)| if *h > node.half[b] { j } else { b });
        let h = node.half[axis] * 0.5;
        for dir in [-1.0, 1.0] {
            let mut center = node.center.clone();
            center[axis] += dir * h;
            let mut half = node.half.clone();
            half[axis] = h;
            let chart = &charts[node.chart];
            let (v, lb) = problem.bound(chart, &center, &half);
            nodes += 1;
            if v < best.0 {
                let (x, fx, used) = polish(problem, chart, &center, v, cfg.polish_evals / 4);
                nodes += used;
                best = (fx, node.chart, x);
            }
            if lb.max(prior_lower) >= best.0 - cfg.gap {
                pruned_min = pruned_min.min(lb);
            } else {
                heap.push(Node { lb, seq, chart: node.chart, center, half });
                seq += 1;
            }
        }
    }
    let open_min = heap.iter().map(|n| n.lb).fold(f64::INFINITY, f64::min);
    let lower = pruned_min.min(open_min).min(best.0).max(prior_lower);
    if heap.is_empty() {
        converged = true;
    }
    let converged = converged || best.0 - lower <= cfg.gap;
    finish(best, lower, nodes, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SearchConfig {
        SearchConfig { budget: 200_000, gap: 1e-6, restarts: 8, seed: 0, polish_evals: 200, max_params: 6 }
    }

    #[test]
    fn cube_slice_vertices() {
        // x1 + x2 + x3 = 0 in the cube: hexagon with 3 antipodal pairs
        let f = Matrix::from_rows(&[[1.0, 1.0, 1.0]]).unwrap();
        let v = slice_vertices(&f, NormExp::Inf);
        assert_eq!(v.len(), 3);
        for x in &v {
            assert!(x.iter().sum::<f64>().abs() < 1e-12);
            assert!(x.iter().all(|c| c.abs() <= 1.0));
        }
    }

    #[test]
    fn cross_slice_vertices() {
        let f = Matrix::from_rows(&[[1.0, 1.0, 1.0]]).unwrap();
        let v = slice_vertices(&f, NormExp::One);
        assert_eq!(v.len(), 3);
        for x in &v {
            assert!((NormExp::One.norm(x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_basis_is_annihilated() {
        let f = Matrix::from_rows(&[[1.0, 2.0, 0.5, -1.0], [0.0, 1.0, 3.0, 2.0]]).unwrap();
        let n = kernel_basis(&f);
        assert_eq!(n.shape(), (4, 2));
        assert!((&f * &n).max_abs() < 1e-12);
    }

    #[test]
    fn chart_roundtrip() {
        let frame = Matrix::from_rows(&[[0.2, 1.0], [3.0, -1.0], [0.5, 0.5]]).unwrap();
        let chart = Chart::fit(&frame);
        let params = chart.params_of(&frame);
        assert!(params.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let g = chart.frame(&params);
        let basis = orthonormalize(&g, 1e-12).unwrap();
        for c in 0..2 {
            assert!(norm2(&projection_residual(&frame.column(c), &basis)) < 1e-12);
        }
    }

    #[test]
    fn projection_width_of_diagonal_points() {
        let problem = WidthProblem::Projection { points: vec![vec![3.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]] };
        let loose = SearchConfig { gap: 1e-4, ..cfg() };
        let r = minimize_over_subspaces(&problem, 1, &loose, &[], 0.0);
        // the optimal line balances the first two points: 9(1−a) = 4a
        let expected = (36.0f64 / 13.0).sqrt();
        assert!((r.upper - expected).abs() < 1e-9, "{r:?}");
        assert!(r.converged && r.upper - r.lower <= 1e-4);
    }

    #[test]
    fn slice_search_on_diagonal_cube() {
        // max ‖diag(3,2,1) x‖∞ over the cube slice killed by one functional
        let op = Matrix::diag(&[3.0, 2.0, 1.0]);
        let problem = WidthProblem::Slice { op, p: NormExp::Inf, q: NormExp::Inf, op_norm: 3.0, cap: 16 };
        let r = minimize_over_subspaces(&problem, 1, &cfg(), &[], 0.0);
        assert!(r.converged, "{r:?}");
        assert!(r.upper - r.lower <= 1e-6);
        assert!(r.lower > 0.0 && r.upper <= 3.0);
    }
}
