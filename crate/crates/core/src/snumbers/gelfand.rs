use rand::Rng;

use crate::linalg::Matrix;
use crate::oracle::width::{kernel_basis, minimize_over_subspaces, WidthProblem};
use crate::oracle::{LinearProgram, Relation};
use crate::spaces::{half_extreme_points, LinearOperator, NormExp};
use crate::{seeded_rng, Error, Result};

use super::bounds::gelfand_lower;
use super::{is_polyhedral_pair, method_for, trivial_value, SNumberKind, SNumberValue, SolverSettings, Witness};

/// Largest multiplier tried when closing the ε-form onto the kernel form.
const LAMBDA_CAP: f64 = (1u64 << 40) as f64;

/// `cₙ(T) = inf{ ‖T|_{ker a₁ ∩ … ∩ ker a_k}‖ : k < n }`.
///
/// The ε-inequality form `‖Tx‖ ≤ maxᵢ |⟨x, aᵢ⟩| + ε‖x‖` is evaluated at
/// the witness functionals (scaled until it meets the kernel form) and the
/// larger of the two values is reported.
pub fn gelfand_number(t: &LinearOperator, n: usize, s: &SolverSettings) -> Result<SNumberValue> {
    let (trivial, f, norm) = trivial_value(SNumberKind::Gelfand, t, n, s)?;
    if let Some(mut v) = trivial {
        v.epsilon = Some(v.upper);
        return Ok(v);
    }
    let k = n - 1;
    let (p, q) = (t.domain().p(), t.codomain().p());
    if p == NormExp::Inf && t.domain().dim() > s.vertex_cap {
        return Err(Error::VertexCapExceeded { dim: t.domain().dim(), cap: s.vertex_cap });
    }
    let sigma = f.values.get(n - 1).copied().unwrap_or(0.0);
    let prior = gelfand_lower(t, n, sigma);
    let problem = WidthProblem::Slice { op: t.matrix().clone(), p, q, op_norm: norm.upper, cap: s.vertex_cap };
    let seeds = vec![f.v.select_cols(&(0..k).collect::<Vec<_>>())];
    let search = minimize_over_subspaces(&problem, k, &s.search(norm.upper), &seeds, prior);

    let mut rows = search.frame.transpose();
    let mut upper = search.upper;
    let (epsilon, consistent) = if is_polyhedral_pair(t) {
        let (eps, _) = close_epsilon_form(t, &rows, upper, s)?;
        let ok = eps <= upper + s.tol * upper.max(1.0);
        upper = upper.max(eps);
        (eps, ok)
    } else {
        let eps = sampled_epsilon_form(t, &rows, s);
        (eps, eps <= upper + s.tol * upper.max(1.0))
    };
    if norm.upper < upper {
        upper = norm.upper;
        rows = Matrix::zeros(0, t.domain().dim());
    }
    let lower = search.lower.max(prior).min(upper);
    Ok(SNumberValue {
        kind: SNumberKind::Gelfand,
        n,
        lower,
        upper,
        method: method_for(lower, upper, s, norm.upper),
        witness: Witness::Functionals { rows },
        consistent,
        epsilon: Some(epsilon),
        spread: None,
        nodes: search.nodes,
    })
}

/// Smallest `ε ≥ 0` with `‖Tx‖_Y ≤ maxᵢ |⟨x, aᵢ⟩| + ε‖x‖_X` for all `x`,
/// for the functionals given as the rows of `functionals`. Polyhedral
/// spaces only: one linear program per extreme point of `B_{Y*}`.
pub fn epsilon_form(t: &LinearOperator, functionals: &Matrix) -> Result<f64> {
    if !is_polyhedral_pair(t) {
        return Err(Error::NotPolyhedral(format!("{} → {}", t.domain(), t.codomain())));
    }
    let (k, d) = functionals.shape();
    if d != t.domain().dim() {
        return Err(Error::ShapeMismatch { expected: format!("k × {}", t.domain().dim()), found: format!("{k} × {d}") });
    }
    let p = t.domain().p();
    let psis = half_extreme_points(t.codomain().dual(), usize::MAX)?;
    let mut best = 0.0f64;
    for psi in psis {
        let g = t.matrix().tr_mul_vec(&psi);
        best = best.max(tilted_max(&g, functionals, p)?);
    }
    Ok(best)
}

/// `max ⟨g, x⟩ − maxᵢ |⟨aᵢ, x⟩|` over `x ∈ B_p`.
fn tilted_max(g: &[f64], a: &Matrix, p: NormExp) -> Result<f64> {
    let (k, d) = a.shape();
    // variables: x (free, d), s ≥ 0, and for p = 1 the split |x| ≤ u
    let aux = if p == NormExp::One { d } else { 0 };
    let nv = d + 1 + aux;
    let mut obj = vec![0.0; nv];
    for j in 0..d {
        obj[j] = -g[j];
    }
    obj[d] = 1.0;
    let mut lp = LinearProgram::minimize(obj);
    for j in 0..d {
        lp.set_free(j);
    }
    for i in 0..k {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; nv];
            for j in 0..d {
                c[j] = sign * a[(i, j)];
            }
            c[d] = -1.0;
            lp.constrain(c, Relation::Le, 0.0);
        }
    }
    match p {
        NormExp::One => {
            for j in 0..d {
                for sign in [1.0, -1.0] {
                    let mut c = vec![0.0; nv];
                    c[j] = sign;
                    c[d + 1 + j] = -1.0;
                    lp.constrain(c, Relation::Le, 0.0);
                }
            }
            let mut c = vec![0.0; nv];
            c[d + 1..].iter_mut().for_each(|v| *v = 1.0);
            lp.constrain(c, Relation::Le, 1.0);
        }
        _ => {
            for j in 0..d {
                let mut c = vec![0.0; nv];
                c[j] = 1.0;
                lp.constrain(c.clone(), Relation::Le, 1.0);
                lp.constrain(c, Relation::Ge, -1.0);
            }
        }
    }
    Ok((-lp.solve()?.objective).max(0.0))
}

/// Doubles `λ` until `ε(λ a)` meets `target`; returns the final `ε` and `λ`.
pub(crate) fn close_epsilon_form(
    t: &LinearOperator,
    functionals: &Matrix,
    target: f64,
    s: &SolverSettings,
) -> Result<(f64, f64)> {
    let mut lambda = 1.0;
    loop {
        let eps = epsilon_form(t, &functionals.scale(lambda))?;
        if eps <= target + s.tol * target.max(1.0) || lambda >= LAMBDA_CAP {
            return Ok((eps, lambda));
        }
        lambda *= 2.0;
    }
}

/// Sampled lower estimate of the ε-form with a large multiplier, for
/// spaces whose unit balls have no finite vertex set.
fn sampled_epsilon_form(t: &LinearOperator, functionals: &Matrix, s: &SolverSettings) -> f64 {
    let (p, q) = (t.domain().p(), t.codomain().p());
    let d = t.domain().dim();
    let lambda = LAMBDA_CAP;
    let mut rng = seeded_rng(s.seed, 0x6570_7369);
    let basis = kernel_basis(functionals);
    let mut best = 0.0f64;
    for i in 0..s.restarts * 64 {
        let x: Vec<f64> = if i % 2 == 0 {
            let z: Vec<f64> = (0..basis.cols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            basis.mul_vec(&z)
        } else {
            (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let nx = p.norm(&x);
        if nx == 0.0 {
            continue;
        }
        let pen = functionals.mul_vec(&x).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        best = best.max((q.norm(&t.apply(&x)) - lambda * pen) / nx);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snumbers::Method;
    use crate::spaces::NormedSpace;

    #[test]
    fn diagonal_on_hilbert_space() {
        let t = LinearOperator::between(Matrix::diag(&[3.0, 2.0, 1.0]), NormExp::Two, NormExp::Two).unwrap();
        let v = gelfand_number(&t, 2, &SolverSettings::default()).unwrap();
        assert_eq!(v.method, Method::HilbertExact);
        assert!((v.upper - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn rank_one_vanishes() {
        let t =
            LinearOperator::between(Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap(), NormExp::Two, NormExp::Two).unwrap();
        let v = gelfand_number(&t, 2, &SolverSettings::default()).unwrap();
        assert!(v.upper <= 1e-12);
    }

    #[test]
    fn epsilon_form_without_functionals_is_the_norm() {
        let t =
            LinearOperator::between(Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap(), NormExp::One, NormExp::One).unwrap();
        let e = epsilon_form(&t, &Matrix::zeros(0, 2)).unwrap();
        assert!((e - 6.0).abs() <= 1e-12);
    }

    #[test]
    fn epsilon_form_needs_polyhedral_spaces() {
        let t = LinearOperator::identity(NormedSpace::l2(2));
        assert!(matches!(epsilon_form(&t, &Matrix::zeros(0, 2)), Err(Error::NotPolyhedral(_))));
    }

    #[test]
    fn polyhedral_witness_and_epsilon_agree() {
        let t = LinearOperator::between(
            Matrix::from_rows(&[[1.0, 0.4, -0.3], [0.2, -0.8, 0.5], [-0.6, 0.1, 0.7]]).unwrap(),
            NormExp::Inf,
            NormExp::One,
        )
        .unwrap();
        let s = SolverSettings::default();
        let v = gelfand_number(&t, 2, &s).unwrap();
        assert!(v.consistent, "{v:?}");
        let Witness::Functionals { rows } = &v.witness else { panic!() };
        assert_eq!(rows.shape(), (1, 3));
        for c in 0..2 {
            let x = kernel_basis(rows).column(c);
            assert!(rows.mul_vec(&x)[0].abs() <= 1e-12);
        }
        assert!(v.epsilon.unwrap() <= v.upper + 1e-12);
    }
}
