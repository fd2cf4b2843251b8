//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are `minimize cᵀx` subject to rows `aᵢᵀx {≤,≥,=} bᵢ`, with each
//! variable either non-negative or free.

use serde::{Deserialize, Serialize};

use crate::linalg::{solve, Matrix};
use crate::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
    free: Vec<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic columns of the standard form at the optimum.
    pub basis: Vec<usize>,
    /// Multipliers `y` per constraint row, `c − Aᵀy` dual feasible.
    pub duals: Vec<f64>,
    pub dual_feasible: bool,
    pub pivots: usize,
}

impl LinearProgram {
    /// `n_vars` non-negative variables, objective to minimise.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { objective, rows: Vec::new(), free: vec![false; n] }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_free(&mut self, j: usize) -> &mut Self {
        self.free[j] = true;
        self
    }

    pub fn set_all_free(&mut self) -> &mut Self {
        self.free.iter_mut().for_each(|f| *f = true);
        self
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n_vars(), "constraint width");
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Original row index of each tableau row and its sign flip.
    origin: Vec<(usize, f64)>,
    /// Standard-form column → (original variable, sign) for structural columns.
    structural: Vec<(usize, f64)>,
    n_struct: usize,
    n_cols: usize,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let mut structural = Vec::new();
        for j in 0..lp.n_vars() {
            structural.push((j, 1.0));
            if lp.free[j] {
                structural.push((j, -1.0));
            }
        }
        let n_struct = structural.len();
        let m = lp.rows.len();
        let n_slack = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();

        // normalise to non-negative right-hand sides
        let mut normalised = Vec::with_capacity(m);
        for (i, (a, rel, b)) in lp.rows.iter().enumerate() {
            let sign = if *b < 0.0 { -1.0 } else { 1.0 };
            let rel = match (rel, sign < 0.0) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => *r,
            };
            normalised.push((i, sign, a, rel, b * sign));
        }
        let n_art = normalised.iter().filter(|r| r.3 != Relation::Le).count();
        let first_artificial = n_struct + n_slack;
        let n_cols = first_artificial + n_art;

        let mut t = vec![vec![0.0; n_cols + 1]; m];
        let mut basis = vec![0; m];
        let mut origin = Vec::with_capacity(m);
        let (mut slack, mut art) = (n_struct, first_artificial);
        for (r, (i, sign, a, rel, b)) in normalised.into_iter().enumerate() {
            for (c, &(j, s)) in structural.iter().enumerate() {
                t[r][c] = sign * s * a[j];
            }
            t[r][n_cols] = b;
            match rel {
                Relation::Le => {
                    t[r][slack] = 1.0;
                    basis[r] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    t[r][slack] = -1.0;
                    slack += 1;
                    t[r][art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
                Relation::Eq => {
                    t[r][art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
            }
            origin.push((i, sign));
        }
        Self { t, basis, origin, structural, n_struct, n_cols, first_artificial, pivots: 0 }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        self.t[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Bland-rule simplex for `min costᵀx` over the first `allowed` columns.
    fn optimise(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        let max_pivots = 50_000;
        loop {
            // reduced costs c_j − c_Bᵀ B⁻¹ A_j straight from the tableau
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for (r, &b) in self.basis.iter().enumerate() {
                    rc -= cost[b] * self.t[r][j];
                }
                if rc < -COST_EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.t.len() {
                let a = self.t[r][c];
                if a > PIVOT_EPS {
                    let ratio = self.t[r][self.n_cols] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-14 || (ratio <= lratio + 1e-14 && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Err(Error::Unbounded) };
            self.pivot(r, c);
            if self.pivots > max_pivots {
                return Err(Error::BudgetExceeded { budget: max_pivots });
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let m = self.t.len();
        let scale = self.t.iter().flat_map(|r| r.iter()).fold(1.0f64, |s, v| s.max(v.abs()));

        if self.first_artificial < self.n_cols {
            let mut cost = vec![0.0; self.n_cols];
            cost[self.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
            self.optimise(&cost, self.n_cols)?;
            let infeas: f64 = (0..m).filter(|&r| self.basis[r] >= self.first_artificial).map(|r| self.t[r][self.n_cols]).sum();
            if infeas > 1e-9 * scale {
                return Err(Error::Infeasible);
            }
            // drive degenerate artificials out of the basis or drop their rows
            let mut r = 0;
            while r < self.t.len() {
                if self.basis[r] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| self.t[r][j].abs() > 1e-9) {
                        Some(j) => {
                            self.pivot(r, j);
                            r += 1;
                        }
                        None => {
                            self.t.remove(r);
                            self.basis.remove(r);
                            self.origin.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }

        let mut cost = vec![0.0; self.n_cols];
        for (c, &(j, s)) in self.structural.iter().enumerate() {
            cost[c] = s * lp.objective[j];
        }
        self.optimise(&cost, self.first_artificial)?;

        let mut x = vec![0.0; lp.n_vars()];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                let (j, s) = self.structural[b];
                x[j] += s * self.t[r][self.n_cols];
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let (duals, dual_feasible) = self.duals(lp, &cost);
        Ok(LpSolution { x, objective, basis: self.basis.clone(), duals, dual_feasible, pivots: self.pivots })
    }

    /// Recovers `y` from `B ᵀy = c_B` on the original columns and verifies
    /// dual feasibility of every non-artificial column.
    fn duals(&self, lp: &LinearProgram, cost: &[f64]) -> (Vec<f64>, bool) {
        let m = self.basis.len();
        let column = |c: usize| -> Vec<f64> {
            // original standard-form column restricted to the surviving rows
            self.origin
                .iter()
                .map(|&(i, sign)| {
                    if c < self.n_struct {
                        let (j, s) = self.structural[c];
                        sign * s * lp.rows[i].0[j]
                    } else {
                        self.slack_entry(lp, i, c)
                    }
                })
                .collect()
        };
        let mut bt = Matrix::zeros(m, m);
        for (k, &b) in self.basis.iter().enumerate() {
            for (r, v) in column(b).into_iter().enumerate() {
                bt[(k, r)] = v;
            }
        }
        let rhs: Vec<f64> = self.basis.iter().map(|&b| cost.get(b).copied().unwrap_or(0.0)).collect();
        let Some(y_rows) = (if m == 0 { Some(Vec::new()) } else { solve(&bt, &rhs) }) else {
            return (vec![0.0; lp.rows.len()], false);
        };
        let mut feasible = true;
        for c in 0..self.first_artificial {
            let col = column(c);
            let rc = cost[c] - col.iter().zip(&y_rows).map(|(a, y)| a * y).sum::<f64>();
            if rc < -1e-7 {
                feasible = false;
            }
        }
        let mut duals = vec![0.0; lp.rows.len()];
        for (k, &(i, sign)) in self.origin.iter().enumerate() {
            duals[i] = sign * y_rows[k];
        }
        (duals, feasible)
    }

    fn slack_entry(&self, lp: &LinearProgram, row: usize, c: usize) -> f64 {
        // slack columns follow row order over non-equality rows
        let mut slack = self.n_struct;
        for (i, (_, rel, _)) in lp.rows.iter().enumerate() {
            if *rel == Relation::Eq {
                continue;
            }
            if slack == c {
                if i != row {
                    return 0.0;
                }
                let sign = self.origin.iter().find(|o| o.0 == i).map(|o| o.1).unwrap_or(1.0);
                let flipped = sign < 0.0;
                let le = matches!((rel, flipped), (Relation::Le, false) | (Relation::Ge, true));
                return if le { 1.0 } else { -1.0 };
            }
            slack += 1;
        }
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximisation() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let mut lp = LinearProgram::minimize(vec![-3.0, -5.0]);
        lp.constrain(vec![1.0, 0.0], Relation::Le, 4.0).constrain(vec![0.0, 2.0], Relation::Le, 12.0).constrain(
            vec![3.0, 2.0],
            Relation::Le,
            18.0,
        );
        let s = lp.solve().unwrap();
        assert!((s.objective + 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        assert!(s.dual_feasible);
        // strong duality: bᵀy equals the optimum
        let by = 4.0 * s.duals[0] + 12.0 * s.duals[1] + 18.0 * s.duals[2];
        assert!((by - s.objective).abs() < 1e-10);
    }

    #[test]
    fn free_variables_equalities_and_negative_rhs() {
        // min |u| style: min t, t ≥ x - 3, t ≥ 3 - x, x = -1 (free) → 4
        let mut lp = LinearProgram::minimize(vec![0.0, 1.0]);
        lp.set_free(0);
        lp.constrain(vec![1.0, -1.0], Relation::Le, 3.0).constrain(vec![-1.0, -1.0], Relation::Le, -3.0).constrain(
            vec![1.0, 0.0],
            Relation::Eq,
            -1.0,
        );
        let s = lp.solve().unwrap();
        assert!((s.objective - 4.0).abs() < 1e-12);
        assert!((s.x[0] + 1.0).abs() < 1e-12);
        assert!(s.dual_feasible);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.constrain(vec![1.0], Relation::Ge, 2.0).constrain(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), Error::Infeasible);

        let mut lp = LinearProgram::minimize(vec![-1.0]);
        lp.constrain(vec![1.0], Relation::Ge, 0.0);
        assert_eq!(lp.solve().unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.constrain(vec![1.0, 1.0], Relation::Eq, 2.0).constrain(vec![2.0, 2.0], Relation::Eq, 4.0).constrain(
            vec![1.0, -1.0],
            Relation::Ge,
            0.0,
        );
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!(s.dual_feasible);
    }
}
