use serde::{Deserialize, Serialize};

use super::Weights;
use crate::{Error, Result};

/// `B_w(x) = 2⁻ᵐ y + z` with `‖y‖∞ ≤ 1` and `z` finitely supported.
///
/// Vectors are stored 0-based: entry `k` is coordinate `k + 1`. The index
/// sets use the 1-based coordinates of `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftDecomposition {
    pub m: usize,
    pub x: Vec<f64>,
    /// `w_1, …, w_len`
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// `A = {n : 2ᵐ |xₙ wₙ| > 1}`
    pub large: Vec<usize>,
    /// Indices outside `A` routed to `z` by the summable-tail rule.
    pub subsequence: Vec<usize>,
    pub reconstruction_error: f64,
    pub y_sup: f64,
    pub z_l1: f64,
}

impl ShiftDecomposition {
    /// `B_w(x)`.
    pub fn image(&self) -> Vec<f64> {
        shift_image(&self.x, &self.w)
    }

    /// Radius certified for this sample: `2⁻ᵐ`.
    pub fn radius(&self) -> f64 {
        0.5f64.powi(self.m as i32)
    }

    /// The three certificate invariants, re-evaluated from `x`, `w`, `y`
    /// and `z`.
    pub fn is_valid(&self) -> bool {
        let r = self.radius();
        let img = self.image();
        let recon = img.iter().zip(self.y.iter().zip(&self.z)).map(|(b, (y, z))| (b - (r * y + z)).abs()).fold(0.0, f64::max);
        let y_sup = self.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let z_l1: f64 = self.z.iter().map(|v| v.abs()).sum();
        recon <= 1e-12 && y_sup <= 1.0 && z_l1.is_finite()
    }
}

fn shift_image(x: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for n in 2..=x.len() {
        out[n - 2] = w[n - 1] * x[n - 1];
    }
    out
}

/// [`shift_decompose_with`] with the default tail budget: the whole
/// `ℓ₁` mass, so no index outside `A` is routed to `z`.
pub fn shift_decompose(x: &[f64], w: &Weights, m: usize) -> Result<ShiftDecomposition> {
    shift_decompose_with(x, w, m, None)
}

/// Splits `B_w(x)` for `‖x‖∞ ≤ 1`.
///
/// Coordinates in `A` go to `z`. Walking the remaining support in order,
/// once the cumulative `Σ |wₙ xₙ|` exceeds `tail_budget` every later
/// index joins the subsequence and also goes to `z`; all other coordinates
/// go to `y` scaled by `2ᵐ`.
pub fn shift_decompose_with(x: &[f64], w: &Weights, m: usize, tail_budget: Option<f64>) -> Result<ShiftDecomposition> {
    let sup = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if sup > 1.0 || sup.is_nan() {
        return Err(Error::NormViolation { norm: sup });
    }
    let len = x.len();
    let weights: Vec<f64> = (1..=len).map(|n| w.get(n)).collect::<Result<_>>()?;
    let scale = 2f64.powi(m as i32);
    let mut y = vec![0.0; len];
    let mut z = vec![0.0; len];
    let mut large = Vec::new();
    let mut subsequence = Vec::new();
    let mut cumulative = 0.0;
    let mut in_tail = false;
    for n in 2..=len {
        let v = x[n - 1] * weights[n - 1];
        if v == 0.0 {
            continue;
        }
        if scale * v.abs() > 1.0 {
            large.push(n);
            z[n - 2] = v;
            continue;
        }
        if let Some(b) = tail_budget {
            in_tail |= cumulative > b;
            cumulative += v.abs();
        }
        if in_tail {
            subsequence.push(n);
            z[n - 2] = v;
        } else {
            y[n - 2] = scale * v;
        }
    }
    let img = shift_image(x, &weights);
    let r = 1.0 / scale;
    let reconstruction_error =
        img.iter().zip(y.iter().zip(&z)).map(|(b, (yy, zz))| (b - (r * yy + zz)).abs()).fold(0.0, f64::max);
    let y_sup = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let z_l1 = z.iter().map(|v| v.abs()).sum();
    Ok(ShiftDecomposition { m, x: x.to_vec(), w: weights, y, z, large, subsequence, reconstruction_error, y_sup, z_l1 })
}
