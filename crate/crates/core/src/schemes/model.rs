use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::spaces::{LinearOperator, NormExp, NormedSpace};
use crate::{seeded_rng, Error, Result};

/// What a list sequence does past its last entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Zero,
    Repeat,
    Cycle,
}

/// Lazily evaluated real sequence `(s_n)_{n ≥ 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sequence {
    Constant {
        value: f64,
    },
    /// `1/n`
    Harmonic,
    /// `rⁿ`
    Geometric {
        ratio: f64,
    },
    /// `offset + amplitude · sin n`
    Sine {
        offset: f64,
        amplitude: f64,
    },
    /// Independent uniform draws from `[low, high)`, one stream per index.
    Random {
        low: f64,
        high: f64,
        seed: u64,
    },
    List {
        values: Vec<f64>,
        tail: Tail,
    },
}

impl Sequence {
    pub fn value(&self, n: usize) -> f64 {
        assert!(n >= 1, "sequences are indexed from 1");
        match self {
            Sequence::Constant { value } => *value,
            Sequence::Harmonic => 1.0 / n as f64,
            Sequence::Geometric { ratio } => ratio.powi(n as i32),
            Sequence::Sine { offset, amplitude } => offset + amplitude * (n as f64).sin(),
            Sequence::Random { low, high, seed } => {
                if low >= high {
                    *low
                } else {
                    seeded_rng(*seed, n as u64).gen_range(*low..*high)
                }
            }
            Sequence::List { values, tail } => {
                if values.is_empty() {
                    return 0.0;
                }
                match (values.get(n - 1), tail) {
                    (Some(v), _) => *v,
                    (None, Tail::Zero) => 0.0,
                    (None, Tail::Repeat) => *values.last().expect("non-empty"),
                    (None, Tail::Cycle) => values[(n - 1) % values.len()],
                }
            }
        }
    }

    pub fn take(&self, len: usize) -> Vec<f64> {
        (1..=len).map(|n| self.value(n)).collect()
    }

    /// `sup_n |s_n|` when it is known in closed form.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            Sequence::Constant { value } => Some(value.abs()),
            Sequence::Harmonic => Some(1.0),
            Sequence::Geometric { ratio } => (ratio.abs() <= 1.0).then(|| ratio.abs()),
            Sequence::Sine { offset, amplitude } => Some(offset.abs() + amplitude.abs()),
            Sequence::Random { low, high, .. } => Some(low.abs().max(high.abs())),
            Sequence::List { values, .. } => Some(values.iter().fold(0.0, |m, v| m.max(v.abs()))),
        }
    }
}

/// A positive weight sequence with a declared bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub sequence: Sequence,
    pub bound: f64,
}

impl Weights {
    /// Uses the closed-form bound of `sequence` unless one is declared.
    pub fn new(sequence: Sequence, declared: Option<f64>) -> Result<Self> {
        let bound = declared
            .or_else(|| sequence.sup_bound())
            .ok_or_else(|| Error::InvalidSettings("weights without a closed-form bound need a declared bound".into()))?;
        Ok(Self { sequence, bound })
    }

    pub fn constant(value: f64) -> Self {
        Self { sequence: Sequence::Constant { value }, bound: value.abs() }
    }

    /// `w_n`, checked against positivity and the declared bound.
    pub fn get(&self, n: usize) -> Result<f64> {
        let v = self.sequence.value(n);
        if !(v > 0.0) {
            return Err(Error::InvalidWeight { index: n, value: v });
        }
        if v > self.bound {
            return Err(Error::WeightUnbounded { index: n, value: v, bound: self.bound });
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelFamily {
    /// `T(x_n) = (λ_n x_n)`
    Diagonal { lambda: Sequence },
    /// `B_w e₁ = 0`, `B_w e_n = w_n e_{n−1}`
    WeightedShift { weights: Sequence },
    /// `ℓ₁ → c₀`
    CanonicalInjection,
}

/// An operator on sequence spaces, represented by its finite sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOperator {
    pub family: ModelFamily,
    pub domain: NormExp,
    pub codomain: NormExp,
}

impl ModelOperator {
    pub fn diagonal(lambda: Sequence, p: NormExp) -> Self {
        Self { family: ModelFamily::Diagonal { lambda }, domain: p, codomain: p }
    }

    /// On `c₀`, truncated to `ℓ∞^d`.
    pub fn weighted_shift(weights: Sequence) -> Self {
        Self { family: ModelFamily::WeightedShift { weights }, domain: NormExp::Inf, codomain: NormExp::Inf }
    }

    /// `ℓ₁^d → ℓ∞^d`.
    pub fn canonical_injection() -> Self {
        Self { family: ModelFamily::CanonicalInjection, domain: NormExp::One, codomain: NormExp::Inf }
    }

    /// The upper-left `d × d` section.
    pub fn truncate(&self, d: usize) -> Result<LinearOperator> {
        let (x, y) = (NormedSpace::new(d, self.domain)?, NormedSpace::new(d, self.codomain)?);
        let matrix = match &self.family {
            ModelFamily::Diagonal { lambda } => Matrix::diag(&lambda.take(d)),
            ModelFamily::WeightedShift { weights } => {
                let mut m = Matrix::zeros(d, d);
                for n in 2..=d {
                    m[(n - 2, n - 1)] = weights.value(n);
                }
                m
            }
            ModelFamily::CanonicalInjection => Matrix::identity(d),
        };
        LinearOperator::new(matrix, x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_values() {
        assert_eq!(Sequence::Harmonic.take(3), vec![1.0, 0.5, 1.0 / 3.0]);
        assert_eq!(Sequence::Geometric { ratio: 0.5 }.value(3), 0.125);
        let l = Sequence::List { values: vec![1.0, 2.0], tail: Tail::Cycle };
        assert_eq!(l.take(5), vec![1.0, 2.0, 1.0, 2.0, 1.0]);
        let l = Sequence::List { values: vec![1.0, 2.0], tail: Tail::Repeat };
        assert_eq!(l.value(9), 2.0);
        let r = Sequence::Random { low: 0.5, high: 1.5, seed: 3 };
        assert_eq!(r.value(4), r.value(4));
        assert!((0.5..1.5).contains(&r.value(4)));
        assert_eq!(Sequence::Geometric { ratio: 2.0 }.sup_bound(), None);
    }

    #[test]
    fn weights_are_checked() {
        let w = Weights::new(Sequence::Geometric { ratio: 2.0 }, Some(5.0)).unwrap();
        assert_eq!(w.get(2).unwrap(), 4.0);
        assert!(matches!(w.get(3), Err(Error::WeightUnbounded { index: 3, .. })));
        assert!(Weights::new(Sequence::Geometric { ratio: 2.0 }, None).is_err());
        let z = Weights::new(Sequence::Constant { value: 0.0 }, None).unwrap();
        assert!(matches!(z.get(1), Err(Error::InvalidWeight { .. })));
    }

    #[test]
    fn truncations_nest() {
        let models = [
            ModelOperator::diagonal(Sequence::Harmonic, NormExp::Two),
            ModelOperator::weighted_shift(Sequence::Sine { offset: 2.0, amplitude: 1.0 }),
            ModelOperator::canonical_injection(),
        ];
        for model in models {
            let big = model.truncate(5).unwrap();
            for d in 1..5 {
                let small = model.truncate(d).unwrap();
                for i in 0..d {
                    for j in 0..d {
                        assert_eq!(small.matrix()[(i, j)], big.matrix()[(i, j)]);
                    }
                }
            }
        }
    }

    #[test]
    fn shift_matrix() {
        let b = ModelOperator::weighted_shift(Sequence::Constant { value: 1.0 }).truncate(3).unwrap();
        assert_eq!(b.apply(&[1.0, 2.0, 3.0]), vec![2.0, 3.0, 0.0]);
    }
}
