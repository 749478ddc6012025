//! Piecewise-constant functions on a finite rational partition of [0, 1).

use crate::error::{RdsError, Result};
use crate::interval::{q_to_f64, IntervalUnion, Q};
use num_traits::{One, Zero};

/// A step function: rational cut points 0 = c_0 < ... < c_q = 1 and one
/// real value per cell [c_i, c_{i+1}).
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    cuts: Vec<Q>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(cuts: Vec<Q>, values: Vec<f64>) -> Result<Self> {
        if cuts.len() < 2 || values.len() != cuts.len() - 1 {
            return Err(RdsError::Config("cut/value count mismatch".into()));
        }
        if !cuts[0].is_zero() || !cuts[cuts.len() - 1].is_one() {
            return Err(RdsError::Config("cuts must start at 0 and end at 1".into()));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RdsError::Config("cuts must be strictly increasing".into()));
        }
        Ok(Self { cuts, values })
    }

    pub fn constant(v: f64) -> Self {
        Self {
            cuts: vec![Q::zero(), Q::one()],
            values: vec![v],
        }
    }

    /// Uniform partition into `n` cells with the given values.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(RdsError::Config("need at least one cell".into()));
        }
        let cuts = (0..=n).map(|i| Q::new(i.into(), n.into())).collect();
        Self::new(cuts, values)
    }

    pub fn cuts(&self) -> &[Q] {
        &self.cuts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    /// Value at a point (cells are closed on the left).
    pub fn value_at(&self, x: &Q) -> f64 {
        match self.cuts.binary_search(x) {
            Ok(i) => {
                if i >= self.values.len() {
                    self.values[self.values.len() - 1]
                } else {
                    self.values[i]
                }
            }
            Err(i) => {
                if i == 0 {
                    self.values[0]
                } else {
                    self.values[(i - 1).min(self.values.len() - 1)]
                }
            }
        }
    }

    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.cuts.windows(2))
            .map(|(v, w)| v * q_to_f64(&(&w[1] - &w[0])))
            .sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.cuts.windows(2))
            .map(|(v, w)| v.abs() * q_to_f64(&(&w[1] - &w[0])))
            .sum()
    }

    /// Total variation: sum of interior jumps, without wraparound.
    pub fn variation(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .sum()
    }

    pub fn bv_norm(&self) -> f64 {
        self.l1_norm().max(self.variation())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, a: f64) -> StepFunction {
        StepFunction {
            cuts: self.cuts.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// Pointwise sum on the merged partition.
    pub fn add(&self, other: &StepFunction) -> StepFunction {
        let cuts = merge_cuts(&self.cuts, &other.cuts);
        let values = cuts
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / Q::from_integer(2.into());
                self.value_at(&mid) + other.value_at(&mid)
            })
            .collect();
        StepFunction { cuts, values }
    }

    /// Refine onto a partition containing the given extra cut points.
    pub fn refine(&self, extra: &[Q]) -> StepFunction {
        let cuts = merge_cuts(&self.cuts, extra);
        let values = cuts
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / Q::from_integer(2.into());
                self.value_at(&mid)
            })
            .collect();
        StepFunction { cuts, values }
    }

    /// L1 projection onto the uniform partition with `n` cells.
    pub fn coarsen_uniform(&self, n: usize) -> Result<StepFunction> {
        let target: Vec<Q> = (0..=n).map(|i| Q::new(i.into(), n.into())).collect();
        let fine = self.refine(&target);
        let mut values = vec![0.0f64; n];
        let mut idx = 0usize;
        for (w, v) in fine.cuts.windows(2).zip(fine.values.iter()) {
            while w[0] >= target[idx + 1] {
                idx += 1;
            }
            values[idx] += v * q_to_f64(&(&w[1] - &w[0])) * n as f64;
        }
        StepFunction::new(target, values)
    }

    /// Strict positivity and strict negativity regions.
    pub fn sign_regions(&self) -> (IntervalUnion, IntervalUnion) {
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (w, v) in self.cuts.windows(2).zip(self.values.iter()) {
            if *v > 0.0 {
                plus.push((w[0].clone(), w[1].clone()));
            } else if *v < 0.0 {
                minus.push((w[0].clone(), w[1].clone()));
            }
        }
        (
            IntervalUnion::from_parts(plus),
            IntervalUnion::from_parts(minus),
        )
    }
}

pub fn merge_cuts(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut cuts: Vec<Q> = a.iter().chain(b.iter()).cloned().collect();
    cuts.sort();
    cuts.dedup();
    cuts.retain(|c| *c >= Q::zero() && *c <= Q::one());
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::q;
    use approx::assert_abs_diff_eq;

    #[test]
    fn norms() {
        let f = StepFunction::uniform(vec![1.0, -2.0]).unwrap();
        assert_abs_diff_eq!(f.l1_norm(), 1.5);
        assert_abs_diff_eq!(f.integral(), -0.5);
        assert_abs_diff_eq!(f.variation(), 3.0);
        assert_abs_diff_eq!(f.bv_norm(), 3.0);
    }

    #[test]
    fn add_on_mixed_partitions() {
        let f = StepFunction::new(vec![q(0, 1), q(1, 3), q(1, 1)], vec![1.0, 0.0]).unwrap();
        let g = StepFunction::new(vec![q(0, 1), q(1, 2), q(1, 1)], vec![0.0, 2.0]).unwrap();
        let h = f.add(&g);
        assert_eq!(h.cell_count(), 3);
        assert_abs_diff_eq!(h.value_at(&q(1, 4)), 1.0);
        assert_abs_diff_eq!(h.value_at(&q(2, 5)), 0.0);
        assert_abs_diff_eq!(h.value_at(&q(3, 4)), 2.0);
    }

    #[test]
    fn coarsen_preserves_integral() {
        let f = StepFunction::uniform(vec![1.0, -1.0, 2.0, 0.5, -0.25, 3.0]).unwrap();
        let g = f.coarsen_uniform(2).unwrap();
        assert_abs_diff_eq!(f.integral(), g.integral(), epsilon = 1e-14);
    }

    #[test]
    fn sign_regions_strict() {
        let f = StepFunction::uniform(vec![1.0, 0.0, -1.0, 2.0]).unwrap();
        let (p, m) = f.sign_regions();
        assert_eq!(p.measure(), q(1, 2));
        assert_eq!(m.measure(), q(1, 4));
    }
}
