//! Piecewise-affine interval maps, their cocycles, exact transfer
//! matrices on Markov partitions, Ulam discretization, and the
//! Perron-Frobenius action on step functions.

use crate::base::{BaseSystem, SymbolSequence};
use crate::error::{RdsError, Result};
use crate::interval::{q_floor, IntervalUnion, Q};
use crate::step::{merge_cuts, StepFunction};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    /// Half-open domain [a, b) within [0, 1).
    pub domain: (Q, Q),
    pub slope: Q,
    pub intercept: Q,
}

impl Branch {
    pub fn image_lo_hi(&self) -> (Q, Q) {
        let a = &self.slope * &self.domain.0 + &self.intercept;
        let b = &self.slope * &self.domain.1 + &self.intercept;
        if self.slope.is_positive() {
            (a, b)
        } else {
            (b, a)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseAffineMap {
    pub branches: Vec<Branch>,
    pub mod_one: bool,
}

impl PiecewiseAffineMap {
    pub fn new(mut branches: Vec<Branch>, mod_one: bool) -> Result<Self> {
        if branches.is_empty() {
            return Err(RdsError::Config("map needs at least one branch".into()));
        }
        branches.sort_by(|a, b| a.domain.0.cmp(&b.domain.0));
        if !branches[0].domain.0.is_zero()
            || !branches[branches.len() - 1].domain.1.is_one()
            || branches
                .windows(2)
                .any(|w| w[0].domain.1 != w[1].domain.0)
        {
            return Err(RdsError::Config(
                "branch domains must partition [0,1) contiguously".into(),
            ));
        }
        for (i, b) in branches.iter().enumerate() {
            if b.slope.is_zero() {
                return Err(RdsError::Config(format!("branch {i} has zero slope")));
            }
            if b.domain.0 >= b.domain.1 {
                return Err(RdsError::Config(format!("branch {i} has empty domain")));
            }
            if !mod_one {
                let (lo, hi) = b.image_lo_hi();
                if lo < Q::zero() || hi > Q::one() {
                    return Err(RdsError::Config(format!(
                        "branch {i} leaves [0,1] and mod_one is off"
                    )));
                }
            }
        }
        Ok(Self { branches, mod_one })
    }

    /// The doubling map with shift alpha: x -> 2x + alpha mod 1.
    pub fn doubling(alpha: Q) -> Self {
        Self::new(
            vec![Branch {
                domain: (Q::zero(), Q::one()),
                slope: Q::from_integer(2.into()),
                intercept: alpha,
            }],
            true,
        )
        .unwrap()
    }

    pub fn identity() -> Self {
        Self::new(
            vec![Branch {
                domain: (Q::zero(), Q::one()),
                slope: Q::one(),
                intercept: Q::zero(),
            }],
            false,
        )
        .unwrap()
    }

    pub fn apply(&self, x: &Q) -> Result<Q> {
        let b = self
            .branches
            .iter()
            .find(|b| &b.domain.0 <= x && x < &b.domain.1)
            .ok_or_else(|| RdsError::Config(format!("point {x} outside [0,1)")))?;
        let y = &b.slope * x + &b.intercept;
        Ok(if self.mod_one { frac(&y) } else { y })
    }

    /// Exact preimage of an interval union.
    pub fn preimage(&self, target: &IntervalUnion) -> IntervalUnion {
        let mut out = IntervalUnion::empty();
        for b in &self.branches {
            let (ilo, ihi) = b.image_lo_hi();
            let (mlo, mhi) = if self.mod_one {
                (q_floor(&ilo), q_floor(&ihi))
            } else {
                (BigInt::from(0), BigInt::from(0))
            };
            let mut m = mlo;
            while m <= mhi {
                let shift = Q::from_integer(m.clone());
                for (tlo, thi) in target.parts() {
                    // Solve s*x + c = y + m for y in [tlo, thi).
                    let lo = (&(tlo + &shift) - &b.intercept) / &b.slope;
                    let hi = (&(thi + &shift) - &b.intercept) / &b.slope;
                    let (lo, hi) = if b.slope.is_positive() { (lo, hi) } else { (hi, lo) };
                    let piece = IntervalUnion::interval(lo, hi)
                        .intersect(&IntervalUnion::interval(b.domain.0.clone(), b.domain.1.clone()));
                    out = out.union(&piece);
                }
                m += 1;
            }
        }
        out
    }

    /// All discontinuity candidates of the pushed-forward density:
    /// mod-1 images of branch endpoints and of the given cut points.
    fn image_cuts(&self, cuts: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(), Q::one()];
        for b in &self.branches {
            let mut push = |x: &Q| {
                if &b.domain.0 <= x && x <= &b.domain.1 {
                    let y = &b.slope * x + &b.intercept;
                    let f = frac(&y);
                    out.push(f);
                }
            };
            push(&b.domain.0);
            push(&b.domain.1);
            for c in cuts {
                push(c);
            }
            // An interior point where the image crosses an integer also
            // produces a cut at 0, already present.
        }
        out.sort();
        out.dedup();
        out
    }
}

pub fn frac(x: &Q) -> Q {
    let f = x - Q::from_integer(q_floor(x));
    if f < Q::zero() {
        f + Q::one()
    } else {
        f
    }
}

/// Exact Perron-Frobenius image of a step function:
/// (L f)(y) = sum over preimages x of f(x) / |T'(x)|.
pub fn pf_apply(map: &PiecewiseAffineMap, f: &StepFunction) -> Result<StepFunction> {
    let cuts = merge_cuts(&map.image_cuts(f.cuts()), &[]);
    let two = Q::from_integer(2.into());
    let values: Vec<f64> = cuts
        .windows(2)
        .map(|w| {
            let y = (&w[0] + &w[1]) / &two;
            let mut acc = 0.0;
            for b in &map.branches {
                let slope_abs = b.slope.abs();
                let (ilo, ihi) = b.image_lo_hi();
                let (mlo, mhi) = if map.mod_one {
                    (q_floor(&ilo), q_floor(&ihi))
                } else {
                    (BigInt::from(0), BigInt::from(0))
                };
                let mut m = mlo;
                while m <= mhi {
                    let x = (&(&y + Q::from_integer(m.clone())) - &b.intercept) / &b.slope;
                    if b.domain.0 <= x && x < b.domain.1 {
                        acc += f.value_at(&x) / crate::interval::q_to_f64(&slope_abs);
                    }
                    m += 1;
                }
            }
            acc
        })
        .collect();
    StepFunction::new(cuts, values)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovPartition {
    pub cuts: Vec<Q>,
}

impl MarkovPartition {
    pub fn new(cuts: Vec<Q>) -> Result<Self> {
        if cuts.len() < 2
            || !cuts[0].is_zero()
            || !cuts[cuts.len() - 1].is_one()
            || cuts.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(RdsError::Config(
                "partition cuts must be strictly increasing from 0 to 1".into(),
            ));
        }
        Ok(Self { cuts })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            cuts: (0..=n).map(|i| Q::new(i.into(), n.into())).collect(),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn cell(&self, i: usize) -> IntervalUnion {
        IntervalUnion::interval(self.cuts[i].clone(), self.cuts[i + 1].clone())
    }

    /// Index of the cell containing x.
    pub fn locate(&self, x: &Q) -> usize {
        match self.cuts.binary_search(x) {
            Ok(i) => i.min(self.cell_count() - 1),
            Err(i) => i - 1,
        }
    }
}

/// Exact transfer matrix of a Markov map on its partition, in the
/// row-vector coefficient convention: coefficients of L f are f * M.
pub fn transfer_matrix_markov(
    map: &PiecewiseAffineMap,
    p: &MarkovPartition,
) -> Result<Vec<Vec<Q>>> {
    let q = p.cell_count();
    let mut m = vec![vec![Q::zero(); q]; q];
    for (bi, b) in map.branches.iter().enumerate() {
        let weight = b.slope.abs().recip();
        for i in 0..q {
            let d = IntervalUnion::interval(p.cuts[i].clone(), p.cuts[i + 1].clone()).intersect(
                &IntervalUnion::interval(b.domain.0.clone(), b.domain.1.clone()),
            );
            for (dlo, dhi) in d.parts() {
                let (ilo, ihi) = {
                    let a = &b.slope * dlo + &b.intercept;
                    let c = &b.slope * dhi + &b.intercept;
                    if b.slope.is_positive() {
                        (a, c)
                    } else {
                        (c, a)
                    }
                };
                // Split the image at integer boundaries and reduce mod 1.
                let (mlo, mhi) = if map.mod_one {
                    (q_floor(&ilo), {
                        // A closed upper endpoint on an integer stays in the
                        // lower unit interval.
                        let f = q_floor(&ihi);
                        if Q::from_integer(f.clone()) == ihi {
                            f - 1
                        } else {
                            f
                        }
                    })
                } else {
                    (BigInt::from(0), BigInt::from(0))
                };
                let mut k = mlo;
                while k <= mhi {
                    let shift = Q::from_integer(k.clone());
                    let plo = if ilo > shift { &ilo - &shift } else { Q::zero() };
                    let phi_raw = &ihi - &shift;
                    let phi = if phi_raw < Q::one() { phi_raw } else { Q::one() };
                    if plo < phi {
                        let jlo = match p.cuts.binary_search(&plo) {
                            Ok(ix) => ix,
                            Err(_) => {
                                return Err(RdsError::MarkovViolation { branch: bi, cell: i })
                            }
                        };
                        let jhi = match p.cuts.binary_search(&phi) {
                            Ok(ix) => ix,
                            Err(_) => {
                                return Err(RdsError::MarkovViolation { branch: bi, cell: i })
                            }
                        };
                        for j in jlo..jhi {
                            m[i][j] += &weight;
                        }
                    }
                    k += 1;
                }
            }
        }
    }
    Ok(m)
}

/// Ulam matrix over `n_bins` uniform bins, exact:
/// M[i][j] = m(B_i intersect T^{-1} B_j) / m(B_i).
pub fn ulam_matrix(map: &PiecewiseAffineMap, n_bins: usize) -> Result<Vec<Vec<Q>>> {
    if n_bins == 0 {
        return Err(RdsError::Config("n_bins must be at least 1".into()));
    }
    let p = MarkovPartition::uniform(n_bins);
    let bin_measure = Q::new(1.into(), n_bins.into());
    let mut m = vec![vec![Q::zero(); n_bins]; n_bins];
    for j in 0..n_bins {
        let pre = map.preimage(&p.cell(j));
        for i in 0..n_bins {
            let overlap = pre.intersect(&p.cell(i)).measure();
            m[i][j] = overlap / &bin_measure;
        }
    }
    Ok(m)
}

pub fn matrix_to_f64(m: &[Vec<Q>]) -> nalgebra::DMatrix<f64> {
    let k = m.len();
    nalgebra::DMatrix::from_fn(k, k, |i, j| crate::interval::q_to_f64(&m[i][j]))
}

#[derive(Debug, Clone)]
pub struct IntervalMapCocycle {
    generators: Vec<PiecewiseAffineMap>,
    pub base: BaseSystem,
    pub partition: Option<MarkovPartition>,
}

impl IntervalMapCocycle {
    pub fn new(
        generators: Vec<PiecewiseAffineMap>,
        base: BaseSystem,
        partition: Option<MarkovPartition>,
    ) -> Result<Self> {
        if generators.len() != base.alphabet_size as usize {
            return Err(RdsError::Config(format!(
                "expected {} maps, got {}",
                base.alphabet_size,
                generators.len()
            )));
        }
        let c = Self {
            generators,
            base,
            partition,
        };
        if let Some(p) = c.partition.clone() {
            for map in &c.generators {
                transfer_matrix_markov(map, &p)?;
            }
        }
        Ok(c)
    }

    pub fn map_at(&self, omega: &SymbolSequence, n: i64) -> Result<&PiecewiseAffineMap> {
        let s = omega.get0(n)?;
        self.generators
            .get(s)
            .ok_or_else(|| RdsError::Config(format!("symbol {} has no map", s + 1)))
    }

    pub fn generator(&self, symbol0: usize) -> &PiecewiseAffineMap {
        &self.generators[symbol0]
    }

    pub fn generators(&self) -> &[PiecewiseAffineMap] {
        &self.generators
    }

    /// Exact transfer-matrix cocycle on the shared Markov partition.
    pub fn transfer_cocycle_exact(&self) -> Result<Vec<Vec<Vec<Q>>>> {
        let p = self
            .partition
            .as_ref()
            .ok_or_else(|| RdsError::Config("no Markov partition declared".into()))?;
        self.generators
            .iter()
            .map(|m| transfer_matrix_markov(m, p))
            .collect()
    }
}

/// Index of compactness estimate: (1/n) log(1 / min |(T^n)'|) over the
/// cylinder branch tree, exact over the tree.
pub fn kappa_estimate(c: &IntervalMapCocycle, omega: &SymbolSequence, n: i64) -> Result<f64> {
    const MAX_BRANCHES: usize = 10_000_000;
    // (image interval, |slope product|): domains are tracked only through
    // their images, which is all the next composition step needs.
    let mut cylinders: Vec<(Q, Q, Q)> = vec![(Q::zero(), Q::one(), Q::one())];
    for step in 0..n {
        let map = c.map_at(omega, step)?;
        let mut next = Vec::with_capacity(cylinders.len() * map.branches.len());
        for (lo, hi, sl) in &cylinders {
            let img = IntervalUnion::interval(lo.clone(), hi.clone());
            for b in &map.branches {
                let d = img.intersect(&IntervalUnion::interval(
                    b.domain.0.clone(),
                    b.domain.1.clone(),
                ));
                for (dlo, dhi) in d.parts() {
                    let a = &b.slope * dlo + &b.intercept;
                    let e = &b.slope * dhi + &b.intercept;
                    let (ilo, ihi) = if b.slope.is_positive() { (a, e) } else { (e, a) };
                    let product = sl * b.slope.abs();
                    if map.mod_one {
                        let (mlo, mhi) = (q_floor(&ilo), q_floor(&ihi));
                        let mut k = mlo;
                        while k <= mhi {
                            let shift = Q::from_integer(k.clone());
                            let plo = if ilo > shift { &ilo - &shift } else { Q::zero() };
                            let phi_raw = &ihi - &shift;
                            let phi = if phi_raw < Q::one() { phi_raw } else { Q::one() };
                            if plo < phi {
                                next.push((plo, phi, product.clone()));
                            }
                            k += 1;
                        }
                    } else {
                        next.push((ilo, ihi, product));
                    }
                }
            }
            if next.len() > MAX_BRANCHES {
                return Err(RdsError::HorizonTooLarge(MAX_BRANCHES));
            }
        }
        cylinders = next;
    }
    let min_slope = cylinders
        .iter()
        .map(|(_, _, s)| s)
        .min()
        .ok_or_else(|| RdsError::Config("no surviving cylinder branches".into()))?;
    Ok(-crate::interval::q_to_f64(min_slope).ln() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{q, q_int};
    use approx::assert_abs_diff_eq;

    #[test]
    fn doubling_transfer_on_halves() {
        let t = PiecewiseAffineMap::doubling(Q::zero());
        let p = MarkovPartition::new(vec![q_int(0), q(1, 2), q_int(1)]).unwrap();
        let m = transfer_matrix_markov(&t, &p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m[i][j], q(1, 2));
            }
        }
    }

    #[test]
    fn shifted_doubling_on_fifths() {
        let t = PiecewiseAffineMap::doubling(q(3, 5));
        let p = MarkovPartition::uniform(5);
        let m = transfer_matrix_markov(&t, &p).unwrap();
        // Image of [0, 1/5) is [3/5, 1): columns 4 and 5 (1-based).
        assert_eq!(m[0][3], q(1, 2));
        assert_eq!(m[0][4], q(1, 2));
        assert_eq!(m[0][0], q(0, 1));
    }

    #[test]
    fn identity_transfer() {
        let t = PiecewiseAffineMap::identity();
        let p = MarkovPartition::uniform(4);
        let m = transfer_matrix_markov(&t, &p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[i][j], if i == j { q_int(1) } else { q_int(0) });
            }
        }
    }

    #[test]
    fn markov_violation_detected() {
        let t = PiecewiseAffineMap::doubling(q(1, 3));
        let p = MarkovPartition::new(vec![q_int(0), q(1, 2), q_int(1)]).unwrap();
        assert!(matches!(
            transfer_matrix_markov(&t, &p),
            Err(RdsError::MarkovViolation { .. })
        ));
    }

    #[test]
    fn ulam_matches_markov_for_doubling() {
        let t = PiecewiseAffineMap::doubling(Q::zero());
        let u = ulam_matrix(&t, 2).unwrap();
        let p = MarkovPartition::new(vec![q_int(0), q(1, 2), q_int(1)]).unwrap();
        let m = transfer_matrix_markov(&t, &p).unwrap();
        assert_eq!(u, m);
    }

    #[test]
    fn ulam_rows_sum_to_one() {
        let t = PiecewiseAffineMap::doubling(q(3, 5));
        let u = ulam_matrix(&t, 7).unwrap();
        for row in &u {
            let s: Q = row.iter().fold(Q::zero(), |a, b| a + b);
            assert_eq!(s, q_int(1));
        }
    }

    #[test]
    fn pf_preserves_constants_for_lebesgue_preserving_maps() {
        for alpha in [Q::zero(), q(3, 5)] {
            let t = PiecewiseAffineMap::doubling(alpha);
            let f = StepFunction::constant(1.0);
            let lf = pf_apply(&t, &f).unwrap();
            for v in lf.values() {
                assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn pf_preserves_integral() {
        let t = PiecewiseAffineMap::doubling(q(3, 5));
        let f = StepFunction::uniform(vec![0.3, -1.2, 2.0, 0.0, 5.5]).unwrap();
        let lf = pf_apply(&t, &f).unwrap();
        assert_abs_diff_eq!(lf.integral(), f.integral(), epsilon = 1e-12);
    }

    #[test]
    fn preimage_of_half_under_doubling() {
        let t = PiecewiseAffineMap::doubling(Q::zero());
        let pre = t.preimage(&IntervalUnion::interval(q_int(0), q(1, 2)));
        assert_eq!(
            pre.parts(),
            &[(q_int(0), q(1, 4)), (q(1, 2), q(3, 4))]
        );
    }

    #[test]
    fn kappa_constant_slope() {
        let base = BaseSystem::full_shift(2);
        let c = IntervalMapCocycle::new(
            vec![
                PiecewiseAffineMap::doubling(Q::zero()),
                PiecewiseAffineMap::doubling(q(3, 5)),
            ],
            base,
            None,
        )
        .unwrap();
        let omega = crate::base::build_omega_star(crate::base::OmegaStar::Example2).unwrap();
        for n in [1, 3, 6] {
            assert_abs_diff_eq!(
                kappa_estimate(&c, &omega, n).unwrap(),
                -(2.0f64.ln()),
                epsilon = 1e-12
            );
        }
    }
}
