//! Eigenfunction constructor for map cocycles that preserve a positive
//! random density: builds the truncated series
//!   f = sum_{n>=0} e^{rho n} (g/h)(T^{(n)} x) h(x)
//! together with its analytic sup-norm tail bound.
//!
//! The construction is exact on a uniform rational grid. All maps in
//! the cocycle must share one positive integer slope s and have
//! rational branch data; the grid denominator is then L * s^n_trunc
//! where L clears every cut point and intercept, so every composed
//! branch boundary is a grid point and midpoint sampling is exact.

use crate::base::SymbolSequence;
use crate::error::{RdsError, Result};
use crate::interval::{IntervalUnion, Q};
use crate::maps::{pf_apply, IntervalMapCocycle};
use crate::step::StepFunction;
use num::Integer;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;

/// A step function on the uniform partition {i/denom}: values[i] is the
/// value on [i/denom, (i+1)/denom).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub denom: u64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn constant(denom: u64, v: f64) -> Self {
        Self {
            denom,
            values: vec![v; denom as usize],
        }
    }

    /// Sample a step function on the uniform grid; exact when every cut
    /// of `f` is a multiple of 1/denom.
    pub fn from_step(f: &StepFunction, denom: u64) -> Result<Self> {
        let d = BigInt::from(denom);
        for c in f.cuts() {
            if !(c * Q::from_integer(d.clone())).is_integer() {
                return Err(RdsError::Config(
                    "cut points do not lie on the uniform grid".into(),
                ));
            }
        }
        let values = (0..denom)
            .map(|i| f.value_at(&Q::new((4 * i + 2).into(), (4 * denom).into())))
            .collect();
        Ok(Self { denom, values })
    }

    pub fn to_step(&self) -> StepFunction {
        let cuts = (0..=self.denom)
            .map(|i| Q::new(i.into(), self.denom.into()))
            .collect();
        StepFunction::new(cuts, self.values.clone()).unwrap()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.denom as f64
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.denom as f64
    }

    pub fn variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn bv_norm(&self) -> f64 {
        self.l1_norm().max(self.variation())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn sub_scaled(&self, other: &GridFunction, a: f64) -> GridFunction {
        assert_eq!(self.denom, other.denom);
        GridFunction {
            denom: self.denom,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x - a * y)
                .collect(),
        }
    }

    /// Strict sign regions with exact rational boundaries.
    pub fn sign_regions(&self) -> (IntervalUnion, IntervalUnion) {
        let cut = |i: u64| Q::new(i.into(), self.denom.into());
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        let mut i = 0u64;
        while (i as usize) < self.values.len() {
            let v = self.values[i as usize];
            let mut j = i + 1;
            while (j as usize) < self.values.len()
                && (self.values[j as usize] > 0.0) == (v > 0.0)
                && (self.values[j as usize] < 0.0) == (v < 0.0)
            {
                j += 1;
            }
            if v > 0.0 {
                plus.push((cut(i), cut(j)));
            } else if v < 0.0 {
                minus.push((cut(i), cut(j)));
            }
            i = j;
        }
        (
            IntervalUnion::from_parts(plus),
            IntervalUnion::from_parts(minus),
        )
    }
}

/// Integer image of a map on the grid: positions in units of 1/(4*denom).
struct IntMap {
    /// (domain_lo, domain_hi, intercept) in units of 1/(4*denom); the
    /// shared slope lives on IntCocycle.
    branches: Vec<(u64, u64, u64)>,
}

struct IntCocycle {
    slope: u64,
    unit: u64,
    maps: Vec<IntMap>,
}

fn q_times_int(x: &Q, n: u64) -> Option<u64> {
    let v = x * Q::from_integer(BigInt::from(n));
    if v.is_integer() {
        v.to_integer().to_u64()
    } else {
        None
    }
}

fn int_cocycle(c: &IntervalMapCocycle, denom: u64) -> Result<IntCocycle> {
    let unit = 4 * denom;
    let slope = {
        let s = &c.generators()[0].branches[0].slope;
        s.to_integer().to_u64().unwrap()
    };
    let mut maps = Vec::new();
    for map in c.generators() {
        let mut branches = Vec::new();
        for b in &map.branches {
            let lo = q_times_int(&b.domain.0, unit)
                .ok_or_else(|| RdsError::Config("branch endpoint off the grid".into()))?;
            let hi = q_times_int(&b.domain.1, unit)
                .ok_or_else(|| RdsError::Config("branch endpoint off the grid".into()))?;
            let c_scaled = &b.intercept * Q::from_integer(BigInt::from(unit));
            if !c_scaled.is_integer() {
                return Err(RdsError::Config("intercept off the grid".into()));
            }
            let a = c_scaled.to_integer().mod_floor(&BigInt::from(unit));
            branches.push((lo, hi, a.to_u64().unwrap()));
        }
        maps.push(IntMap { branches });
    }
    Ok(IntCocycle { slope, unit, maps })
}

/// Step-function evaluator with cut points pre-scaled to grid units.
struct IntEval {
    cuts: Vec<u64>,
    values: Vec<f64>,
}

/// Add a step function to grid values, run by run.
fn add_step_runs(v: &mut [f64], f: &IntEval) {
    for w in 0..f.values.len() {
        let lo = (f.cuts[w] / 4) as usize;
        let hi = (f.cuts[w + 1] / 4) as usize;
        for x in &mut v[lo..hi] {
            *x += f.values[w];
        }
    }
}

impl IntEval {
    fn new(f: &StepFunction, unit: u64) -> Result<Self> {
        let cuts = f
            .cuts()
            .iter()
            .map(|c| {
                q_times_int(c, unit)
                    .ok_or_else(|| RdsError::Config("function cut off the grid".into()))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            cuts,
            values: f.values().to_vec(),
        })
    }

    fn at(&self, pos: u64) -> f64 {
        let i = self.cuts.partition_point(|c| *c <= pos);
        self.values[i - 1]
    }
}

fn lcm_u64(a: u64, b: u64) -> u64 {
    num::integer::lcm(a, b)
}

fn denom_of(x: &Q) -> Result<u64> {
    x.denom()
        .to_u64()
        .ok_or_else(|| RdsError::Config("denominator too large".into()))
}

/// Smallest uniform grid aligned with every map cut, intercept, and
/// function cut, refined s^n_trunc times.
fn grid_denominator(
    c: &IntervalMapCocycle,
    g: &[StepFunction],
    h: &[StepFunction],
    n_trunc: u32,
) -> Result<(u64, u64)> {
    const MAX_CELLS: u64 = 1 << 27;
    let s0 = &c.generators()[0].branches[0].slope;
    if !s0.is_integer() || !s0.is_positive() || s0.to_integer() < BigInt::from(2) {
        return Err(RdsError::Config(
            "eigenfunction grid needs integer slopes >= 2".into(),
        ));
    }
    for map in c.generators() {
        for b in &map.branches {
            if b.slope != *s0 {
                return Err(RdsError::Config(
                    "eigenfunction grid needs one shared slope".into(),
                ));
            }
        }
    }
    let s = s0.to_integer().to_u64().unwrap();
    let mut l = 1u64;
    for map in c.generators() {
        for b in &map.branches {
            l = lcm_u64(l, denom_of(&b.domain.0)?);
            l = lcm_u64(l, denom_of(&b.domain.1)?);
            l = lcm_u64(l, denom_of(&b.intercept)?);
        }
    }
    for f in g.iter().chain(h.iter()) {
        for cut in f.cuts() {
            l = lcm_u64(l, denom_of(cut)?);
        }
    }
    let mut d = l;
    for _ in 0..n_trunc {
        d = d
            .checked_mul(s)
            .filter(|d| *d <= MAX_CELLS)
            .ok_or(RdsError::HorizonTooLarge(MAX_CELLS as usize))?;
    }
    Ok((d, s))
}

#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub f: GridFunction,
    pub rho: f64,
    pub n_trunc: u32,
    pub tail_bound: f64,
}

/// Check that every generator annihilates its g under the transfer
/// operator, the premise of the eigenfunction construction.
pub fn check_zero_pushforward(c: &IntervalMapCocycle, g: &[StepFunction]) -> Result<()> {
    for (i, gi) in g.iter().enumerate() {
        let lg = pf_apply(c.generator(i), gi)?;
        let r = lg.l1_norm();
        if r > 1e-12 {
            return Err(RdsError::InvalidG(r));
        }
    }
    Ok(())
}

/// Truncated eigenfunction series at omega. rho = -inf keeps only the
/// n = 0 term; otherwise rho must be negative. The tail bound is
/// e^{rho (n_trunc+1)} sup|g/h| sup|h| / (1 - e^rho) in sup norm.
pub fn fullspectrum_f(
    c: &IntervalMapCocycle,
    omega: &SymbolSequence,
    rho: f64,
    g: &[StepFunction],
    h: &[StepFunction],
    n_trunc: u32,
) -> Result<Eigenfunction> {
    let k = c.generators().len();
    if g.len() != k || h.len() != k {
        return Err(RdsError::Config("need one g and one h per symbol".into()));
    }
    for hi in h {
        if hi.values().iter().any(|v| *v <= 0.0) {
            return Err(RdsError::Config("h must be strictly positive".into()));
        }
    }
    check_zero_pushforward(c, g)?;
    if rho >= 0.0 {
        return Err(RdsError::Config("rho must be negative".into()));
    }
    let n_terms = if rho == f64::NEG_INFINITY { 0 } else { n_trunc };
    let (denom, s) = grid_denominator(c, g, h, n_terms)?;
    let q_over_h: Vec<StepFunction> = g
        .iter()
        .zip(h.iter())
        .map(|(gi, hi)| {
            // g/h on the merged partition.
            let cuts = crate::step::merge_cuts(gi.cuts(), hi.cuts());
            let values = cuts
                .windows(2)
                .map(|w| {
                    let mid = (&w[0] + &w[1]) / Q::from_integer(2.into());
                    gi.value_at(&mid) / hi.value_at(&mid)
                })
                .collect();
            StepFunction::new(cuts, values)
        })
        .collect::<Result<_>>()?;
    let syms: Vec<usize> = (0..=n_terms as i64)
        .map(|n| omega.get0(n))
        .collect::<Result<_>>()?;
    let e_rho = rho.exp();
    // Backward recursion G_j = q_j + e^rho (G_{j+1} o T_{sym_j}) with
    // G at the deepest level on the coarse base grid. Each composition
    // refines the grid by the shared slope factor, so the total work
    // is geometric in the final cell count instead of linear in the
    // truncation depth. On a branch with intercept a the composition
    // is a cyclic copy: cell i pulls G_{j+1} cell (i + c0) mod d_prev
    // with c0 = (2s + a)/(4s).
    let deepest = n_terms as usize;
    let mut acc: Vec<f64> = {
        let d = denom / s.pow(deepest as u32);
        let qe = IntEval::new(&q_over_h[syms[deepest]], 4 * d)?;
        (0..d).map(|i| qe.at(4 * i + 2)).collect()
    };
    for j in (0..deepest).rev() {
        let d_j = denom / s.pow(j as u32);
        let ic = int_cocycle(c, d_j)?;
        let d_prev = acc.len();
        let mut next = vec![0.0f64; d_j as usize];
        for &(dlo, dhi, a) in &ic.maps[syms[j]].branches {
            let mut dst = (dlo / 4) as usize;
            let mut src = (dst + ((2 * s + a) / (4 * s)) as usize) % d_prev;
            let mut rem = ((dhi - dlo) / 4) as usize;
            while rem > 0 {
                let take = rem.min(d_prev - src);
                for k in 0..take {
                    next[dst + k] = e_rho * acc[src + k];
                }
                dst += take;
                src = (src + take) % d_prev;
                rem -= take;
            }
        }
        let qe = IntEval::new(&q_over_h[syms[j]], 4 * d_j)?;
        add_step_runs(&mut next, &qe);
        acc = next;
    }
    let he = IntEval::new(&h[syms[0]], 4 * denom)?;
    let mut values = acc;
    for w in 0..he.values.len() {
        let lo = (he.cuts[w] / 4) as usize;
        let hi = (he.cuts[w + 1] / 4) as usize;
        for x in &mut values[lo..hi] {
            *x *= he.values[w];
        }
    }
    let sup_q = q_over_h.iter().fold(0.0f64, |m, f| m.max(f.sup_norm()));
    let sup_h = h.iter().fold(0.0f64, |m, f| m.max(f.sup_norm()));
    let tail_bound = if rho == f64::NEG_INFINITY {
        0.0
    } else {
        (rho * (n_trunc as f64 + 1.0)).exp() * sup_q * sup_h / (1.0 - e_rho)
    };
    Ok(Eigenfunction {
        f: GridFunction { denom, values },
        rho,
        n_trunc,
        tail_bound,
    })
}

/// Exact transfer-operator image of a grid function. Requires the map
/// branch data to lie on the grid; the image is again a grid function
/// because the shared slope is an integer.
pub fn grid_pf(c: &IntervalMapCocycle, sym: usize, f: &GridFunction) -> Result<GridFunction> {
    let ic = int_cocycle(c, f.denom)?;
    let unit = ic.unit;
    let s = ic.slope;
    let m = &ic.maps[sym];
    let inv_s = 1.0 / s as f64;
    let values: Vec<f64> = (0..f.denom)
        .into_par_iter()
        .map(|j| {
            let y = 4 * j + 2;
            let mut acc = 0.0f64;
            for &(dlo, dhi, a) in &m.branches {
                for wrap in 0..=s {
                    let num = y as i128 + wrap as i128 * unit as i128 - a as i128;
                    if num < 0 {
                        continue;
                    }
                    // Preimage x = num / (unit * s); x in [dlo, dhi)?
                    let num = num as u128;
                    if (dlo as u128) * s as u128 <= num && num < (dhi as u128) * s as u128 {
                        let cell = (num / (4 * s as u128)) as usize;
                        acc += f.values[cell] * inv_s;
                    }
                }
            }
            acc
        })
        .collect();
    Ok(GridFunction {
        denom: f.denom,
        values,
    })
}

/// L1 residual of the truncated eigen-relation L f_omega = e^rho f_{theta omega},
/// together with the analytic tail bound it must stay under (doubled).
pub fn eigen_residual(
    c: &IntervalMapCocycle,
    omega: &SymbolSequence,
    rho: f64,
    g: &[StepFunction],
    h: &[StepFunction],
    n_trunc: u32,
) -> Result<(f64, f64)> {
    let f0 = fullspectrum_f(c, omega, rho, g, h, n_trunc)?;
    let f1 = fullspectrum_f(c, &omega.shifted(1), rho, g, h, n_trunc)?;
    let lf = grid_pf(c, omega.get0(0)?, &f0.f)?;
    // Truncation at equal depth leaves the two sides on grids that
    // differ by one refinement level; align on the finer one.
    let (lf, f1v) = align(lf, f1.f);
    let resid = lf.sub_scaled(&f1v, rho.exp()).l1_norm();
    Ok((resid, f0.tail_bound))
}

fn align(a: GridFunction, b: GridFunction) -> (GridFunction, GridFunction) {
    if a.denom == b.denom {
        return (a, b);
    }
    let d = num::integer::lcm(a.denom, b.denom);
    (refine_to(&a, d), refine_to(&b, d))
}

/// Merge cells in groups of `factor` when each group is constant.
fn coarsen_exact(f: &GridFunction, factor: u64) -> Option<GridFunction> {
    let mut values = Vec::with_capacity((f.denom / factor) as usize);
    for chunk in f.values.chunks(factor as usize) {
        if chunk.iter().any(|v| *v != chunk[0]) {
            return None;
        }
        values.push(chunk[0]);
    }
    Some(GridFunction {
        denom: f.denom / factor,
        values,
    })
}

fn refine_to(f: &GridFunction, denom: u64) -> GridFunction {
    let r = (denom / f.denom) as usize;
    let mut values = Vec::with_capacity(denom as usize);
    for v in &f.values {
        values.extend(std::iter::repeat(*v).take(r));
    }
    GridFunction { denom, values }
}

/// Finite-time exponent of a pushed grid function: least-squares slope
/// of log ||L^{(n)} f||_{L1} over n = 0..horizon.
pub fn pushed_exponent(
    c: &IntervalMapCocycle,
    omega: &SymbolSequence,
    f: &GridFunction,
    horizon: u32,
) -> Result<(f64, Vec<f64>)> {
    let (l_min, s) = grid_denominator(c, &[], &[], 0)?;
    let mut cur = f.clone();
    let mut logs = vec![cur.l1_norm().ln()];
    for n in 0..horizon {
        cur = grid_pf(c, omega.get0(n as i64)?, &cur)?;
        // The transfer image of a grid function is representable one
        // refinement level coarser (the preimage of a coarser cell is
        // exactly one finer cell); shrink whenever the values confirm
        // it, so deep pushes stay cheap.
        while cur.denom % s == 0 && (cur.denom / s) % l_min == 0 {
            match coarsen_exact(&cur, s) {
                Some(coarse) => cur = coarse,
                None => break,
            }
        }
        let norm = cur.l1_norm();
        if norm <= 0.0 {
            logs.push(f64::NEG_INFINITY);
            break;
        }
        logs.push(norm.ln());
    }
    let xs: Vec<f64> = (0..logs.len()).map(|n| n as f64).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = logs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&logs).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok((sxy / sxx, logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::example2;
    use crate::interval::{q, q_int};
    use approx::assert_abs_diff_eq;

    #[test]
    fn rho_minus_infinity_gives_g() {
        let (c, omega, g, h) = example2();
        let e = fullspectrum_f(&c, &omega, f64::NEG_INFINITY, &g, &h, 20).unwrap();
        assert_eq!(e.tail_bound, 0.0);
        let g0 = GridFunction::from_step(&g[omega.get0(0).unwrap()], e.f.denom).unwrap();
        assert_eq!(e.f, g0);
    }

    #[test]
    fn zero_pushforward_holds_for_both_generators() {
        let (c, _, g, _) = example2();
        check_zero_pushforward(&c, &g).unwrap();
    }

    #[test]
    fn invalid_g_detected() {
        let (c, _, _, h) = example2();
        let bad = vec![h[0].clone(), h[1].clone()];
        assert!(matches!(
            check_zero_pushforward(&c, &bad),
            Err(RdsError::InvalidG(_))
        ));
    }

    #[test]
    fn sign_sets_are_halves() {
        let (c, omega, g, h) = example2();
        let e = fullspectrum_f(&c, &omega, -1.0, &g, &h, 8).unwrap();
        let (plus, minus) = e.f.sign_regions();
        assert_eq!(plus.parts(), &[(q(1, 2), q_int(1))]);
        assert_eq!(minus.parts(), &[(q_int(0), q(1, 2))]);
    }

    #[test]
    fn residual_within_tail_bound_small() {
        let (c, omega, g, h) = example2();
        for rho in [-2.0, -1.0, -0.4] {
            let (resid, tail) = eigen_residual(&c, &omega, rho, &g, &h, 10).unwrap();
            assert!(
                resid <= 2.0 * tail,
                "rho={rho}: residual {resid} vs tail {tail}"
            );
        }
    }

    #[test]
    fn grid_pf_matches_exact_pf() {
        let (c, _, g, _) = example2();
        let f = GridFunction::from_step(&g[1], 40).unwrap();
        let lf = grid_pf(&c, 1, &f).unwrap();
        let exact = pf_apply(c.generator(1), &g[1]).unwrap();
        let sampled = GridFunction::from_step(&exact, 40).unwrap();
        for (a, b) in lf.values.iter().zip(&sampled.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn grid_pf_preserves_integral() {
        let (c, _, _, _) = example2();
        let f = GridFunction {
            denom: 40,
            values: (0..40).map(|i| (i as f64 * 0.77).sin()).collect(),
        };
        for sym in 0..2 {
            let lf = grid_pf(&c, sym, &f).unwrap();
            assert_abs_diff_eq!(lf.integral(), f.integral(), epsilon = 1e-13);
        }
    }

    #[test]
    fn pushed_eigenfunction_decays_at_rho() {
        let (c, omega, g, h) = example2();
        let e = fullspectrum_f(&c, &omega, -1.0, &g, &h, 12).unwrap();
        let (slope, _) = pushed_exponent(&c, &omega, &e.f, 10).unwrap();
        assert!((slope - (-1.0)).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn uniform_density_is_fixed() {
        let (c, _, _, _) = example2();
        let one = GridFunction::constant(40, 1.0);
        for sym in 0..2 {
            let lf = grid_pf(&c, sym, &one).unwrap();
            for v in &lf.values {
                assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
            }
        }
    }
}
