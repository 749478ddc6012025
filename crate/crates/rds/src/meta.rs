//! Random sign sets, survivor sets, and escape rates by three
//! independent estimators, plus the escape-rate upper-bound check.

use crate::base::SymbolSequence;
use crate::error::{RdsError, Result};
use crate::interval::{q_ln, IntervalUnion, Q};
use crate::maps::IntervalMapCocycle;
use crate::matrix::MatrixCocycle;
use crate::step::StepFunction;
use nalgebra::RowDVector;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

/// Per-time-step strict-positivity and strict-negativity regions.
#[derive(Debug, Clone)]
pub enum RandomSignSet {
    /// Interval cocycles: (plus, minus) interval unions per step.
    Intervals(Vec<(IntervalUnion, IntervalUnion)>),
    /// Matrix cocycles: (plus, minus) index subsets of 0..k per step.
    Indices(Vec<(Vec<usize>, Vec<usize>)>),
}

impl RandomSignSet {
    pub fn horizon(&self) -> usize {
        match self {
            RandomSignSet::Intervals(v) => v.len() - 1,
            RandomSignSet::Indices(v) => v.len() - 1,
        }
    }

    pub fn interval_side(&self, n: usize, side: Side) -> &IntervalUnion {
        match self {
            RandomSignSet::Intervals(v) => match side {
                Side::Plus => &v[n].0,
                Side::Minus => &v[n].1,
            },
            _ => panic!("index sign set has no interval side"),
        }
    }

    pub fn index_side(&self, n: usize, side: Side) -> &[usize] {
        match self {
            RandomSignSet::Indices(v) => match side {
                Side::Plus => &v[n].0,
                Side::Minus => &v[n].1,
            },
            _ => panic!("interval sign set has no index side"),
        }
    }
}

/// Sign sets of a path of step functions; zeros belong to neither side.
pub fn sign_sets(path: &[StepFunction]) -> Result<RandomSignSet> {
    if path.is_empty() {
        return Err(RdsError::Config("empty function path".into()));
    }
    let mut steps = Vec::with_capacity(path.len());
    for (n, f) in path.iter().enumerate() {
        if f.values().iter().all(|&v| v == 0.0) {
            return Err(RdsError::DegenerateFunction(n));
        }
        steps.push(f.sign_regions());
    }
    Ok(RandomSignSet::Intervals(steps))
}

/// Sign sets of a path of coefficient vectors.
pub fn sign_sets_vectors(path: &[Vec<f64>]) -> Result<RandomSignSet> {
    if path.is_empty() {
        return Err(RdsError::Config("empty vector path".into()));
    }
    let mut steps = Vec::with_capacity(path.len());
    for (n, v) in path.iter().enumerate() {
        if v.iter().all(|&x| x == 0.0) {
            return Err(RdsError::DegenerateFunction(n));
        }
        let plus = v.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(i, _)| i).collect();
        let minus = v.iter().enumerate().filter(|(_, &x)| x < 0.0).map(|(i, _)| i).collect();
        steps.push((plus, minus));
    }
    Ok(RandomSignSet::Indices(steps))
}

/// Exact survivor set: points whose first n iterates visit the
/// prescribed moving sets. Computed backward:
/// R <- A(theta^{n-1} omega), then R <- T^{-1}(R) intersect A(theta^i omega).
pub fn survivor_set(
    c: &IntervalMapCocycle,
    sets: &RandomSignSet,
    side: Side,
    omega: &SymbolSequence,
    n: usize,
) -> Result<IntervalUnion> {
    if n == 0 {
        return Ok(IntervalUnion::unit());
    }
    if n > sets.horizon() + 1 {
        return Err(RdsError::Config("n exceeds the sign-set horizon".into()));
    }
    let mut r = sets.interval_side(n - 1, side).clone();
    for i in (0..n - 1).rev() {
        let map = c.map_at(omega, i as i64)?;
        r = map.preimage(&r).intersect(sets.interval_side(i, side));
    }
    Ok(r)
}

/// Per-step survivor measures with a fitted decay slope.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivorTrace {
    /// log m(A^{(n)}) for n in 0..=n_max; None marks exact zero.
    pub log_measures: Vec<Option<f64>>,
    pub fit_lo: usize,
    pub fit_hi: usize,
    pub slope: f64,
    pub residual: f64,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let resid = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let p = my + slope * (x - mx);
            (y - p) * (y - p)
        })
        .sum::<f64>()
        .sqrt();
    (slope, resid)
}

impl SurvivorTrace {
    /// Build from exact rational measures, fitting over [fit_lo, fit_hi].
    pub fn from_measures(measures: &[Q], fit_lo: usize, fit_hi: usize) -> Result<Self> {
        let log_measures: Vec<Option<f64>> = measures
            .iter()
            .map(|m| if m.is_zero() { None } else { Some(q_ln(m)) })
            .collect();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for n in fit_lo..=fit_hi.min(measures.len() - 1) {
            match log_measures[n] {
                Some(l) => {
                    xs.push(n as f64);
                    ys.push(l);
                }
                None => {
                    return Ok(Self {
                        log_measures,
                        fit_lo,
                        fit_hi,
                        slope: f64::NEG_INFINITY,
                        residual: 0.0,
                    })
                }
            }
        }
        if xs.len() < 2 {
            return Err(RdsError::Config("fit window needs at least two points".into()));
        }
        let (slope, residual) = fit_slope(&xs, &ys);
        Ok(Self {
            log_measures,
            fit_lo,
            fit_hi,
            slope,
            residual,
        })
    }
}

/// Escape rate from a survivor trace: minus the fitted log-measure slope.
/// Positive infinity signals escape in finite time.
pub fn escape_rate_exact(trace: &SurvivorTrace) -> f64 {
    if trace.slope == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        -trace.slope
    }
}

/// Exact survivor measures via interval unions, n = 0..=n_max.
pub fn survivor_measures(
    c: &IntervalMapCocycle,
    sets: &RandomSignSet,
    side: Side,
    omega: &SymbolSequence,
    n_max: usize,
) -> Result<Vec<Q>> {
    (0..=n_max)
        .map(|n| Ok(survivor_set(c, sets, side, omega, n)?.measure()))
        .collect()
}

/// Exact survivor measures for cell-aligned sets on a shared Markov
/// partition, via the exact restricted transfer cocycle. Equals the
/// interval-union computation but stays polynomial in the horizon.
pub fn survivor_measures_markov(
    transfer: &[Vec<Vec<Q>>],
    widths: &[Q],
    sets: &RandomSignSet,
    side: Side,
    omega: &SymbolSequence,
    n_max: usize,
) -> Result<Vec<Q>> {
    let k = widths.len();
    let ind = |n: usize| -> Vec<bool> {
        let mut mask = vec![false; k];
        for &i in sets.index_side(n, side) {
            mask[i] = true;
        }
        mask
    };
    let mut out = vec![Q::one()];
    if n_max == 0 {
        return Ok(out);
    }
    // Coefficient vector of the density 1 restricted to the first set.
    let mask0 = ind(0);
    let mut f: Vec<Q> = (0..k)
        .map(|i| if mask0[i] { Q::one() } else { Q::zero() })
        .collect();
    let measure =
        |f: &[Q]| -> Q { f.iter().zip(widths).fold(Q::zero(), |a, (v, w)| a + v * w) };
    out.push(measure(&f));
    for n in 1..n_max {
        let m = &transfer[omega.get0((n - 1) as i64)?];
        let mask = ind(n);
        let mut next = vec![Q::zero(); k];
        for i in 0..k {
            if f[i].is_zero() {
                continue;
            }
            for j in 0..k {
                if mask[j] && !m[i][j].is_zero() {
                    next[j] += &f[i] * &m[i][j];
                }
            }
        }
        f = next;
        out.push(measure(&f));
    }
    Ok(out)
}

/// Escape rate from the conditional (restricted) cocycle: push the
/// uniform vector through matrices with rows and columns zeroed outside
/// the moving index set, and return minus the fitted slope of the
/// cumulative log-mass series over the last half of the horizon.
pub fn conditional_escape(
    cmat: &MatrixCocycle,
    sets: &RandomSignSet,
    side: Side,
    omega: &SymbolSequence,
    horizon: usize,
) -> Result<f64> {
    let k = cmat.dim();
    let mask = |n: usize| -> Vec<bool> {
        let mut m = vec![false; k];
        for &i in sets.index_side(n, side) {
            m[i] = true;
        }
        m
    };
    let m0 = mask(0);
    let mut v = RowDVector::from_fn(k, |_, j| if m0[j] { 1.0 / k as f64 } else { 0.0 });
    let mut acc = 0.0;
    let mut series = Vec::with_capacity(horizon);
    for n in 0..horizon {
        let a = cmat.matrix_at(omega, n as i64)?;
        v *= a;
        let m = mask((n + 1).min(sets.horizon()));
        for (j, keep) in m.iter().enumerate() {
            if !keep {
                v[j] = 0.0;
            }
        }
        let s: f64 = v.iter().map(|x| x.abs()).sum();
        if s <= 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += s.ln();
        series.push(acc);
        v /= s;
    }
    let lo = horizon / 2;
    let xs: Vec<f64> = (lo..horizon).map(|n| (n + 1) as f64).collect();
    let ys: Vec<f64> = series[lo..].to_vec();
    let (slope, _) = fit_slope(&xs, &ys);
    Ok(-slope)
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloEscape {
    pub estimate: f64,
    pub sigma: f64,
    pub survivors: Vec<u64>,
    pub n_samples: u64,
}

/// Monte Carlo escape-rate estimate: uniform start points, exact-map
/// iteration, survival counted against the exact sets, slope fit with
/// binomial error bars over the fitted window.
pub fn escape_rate_monte_carlo(
    c: &IntervalMapCocycle,
    sets: &RandomSignSet,
    side: Side,
    omega: &SymbolSequence,
    horizon: usize,
    n_samples: u64,
    seed: u64,
) -> Result<MonteCarloEscape> {
    if n_samples < 1000 {
        return Err(RdsError::Config("need at least 1000 samples".into()));
    }
    let horizon = horizon.min(sets.horizon());
    let maps: Vec<_> = (0..horizon)
        .map(|n| c.map_at(omega, n as i64).cloned())
        .collect::<Result<_>>()?;
    let block = 8192u64;
    let n_blocks = (n_samples + block - 1) / block;
    let denom = Q::from_integer(num_bigint::BigInt::from(1u64 << 53));
    let tallies: Vec<Vec<u64>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (b.wrapping_mul(0x9e3779b97f4a7c15)));
            let lo = b * block;
            let hi = (lo + block).min(n_samples);
            let mut counts = vec![0u64; horizon + 1];
            for _ in lo..hi {
                let num: u64 = rng.gen_range(0..(1u64 << 53));
                let mut x = Q::new(num.into(), 1.into()) / &denom;
                let mut alive = sets
                    .interval_side(0, side)
                    .contains(&x);
                if alive {
                    counts[0] += 1;
                }
                for (n, map) in maps.iter().enumerate() {
                    if !alive {
                        break;
                    }
                    x = map.apply(&x).unwrap();
                    alive = sets.interval_side(n + 1, side).contains(&x);
                    if alive {
                        counts[n + 1] += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut survivors = vec![0u64; horizon + 1];
    for t in tallies {
        for (s, v) in survivors.iter_mut().zip(t) {
            *s += v;
        }
    }
    if survivors.get(3).copied().unwrap_or(0) == 0 {
        return Err(RdsError::InsufficientSurvival);
    }
    let (estimate, sigma) = windowed_decay_estimate(&survivors)?;
    Ok(MonteCarloEscape {
        estimate,
        sigma,
        survivors,
        n_samples,
    })
}

/// Decay rate from nested survivor counts over the later half of the
/// usable range: -(log S_hi - log S_lo)/(hi - lo). Successive counts
/// are binomial thinnings, so the log-count increments are independent
/// and the variance of the window difference is 1/S_hi - 1/S_lo.
pub fn windowed_decay_estimate(survivors: &[u64]) -> Result<(f64, f64)> {
    let mut hi = 0;
    while hi + 1 < survivors.len() && survivors[hi + 1] >= 50 {
        hi += 1;
    }
    if hi < 2 {
        return Err(RdsError::InsufficientSurvival);
    }
    let lo = hi / 2;
    let s_lo = survivors[lo] as f64;
    let s_hi = survivors[hi] as f64;
    let span = (hi - lo) as f64;
    let estimate = -(s_hi.ln() - s_lo.ln()) / span;
    let sigma = (1.0 / s_hi - 1.0 / s_lo).max(0.0).sqrt() / span;
    Ok((estimate, sigma))
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeBoundReport {
    pub lambda: f64,
    pub escape_plus: f64,
    pub escape_minus: f64,
    pub tol: f64,
    pub margin_plus: f64,
    pub margin_minus: f64,
    pub pass: bool,
}

/// Check the escape-rate upper bound: both rates at most -lambda + tol.
pub fn verify_escape_bound(lambda: f64, escape_plus: f64, escape_minus: f64, tol: f64) -> EscapeBoundReport {
    let bound = -lambda + tol;
    let margin_plus = escape_plus - bound;
    let margin_minus = escape_minus - bound;
    EscapeBoundReport {
        lambda,
        escape_plus,
        escape_minus,
        tol,
        margin_plus,
        margin_minus,
        pass: margin_plus <= 0.0 && margin_minus <= 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{build_omega_star, BaseSystem, OmegaStar};
    use crate::interval::{q, q_int};
    use crate::maps::PiecewiseAffineMap;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn doubling_cocycle() -> (IntervalMapCocycle, SymbolSequence) {
        let base = BaseSystem::full_shift(2);
        let c = IntervalMapCocycle::new(
            vec![
                PiecewiseAffineMap::doubling(Q::zero()),
                PiecewiseAffineMap::doubling(Q::zero()),
            ],
            base,
            None,
        )
        .unwrap();
        let omega = build_omega_star(OmegaStar::Example2).unwrap();
        (c, omega)
    }

    fn constant_half_sets(n: usize) -> RandomSignSet {
        let step = (
            IntervalUnion::interval(q_int(0), q(1, 2)),
            IntervalUnion::interval(q(1, 2), q_int(1)),
        );
        RandomSignSet::Intervals(vec![step; n + 1])
    }

    #[test]
    fn survivor_halves_doubling() {
        let (c, omega) = doubling_cocycle();
        let sets = constant_half_sets(12);
        for n in 1..=10usize {
            let s = survivor_set(&c, &sets, Side::Plus, &omega, n).unwrap();
            assert_eq!(s.measure(), Q::new(1.into(), (1i64 << n).into()));
        }
    }

    #[test]
    fn exact_escape_rate_is_log_two() {
        let (c, omega) = doubling_cocycle();
        let sets = constant_half_sets(12);
        let ms = survivor_measures(&c, &sets, Side::Plus, &omega, 12).unwrap();
        let trace = SurvivorTrace::from_measures(&ms, 1, 12).unwrap();
        assert_abs_diff_eq!(escape_rate_exact(&trace), 2.0f64.ln(), epsilon = 1e-12);
        assert!(trace.residual < 1e-12);
    }

    #[test]
    fn full_set_escape_zero() {
        let (c, omega) = doubling_cocycle();
        let step = (IntervalUnion::unit(), IntervalUnion::empty());
        let sets = RandomSignSet::Intervals(vec![step; 9]);
        let ms = survivor_measures(&c, &sets, Side::Plus, &omega, 8).unwrap();
        let trace = SurvivorTrace::from_measures(&ms, 0, 8).unwrap();
        assert_abs_diff_eq!(escape_rate_exact(&trace), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn monotone_survivors() {
        let (c, omega) = doubling_cocycle();
        let sets = constant_half_sets(10);
        let ms = survivor_measures(&c, &sets, Side::Plus, &omega, 10).unwrap();
        for w in ms.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn conditional_escape_scalar_half() {
        // Doubling-map transfer matrix on halves, restricted to cell 1:
        // the restricted matrix is the scalar 1/2.
        let base = BaseSystem::full_shift(2);
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let cmat = MatrixCocycle::new(vec![m.clone(), m], base).unwrap();
        let omega = build_omega_star(OmegaStar::Example2).unwrap();
        let sets = RandomSignSet::Indices(vec![(vec![0], vec![1]); 41]);
        let e = conditional_escape(&cmat, &sets, Side::Plus, &omega, 40).unwrap();
        assert_abs_diff_eq!(e, 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn conditional_escape_no_restriction_is_zero() {
        let base = BaseSystem::full_shift(2);
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let cmat = MatrixCocycle::new(vec![m.clone(), m], base).unwrap();
        let omega = build_omega_star(OmegaStar::Example2).unwrap();
        let sets = RandomSignSet::Indices(vec![(vec![0, 1], vec![]); 41]);
        let e = conditional_escape(&cmat, &sets, Side::Plus, &omega, 40).unwrap();
        assert_abs_diff_eq!(e, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn annihilating_restriction_reports_infinity() {
        let base = BaseSystem::full_shift(2);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let cmat = MatrixCocycle::new(vec![m.clone(), m], base).unwrap();
        let omega = build_omega_star(OmegaStar::Example2).unwrap();
        // The permutation swaps cells each step; holding the set fixed at
        // {0} annihilates immediately.
        let sets = RandomSignSet::Indices(vec![(vec![0], vec![1]); 11]);
        let e = conditional_escape(&cmat, &sets, Side::Plus, &omega, 10).unwrap();
        assert_eq!(e, f64::INFINITY);
    }

    #[test]
    fn bound_report_arithmetic() {
        let r = verify_escape_bound(-1.0, 0.7, 0.9, 0.0);
        assert!(r.pass);
        let r = verify_escape_bound(-1.0, 1.2, 0.9, 0.05);
        assert!(!r.pass);
        assert_abs_diff_eq!(r.margin_plus, 0.15, epsilon = 1e-12);
    }

    #[test]
    fn markov_trace_matches_interval_trace() {
        let (c, omega) = doubling_cocycle();
        let sets_iv = constant_half_sets(8);
        let ms_iv = survivor_measures(&c, &sets_iv, Side::Plus, &omega, 8).unwrap();
        let p = crate::maps::MarkovPartition::new(vec![q_int(0), q(1, 2), q_int(1)]).unwrap();
        let transfer: Vec<_> = c
            .generators()
            .iter()
            .map(|m| crate::maps::transfer_matrix_markov(m, &p).unwrap())
            .collect();
        let widths = vec![q(1, 2), q(1, 2)];
        let sets_ix = RandomSignSet::Indices(vec![(vec![0], vec![1]); 9]);
        let ms_mk =
            survivor_measures_markov(&transfer, &widths, &sets_ix, Side::Plus, &omega, 8).unwrap();
        assert_eq!(ms_iv, ms_mk);
    }

    #[test]
    fn monte_carlo_doubling() {
        let (c, omega) = doubling_cocycle();
        let sets = constant_half_sets(16);
        let mc =
            escape_rate_monte_carlo(&c, &sets, Side::Plus, &omega, 16, 200_000, 7).unwrap();
        assert!((mc.estimate - 2.0f64.ln()).abs() < 3.0 * mc.sigma + 0.02);
    }
}
