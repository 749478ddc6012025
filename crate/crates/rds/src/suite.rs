//! Randomized property suites: metastable Markov interval-map cocycles
//! for the escape-rate upper bound, and aperiodic adjacency cocycles
//! for the subshift-decomposition entropy bounds.
//!
//! Instance generators deliberately produce two weakly coupled blocks.
//! A generic random pair has its second exponent deep below the first,
//! where finite-window Oseledets data is numerically meaningless; the
//! metastable family keeps lambda_2 in a band where every downstream
//! quantity is well conditioned, and instances failing the conditioning
//! filters are rejected before any criterion is evaluated.

use crate::base::{ExtensionRule, SymbolSequence};
use crate::error::{RdsError, Result};
use crate::interval::{IntervalUnion, Q};
use crate::maps::{matrix_to_f64, Branch, IntervalMapCocycle, MarkovPartition, PiecewiseAffineMap};
use crate::matrix::{oseledets_vector, lyapunov_spectrum, MatrixCocycle};
use crate::meta::{
    conditional_escape, escape_rate_exact, survivor_measures_markov, RandomSignSet, Side,
    SurvivorTrace,
};
use crate::sft::{decompose, entropy_bounds_check, uniform_aperiodicity, vector_bound_check, RandomSFT};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

const DENOM: i64 = 64;
const HORIZON: usize = 100;
const PAST: i64 = 200;
const BACK_WINDOW: i64 = 30;

/// Random driving sequence over two symbols with an explicit window
/// wide enough for all suite computations.
fn random_omega(rng: &mut ChaCha8Rng, lo: i64, len: usize) -> SymbolSequence {
    let window: Vec<u8> = (0..len).map(|_| rng.gen_range(1..=2u8)).collect();
    SymbolSequence::new(
        2,
        lo,
        window,
        ExtensionRule::Constant(1),
        ExtensionRule::Constant(1),
    )
    .unwrap()
}

/// One random two-block row-stochastic matrix with denominator DENOM:
/// each row leaks one or two small entries into the other block.
fn random_metastable_matrix(rng: &mut ChaCha8Rng, half: usize) -> Vec<Vec<Q>> {
    let q = 2 * half;
    let mut m = vec![vec![0i64; q]; q];
    for i in 0..q {
        let own = if i < half { 0..half } else { half..q };
        let other = if i < half { half..q } else { 0..half };
        let ncross = rng.gen_range(1..=2usize);
        let mut cols: Vec<usize> = other.clone().collect();
        for _ in 0..ncross {
            let pick = rng.gen_range(0..cols.len());
            let c = cols.swap_remove(pick);
            m[i][c] = rng.gen_range(1..=2i64);
        }
        let rem = DENOM - m[i].iter().sum::<i64>();
        let w: Vec<f64> = (0..half).map(|_| rng.gen_range(0.2..1.0)).collect();
        let wsum: f64 = w.iter().sum();
        let mut given = 0i64;
        for (k, j) in own.clone().enumerate() {
            let v = ((w[k] / wsum) * rem as f64).floor() as i64;
            m[i][j] = v;
            given += v;
        }
        m[i][own.start] += rem - given;
    }
    m.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| Q::new(BigInt::from(v), BigInt::from(DENOM)))
                .collect()
        })
        .collect()
}

/// Markov piecewise-affine map on `q` uniform cells realizing the given
/// row-stochastic transfer matrix: cell i is subdivided in proportion
/// to row i, each piece mapped affinely onto its target cell.
pub fn markov_map_from_matrix(m: &[Vec<Q>]) -> Result<PiecewiseAffineMap> {
    let q = m.len();
    let cell = |j: usize| Q::new(j.into(), q.into());
    let width = Q::new(1.into(), q.into());
    let mut branches = Vec::new();
    for (i, row) in m.iter().enumerate() {
        let mut lo = cell(i);
        for (j, w) in row.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let piece = w * &width;
            let hi = &lo + &piece;
            // Piece [lo, hi) -> cell j: slope 1/w.
            let slope = w.recip();
            let intercept = cell(j) - &slope * &lo;
            branches.push(Branch {
                domain: (lo.clone(), hi.clone()),
                slope,
                intercept,
            });
            lo = hi;
        }
        if lo != cell(i + 1) {
            return Err(RdsError::Config("row does not sum to one".into()));
        }
    }
    PiecewiseAffineMap::new(branches, false)
}

fn product_window(
    c: &MatrixCocycle,
    omega: &SymbolSequence,
    lo: i64,
    hi: i64,
) -> Result<DMatrix<f64>> {
    let mut p = DMatrix::identity(c.dim(), c.dim());
    for n in lo..hi {
        p *= c.matrix_at(omega, n)?;
    }
    Ok(p)
}

fn fit_last_half(logs: &[f64]) -> f64 {
    let lo = logs.len() / 2;
    let xs: Vec<f64> = (lo..logs.len()).map(|n| n as f64).collect();
    let ys = &logs[lo..];
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct MetaSuiteInstance {
    pub cells: usize,
    pub lambda2: f64,
    /// Decay slope of the pushed sign function itself.
    pub slope_f: f64,
    pub escape_plus: f64,
    pub escape_minus: f64,
    pub escape_plus_exact: f64,
    pub escape_minus_exact: f64,
    pub escape_plus_mc: f64,
    pub mc_sigma: f64,
    pub balance_error: f64,
    /// max over both sides of E - (-lambda2 + 2/horizon).
    pub bound_margin: f64,
    pub estimator_spread: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetaSuiteReport {
    pub requested: usize,
    pub tries: usize,
    pub instances: Vec<MetaSuiteInstance>,
    pub pass: bool,
}

fn meta_suite_try(seed: u64, idx: u64) -> Result<Option<MetaSuiteInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ idx.wrapping_mul(0x9e3779b97f4a7c15));
    let half = rng.gen_range(2..=4usize);
    let q = 2 * half;
    let exact: Vec<Vec<Vec<Q>>> = (0..2).map(|_| random_metastable_matrix(&mut rng, half)).collect();
    let omega = random_omega(
        &mut rng,
        -(PAST + BACK_WINDOW + 5),
        (PAST + BACK_WINDOW + HORIZON as i64 + 10) as usize,
    );
    let base = crate::base::BaseSystem::full_shift(2);
    let cmat = MatrixCocycle::new(
        exact.iter().map(|m| matrix_to_f64(m)).collect(),
        base.clone(),
    )?;
    let spec = lyapunov_spectrum(&cmat, &omega, HORIZON as i64, 3.min(q))?;
    let l2 = spec.exponent(1);
    let l3 = spec.exponent(2);
    if !(-0.25..-0.03).contains(&l2) || l2 - l3 <= 0.05 {
        return Ok(None);
    }
    // Leading density path, equilibrated from the deep past.
    let mut h = vec![1.0 / q as f64; q];
    let push = |v: &mut Vec<f64>, n: i64| -> Result<f64> {
        let a = cmat.matrix_at(&omega, n)?;
        let mut next = vec![0.0f64; q];
        for i in 0..q {
            for j in 0..q {
                next[j] += v[i] * a[(i, j)];
            }
        }
        let s: f64 = next.iter().map(|x| x.abs()).sum();
        for x in &mut next {
            *x /= s;
        }
        *v = next;
        Ok(s)
    };
    for n in -PAST..0 {
        push(&mut h, n)?;
    }
    let mut hpath = vec![h.clone()];
    for n in 0..HORIZON as i64 {
        push(&mut h, n)?;
        hpath.push(h.clone());
    }
    // Second-direction seed from the backward-window SVD.
    let w = product_window(&cmat, &omega, -BACK_WINDOW, 0)?;
    let svd = w.svd(true, true);
    let sigma = &svd.singular_values;
    if sigma[1] / sigma[2].max(1e-300) < 10.0 {
        return Ok(None);
    }
    let vrow = svd.v_t.as_ref().unwrap().row(1);
    let h0 = &hpath[0];
    let mass: f64 = vrow.iter().sum();
    let h0sum: f64 = h0.iter().sum();
    let mut v: Vec<f64> = vrow
        .iter()
        .zip(h0)
        .map(|(x, hh)| x - mass / h0sum * hh)
        .collect();
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    for x in &mut v {
        *x /= norm;
    }
    // Push forward, re-zeroing the mass component against the leading
    // density each step to stop stochastic-noise regrowth of the
    // conserved mass mode.
    let mut masks: Vec<(Vec<usize>, Vec<usize>)> = Vec::with_capacity(HORIZON + 1);
    let mask_of = |v: &[f64]| {
        (
            (0..v.len()).filter(|&i| v[i] > 0.0).collect::<Vec<_>>(),
            (0..v.len()).filter(|&i| v[i] < 0.0).collect::<Vec<_>>(),
        )
    };
    masks.push(mask_of(&v));
    let mut balance = 0.0f64;
    let mut acc = 0.0f64;
    let mut logs = Vec::with_capacity(HORIZON);
    for n in 0..HORIZON as i64 {
        let a = cmat.matrix_at(&omega, n)?;
        let mut lv = vec![0.0f64; q];
        for i in 0..q {
            for j in 0..q {
                lv[j] += v[i] * a[(i, j)];
            }
        }
        let hn = &hpath[(n + 1) as usize];
        let hsum: f64 = hn.iter().sum();
        let lmass: f64 = lv.iter().sum();
        for (x, hh) in lv.iter_mut().zip(hn) {
            *x -= lmass * hh / hsum;
        }
        let tot: f64 = lv.iter().map(|x| x.abs()).sum();
        let pos: f64 = lv.iter().filter(|&&x| x > 0.0).sum();
        balance = balance.max((pos - tot / 2.0).abs() / tot);
        acc += tot.ln();
        logs.push(acc);
        for x in &mut lv {
            *x /= tot;
        }
        v = lv;
        masks.push(mask_of(&v));
    }
    let slope_f = fit_last_half(&logs);
    let sets = RandomSignSet::Indices(masks);
    let e_plus = conditional_escape(&cmat, &sets, Side::Plus, &omega, HORIZON)?;
    let e_minus = conditional_escape(&cmat, &sets, Side::Minus, &omega, HORIZON)?;
    // Exact rational survivor trace through the restricted transfer
    // cocycle, fitted over the same window.
    let widths = vec![Q::new(1.into(), q.into()); q];
    let mut exact_rates = [0.0f64; 2];
    for (slot, side) in [(0usize, Side::Plus), (1, Side::Minus)] {
        let ms = survivor_measures_markov(&exact, &widths, &sets, side, &omega, HORIZON)?;
        let trace = SurvivorTrace::from_measures(&ms, HORIZON / 2, HORIZON)?;
        exact_rates[slot] = escape_rate_exact(&trace);
    }
    // Monte Carlo on the cell chain: uniform start in the step-0 set,
    // cell-to-cell transitions with row probabilities.
    let (mc, mc_sigma) = chain_escape_mc(&cmat, &sets, Side::Plus, &omega, 60, 20_000, &mut rng)?;
    let bound = -l2 + 2.0 / HORIZON as f64;
    let bound_margin = (e_plus - bound).max(e_minus - bound);
    let spread = (e_plus - exact_rates[0])
        .abs()
        .max((e_minus - exact_rates[1]).abs())
        .max((mc - e_plus).abs());
    let tol = (3.0 * mc_sigma).max(0.05);
    let pass = bound_margin <= 0.0
        && balance <= 1e-9
        && (e_plus - exact_rates[0]).abs() <= 0.05
        && (e_minus - exact_rates[1]).abs() <= 0.05
        && (mc - e_plus).abs() <= tol;
    Ok(Some(MetaSuiteInstance {
        cells: q,
        lambda2: l2,
        slope_f,
        escape_plus: e_plus,
        escape_minus: e_minus,
        escape_plus_exact: exact_rates[0],
        escape_minus_exact: exact_rates[1],
        escape_plus_mc: mc,
        mc_sigma,
        balance_error: balance,
        bound_margin,
        estimator_spread: spread,
        pass,
    }))
}

/// Survival Monte Carlo on the induced cell chain: a point uniform in a
/// cell moves to cell j with probability M_ij, which is exactly the
/// interval-map dynamics marginalized to the Markov partition.
fn chain_escape_mc(
    cmat: &MatrixCocycle,
    sets: &RandomSignSet,
    side: Side,
    omega: &SymbolSequence,
    horizon: usize,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    let q = cmat.dim();
    let start = sets.index_side(0, side);
    if start.is_empty() {
        return Err(RdsError::InsufficientSurvival);
    }
    let mut survivors = vec![0u64; horizon + 1];
    survivors[0] = n_samples as u64;
    let mut cells: Vec<usize> = (0..n_samples)
        .map(|_| start[rng.gen_range(0..start.len())])
        .collect();
    let mut alive = vec![true; n_samples];
    for n in 0..horizon {
        let a = cmat.matrix_at(&omega, n as i64)?;
        let mask: Vec<bool> = {
            let mut m = vec![false; q];
            for &i in sets.index_side(n + 1, side) {
                m[i] = true;
            }
            m
        };
        let mut count = 0u64;
        for s in 0..n_samples {
            if !alive[s] {
                continue;
            }
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut next = q - 1;
            for j in 0..q {
                acc += a[(cells[s], j)];
                if u < acc {
                    next = j;
                    break;
                }
            }
            cells[s] = next;
            if mask[next] {
                count += 1;
            } else {
                alive[s] = false;
            }
        }
        survivors[n + 1] = count;
    }
    crate::meta::windowed_decay_estimate(&survivors)
}

/// Run the metastability suite: `count` accepted instances, or an error
/// if the rejection filters exhaust the try budget.
pub fn run_meta_suite(count: usize, seed: u64) -> Result<MetaSuiteReport> {
    let budget = count * 12;
    let results: Vec<Option<MetaSuiteInstance>> = (0..budget as u64)
        .into_par_iter()
        .map(|idx| meta_suite_try(seed, idx))
        .collect::<Result<_>>()?;
    let mut instances = Vec::with_capacity(count);
    let mut tries = 0usize;
    for r in results {
        tries += 1;
        if let Some(inst) = r {
            instances.push(inst);
            if instances.len() == count {
                break;
            }
        }
    }
    if instances.len() < count {
        return Err(RdsError::Config(format!(
            "only {} of {count} suite instances survived the conditioning filters",
            instances.len()
        )));
    }
    let pass = instances.iter().all(|i| i.pass);
    Ok(MetaSuiteReport {
        requested: count,
        tries,
        instances,
        pass,
    })
}

/// Realize the metastability-suite generators as interval-map cocycles;
/// used by property tests to tie the matrix picture to the map picture.
pub fn meta_suite_interval_cocycle(seed: u64, idx: u64) -> Result<(IntervalMapCocycle, Vec<Vec<Vec<Q>>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ idx.wrapping_mul(0x9e3779b97f4a7c15));
    let half = rng.gen_range(2..=4usize);
    let q = 2 * half;
    let exact: Vec<Vec<Vec<Q>>> = (0..2).map(|_| random_metastable_matrix(&mut rng, half)).collect();
    let maps = exact
        .iter()
        .map(|m| markov_map_from_matrix(m))
        .collect::<Result<Vec<_>>>()?;
    let c = IntervalMapCocycle::new(
        maps,
        crate::base::BaseSystem::full_shift(2),
        Some(MarkovPartition::uniform(q)),
    )?;
    Ok((c, exact))
}

#[derive(Debug, Clone, Serialize)]
pub struct SftSuiteInstance {
    pub k: usize,
    pub aperiodicity: usize,
    pub lambda2: f64,
    pub entropy_b: f64,
    pub entropy_b2: f64,
    pub entropy_margin: f64,
    pub vector_ratio_min: f64,
    pub vector_ratio_max: f64,
    pub positive_collapse_dev: f64,
    /// Matrix-product cylinder counts agree with direct enumeration.
    pub blocks_exact: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SftSuiteReport {
    pub requested: usize,
    pub tries: usize,
    pub instances: Vec<SftSuiteInstance>,
    pub pass: bool,
}

/// Two-block 0/1 adjacency pair with dense blocks and sparse coupling.
fn random_metastable_adjacency(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let kb = k / 2;
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        let own = if i < kb { 0..kb } else { kb..k };
        for j in own.clone() {
            if rng.gen::<f64>() < 0.85 {
                m[(i, j)] = 1.0;
            }
        }
        if own.clone().all(|j| m[(i, j)] == 0.0) {
            let j = rng.gen_range(own.clone());
            m[(i, j)] = 1.0;
        }
    }
    for _ in 0..rng.gen_range(1..=2usize) {
        let i = rng.gen_range(0..kb);
        let j = rng.gen_range(kb..k);
        m[(i, j)] = 1.0;
        let i = rng.gen_range(kb..k);
        let j = rng.gen_range(0..kb);
        m[(i, j)] = 1.0;
    }
    m
}

fn sft_suite_try(seed: u64, idx: u64) -> Result<Option<SftSuiteInstance>> {
    const NW: i64 = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ idx.wrapping_mul(0x2545f4914f6cdd1d));
    let k = rng.gen_range(4..=6usize);
    let gens: Vec<DMatrix<f64>> = (0..2)
        .map(|_| random_metastable_adjacency(&mut rng, k))
        .collect();
    let base = crate::base::BaseSystem::full_shift(2);
    let cmat = MatrixCocycle::new(gens, base)?;
    let sft = RandomSFT::new(cmat)?;
    let n_aper = match uniform_aperiodicity(&sft, 8)? {
        Some(n) => n,
        None => return Ok(None),
    };
    let omega = random_omega(&mut rng, -(NW + 5), (NW + HORIZON as i64 + 10) as usize);
    let spec = lyapunov_spectrum(&sft.cocycle, &omega, HORIZON as i64, 3)?;
    let (l1, l2, l3) = (spec.exponent(0), spec.exponent(1), spec.exponent(2));
    if !l2.is_finite() || l2 - l3 <= 0.05 || l1 - l2 <= 0.05 {
        return Ok(None);
    }
    let w = product_window(&sft.cocycle, &omega, -NW, 0)?;
    let svd = w.svd(false, true);
    let sigma = &svd.singular_values;
    if sigma[1] / sigma[2].max(1e-300) < 10.0 {
        return Ok(None);
    }
    let path = match oseledets_vector(&sft.cocycle, &omega, 2, NW, NW, HORIZON as i64) {
        Ok(p) => p,
        Err(RdsError::DegenerateSplitting(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let (b, b2) = decompose(&sft, &omega, &path, HORIZON)?;
    let vb = vector_bound_check(&path, k, n_aper);
    if vb.positivity_violation.is_some() {
        return Ok(None);
    }
    let tol = 3.0 / HORIZON as f64;
    let eb = entropy_bounds_check(&b, &b2, l2, tol)?;
    // Positive-quadrant collapse: a random nonnegative vector must grow
    // at the same rate as the uniform vector.
    let v0: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..1.5)).collect();
    let lam_v = crate::matrix::lyapunov_of_vector(&sft.cocycle, &omega, &v0, HORIZON as i64)?;
    let ones = vec![1.0; k];
    let lam_1 = crate::matrix::lyapunov_of_vector(&sft.cocycle, &omega, &ones, HORIZON as i64)?;
    let collapse_dev = (lam_v - lam_1).abs();
    let mut blocks_exact = true;
    for n in 1..=6i64 {
        let counted = crate::sft::cylinder_count(&sft, &omega, n)?;
        let listed = crate::sft::enumerate_cylinders(&sft, &omega, n)?;
        if counted != listed {
            blocks_exact = false;
        }
    }
    let pass = eb.pass && vb.pass && blocks_exact && collapse_dev <= 2.0 / HORIZON as f64;
    Ok(Some(SftSuiteInstance {
        k,
        aperiodicity: n_aper,
        lambda2: l2,
        entropy_b: eb.entropy_b,
        entropy_b2: eb.entropy_b2,
        entropy_margin: eb.margin_b.min(eb.margin_b2),
        vector_ratio_min: vb.min_ratio,
        vector_ratio_max: vb.max_ratio,
        positive_collapse_dev: collapse_dev,
        blocks_exact,
        pass,
    }))
}

pub fn run_sft_suite(count: usize, seed: u64) -> Result<SftSuiteReport> {
    let budget = count * 12;
    let results: Vec<Option<SftSuiteInstance>> = (0..budget as u64)
        .into_par_iter()
        .map(|idx| sft_suite_try(seed, idx))
        .collect::<Result<_>>()?;
    let mut instances = Vec::with_capacity(count);
    let mut tries = 0usize;
    for r in results {
        tries += 1;
        if let Some(inst) = r {
            instances.push(inst);
            if instances.len() == count {
                break;
            }
        }
    }
    if instances.len() < count {
        return Err(RdsError::Config(format!(
            "only {} of {count} suite instances survived the conditioning filters",
            instances.len()
        )));
    }
    let pass = instances.iter().all(|i| i.pass);
    Ok(SftSuiteReport {
        requested: count,
        tries,
        instances,
        pass,
    })
}

/// Index masks as cell-interval unions on the uniform partition.
pub fn masks_to_intervals(sets: &RandomSignSet, q: usize) -> RandomSignSet {
    let cell = |i: usize| Q::new(i.into(), q.into());
    let steps = (0..=sets.horizon())
        .map(|n| {
            let mk = |side: Side| {
                IntervalUnion::from_parts(
                    sets.index_side(n, side)
                        .iter()
                        .map(|&i| (cell(i), cell(i + 1)))
                        .collect(),
                )
            };
            (mk(Side::Plus), mk(Side::Minus))
        })
        .collect();
    RandomSignSet::Intervals(steps)
}
