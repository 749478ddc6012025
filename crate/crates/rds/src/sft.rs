//! Random shifts of finite type: cylinder counting, uniform
//! aperiodicity, topological entropy via the adjacency cocycle, and the
//! decomposition into complementary subshifts generated by the sign
//! pattern of a second Oseledets vector path.

use crate::base::SymbolSequence;
use crate::error::{RdsError, Result};
use crate::matrix::{cocycle_product_exact, MatrixCocycle, OseledetsVectorPath};
use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct RandomSFT {
    pub cocycle: MatrixCocycle,
}

impl RandomSFT {
    pub fn new(cocycle: MatrixCocycle) -> Result<Self> {
        if !cocycle.is_adjacency() {
            return Err(RdsError::Config(
                "adjacency cocycle entries must be 0 or 1".into(),
            ));
        }
        Ok(Self { cocycle })
    }

    pub fn alphabet_size(&self) -> usize {
        self.cocycle.dim()
    }
}

/// Exact number of admissible n-cylinders: k for n = 1, otherwise the
/// entry sum of the (n-1)-step adjacency product.
pub fn cylinder_count(s: &RandomSFT, omega: &SymbolSequence, n: i64) -> Result<BigUint> {
    if n < 1 {
        return Err(RdsError::Config("cylinder length must be at least 1".into()));
    }
    if n == 1 {
        return Ok(BigUint::from(s.alphabet_size()));
    }
    let p = cocycle_product_exact(&s.cocycle, omega, n - 1)?;
    Ok(p.iter().flatten().sum())
}

/// Admissible n-cylinder count by direct word enumeration with
/// prefix pruning; independent of the matrix formula.
pub fn enumerate_cylinders(s: &RandomSFT, omega: &SymbolSequence, n: i64) -> Result<BigUint> {
    let k = s.alphabet_size();
    let mut count = BigUint::zero();
    let mut word = vec![0usize; n as usize];
    fn rec(
        s: &RandomSFT,
        omega: &SymbolSequence,
        word: &mut [usize],
        depth: usize,
        count: &mut BigUint,
    ) -> Result<()> {
        if depth == word.len() {
            *count += 1u32;
            return Ok(());
        }
        for sym in 0..s.alphabet_size() {
            if depth > 0 {
                let a = s.cocycle.matrix_at(omega, depth as i64 - 1)?;
                if a[(word[depth - 1], sym)] == 0.0 {
                    continue;
                }
            }
            word[depth] = sym;
            rec(s, omega, word, depth + 1, count)?;
        }
        Ok(())
    }
    let _ = k;
    rec(s, omega, &mut word, 0, &mut count)?;
    Ok(count)
}

/// Smallest N <= max_n such that the N-step product is strictly
/// positive for every admissible driving word of length N.
pub fn uniform_aperiodicity(s: &RandomSFT, max_n: usize) -> Result<Option<usize>> {
    let k = s.alphabet_size();
    let m = s.cocycle.base.alphabet_size as usize;
    let gens: Vec<Vec<Vec<u64>>> = (0..m)
        .map(|sym| {
            let g = s.cocycle.generator(sym);
            (0..k)
                .map(|i| (0..k).map(|j| g[(i, j)] as u64).collect())
                .collect()
        })
        .collect();
    let adm = s.cocycle.base.admissibility.clone();
    for n in 1..=max_n {
        let mut all_positive = true;
        // Walk every admissible driving word of length n.
        let mut word = vec![0usize; n];
        'words: loop {
            let admissible = match &adm {
                Some(e) => word.windows(2).all(|w| e[w[0]][w[1]] == 1),
                None => true,
            };
            if admissible {
                let mut p: Vec<Vec<u64>> =
                    (0..k).map(|i| (0..k).map(|j| (i == j) as u64).collect()).collect();
                for &sym in &word {
                    let g = &gens[sym];
                    let mut next = vec![vec![0u64; k]; k];
                    for i in 0..k {
                        for l in 0..k {
                            if p[i][l] == 0 {
                                continue;
                            }
                            for j in 0..k {
                                // Saturate: only positivity matters.
                                next[i][j] |= (p[i][l] * g[l][j] > 0) as u64;
                            }
                        }
                    }
                    p = next;
                }
                if p.iter().flatten().any(|&x| x == 0) {
                    all_positive = false;
                }
            }
            // Next word in lexicographic order.
            for d in (0..n).rev() {
                word[d] += 1;
                if word[d] < m {
                    continue 'words;
                }
                word[d] = 0;
            }
            break;
        }
        if all_positive {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Topological entropy estimate: growth rate of the 1-vector pushed
/// through the adjacency cocycle. Negative infinity when the shift
/// empties.
pub fn entropy(s: &RandomSFT, omega: &SymbolSequence, horizon: i64) -> Result<f64> {
    let k = s.alphabet_size();
    entropy_of_path(
        &(0..horizon)
            .map(|n| {
                let a = s.cocycle.matrix_at(omega, n)?;
                Ok((0..k)
                    .map(|i| (0..k).map(|j| (a[(i, j)] != 0.0) as u8).collect())
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?,
    )
}

fn entropy_of_path(mats: &[Vec<Vec<u8>>]) -> Result<f64> {
    let n = mats.len();
    if n == 0 {
        return Err(RdsError::Config("entropy needs at least one step".into()));
    }
    let k = mats[0].len();
    let mut v = vec![1.0f64 / k as f64; k];
    let mut acc = (k as f64).ln();
    for a in mats.iter().take(n - 1) {
        let mut next = vec![0.0f64; k];
        for i in 0..k {
            if v[i] == 0.0 {
                continue;
            }
            for j in 0..k {
                if a[i][j] != 0 {
                    next[j] += v[i];
                }
            }
        }
        let s: f64 = next.iter().sum();
        if s == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += s.ln();
        for x in &mut next {
            *x /= s;
        }
        v = next;
    }
    Ok(acc / n as f64)
}

/// A per-step 0/1 subshift matrix path plus the index sets generating it.
#[derive(Debug, Clone, Serialize)]
pub struct SubshiftPath {
    pub horizon: usize,
    /// matrices[n] constrains transitions from time n to time n+1.
    pub matrices: Vec<Vec<Vec<u8>>>,
    /// Generating index sets (0-based symbols), one per time step.
    pub index_sets: Vec<Vec<usize>>,
}

impl SubshiftPath {
    pub fn entropy(&self) -> Result<f64> {
        entropy_of_path(&self.matrices)
    }
}

/// Decompose the shift along the second Oseledets vector path: B keeps
/// A-edges between positive-mass indices at consecutive steps; the
/// complement B' keeps A-edges whose source row and target column of B
/// are entirely zero.
pub fn decompose(
    s: &RandomSFT,
    omega: &SymbolSequence,
    path: &OseledetsVectorPath,
    horizon: usize,
) -> Result<(SubshiftPath, SubshiftPath)> {
    let k = s.alphabet_size();
    if path.vectors.len() < horizon + 1 {
        return Err(RdsError::Config(
            "vector path shorter than the requested horizon".into(),
        ));
    }
    let index_sets: Vec<Vec<usize>> = path.vectors[..=horizon]
        .iter()
        .map(|v| (0..k).filter(|&i| v[i] > 0.0).collect())
        .collect();
    let mut b_mats = Vec::with_capacity(horizon);
    let mut b2_mats = Vec::with_capacity(horizon);
    for n in 0..horizon {
        let a = s.cocycle.matrix_at(omega, n as i64)?;
        let src: Vec<bool> = (0..k).map(|i| index_sets[n].contains(&i)).collect();
        let dst: Vec<bool> = (0..k).map(|j| index_sets[n + 1].contains(&j)).collect();
        let mut b = vec![vec![0u8; k]; k];
        for i in 0..k {
            for j in 0..k {
                if a[(i, j)] != 0.0 && src[i] && dst[j] {
                    b[i][j] = 1;
                }
            }
        }
        let row_free: Vec<bool> = (0..k).map(|i| b[i].iter().all(|&x| x == 0)).collect();
        let col_free: Vec<bool> = (0..k).map(|j| (0..k).all(|i| b[i][j] == 0)).collect();
        let mut b2 = vec![vec![0u8; k]; k];
        for i in 0..k {
            for j in 0..k {
                if a[(i, j)] != 0.0 && row_free[i] && col_free[j] {
                    b2[i][j] = 1;
                }
            }
        }
        b_mats.push(b);
        b2_mats.push(b2);
    }
    let minus_sets: Vec<Vec<usize>> = path.vectors[..=horizon]
        .iter()
        .map(|v| (0..k).filter(|&i| v[i] < 0.0).collect())
        .collect();
    Ok((
        SubshiftPath {
            horizon,
            matrices: b_mats,
            index_sets,
        },
        SubshiftPath {
            horizon,
            matrices: b2_mats,
            index_sets: minus_sets,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyBoundsReport {
    pub entropy_b: f64,
    pub entropy_b2: f64,
    pub lambda: f64,
    pub tol: f64,
    pub margin_b: f64,
    pub margin_b2: f64,
    pub pass: bool,
}

/// Both subshift entropies must reach lambda - tol.
pub fn entropy_bounds_check(
    b: &SubshiftPath,
    b2: &SubshiftPath,
    lambda: f64,
    tol: f64,
) -> Result<EntropyBoundsReport> {
    let hb = b.entropy()?;
    let hb2 = b2.entropy()?;
    let margin_b = hb - (lambda - tol);
    let margin_b2 = hb2 - (lambda - tol);
    Ok(EntropyBoundsReport {
        entropy_b: hb,
        entropy_b2: hb2,
        lambda,
        tol,
        margin_b,
        margin_b2,
        pass: margin_b >= 0.0 && margin_b2 >= 0.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VectorBoundReport {
    pub k: usize,
    pub n_aperiodic: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub positivity_violation: Option<usize>,
    pub pass: bool,
}

/// Mass-ratio bound along a second-vector path: at every step,
/// ||v+||_1 / ||v-||_1 must lie in [k^-N, k^N].
pub fn vector_bound_check(
    path: &OseledetsVectorPath,
    k: usize,
    n_aperiodic: usize,
) -> VectorBoundReport {
    let bound = (k as f64).powi(n_aperiodic as i32);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    let mut violation = None;
    for (n, v) in path.vectors.iter().enumerate() {
        let plus: f64 = v.iter().filter(|&&x| x > 0.0).sum();
        let minus: f64 = -v.iter().filter(|&&x| x < 0.0).sum::<f64>();
        if plus == 0.0 || minus == 0.0 {
            violation = Some(n);
            break;
        }
        let r = plus / minus;
        min_ratio = min_ratio.min(r);
        max_ratio = max_ratio.max(r);
    }
    let pass =
        violation.is_none() && min_ratio >= 1.0 / bound && max_ratio <= bound;
    VectorBoundReport {
        k,
        n_aperiodic,
        min_ratio,
        max_ratio,
        positivity_violation: violation,
        pass,
    }
}

/// DOT rendering of the first `steps` transitions of a subshift path:
/// one node per (time, symbol), edges per the step matrices.
pub fn subshift_to_dot(path: &SubshiftPath, steps: usize, name: &str) -> String {
    let steps = steps.min(path.horizon);
    let k = path.matrices.first().map(|m| m.len()).unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "digraph {name} {{");
    let _ = writeln!(out, "  rankdir=LR;");
    for n in 0..=steps {
        let active = &path.index_sets[n];
        for i in 0..k {
            let style = if active.contains(&i) { "solid" } else { "dashed" };
            let _ = writeln!(
                out,
                "  t{n}s{i} [label=\"{}\", group=\"t{n}\", style={style}];",
                i + 1
            );
        }
    }
    for (n, m) in path.matrices.iter().take(steps).enumerate() {
        for i in 0..k {
            for j in 0..k {
                if m[i][j] != 0 {
                    let _ = writeln!(out, "  t{n}s{i} -> t{}s{j};", n + 1);
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
