//! Base dynamical system: bi-infinite symbol sequences, shifts,
//! admissibility, and the bundled test sequences built from binary
//! digits of pi.
//!
//! A sequence holds a finite explicit window plus deterministic
//! extension rules on both sides, so only finitely many symbols are
//! ever materialized. Symbols are 1-based (`1..=alphabet_size`);
//! binary sequences encode {0,1} as {1,2} at the boundary.

use crate::error::{RdsError, Result};
use crate::pi::pi_binary_digit;
use serde::{Deserialize, Serialize};

/// Extension rule for indices outside the explicit window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtensionRule {
    /// Every outside index resolves to this symbol.
    Constant(u8),
    /// Outside indices are unresolvable.
    Error,
    /// Symbol at (unshifted) index j is `pi_binary_digit(j + index_offset) + 1`.
    /// Only valid where `j + index_offset >= 1`.
    PiBits { index_offset: i64 },
}

/// A deterministic bit generator: binary expansion of the fractional
/// part of pi starting at `offset` (1-based).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DigitStream {
    pub offset: i64,
}

impl DigitStream {
    pub fn bit(&self, i: i64) -> Result<u8> {
        let idx = self.offset + i;
        if idx < 1 {
            return Err(RdsError::OutOfWindow(i));
        }
        pi_binary_digit(idx as usize)
    }
}

/// A point of the base system: a bi-infinite symbol sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSequence {
    alphabet_size: u8,
    /// Unshifted index of `window[0]`.
    window_lo: i64,
    window: Vec<u8>,
    left_rule: ExtensionRule,
    right_rule: ExtensionRule,
    /// Shift offset: `get(i)` resolves unshifted index `i + shift`.
    shift: i64,
}

impl SymbolSequence {
    pub fn new(
        alphabet_size: u8,
        window_lo: i64,
        window: Vec<u8>,
        left_rule: ExtensionRule,
        right_rule: ExtensionRule,
    ) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(RdsError::Config("alphabet_size must be at least 2".into()));
        }
        for &s in &window {
            if s < 1 || s > alphabet_size {
                return Err(RdsError::Config(format!(
                    "window symbol {s} outside 1..={alphabet_size}"
                )));
            }
        }
        Ok(Self {
            alphabet_size,
            window_lo,
            window,
            left_rule,
            right_rule,
            shift: 0,
        })
    }

    pub fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    /// Symbol at index `i` in `1..=alphabet_size`.
    pub fn get(&self, i: i64) -> Result<u8> {
        let j = i
            .checked_add(self.shift)
            .ok_or(RdsError::OutOfWindow(i))?;
        let hi = self.window_lo + self.window.len() as i64 - 1;
        if !self.window.is_empty() && j >= self.window_lo && j <= hi {
            return Ok(self.window[(j - self.window_lo) as usize]);
        }
        let rule = if self.window.is_empty() || j > hi {
            &self.right_rule
        } else {
            &self.left_rule
        };
        match rule {
            ExtensionRule::Constant(s) => Ok(*s),
            ExtensionRule::Error => Err(RdsError::OutOfWindow(i)),
            ExtensionRule::PiBits { index_offset } => {
                let idx = j + index_offset;
                if idx < 1 {
                    return Err(RdsError::OutOfWindow(i));
                }
                Ok(pi_binary_digit(idx as usize)? + 1)
            }
        }
    }

    /// Symbol at index `i` as a 0-based value in `0..alphabet_size`.
    pub fn get0(&self, i: i64) -> Result<usize> {
        Ok(self.get(i)? as usize - 1)
    }

    /// The shifted sequence: `shift(omega, n)(i) = omega(i + n)`.
    pub fn shifted(&self, n: i64) -> SymbolSequence {
        let mut out = self.clone();
        out.shift += n;
        out
    }
}

/// Shift as a free function, mirroring the operation name.
pub fn shift(omega: &SymbolSequence, n: i64) -> SymbolSequence {
    omega.shifted(n)
}

/// Probability structure on the base system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseMeasure {
    Bernoulli(Vec<f64>),
    Markov(Vec<Vec<f64>>),
}

/// The base system: alphabet, optional admissibility matrix, measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseSystem {
    pub alphabet_size: u8,
    pub admissibility: Option<Vec<Vec<u8>>>,
    pub measure: BaseMeasure,
}

impl BaseSystem {
    pub fn validate(&self) -> Result<()> {
        let s = self.alphabet_size as usize;
        if let Some(e) = &self.admissibility {
            if e.len() != s || e.iter().any(|r| r.len() != s) {
                return Err(RdsError::Config("admissibility matrix must be s x s".into()));
            }
            if e.iter().flatten().any(|&x| x > 1) {
                return Err(RdsError::Config("admissibility entries must be 0/1".into()));
            }
        }
        match &self.measure {
            BaseMeasure::Bernoulli(w) => {
                if w.len() != s {
                    return Err(RdsError::Config("Bernoulli weight count mismatch".into()));
                }
                if w.iter().any(|&x| x < 0.0) {
                    return Err(RdsError::Config("Bernoulli weights must be nonnegative".into()));
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(RdsError::Config(format!(
                        "Bernoulli weights sum to {total}, expected 1"
                    )));
                }
            }
            BaseMeasure::Markov(m) => {
                if m.len() != s || m.iter().any(|r| r.len() != s) {
                    return Err(RdsError::Config("Markov matrix must be s x s".into()));
                }
                for (i, row) in m.iter().enumerate() {
                    let total: f64 = row.iter().sum();
                    if (total - 1.0).abs() > 1e-12 {
                        return Err(RdsError::Config(format!(
                            "Markov row {i} sums to {total}, expected 1"
                        )));
                    }
                    if let Some(e) = &self.admissibility {
                        for (j, &p) in row.iter().enumerate() {
                            if e[i][j] == 0 && p != 0.0 {
                                return Err(RdsError::Config(format!(
                                    "Markov entry ({i},{j}) positive on inadmissible transition"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Full two-sided shift on `s` symbols with uniform Bernoulli measure.
    pub fn full_shift(s: u8) -> BaseSystem {
        BaseSystem {
            alphabet_size: s,
            admissibility: None,
            measure: BaseMeasure::Bernoulli(vec![1.0 / s as f64; s as usize]),
        }
    }
}

/// True iff every adjacent symbol pair in `[lo, hi]` is admissible under `E`.
pub fn is_admissible(e: &[Vec<u8>], omega: &SymbolSequence, lo: i64, hi: i64) -> Result<bool> {
    for i in lo..hi {
        let a = omega.get0(i)?;
        let b = omega.get0(i + 1)?;
        if e[a][b] == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The bundled test sequences, keyed by the experiment that consumes them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaStar {
    /// Two-symbol sequence for the doubling-map pair: symbol(i) = digit(i+1)
    /// for i >= 0, zero-filled to the left.
    Example2,
    /// Six-symbol sequence lifted through the three-to-one symbol map.
    Example3,
    /// Two-symbol sequence for the 4x4 adjacency pair: symbol(i) = digit(20+i)
    /// for i > -20, zero-filled to the left.
    Example4,
}

/// Admissibility matrix of the six-symbol base used by `OmegaStar::Example3`.
pub fn six_symbol_admissibility() -> Vec<Vec<u8>> {
    vec![
        vec![0, 1, 0, 0, 1, 0],
        vec![0, 0, 1, 0, 0, 1],
        vec![1, 0, 0, 1, 0, 0],
        vec![0, 0, 1, 0, 0, 1],
        vec![1, 0, 0, 1, 0, 0],
        vec![0, 1, 0, 0, 1, 0],
    ]
}

/// The three-to-one symbol map: {1,2,3} -> 0, {4,5,6} -> 1.
pub fn six_symbol_projection(symbol: u8) -> u8 {
    if symbol <= 3 {
        0
    } else {
        1
    }
}

/// Target bit of the lifted sequence at index i: alpha_0 = 0,
/// alpha_i = digit(2i) for i >= 1, alpha_{-i} = digit(2i-1) for i >= 1.
fn lift_target_bit(i: i64) -> Result<u8> {
    if i == 0 {
        Ok(0)
    } else if i > 0 {
        pi_binary_digit(2 * i as usize)
    } else {
        pi_binary_digit((2 * (-i) - 1) as usize)
    }
}

/// Explicit half-width of the materialized window for the lifted sequence.
const LIFT_HALF_WIDTH: i64 = 600;

fn build_lifted_sequence() -> Result<SymbolSequence> {
    let e = six_symbol_admissibility();
    let n = LIFT_HALF_WIDTH;
    let mut window = vec![0u8; (2 * n + 1) as usize];
    let at = |i: i64| (i + n) as usize;
    window[at(0)] = 1;
    // Forward: the successor must be admissible and project to the target bit.
    for i in 0..n {
        let cur = window[at(i)] as usize - 1;
        let target = lift_target_bit(i + 1)?;
        let candidates: Vec<u8> = (1..=6u8)
            .filter(|&t| e[cur][t as usize - 1] == 1 && six_symbol_projection(t) == target)
            .collect();
        match candidates.as_slice() {
            [unique] => window[at(i + 1)] = *unique,
            [] => {
                return Err(RdsError::LiftFailure {
                    index: i + 1,
                    reason: "no admissible successor with the required projection".into(),
                })
            }
            _ => {
                return Err(RdsError::LiftFailure {
                    index: i + 1,
                    reason: "lift is not unique".into(),
                })
            }
        }
    }
    // Backward: the predecessor must be admissible and project to the target bit.
    for i in (-n + 1..=0).rev() {
        let cur = window[at(i)] as usize - 1;
        let target = lift_target_bit(i - 1)?;
        let candidates: Vec<u8> = (1..=6u8)
            .filter(|&t| e[t as usize - 1][cur] == 1 && six_symbol_projection(t) == target)
            .collect();
        match candidates.as_slice() {
            [unique] => window[at(i - 1)] = *unique,
            [] => {
                return Err(RdsError::LiftFailure {
                    index: i - 1,
                    reason: "no admissible predecessor with the required projection".into(),
                })
            }
            _ => {
                return Err(RdsError::LiftFailure {
                    index: i - 1,
                    reason: "lift is not unique".into(),
                })
            }
        }
    }
    SymbolSequence::new(6, -n, window, ExtensionRule::Error, ExtensionRule::Error)
}

/// Build one of the bundled test sequences.
pub fn build_omega_star(which: OmegaStar) -> Result<SymbolSequence> {
    match which {
        OmegaStar::Example2 => {
            let first = pi_binary_digit(1)? + 1;
            SymbolSequence::new(
                2,
                0,
                vec![first],
                ExtensionRule::Constant(1),
                ExtensionRule::PiBits { index_offset: 1 },
            )
        }
        OmegaStar::Example3 => build_lifted_sequence(),
        OmegaStar::Example4 => {
            let first = pi_binary_digit(1)? + 1;
            SymbolSequence::new(
                2,
                -19,
                vec![first],
                ExtensionRule::Constant(1),
                ExtensionRule::PiBits { index_offset: 20 },
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example2_window() {
        let w = build_omega_star(OmegaStar::Example2).unwrap();
        let got: Vec<u8> = (0..6).map(|i| w.get(i).unwrap() - 1).collect();
        assert_eq!(got, vec![0, 0, 1, 0, 0, 1]);
        assert_eq!(w.get(-1).unwrap(), 1);
        assert_eq!(w.get(-100).unwrap(), 1);
    }

    #[test]
    fn shift_group_law() {
        let w = build_omega_star(OmegaStar::Example2).unwrap();
        let a = w.shifted(2).shifted(3);
        let b = w.shifted(5);
        for i in -5..50 {
            assert_eq!(a.get(i).unwrap(), b.get(i).unwrap());
        }
        assert_eq!(w.shifted(1).get(0).unwrap() - 1, 0);
    }

    #[test]
    fn example4_sequence() {
        let w = build_omega_star(OmegaStar::Example4).unwrap();
        // index 1 -> digit 21
        assert_eq!(
            w.get(1).unwrap() - 1,
            crate::pi::pi_binary_digit(21).unwrap()
        );
        assert_eq!(w.get(-19).unwrap() - 1, crate::pi::pi_binary_digit(1).unwrap());
        assert_eq!(w.get(-20).unwrap(), 1);
    }

    #[test]
    fn lifted_sequence_matches_printed_window() {
        let w = build_omega_star(OmegaStar::Example3).unwrap();
        let expected: Vec<u8> = vec![
            3, 4, 6, 5, 4, 3, 4, 6, 5, 1, 2, 3, 4, 3, 1, 2, 3, 4, 3, 1, 5, 4, 6, 5, 1, 2, 3, 1, 2,
        ];
        let got: Vec<u8> = (-14..=14).map(|i| w.get(i).unwrap()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn lifted_sequence_projects_back() {
        let w = build_omega_star(OmegaStar::Example3).unwrap();
        for i in -300..=300 {
            assert_eq!(
                six_symbol_projection(w.get(i).unwrap()),
                lift_target_bit(i).unwrap()
            );
        }
        let e = six_symbol_admissibility();
        assert!(is_admissible(&e, &w, -300, 300).unwrap());
    }

    #[test]
    fn admissibility_rejects_forbidden_pair() {
        let e = six_symbol_admissibility();
        let w = SymbolSequence::new(
            6,
            0,
            vec![1, 1],
            ExtensionRule::Error,
            ExtensionRule::Error,
        )
        .unwrap();
        assert!(!is_admissible(&e, &w, 0, 1).unwrap());
    }

    #[test]
    fn error_rule_reports_out_of_window() {
        let w = build_omega_star(OmegaStar::Example3).unwrap();
        assert!(w.get(LIFT_HALF_WIDTH + 1).is_err());
    }

    #[test]
    fn base_system_validation() {
        let mut b = BaseSystem::full_shift(2);
        b.validate().unwrap();
        b.measure = BaseMeasure::Bernoulli(vec![0.7, 0.4]);
        assert!(b.validate().is_err());
    }
}
