//! Exact rational interval arithmetic on [0, 1).
//!
//! All set geometry (unions, intersections, affine preimages) is done
//! with arbitrary-precision rationals so that deeply nested
//! constructions do not drift. Intervals are half-open [lo, hi);
//! endpoint conventions carry no measure and are normalized away.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_int(n: i64) -> Q {
    Q::from(BigInt::from(n))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fall back to a scaled division for huge numerators/denominators.
        let scale = BigInt::from(1u64 << 52);
        let scaled = (x.numer() * &scale) / x.denom();
        scaled.to_f64().unwrap() / scale.to_f64().unwrap()
    })
}

/// A finite union of disjoint half-open intervals, sorted and merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalUnion {
    parts: Vec<(Q, Q)>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn unit() -> Self {
        Self::interval(Q::zero(), Q::one())
    }

    pub fn interval(lo: Q, hi: Q) -> Self {
        if lo < hi {
            Self { parts: vec![(lo, hi)] }
        } else {
            Self::empty()
        }
    }

    pub fn from_parts(mut raw: Vec<(Q, Q)>) -> Self {
        raw.retain(|(lo, hi)| lo < hi);
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut parts: Vec<(Q, Q)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match parts.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => parts.push((lo, hi)),
            }
        }
        Self { parts }
    }

    pub fn parts(&self) -> &[(Q, Q)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn count(&self) -> usize {
        self.parts.len()
    }

    pub fn measure(&self) -> Q {
        self.parts
            .iter()
            .fold(Q::zero(), |acc, (lo, hi)| acc + (hi - lo))
    }

    pub fn contains(&self, x: &Q) -> bool {
        self.parts.iter().any(|(lo, hi)| lo <= x && x < hi)
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut raw = self.parts.clone();
        raw.extend(other.parts.iter().cloned());
        Self::from_parts(raw)
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        // Two-pointer sweep over both sorted part lists.
        let mut raw = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.parts.len() && j < other.parts.len() {
            let (alo, ahi) = &self.parts[i];
            let (blo, bhi) = &other.parts[j];
            let lo = if alo > blo { alo } else { blo };
            let hi = if ahi < bhi { ahi } else { bhi };
            if lo < hi {
                raw.push((lo.clone(), hi.clone()));
            }
            if ahi <= bhi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_parts(raw)
    }

    /// Complement within [0, 1).
    pub fn complement(&self) -> IntervalUnion {
        let mut raw = Vec::new();
        let mut cursor = Q::zero();
        for (lo, hi) in &self.parts {
            if *lo > cursor {
                raw.push((cursor.clone(), lo.clone()));
            }
            if *hi > cursor {
                cursor = hi.clone();
            }
        }
        if cursor < Q::one() {
            raw.push((cursor, Q::one()));
        }
        Self::from_parts(raw)
    }

    /// Image under x -> s*x + c without reduction mod 1.
    pub fn affine(&self, s: &Q, c: &Q) -> IntervalUnion {
        let raw = self
            .parts
            .iter()
            .map(|(lo, hi)| {
                let a = s * lo + c;
                let b = s * hi + c;
                if s.is_positive() {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        Self::from_parts(raw)
    }
}

/// Natural log of a positive BigInt, stable for arbitrary magnitude.
fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 52 {
        x.to_f64().unwrap().ln()
    } else {
        let shift = bits - 52;
        let top = (x >> shift).to_f64().unwrap();
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Natural log of a positive rational, exact in the exponent even when
/// numerator or denominator overflow f64 range.
pub fn q_ln(x: &Q) -> f64 {
    assert!(x.is_positive(), "q_ln requires a positive argument");
    big_ln(x.numer()) - big_ln(x.denom())
}

/// floor of a rational as a BigInt.
pub fn q_floor(x: &Q) -> BigInt {
    x.floor().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_measure() {
        let u = IntervalUnion::from_parts(vec![
            (q(1, 4), q(1, 2)),
            (q(0, 1), q(1, 4)),
            (q(3, 4), q(7, 8)),
        ]);
        assert_eq!(u.count(), 2);
        assert_eq!(u.measure(), q(5, 8));
    }

    #[test]
    fn intersect_complement() {
        let a = IntervalUnion::interval(q(0, 1), q(1, 2));
        let b = IntervalUnion::interval(q(1, 4), q(3, 4));
        let i = a.intersect(&b);
        assert_eq!(i.parts(), &[(q(1, 4), q(1, 2))]);
        let c = a.complement();
        assert_eq!(c.parts(), &[(q(1, 2), q_int(1))]);
        assert_eq!(a.union(&c), IntervalUnion::unit());
    }

    #[test]
    fn log_of_tiny_rational() {
        use num_traits::Pow;
        let x = Q::new(BigInt::from(1), BigInt::from(2u8).pow(900u32));
        assert!((q_ln(&x) + 900.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!((q_ln(&q(3, 7)) - (3.0f64 / 7.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn affine_negative_slope() {
        let a = IntervalUnion::interval(q(0, 1), q(1, 2));
        let img = a.affine(&q(-2, 1), &q_int(1));
        assert_eq!(img.parts(), &[(q_int(0), q_int(1))]);
    }
}
