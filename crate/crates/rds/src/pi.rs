//! Binary digits of the fractional part of pi.
//!
//! Digits are produced by exact long division from a stored decimal
//! constant: the fractional part is held as an arbitrary-precision
//! integer remainder which is repeatedly doubled, the carry out of the
//! integer position being the next binary digit. Floating point is
//! never involved, so digits deep into the expansion are exact.

use crate::error::{RdsError, Result};
use num_bigint::BigUint;
use num_traits::Zero;
use once_cell::sync::Lazy;
use std::sync::Mutex;

/// 520 decimal digits of the fractional part of pi.
const PI_FRACTIONAL_DECIMAL: &str = "\
1415926535897932384626433832795028841971693993751058209749445923078164062862089\
9862803482534211706798214808651328230664709384460955058223172535940812848111745\
0284102701938521105559644622948954930381964428810975665933446128475648233786783\
1652712019091456485669234603486104543266482133936072602491412737245870066063155\
8817488152092096282925409171536436789259036001133053054882046652138414695194151\
1609433057270365759591953092186117381932611793105118548074462379962749567351885\
7527248912279381830119491298336733624406566430";

/// Binary digits beyond this index would dip into the noise floor of the
/// stored decimal constant (520 digits / log10(2), minus a safety margin).
const MAX_BITS: usize = 1500;

struct DigitCache {
    bits: Vec<u8>,
    remainder: BigUint,
    scale: BigUint,
}

static CACHE: Lazy<Mutex<DigitCache>> = Lazy::new(|| {
    let remainder: BigUint = PI_FRACTIONAL_DECIMAL.parse().unwrap();
    let scale = BigUint::from(10u8).pow(PI_FRACTIONAL_DECIMAL.len() as u32);
    Mutex::new(DigitCache {
        bits: Vec::new(),
        remainder,
        scale,
    })
});

/// The first `count` binary digits of the fractional part of pi.
/// Digit 1 is the most significant fractional bit.
pub fn pi_binary_digits(count: usize) -> Result<Vec<u8>> {
    if count > MAX_BITS {
        return Err(RdsError::DigitPrecisionExhausted(count));
    }
    let mut cache = CACHE.lock().unwrap();
    while cache.bits.len() < count {
        let doubled = &cache.remainder << 1;
        let bit = if doubled >= cache.scale {
            cache.remainder = &doubled - &cache.scale;
            1u8
        } else {
            cache.remainder = doubled;
            0u8
        };
        cache.bits.push(bit);
        debug_assert!(!cache.remainder.is_zero());
    }
    Ok(cache.bits[..count].to_vec())
}

/// Single digit lookup, 1-based.
pub fn pi_binary_digit(index: usize) -> Result<u8> {
    if index == 0 {
        return Err(RdsError::DigitPrecisionExhausted(0));
    }
    Ok(pi_binary_digits(index)?[index - 1])
}
