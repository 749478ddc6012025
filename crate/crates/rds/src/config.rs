//! JSON configuration loading: base systems, matrix cocycles, and
//! interval-map specs with exact "n/d" rationals.

use crate::base::{BaseMeasure, BaseSystem, ExtensionRule, SymbolSequence};
use crate::error::{RdsError, Result};
use crate::interval::Q;
use crate::maps::{Branch, MarkovPartition, PiecewiseAffineMap};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

/// Rational encoded as "n/d" (or a bare integer string).
pub fn parse_rational(s: &str) -> Result<Q> {
    let parse_int = |t: &str| {
        BigInt::from_str(t.trim())
            .map_err(|_| RdsError::Config(format!("bad rational component {t:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den == BigInt::from(0) {
                return Err(RdsError::Config("zero denominator".into()));
            }
            Ok(Q::new(parse_int(n)?, den))
        }
        None => Ok(Q::from_integer(parse_int(s)?)),
    }
}

pub fn format_rational(q: &Q) -> String {
    if q.denom() == &BigInt::from(1) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bernoulli: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markov: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    /// "pi_digits" or "explicit".
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_fill: Option<u8>,
    /// Explicit window symbols (1-based) and its starting index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_lo: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub alphabet_size: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<Vec<Vec<u8>>>,
    pub measure: MeasureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceConfig>,
}

impl BaseConfig {
    pub fn build(&self) -> Result<(BaseSystem, Option<SymbolSequence>)> {
        let measure = match (&self.measure.bernoulli, &self.measure.markov) {
            (Some(p), None) => BaseMeasure::Bernoulli(p.clone()),
            (None, Some(p)) => BaseMeasure::Markov(p.clone()),
            _ => {
                return Err(RdsError::Config(
                    "measure must be exactly one of bernoulli or markov".into(),
                ))
            }
        };
        let base = BaseSystem {
            alphabet_size: self.alphabet_size,
            admissibility: self.admissibility.clone(),
            measure,
        };
        base.validate()?;
        let omega = match &self.sequence {
            None => None,
            Some(sc) => Some(self.build_sequence(sc)?),
        };
        Ok((base, omega))
    }

    fn build_sequence(&self, sc: &SequenceConfig) -> Result<SymbolSequence> {
        match sc.kind.as_str() {
            "pi_digits" => {
                let offset = sc
                    .offset
                    .ok_or_else(|| RdsError::Config("pi_digits needs offset".into()))?;
                let fill = sc.left_fill.unwrap_or(1);
                SymbolSequence::new(
                    self.alphabet_size,
                    0,
                    vec![],
                    ExtensionRule::Constant(fill),
                    ExtensionRule::PiBits {
                        index_offset: offset,
                    },
                )
            }
            "explicit" => {
                let window = sc
                    .window
                    .clone()
                    .ok_or_else(|| RdsError::Config("explicit sequence needs window".into()))?;
                let lo = sc.window_lo.unwrap_or(0);
                let fill = sc.left_fill.unwrap_or(1);
                SymbolSequence::new(
                    self.alphabet_size,
                    lo,
                    window,
                    ExtensionRule::Constant(fill),
                    ExtensionRule::Constant(fill),
                )
            }
            other => Err(RdsError::Config(format!("unknown sequence kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixConfig {
    /// Keyed by 1-based symbol as a string.
    pub matrices: BTreeMap<String, Vec<Vec<f64>>>,
}

impl MatrixConfig {
    pub fn generators(&self) -> Result<Vec<DMatrix<f64>>> {
        let mut out = Vec::new();
        for sym in 1..=self.matrices.len() {
            let rows = self
                .matrices
                .get(&sym.to_string())
                .ok_or_else(|| RdsError::Config(format!("missing matrix for symbol {sym}")))?;
            let k = rows.len();
            if rows.iter().any(|r| r.len() != k) {
                return Err(RdsError::Config(format!("matrix {sym} is not square")));
            }
            out.push(DMatrix::from_fn(k, k, |i, j| rows[i][j]));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub domain: [String; 2],
    pub slope: String,
    pub intercept: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub branches: Vec<BranchConfig>,
    #[serde(default)]
    pub mod_one: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSpecConfig {
    pub maps: BTreeMap<String, MapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markov_partition: Option<Vec<String>>,
}

impl MapSpecConfig {
    pub fn generators(&self) -> Result<Vec<PiecewiseAffineMap>> {
        let mut out = Vec::new();
        for sym in 1..=self.maps.len() {
            let mc = self
                .maps
                .get(&sym.to_string())
                .ok_or_else(|| RdsError::Config(format!("missing map for symbol {sym}")))?;
            let branches = mc
                .branches
                .iter()
                .map(|b| {
                    Ok(Branch {
                        domain: (parse_rational(&b.domain[0])?, parse_rational(&b.domain[1])?),
                        slope: parse_rational(&b.slope)?,
                        intercept: parse_rational(&b.intercept)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(PiecewiseAffineMap::new(branches, mc.mod_one)?);
        }
        Ok(out)
    }

    pub fn partition(&self) -> Result<Option<MarkovPartition>> {
        match &self.markov_partition {
            None => Ok(None),
            Some(cuts) => {
                let cuts = cuts
                    .iter()
                    .map(|c| parse_rational(c))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(MarkovPartition::new(cuts)?))
            }
        }
    }
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::q;

    #[test]
    fn rational_round_trip() {
        for s in ["3/5", "-7/2", "4", "0"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(format_rational(&r), s);
        }
        assert_eq!(parse_rational("6/10").unwrap(), q(3, 5));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn base_config_pi_sequence() {
        let text = r#"{
            "alphabet_size": 2,
            "measure": {"bernoulli": [0.5, 0.5]},
            "sequence": {"kind": "pi_digits", "offset": 1, "left_fill": 1}
        }"#;
        let cfg: BaseConfig = serde_json::from_str(text).unwrap();
        let (base, omega) = cfg.build().unwrap();
        assert_eq!(base.alphabet_size, 2);
        let omega = omega.unwrap();
        let expected = crate::base::build_omega_star(crate::base::OmegaStar::Example2).unwrap();
        for i in 0..40 {
            assert_eq!(omega.get(i).unwrap(), expected.get(i).unwrap());
        }
    }

    #[test]
    fn matrix_config_loads_in_symbol_order() {
        let text = r#"{"matrices": {"1": [[1.0,0.0],[0.0,1.0]], "2": [[0.0,1.0],[1.0,0.0]]}}"#;
        let cfg: MatrixConfig = serde_json::from_str(text).unwrap();
        let gens = cfg.generators().unwrap();
        assert_eq!(gens.len(), 2);
        assert_eq!(gens[0][(0, 0)], 1.0);
        assert_eq!(gens[1][(0, 1)], 1.0);
    }

    #[test]
    fn map_spec_round_trip() {
        let text = r#"{
            "maps": {"1": {"branches": [
                {"domain": ["0", "1"], "slope": "2", "intercept": "3/5"}
            ], "mod_one": true}},
            "markov_partition": ["0", "1/5", "2/5", "3/5", "4/5", "1"]
        }"#;
        let cfg: MapSpecConfig = serde_json::from_str(text).unwrap();
        let maps = cfg.generators().unwrap();
        assert_eq!(maps.len(), 1);
        assert_eq!(maps[0].branches[0].intercept, q(3, 5));
        let p = cfg.partition().unwrap().unwrap();
        assert_eq!(p.cell_count(), 5);
    }
}
