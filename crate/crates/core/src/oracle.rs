//! Ground-truth maximum delta on small input domains.
//!
//! [`exhaustive_max_delta`] runs the driver on every `(public, secret1,
//! secret2)` triple of fixed-length segments over an alphabet.
//! [`structured_max_delta`] instead enumerates the range of the secret
//! statistic a target's cost depends on. Both go through the same driver path
//! as the fuzzer.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::benchmarks::{self, Statistic};
use crate::driver::{run_driver, Charset, Constraints, Decoded, Driver, DriverSpec};
use crate::metering::CostDimension;

/// Largest number of driver runs an exhaustive sweep may take by default.
pub const DEFAULT_BUDGET: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    /// Bytes `0` and `1`.
    Binary,
    /// All 256 byte values.
    Byte,
}

impl Alphabet {
    pub fn symbols(self) -> &'static [u8] {
        static BYTES: [u8; 256] = {
            let mut a = [0u8; 256];
            let mut i = 0;
            while i < 256 {
                a[i] = i as u8;
                i += 1;
            }
            a
        };
        match self {
            Alphabet::Binary => &BYTES[..2],
            Alphabet::Byte => &BYTES,
        }
    }

    pub fn size(self) -> u128 {
        self.symbols().len() as u128
    }

    pub fn name(self) -> &'static str {
        match self {
            Alphabet::Binary => "binary",
            Alphabet::Byte => "byte",
        }
    }

    /// Fixed-length constraints whose charset maps every byte into this
    /// alphabet.
    pub fn constraints(self, segment_len: usize) -> Constraints {
        let charset = match self {
            Alphabet::Binary => Charset::Binary,
            Alphabet::Byte => Charset::Any,
        };
        Constraints::fixed(segment_len, charset)
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Alphabet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(Alphabet::Binary),
            "byte" => Ok(Alphabet::Byte),
            other => Err(format!(
                "unknown alphabet {other:?} (expected binary or byte)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    Structured,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Structured => "structured",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub driver: String,
    pub method: Method,
    pub dimension: CostDimension,
    pub segment_len: usize,
    pub alphabet: Alphabet,
    pub max_delta: u64,
    pub witness: Decoded,
    /// Raw driver input reproducing the witness.
    pub witness_bytes: Vec<u8>,
    pub runs: u64,
}

impl OracleResult {
    pub fn render_text(&self) -> String {
        format!(
            "driver: {}\nmethod: {}\ndimension: {}\nsegment_len: {}\nalphabet: {}\nruns: {}\nmax_delta: {}\nwitness:\n  pub={}\n  sec_1={}\n  sec_2={}\n",
            self.driver,
            self.method.name(),
            self.dimension,
            self.segment_len,
            self.alphabet,
            self.runs,
            self.max_delta,
            crate::campaign::hex(&self.witness.public),
            crate::campaign::hex(&self.witness.secret1),
            crate::campaign::hex(&self.witness.secret2),
        )
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("oracle results serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("domain of {cardinality} driver runs exceeds the budget of {budget}")]
    DomainTooLarge { cardinality: u128, budget: u128 },
    #[error("driver {0} declares no cost statistic; use the exhaustive oracle")]
    NoStatistic(String),
    #[error("segment length must be at least 1")]
    EmptySegments,
    #[error("witness replayed to {replayed} but the oracle computed {expected}")]
    WitnessMismatch { expected: u64, replayed: u64 },
}

fn digits(mut index: u128, symbols: &[u8], out: &mut [u8]) {
    let k = symbols.len() as u128;
    for slot in out.iter_mut().rev() {
        *slot = symbols[(index % k) as usize];
        index /= k;
    }
}

/// Exact maximum delta over every fixed-length triple. Ties resolve to the
/// lowest enumeration index, with `public` as the most significant segment.
pub fn exhaustive_max_delta(
    spec: &DriverSpec,
    segment_len: usize,
    alphabet: Alphabet,
    budget: u128,
) -> Result<OracleResult, OracleError> {
    if segment_len == 0 {
        return Err(OracleError::EmptySegments);
    }
    let k = alphabet.size();
    let cardinality = k
        .checked_pow(3 * segment_len as u32)
        .filter(|&c| c <= budget)
        .ok_or_else(|| OracleError::DomainTooLarge {
            cardinality: k.checked_pow(3 * segment_len as u32).unwrap_or(u128::MAX),
            budget,
        })?;
    let spec = spec.with_constraints(Constraints::fixed(segment_len, Charset::Any));
    let symbols = alphabet.symbols();
    let publics = k.pow(segment_len as u32);
    let pairs = k.pow(2 * segment_len as u32);

    // (delta, index), reduced so the largest delta with the smallest index wins
    let best = (0..publics as u64)
        .into_par_iter()
        .map_init(
            || (Driver::new(spec), vec![0u8; 3 * segment_len]),
            |(driver, buf), p| {
                digits(p as u128, symbols, &mut buf[..segment_len]);
                let mut best: (u64, u128) = (0, p as u128 * pairs);
                for s in 0..pairs {
                    digits(s, symbols, &mut buf[segment_len..]);
                    let d = driver.run(buf).score();
                    if d > best.0 {
                        best = (d, p as u128 * pairs + s);
                    }
                }
                best
            },
        )
        .reduce(
            || (0, u128::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );

    let mut witness_bytes = vec![0u8; 3 * segment_len];
    digits(best.1, symbols, &mut witness_bytes);
    finish(
        &spec,
        Method::Exhaustive,
        segment_len,
        alphabet,
        best.0,
        witness_bytes,
        cardinality as u64,
    )
}

fn finish(
    spec: &DriverSpec,
    method: Method,
    segment_len: usize,
    alphabet: Alphabet,
    max_delta: u64,
    witness_bytes: Vec<u8>,
    runs: u64,
) -> Result<OracleResult, OracleError> {
    let replay = run_driver(spec, &witness_bytes);
    let replayed = replay.score();
    if replayed != max_delta {
        return Err(OracleError::WitnessMismatch {
            expected: max_delta,
            replayed,
        });
    }
    Ok(OracleResult {
        driver: spec.name.to_string(),
        method,
        dimension: spec.dimension,
        segment_len,
        alphabet,
        max_delta,
        witness: replay.decoded.expect("fixed-length witness decodes"),
        witness_bytes,
        runs,
    })
}

/// One secret per value of `statistic`, all relative to `public`.
pub fn representatives(
    statistic: Statistic,
    public: &[u8],
    alphabet: Alphabet,
) -> Vec<(u32, Vec<u8>)> {
    let n = public.len();
    let [lo, hi] = [alphabet.symbols()[0], alphabet.symbols()[1]];
    let other = |b: u8| if b == lo { hi } else { lo };
    match statistic {
        Statistic::MatchPrefix => (0..=n)
            .map(|v| {
                let mut s = public.to_vec();
                if v < n {
                    s[v] = other(s[v]);
                }
                (v as u32, s)
            })
            .collect(),
        Statistic::EqualPositions => (0..=n)
            .map(|v| {
                let s = (0..n)
                    .map(|i| if i < v { public[i] } else { other(public[i]) })
                    .collect();
                (v as u32, s)
            })
            .collect(),
        Statistic::SourceLength => (0..=n)
            .map(|v| {
                // `hi` is never NUL, `lo` always is
                let s = (0..n).map(|i| if i < v { hi } else { lo }).collect();
                (v as u32, s)
            })
            .collect(),
        Statistic::Popcount => {
            let bits_per_symbol = match alphabet {
                Alphabet::Binary => 1,
                Alphabet::Byte => 8,
            };
            (0..=n * bits_per_symbol)
                .map(|v| {
                    let s = (0..n)
                        .map(|i| {
                            let set = v.saturating_sub(i * bits_per_symbol).min(bits_per_symbol);
                            match alphabet {
                                Alphabet::Binary => set as u8,
                                Alphabet::Byte => (0xffu16 << (8 - set)) as u8,
                            }
                        })
                        .collect();
                    (v as u32, s)
                })
                .collect()
        }
    }
}

/// Maximum delta computed over the declared statistic's range instead of raw
/// bytes. Valid only when the target's cost is a function of the statistic
/// for a fixed public value.
pub fn structured_max_delta(
    spec: &DriverSpec,
    segment_len: usize,
    alphabet: Alphabet,
) -> Result<OracleResult, OracleError> {
    if segment_len == 0 {
        return Err(OracleError::EmptySegments);
    }
    let statistic = benchmarks::lookup(spec.name)
        .and_then(|(b, _)| b.statistic)
        .ok_or_else(|| OracleError::NoStatistic(spec.name.to_string()))?;
    let spec = spec.with_constraints(Constraints::fixed(segment_len, Charset::Any));
    let public = vec![alphabet.symbols()[1]; segment_len];
    let reps = representatives(statistic, &public, alphabet);

    let mut driver = Driver::new(spec);
    let costs: Vec<(u64, &Vec<u8>)> = reps
        .iter()
        .map(|(_, s)| {
            let input = [&public[..], s, s].concat();
            (driver.run(&input).cost1.get(spec.dimension), s)
        })
        .collect();
    let max = costs
        .iter()
        .max_by_key(|(c, _)| *c)
        .expect("non-empty range");
    let min = costs
        .iter()
        .min_by_key(|(c, _)| *c)
        .expect("non-empty range");
    let witness_bytes = [&public[..], max.1, min.1].concat();
    finish(
        &spec,
        Method::Structured,
        segment_len,
        alphabet,
        max.0 - min.0,
        witness_bytes,
        reps.len() as u64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::driver;

    fn exhaustive(name: &str, len: usize, a: Alphabet) -> OracleResult {
        exhaustive_max_delta(&driver(name).unwrap(), len, a, DEFAULT_BUDGET).unwrap()
    }

    fn structured(name: &str, len: usize, a: Alphabet) -> OracleResult {
        structured_max_delta(&driver(name).unwrap(), len, a).unwrap()
    }

    #[test]
    fn safe_pwcheck_is_flat() {
        let r = exhaustive("pwcheck_safe", 2, Alphabet::Binary);
        assert_eq!(r.max_delta, 0);
        assert_eq!(r.runs, 64);
    }

    #[test]
    fn unsafe_pwcheck_witness_shape() {
        let r = exhaustive("pwcheck_unsafe", 2, Alphabet::Binary);
        // mismatch at byte 1 (6 ops) against a mismatch at byte 0 (4 ops)
        assert_eq!(r.max_delta, 2);
        assert_eq!(r.witness.secret1[0], r.witness.public[0]);
        assert_ne!(r.witness.secret1[1], r.witness.public[1]);
        assert_ne!(r.witness.secret2[0], r.witness.public[0]);
    }

    #[test]
    fn tie_break_picks_lowest_index() {
        let r = exhaustive("pwcheck_unsafe", 2, Alphabet::Binary);
        assert_eq!(r.witness_bytes, vec![0, 0, 0, 1, 1, 0]);
    }

    #[test]
    fn one_byte_binary_domain() {
        let r = exhaustive("pwcheck_unsafe", 1, Alphabet::Binary);
        // a mismatch (4) against a match (3)
        assert_eq!(r.max_delta, 1);
        assert_eq!(r.runs, 8);
    }

    #[test]
    fn domain_budget_is_enforced() {
        let spec = driver("pwcheck_unsafe").unwrap();
        let err = exhaustive_max_delta(&spec, 2, Alphabet::Byte, DEFAULT_BUDGET).unwrap_err();
        assert_eq!(
            err,
            OracleError::DomainTooLarge {
                cardinality: 1 << 48,
                budget: DEFAULT_BUDGET
            }
        );
    }

    #[test]
    fn structured_pwcheck_len_16() {
        let r = structured("pwcheck_unsafe", 16, Alphabet::Byte);
        // a mismatch at byte 15 costs 34, one at byte 0 costs 4, a full match 33
        assert_eq!(r.max_delta, 30);
        assert_eq!(r.witness.secret1[..15], r.witness.public[..15]);
        assert_ne!(r.witness.secret1[15], r.witness.public[15]);
        assert_ne!(r.witness.secret2[0], r.witness.public[0]);
    }

    #[test]
    fn structured_mod_pow_8_bit() {
        let r = structured("mod_pow_unsafe", 1, Alphabet::Byte);
        assert_eq!(r.max_delta, 8 * crate::benchmarks::mod_pow::MULTIPLY_COST);
        assert_eq!(r.witness.secret1, vec![0xff]);
        assert_eq!(r.witness.secret2, vec![0x00]);
    }

    #[test]
    fn structured_agrees_with_exhaustive() {
        for name in [
            "pwcheck_unsafe",
            "pwcheck_safe",
            "jetty_leaky",
            "jetty_const",
            "pad_unsafe",
            "pad_safe",
            "mod_pow_unsafe",
            "mod_pow_safe",
        ] {
            for len in 1..=2 {
                assert_eq!(
                    structured(name, len, Alphabet::Binary).max_delta,
                    exhaustive(name, len, Alphabet::Binary).max_delta,
                    "{name} len {len}"
                );
            }
        }
        assert_eq!(
            structured("mod_pow_unsafe", 1, Alphabet::Byte).max_delta,
            exhaustive("mod_pow_unsafe", 1, Alphabet::Byte).max_delta
        );
    }

    #[test]
    fn no_statistic_is_refused() {
        let spec = driver("sanity_unsafe").unwrap();
        assert_eq!(
            structured_max_delta(&spec, 2, Alphabet::Binary).unwrap_err(),
            OracleError::NoStatistic("sanity_unsafe".into())
        );
    }

    #[test]
    fn popcount_representatives() {
        let reps = representatives(Statistic::Popcount, &[1, 1], Alphabet::Byte);
        assert_eq!(reps.len(), 17);
        for (v, s) in reps {
            let ones: u32 = s.iter().map(|b| b.count_ones()).sum();
            assert_eq!(ones, v);
        }
    }

    #[test]
    fn json_line_round_trips_fields() {
        let r = exhaustive("pwcheck_unsafe", 1, Alphabet::Binary);
        let v: serde_json::Value = serde_json::from_str(&r.to_json_line()).unwrap();
        assert_eq!(v["max_delta"], 1);
        assert_eq!(v["method"], "exhaustive");
        assert_eq!(v["alphabet"], "binary");
    }
}
