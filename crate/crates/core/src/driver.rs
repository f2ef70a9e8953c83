//! The differential driver: split one fuzz input into a public value and two
//! secrets, run the target once per secret on a freshly cleared meter, and
//! report the per-dimension cost difference.

use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{CoverageMap, EdgeTracer};
use crate::metering::{CostDimension, CostReading, Meter, MeterError};

/// Everything a target may touch while it runs: the cost meter and the edge
/// tracer. One per execution thread.
#[derive(Default)]
pub struct Execution {
    pub meter: Meter,
    pub tracer: EdgeTracer,
}

impl Execution {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn tick(&mut self, n: u64) {
        self.meter.tick(n);
    }

    #[inline]
    pub fn visit(&mut self, site: u16) {
        self.tracer.visit(site);
    }

    pub fn alloc(&mut self, bytes: u64) {
        self.meter.record_alloc(bytes);
    }

    pub fn free(&mut self, bytes: u64) -> Result<(), TargetError> {
        self.meter.record_free(bytes).map_err(TargetError::from)
    }

    pub fn respond(&mut self, bytes: u64) {
        self.meter.record_response(bytes);
    }

    fn reset(&mut self) {
        self.meter.clear();
        self.tracer.reset();
    }
}

/// A target aborted. Reported as a harness error, never swallowed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TargetError {
    #[error(transparent)]
    Meter(#[from] MeterError),
    #[error("modulus {0} is below 2")]
    InvalidModulus(u64),
    #[error("{0}")]
    Other(String),
}

/// A metered analysis target: `(public, secret, execution) -> output`.
pub type TargetFn = fn(&[u8], &[u8], &mut Execution) -> Result<Vec<u8>, TargetError>;

/// Splits raw fuzz bytes into `(public, secret1, secret2)`.
pub type ParseFn = fn(&[u8], &Constraints) -> Result<Decoded, ParseReject>;

/// Character sets a driver can force its segments into. Non-member bytes are
/// mapped onto members by `members[byte % members.len()]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Charset {
    Any,
    Binary,
    Digits,
    Hex,
    Alnum,
}

const DIGITS: &[u8] = b"0123456789";
const HEX: &[u8] = b"0123456789abcdef";
const ALNUM: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

impl Charset {
    pub fn name(self) -> &'static str {
        match self {
            Charset::Any => "any",
            Charset::Binary => "binary",
            Charset::Digits => "digits",
            Charset::Hex => "hex",
            Charset::Alnum => "alnum",
        }
    }

    /// Number of distinct symbols in the set.
    pub fn size(self) -> usize {
        match self {
            Charset::Any => 256,
            Charset::Binary => 2,
            Charset::Digits => DIGITS.len(),
            Charset::Hex => HEX.len(),
            Charset::Alnum => ALNUM.len(),
        }
    }

    #[inline]
    pub fn map(self, b: u8) -> u8 {
        let members: &[u8] = match self {
            Charset::Any => return b,
            Charset::Binary => return b & 1,
            Charset::Digits => DIGITS,
            Charset::Hex => HEX,
            Charset::Alnum => ALNUM,
        };
        if members.contains(&b) {
            b
        } else {
            members[b as usize % members.len()]
        }
    }
}

impl fmt::Display for Charset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Charset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Charset::Any,
            Charset::Binary,
            Charset::Digits,
            Charset::Hex,
            Charset::Alnum,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| {
            format!("unknown charset {s:?} (expected any, binary, digits, hex or alnum)")
        })
    }
}

/// Constraints the parser enforces constructively on every segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraints {
    /// Maximum segment length in bytes.
    pub segment_cap: usize,
    /// Reject inputs too short to fill every segment to `segment_cap`.
    pub fixed_length: bool,
    pub charset: Charset,
}

impl Constraints {
    pub const fn new(segment_cap: usize) -> Self {
        Self {
            segment_cap,
            fixed_length: false,
            charset: Charset::Any,
        }
    }

    pub const fn fixed(segment_cap: usize, charset: Charset) -> Self {
        Self {
            segment_cap,
            fixed_length: true,
            charset,
        }
    }

    /// Bytes the parser reads at most.
    pub fn max_data(&self) -> usize {
        3 * self.segment_cap
    }

    /// Number of distinct decodings, when the domain is finite and fixed.
    pub fn domain_size(&self) -> Option<u128> {
        if !self.fixed_length {
            return None;
        }
        (self.charset.size() as u128).checked_pow(3 * self.segment_cap as u32)
    }
}

/// The three values one driver run works on.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decoded {
    pub public: Vec<u8>,
    pub secret1: Vec<u8>,
    pub secret2: Vec<u8>,
}

impl Decoded {
    pub fn swapped(&self) -> Decoded {
        Decoded {
            public: self.public.clone(),
            secret1: self.secret2.clone(),
            secret2: self.secret1.clone(),
        }
    }

    /// Raw input bytes that decode back to these values under fixed-length
    /// constraints of the same segment length.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.public.clone();
        out.extend_from_slice(&self.secret1);
        out.extend_from_slice(&self.secret2);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseReject {
    #[error("input of {len} bytes cannot yield three non-empty segments")]
    TooShort { len: usize },
    #[error("input of {len} bytes cannot fill three {cap}-byte segments")]
    NotFixedLength { len: usize, cap: usize },
}

/// Reads at most `3 * segment_cap` bytes, splits them into equal thirds and
/// maps every byte into the charset.
pub fn default_parse(bytes: &[u8], constraints: &Constraints) -> Result<Decoded, ParseReject> {
    let data = &bytes[..bytes.len().min(constraints.max_data())];
    let seg = data.len() / 3;
    if seg == 0 {
        return Err(ParseReject::TooShort { len: bytes.len() });
    }
    if constraints.fixed_length && seg < constraints.segment_cap {
        return Err(ParseReject::NotFixedLength {
            len: bytes.len(),
            cap: constraints.segment_cap,
        });
    }
    let take = |i: usize| -> Vec<u8> {
        data[i * seg..(i + 1) * seg]
            .iter()
            .map(|&b| constraints.charset.map(b))
            .collect()
    };
    Ok(Decoded {
        public: take(0),
        secret1: take(1),
        secret2: take(2),
    })
}

/// A driver definition: how to parse, what to run, and what to measure.
#[derive(Clone, Copy)]
pub struct DriverSpec {
    pub name: &'static str,
    pub parse: ParseFn,
    pub target: TargetFn,
    pub dimension: CostDimension,
    pub constraints: Constraints,
}

impl fmt::Debug for DriverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriverSpec")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("constraints", &self.constraints)
            .finish()
    }
}

impl DriverSpec {
    pub fn with_constraints(mut self, constraints: Constraints) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn with_dimension(mut self, dimension: CostDimension) -> Self {
        self.dimension = dimension;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Both executions completed with identical outputs.
    Ok,
    /// Both executions completed; their functional outputs differ. A note,
    /// not a failure.
    OutputMismatch,
    ParseReject(String),
    HarnessError(String),
}

impl Outcome {
    /// Both executions ran to completion.
    pub fn completed(&self) -> bool {
        matches!(self, Outcome::Ok | Outcome::OutputMismatch)
    }
}

/// The result of one driver run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffResult {
    /// `|cost1 - cost2|` on every dimension.
    pub delta: CostReading,
    pub cost1: CostReading,
    pub cost2: CostReading,
    pub decoded: Option<Decoded>,
    pub outcome: Outcome,
    /// The dimension [`DiffResult::score`] reads.
    pub dimension: CostDimension,
}

impl DiffResult {
    pub fn score(&self) -> u64 {
        self.delta.get(self.dimension)
    }
}

/// Reusable driver with its own execution context. `run` keeps no state
/// between calls beyond reused buffers.
pub struct Driver {
    spec: DriverSpec,
    exec: Execution,
}

impl Driver {
    pub fn new(spec: DriverSpec) -> Self {
        Self {
            spec,
            exec: Execution::new(),
        }
    }

    pub fn spec(&self) -> &DriverSpec {
        &self.spec
    }

    pub fn run(&mut self, input: &[u8]) -> DiffResult {
        self.run_inner(input, false).0
    }

    /// Like [`Driver::run`], also returning the bucketed coverage of both
    /// executions.
    pub fn run_with_coverage(&mut self, input: &[u8]) -> (DiffResult, [CoverageMap; 2]) {
        self.run_inner(input, true)
    }

    fn run_inner(&mut self, input: &[u8], want_coverage: bool) -> (DiffResult, [CoverageMap; 2]) {
        let decoded = match (self.spec.parse)(input, &self.spec.constraints) {
            Ok(d) => d,
            Err(reject) => {
                let result = DiffResult {
                    delta: CostReading::default(),
                    cost1: CostReading::default(),
                    cost2: CostReading::default(),
                    decoded: None,
                    outcome: Outcome::ParseReject(reject.to_string()),
                    dimension: self.spec.dimension,
                };
                return (result, Default::default());
            }
        };

        let (cost1, out1, cov1) = self.execute(&decoded.public, &decoded.secret1, want_coverage);
        let (cost2, out2, cov2) = self.execute(&decoded.public, &decoded.secret2, want_coverage);

        let outcome = match (out1, out2) {
            (Ok(a), Ok(b)) if a == b => Outcome::Ok,
            (Ok(_), Ok(_)) => Outcome::OutputMismatch,
            (Err(e), _) => Outcome::HarnessError(format!("run 1 (secret1): {e}")),
            (_, Err(e)) => Outcome::HarnessError(format!("run 2 (secret2): {e}")),
        };
        let result = DiffResult {
            delta: cost1.abs_diff(&cost2),
            cost1,
            cost2,
            decoded: Some(decoded),
            outcome,
            dimension: self.spec.dimension,
        };
        (result, [cov1, cov2])
    }

    fn execute(
        &mut self,
        public: &[u8],
        secret: &[u8],
        want_coverage: bool,
    ) -> (CostReading, Result<Vec<u8>, String>, CoverageMap) {
        self.exec.reset();
        let target = self.spec.target;
        let exec = &mut self.exec;
        let out = panic::catch_unwind(AssertUnwindSafe(|| target(public, secret, exec)));
        let out = match out {
            Ok(Ok(v)) => Ok(v),
            Ok(Err(e)) => Err(e.to_string()),
            Err(payload) => Err(panic_message(payload.as_ref())),
        };
        let cov = if want_coverage {
            self.exec.tracer.snapshot()
        } else {
            CoverageMap::new()
        };
        (self.exec.meter.reading(), out, cov)
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_string()
    }
}

/// One-shot convenience wrapper around [`Driver::run`].
pub fn run_driver(spec: &DriverSpec, input: &[u8]) -> DiffResult {
    Driver::new(*spec).run(input)
}
