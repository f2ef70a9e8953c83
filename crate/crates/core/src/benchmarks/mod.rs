//! Analysis targets with known side channels and their repaired versions.
//!
//! Every target is a metered function of `(public, secret)`. Each benchmark
//! registers one driver per variant under a stable name; see [`registry`].

pub mod blazer;
pub mod crime;
pub mod lz77;
pub mod mod_pow;
pub mod pad;
pub mod pwcheck;
pub mod salted_login;
pub mod string_equals;

use serde::Serialize;

use crate::driver::{default_parse, Constraints, DriverSpec, TargetFn};
use crate::metering::CostDimension;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    /// Contains the side channel.
    Unsafe,
    /// Repaired version, functionally equivalent to the unsafe one.
    Safe,
}

/// A secret-dependent quantity that alone determines a target's cost once
/// the public value and segment length are fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Length of the common prefix of secret and public value.
    MatchPrefix,
    /// Number of positions where secret and public value agree.
    EqualPositions,
    /// Number of bytes before the first NUL in the secret.
    SourceLength,
    /// Number of set bits in the secret.
    Popcount,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::MatchPrefix => "match_prefix",
            Statistic::EqualPositions => "equal_positions",
            Statistic::SourceLength => "source_length",
            Statistic::Popcount => "popcount",
        }
    }
}

/// One registered variant of a benchmark.
#[derive(Clone, Copy, Debug)]
pub struct Variant {
    pub driver_name: &'static str,
    pub kind: VariantKind,
    pub target: TargetFn,
}

/// A benchmark program with its variants and measurement recommendations.
#[derive(Clone, Copy, Debug)]
pub struct BenchmarkTarget {
    pub name: &'static str,
    pub unsafe_variant: Variant,
    pub safe_variant: Option<Variant>,
    /// Annotated tick points, one line each.
    pub cost_model_doc: &'static [&'static str],
    pub dimension: CostDimension,
    pub constraints: Constraints,
    pub statistic: Option<Statistic>,
}

impl BenchmarkTarget {
    pub fn variants(&self) -> impl Iterator<Item = Variant> + '_ {
        std::iter::once(self.unsafe_variant).chain(self.safe_variant)
    }

    pub fn driver(&self, variant: &Variant) -> DriverSpec {
        DriverSpec {
            name: variant.driver_name,
            parse: default_parse,
            target: variant.target,
            dimension: self.dimension,
            constraints: self.constraints,
        }
    }
}

const fn unsafe_v(driver_name: &'static str, target: TargetFn) -> Variant {
    Variant {
        driver_name,
        kind: VariantKind::Unsafe,
        target,
    }
}

const fn safe_v(driver_name: &'static str, target: TargetFn) -> Option<Variant> {
    Some(Variant {
        driver_name,
        kind: VariantKind::Safe,
        target,
    })
}

const BLAZER_CONSTRAINTS: Constraints = Constraints::new(2);

static REGISTRY: &[BenchmarkTarget] = &[
    BenchmarkTarget {
        name: "pwcheck",
        unsafe_variant: unsafe_v("pwcheck_unsafe", pwcheck::unsafe_target),
        safe_variant: safe_v("pwcheck_safe", pwcheck::safe_target),
        cost_model_doc: &[
            "unsafe: 1 length check (mismatch returns immediately)",
            "unsafe: 2 per iteration (guard, byte comparison)",
            "unsafe: 1 on early return from the loop",
            "safe: 1 entry + 4 per public byte",
        ],
        dimension: CostDimension::Ops,
        constraints: Constraints::new(16),
        statistic: Some(Statistic::MatchPrefix),
    },
    BenchmarkTarget {
        name: "string_equals",
        unsafe_variant: unsafe_v("jetty_leaky", string_equals::leaky_target),
        safe_variant: safe_v("jetty_const", string_equals::const_target),
        cost_model_doc: &[
            "7 fixed (init, length reads, length check, min, final guard, return)",
            "1 per loop guard",
            "leaky: accumulate costs 3 on equal characters, 2 otherwise",
            "const: accumulate costs 3 always",
        ],
        dimension: CostDimension::Ops,
        constraints: Constraints::new(16),
        statistic: Some(Statistic::EqualPositions),
    },
    BenchmarkTarget {
        name: "pad",
        unsafe_variant: unsafe_v("pad_unsafe", pad::unsafe_target),
        safe_variant: safe_v("pad_safe", pad::safe_target),
        cost_model_doc: &[
            "2 prologue (length read, src >= total comparison)",
            "unsafe: 1 early return when src already fills the total length",
            "unsafe: 1 builder + 2 per padding char + 3 epilogue",
            "safe: 1 builder + 2 per total-length position + 3 epilogue",
            "peak_mem: builder capacity in bytes",
        ],
        dimension: CostDimension::Ops,
        constraints: Constraints::new(16),
        statistic: Some(Statistic::SourceLength),
    },
    BenchmarkTarget {
        name: "mod_pow",
        unsafe_variant: unsafe_v("mod_pow_unsafe", mod_pow::unsafe_target),
        safe_variant: safe_v("mod_pow_safe", mod_pow::safe_target),
        cost_model_doc: &[
            "1 setup",
            "per exponent bit: 1 guard + 1 bit test + 2 squaring",
            "unsafe: 2 per set bit (multiply)",
            "safe: 2 per bit (real or dummy multiply)",
        ],
        dimension: CostDimension::Ops,
        constraints: Constraints::new(8),
        statistic: Some(Statistic::Popcount),
    },
    BenchmarkTarget {
        name: "array",
        unsafe_variant: unsafe_v("array_unsafe", blazer::array_unsafe_target),
        safe_variant: safe_v("array_safe", blazer::array_safe_target),
        cost_model_doc: &[
            "1 branch on high > 0",
            "fill: 2 per public byte, 4 metered bytes per cell",
            "unsafe: fill only when high > 0; safe: fill on both branches",
        ],
        dimension: CostDimension::Ops,
        constraints: BLAZER_CONSTRAINTS,
        statistic: None,
    },
    BenchmarkTarget {
        name: "loop_and_branch",
        unsafe_variant: unsafe_v(
            "loop_and_branch_unsafe",
            blazer::loop_and_branch_unsafe_target,
        ),
        safe_variant: safe_v("loop_and_branch_safe", blazer::loop_and_branch_safe_target),
        cost_model_doc: &[
            "1 branch on high < 0",
            "2 per loop iteration",
            "unsafe: loops low times if high < 0, else high times",
            "safe: loops low times on both branches, guarded by high + 10 > 0 (wrapping)",
        ],
        dimension: CostDimension::Ops,
        constraints: BLAZER_CONSTRAINTS,
        statistic: None,
    },
    BenchmarkTarget {
        name: "sanity",
        unsafe_variant: unsafe_v("sanity_unsafe", blazer::sanity_unsafe_target),
        safe_variant: safe_v("sanity_safe", blazer::sanity_safe_target),
        cost_model_doc: &[
            "1 comparison of high and low",
            "unsafe: 2 per iteration of a loop running high - low times",
        ],
        dimension: CostDimension::Ops,
        constraints: BLAZER_CONSTRAINTS,
        statistic: None,
    },
    BenchmarkTarget {
        name: "straightline",
        unsafe_variant: unsafe_v("straightline_unsafe", blazer::straightline_unsafe_target),
        safe_variant: safe_v("straightline_safe", blazer::straightline_safe_target),
        cost_model_doc: &[
            "1 branch on high > 0",
            "unsafe: 8 statements on the taken branch only",
            "safe: 8 statements on either branch",
        ],
        dimension: CostDimension::Ops,
        constraints: BLAZER_CONSTRAINTS,
        statistic: None,
    },
    BenchmarkTarget {
        name: "crime",
        unsafe_variant: unsafe_v("crime_compress", crime::target),
        safe_variant: None,
        cost_model_doc: &[
            "1 per emitted token (literal or back-reference)",
            "response_bytes: compressed size of public ++ secret",
        ],
        dimension: CostDimension::ResponseBytes,
        constraints: Constraints::new(16),
        statistic: None,
    },
    BenchmarkTarget {
        name: "salted_login",
        unsafe_variant: unsafe_v("salted_login_unsafe", salted_login::unsafe_target),
        safe_variant: safe_v("salted_login_safe", salted_login::safe_target),
        cost_model_doc: &[
            "1 per hashed byte for each of the two records",
            "1 length check + 2 per compared record byte",
            "unsafe: 1 on early return at the first differing byte",
        ],
        dimension: CostDimension::Ops,
        constraints: Constraints::new(8),
        statistic: None,
    },
];

/// All benchmarks in registration order.
pub fn registry() -> &'static [BenchmarkTarget] {
    REGISTRY
}

/// Finds the benchmark and variant behind a driver name.
pub fn lookup(driver_name: &str) -> Option<(&'static BenchmarkTarget, Variant)> {
    REGISTRY.iter().find_map(|b| {
        b.variants()
            .find(|v| v.driver_name == driver_name)
            .map(|v| (b, v))
    })
}

/// The driver registered under `driver_name` with its recommended settings.
pub fn driver(driver_name: &str) -> Option<DriverSpec> {
    lookup(driver_name).map(|(b, v)| b.driver(&v))
}

/// Every registered driver name.
pub fn driver_names() -> Vec<&'static str> {
    REGISTRY
        .iter()
        .flat_map(|b| b.variants().map(|v| v.driver_name))
        .collect()
}
