//! Deterministic per-execution resource accounting.
//!
//! Targets are annotated by hand: they call [`Meter::tick`] at the points their
//! cost model declares, report allocations through [`Meter::record_alloc`] /
//! [`Meter::record_free`], and declare response payloads through
//! [`Meter::record_response`]. Nothing here samples the host clock, so two runs
//! of the same target on the same input always produce the same reading.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Resource usage of one execution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostReading {
    /// Metered operations (cost-model units).
    pub ops: u64,
    /// Maximum live metered allocation, in bytes.
    pub peak_mem: u64,
    /// Total declared response size, in bytes.
    pub response_bytes: u64,
}

impl CostReading {
    pub fn get(&self, dimension: CostDimension) -> u64 {
        match dimension {
            CostDimension::Ops => self.ops,
            CostDimension::PeakMem => self.peak_mem,
            CostDimension::ResponseBytes => self.response_bytes,
        }
    }

    /// Per-dimension absolute difference.
    pub fn abs_diff(&self, other: &CostReading) -> CostReading {
        CostReading {
            ops: self.ops.abs_diff(other.ops),
            peak_mem: self.peak_mem.abs_diff(other.peak_mem),
            response_bytes: self.response_bytes.abs_diff(other.response_bytes),
        }
    }
}

impl fmt::Display for CostReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ops={} peak_mem={} response_bytes={}",
            self.ops, self.peak_mem, self.response_bytes
        )
    }
}

/// The cost dimension a campaign maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostDimension {
    Ops,
    PeakMem,
    ResponseBytes,
}

impl CostDimension {
    /// Short name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            CostDimension::Ops => "ops",
            CostDimension::PeakMem => "mem",
            CostDimension::ResponseBytes => "response",
        }
    }
}

impl fmt::Display for CostDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for CostDimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ops" => Ok(CostDimension::Ops),
            "mem" | "peak_mem" => Ok(CostDimension::PeakMem),
            "response" | "response_bytes" => Ok(CostDimension::ResponseBytes),
            other => Err(format!(
                "unknown cost dimension {other:?} (expected ops, mem or response)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeterError {
    #[error("freed {requested} bytes but only {live} bytes are live")]
    FreeExceedsLive { requested: u64, live: u64 },
}

/// Accumulates the cost of a single execution.
#[derive(Clone, Debug, Default)]
pub struct Meter {
    current: CostReading,
    live_mem: u64,
}

impl Meter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resets the meter to (0, 0, 0) with nothing live.
    pub fn clear(&mut self) {
        self.current = CostReading::default();
        self.live_mem = 0;
    }

    #[inline]
    pub fn tick(&mut self, n: u64) {
        debug_assert!(n >= 1, "tick called with zero units");
        self.current.ops = self.current.ops.saturating_add(n);
    }

    pub fn record_alloc(&mut self, bytes: u64) {
        self.live_mem = self.live_mem.saturating_add(bytes);
        self.current.peak_mem = self.current.peak_mem.max(self.live_mem);
    }

    /// Releases previously recorded bytes. Releasing more than is live means
    /// the harness is miscounting, which aborts the execution.
    pub fn record_free(&mut self, bytes: u64) -> Result<(), MeterError> {
        if bytes > self.live_mem {
            return Err(MeterError::FreeExceedsLive {
                requested: bytes,
                live: self.live_mem,
            });
        }
        self.live_mem -= bytes;
        Ok(())
    }

    pub fn record_response(&mut self, bytes: u64) {
        self.current.response_bytes = self.current.response_bytes.saturating_add(bytes);
    }

    pub fn reading(&self) -> CostReading {
        self.current
    }

    pub fn live_mem(&self) -> u64 {
        self.live_mem
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clear_resets_ops() {
        let mut m = Meter::new();
        m.tick(47);
        assert_eq!(m.reading().ops, 47);
        m.clear();
        assert_eq!(m.reading().ops, 0);
    }

    #[test]
    fn clear_on_fresh_meter_is_noop() {
        let mut m = Meter::new();
        m.clear();
        assert_eq!(m.reading(), CostReading::default());
        assert_eq!(m.live_mem(), 0);
    }

    #[test]
    fn clear_resets_peak() {
        let mut m = Meter::new();
        m.record_alloc(1024);
        assert_eq!(m.reading().peak_mem, 1024);
        m.clear();
        assert_eq!(m.reading().peak_mem, 0);
        assert_eq!(m.live_mem(), 0);
    }

    #[test]
    fn tick_accumulates() {
        let mut m = Meter::new();
        m.tick(1);
        assert_eq!(m.reading().ops, 1);
        let mut m = Meter::new();
        m.tick(5);
        m.tick(3);
        assert_eq!(m.reading().ops, 8);
        let mut m = Meter::new();
        for _ in 0..47 {
            m.tick(1);
        }
        assert_eq!(m.reading().ops, 47);
    }

    #[test]
    fn peak_tracks_running_maximum() {
        let mut m = Meter::new();
        m.record_alloc(100);
        m.record_alloc(50);
        m.record_free(100).unwrap();
        assert_eq!(m.reading().peak_mem, 150);
        assert_eq!(m.live_mem(), 50);

        let mut m = Meter::new();
        m.record_alloc(10);
        m.record_free(10).unwrap();
        m.record_alloc(10);
        assert_eq!(m.reading().peak_mem, 10);

        assert_eq!(Meter::new().reading().peak_mem, 0);
    }

    #[test]
    fn over_free_is_an_error() {
        let mut m = Meter::new();
        m.record_alloc(8);
        assert_eq!(
            m.record_free(9),
            Err(MeterError::FreeExceedsLive {
                requested: 9,
                live: 8
            })
        );
        // state untouched by the rejected free
        assert_eq!(m.live_mem(), 8);
    }

    #[test]
    fn responses_accumulate() {
        let mut m = Meter::new();
        m.record_response(42);
        assert_eq!(m.reading().response_bytes, 42);
        let mut m = Meter::new();
        m.record_response(10);
        m.record_response(5);
        assert_eq!(m.reading().response_bytes, 15);
        assert_eq!(Meter::new().reading().response_bytes, 0);
    }

    #[test]
    fn dimension_names_round_trip() {
        for d in [
            CostDimension::Ops,
            CostDimension::PeakMem,
            CostDimension::ResponseBytes,
        ] {
            assert_eq!(d.cli_name().parse::<CostDimension>().unwrap(), d);
        }
        assert!("time".parse::<CostDimension>().is_err());
    }

    #[derive(Debug, Clone)]
    enum Event {
        Alloc(u64),
        Free(u64),
        Tick(u64),
    }

    fn events() -> impl Strategy<Value = Vec<Event>> {
        prop::collection::vec(
            prop_oneof![
                (1u64..500).prop_map(Event::Alloc),
                (1u64..500).prop_map(Event::Free),
                (1u64..10).prop_map(Event::Tick),
            ],
            0..64,
        )
    }

    fn replay(m: &mut Meter, evs: &[Event]) {
        for e in evs {
            match *e {
                Event::Alloc(b) => m.record_alloc(b),
                Event::Free(b) => {
                    let b = b.min(m.live_mem());
                    if b > 0 {
                        m.record_free(b).unwrap();
                    }
                }
                Event::Tick(n) => m.tick(n),
            }
        }
    }

    proptest! {
        #[test]
        fn peak_matches_shadow_log(evs in events()) {
            let mut m = Meter::new();
            let mut live: u64 = 0;
            let mut peak: u64 = 0;
            let mut ops: u64 = 0;
            for e in &evs {
                match *e {
                    Event::Alloc(b) => {
                        m.record_alloc(b);
                        live += b;
                        peak = peak.max(live);
                    }
                    Event::Free(b) => {
                        let b = b.min(live);
                        if b > 0 {
                            m.record_free(b).unwrap();
                            live -= b;
                        }
                    }
                    Event::Tick(n) => {
                        let before = m.reading().ops;
                        m.tick(n);
                        ops += n;
                        prop_assert!(m.reading().ops >= before);
                    }
                }
                prop_assert!(m.reading().peak_mem >= m.live_mem());
            }
            prop_assert_eq!(m.reading().peak_mem, peak);
            prop_assert_eq!(m.live_mem(), live);
            prop_assert_eq!(m.reading().ops, ops);
        }

        #[test]
        fn no_leak_across_clear(a in events(), b in events()) {
            let mut alone = Meter::new();
            replay(&mut alone, &b);

            let mut m = Meter::new();
            replay(&mut m, &a);
            m.clear();
            replay(&mut m, &b);
            prop_assert_eq!(m.reading(), alone.reading());
        }
    }
}
