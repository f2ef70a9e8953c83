//! AFL-style edge coverage with hit-count bucketing.
//!
//! Instrumented targets call [`EdgeTracer::visit`] with a per-site identifier.
//! The edge index is `location ^ (previous_location >> 1)`, folded into a
//! 64Ki map of saturating 8-bit counters. After an execution the raw counts
//! are bucketed into nine classes and compared against the campaign-wide
//! [`GlobalCoverage`].

pub const MAP_SIZE: usize = 1 << 16;

/// Number of bucket classes, including the "not hit" class 0.
pub const BUCKET_CLASSES: u8 = 9;

/// Compile-time site identifier derived from a label (FNV-1a folded to 16 bits).
pub const fn site(label: &str) -> u16 {
    let bytes = label.as_bytes();
    let mut hash: u32 = 0x811c_9dc5;
    let mut i = 0;
    while i < bytes.len() {
        hash ^= bytes[i] as u32;
        hash = hash.wrapping_mul(0x0100_0193);
        i += 1;
    }
    ((hash >> 16) ^ (hash & 0xffff)) as u16
}

/// Maps a raw hit count onto its bucket class:
/// `0, 1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+` become classes `0..=8`.
#[inline]
pub fn bucketize(raw_count: u32) -> u8 {
    match raw_count {
        0 => 0,
        1 => 1,
        2 => 2,
        3 => 3,
        4..=7 => 4,
        8..=15 => 5,
        16..=31 => 6,
        32..=127 => 7,
        _ => 8,
    }
}

/// One transition between two instrumented sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeProbe {
    pub location_id: u16,
    /// Identifier of the previous site, already shifted right by one.
    pub prev_location: u16,
}

impl EdgeProbe {
    #[inline]
    pub fn index(self) -> usize {
        (self.location_id ^ self.prev_location) as usize
    }
}

/// Run-local raw hit counters.
///
/// Clearing only touches the indices hit since the last reset, so reusing one
/// tracer across many short executions stays cheap.
pub struct EdgeTracer {
    raw: Box<[u8]>,
    touched: Vec<u16>,
    prev: u16,
}

impl Default for EdgeTracer {
    fn default() -> Self {
        Self::new()
    }
}

impl EdgeTracer {
    pub fn new() -> Self {
        Self {
            raw: vec![0u8; MAP_SIZE].into_boxed_slice(),
            touched: Vec::new(),
            prev: 0,
        }
    }

    #[inline]
    pub fn record_edge(&mut self, probe: EdgeProbe) {
        let idx = probe.index();
        let slot = &mut self.raw[idx];
        if *slot == 0 {
            self.touched.push(idx as u16);
        }
        *slot = slot.saturating_add(1);
    }

    #[inline]
    pub fn visit(&mut self, location_id: u16) {
        self.record_edge(EdgeProbe {
            location_id,
            prev_location: self.prev,
        });
        self.prev = location_id >> 1;
    }

    pub fn raw_count(&self, index: usize) -> u8 {
        self.raw[index]
    }

    pub fn reset(&mut self) {
        for &i in &self.touched {
            self.raw[i as usize] = 0;
        }
        self.touched.clear();
        self.prev = 0;
    }

    /// Bucketed view of the current counters.
    pub fn snapshot(&self) -> CoverageMap {
        let mut entries: Vec<(u16, u8)> = self
            .touched
            .iter()
            .map(|&i| (i, bucketize(self.raw[i as usize] as u32)))
            .collect();
        entries.sort_unstable_by_key(|&(i, _)| i);
        CoverageMap { entries }
    }
}

/// Bucket classes of one execution.
///
/// Logically a 64Ki array of classes; stored sparsely as sorted
/// `(index, class)` pairs with every omitted index at class 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverageMap {
    entries: Vec<(u16, u8)>,
}

impl CoverageMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a map from a dense array of raw counts.
    pub fn from_raw(raw: &[u32]) -> Self {
        assert!(raw.len() <= MAP_SIZE);
        let entries = raw
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as u16, bucketize(c)))
            .collect();
        Self { entries }
    }

    pub fn get(&self, index: u16) -> u8 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0)
    }

    pub fn nonzero(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u16, u8)> + '_ {
        self.entries.iter().copied()
    }
}

/// Campaign-wide record of every bucket class seen at every index.
pub struct GlobalCoverage {
    /// Bit `c` set when class `c` has been observed at that index.
    seen: Box<[u16]>,
    covered: usize,
}

impl Default for GlobalCoverage {
    fn default() -> Self {
        Self::new()
    }
}

impl GlobalCoverage {
    pub fn new() -> Self {
        Self {
            seen: vec![0u16; MAP_SIZE].into_boxed_slice(),
            covered: 0,
        }
    }

    /// Absorbs `run` and returns the `(index, class)` pairs that were new.
    pub fn absorb(&mut self, run: &CoverageMap) -> Vec<(u16, u8)> {
        let mut fresh = Vec::new();
        for (idx, class) in run.iter() {
            let slot = &mut self.seen[idx as usize];
            let bit = 1u16 << class;
            if *slot & bit == 0 {
                if *slot == 0 {
                    self.covered += 1;
                }
                *slot |= bit;
                fresh.push((idx, class));
            }
        }
        fresh
    }

    /// True iff `run` holds a class not yet seen at some index; the global
    /// map absorbs everything new either way.
    pub fn has_new_coverage(&mut self, run: &CoverageMap) -> bool {
        !self.absorb(run).is_empty()
    }

    pub fn has_seen(&self, index: u16, class: u8) -> bool {
        class == 0 || self.seen[index as usize] & (1 << class) != 0
    }

    /// Number of indices with at least one non-zero class.
    pub fn coverage_count(&self) -> usize {
        self.covered
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_hit_counts_one() {
        let mut t = EdgeTracer::new();
        let p = EdgeProbe {
            location_id: 0x1234,
            prev_location: 0x0042,
        };
        t.record_edge(p);
        assert_eq!(t.raw_count(p.index()), 1);
        t.record_edge(p);
        assert_eq!(t.raw_count(p.index()), 2);
    }

    #[test]
    fn colliding_probes_share_a_slot() {
        let mut t = EdgeTracer::new();
        let a = EdgeProbe {
            location_id: 0x00f0,
            prev_location: 0x000f,
        };
        let b = EdgeProbe {
            location_id: 0x00ff,
            prev_location: 0x0000,
        };
        assert_eq!(a.index(), b.index());
        t.record_edge(a);
        t.record_edge(b);
        assert_eq!(t.raw_count(a.index()), 2);
    }

    #[test]
    fn visit_shifts_previous_location() {
        let mut t = EdgeTracer::new();
        t.visit(0x0100);
        t.visit(0x0100);
        // first edge: 0x0100 ^ 0, second: 0x0100 ^ 0x0080
        assert_eq!(t.raw_count(0x0100), 1);
        assert_eq!(t.raw_count(0x0180), 1);
    }

    #[test]
    fn counters_saturate() {
        let mut t = EdgeTracer::new();
        let p = EdgeProbe {
            location_id: 7,
            prev_location: 0,
        };
        for _ in 0..1000 {
            t.record_edge(p);
        }
        assert_eq!(t.raw_count(7), u8::MAX);
        assert_eq!(t.snapshot().get(7), 8);
    }

    #[test]
    fn reset_clears_touched_slots() {
        let mut t = EdgeTracer::new();
        t.visit(5);
        t.visit(9);
        t.reset();
        assert_eq!(t.snapshot().nonzero(), 0);
        assert!((0..MAP_SIZE).all(|i| t.raw_count(i) == 0));
    }

    #[test]
    fn bucket_examples() {
        assert_eq!(bucketize(0), 0);
        assert_eq!(bucketize(5), 4);
        assert_eq!(bucketize(200), 8);
    }

    #[test]
    fn new_edge_on_empty_global() {
        let mut g = GlobalCoverage::new();
        let mut raw = vec![0u32; 16];
        raw[3] = 1;
        let run = CoverageMap::from_raw(&raw);
        assert!(g.has_new_coverage(&run));
        assert!(!g.has_new_coverage(&run));
        assert_eq!(g.coverage_count(), 1);
    }

    #[test]
    fn hit_count_escalation_is_new() {
        let mut g = GlobalCoverage::new();
        let mut raw = vec![0u32; 16];
        raw[3] = 1;
        g.absorb(&CoverageMap::from_raw(&raw));
        raw[3] = 5;
        let escalated = CoverageMap::from_raw(&raw);
        assert_eq!(escalated.get(3), 4);
        assert_eq!(g.absorb(&escalated), vec![(3, 4)]);
        // still one covered index
        assert_eq!(g.coverage_count(), 1);
    }

    #[test]
    fn site_ids_are_stable_and_spread() {
        const A: u16 = site("pwcheck:loop");
        assert_eq!(A, site("pwcheck:loop"));
        assert_ne!(site("pwcheck:loop"), site("pwcheck:exit"));
    }

    proptest! {
        #[test]
        fn bucketize_is_monotone(a in 0u32..5000, b in 0u32..5000) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(bucketize(lo) <= bucketize(hi));
            prop_assert!(bucketize(hi) < BUCKET_CLASSES);
        }

        #[test]
        fn absorption_is_a_fixpoint(raw in prop::collection::vec(0u32..300, 1..256)) {
            let run = CoverageMap::from_raw(&raw);
            let mut g = GlobalCoverage::new();
            g.has_new_coverage(&run);
            prop_assert!(!g.has_new_coverage(&run));
            for (i, c) in run.iter() {
                prop_assert!(g.has_seen(i, c));
            }
        }

        #[test]
        fn snapshot_matches_dense_bucketing(sites in prop::collection::vec(any::<u16>(), 0..200)) {
            let mut t = EdgeTracer::new();
            let mut dense = vec![0u32; MAP_SIZE];
            let mut prev = 0u16;
            for &s in &sites {
                t.visit(s);
                let idx = (s ^ prev) as usize;
                dense[idx] = (dense[idx] + 1).min(255);
                prev = s >> 1;
            }
            prop_assert_eq!(t.snapshot(), CoverageMap::from_raw(&dense));
        }
    }
}
