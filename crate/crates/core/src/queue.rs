//! The fuzzing queue: interesting inputs, the campaign high score, and their
//! on-disk form.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::driver::{Decoded, DiffResult, Outcome};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QueueEntry {
    pub id: usize,
    pub bytes: Vec<u8>,
    /// Largest delta this entry produced, in the active dimension.
    pub best_delta: u64,
    /// `(index, class)` pairs that were new when the entry was found.
    pub coverage_signature: Vec<(u16, u8)>,
    /// Seconds since campaign start.
    pub discovered_at: f64,
    pub parent_id: Option<usize>,
    /// Whether the deterministic stage has already run on this entry.
    pub deterministic_done: bool,
}

impl QueueEntry {
    /// `id:NNNN,src:PARENT,delta:D`, with `seed` as the parent of seeds.
    pub fn file_name(&self) -> String {
        let src = match self.parent_id {
            Some(p) => format!("{p:04}"),
            None => "seed".to_string(),
        };
        format!("id:{:04},src:{src},delta:{}", self.id, self.best_delta)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub bytes: Vec<u8>,
    pub decoded: Decoded,
    pub result: DiffResult,
}

/// Campaign-wide maximum delta and the input achieving it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HighScore {
    pub value: u64,
    pub witness: Option<Witness>,
    /// Seconds since campaign start when `value` was reached.
    pub achieved_at: f64,
}

impl HighScore {
    /// Raises the score when `result` beats it strictly. The first completed
    /// run also becomes the witness, so a witness exists even at zero.
    fn offer(&mut self, bytes: &[u8], result: &DiffResult, now: f64) -> bool {
        if !result.outcome.completed() {
            return false;
        }
        let Some(decoded) = result.decoded.clone() else {
            return false;
        };
        let delta = result.score();
        let improves = delta > self.value;
        if improves || self.witness.is_none() {
            self.value = self.value.max(delta);
            self.achieved_at = now;
            self.witness = Some(Witness {
                bytes: bytes.to_vec(),
                decoded,
                result: result.clone(),
            });
        }
        improves
    }
}

/// What [`Queue::consider`] did with a candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Consideration {
    /// Id of the new queue entry, if the candidate was enqueued.
    pub enqueued: Option<usize>,
    pub new_high_score: bool,
}

/// Round-robin queue of interesting inputs, deduplicated by content.
#[derive(Debug, Default)]
pub struct Queue {
    entries: Vec<QueueEntry>,
    contents: HashSet<Vec<u8>>,
    cursor: usize,
    cycle_end: usize,
    cycles: u64,
}

impl Queue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> &QueueEntry {
        &self.entries[id]
    }

    pub fn get_mut(&mut self, id: usize) -> &mut QueueEntry {
        &mut self.entries[id]
    }

    pub fn contains(&self, bytes: &[u8]) -> bool {
        self.contents.contains(bytes)
    }

    /// Completed passes over the queue.
    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    /// Applies the enqueue rule: keep the candidate when it reached new
    /// coverage or beat the high score. Ties with the high score are
    /// discarded, and so are byte-identical duplicates. Parse rejects never
    /// qualify. A harness error may qualify through coverage only.
    pub fn consider(
        &mut self,
        bytes: &[u8],
        result: &DiffResult,
        new_coverage: Vec<(u16, u8)>,
        high: &mut HighScore,
        now: f64,
        parent_id: Option<usize>,
    ) -> Consideration {
        let new_high_score = high.offer(bytes, result, now);
        let qualifies = match result.outcome {
            Outcome::ParseReject(_) => false,
            _ => new_high_score || !new_coverage.is_empty(),
        };
        let enqueued = if qualifies {
            self.push(bytes, result, new_coverage, now, parent_id)
        } else {
            None
        };
        Consideration {
            enqueued,
            new_high_score,
        }
    }

    /// Adds an entry unconditionally unless its bytes are already queued.
    pub fn push(
        &mut self,
        bytes: &[u8],
        result: &DiffResult,
        coverage_signature: Vec<(u16, u8)>,
        now: f64,
        parent_id: Option<usize>,
    ) -> Option<usize> {
        if bytes.is_empty() || !self.contents.insert(bytes.to_vec()) {
            return None;
        }
        let id = self.entries.len();
        let best_delta = if result.outcome.completed() {
            result.score()
        } else {
            0
        };
        self.entries.push(QueueEntry {
            id,
            bytes: bytes.to_vec(),
            best_delta,
            coverage_signature,
            discovered_at: now,
            parent_id,
            deterministic_done: false,
        });
        Some(id)
    }

    /// Next entry id in round-robin order. Entries added during a pass are
    /// first visited in the following pass.
    pub fn next_entry(&mut self) -> Option<usize> {
        if self.entries.is_empty() {
            return None;
        }
        if self.cursor >= self.cycle_end {
            if self.cycle_end > 0 {
                self.cycles += 1;
            }
            self.cursor = 0;
            self.cycle_end = self.entries.len();
        }
        let id = self.cursor;
        self.cursor += 1;
        Some(id)
    }

    /// Writes the entry's bytes under `dir` and returns the path.
    pub fn persist(dir: &Path, entry: &QueueEntry) -> Result<PathBuf> {
        let path = dir.join(entry.file_name());
        fs::write(&path, &entry.bytes).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// A seed file read from disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seed {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

/// Reads every regular file in `dir`, sorted by name, truncating each to
/// `max_len` bytes. An empty directory, an unreadable file or an empty file is
/// a configuration error.
pub fn load_seeds(dir: &Path, max_len: usize) -> Result<Vec<Seed>> {
    let listing = fs::read_dir(dir)
        .map_err(|e| Error::config(format!("cannot read seed directory {}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for entry in listing {
        let entry = entry.map_err(|e| {
            Error::config(format!("cannot read seed directory {}: {e}", dir.display()))
        })?;
        let path = entry.path();
        if !path.is_dir() {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::config(format!(
            "seed directory {} contains no files",
            dir.display()
        )));
    }
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let mut bytes = fs::read(&path).map_err(|e| {
                Error::config(format!("cannot read seed file {}: {e}", path.display()))
            })?;
            if bytes.is_empty() {
                return Err(Error::config(format!(
                    "seed file {} is empty",
                    path.display()
                )));
            }
            bytes.truncate(max_len);
            Ok(Seed { path, bytes })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metering::{CostDimension, CostReading};

    fn result(delta: u64) -> DiffResult {
        DiffResult {
            delta: CostReading {
                ops: delta,
                ..Default::default()
            },
            cost1: CostReading::default(),
            cost2: CostReading::default(),
            decoded: Some(Decoded::default()),
            outcome: Outcome::Ok,
            dimension: CostDimension::Ops,
        }
    }

    fn high(value: u64) -> HighScore {
        HighScore {
            value,
            witness: Some(Witness {
                bytes: vec![0],
                decoded: Decoded::default(),
                result: result(value),
            }),
            achieved_at: 0.0,
        }
    }

    #[test]
    fn zero_delta_without_coverage_is_discarded() {
        let mut q = Queue::new();
        let mut h = high(0);
        let c = q.consider(b"abc", &result(0), vec![], &mut h, 1.0, None);
        assert_eq!(c.enqueued, None);
        assert!(!c.new_high_score);
    }

    #[test]
    fn higher_delta_is_enqueued_and_raises_score() {
        let mut q = Queue::new();
        let mut h = high(3);
        let c = q.consider(b"abc", &result(5), vec![], &mut h, 2.0, Some(0));
        assert_eq!(c.enqueued, Some(0));
        assert!(c.new_high_score);
        assert_eq!(h.value, 5);
        assert_eq!(h.achieved_at, 2.0);
        assert_eq!(h.witness.unwrap().bytes, b"abc");
    }

    #[test]
    fn new_coverage_alone_is_enough() {
        let mut q = Queue::new();
        let mut h = high(5);
        let c = q.consider(b"abc", &result(2), vec![(7, 1)], &mut h, 1.0, None);
        assert_eq!(c.enqueued, Some(0));
        assert!(!c.new_high_score);
        assert_eq!(h.value, 5);
    }

    #[test]
    fn ties_are_discarded() {
        let mut q = Queue::new();
        let mut h = high(5);
        let c = q.consider(b"abc", &result(5), vec![], &mut h, 1.0, None);
        assert_eq!(c.enqueued, None);
        assert_eq!(h.witness.unwrap().bytes, vec![0]);
    }

    #[test]
    fn duplicates_are_not_queued_twice() {
        let mut q = Queue::new();
        let mut h = HighScore::default();
        q.consider(b"abc", &result(1), vec![(1, 1)], &mut h, 1.0, None);
        let c = q.consider(b"abc", &result(2), vec![(2, 1)], &mut h, 1.0, None);
        assert_eq!(c.enqueued, None);
        assert!(c.new_high_score);
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn first_completed_run_becomes_witness() {
        let mut h = HighScore::default();
        let mut q = Queue::new();
        q.consider(b"xyz", &result(0), vec![], &mut h, 0.5, None);
        assert_eq!(h.value, 0);
        assert_eq!(h.witness.as_ref().unwrap().bytes, b"xyz");
    }

    #[test]
    fn harness_errors_do_not_score() {
        let mut h = HighScore::default();
        let mut q = Queue::new();
        let mut r = result(9);
        r.outcome = Outcome::HarnessError("boom".into());
        let c = q.consider(b"xyz", &r, vec![(1, 1)], &mut h, 0.5, None);
        assert_eq!(c.enqueued, Some(0));
        assert_eq!(h.value, 0);
        assert!(h.witness.is_none());
        assert_eq!(q.get(0).best_delta, 0);
    }

    #[test]
    fn round_robin_with_mid_cycle_additions() {
        let mut q = Queue::new();
        let mut h = HighScore::default();
        q.push(b"A", &result(0), vec![], 0.0, None);
        assert_eq!(
            (0..3).map(|_| q.next_entry().unwrap()).collect::<Vec<_>>(),
            vec![0, 0, 0]
        );
        q.push(b"B", &result(0), vec![], 0.0, None);
        // the current pass over [A] has ended, so B joins the next one
        assert_eq!(
            (0..4).map(|_| q.next_entry().unwrap()).collect::<Vec<_>>(),
            vec![0, 1, 0, 1]
        );
        let first = q.next_entry().unwrap();
        assert_eq!(first, 0);
        q.consider(b"C", &result(1), vec![], &mut h, 0.0, Some(0));
        assert_eq!(q.next_entry(), Some(1));
        assert_eq!(q.next_entry(), Some(0));
        assert_eq!(q.next_entry(), Some(1));
        assert_eq!(q.next_entry(), Some(2));
    }

    #[test]
    fn file_names_carry_lineage() {
        let mut q = Queue::new();
        q.push(b"A", &result(0), vec![], 0.0, None);
        q.push(b"B", &result(12), vec![], 0.0, Some(0));
        assert_eq!(q.get(0).file_name(), "id:0000,src:seed,delta:0");
        assert_eq!(q.get(1).file_name(), "id:0001,src:0000,delta:12");
    }

    #[test]
    fn seeds_load_sorted_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b"), [2u8; 10]).unwrap();
        fs::write(dir.path().join("a"), [1u8; 3]).unwrap();
        let seeds = load_seeds(dir.path(), 4).unwrap();
        assert_eq!(seeds.len(), 2);
        assert_eq!(seeds[0].bytes, vec![1; 3]);
        assert_eq!(seeds[1].bytes, vec![2; 4]);
    }

    #[test]
    fn seed_errors_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_seeds(dir.path(), 8).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        fs::write(dir.path().join("empty"), []).unwrap();
        let err = load_seeds(dir.path(), 8).unwrap_err();
        assert!(err.to_string().contains("empty"), "{err}");
        assert!(load_seeds(&dir.path().join("missing"), 8).is_err());
    }
}
