//! Campaign orchestration: seed intake, mutation scheduling, candidate
//! evaluation, high-score tracking, stats and report output.

use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::benchmarks;
use crate::coverage::GlobalCoverage;
use crate::driver::{Constraints, Decoded, Driver, DriverSpec, Outcome};
use crate::error::{Error, Result};
use crate::metering::CostDimension;
use crate::mutation::{deterministic_stage, havoc, splice, MutationBudget};
use crate::queue::{load_seeds, HighScore, Queue, Witness};

/// Splice attempts per queue-entry visit.
const SPLICE_ROUNDS: usize = 4;
/// Havoc mutants derived from each spliced input.
const SPLICE_HAVOC: usize = 32;
/// Domains at most this large are tracked for exhaustion.
const EXHAUSTION_LIMIT: u128 = 1 << 16;
/// Harness errors kept verbatim in the report.
const MAX_HARNESS_RECORDS: usize = 100;

pub const NOT_PROOF_NOTE: &str =
    "Note: fuzzing explores a finite sample of inputs; the absence of findings is not proof of safety.";

/// Time source for timeouts and stats timestamps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clock {
    Wall,
    /// Time advances by `1 / execs_per_second` per driver run, which makes the
    /// whole campaign a pure function of its configuration.
    Virtual {
        execs_per_second: u64,
    },
}

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub driver_name: String,
    pub dimension: CostDimension,
    pub timeout_seconds: u64,
    /// Defaults to three times the segment cap.
    pub max_input_len: Option<usize>,
    pub rng_seed: u64,
    pub seed_dir: PathBuf,
    pub out_dir: PathBuf,
    pub report_epsilon: Option<u64>,
    /// Replaces the driver's recommended constraints.
    pub constraints: Option<Constraints>,
    pub clock: Clock,
    /// Stop as soon as the high score reaches this value.
    pub stop_at_delta: Option<u64>,
    pub havoc_iterations: usize,
}

impl CampaignConfig {
    /// A configuration using the driver's recommended dimension and
    /// constraints and a wall clock.
    pub fn new(
        driver_name: &str,
        seed_dir: impl Into<PathBuf>,
        out_dir: impl Into<PathBuf>,
    ) -> Result<Self> {
        let spec = lookup_driver(driver_name)?;
        Ok(Self {
            driver_name: driver_name.to_string(),
            dimension: spec.dimension,
            timeout_seconds: 300,
            max_input_len: None,
            rng_seed: 0,
            seed_dir: seed_dir.into(),
            out_dir: out_dir.into(),
            report_epsilon: None,
            constraints: None,
            clock: Clock::Wall,
            stop_at_delta: None,
            havoc_iterations: MutationBudget::new(1, 0).havoc_iterations,
        })
    }
}

pub fn lookup_driver(name: &str) -> Result<DriverSpec> {
    benchmarks::driver(name).ok_or_else(|| {
        Error::config(format!(
            "unknown driver {name:?}; run list-drivers to see the registered names"
        ))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoDifferenceFound,
    BelowEpsilon,
    LeakIndicated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::NoDifferenceFound => "no-difference-found",
            Verdict::BelowEpsilon => "below-epsilon",
            Verdict::LeakIndicated => "leak-indicated",
        })
    }
}

/// Labels a campaign result. Without `epsilon` any positive delta indicates a
/// leak.
pub fn verdict(max_delta: u64, epsilon: Option<u64>) -> Verdict {
    match (max_delta, epsilon) {
        (0, _) => Verdict::NoDifferenceFound,
        (d, Some(eps)) if d < eps => Verdict::BelowEpsilon,
        _ => Verdict::LeakIndicated,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StatsRow {
    pub seconds: f64,
    pub executions: u64,
    pub max_delta: u64,
    pub coverage_count: usize,
    pub queue_size: usize,
}

pub const STATS_HEADER: &str = "seconds,executions,max_delta,coverage_count,queue_size";

impl StatsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{:.3},{},{},{},{}",
            self.seconds, self.executions, self.max_delta, self.coverage_count, self.queue_size
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Timeout,
    TargetDeltaReached,
    DomainExhausted,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Timeout => "timeout",
            StopReason::TargetDeltaReached => "target delta reached",
            StopReason::DomainExhausted => "input domain exhausted",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HarnessErrorRecord {
    pub bytes: Vec<u8>,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct CampaignReport {
    pub driver_name: String,
    pub dimension: CostDimension,
    pub max_delta: u64,
    pub witness: Option<Witness>,
    pub time_to_first_positive: Option<f64>,
    pub coverage_count: usize,
    pub executions: u64,
    pub queue_size: usize,
    pub elapsed_seconds: f64,
    pub stop_reason: StopReason,
    pub epsilon: Option<u64>,
    pub verdict: Verdict,
    pub harness_error_count: u64,
    pub harness_errors: Vec<HarnessErrorRecord>,
    pub stats: Vec<StatsRow>,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The `pub` / `sec_1` / `sec_2` presentation of a witness.
pub fn witness_text(w: &Witness) -> String {
    let r = &w.result;
    format!(
        "pub={}\nsec_1={}\nsec_2={}\ndelta={} ({})\ncost_1: {}\ncost_2: {}\n",
        hex(&w.decoded.public),
        hex(&w.decoded.secret1),
        hex(&w.decoded.secret2),
        r.score(),
        r.dimension,
        r.cost1,
        r.cost2,
    )
}

impl CampaignReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut line = |l: String| {
            s.push_str(&l);
            s.push('\n');
        };
        line(format!("driver: {}", self.driver_name));
        line(format!("dimension: {}", self.dimension));
        line(format!("stopped: {}", self.stop_reason));
        line(format!("elapsed_seconds: {:.3}", self.elapsed_seconds));
        line(format!("executions: {}", self.executions));
        line(format!("max_delta: {}", self.max_delta));
        line(format!(
            "time_to_first_positive_delta: {}",
            self.time_to_first_positive
                .map_or_else(|| "-".to_string(), |t| format!("{t:.3}"))
        ));
        line(format!("coverage_count: {}", self.coverage_count));
        line(format!("queue_size: {}", self.queue_size));
        line(format!(
            "epsilon: {}",
            self.epsilon
                .map_or_else(|| "-".to_string(), |e| e.to_string())
        ));
        line(format!("verdict: {}", self.verdict));
        line(format!("harness_errors: {}", self.harness_error_count));
        if let Some(w) = &self.witness {
            line("witness:".to_string());
            for l in witness_text(w).lines() {
                line(format!("  {l}"));
            }
        }
        line(NOT_PROOF_NOTE.to_string());
        s
    }
}

struct Campaign<'a> {
    config: &'a CampaignConfig,
    driver: Driver,
    budget: MutationBudget,
    rng: ChaCha8Rng,
    coverage: GlobalCoverage,
    queue: Queue,
    high: HighScore,
    first_positive: Option<f64>,
    executions: u64,
    started: Instant,
    next_whole_second: u64,
    stats: Vec<StatsRow>,
    stats_out: BufWriter<File>,
    queue_dir: PathBuf,
    domain: Option<(u128, HashSet<Decoded>)>,
    harness_error_count: u64,
    harness_errors: Vec<HarnessErrorRecord>,
}

impl Campaign<'_> {
    fn now(&self) -> f64 {
        match self.config.clock {
            Clock::Wall => self.started.elapsed().as_secs_f64(),
            Clock::Virtual { execs_per_second } => self.executions as f64 / execs_per_second as f64,
        }
    }

    fn record_row(&mut self, seconds: f64) -> Result<()> {
        let row = StatsRow {
            seconds,
            executions: self.executions,
            max_delta: self.high.value,
            coverage_count: self.coverage.coverage_count(),
            queue_size: self.queue.len(),
        };
        let path = self.config.out_dir.join("stats.csv");
        writeln!(self.stats_out, "{}", row.to_csv())
            .and_then(|_| self.stats_out.flush())
            .map_err(|e| Error::io(&path, e))?;
        self.stats.push(row);
        Ok(())
    }

    fn persist(&self, id: usize) -> Result<()> {
        Queue::persist(&self.queue_dir, self.queue.get(id)).map(|_| ())
    }

    /// Runs one candidate; returns a stop reason when the campaign is over.
    fn evaluate(&mut self, bytes: &[u8], parent: Option<usize>) -> Result<Option<StopReason>> {
        let (result, maps) = self.driver.run_with_coverage(bytes);
        self.executions += 1;
        let mut fresh = self.coverage.absorb(&maps[0]);
        fresh.extend(self.coverage.absorb(&maps[1]));
        let now = self.now();

        if let Outcome::HarnessError(msg) = &result.outcome {
            self.harness_error_count += 1;
            if self.harness_errors.len() < MAX_HARNESS_RECORDS {
                self.harness_errors.push(HarnessErrorRecord {
                    bytes: bytes.to_vec(),
                    message: msg.clone(),
                });
            }
        }

        let is_seed = parent.is_none();
        let outcome =
            self.queue
                .consider(bytes, &result, fresh.clone(), &mut self.high, now, parent);
        let enqueued = match (outcome.enqueued, is_seed) {
            (Some(id), _) => Some(id),
            // seeds join the queue regardless, to be mutated from
            (None, true) => self.queue.push(bytes, &result, fresh, now, None),
            (None, false) => None,
        };
        if let Some(id) = enqueued {
            self.persist(id)?;
        }
        if outcome.new_high_score {
            if self.high.value > 0 && self.first_positive.is_none() {
                self.first_positive = Some(now);
            }
            self.record_row(now)?;
        }
        if now >= self.next_whole_second as f64 {
            self.record_row(now)?;
            self.next_whole_second = now.floor() as u64 + 1;
        }

        if let Some(target) = self.config.stop_at_delta {
            if self.high.value >= target {
                return Ok(Some(StopReason::TargetDeltaReached));
            }
        }
        if let (Some((size, seen)), Some(d)) = (self.domain.as_mut(), result.decoded) {
            seen.insert(d);
            if seen.len() as u128 >= *size {
                return Ok(Some(StopReason::DomainExhausted));
            }
        }
        if now >= self.config.timeout_seconds as f64 {
            return Ok(Some(StopReason::Timeout));
        }
        Ok(None)
    }

    fn fuzz_entry(&mut self, id: usize) -> Result<Option<StopReason>> {
        let input = self.queue.get(id).bytes.clone();
        if !self.queue.get(id).deterministic_done {
            self.queue.get_mut(id).deterministic_done = true;
            for mutant in deterministic_stage(&input) {
                if let Some(stop) = self.evaluate(&mutant, Some(id))? {
                    return Ok(Some(stop));
                }
            }
        }
        for _ in 0..self.budget.havoc_iterations {
            let mutant = havoc(&input, &self.budget, &mut self.rng);
            if let Some(stop) = self.evaluate(&mutant, Some(id))? {
                return Ok(Some(stop));
            }
        }
        if self.queue.len() > 1 {
            for _ in 0..SPLICE_ROUNDS {
                let mut other = self.rng.gen_range(0..self.queue.len() - 1);
                if other >= id {
                    other += 1;
                }
                let partner = self.queue.get(other).bytes.clone();
                let Some(spliced) =
                    splice(&input, &partner, self.budget.max_input_len, &mut self.rng)
                else {
                    continue;
                };
                for _ in 0..SPLICE_HAVOC {
                    let mutant = havoc(&spliced, &self.budget, &mut self.rng);
                    if let Some(stop) = self.evaluate(&mutant, Some(id))? {
                        return Ok(Some(stop));
                    }
                }
            }
        }
        Ok(None)
    }

    fn run(&mut self, seeds: Vec<Vec<u8>>) -> Result<StopReason> {
        let mut stop = None;
        for seed in seeds {
            if let Some(s) = self.evaluate(&seed, None)? {
                stop = Some(s);
                break;
            }
        }
        let now = self.now();
        self.record_row(now)?;
        if self.queue.is_empty() {
            return Err(Error::config("no usable seeds after deduplication"));
        }
        if let Some(s) = stop {
            return Ok(s);
        }
        loop {
            let id = self.queue.next_entry().expect("queue is non-empty");
            if let Some(s) = self.fuzz_entry(id)? {
                return Ok(s);
            }
        }
    }
}

fn prepare_out_dir(out: &Path) -> Result<PathBuf> {
    let queue_dir = out.join("queue");
    fs::create_dir_all(&queue_dir).map_err(|e| Error::io(&queue_dir, e))?;
    // entries left over from an earlier campaign would mix two lineages
    let stale = fs::read_dir(&queue_dir).map_err(|e| Error::io(&queue_dir, e))?;
    for entry in stale.flatten() {
        if entry.file_name().to_string_lossy().starts_with("id:") {
            fs::remove_file(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
        }
    }
    Ok(queue_dir)
}

fn write_file(path: PathBuf, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Runs a full campaign and writes its outputs under `config.out_dir`.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport> {
    if config.timeout_seconds < 1 {
        return Err(Error::config("timeout must be at least 1 second"));
    }
    if let Clock::Virtual {
        execs_per_second: 0,
    } = config.clock
    {
        return Err(Error::config("virtual clock rate must be positive"));
    }
    let mut spec = lookup_driver(&config.driver_name)?.with_dimension(config.dimension);
    if let Some(c) = config.constraints {
        spec = spec.with_constraints(c);
    }
    if spec.constraints.segment_cap == 0 {
        return Err(Error::config("segment cap must be at least 1"));
    }
    let max_len = config
        .max_input_len
        .unwrap_or_else(|| spec.constraints.max_data());
    if max_len < 3 {
        return Err(Error::config("max input length must be at least 3"));
    }
    let seeds: Vec<Vec<u8>> = load_seeds(&config.seed_dir, max_len)?
        .into_iter()
        .map(|s| s.bytes)
        .collect();

    let queue_dir = prepare_out_dir(&config.out_dir)?;
    let stats_path = config.out_dir.join("stats.csv");
    let stats_file = File::create(&stats_path).map_err(|e| Error::io(&stats_path, e))?;
    let mut stats_out = BufWriter::new(stats_file);
    writeln!(stats_out, "{STATS_HEADER}").map_err(|e| Error::io(&stats_path, e))?;

    let domain = spec
        .constraints
        .domain_size()
        .filter(|&n| n <= EXHAUSTION_LIMIT)
        .map(|n| (n, HashSet::new()));
    let mut budget = MutationBudget::new(max_len, config.rng_seed);
    budget.havoc_iterations = config.havoc_iterations;

    let mut campaign = Campaign {
        config,
        driver: Driver::new(spec),
        budget,
        rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
        coverage: GlobalCoverage::new(),
        queue: Queue::new(),
        high: HighScore::default(),
        first_positive: None,
        executions: 0,
        started: Instant::now(),
        next_whole_second: 1,
        stats: Vec::new(),
        stats_out,
        queue_dir,
        domain,
        harness_error_count: 0,
        harness_errors: Vec::new(),
    };
    let stop_reason = campaign.run(seeds)?;
    let elapsed = campaign.now();
    campaign.record_row(elapsed)?;

    let report = CampaignReport {
        driver_name: config.driver_name.clone(),
        dimension: config.dimension,
        max_delta: campaign.high.value,
        witness: campaign.high.witness.clone(),
        time_to_first_positive: campaign.first_positive,
        coverage_count: campaign.coverage.coverage_count(),
        executions: campaign.executions,
        queue_size: campaign.queue.len(),
        elapsed_seconds: elapsed,
        stop_reason,
        epsilon: config.report_epsilon,
        verdict: verdict(campaign.high.value, config.report_epsilon),
        harness_error_count: campaign.harness_error_count,
        harness_errors: campaign.harness_errors.clone(),
        stats: campaign.stats.clone(),
    };

    let out = &config.out_dir;
    if let Some(w) = &report.witness {
        write_file(out.join("witness.bin"), &w.bytes)?;
        write_file(out.join("witness.txt"), witness_text(w))?;
    }
    if !report.harness_errors.is_empty() {
        let body: String = report
            .harness_errors
            .iter()
            .map(|h| format!("{}\t{}\n", hex(&h.bytes), h.message))
            .collect();
        write_file(out.join("harness_errors.txt"), body)?;
    }
    write_file(out.join("report.txt"), report.render())?;
    Ok(report)
}
