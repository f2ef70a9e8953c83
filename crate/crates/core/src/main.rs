use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scfuzz::benchmarks;
use scfuzz::campaign::{self, lookup_driver, CampaignConfig, Clock};
use scfuzz::driver::{Charset, Constraints, DriverSpec, Outcome};
use scfuzz::error::{Error, Result};
use scfuzz::metering::CostDimension;
use scfuzz::oracle::{self, Alphabet, OracleError};
use scfuzz::report;

#[derive(Parser)]
#[command(
    name = "scfuzz",
    version,
    about = "Differential greybox fuzzer for side channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fuzzing campaign.
    Fuzz(FuzzArgs),
    /// Run the driver once on an input file.
    Replay(ReplayArgs),
    /// Compute the true maximum delta on a small domain.
    Oracle(OracleArgs),
    /// List registered drivers.
    ListDrivers,
    /// Summarize one or more campaign directories.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

/// Overrides of a driver's recommended constraints.
#[derive(Args)]
struct ConstraintArgs {
    /// Maximum bytes per segment.
    #[arg(long)]
    segment_cap: Option<usize>,
    /// Map segment bytes into a character set.
    #[arg(long)]
    charset: Option<Charset>,
    /// Reject inputs that do not fill every segment.
    #[arg(long)]
    fixed_length: bool,
}

impl ConstraintArgs {
    fn apply(&self, base: Constraints) -> Option<Constraints> {
        if self.segment_cap.is_none() && self.charset.is_none() && !self.fixed_length {
            return None;
        }
        Some(Constraints {
            segment_cap: self.segment_cap.unwrap_or(base.segment_cap),
            fixed_length: self.fixed_length || base.fixed_length,
            charset: self.charset.unwrap_or(base.charset),
        })
    }
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long)]
    driver: String,
    /// Cost dimension to maximize; defaults to the driver's recommendation.
    #[arg(long)]
    dimension: Option<CostDimension>,
    #[arg(long)]
    seeds: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Campaign length in seconds.
    #[arg(long, default_value_t = 300)]
    timeout: u64,
    /// Maximum mutant length; defaults to three segment caps.
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Deltas below this are labeled below-epsilon.
    #[arg(long)]
    epsilon: Option<u64>,
    /// Stop once the high score reaches this value.
    #[arg(long)]
    stop_at: Option<u64>,
    /// Use a virtual clock advancing this many executions per second.
    #[arg(long)]
    virtual_rate: Option<u64>,
    /// Havoc mutants per queue-entry visit.
    #[arg(long)]
    havoc: Option<usize>,
    #[command(flatten)]
    constraints: ConstraintArgs,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    driver: String,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dimension: Option<CostDimension>,
    #[command(flatten)]
    constraints: ConstraintArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    driver: String,
    /// Segment length in bytes.
    #[arg(long)]
    len: usize,
    #[arg(long, default_value = "binary")]
    alphabet: Alphabet,
    /// Enumerate the driver's cost statistic instead of raw inputs.
    #[arg(long)]
    structured: bool,
    #[arg(long)]
    dimension: Option<CostDimension>,
    /// Maximum number of driver runs for the exhaustive sweep.
    #[arg(long, default_value_t = oracle::DEFAULT_BUDGET)]
    budget: u128,
}

fn driver_with(
    name: &str,
    dimension: Option<CostDimension>,
    constraints: &ConstraintArgs,
) -> Result<DriverSpec> {
    let mut spec = lookup_driver(name)?;
    if let Some(d) = dimension {
        spec = spec.with_dimension(d);
    }
    if let Some(c) = constraints.apply(spec.constraints) {
        spec = spec.with_constraints(c);
    }
    Ok(spec)
}

fn fuzz(args: FuzzArgs) -> Result<()> {
    let spec = driver_with(&args.driver, args.dimension, &args.constraints)?;
    let mut config = CampaignConfig::new(&args.driver, args.seeds, args.out)?;
    config.dimension = spec.dimension;
    config.constraints = Some(spec.constraints);
    config.timeout_seconds = args.timeout;
    config.max_input_len = args.max_len;
    config.rng_seed = args.rng_seed;
    config.report_epsilon = args.epsilon;
    config.stop_at_delta = args.stop_at;
    if let Some(rate) = args.virtual_rate {
        config.clock = Clock::Virtual {
            execs_per_second: rate,
        };
    }
    if let Some(h) = args.havoc {
        config.havoc_iterations = h;
    }
    let report = campaign::run_campaign(&config)?;
    print!("{}", report.render());
    Ok(())
}

fn replay(args: ReplayArgs) -> Result<()> {
    let spec = driver_with(&args.driver, args.dimension, &args.constraints)?;
    let bytes = std::fs::read(&args.input)
        .map_err(|e| Error::config(format!("cannot read input {}: {e}", args.input.display())))?;
    let result = scfuzz::run_driver(&spec, &bytes);
    if let Outcome::ParseReject(msg) = &result.outcome {
        return Err(Error::config(format!("parse reject: {msg}")));
    }
    if let Some(d) = &result.decoded {
        println!("pub={}", campaign::hex(&d.public));
        println!("sec_1={}", campaign::hex(&d.secret1));
        println!("sec_2={}", campaign::hex(&d.secret2));
    }
    println!("cost_1: {}", result.cost1);
    println!("cost_2: {}", result.cost2);
    println!("delta: {}", result.delta);
    println!("score: {} ({})", result.score(), result.dimension);
    match &result.outcome {
        Outcome::Ok => println!("outcome: ok"),
        Outcome::OutputMismatch => println!("outcome: outputs differ"),
        Outcome::HarnessError(msg) => println!("outcome: harness error: {msg}"),
        Outcome::ParseReject(_) => unreachable!(),
    }
    println!(
        "{}",
        serde_json::to_string(&result).map_err(|e| Error::Internal(e.to_string()))?
    );
    Ok(())
}

fn run_oracle(args: OracleArgs) -> Result<()> {
    let mut spec = lookup_driver(&args.driver)?;
    if let Some(d) = args.dimension {
        spec = spec.with_dimension(d);
    }
    let result = if args.structured {
        oracle::structured_max_delta(&spec, args.len, args.alphabet)
    } else {
        oracle::exhaustive_max_delta(&spec, args.len, args.alphabet, args.budget)
    };
    let result = result.map_err(|e| match e {
        OracleError::WitnessMismatch { .. } => Error::Internal(e.to_string()),
        other => Error::config(other.to_string()),
    })?;
    print!("{}", result.render_text());
    println!("{}", result.to_json_line());
    Ok(())
}

fn list_drivers() {
    println!(
        "{:<24} {:<8} {:<16} {:<10} constraints",
        "driver", "variant", "benchmark", "dimension"
    );
    for b in benchmarks::registry() {
        for v in b.variants() {
            let c = b.constraints;
            println!(
                "{:<24} {:<8} {:<16} {:<10} segment_cap={} charset={}{}",
                v.driver_name,
                format!("{:?}", v.kind).to_lowercase(),
                b.name,
                b.dimension.to_string(),
                c.segment_cap,
                c.charset,
                if c.fixed_length { " fixed" } else { "" }
            );
        }
        for line in b.cost_model_doc {
            println!("    cost: {line}");
        }
        if let Some(s) = b.statistic {
            println!("    statistic: {}", s.name());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fuzz(a) => fuzz(a),
        Command::Replay(a) => replay(a),
        Command::Oracle(a) => run_oracle(a),
        Command::ListDrivers => {
            list_drivers();
            Ok(())
        }
        Command::Report { dirs } => report::report(&dirs).map(|s| print!("{}", s.render())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
