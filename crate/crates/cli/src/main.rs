//! Command-line front end: trace verification, fuzzing, probe benchmarks and
//! I/O simulation. All tabular output is CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oblivq::external::Policy;
use oblivq::PartitionBackend;

mod bench;
mod fuzz;
mod iosim;
mod oram;
mod verify;
mod workload;

#[derive(Parser)]
#[command(
    name = "oblivq",
    version,
    about = "Oblivious priority queue and offline ORAM toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay random pairs of equal-length workloads and compare their traces.
    VerifyTrace(VerifyArgs),
    /// Check the structures against reference implementations.
    Fuzz(FuzzArgs),
    /// Count probes per operation over a capacity grid.
    Bench(BenchArgs),
    /// Simulate block transfers of the external-memory experiments.
    Iosim(IosimArgs),
    /// Run an offline ORAM over an operation file.
    Oram(OramArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Pq,
    Oram,
    Select,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    /// Sorting-network partition.
    Network,
    /// Cache-aware partition with 16-word blocks.
    Aware,
    /// Cache-agnostic partition with epsilon = 1.
    Agnostic,
    /// Data-dependent partition; not oblivious.
    Naive,
}

impl BackendArg {
    pub fn backend(self) -> PartitionBackend {
        match self {
            BackendArg::Network => PartitionBackend::SortNetwork,
            BackendArg::Aware => PartitionBackend::CacheAware { block_words: 16 },
            BackendArg::Agnostic => PartitionBackend::CacheAgnostic { epsilon: 1.0 },
            BackendArg::Naive => PartitionBackend::Naive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Every operation is an operation-hiding access.
    Hiding,
    /// Plain insert, delete-min and min calls.
    Plain,
}

#[derive(Args)]
pub struct Output {
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    fn open(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "pq")]
    target: Target,
    #[arg(long, default_value_t = 64)]
    capacity: usize,
    #[arg(long, default_value_t = 1000)]
    ops: usize,
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "network")]
    backend: BackendArg,
    #[arg(long, value_enum, default_value = "hiding")]
    mode: Mode,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
pub struct FuzzArgs {
    #[arg(long, value_enum)]
    target: Target,
    #[arg(long, default_value_t = 64)]
    capacity: usize,
    #[arg(long, default_value_t = 10_000)]
    ops: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "network")]
    backend: BackendArg,
    #[arg(long, value_enum, default_value = "hiding")]
    mode: Mode,
    /// Lower one next-access annotation by one before replaying (ORAM only).
    #[arg(long)]
    corrupt_annotation: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "pq")]
    target: Target,
    #[arg(long, default_value_t = 4)]
    min_log: u32,
    #[arg(long, default_value_t = 12)]
    max_log: u32,
    /// Operations per ORAM run; queue figures cover a full rebuild period.
    #[arg(long, default_value_t = 4096)]
    ops: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "network")]
    backend: BackendArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Aware,
    Agnostic,
    Pq,
}

#[derive(Args)]
pub struct IosimArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    #[arg(long, default_value_t = 10)]
    min_log: u32,
    #[arg(long, default_value_t = 14)]
    max_log: u32,
    /// Internal memory sizes M in words.
    #[arg(long, value_delimiter = ',', default_value = "1024")]
    memory: Vec<usize>,
    /// Block sizes B in words.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    block: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "lru,belady")]
    policy: Vec<Policy>,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
pub struct OramArgs {
    /// Operation CSV `op,index,value`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    capacity: usize,
    /// Value of cells read before any write.
    #[arg(long, default_value_t = 0)]
    default: u64,
    #[arg(long, value_enum, default_value = "network")]
    backend: BackendArg,
    #[command(flatten)]
    output: Output,
}

/// How a subcommand ended.
pub enum Outcome {
    Ok,
    Failed(String),
}

pub type CmdResult = Result<Outcome, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::VerifyTrace(args) => verify::run(args),
        Command::Fuzz(args) => fuzz::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Iosim(args) => iosim::run(args),
        Command::Oram(args) => oram::run(args),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(report)) => {
            eprintln!("{report}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
