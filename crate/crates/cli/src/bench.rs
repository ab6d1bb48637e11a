//! `bench`: probe counts per operation.

use std::io::Write;

use oblivq::bench::pq_probe_profile;
use oblivq::oram::{run_with, RunOptions};
use oblivq::{Memory, TraceConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::workload::oram_stream;
use crate::{BenchArgs, CmdResult, Outcome, Target};

pub const HEADER: &str = "target,N,ops,total_probes,probes_per_op,peak_cells";

pub fn run(args: &BenchArgs) -> CmdResult {
    if args.min_log < 1 || args.min_log > args.max_log || args.max_log > 30 {
        return Err("need 1 <= --min-log <= --max-log <= 30".into());
    }
    let backend = args.backend.backend();
    let mut out = args.output.open()?;
    writeln!(out, "{HEADER}")?;
    for lg in args.min_log..=args.max_log {
        let capacity = 1usize << lg;
        let (name, ops, total, peak) = match args.target {
            Target::Pq => {
                let profile = pq_probe_profile(capacity, backend)?;
                let (ops, total) = profile.period();
                ("pq", ops, total, profile.peak_cells)
            }
            Target::Oram => {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ lg as u64);
                let ops = oram_stream(&mut rng, capacity, args.ops);
                let mut mem = Memory::new(TraceConfig::COUNT);
                let options = RunOptions {
                    backend,
                    ..RunOptions::default()
                };
                run_with(&mut mem, &ops, capacity, options)?;
                ("oram", args.ops as u64, mem.probes(), mem.peak_allocated())
            }
            Target::Select => return Err("bench supports --target pq or oram".into()),
        };
        let per_op = total as f64 / ops.max(1) as f64;
        writeln!(out, "{name},{capacity},{ops},{total},{per_op:.3},{peak}")?;
    }
    out.flush()?;
    Ok(Outcome::Ok)
}
