//! `verify-trace`: equal-length workloads must produce equal probe traces.

use std::io::Write;

use oblivq::oram::{run_with, Operation, RunOptions};
use oblivq::{AccessKind, Memory, ObliviousPq, PartitionBackend, ProbeTrace, TraceConfig, Word};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::workload::{oram_stream, pq_sequence};
use crate::{CmdResult, Mode, Outcome, Target, VerifyArgs};

enum Workload {
    Pq(Vec<(AccessKind, Word, Word)>),
    Oram(Vec<Operation>),
}

pub fn run(args: &VerifyArgs) -> CmdResult {
    if args.target == Target::Select {
        return Err("verify-trace supports --target pq or oram".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let backend = args.backend.backend();
    let mut out = args.output.open()?;
    writeln!(out, "pair,digest_a,digest_b,equal")?;
    let mut first_mismatch = None;
    for pair in 0..args.pairs {
        let mut generate = || match args.target {
            Target::Pq => Workload::Pq(pq_sequence(&mut rng, args.capacity, args.ops)),
            _ => Workload::Oram(oram_stream(&mut rng, args.capacity, args.ops)),
        };
        let a = generate();
        let mut b = generate();
        // Plain calls reveal the operation type, so only values may differ.
        if let (Mode::Plain, Workload::Pq(sa), Workload::Pq(sb)) = (args.mode, &a, &mut b) {
            for (x, y) in sa.iter().zip(sb.iter_mut()) {
                y.0 = x.0;
            }
        }
        let ta = replay(&a, args, backend, TraceConfig::DIGEST)?;
        let tb = replay(&b, args, backend, TraceConfig::DIGEST)?;
        let equal = ta == tb;
        writeln!(out, "{pair},{},{},{equal}", hex(&ta), hex(&tb))?;
        if !equal && first_mismatch.is_none() {
            first_mismatch = Some((pair, a, b));
        }
    }
    out.flush()?;
    let Some((pair, a, b)) = first_mismatch else {
        return Ok(Outcome::Ok);
    };
    let ta = replay(&a, args, backend, TraceConfig::FULL)?;
    let tb = replay(&b, args, backend, TraceConfig::FULL)?;
    let report = match ta.first_divergence(&tb) {
        Some((index, x, y)) => format!(
            "traces differ at pair {pair}: first divergence at event {index}: {} vs {}",
            describe(x),
            describe(y)
        ),
        None => format!("traces differ at pair {pair}"),
    };
    Ok(Outcome::Failed(report))
}

fn hex(trace: &ProbeTrace) -> String {
    trace.digest().map_or_else(String::new, |d| d.to_hex())
}

fn describe(event: Option<oblivq::ProbeEvent>) -> String {
    match event {
        Some(e) => format!("{:?} @ {}", e.op, e.address),
        None => "end of trace".to_string(),
    }
}

fn replay(
    workload: &Workload,
    args: &VerifyArgs,
    backend: PartitionBackend,
    config: TraceConfig,
) -> Result<ProbeTrace, Box<dyn std::error::Error>> {
    let mut mem = Memory::new(config);
    match workload {
        Workload::Pq(seq) => {
            let mut pq = ObliviousPq::with_memory(mem, args.capacity, backend)?;
            for &(kind, key, priority) in seq {
                match args.mode {
                    Mode::Hiding => {
                        pq.access(kind, key, priority)?;
                    }
                    Mode::Plain => match kind {
                        AccessKind::Min => {
                            pq.min();
                        }
                        AccessKind::InsertAndMin => pq.insert(key, priority)?,
                        AccessKind::DeleteMinAndMin => {
                            pq.delete_min()?;
                        }
                    },
                }
            }
            mem = pq.into_memory();
        }
        Workload::Oram(ops) => {
            let options = RunOptions {
                backend,
                ..RunOptions::default()
            };
            run_with(&mut mem, ops, args.capacity, options)?;
        }
    }
    Ok(mem.take_trace())
}
