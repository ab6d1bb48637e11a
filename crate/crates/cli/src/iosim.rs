//! `iosim`: block transfers of the partitions and of the queue.

use std::io::Write;

use oblivq::external::{
    pq_io_profile, simulate_stream, trace_partition, IoModel, PartitionAlgo, CSV_HEADER,
};
use oblivq::{PartitionBackend, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CmdResult, Experiment, IosimArgs, Outcome};

pub fn run(args: &IosimArgs) -> CmdResult {
    if args.min_log > args.max_log || args.max_log > 26 {
        return Err("need --min-log <= --max-log <= 26".into());
    }
    if args.epsilon <= 0.0 {
        return Err("--epsilon must be positive".into());
    }
    let mut models = Vec::new();
    for &m in &args.memory {
        for &b in &args.block {
            for &policy in &args.policy {
                models.push(IoModel::new(m, b, policy)?);
            }
        }
    }
    let mut out = args.output.open()?;
    writeln!(out, "{CSV_HEADER}")?;
    for lg in args.min_log..=args.max_log {
        let n = 1usize << lg;
        match args.experiment {
            Experiment::Aware | Experiment::Agnostic => {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ lg as u64);
                let input: Vec<Word> = (0..n).map(|_| rng.gen()).collect();
                partition_rows(&mut out, args, &models, &input)?;
            }
            Experiment::Pq => {
                if n < 2 {
                    continue;
                }
                for model in &models {
                    let profile = pq_io_profile(n, model, PartitionBackend::SortNetwork)?;
                    let (ops, transfers) = profile.period();
                    writeln!(
                        out,
                        "pq,{n},{},{},{},{transfers},period-{ops}",
                        model.memory_words, model.block_words, model.policy
                    )?;
                }
            }
        }
    }
    out.flush()?;
    Ok(Outcome::Ok)
}

fn partition_rows(
    out: &mut dyn Write,
    args: &IosimArgs,
    models: &[IoModel],
    input: &[Word],
) -> std::io::Result<()> {
    let mut blocks: Vec<usize> = models.iter().map(|m| m.block_words).collect();
    blocks.sort_unstable();
    blocks.dedup();
    let traces: Vec<_> = match args.experiment {
        // Group size follows the block size, so each B is a separate run.
        Experiment::Aware => blocks
            .iter()
            .map(|&b| {
                let algo = PartitionAlgo::CacheAware { block_words: b };
                (algo, trace_partition(algo, input, &[b]))
            })
            .collect(),
        _ => {
            let algo = PartitionAlgo::CacheAgnostic {
                epsilon: args.epsilon,
            };
            vec![(algo, trace_partition(algo, input, &blocks))]
        }
    };
    for model in models {
        let (algo, trace) = traces
            .iter()
            .find(|(_, t)| t.stream(model.block_words).is_some())
            .expect("stream traced for every block size");
        let stream = trace.stream(model.block_words).expect("checked above");
        for row in simulate_stream(stream, model).csv_rows(algo.name(), input.len()) {
            writeln!(out, "{row}")?;
        }
    }
    Ok(())
}
