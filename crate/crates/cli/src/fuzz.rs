//! `fuzz`: seeded differential testing against reference implementations.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use oblivq::oram::{annotate, replay, run_with, OpKind, OramError, RunOptions};
use oblivq::selection::{k_element_with, k_select_with};
use oblivq::{AccessKind, Element, Memory, ObliviousPq, TraceConfig, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::workload::{corrupt_annotation, oram_stream, pq_sequence};
use crate::{CmdResult, FuzzArgs, Mode, Outcome, Target};

pub fn run(args: &FuzzArgs) -> CmdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let failure = match args.target {
        Target::Pq => fuzz_pq(args, &mut rng)?,
        Target::Oram if args.corrupt_annotation => return corrupted_oram(args, &mut rng),
        Target::Oram => fuzz_oram(args, &mut rng)?,
        Target::Select => fuzz_select(args, &mut rng)?,
    };
    let mut out = args.output.open()?;
    writeln!(out, "target,capacity,ops,seed,result")?;
    let target = format!("{:?}", args.target).to_lowercase();
    let result = if failure.is_some() { "fail" } else { "pass" };
    writeln!(
        out,
        "{target},{},{},{},{result}",
        args.capacity, args.ops, args.seed
    )?;
    out.flush()?;
    Ok(match failure {
        None => Outcome::Ok,
        Some((op, reason)) => Outcome::Failed(format!(
            "{target} mismatch with seed {} at op {op}: {reason}",
            args.seed
        )),
    })
}

type Failure = Option<(usize, String)>;

/// Reference queue: stable on equal priorities by insertion order.
#[derive(Default)]
struct StableHeap {
    heap: BinaryHeap<Reverse<(Word, u64, Word)>>,
    seq: u64,
}

impl StableHeap {
    fn min(&self) -> Option<(Word, Word)> {
        self.heap.peek().map(|Reverse((p, _, k))| (*k, *p))
    }

    fn insert(&mut self, key: Word, priority: Word) {
        self.heap.push(Reverse((priority, self.seq, key)));
        self.seq += 1;
    }

    fn delete_min(&mut self) -> Option<(Word, Word)> {
        self.heap.pop().map(|Reverse((p, _, k))| (k, p))
    }

    fn contents(&self) -> Vec<(Word, Word)> {
        self.heap
            .iter()
            .map(|Reverse((p, _, k))| (*k, *p))
            .collect()
    }
}

fn fuzz_pq(args: &FuzzArgs, rng: &mut ChaCha8Rng) -> Result<Failure, Box<dyn std::error::Error>> {
    let mem = Memory::new(TraceConfig::COUNT);
    let mut pq = ObliviousPq::with_memory(mem, args.capacity, args.backend.backend())?;
    let mut oracle = StableHeap::default();
    for (t, (kind, key, priority)) in pq_sequence(rng, args.capacity, args.ops)
        .into_iter()
        .enumerate()
    {
        let (got, want) = match (args.mode, kind) {
            (Mode::Hiding, AccessKind::Min) => (pq.access(kind, key, priority)?, oracle.min()),
            (Mode::Hiding, AccessKind::InsertAndMin) => {
                oracle.insert(key, priority);
                (pq.access(kind, key, priority)?, oracle.min())
            }
            (Mode::Hiding, AccessKind::DeleteMinAndMin) => {
                (pq.access(kind, key, priority)?, oracle.delete_min())
            }
            (Mode::Plain, AccessKind::Min) => (pq.min(), oracle.min()),
            (Mode::Plain, AccessKind::InsertAndMin) => {
                pq.insert(key, priority)?;
                oracle.insert(key, priority);
                (None, None)
            }
            (Mode::Plain, AccessKind::DeleteMinAndMin) => (pq.delete_min()?, oracle.delete_min()),
        };
        if got != want {
            return Ok(Some((
                t,
                format!("{kind:?} returned {got:?}, expected {want:?}"),
            )));
        }
        if let Err(violation) = pq.check_invariants(&oracle.contents()) {
            return Ok(Some((t, violation.to_string())));
        }
    }
    Ok(None)
}

fn fuzz_oram(args: &FuzzArgs, rng: &mut ChaCha8Rng) -> Result<Failure, Box<dyn std::error::Error>> {
    let ops = oram_stream(rng, args.capacity, args.ops);
    let mut mem = Memory::new(TraceConfig::COUNT);
    let options = RunOptions {
        backend: args.backend.backend(),
        ..RunOptions::default()
    };
    let reads = run_with(&mut mem, &ops, args.capacity, options)?;
    let mut shadow = vec![options.default; args.capacity];
    let mut got = reads.into_iter();
    for (t, op) in ops.iter().enumerate() {
        match op.kind {
            OpKind::Write => shadow[op.index] = op.value,
            OpKind::Read => {
                let want = (t as u64 + 1, shadow[op.index]);
                let read = got.next();
                if read != Some(want) {
                    return Ok(Some((t, format!("read {read:?}, expected {want:?}"))));
                }
            }
        }
    }
    Ok(None)
}

/// Replay with one lowered annotation; the replay must reject it.
fn corrupted_oram(args: &FuzzArgs, rng: &mut ChaCha8Rng) -> CmdResult {
    let ops = oram_stream(rng, args.capacity, args.ops);
    let indices: Vec<usize> = ops.iter().map(|op| op.index).collect();
    let mut mem = Memory::new(TraceConfig::COUNT);
    let mut annotations = annotate(&mut mem, &indices, args.capacity, None)?;
    let Some(t) = corrupt_annotation(&mut annotations, &indices) else {
        return Err("no annotation in this stream can be corrupted; use more ops".into());
    };
    let options = RunOptions {
        backend: args.backend.backend(),
        ..RunOptions::default()
    };
    Ok(
        match replay(&mut mem, &ops, args.capacity, annotations, options) {
            Err(e @ OramError::InconsistentAnnotation { .. }) => {
                Outcome::Failed(format!("annotation of op {t} lowered by one: {e}"))
            }
            Err(e) => return Err(e.into()),
            Ok(_) => Outcome::Failed(format!(
                "annotation of op {t} lowered by one but the replay did not detect it"
            )),
        },
    )
}

/// Each op is one random array of up to `capacity` elements and one rank.
fn fuzz_select(
    args: &FuzzArgs,
    rng: &mut ChaCha8Rng,
) -> Result<Failure, Box<dyn std::error::Error>> {
    let backend = args.backend.backend();
    for t in 0..args.ops {
        let n = rng.gen_range(1..=args.capacity.max(1));
        let k = rng.gen_range(0..n);
        let elements: Vec<Element> = (0..n)
            .map(|i| Element::new(i as Word, rng.gen_range(0..n as Word), i as Word))
            .collect();
        let mut sorted = elements.clone();
        sorted.sort_unstable();

        let mut mem = Memory::new(TraceConfig::COUNT);
        let span = mem.allocate_span(n)?;
        mem.poke_span(span, &elements);
        let got = k_element_with(&mut mem, span, k, backend)?;
        if got != sorted[k] {
            return Ok(Some((
                t,
                format!("rank {k} of {n}: {got:?} != {:?}", sorted[k]),
            )));
        }

        mem.poke_span(span, &elements);
        k_select_with(&mut mem, span, k, backend)?;
        let mut prefix = mem.peek_span(span);
        prefix.truncate(k);
        prefix.sort_unstable();
        if prefix[..] != sorted[..k] {
            return Ok(Some((
                t,
                format!("k_select({k}) of {n} kept the wrong elements"),
            )));
        }
    }
    Ok(None)
}
