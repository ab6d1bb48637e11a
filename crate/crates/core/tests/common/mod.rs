//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use oblivq::oram::Operation;
use oblivq::{AccessKind, Element, Memory, ObliviousPq, Span, TraceConfig, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Reference queue, first-in first-out among equal priorities.
#[derive(Default, Clone)]
pub struct StableHeap {
    heap: BinaryHeap<Reverse<(Word, u64, Word)>>,
    seq: u64,
}

impl StableHeap {
    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn min(&self) -> Option<(Word, Word)> {
        self.heap.peek().map(|Reverse((p, _, k))| (*k, *p))
    }

    pub fn insert(&mut self, key: Word, priority: Word) {
        self.heap.push(Reverse((priority, self.seq, key)));
        self.seq += 1;
    }

    pub fn delete_min(&mut self) -> Option<(Word, Word)> {
        self.heap.pop().map(|Reverse((p, _, k))| (k, p))
    }

    pub fn contents(&self) -> Vec<(Word, Word)> {
        self.heap
            .iter()
            .map(|Reverse((p, _, k))| (*k, *p))
            .collect()
    }

    /// Apply an operation-hiding access and return its expected result.
    pub fn access(&mut self, kind: AccessKind, key: Word, priority: Word) -> Option<(Word, Word)> {
        match kind {
            AccessKind::Min => self.min(),
            AccessKind::InsertAndMin => {
                self.insert(key, priority);
                self.min()
            }
            AccessKind::DeleteMinAndMin => self.delete_min(),
        }
    }
}

/// Random accesses that never exceed `capacity`; keys are the op indices
/// and priorities are drawn from `0..priorities` (small ranges force ties).
pub fn pq_ops(
    rng: &mut impl Rng,
    capacity: usize,
    n: usize,
    priorities: Word,
) -> Vec<(AccessKind, Word, Word)> {
    let mut len = 0;
    (0..n)
        .map(|t| {
            let kind = match rng.gen_range(0..3) {
                _ if len == capacity => AccessKind::DeleteMinAndMin,
                0 => AccessKind::Min,
                1 => AccessKind::InsertAndMin,
                _ => AccessKind::DeleteMinAndMin,
            };
            match kind {
                AccessKind::InsertAndMin => len += 1,
                AccessKind::DeleteMinAndMin => len = len.saturating_sub(1),
                AccessKind::Min => {}
            }
            (kind, t as Word, rng.gen_range(0..priorities))
        })
        .collect()
}

pub fn oram_ops(rng: &mut impl Rng, capacity: usize, n: usize) -> Vec<Operation> {
    (0..n)
        .map(|_| {
            let index = rng.gen_range(0..capacity);
            if rng.gen_bool(0.5) {
                Operation::read(index)
            } else {
                Operation::write(index, rng.gen())
            }
        })
        .collect()
}

/// Digest of running `ops` on a fresh queue.
pub fn pq_digest(capacity: usize, ops: &[(AccessKind, Word, Word)]) -> oblivq::TraceDigest {
    let mut pq = ObliviousPq::new(capacity).unwrap();
    for &(kind, k, p) in ops {
        pq.access(kind, k, p).unwrap();
    }
    pq.into_memory().digest().unwrap()
}

/// Shadow-array oracle for read results `(t, value)` with 1-based `t`.
pub fn shadow_reads(ops: &[Operation], capacity: usize, default: Word) -> Vec<(u64, Word)> {
    let mut cells = vec![default; capacity];
    let mut reads = Vec::new();
    for (t, op) in ops.iter().enumerate() {
        match op.kind {
            oblivq::OpKind::Read => reads.push((t as u64 + 1, cells[op.index])),
            oblivq::OpKind::Write => cells[op.index] = op.value,
        }
    }
    reads
}

/// Elements with the given priorities; keys and timestamps are positions.
pub fn load_elements(mem: &mut Memory, priorities: &[Word]) -> Span<Element> {
    let els: Vec<_> = priorities
        .iter()
        .enumerate()
        .map(|(i, &p)| Element::new(i as Word, p, i as Word))
        .collect();
    let span = mem.allocate_span(els.len()).unwrap();
    mem.poke_span(span, &els);
    span
}

pub fn digest_memory() -> Memory {
    Memory::new(TraceConfig::DIGEST)
}
