//! Two-level memory simulation over probe traces.
//!
//! A probe at word address `a` touches block `a / B`. The cache holds `M / B`
//! blocks; every miss costs one block transfer. Consecutive probes to the same
//! block always hit under both policies, so traces are reduced to block
//! streams with such repeats removed before simulation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::trace::{ProbeEvent, ProbeObserver, ProbeTrace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("invalid cache model: M = {memory_words}, B = {block_words} (need M >= B >= 1)")]
    InvalidModel {
        memory_words: usize,
        block_words: usize,
    },
    #[error("trace does not retain its events")]
    TraceNotRetained,
    #[error("unknown replacement policy `{0}`")]
    UnknownPolicy(String),
}

/// Block replacement policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Transfers chosen by the algorithm; simulated as the offline optimum.
    ExplicitCacheAware,
    Lru,
    /// Evict the block whose next use is furthest in the future.
    BeladyOffline,
}

impl Policy {
    pub const ALL: [Policy; 3] = [
        Policy::ExplicitCacheAware,
        Policy::Lru,
        Policy::BeladyOffline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::ExplicitCacheAware => "explicit",
            Policy::Lru => "lru",
            Policy::BeladyOffline => "belady",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = IoError;

    fn from_str(s: &str) -> Result<Self, IoError> {
        match s {
            "explicit" => Ok(Policy::ExplicitCacheAware),
            "lru" => Ok(Policy::Lru),
            "belady" => Ok(Policy::BeladyOffline),
            other => Err(IoError::UnknownPolicy(other.to_string())),
        }
    }
}

/// Cache of `memory_words` words in blocks of `block_words` words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IoModel {
    pub memory_words: usize,
    pub block_words: usize,
    pub policy: Policy,
}

impl IoModel {
    pub fn new(memory_words: usize, block_words: usize, policy: Policy) -> Result<Self, IoError> {
        if block_words == 0 || memory_words < block_words {
            return Err(IoError::InvalidModel {
                memory_words,
                block_words,
            });
        }
        Ok(IoModel {
            memory_words,
            block_words,
            policy,
        })
    }

    /// Number of blocks the cache holds.
    pub fn cache_blocks(&self) -> usize {
        self.memory_words / self.block_words
    }

    /// Whether `M >= B^(1+epsilon)`.
    pub fn is_tall(&self, epsilon: f64) -> bool {
        self.memory_words as f64 >= (self.block_words as f64).powf(1.0 + epsilon)
    }
}

/// Block accesses with immediate repeats removed, split into named phases.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockStream {
    pub blocks: Vec<u32>,
    /// `(start index into blocks, phase name)`, in order.
    pub phases: Vec<(usize, String)>,
    last: Option<u32>,
}

impl BlockStream {
    pub fn push(&mut self, block: u32) {
        if self.last != Some(block) {
            self.blocks.push(block);
            self.last = Some(block);
        }
    }

    pub fn mark_phase(&mut self, name: &str) {
        self.phases.push((self.blocks.len(), name.to_string()));
    }

    pub fn from_trace(trace: &ProbeTrace, block_words: usize) -> Result<Self, IoError> {
        if !trace.has_events() {
            return Err(IoError::TraceNotRetained);
        }
        let mut stream = BlockStream::default();
        for e in trace.events() {
            stream.push(block_of(e.address, block_words));
        }
        Ok(stream)
    }
}

fn block_of(address: u64, block_words: usize) -> u32 {
    u32::try_from(address / block_words as u64).expect("block index exceeds u32")
}

/// Observer that maps probes to a [`BlockStream`] while the computation runs.
pub struct BlockTracer {
    block_words: usize,
    stream: Arc<Mutex<BlockStream>>,
}

impl BlockTracer {
    /// The tracer to attach and a handle to read the stream from afterwards.
    pub fn new(block_words: usize) -> (Self, Arc<Mutex<BlockStream>>) {
        assert!(block_words >= 1);
        let stream = Arc::new(Mutex::new(BlockStream::default()));
        (
            BlockTracer {
                block_words,
                stream: Arc::clone(&stream),
            },
            stream,
        )
    }
}

impl ProbeObserver for BlockTracer {
    fn observe(&mut self, events: &[ProbeEvent]) {
        let mut stream = self.stream.lock().unwrap();
        for e in events {
            stream.push(block_of(e.address, self.block_words));
        }
    }

    fn enter_phase(&mut self, phase: &str) {
        self.stream.lock().unwrap().mark_phase(phase);
    }
}

/// Transfer counts of one simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IoStats {
    pub memory_words: usize,
    pub block_words: usize,
    pub policy: Policy,
    pub transfers: u64,
    /// Transfers per phase; empty when the stream has no phase markers.
    pub phases: Vec<(String, u64)>,
}

impl IoStats {
    /// CSV rows `algo,n,M,B,policy,transfers,phase`: one per phase, then a
    /// `total` row.
    pub fn csv_rows(&self, algo: &str, n: usize) -> Vec<String> {
        let row = |transfers: u64, phase: &str| {
            format!(
                "{algo},{n},{},{},{},{transfers},{phase}",
                self.memory_words, self.block_words, self.policy
            )
        };
        self.phases
            .iter()
            .map(|(p, t)| row(*t, p))
            .chain(std::iter::once(row(self.transfers, "total")))
            .collect()
    }
}

pub const CSV_HEADER: &str = "algo,n,M,B,policy,transfers,phase";

/// Count block transfers of a retained trace.
pub fn simulate_io(trace: &ProbeTrace, model: &IoModel) -> Result<IoStats, IoError> {
    let stream = BlockStream::from_trace(trace, model.block_words)?;
    Ok(simulate_stream(&stream, model))
}

/// Count block transfers of a block stream.
pub fn simulate_stream(stream: &BlockStream, model: &IoModel) -> IoStats {
    let capacity = model.cache_blocks();
    let misses = match model.policy {
        Policy::Lru => lru_misses(&stream.blocks, capacity),
        Policy::BeladyOffline | Policy::ExplicitCacheAware => {
            belady_misses(&stream.blocks, capacity)
        }
    };
    let mut phases = Vec::new();
    for (i, (start, name)) in stream.phases.iter().enumerate() {
        let end = stream
            .phases
            .get(i + 1)
            .map_or(stream.blocks.len(), |p| p.0);
        let count = misses[*start..end].iter().filter(|&&m| m).count() as u64;
        phases.push((name.clone(), count));
    }
    IoStats {
        memory_words: model.memory_words,
        block_words: model.block_words,
        policy: model.policy,
        transfers: misses.iter().filter(|&&m| m).count() as u64,
        phases,
    }
}

const NIL: u32 = u32::MAX;

fn lru_misses(blocks: &[u32], capacity: usize) -> Vec<bool> {
    let universe = blocks.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
    // Doubly linked recency list over block ids; head is most recent.
    let mut prev = vec![NIL; universe];
    let mut next = vec![NIL; universe];
    let mut resident = vec![false; universe];
    let (mut head, mut tail) = (NIL, NIL);
    let mut size = 0usize;
    let mut misses = Vec::with_capacity(blocks.len());

    let unlink = |b: u32, prev: &mut [u32], next: &mut [u32], head: &mut u32, tail: &mut u32| {
        let (p, n) = (prev[b as usize], next[b as usize]);
        if p == NIL {
            *head = n;
        } else {
            next[p as usize] = n;
        }
        if n == NIL {
            *tail = p;
        } else {
            prev[n as usize] = p;
        }
    };

    for &b in blocks {
        let hit = resident[b as usize];
        misses.push(!hit);
        if hit {
            unlink(b, &mut prev, &mut next, &mut head, &mut tail);
        } else {
            if size == capacity {
                let victim = tail;
                unlink(victim, &mut prev, &mut next, &mut head, &mut tail);
                resident[victim as usize] = false;
                size -= 1;
            }
            resident[b as usize] = true;
            size += 1;
        }
        prev[b as usize] = NIL;
        next[b as usize] = head;
        if head != NIL {
            prev[head as usize] = b;
        }
        head = b;
        if tail == NIL {
            tail = b;
        }
    }
    misses
}

fn belady_misses(blocks: &[u32], capacity: usize) -> Vec<bool> {
    let never = blocks.len();
    let universe = blocks.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
    let mut next_use = vec![never; blocks.len()];
    let mut seen = vec![never; universe];
    for (i, &b) in blocks.iter().enumerate().rev() {
        next_use[i] = seen[b as usize];
        seen[b as usize] = i;
    }
    // Resident blocks keyed by (next use, block); ties only at `never`.
    let mut cache: BTreeSet<(usize, u32)> = BTreeSet::new();
    let mut pending = vec![None::<usize>; universe];
    let mut misses = Vec::with_capacity(blocks.len());
    for (i, &b) in blocks.iter().enumerate() {
        let slot = &mut pending[b as usize];
        let hit = slot.is_some();
        misses.push(!hit);
        if let Some(at) = slot.take() {
            cache.remove(&(at, b));
        } else if cache.len() == capacity {
            let (_, victim) = cache.pop_last().expect("cache is full");
            pending[victim as usize] = None;
        }
        cache.insert((next_use[i], b));
        pending[b as usize] = Some(next_use[i]);
    }
    misses
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn stream(blocks: &[u32]) -> BlockStream {
        let mut s = BlockStream::default();
        for &b in blocks {
            s.push(b);
        }
        s
    }

    fn count(blocks: &[u32], cap: usize, policy: Policy) -> u64 {
        let model = IoModel::new(cap, 1, policy).unwrap();
        simulate_stream(&stream(blocks), &model).transfers
    }

    fn lru_oracle(blocks: &[u32], cap: usize) -> u64 {
        let mut q: VecDeque<u32> = VecDeque::new();
        let mut misses = 0;
        for &b in blocks {
            if let Some(p) = q.iter().position(|&x| x == b) {
                q.remove(p);
            } else {
                misses += 1;
                if q.len() == cap {
                    q.pop_back();
                }
            }
            q.push_front(b);
        }
        misses
    }

    fn opt_oracle(blocks: &[u32], cap: usize) -> u64 {
        let mut cache: Vec<u32> = Vec::new();
        let mut misses = 0;
        for (i, &b) in blocks.iter().enumerate() {
            if cache.contains(&b) {
                continue;
            }
            misses += 1;
            if cache.len() == cap {
                let next = |x: u32| {
                    blocks[i + 1..]
                        .iter()
                        .position(|&y| y == x)
                        .unwrap_or(usize::MAX)
                };
                let victim = (0..cache.len()).max_by_key(|&j| next(cache[j])).unwrap();
                cache.swap_remove(victim);
            }
            cache.push(b);
        }
        misses
    }

    #[test]
    fn sequential_scan() {
        // 64 words in blocks of 4: 16 compulsory misses under both policies.
        let mut trace_blocks = Vec::new();
        for a in 0..64u32 {
            trace_blocks.push(a / 4);
        }
        for policy in Policy::ALL {
            let model = IoModel::new(16, 4, policy).unwrap();
            assert_eq!(
                simulate_stream(&stream(&trace_blocks), &model).transfers,
                16
            );
        }
    }

    #[test]
    fn classic_reference_string() {
        let refs = [7, 0, 1, 2, 0, 3, 0, 4, 2, 3, 0, 3, 2, 1, 2, 0, 1, 7, 0, 1];
        assert_eq!(count(&refs, 3, Policy::BeladyOffline), 9);
        assert_eq!(count(&refs, 3, Policy::Lru), 12);
    }

    #[test]
    fn matches_oracles_on_pseudorandom_streams() {
        let mut x: u64 = 0x9e37_79b9_7f4a_7c15;
        for round in 0..200 {
            let len = 1 + round % 97;
            let universe = 1 + round % 13;
            let blocks: Vec<u32> = (0..len)
                .map(|_| {
                    x ^= x << 13;
                    x ^= x >> 7;
                    x ^= x << 17;
                    (x % universe as u64) as u32
                })
                .collect();
            let deduped = stream(&blocks).blocks;
            for cap in 1..6 {
                assert_eq!(count(&blocks, cap, Policy::Lru), lru_oracle(&deduped, cap));
                assert_eq!(
                    count(&blocks, cap, Policy::BeladyOffline),
                    opt_oracle(&deduped, cap)
                );
                assert!(
                    count(&blocks, cap, Policy::BeladyOffline) <= count(&blocks, cap, Policy::Lru)
                );
            }
        }
    }

    #[test]
    fn phases_partition_the_total() {
        let mut s = BlockStream::default();
        s.mark_phase("a");
        for b in [0, 1, 2, 0] {
            s.push(b);
        }
        s.mark_phase("b");
        for b in [3, 0, 1] {
            s.push(b);
        }
        let stats = simulate_stream(&s, &IoModel::new(2, 1, Policy::Lru).unwrap());
        let sum: u64 = stats.phases.iter().map(|p| p.1).sum();
        assert_eq!(sum, stats.transfers);
        assert_eq!(
            stats.csv_rows("x", 7).last().unwrap(),
            "x,7,2,1,lru,6,total"
        );
    }

    #[test]
    fn rejects_bad_models() {
        assert!(IoModel::new(4, 0, Policy::Lru).is_err());
        assert!(IoModel::new(4, 8, Policy::Lru).is_err());
        assert!(IoModel::new(1 << 14, 16, Policy::Lru).unwrap().is_tall(1.0));
        assert!(!IoModel::new(64, 16, Policy::Lru).unwrap().is_tall(1.0));
    }
}
