//! I/O measurements of the partitions and of the priority queue.

use std::sync::{Arc, Mutex};

use crate::memory::{Memory, Word};
use crate::pq::{AccessKind, ObliviousPq, PqError};
use crate::primitives::PartitionBackend;
use crate::trace::TraceConfig;

use super::cache::{simulate_stream, BlockStream, BlockTracer, IoModel, IoStats};
use super::partition::{cache_agnostic_partition, cache_aware_partition_phased, RecursionProfile};

/// Which external partition to trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PartitionAlgo {
    /// Groups of one block of `block_words` words.
    CacheAware {
        block_words: usize,
    },
    CacheAgnostic {
        epsilon: f64,
    },
}

impl PartitionAlgo {
    pub fn name(&self) -> &'static str {
        match self {
            PartitionAlgo::CacheAware { .. } => "cache-aware-partition",
            PartitionAlgo::CacheAgnostic { .. } => "cache-agnostic-partition",
        }
    }
}

/// Block streams of one partition run, one per requested block size.
#[derive(Clone, Debug)]
pub struct PartitionTrace {
    pub n: usize,
    pub streams: Vec<(usize, BlockStream)>,
    pub profile: Option<RecursionProfile>,
}

impl PartitionTrace {
    pub fn stream(&self, block_words: usize) -> Option<&BlockStream> {
        self.streams
            .iter()
            .find(|(b, _)| *b == block_words)
            .map(|(_, s)| s)
    }
}

fn attach_tracers(
    mem: &mut Memory,
    block_sizes: &[usize],
) -> Vec<(usize, Arc<Mutex<BlockStream>>)> {
    block_sizes
        .iter()
        .map(|&b| {
            let (tracer, handle) = BlockTracer::new(b);
            mem.attach(Box::new(tracer));
            (b, handle)
        })
        .collect()
}

fn collect(
    mem: &mut Memory,
    handles: Vec<(usize, Arc<Mutex<BlockStream>>)>,
) -> Vec<(usize, BlockStream)> {
    drop(mem.recorder_mut().detach_all());
    handles
        .into_iter()
        .map(|(b, h)| (b, std::mem::take(&mut *h.lock().unwrap())))
        .collect()
}

/// Partition `input` (predicate: lowest bit set) and record its block
/// streams for each block size in `block_sizes`. Arrays are aligned to the
/// largest block size.
pub fn trace_partition(
    algo: PartitionAlgo,
    input: &[Word],
    block_sizes: &[usize],
) -> PartitionTrace {
    let align = block_sizes.iter().copied().max().unwrap_or(1);
    let mut mem = Memory::new(TraceConfig::COUNT).with_alignment(align);
    let span = mem
        .allocate_span::<Word>(input.len())
        .expect("unbounded arena");
    mem.poke_span(span, input);
    let handles = attach_tracers(&mut mem, block_sizes);
    let odd = |x: &Word| x & 1 == 1;
    let profile = match algo {
        PartitionAlgo::CacheAware { block_words } => {
            cache_aware_partition_phased(&mut mem, span, &odd, block_words.max(1));
            None
        }
        PartitionAlgo::CacheAgnostic { epsilon } => {
            Some(cache_agnostic_partition(&mut mem, span, &odd, epsilon))
        }
    };
    PartitionTrace {
        n: input.len(),
        streams: collect(&mut mem, handles),
        profile,
    }
}

/// Measured transfers of the priority queue.
#[derive(Clone, Debug, PartialEq)]
pub struct PqIoReport {
    pub capacity: usize,
    pub operations: u64,
    pub stats: IoStats,
}

impl PqIoReport {
    pub fn amortized(&self) -> f64 {
        self.stats.transfers as f64 / self.operations.max(1) as f64
    }
}

/// Run `operations` operation-hiding accesses on a queue of capacity `N`
/// using `backend` for k-selection, and count the transfers under `model`.
///
/// The queue's trace does not depend on the operations performed, so a
/// fixed mix is used. The first `warmup` operations are traced but not
/// counted.
pub fn pq_io_experiment(
    capacity: usize,
    operations: u64,
    warmup: u64,
    model: &IoModel,
    backend: PartitionBackend,
) -> Result<PqIoReport, PqError> {
    let mem = Memory::new(TraceConfig::COUNT).with_alignment(model.block_words);
    let mut pq = ObliviousPq::with_memory(mem, capacity, backend)?;
    let handles = attach_tracers(pq.memory_mut(), &[model.block_words]);
    pq.memory_mut().enter_phase("warmup");
    for t in 0..warmup + operations {
        if t == warmup {
            pq.memory_mut().enter_phase("measured");
        }
        let kind = if (t / 3) % 2 == 0 || pq.is_empty() {
            AccessKind::InsertAndMin
        } else {
            AccessKind::DeleteMinAndMin
        };
        let kind = if pq.len() == capacity {
            AccessKind::DeleteMinAndMin
        } else {
            kind
        };
        pq.access(kind, t, t.wrapping_mul(0x9e37_79b9) % 1000)?;
    }
    let (_, stream) = collect(pq.memory_mut(), handles).pop().expect("one tracer");
    let mut stats = simulate_stream(&stream, model);
    stats.transfers = stats
        .phases
        .iter()
        .find(|p| p.0 == "measured")
        .map_or(0, |p| p.1);
    Ok(PqIoReport {
        capacity,
        operations,
        stats,
    })
}

/// Per-level transfer costs of the queue's rebuilds.
#[derive(Clone, Debug, PartialEq)]
pub struct PqIoProfile {
    pub capacity: usize,
    /// Transfers of `rebuild(m)` right after an identical rebuild, per `m`.
    pub rebuild: Vec<u64>,
}

impl PqIoProfile {
    /// Transfers per operation over a full period of `2^(ℓ-1)` operations:
    /// `rebuild(m)` runs at every operation count whose 2-adic valuation is
    /// `m` (capped at `ℓ - 1`).
    pub fn amortized(&self) -> f64 {
        amortize(&self.rebuild)
    }

    /// `(operations, transfers)` of one full period.
    pub fn period(&self) -> (u64, u64) {
        period_total(&self.rebuild)
    }
}

/// Operations in one rebuild period of a queue with `levels` levels, and how
/// often each level is the highest one rebuilt within it: `2^(ℓ-2-m)` times
/// for `m < ℓ - 1`, once for `m = ℓ - 1`.
pub fn rebuild_frequencies(levels: usize) -> (u64, Vec<u64>) {
    assert!(levels >= 1);
    let period = 1u64 << (levels - 1);
    let freq = (0..levels)
        .map(|m| if m + 1 < levels { period >> (m + 1) } else { 1 })
        .collect();
    (period, freq)
}

/// Total of `cost[m]` over one period: `(operations, total)`.
pub fn period_total(cost: &[u64]) -> (u64, u64) {
    let (period, freq) = rebuild_frequencies(cost.len());
    (period, cost.iter().zip(&freq).map(|(c, f)| c * f).sum())
}

/// Average of `cost[m]` per operation over one period.
pub fn amortize(cost: &[u64]) -> f64 {
    let (period, total) = period_total(cost);
    total as f64 / period as f64
}

/// Measure each `rebuild(m)` of a queue of capacity `N` with a cache warmed
/// by one preceding identical rebuild. Rebuild traces do not depend on the
/// queue's contents, so an empty queue is used.
pub fn pq_io_profile(
    capacity: usize,
    model: &IoModel,
    backend: PartitionBackend,
) -> Result<PqIoProfile, PqError> {
    let levels = crate::pq::level_count(capacity);
    let mut rebuild = Vec::with_capacity(levels);
    for m in 0..levels {
        let mem = Memory::new(TraceConfig::COUNT).with_alignment(model.block_words);
        let mut pq = ObliviousPq::with_memory(mem, capacity, backend)?;
        let handles = attach_tracers(pq.memory_mut(), &[model.block_words]);
        pq.memory_mut().enter_phase("warmup");
        pq.rebuild_level(m)?;
        pq.memory_mut().enter_phase("measured");
        pq.rebuild_level(m)?;
        let (_, stream) = collect(pq.memory_mut(), handles).pop().expect("one tracer");
        let stats = simulate_stream(&stream, model);
        rebuild.push(
            stats
                .phases
                .iter()
                .find(|p| p.0 == "measured")
                .map_or(0, |p| p.1),
        );
    }
    Ok(PqIoProfile { capacity, rebuild })
}

/// Number of levels whose rebuilds run entirely in cache:
/// `floor(log2(M / 32))`. A rebuild of level `m` touches about `30 * 2^m`
/// words (buffers, scratch and medians of four-word elements).
pub fn in_cache_levels(memory_words: usize) -> usize {
    (memory_words / 32).max(1).ilog2() as usize
}
