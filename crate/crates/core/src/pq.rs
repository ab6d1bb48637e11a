//! Oblivious priority queue.
//!
//! Level `i` of `ℓ = ceil(log2 N)` levels has a down-buffer `D_i` of
//! `2^max(1, i)` elements, an up-buffer `U_i` of `2^max(0, i - 1)` elements and
//! a public countdown `Δ_i`. Insertions land in `U_0`, the minimum always sits
//! in `D_0`, and level `i` is rebuilt every `2^i` operations by k-selection.
//!
//! All buffers live in one traced arena: the down-buffers back to back,
//! followed by the up-buffers, so that `D_0..=D_i` and `U_0..=U_i` are
//! contiguous prefixes. Every mutating operation runs the same combined
//! schedule, so the probe trace depends only on `N` and the number of
//! operations performed.

use thiserror::Error;

use crate::element::Element;
use crate::memory::{Memory, MemoryError, Span, Word};
use crate::primitives::{sort_by, PartitionBackend};
use crate::selection::{k_select_with, SelectionError};
use crate::trace::TraceConfig;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PqError {
    #[error("capacity must be at least 2, got {0}")]
    InvalidCapacity(usize),
    #[error("priority queue is full (capacity {capacity})")]
    Overflow { capacity: usize },
    #[error("{len} initial elements exceed capacity {capacity}")]
    TooManyElements { len: usize, capacity: usize },
    #[error("level {level} out of range for {levels} levels")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

/// Which combined operation [`ObliviousPq::access`] performs. Hidden from the
/// probe trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Min,
    InsertAndMin,
    DeleteMinAndMin,
}

/// Untraced copy of one level, for inspection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSnapshot {
    pub down: Vec<Element>,
    pub up: Vec<Element>,
    pub delta: u64,
}

/// A violated structural invariant.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvariantViolation {
    #[error("stored elements differ from the expected multiset")]
    Contents,
    #[error("U_0 holds a real element")]
    UpZeroOccupied,
    #[error("element {element:?} at level {level} has rank {rank} < Δ = {delta}")]
    Rank {
        level: usize,
        element: Element,
        rank: usize,
        delta: u64,
    },
    #[error("timestamp {timestamp} not below {bound}")]
    Timestamp { timestamp: Word, bound: u64 },
}

/// Oblivious priority queue of fixed capacity over a traced arena.
#[derive(Debug)]
pub struct ObliviousPq {
    mem: Memory,
    capacity: usize,
    levels: usize,
    down: Span<Element>,
    up: Span<Element>,
    delta: Vec<u64>,
    next_timestamp: Word,
    len: usize,
    operations: u64,
    backend: PartitionBackend,
    rebuilds: Vec<u64>,
    last_rebuild: Option<usize>,
}

/// `ceil(log2 n)`, at least 1.
pub fn level_count(capacity: usize) -> usize {
    (capacity.next_power_of_two().trailing_zeros() as usize).max(1)
}

/// Cells occupied by the buffers of a queue of the given capacity.
pub fn buffer_cells(capacity: usize) -> usize {
    let l = level_count(capacity);
    (1usize << l) + (1usize << (l - 1))
}

impl ObliviousPq {
    pub fn new(capacity: usize) -> Result<Self, PqError> {
        Self::with_memory(
            Memory::new(TraceConfig::DIGEST),
            capacity,
            PartitionBackend::SortNetwork,
        )
    }

    /// A queue whose buffers are allocated in `mem`, using `backend` for the
    /// partitions inside k-selection.
    pub fn with_memory(
        mut mem: Memory,
        capacity: usize,
        backend: PartitionBackend,
    ) -> Result<Self, PqError> {
        if capacity < 2 {
            return Err(PqError::InvalidCapacity(capacity));
        }
        let levels = level_count(capacity);
        let down = mem.allocate_span::<Element>(1 << levels)?;
        let up = mem.allocate_span::<Element>(1 << (levels - 1))?;
        // Allocation emits no probes; fresh cells decode as real zero
        // elements, so the dummy fill is done untraced as well.
        mem.poke_span(down, &vec![Element::dummy(0); down.len()]);
        mem.poke_span(up, &vec![Element::dummy(0); up.len()]);
        Ok(ObliviousPq {
            mem,
            capacity,
            levels,
            down,
            up,
            delta: (0..levels).map(|i| 1 << i).collect(),
            next_timestamp: 0,
            len: 0,
            operations: 0,
            backend,
            rebuilds: vec![0; levels],
            last_rebuild: None,
        })
    }

    /// A queue holding `entries` (key, priority), built with one rebuild of
    /// the last level. Earlier entries win ties on equal priority.
    pub fn build_from(entries: &[(Word, Word)], capacity: usize) -> Result<Self, PqError> {
        Self::build_from_with(
            Memory::new(TraceConfig::DIGEST),
            entries,
            capacity,
            PartitionBackend::SortNetwork,
        )
    }

    pub fn build_from_with(
        mem: Memory,
        entries: &[(Word, Word)],
        capacity: usize,
        backend: PartitionBackend,
    ) -> Result<Self, PqError> {
        if entries.len() > capacity {
            return Err(PqError::TooManyElements {
                len: entries.len(),
                capacity,
            });
        }
        let mut pq = Self::with_memory(mem, capacity, backend)?;
        let mut t = 0;
        for span in [pq.down, pq.up] {
            for i in 0..span.len() {
                let e = match entries.get(t) {
                    Some(&(k, p)) => Element::new(k, p, t as Word),
                    None => Element::dummy(0),
                };
                pq.mem.store(span, i, &e);
                t += 1;
            }
        }
        pq.len = entries.len();
        pq.next_timestamp = entries.len() as Word;
        pq.rebuild(pq.levels - 1)?;
        Ok(pq)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Number of real elements stored.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Operations performed so far (each with one rebuild).
    pub fn operations(&self) -> u64 {
        self.operations
    }

    pub fn deltas(&self) -> &[u64] {
        &self.delta
    }

    pub fn backend(&self) -> PartitionBackend {
        self.backend
    }

    pub fn memory(&self) -> &Memory {
        &self.mem
    }

    pub fn memory_mut(&mut self) -> &mut Memory {
        &mut self.mem
    }

    pub fn into_memory(self) -> Memory {
        self.mem
    }

    /// How often each level has been rebuilt.
    pub fn rebuild_counts(&self) -> &[u64] {
        &self.rebuilds
    }

    /// Highest level rebuilt by the most recent rebuild.
    pub fn last_rebuild(&self) -> Option<usize> {
        self.last_rebuild
    }

    fn down_level(&self, i: usize) -> Span<Element> {
        if i == 0 {
            self.down.slice(0, 2)
        } else {
            self.down.slice(1 << i, 1 << i)
        }
    }

    fn up_level(&self, i: usize) -> Span<Element> {
        if i == 0 {
            self.up.slice(0, 1)
        } else {
            self.up.slice(1 << (i - 1), 1 << (i - 1))
        }
    }

    /// Insert `(key, priority)`.
    pub fn insert(&mut self, key: Word, priority: Word) -> Result<(), PqError> {
        self.combined(|_| (false, Some((key, priority))))
            .map(|_| ())
    }

    /// Remove the minimum, returning it; `None` on an empty queue.
    pub fn delete_min(&mut self) -> Result<Option<(Word, Word)>, PqError> {
        Ok(self.combined(|_| (true, None))?.and_then(|e| e.entry()))
    }

    /// The minimum without modifying the queue. Reads both slots of `D_0` and
    /// the slot of `U_0`; no rebuild.
    pub fn min(&mut self) -> Option<(Word, Word)> {
        let d0 = self.down_level(0);
        let a = self.mem.load(d0, 0);
        let b = self.mem.load(d0, 1);
        let _ = self.mem.load(self.up_level(0), 0);
        a.min(b).entry()
    }

    /// Operation-hiding access: every kind produces the same probe trace.
    ///
    /// Returns the minimum after an insertion for `InsertAndMin` and the
    /// removed minimum for `DeleteMinAndMin`; `key` and `priority` are
    /// ignored unless inserting.
    pub fn access(
        &mut self,
        kind: AccessKind,
        key: Word,
        priority: Word,
    ) -> Result<Option<(Word, Word)>, PqError> {
        let min = self.combined(|_| match kind {
            AccessKind::Min => (false, None),
            AccessKind::InsertAndMin => (false, Some((key, priority))),
            AccessKind::DeleteMinAndMin => (true, None),
        })?;
        let min = min.and_then(|e| e.entry());
        Ok(match kind {
            AccessKind::InsertAndMin => match min {
                Some((_, p)) if p <= priority => min,
                _ => Some((key, priority)),
            },
            _ => min,
        })
    }

    /// The combined schedule: read `D_0`, let `decide` choose (privately)
    /// whether to delete the minimum and what to insert, rewrite `D_0` and
    /// `U_0`, then count down and rebuild. Returns the minimum read before
    /// any change, `None` if it was a dummy.
    pub(crate) fn combined(
        &mut self,
        decide: impl FnOnce(Option<Element>) -> (bool, Option<(Word, Word)>),
    ) -> Result<Option<Element>, PqError> {
        let d0 = self.down_level(0);
        let a = self.mem.load(d0, 0);
        let b = self.mem.load(d0, 1);
        let (slot, min) = if b < a { (1, b) } else { (0, a) };
        let min = min.is_real().then_some(min);
        let (delete, insert) = decide(min);
        let removed = delete && min.is_some();
        let new_len = self.len - removed as usize + insert.is_some() as usize;
        if new_len > self.capacity {
            return Err(PqError::Overflow {
                capacity: self.capacity,
            });
        }
        for j in 0..2 {
            let old = self.mem.load(d0, j);
            let new = if removed && j == slot {
                Element::dummy(0)
            } else {
                old
            };
            self.mem.store(d0, j, &new);
        }
        let u0 = self.up_level(0);
        let old = self.mem.load(u0, 0);
        let new = match insert {
            Some((k, p)) => Element::new(k, p, self.next_timestamp),
            None => old,
        };
        self.mem.store(u0, 0, &new);
        if insert.is_some() {
            self.next_timestamp += 1;
        }
        self.len = new_len;
        self.operations += 1;
        for d in &mut self.delta {
            *d -= 1;
        }
        let m = self
            .delta
            .iter()
            .rposition(|&d| d == 0)
            .expect("Δ_0 reaches zero after every operation");
        self.rebuild(m)?;
        Ok(min)
    }

    /// Run the rebuild of levels `0..=m` outside the regular schedule.
    ///
    /// The regular schedule only rebuilds level `m` when `U_{m+1}` is empty;
    /// this must hold here as well. Intended for cost measurements and tests.
    pub fn rebuild_level(&mut self, m: usize) -> Result<(), PqError> {
        if m >= self.levels {
            return Err(PqError::LevelOutOfRange {
                level: m,
                levels: self.levels,
            });
        }
        self.rebuild(m)
    }

    fn rebuild(&mut self, m: usize) -> Result<(), PqError> {
        let last = self.levels - 1;
        let down_m = self.down.slice(0, 2 << m);
        let up_m = self.up.slice(0, 1 << m);
        let mark = self.mem.mark();
        let scratch = self.mem.allocate_span::<Element>(3 << m)?;
        let (head, tail) = scratch.split_at(2 << m);
        self.mem.copy(down_m, head);
        self.mem.copy(up_m, tail);
        if m == last {
            compress_timestamps(&mut self.mem, scratch);
            self.next_timestamp = self.capacity as Word;
        }
        k_select_with(&mut self.mem, scratch, 2 << m, self.backend)?;
        self.mem.copy(head, down_m);
        if m < last {
            let next_up = self.up_level(m + 1);
            debug_assert!(
                self.mem.peek_span(next_up).iter().all(|e| e.dummy),
                "U_{} is not empty before rebuild({m})",
                m + 1
            );
            self.mem.copy(tail, next_up);
            self.mem.fill(up_m, &Element::dummy(0));
        } else {
            self.mem.copy(tail, up_m);
        }
        self.mem.release(mark);
        for i in (0..m).rev() {
            k_select_with(
                &mut self.mem,
                self.down.slice(0, 4 << i),
                2 << i,
                self.backend,
            )?;
        }
        for i in 0..=m {
            self.delta[i] = 1 << i;
            self.rebuilds[i] += 1;
        }
        self.last_rebuild = Some(m);
        Ok(())
    }

    /// Untraced view of every level.
    pub fn snapshot(&self) -> Vec<LevelSnapshot> {
        (0..self.levels)
            .map(|i| LevelSnapshot {
                down: self.mem.peek_span(self.down_level(i)),
                up: self.mem.peek_span(self.up_level(i)),
                delta: self.delta[i],
            })
            .collect()
    }

    /// All stored real elements, untraced.
    pub fn stored(&self) -> Vec<Element> {
        let mut all = self.mem.peek_span(self.down);
        all.extend(self.mem.peek_span(self.up));
        all.retain(|e| e.is_real());
        all
    }

    /// Check the structural invariants against the expected contents
    /// (`(key, priority)` pairs in any order): the stored real elements are
    /// exactly `expected`, `U_0` is empty, every real element on level
    /// `i >= 1` has rank at least `Δ_i`, and timestamps are below `2N`.
    pub fn check_invariants(&self, expected: &[(Word, Word)]) -> Result<(), InvariantViolation> {
        let stored = self.stored();
        let mut have: Vec<_> = stored.iter().filter_map(|e| e.entry()).collect();
        let mut want = expected.to_vec();
        have.sort_unstable();
        want.sort_unstable();
        if have != want {
            return Err(InvariantViolation::Contents);
        }
        if self.mem.peek_record(self.up_level(0), 0).is_real() {
            return Err(InvariantViolation::UpZeroOccupied);
        }
        let mut sorted = stored.clone();
        sorted.sort_unstable();
        let bound = 2 * self.capacity as u64;
        for (i, level) in self.snapshot().into_iter().enumerate() {
            for e in level.down.iter().chain(&level.up).filter(|e| e.is_real()) {
                if e.timestamp >= bound {
                    return Err(InvariantViolation::Timestamp {
                        timestamp: e.timestamp,
                        bound,
                    });
                }
                if i == 0 {
                    continue;
                }
                let rank = sorted.partition_point(|x| x < e);
                if (rank as u64) < level.delta {
                    return Err(InvariantViolation::Rank {
                        level: i,
                        element: *e,
                        rank,
                        delta: level.delta,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Renumber timestamps to `0..len` in timestamp order, real elements first.
pub fn compress_timestamps(mem: &mut Memory, span: Span<Element>) {
    sort_by(mem, span, &|a: &Element, b: &Element| {
        (a.dummy, a.timestamp) > (b.dummy, b.timestamp)
    });
    for i in 0..span.len() {
        let mut e = mem.load(span, i);
        e.timestamp = i as Word;
        mem.store(span, i, &e);
    }
}
