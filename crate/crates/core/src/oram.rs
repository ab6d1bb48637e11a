//! Offline ORAM by time-forward processing.
//!
//! Knowing every accessed index in advance, each access is annotated with the
//! time `τ` at which its index is accessed next. The current value of a cell
//! then travels through an oblivious priority queue keyed by `τ`: at time `t`
//! the minimum has priority `t` exactly when the cell was touched before.

use std::io::{Read, Write};

use thiserror::Error;

use crate::memory::{Memory, MemoryError, Record, Word};
use crate::pq::{ObliviousPq, PqError};
use crate::primitives::{sort_by, PartitionBackend};
use crate::trace::TraceConfig;

#[derive(Debug, Error)]
pub enum OramError {
    #[error("index {index} at time {t} out of range for capacity {capacity}")]
    IndexOutOfRange {
        t: usize,
        index: usize,
        capacity: usize,
    },
    #[error("annotation inconsistent at time {t}: queue minimum is due at {due}")]
    InconsistentAnnotation { t: u64, due: u64 },
    #[error("no annotation left for time {0}")]
    AnnotationsExhausted(u64),
    #[error("annotation {tau} at time {t} is not in the future")]
    InvalidAnnotation { t: u64, tau: u64 },
    #[error(transparent)]
    Queue(#[from] PqError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("malformed operation at line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Read,
    Write,
}

/// One access of the offline sequence; `value` is ignored for reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Operation {
    pub kind: OpKind,
    pub index: usize,
    pub value: Word,
}

impl Operation {
    pub fn read(index: usize) -> Self {
        Operation {
            kind: OpKind::Read,
            index,
            value: 0,
        }
    }

    pub fn write(index: usize, value: Word) -> Self {
        Operation {
            kind: OpKind::Write,
            index,
            value,
        }
    }
}

/// Record used by preprocessing: accessed index, access time, next access
/// time, and whether the record belongs to the carried-over block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Annotation {
    index: Word,
    time: Word,
    next: Word,
    carried: bool,
}

impl Record for Annotation {
    const WORDS: usize = 4;

    fn encode(&self, out: &mut [Word]) {
        out[0] = self.index;
        out[1] = self.time;
        out[2] = self.next;
        out[3] = self.carried as Word;
    }

    fn decode(words: &[Word]) -> Self {
        Annotation {
            index: words[0],
            time: words[1],
            next: words[2],
            carried: words[3] != 0,
        }
    }
}

fn check_indices(indices: &[usize], capacity: usize) -> Result<(), OramError> {
    match indices.iter().position(|&i| i >= capacity) {
        Some(t) => Err(OramError::IndexOutOfRange {
            t: t + 1,
            index: indices[t],
            capacity,
        }),
        None => Ok(()),
    }
}

/// Next-access annotations: `τ_t` is the first `t' > t` (1-based) with the
/// same index, or `n + 1`.
///
/// Sorts all `n` accesses by `(index, time)`, fills in successors with one
/// backward scan, and sorts back by time.
pub fn preprocess(
    mem: &mut Memory,
    indices: &[usize],
    capacity: usize,
) -> Result<Vec<Word>, OramError> {
    check_indices(indices, capacity)?;
    let n = indices.len();
    let sentinel = n as Word + 1;
    let mark = mem.mark();
    let span = mem.allocate_span::<Annotation>(n)?;
    for (t, &i) in indices.iter().enumerate() {
        let record = Annotation {
            index: i as Word,
            time: t as Word + 1,
            next: 0,
            carried: false,
        };
        mem.store(span, t, &record);
    }
    sort_by(mem, span, &|a: &Annotation, b: &Annotation| {
        (a.index, a.time) > (b.index, b.time)
    });
    let mut following = (Word::MAX, sentinel);
    for p in (0..n).rev() {
        let mut r = mem.load(span, p);
        r.next = if r.index == following.0 {
            following.1
        } else {
            sentinel
        };
        following = (r.index, r.time);
        mem.store(span, p, &r);
    }
    sort_by(mem, span, &|a: &Annotation, b: &Annotation| a.time > b.time);
    let taus = (0..n).map(|t| mem.load(span, t).next).collect();
    mem.release(mark);
    Ok(taus)
}

/// [`preprocess`] in blocks of `capacity` accesses, last block first, with
/// working memory independent of `n`.
///
/// A carried block holds, per index, the time of its next access after the
/// current block. Each block is sorted together with it, annotated by a
/// backward scan, and the carried times are moved to each index's first
/// access within the block by a forward scan.
pub fn preprocess_blocked(
    mem: &mut Memory,
    indices: &[usize],
    capacity: usize,
) -> Result<Vec<Word>, OramError> {
    check_indices(indices, capacity)?;
    let n = indices.len();
    let sentinel = n as Word + 1;
    let mark = mem.mark();
    let carried = mem.allocate_span::<Annotation>(capacity)?;
    let work = mem.allocate_span::<Annotation>(2 * capacity)?;
    for j in 0..capacity {
        let record = Annotation {
            index: j as Word,
            time: sentinel,
            next: 0,
            carried: true,
        };
        mem.store(carried, j, &record);
    }
    let mut taus = vec![0; n];
    for start in (0..n).step_by(capacity.max(1)).rev() {
        let len = capacity.min(n - start);
        let w = work.slice(0, len + capacity);
        for q in 0..len {
            let record = Annotation {
                index: indices[start + q] as Word,
                time: (start + q) as Word + 1,
                next: 0,
                carried: false,
            };
            mem.store(w, q, &record);
        }
        mem.copy(carried, w.slice(len, capacity));
        sort_by(mem, w, &|a: &Annotation, b: &Annotation| {
            (a.index, a.time, a.carried) > (b.index, b.time, b.carried)
        });
        let mut following = (Word::MAX, sentinel);
        for p in (0..w.len()).rev() {
            let mut r = mem.load(w, p);
            if !r.carried {
                r.next = if r.index == following.0 {
                    following.1
                } else {
                    sentinel
                };
            }
            following = (r.index, r.time);
            mem.store(w, p, &r);
        }
        let mut first = (Word::MAX, sentinel);
        for p in 0..w.len() {
            let mut r = mem.load(w, p);
            if r.index != first.0 {
                first = (r.index, r.time);
            }
            if r.carried {
                r.time = first.1;
            }
            mem.store(w, p, &r);
        }
        sort_by(mem, w, &|a: &Annotation, b: &Annotation| {
            (a.carried, a.time) > (b.carried, b.time)
        });
        for q in 0..len {
            taus[start + q] = mem.load(w, q).next;
        }
        mem.copy(w.slice(len, capacity), carried);
    }
    mem.release(mark);
    Ok(taus)
}

/// Next-access annotations by direct search; quadratic, for testing.
pub fn next_access_naive(indices: &[usize]) -> Vec<Word> {
    let n = indices.len();
    (0..n)
        .map(|t| {
            (t + 1..n)
                .find(|&u| indices[u] == indices[t])
                .map_or(n as Word + 1, |u| u as Word + 1)
        })
        .collect()
}

/// Online phase over precomputed annotations.
#[derive(Debug)]
pub struct OfflineOram {
    queue: ObliviousPq,
    annotations: Vec<Word>,
    time: u64,
    default: Word,
}

impl OfflineOram {
    pub fn new(capacity: usize, annotations: Vec<Word>, default: Word) -> Result<Self, OramError> {
        Self::with_memory(
            Memory::new(TraceConfig::DIGEST),
            capacity,
            annotations,
            default,
            PartitionBackend::SortNetwork,
        )
    }

    pub fn with_memory(
        mem: Memory,
        capacity: usize,
        annotations: Vec<Word>,
        default: Word,
        backend: PartitionBackend,
    ) -> Result<Self, OramError> {
        let queue = ObliviousPq::with_memory(mem, capacity, backend)?;
        Ok(OfflineOram {
            queue,
            annotations,
            time: 1,
            default,
        })
    }

    /// Time of the next access (1-based).
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn queue(&self) -> &ObliviousPq {
        &self.queue
    }

    pub fn into_memory(self) -> Memory {
        self.queue.into_memory()
    }

    /// Perform the next access. Reads return the cell's value (the default
    /// if never written); writes return the written value. The index is only
    /// range-checked: the annotation alone routes the value.
    pub fn access(&mut self, kind: OpKind, index: usize, value: Word) -> Result<Word, OramError> {
        let t = self.time;
        let capacity = self.queue.capacity();
        if index >= capacity {
            return Err(OramError::IndexOutOfRange {
                t: t as usize,
                index,
                capacity,
            });
        }
        let tau = *self
            .annotations
            .get(t as usize - 1)
            .ok_or(OramError::AnnotationsExhausted(t))?;
        if tau <= t {
            return Err(OramError::InvalidAnnotation { t, tau });
        }
        let default = self.default;
        let mut result = 0;
        let mut due = Word::MAX;
        let outcome = self.queue.combined(|min| {
            let (v, next) = min.map_or((0, Word::MAX), |e| (e.key, e.priority));
            due = next;
            let hit = next == t;
            result = match kind {
                OpKind::Read if hit => v,
                OpKind::Read => default,
                OpKind::Write => value,
            };
            (hit, Some((result, tau)))
        });
        self.time += 1;
        if due < t {
            return Err(OramError::InconsistentAnnotation { t, due });
        }
        outcome?;
        Ok(result)
    }
}

/// Options for [`run_with`].
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub default: Word,
    /// Use blocked preprocessing when `n > threshold`; `None` means `N^2`.
    pub blocked_threshold: Option<usize>,
    pub backend: PartitionBackend,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            default: 0,
            blocked_threshold: None,
            backend: PartitionBackend::SortNetwork,
        }
    }
}

/// `(time, value)` of every read, in order.
pub type ReadResults = Vec<(u64, Word)>;

/// Preprocess and replay `ops` on a capacity-`N` ORAM.
pub fn run(ops: &[Operation], capacity: usize) -> Result<ReadResults, OramError> {
    let mut mem = Memory::new(TraceConfig::DIGEST);
    run_with(&mut mem, ops, capacity, RunOptions::default())
}

/// [`run`] in a caller-provided arena, so that the whole computation is
/// traced in one recorder.
pub fn run_with(
    mem: &mut Memory,
    ops: &[Operation],
    capacity: usize,
    options: RunOptions,
) -> Result<ReadResults, OramError> {
    let indices: Vec<usize> = ops.iter().map(|op| op.index).collect();
    let annotations = annotate(mem, &indices, capacity, options.blocked_threshold)?;
    replay(mem, ops, capacity, annotations, options)
}

/// Next-access annotations, blocked when `n` exceeds the threshold
/// (default `N^2`).
pub fn annotate(
    mem: &mut Memory,
    indices: &[usize],
    capacity: usize,
    blocked_threshold: Option<usize>,
) -> Result<Vec<Word>, OramError> {
    let threshold = blocked_threshold.unwrap_or(capacity.saturating_mul(capacity));
    if indices.len() > threshold {
        preprocess_blocked(mem, indices, capacity)
    } else {
        preprocess(mem, indices, capacity)
    }
}

/// Replay `ops` with the given annotations.
pub fn replay(
    mem: &mut Memory,
    ops: &[Operation],
    capacity: usize,
    annotations: Vec<Word>,
    options: RunOptions,
) -> Result<ReadResults, OramError> {
    let arena = std::mem::take(mem);
    let mut oram = OfflineOram::with_memory(
        arena,
        capacity,
        annotations,
        options.default,
        options.backend,
    )?;
    let mut reads = Vec::new();
    let mut outcome = Ok(());
    for op in ops {
        match oram.access(op.kind, op.index, op.value) {
            Ok(v) => {
                if op.kind == OpKind::Read {
                    reads.push((oram.time() - 1, v));
                }
            }
            Err(e) => {
                outcome = Err(e);
                break;
            }
        }
    }
    *mem = oram.into_memory();
    outcome.map(|()| reads)
}

/// Read an operation stream in CSV form `op,index,value` (`op` is `R` or
/// `W`; a header row is optional).
pub fn read_operations<R: Read>(input: R) -> Result<Vec<Operation>, OramError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut ops = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        if row == 0 && field(0) == "op" {
            continue;
        }
        let bad = |reason: String| OramError::Parse { line, reason };
        let kind = match field(0) {
            "R" | "r" => OpKind::Read,
            "W" | "w" => OpKind::Write,
            other => return Err(bad(format!("unknown op `{other}`"))),
        };
        let index = field(1)
            .parse()
            .map_err(|_| bad(format!("bad index `{}`", field(1))))?;
        let value = match (kind, field(2)) {
            (OpKind::Read, "") => 0,
            (_, v) => v.parse().map_err(|_| bad(format!("bad value `{v}`")))?,
        };
        ops.push(Operation { kind, index, value });
    }
    Ok(ops)
}

pub fn write_operations<W: Write>(out: W, ops: &[Operation]) -> Result<(), OramError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["op", "index", "value"])?;
    for op in ops {
        let kind = match op.kind {
            OpKind::Read => "R",
            OpKind::Write => "W",
        };
        writer.write_record([kind, &op.index.to_string(), &op.value.to_string()])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Write read results as CSV `t,value`.
pub fn write_results<W: Write>(out: W, results: &[(u64, Word)]) -> Result<(), OramError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["t", "value"])?;
    for (t, v) in results {
        writer.write_record([t.to_string(), v.to_string()])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let mut mem = Memory::default();
        assert_eq!(preprocess(&mut mem, &[2, 0, 2], 3).unwrap(), vec![3, 4, 4]);
        assert_eq!(
            preprocess_blocked(&mut mem, &[2, 0, 2], 3).unwrap(),
            vec![3, 4, 4]
        );
        assert_eq!(next_access_naive(&[2, 0, 2]), vec![3, 4, 4]);
    }

    #[test]
    fn distinct_and_repeated() {
        let mut mem = Memory::default();
        assert_eq!(preprocess(&mut mem, &[0, 1, 2, 3], 4).unwrap(), vec![5; 4]);
        let zeros = vec![0; 9];
        let expected: Vec<Word> = (2..=10).collect();
        assert_eq!(preprocess_blocked(&mut mem, &zeros, 2).unwrap(), expected);
        assert_eq!(preprocess(&mut mem, &zeros, 2).unwrap(), expected);
    }

    #[test]
    fn rejects_out_of_range_index() {
        let mut mem = Memory::default();
        assert!(matches!(
            preprocess(&mut mem, &[0, 5], 4),
            Err(OramError::IndexOutOfRange { t: 2, index: 5, .. })
        ));
    }

    #[test]
    fn basic_runs() {
        assert_eq!(
            run(&[Operation::write(1, 9), Operation::read(1)], 4).unwrap(),
            vec![(2, 9)]
        );
        assert_eq!(
            run(&[Operation::read(0), Operation::read(3)], 4).unwrap(),
            vec![(1, 0), (2, 0)]
        );
        let mut oram = OfflineOram::new(4, vec![3, 4, 5], 7).unwrap();
        assert_eq!(oram.access(OpKind::Read, 0, 0).unwrap(), 7);
    }

    #[test]
    fn write_then_read() {
        let ops = [Operation::write(3, 42), Operation::read(3)];
        let reads = run(&ops, 8).unwrap();
        assert_eq!(reads, vec![(2, 42)]);
    }

    #[test]
    fn detects_corrupted_annotation() {
        // indices [0, 1, 1, 0] have annotations [4, 3, 5, 5]; the first is
        // lowered by one so that two queued cells are due at time 3
        let mut oram = OfflineOram::new(2, vec![3, 3, 5, 5], 0).unwrap();
        oram.access(OpKind::Write, 0, 1).unwrap();
        oram.access(OpKind::Read, 1, 0).unwrap();
        oram.access(OpKind::Read, 1, 0).unwrap();
        assert!(matches!(
            oram.access(OpKind::Read, 0, 0),
            Err(OramError::InconsistentAnnotation { t: 4, due: 3 })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let ops = vec![Operation::write(1, 9), Operation::read(1)];
        let mut buf = Vec::new();
        write_operations(&mut buf, &ops).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "op,index,value\nW,1,9\nR,1,0\n"
        );
        assert_eq!(read_operations(&buf[..]).unwrap(), ops);
        assert_eq!(
            read_operations("R,2\n".as_bytes()).unwrap(),
            vec![Operation::read(2)]
        );
        assert!(matches!(
            read_operations("X,1,1\n".as_bytes()),
            Err(OramError::Parse { line: 1, .. })
        ));
        let mut out = Vec::new();
        write_results(&mut out, &[(2, 9)]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t,value\n2,9\n");
    }
}
