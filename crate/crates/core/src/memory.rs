//! Word-addressed traced memory.
//!
//! A [`Memory`] is a single flat arena of `u64` words. Arrays are carved out of
//! it by a bump allocator with stack discipline ([`Memory::mark`] /
//! [`Memory::release`]), so the address layout is a deterministic function of
//! the allocation sequence. Every word read or written through the arena emits
//! exactly one probe to the arena's [`Recorder`].
//!
//! Private registers are ordinary Rust locals: anything not routed through the
//! arena is invisible to the trace.

use std::marker::PhantomData;

use thiserror::Error;

use crate::trace::{ProbeObserver, ProbeOp, ProbeTrace, Recorder, TraceConfig, TraceDigest};

/// One machine word.
pub type Word = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemoryError {
    #[error(
        "allocation of {requested} cells exceeds the arena limit ({in_use} of {limit} in use)"
    )]
    CapacityExhausted {
        requested: usize,
        in_use: usize,
        limit: usize,
    },
}

/// A contiguous array of words inside a [`Memory`] (a traced array).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    base: usize,
    len: usize,
}

impl Region {
    pub fn base(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn addr(&self, i: usize) -> usize {
        assert!(
            i < self.len,
            "traced access out of bounds: index {i}, length {}",
            self.len
        );
        self.base + i
    }
}

/// A fixed-width value stored in consecutive words.
pub trait Record: Copy + std::fmt::Debug {
    /// Number of words occupied; at most [`MAX_RECORD_WORDS`].
    const WORDS: usize;

    fn encode(&self, out: &mut [Word]);

    fn decode(words: &[Word]) -> Self;
}

pub const MAX_RECORD_WORDS: usize = 8;

impl Record for Word {
    const WORDS: usize = 1;

    fn encode(&self, out: &mut [Word]) {
        out[0] = *self;
    }

    fn decode(words: &[Word]) -> Self {
        words[0]
    }
}

/// A contiguous array of records inside a [`Memory`].
pub struct Span<R> {
    base: usize,
    len: usize,
    _record: PhantomData<fn() -> R>,
}

impl<R> Clone for Span<R> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<R> Copy for Span<R> {}

impl<R> PartialEq for Span<R> {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.len == other.len
    }
}

impl<R> std::fmt::Debug for Span<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Span")
            .field("base", &self.base)
            .field("len", &self.len)
            .finish()
    }
}

impl<R: Record> Span<R> {
    /// Number of records.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Word address of the first record.
    pub fn base(&self) -> usize {
        self.base
    }

    /// The records `start..start + len` as a span of their own.
    pub fn slice(&self, start: usize, len: usize) -> Span<R> {
        assert!(
            start + len <= self.len,
            "sub-span {start}..{} out of bounds for length {}",
            start + len,
            self.len
        );
        Span {
            base: self.base + start * R::WORDS,
            len,
            _record: PhantomData,
        }
    }

    /// Split into `[0, mid)` and `[mid, len)`.
    pub fn split_at(&self, mid: usize) -> (Span<R>, Span<R>) {
        (self.slice(0, mid), self.slice(mid, self.len - mid))
    }

    pub fn region(&self) -> Region {
        Region {
            base: self.base,
            len: self.len * R::WORDS,
        }
    }

    #[inline]
    fn addr(&self, i: usize) -> usize {
        assert!(
            i < self.len,
            "traced access out of bounds: record {i}, length {}",
            self.len
        );
        self.base + i * R::WORDS
    }
}

/// Allocation watermark returned by [`Memory::mark`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mark(usize);

/// The traced memory arena.
#[derive(Debug)]
pub struct Memory {
    cells: Vec<Word>,
    top: usize,
    peak: usize,
    limit: usize,
    align: usize,
    recorder: Recorder,
}

impl Default for Memory {
    fn default() -> Self {
        Memory::new(TraceConfig::COUNT)
    }
}

impl Memory {
    pub fn new(config: TraceConfig) -> Self {
        Memory {
            cells: Vec::new(),
            top: 0,
            peak: 0,
            limit: usize::MAX,
            align: 1,
            recorder: Recorder::new(config),
        }
    }

    /// Limit the arena to `limit` cells in total.
    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    /// Align every allocation's base address to a multiple of `align` words.
    pub fn with_alignment(mut self, align: usize) -> Self {
        assert!(align >= 1);
        self.align = align;
        self
    }

    /// Allocate `len` zeroed cells. Allocation emits no probes.
    pub fn allocate(&mut self, len: usize) -> Result<Region, MemoryError> {
        let base = self.top.div_ceil(self.align) * self.align;
        let end = base
            .checked_add(len)
            .filter(|&end| end <= self.limit)
            .ok_or(MemoryError::CapacityExhausted {
                requested: len,
                in_use: self.top,
                limit: self.limit,
            })?;
        if self.cells.len() < end {
            self.cells.resize(end, 0);
        }
        // Reused cells from released allocations start zeroed as well.
        self.cells[base..end].fill(0);
        self.top = end;
        self.peak = self.peak.max(end);
        Ok(Region { base, len })
    }

    /// Allocate a zeroed array of `len` records.
    pub fn allocate_span<R: Record>(&mut self, len: usize) -> Result<Span<R>, MemoryError> {
        let region = self.allocate(len * R::WORDS)?;
        Ok(Span {
            base: region.base,
            len,
            _record: PhantomData,
        })
    }

    pub fn mark(&self) -> Mark {
        Mark(self.top)
    }

    /// Free every allocation made since `mark`.
    pub fn release(&mut self, mark: Mark) {
        assert!(mark.0 <= self.top, "release of a stale mark");
        self.top = mark.0;
    }

    /// Cells currently allocated.
    pub fn allocated(&self) -> usize {
        self.top
    }

    /// Largest number of cells ever allocated at once.
    pub fn peak_allocated(&self) -> usize {
        self.peak
    }

    pub fn recorder(&self) -> &Recorder {
        &self.recorder
    }

    pub fn recorder_mut(&mut self) -> &mut Recorder {
        &mut self.recorder
    }

    /// Probes recorded in the current trace.
    pub fn probes(&self) -> u64 {
        self.recorder.len()
    }

    pub fn digest(&mut self) -> Option<TraceDigest> {
        self.recorder.digest()
    }

    /// Close the current trace and start a new one.
    pub fn take_trace(&mut self) -> ProbeTrace {
        self.recorder.take()
    }

    pub fn attach(&mut self, observer: Box<dyn ProbeObserver>) {
        self.recorder.attach(observer);
    }

    pub fn enter_phase(&mut self, phase: &str) {
        self.recorder.enter_phase(phase);
    }

    #[inline]
    fn read_addr(&mut self, addr: usize) -> Word {
        self.recorder.record(addr as u64, ProbeOp::Read);
        self.cells[addr]
    }

    #[inline]
    fn write_addr(&mut self, addr: usize, value: Word) {
        self.recorder.record(addr as u64, ProbeOp::Write);
        self.cells[addr] = value;
    }

    /// Read one word (one `Read` probe).
    ///
    /// # Panics
    /// If `i` is out of bounds.
    #[inline]
    pub fn get(&mut self, array: Region, i: usize) -> Word {
        let addr = array.addr(i);
        self.read_addr(addr)
    }

    /// Write one word (one `Write` probe).
    ///
    /// # Panics
    /// If `i` is out of bounds.
    #[inline]
    pub fn set(&mut self, array: Region, i: usize, value: Word) {
        let addr = array.addr(i);
        self.write_addr(addr, value);
    }

    /// Swap `array[i]` and `array[j]` iff `swap`. Always probes
    /// `Read(i), Read(j), Write(i), Write(j)`.
    pub fn cond_swap(&mut self, array: Region, i: usize, j: usize, swap: bool) {
        let (ai, aj) = (array.addr(i), array.addr(j));
        let x = self.read_addr(ai);
        let y = self.read_addr(aj);
        let (x, y) = if swap { (y, x) } else { (x, y) };
        self.write_addr(ai, x);
        self.write_addr(aj, y);
    }

    /// Return `array[secret_index]` while reading every cell in order.
    pub fn linear_scan_select(&mut self, array: Region, secret_index: usize) -> Word {
        assert!(
            secret_index < array.len,
            "secret index {secret_index} out of bounds for length {}",
            array.len
        );
        let mut out = 0;
        for i in 0..array.len {
            let v = self.read_addr(array.base + i);
            if i == secret_index {
                out = v;
            }
        }
        out
    }

    /// Overwrite `array[secret_index]` with `value`, reading and writing back
    /// every cell in order.
    pub fn linear_scan_write(&mut self, array: Region, secret_index: usize, value: Word) {
        assert!(
            secret_index < array.len,
            "secret index {secret_index} out of bounds for length {}",
            array.len
        );
        for i in 0..array.len {
            let addr = array.base + i;
            let old = self.read_addr(addr);
            self.write_addr(addr, if i == secret_index { value } else { old });
        }
    }

    /// Read record `i` (`R::WORDS` read probes, ascending addresses).
    #[inline]
    pub fn load<R: Record>(&mut self, span: Span<R>, i: usize) -> R {
        let addr = span.addr(i);
        let mut buf = [0; MAX_RECORD_WORDS];
        for (w, slot) in buf[..R::WORDS].iter_mut().enumerate() {
            *slot = self.read_addr(addr + w);
        }
        R::decode(&buf[..R::WORDS])
    }

    /// Write record `i` (`R::WORDS` write probes, ascending addresses).
    #[inline]
    pub fn store<R: Record>(&mut self, span: Span<R>, i: usize, value: &R) {
        let addr = span.addr(i);
        let mut buf = [0; MAX_RECORD_WORDS];
        value.encode(&mut buf[..R::WORDS]);
        for (w, &word) in buf[..R::WORDS].iter().enumerate() {
            self.write_addr(addr + w, word);
        }
    }

    /// Load records `i` and `j`, let `decide` choose whether to exchange them,
    /// and store both back. The probe pattern is `load(i), load(j), store(i),
    /// store(j)` whatever `decide` returns.
    #[inline]
    pub fn compare_exchange<R: Record>(
        &mut self,
        span: Span<R>,
        i: usize,
        j: usize,
        decide: impl FnOnce(&R, &R) -> bool,
    ) {
        let a = self.load(span, i);
        let b = self.load(span, j);
        let (a, b) = if decide(&a, &b) { (b, a) } else { (a, b) };
        self.store(span, i, &a);
        self.store(span, j, &b);
    }

    /// Exchange records `i` and `j` iff `swap`, with a fixed probe pattern.
    #[inline]
    pub fn cond_swap_records<R: Record>(&mut self, span: Span<R>, i: usize, j: usize, swap: bool) {
        self.compare_exchange(span, i, j, |_, _| swap);
    }

    /// [`Memory::compare_exchange`] between record `i` of `a` and record `j` of `b`.
    #[inline]
    pub fn compare_exchange_between<R: Record>(
        &mut self,
        a: Span<R>,
        i: usize,
        b: Span<R>,
        j: usize,
        decide: impl FnOnce(&R, &R) -> bool,
    ) {
        let x = self.load(a, i);
        let y = self.load(b, j);
        let (x, y) = if decide(&x, &y) { (y, x) } else { (x, y) };
        self.store(a, i, &x);
        self.store(b, j, &y);
    }

    /// Exchange record `i` of `a` with record `j` of `b` iff `swap`.
    #[inline]
    pub fn cond_swap_between<R: Record>(
        &mut self,
        a: Span<R>,
        i: usize,
        b: Span<R>,
        j: usize,
        swap: bool,
    ) {
        self.compare_exchange_between(a, i, b, j, |_, _| swap);
    }

    /// Copy `src` into `dst` record by record (`load(i), store(i)` for each `i`).
    pub fn copy<R: Record>(&mut self, src: Span<R>, dst: Span<R>) {
        assert_eq!(src.len, dst.len, "copy between spans of different length");
        for i in 0..src.len {
            let r = self.load(src, i);
            self.store(dst, i, &r);
        }
    }

    /// Overwrite every record of `span` with `value`.
    pub fn fill<R: Record>(&mut self, span: Span<R>, value: &R) {
        for i in 0..span.len {
            self.store(span, i, value);
        }
    }

    /// Return record `secret_index`, loading every record in order.
    pub fn scan_select<R: Record>(&mut self, span: Span<R>, secret_index: usize) -> R {
        assert!(
            secret_index < span.len,
            "secret index {secret_index} out of bounds for length {}",
            span.len
        );
        let mut out = None;
        for i in 0..span.len {
            let r = self.load(span, i);
            if i == secret_index {
                out = Some(r);
            }
        }
        out.expect("span is non-empty")
    }

    /// Read a word without emitting a probe. For instrumentation and test
    /// oracles only; algorithms never call this.
    pub fn peek(&self, array: Region, i: usize) -> Word {
        self.cells[array.addr(i)]
    }

    /// Read a record without emitting probes (instrumentation only).
    pub fn peek_record<R: Record>(&self, span: Span<R>, i: usize) -> R {
        let addr = span.addr(i);
        R::decode(&self.cells[addr..addr + R::WORDS])
    }

    /// All records of `span`, read without probes (instrumentation only).
    pub fn peek_span<R: Record>(&self, span: Span<R>) -> Vec<R> {
        (0..span.len).map(|i| self.peek_record(span, i)).collect()
    }

    /// Write records without emitting probes. Used by test fixtures to set up
    /// inputs before the traced computation starts.
    pub fn poke_span<R: Record>(&mut self, span: Span<R>, values: &[R]) {
        assert_eq!(values.len(), span.len);
        for (i, v) in values.iter().enumerate() {
            let addr = span.addr(i);
            v.encode(&mut self.cells[addr..addr + R::WORDS]);
        }
    }
}
