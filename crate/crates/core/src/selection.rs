//! Oblivious k-selection via median of medians.
//!
//! [`k_element`] returns the element of a given rank; [`k_select`] moves the
//! `k` smallest elements to the front. The recursion shape, and therefore the
//! probe trace, depends only on the input length: the rank only steers a
//! conditional inversion and private arithmetic.

use thiserror::Error;

use crate::element::Element;
use crate::memory::{Memory, MemoryError, Span};
use crate::primitives::{cond_invert, partition_with, sort_by, PartitionBackend};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("rank {k} out of range for {n} elements")]
    RankOutOfRange { k: usize, n: usize },
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

/// Length of the prefix the recursion continues on: `floor((7n + 20) / 10)`.
pub fn recursion_length(n: usize) -> usize {
    (7 * n + 20) / 10
}

/// Number of elements cut off when the rank lies in the upper part:
/// `ceil((3n - 20) / 10)`, which equals `n - recursion_length(n)`.
pub fn excluded_length(n: usize) -> usize {
    n - recursion_length(n)
}

fn group_count(n: usize) -> usize {
    n.div_ceil(5)
}

/// The element of rank `k` (0 is the minimum) among pairwise distinct elements.
///
/// `span` is permuted; its multiset is preserved.
pub fn k_element(
    mem: &mut Memory,
    span: Span<Element>,
    k: usize,
) -> Result<Element, SelectionError> {
    k_element_with(mem, span, k, PartitionBackend::SortNetwork)
}

/// [`k_element`] with an explicit partition backend.
pub fn k_element_with(
    mem: &mut Memory,
    span: Span<Element>,
    k: usize,
    backend: PartitionBackend,
) -> Result<Element, SelectionError> {
    let n = span.len();
    if k >= n {
        return Err(SelectionError::RankOutOfRange { k, n });
    }
    rank_k(mem, span, k, backend)
}

fn rank_k(
    mem: &mut Memory,
    span: Span<Element>,
    mut k: usize,
    backend: PartitionBackend,
) -> Result<Element, SelectionError> {
    let n = span.len();
    debug_assert!(k < n);
    if n < 7 {
        sort_by(mem, span, &|a: &Element, b: &Element| a > b);
        return Ok(mem.scan_select(span, k));
    }
    let groups = group_count(n);
    let next = recursion_length(n);
    assert!(
        groups <= next && next < n,
        "median-of-medians recursion does not shrink at n = {n}"
    );

    let mark = mem.mark();
    let medians = mem.allocate_span::<Element>(groups)?;
    for g in 0..groups {
        let start = 5 * g;
        let group = span.slice(start, (n - start).min(5));
        sort_by(mem, group, &|a: &Element, b: &Element| a > b);
        let median = mem.load(group, (group.len() - 1) / 2);
        mem.store(medians, g, &median);
    }
    let pivot = rank_k(mem, medians, groups / 2, backend);
    mem.release(mark);
    let pivot = pivot?;

    partition_with(mem, span, &|x: &Element| *x >= pivot, backend);

    let mut below = 0usize;
    for i in 0..n {
        below += (mem.load(span, i) < pivot) as usize;
    }
    let upper = k >= below;
    cond_invert(mem, span, upper);
    if upper {
        k -= excluded_length(n);
    }
    rank_k(mem, span.slice(0, next), k, backend)
}

/// Permute `span` so that its `k` smallest elements occupy `0..k`.
///
/// Dummy elements are first renumbered by position (their timestamp becomes
/// their index) so that the order is strict; real elements must already be
/// pairwise distinct.
pub fn k_select(mem: &mut Memory, span: Span<Element>, k: usize) -> Result<(), SelectionError> {
    k_select_with(mem, span, k, PartitionBackend::SortNetwork)
}

/// [`k_select`] with an explicit partition backend.
pub fn k_select_with(
    mem: &mut Memory,
    span: Span<Element>,
    k: usize,
    backend: PartitionBackend,
) -> Result<(), SelectionError> {
    let n = span.len();
    if k > n {
        return Err(SelectionError::RankOutOfRange { k, n });
    }
    if n == 0 {
        return Ok(());
    }
    for i in 0..n {
        let mut e = mem.load(span, i);
        if e.dummy {
            e.timestamp = i as u64;
        }
        mem.store(span, i, &e);
    }
    // k = n needs no pivot; the schedule of k = n - 1 is run with a sentinel
    // that no element reaches.
    let pivot = rank_k(mem, span, k.min(n - 1), backend)?;
    let pivot = if k == n {
        Element {
            key: u64::MAX,
            priority: u64::MAX,
            timestamp: u64::MAX,
            dummy: true,
        }
    } else {
        pivot
    };
    partition_with(mem, span, &|x: &Element| *x >= pivot, backend);
    Ok(())
}
