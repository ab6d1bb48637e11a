//! Deterministic oblivious building blocks over traced spans.
//!
//! Every routine here has a probe trace that depends only on the lengths of
//! its arguments (and, for [`partition_with`], on the chosen backend). Data
//! only ever influences values held in locals.

use crate::element::Element;
use crate::external;
use crate::memory::{Memory, Record, Span};
use crate::network;

/// A predicate over records, evaluated in private registers.
pub type Pred<'a, R> = &'a dyn Fn(&R) -> bool;

/// Which partitioning algorithm [`partition_with`] runs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum PartitionBackend {
    /// Odd-even merge sort on the predicate bit.
    #[default]
    SortNetwork,
    /// Block-wise cache-aware partition with blocks of `block_words` words.
    CacheAware { block_words: usize },
    /// Recursive cache-agnostic partition with group size `n^(1/(1+epsilon))`.
    CacheAgnostic { epsilon: f64 },
    /// Data-dependent two-pointer partition. Not oblivious; negative control.
    Naive,
}

/// Sort `span` so that no adjacent pair satisfies `greater`; exchanges happen
/// exactly when `greater(a, b)` holds for the comparator inputs.
pub fn sort_by<R: Record>(mem: &mut Memory, span: Span<R>, greater: &dyn Fn(&R, &R) -> bool) {
    network::odd_even_merge_sort(span.len(), |i, j| mem.compare_exchange(span, i, j, greater));
}

/// Sort elements ascending under the element order.
pub fn oblivious_sort(mem: &mut Memory, span: Span<Element>) {
    sort_by(mem, span, &|a: &Element, b: &Element| a > b);
}

/// Move every record with `pred = false` in front of every record with
/// `pred = true`, using the sort network.
pub fn partition<R: Record>(mem: &mut Memory, span: Span<R>, pred: Pred<'_, R>) {
    sort_by(mem, span, &|a: &R, b: &R| pred(a) && !pred(b));
}

/// [`partition`] with an explicit backend.
pub fn partition_with<R: Record>(
    mem: &mut Memory,
    span: Span<R>,
    pred: Pred<'_, R>,
    backend: PartitionBackend,
) {
    match backend {
        PartitionBackend::SortNetwork => partition(mem, span, pred),
        PartitionBackend::CacheAware { block_words } => {
            let block = (block_words / R::WORDS).max(1);
            external::cache_aware_partition(mem, span, pred, block);
        }
        PartitionBackend::CacheAgnostic { epsilon } => {
            external::cache_agnostic_partition(mem, span, pred, epsilon);
        }
        PartitionBackend::Naive => naive_partition(mem, span, pred),
    }
}

/// Hoare-style partition whose probes depend on the data.
fn naive_partition<R: Record>(mem: &mut Memory, span: Span<R>, pred: Pred<'_, R>) {
    if span.is_empty() {
        return;
    }
    let (mut lo, mut hi) = (0usize, span.len() - 1);
    while lo < hi {
        if !pred(&mem.load(span, lo)) {
            lo += 1;
        } else if pred(&mem.load(span, hi)) {
            hi -= 1;
        } else {
            mem.cond_swap_records(span, lo, hi, true);
            lo += 1;
            hi -= 1;
        }
    }
}

/// Reverse `span` in place: `len / 2` exchanges with the flag fixed to true.
pub fn reverse<R: Record>(mem: &mut Memory, span: Span<R>) {
    cond_invert(mem, span, true);
}

/// Reverse `span` iff `flag`; the probes are those of [`reverse`] either way.
pub fn cond_invert<R: Record>(mem: &mut Memory, span: Span<R>, flag: bool) {
    let n = span.len();
    for i in 0..n / 2 {
        mem.cond_swap_records(span, i, n - 1 - i, flag);
    }
}

/// Partition a bitonically partitioned span (all `true` records consecutive,
/// or all `false` records consecutive).
///
/// One scan decides privately whether the predicate bits form a `0+ 1+ 0+`
/// hump. The bits (complemented for a hump) then form a V, which a bitonic
/// merger sorts ascending; a conditional inversion fixes the direction for
/// the hump case. If the precondition does not hold the result is some
/// permutation of the input.
pub fn part_bitonic<R: Record>(mem: &mut Memory, span: Span<R>, pred: Pred<'_, R>) {
    let n = span.len();
    if n < 2 {
        return;
    }
    let mut prev = false;
    let mut rose = false;
    let mut hump = false;
    for i in 0..n {
        let bit = pred(&mem.load(span, i));
        if i > 0 {
            rose |= !prev && bit;
            hump |= rose && prev && !bit;
        }
        prev = bit;
    }
    network::bitonic_merge(n, |i, j| {
        mem.compare_exchange(span, i, j, |a, b| (pred(a) ^ hump) && !(pred(b) ^ hump))
    });
    cond_invert(mem, span, hump);
}

/// Given two partitioned spans of equal length, make `a` pure (all `false`
/// or all `true`) and leave `b` partitioned.
///
/// When the predicate bits are split exactly evenly, `a` ends up all `false`.
pub fn purify_half<R: Record>(mem: &mut Memory, a: Span<R>, b: Span<R>, pred: Pred<'_, R>) {
    assert_eq!(a.len(), b.len(), "purify_half needs spans of equal length");
    let n = a.len();
    let mut ones = 0usize;
    for i in 0..n {
        ones += pred(&mem.load(a, i)) as usize;
    }
    for i in 0..n {
        ones += pred(&mem.load(b, i)) as usize;
    }
    let majority_one = ones > n;
    for i in 0..n {
        mem.compare_exchange_between(a, i, b, n - 1 - i, |x, y| pred(x) && !pred(y));
    }
    for i in 0..n {
        mem.cond_swap_between(a, i, b, i, majority_one);
    }
    part_bitonic(mem, b, pred);
}
