//! Oblivious partitioning with good cache behaviour.
//!
//! Both algorithms split the input into groups, partition each group, make
//! all but the last two groups pure with [`purify_half`], sort the pure
//! groups by their bit with a network whose comparators exchange whole
//! groups, and finish with two bitonic merges.

use crate::memory::{Memory, Record, Span};
use crate::network;
use crate::primitives::{part_bitonic, partition, purify_half, reverse, Pred};

/// Largest instance handled at each recursion depth of
/// [`cache_agnostic_partition`]; depth 0 is the whole input.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecursionProfile {
    pub max_len: Vec<usize>,
}

impl RecursionProfile {
    fn visit(&mut self, depth: usize, len: usize) {
        if self.max_len.len() <= depth {
            self.max_len.resize(depth + 1, 0);
        }
        self.max_len[depth] = self.max_len[depth].max(len);
    }

    /// First depth whose instances fit in `capacity` words, for records of
    /// `words` words each.
    pub fn first_fitting_depth(&self, capacity: usize, words: usize) -> Option<usize> {
        self.max_len.iter().position(|&len| len * words <= capacity)
    }
}

/// Group size `ceil(n^(1/(1+epsilon)))` of the cache-agnostic recursion.
pub fn agnostic_group_size(n: usize, epsilon: f64) -> usize {
    assert!(epsilon > 0.0, "epsilon must be positive");
    if n <= 1 {
        return n;
    }
    let exponent = 1.0 + epsilon;
    let mut k = (n as f64).powf(1.0 / exponent).ceil() as usize;
    // Guard against rounding on either side of an exact power.
    while k > 1 && ((k - 1) as f64).powf(exponent) >= n as f64 {
        k -= 1;
    }
    while (k as f64).powf(exponent) < n as f64 {
        k += 1;
    }
    k.clamp(1, n)
}

/// Partition with groups of `block` records (one cache block each).
pub fn cache_aware_partition<R: Record>(
    mem: &mut Memory,
    span: Span<R>,
    pred: Pred<'_, R>,
    block: usize,
) {
    aware(mem, span, pred, block, false);
}

/// [`cache_aware_partition`], announcing its phases to attached observers.
pub fn cache_aware_partition_phased<R: Record>(
    mem: &mut Memory,
    span: Span<R>,
    pred: Pred<'_, R>,
    block: usize,
) {
    aware(mem, span, pred, block, true);
}

fn aware<R: Record>(
    mem: &mut Memory,
    span: Span<R>,
    pred: Pred<'_, R>,
    block: usize,
    phases: bool,
) {
    assert!(block >= 1, "block size must be positive");
    let n = span.len();
    let m = n.div_ceil(block);
    if m < 2 {
        partition(mem, span, pred);
        return;
    }
    if phases {
        mem.enter_phase("groups");
    }
    for g in 0..m {
        partition(mem, group(span, block, g), pred);
    }
    combine(mem, span, pred, block, phases);
}

/// Partition recursively with group size `ceil(n^(1/(1+epsilon)))`; the
/// recursion bottoms out at four records.
pub fn cache_agnostic_partition<R: Record>(
    mem: &mut Memory,
    span: Span<R>,
    pred: Pred<'_, R>,
    epsilon: f64,
) -> RecursionProfile {
    let mut profile = RecursionProfile::default();
    agnostic(mem, span, pred, epsilon, 0, &mut profile);
    profile
}

fn agnostic<R: Record>(
    mem: &mut Memory,
    span: Span<R>,
    pred: Pred<'_, R>,
    epsilon: f64,
    depth: usize,
    profile: &mut RecursionProfile,
) {
    let n = span.len();
    profile.visit(depth, n);
    if n <= 4 {
        partition(mem, span, pred);
        return;
    }
    let k = agnostic_group_size(n, epsilon);
    let m = n.div_ceil(k);
    if m < 2 || k == n {
        partition(mem, span, pred);
        return;
    }
    for g in 0..m {
        agnostic(mem, group(span, k, g), pred, epsilon, depth + 1, profile);
    }
    combine(mem, span, pred, k, false);
}

fn group<R: Record>(span: Span<R>, size: usize, g: usize) -> Span<R> {
    let start = g * size;
    span.slice(start, size.min(span.len() - start))
}

/// Shared tail of both algorithms; every group of `span` is partitioned.
fn combine<R: Record>(
    mem: &mut Memory,
    span: Span<R>,
    pred: Pred<'_, R>,
    size: usize,
    phases: bool,
) {
    let n = span.len();
    let m = n.div_ceil(size);
    debug_assert!(m >= 2);
    if phases {
        mem.enter_phase("purify");
    }
    for g in 1..m - 1 {
        purify_half(mem, group(span, size, g - 1), group(span, size, g), pred);
    }
    if phases {
        mem.enter_phase("sort-groups");
    }
    sort_pure_groups(mem, span.slice(0, (m - 2) * size), size, pred);
    if phases {
        mem.enter_phase("merge");
    }
    let tail = span.slice((m - 2) * size, n - (m - 2) * size);
    reverse(mem, group(span, size, m - 1));
    part_bitonic(mem, tail, pred);
    reverse(mem, tail);
    part_bitonic(mem, span, pred);
}

/// Sort pure groups of `size` records by their common bit. Each comparator
/// reads the first record of both groups and conditionally exchanges the
/// groups record by record.
fn sort_pure_groups<R: Record>(mem: &mut Memory, span: Span<R>, size: usize, pred: Pred<'_, R>) {
    let groups = span.len() / size;
    network::odd_even_merge_sort(groups, |x, y| {
        let a = pred(&mem.load(span, x * size));
        let b = pred(&mem.load(span, y * size));
        let swap = a && !b;
        for r in 0..size {
            mem.cond_swap_records(span, x * size + r, y * size + r, swap);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::Word;
    use crate::trace::TraceConfig;

    fn odd(x: &Word) -> bool {
        x & 1 == 1
    }

    fn check(input: &[Word], run: impl Fn(&mut Memory, Span<Word>)) -> Vec<Word> {
        let mut mem = Memory::new(TraceConfig::DIGEST);
        let span = mem.allocate_span::<Word>(input.len()).unwrap();
        mem.poke_span(span, input);
        run(&mut mem, span);
        let out = mem.peek_span(span);
        assert!(
            out.windows(2).all(|w| !(odd(&w[0]) && !odd(&w[1]))),
            "{input:?} -> {out:?}"
        );
        let (mut a, mut b) = (out.clone(), input.to_vec());
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        out
    }

    #[test]
    fn group_sizes() {
        assert_eq!(agnostic_group_size(100, 1.0), 10);
        assert_eq!(agnostic_group_size(101, 1.0), 11);
        assert_eq!(agnostic_group_size(8, 2.0), 2);
        assert_eq!(agnostic_group_size(9, 2.0), 3);
        assert_eq!(agnostic_group_size(5, 1.0), 3);
    }

    #[test]
    fn cache_aware_all_small_inputs() {
        for n in 0..=11usize {
            for bits in 0u32..(1 << n) {
                let input: Vec<Word> = (0..n)
                    .map(|i| (i as Word) << 1 | (bits >> i & 1) as Word)
                    .collect();
                for block in [1, 2, 3, 4] {
                    check(&input, |mem, s| cache_aware_partition(mem, s, &odd, block));
                }
            }
        }
    }

    #[test]
    fn cache_agnostic_all_small_inputs() {
        for n in 0..=11usize {
            for bits in 0u32..(1 << n) {
                let input: Vec<Word> = (0..n)
                    .map(|i| (i as Word) << 1 | (bits >> i & 1) as Word)
                    .collect();
                for eps in [0.5, 1.0, 2.0] {
                    check(&input, |mem, s| {
                        cache_agnostic_partition(mem, s, &odd, eps);
                    });
                }
            }
        }
    }

    #[test]
    fn profile_depths() {
        let mut mem = Memory::default();
        let span = mem.allocate_span::<Word>(100).unwrap();
        let profile = cache_agnostic_partition(&mut mem, span, &odd, 1.0);
        assert_eq!(profile.max_len[..3], [100, 10, 4]);
        assert_eq!(profile.first_fitting_depth(10, 1), Some(1));
    }

    #[test]
    fn traces_depend_on_length_only() {
        for n in [17usize, 64, 100] {
            let digest = |input: Vec<Word>, aware: bool| {
                let mut mem = Memory::new(TraceConfig::DIGEST);
                let span = mem.allocate_span::<Word>(n).unwrap();
                mem.poke_span(span, &input);
                if aware {
                    cache_aware_partition(&mut mem, span, &odd, 4);
                } else {
                    cache_agnostic_partition(&mut mem, span, &odd, 1.0);
                }
                mem.digest().unwrap()
            };
            for aware in [true, false] {
                let zeros = digest(vec![0; n], aware);
                let ones = digest(vec![1; n], aware);
                let mixed = digest((0..n as Word).map(|i| (i * 7 % 3) & 1).collect(), aware);
                assert_eq!(zeros, ones);
                assert_eq!(zeros, mixed);
            }
        }
    }
}
