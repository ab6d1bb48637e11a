//! Comparator schedules of the sorting and merging networks.
//!
//! Both schedules are defined for arbitrary `n` as the power-of-two network
//! with every comparator that touches a position `>= n` removed. This is the
//! network obtained by padding the input with `+inf` sentinels: a comparator
//! `(i, j)` with `i < n <= j` would never move anything, so dropping it does
//! not change the result, and the remaining schedule depends on `n` only.
//! Every comparator `(i, j)` has `i < j` and puts the smaller value at `i`.

/// Batcher's odd-even merge sort.
pub fn odd_even_merge_sort(n: usize, mut comparator: impl FnMut(usize, usize)) {
    let mut p = 1;
    while p < n {
        let mut k = p;
        while k >= 1 {
            let mut j = k % p;
            while j + k < n {
                let upper = k.min(n - j - k);
                for i in 0..upper {
                    if (i + j) / (2 * p) == (i + j + k) / (2 * p) {
                        comparator(i + j, i + j + k);
                    }
                }
                j += 2 * k;
            }
            k /= 2;
        }
        p *= 2;
    }
}

/// Bitonic merger: sorts any sequence that is non-increasing then
/// non-decreasing (a "V"), including after `+inf` padding.
pub fn bitonic_merge(n: usize, mut comparator: impl FnMut(usize, usize)) {
    if n < 2 {
        return;
    }
    let mut k = n.next_power_of_two() / 2;
    while k >= 1 {
        for i in 0..n {
            if i & k == 0 && i + k < n {
                comparator(i, i + k);
            }
        }
        k /= 2;
    }
}

/// Number of comparators in [`odd_even_merge_sort`] for `n` inputs.
pub fn sort_comparators(n: usize) -> usize {
    let mut count = 0;
    odd_even_merge_sort(n, |_, _| count += 1);
    count
}
