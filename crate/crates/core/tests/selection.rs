mod common;

use common::{digest_memory, load_elements, rng};
use oblivq::selection::{k_element, k_element_with, k_select, SelectionError};
use oblivq::{Element, Memory, PartitionBackend};
use proptest::prelude::*;
use rand::Rng;

fn sorted_elements(priorities: &[u64]) -> Vec<Element> {
    let mut v: Vec<_> = priorities
        .iter()
        .enumerate()
        .map(|(i, &p)| Element::new(i as u64, p, i as u64))
        .collect();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn k_element_matches_sort(priorities in proptest::collection::vec(0u64..50, 1..120), pick in any::<proptest::sample::Index>()) {
        let k = pick.index(priorities.len());
        let mut mem = Memory::default();
        let span = load_elements(&mut mem, &priorities);
        prop_assert_eq!(k_element(&mut mem, span, k).unwrap(), sorted_elements(&priorities)[k]);
    }

    #[test]
    fn k_select_keeps_smallest(priorities in proptest::collection::vec(0u64..50, 0..120), pick in any::<proptest::sample::Index>()) {
        let k = pick.index(priorities.len() + 1);
        let mut mem = Memory::default();
        let span = load_elements(&mut mem, &priorities);
        k_select(&mut mem, span, k).unwrap();
        let mut prefix = mem.peek_span(span);
        prefix.truncate(k);
        prefix.sort_unstable();
        prop_assert_eq!(prefix, sorted_elements(&priorities)[..k].to_vec());
    }
}

#[test]
fn every_backend_selects_correctly() {
    let mut r = rng(11);
    let backends = [
        PartitionBackend::SortNetwork,
        PartitionBackend::CacheAware { block_words: 8 },
        PartitionBackend::CacheAgnostic { epsilon: 1.0 },
        PartitionBackend::Naive,
    ];
    for _ in 0..30 {
        let n = r.gen_range(1..200);
        let priorities: Vec<u64> = (0..n).map(|_| r.gen_range(0..100)).collect();
        let k = r.gen_range(0..n);
        let want = sorted_elements(&priorities)[k];
        for backend in backends {
            let mut mem = Memory::default();
            let span = load_elements(&mut mem, &priorities);
            assert_eq!(k_element_with(&mut mem, span, k, backend).unwrap(), want);
        }
    }
}

#[test]
fn trace_independent_of_rank_and_data() {
    let mut r = rng(5);
    for n in [7usize, 30, 101] {
        let mut reference = None;
        for k in 0..n {
            let priorities: Vec<u64> = (0..n).map(|_| r.gen_range(0..10)).collect();
            let mut mem = digest_memory();
            let span = load_elements(&mut mem, &priorities);
            k_element(&mut mem, span, k).unwrap();
            let d = mem.digest().unwrap();
            assert_eq!(*reference.get_or_insert(d), d, "n = {n}, k = {k}");
        }
    }
}

#[test]
fn empty_input() {
    let mut mem = Memory::default();
    let span = load_elements(&mut mem, &[]);
    assert_eq!(
        k_element(&mut mem, span, 0),
        Err(SelectionError::RankOutOfRange { k: 0, n: 0 })
    );
    assert!(k_select(&mut mem, span, 0).is_ok());
}
