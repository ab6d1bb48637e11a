//! Seeded random workloads.

use oblivq::oram::Operation;
use oblivq::{AccessKind, Word};
use rand::Rng;

/// Operation-hiding queue operations that never overflow `capacity`.
pub fn pq_sequence<R: Rng>(
    rng: &mut R,
    capacity: usize,
    ops: usize,
) -> Vec<(AccessKind, Word, Word)> {
    let mut len = 0usize;
    (0..ops)
        .map(|t| {
            let kind = match rng.gen_range(0..3) {
                _ if len == capacity => AccessKind::DeleteMinAndMin,
                0 => AccessKind::Min,
                1 => AccessKind::InsertAndMin,
                _ => AccessKind::DeleteMinAndMin,
            };
            match kind {
                AccessKind::InsertAndMin => len += 1,
                AccessKind::DeleteMinAndMin => len = len.saturating_sub(1),
                AccessKind::Min => {}
            }
            (kind, t as Word, rng.gen_range(0..64))
        })
        .collect()
}

/// Uniform reads and writes over `capacity` cells.
pub fn oram_stream<R: Rng>(rng: &mut R, capacity: usize, ops: usize) -> Vec<Operation> {
    (0..ops)
        .map(|_| {
            let index = rng.gen_range(0..capacity);
            if rng.gen_bool(0.5) {
                Operation::read(index)
            } else {
                Operation::write(index, rng.gen_range(0..1 << 20))
            }
        })
        .collect()
}

/// Lower one annotation by one so that two queued cells become due at the
/// same time. Picks the first access `t` whose next access `u = τ_t - 1` is
/// strictly later than `t` and accesses an index already touched before
/// `u`. Returns the 1-based time of the corrupted annotation.
pub fn corrupt_annotation(annotations: &mut [Word], indices: &[usize]) -> Option<usize> {
    let n = indices.len();
    let mut first_access = std::collections::HashMap::new();
    for (t, &i) in indices.iter().enumerate() {
        first_access.entry(i).or_insert(t + 1);
    }
    for t in 1..=n {
        let tau = annotations[t - 1] as usize;
        if tau > n + 1 || tau <= t + 1 {
            continue;
        }
        let u = tau - 1;
        if first_access[&indices[u - 1]] < u {
            annotations[t - 1] -= 1;
            return Some(t);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sequences_respect_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = pq_sequence(&mut rng, 3, 500);
        let mut len = 0i64;
        for (kind, _, _) in seq {
            match kind {
                AccessKind::InsertAndMin => len += 1,
                AccessKind::DeleteMinAndMin => len = (len - 1).max(0),
                AccessKind::Min => {}
            }
            assert!(len <= 3);
        }
    }

    #[test]
    fn corruption_targets_a_collision() {
        // indices [0, 1, 1, 0]: annotations [4, 3, 5, 5]
        let mut taus = vec![4, 3, 5, 5];
        assert_eq!(corrupt_annotation(&mut taus, &[0, 1, 1, 0]), Some(1));
        assert_eq!(taus, vec![3, 3, 5, 5]);
    }
}
