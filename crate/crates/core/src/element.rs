//! Priority-queue elements.

use std::cmp::Ordering;

use crate::memory::{Record, Word};

/// A key/priority pair tagged with its insertion time, or a dummy.
///
/// Elements are totally ordered: every real element precedes every dummy;
/// real elements compare by `(priority, timestamp)`; dummies compare by
/// timestamp. The key breaks any remaining tie so that the order is total on
/// all bit patterns.
///
/// Stored as four words: key, priority, timestamp, dummy flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    pub key: Word,
    pub priority: Word,
    pub timestamp: Word,
    pub dummy: bool,
}

impl Element {
    pub fn new(key: Word, priority: Word, timestamp: Word) -> Self {
        Element {
            key,
            priority,
            timestamp,
            dummy: false,
        }
    }

    /// A dummy carrying `timestamp` as its tie-breaker.
    pub fn dummy(timestamp: Word) -> Self {
        Element {
            key: 0,
            priority: 0,
            timestamp,
            dummy: true,
        }
    }

    pub fn is_real(&self) -> bool {
        !self.dummy
    }

    /// `(key, priority)` of a real element, `None` for a dummy.
    pub fn entry(&self) -> Option<(Word, Word)> {
        (!self.dummy).then_some((self.key, self.priority))
    }

    fn sort_key(&self) -> (bool, Word, Word, Word) {
        if self.dummy {
            (true, 0, self.timestamp, self.key)
        } else {
            (false, self.priority, self.timestamp, self.key)
        }
    }
}

impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Record for Element {
    const WORDS: usize = 4;

    fn encode(&self, out: &mut [Word]) {
        out[0] = self.key;
        out[1] = self.priority;
        out[2] = self.timestamp;
        out[3] = self.dummy as Word;
    }

    fn decode(words: &[Word]) -> Self {
        Element {
            key: words[0],
            priority: words[1],
            timestamp: words[2],
            dummy: words[3] != 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dummies_order_after_reals() {
        let real = Element::new(0, u64::MAX, u64::MAX);
        let dummy = Element::dummy(0);
        assert!(real < dummy);
    }

    #[test]
    fn reals_order_by_priority_then_timestamp() {
        let a = Element::new(9, 1, 5);
        let b = Element::new(0, 1, 6);
        let c = Element::new(0, 2, 0);
        assert!(a < b && b < c);
    }

    #[test]
    fn dummies_order_by_timestamp() {
        assert!(Element::dummy(1) < Element::dummy(2));
        // priority and key of a dummy are ignored
        let mut d = Element::dummy(1);
        d.priority = 100;
        assert!(d < Element::dummy(2));
    }

    #[test]
    fn encode_decode() {
        let e = Element::new(1, 2, 3);
        let mut w = [0; 4];
        e.encode(&mut w);
        assert_eq!(w, [1, 2, 3, 0]);
        assert_eq!(Element::decode(&w), e);
        Element::dummy(7).encode(&mut w);
        assert_eq!(w[3], 1);
    }
}
