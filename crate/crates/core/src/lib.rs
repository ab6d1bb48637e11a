//! Perfectly oblivious priority queue, offline ORAM and external-memory
//! oblivious partitioning over a probe-traced memory.
//!
//! All data structures live in a [`Memory`] arena that records every word
//! read and written. A computation is oblivious when its recorded trace
//! depends only on public sizes, which tests check by comparing digests.

pub mod bench;
pub mod element;
pub mod external;
pub mod memory;
pub mod network;
pub mod oram;
pub mod pq;
pub mod primitives;
pub mod selection;
pub mod trace;

pub use element::Element;
pub use memory::{Memory, MemoryError, Record, Region, Span, Word};
pub use oram::{OfflineOram, OpKind, Operation, OramError};
pub use pq::{AccessKind, ObliviousPq, PqError};
pub use primitives::PartitionBackend;
pub use trace::{ProbeEvent, ProbeOp, ProbeTrace, TraceConfig, TraceDigest};
