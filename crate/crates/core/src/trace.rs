//! Probe events, recorded traces and their digests.
//!
//! Every word-level access to traced memory is reported to a [`Recorder`] as
//! a [`ProbeEvent`]. The recorder always counts events; depending on its
//! [`TraceConfig`] it additionally hashes the serialized event stream,
//! retains the full event log, and forwards batches of events to attached
//! [`ProbeObserver`]s (cache simulators, for instance).
//!
//! Serialization of a single event is 9 bytes: the address as a little-endian
//! `u64` followed by one byte, `0` for a read and `1` for a write. The digest
//! is SHA-256 over the concatenation of all serialized events.

use std::fmt;
use std::io::{self, Write};

use sha2::{Digest, Sha256};

/// Kind of a memory probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ProbeOp {
    Read = 0,
    Write = 1,
}

/// One word-level memory access.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProbeEvent {
    pub address: u64,
    pub op: ProbeOp,
}

impl ProbeEvent {
    #[inline]
    pub(crate) fn pack(self) -> u64 {
        (self.address << 1) | self.op as u64
    }

    #[inline]
    pub fn unpack(packed: u64) -> Self {
        let op = if packed & 1 == 0 {
            ProbeOp::Read
        } else {
            ProbeOp::Write
        };
        ProbeEvent {
            address: packed >> 1,
            op,
        }
    }

    /// The 9-byte wire encoding of this event.
    pub fn to_bytes(self) -> [u8; 9] {
        let mut out = [0u8; 9];
        out[..8].copy_from_slice(&self.address.to_le_bytes());
        out[8] = self.op as u8;
        out
    }
}

/// A SHA-256 digest of a serialized probe sequence.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceDigest(pub [u8; 32]);

impl TraceDigest {
    /// Digest of the empty probe sequence.
    pub fn empty() -> Self {
        TraceDigest(Sha256::new().finalize().into())
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for TraceDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TraceDigest({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for TraceDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// What a [`Recorder`] keeps besides the event counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraceConfig {
    /// Hash the event stream.
    pub digest: bool,
    /// Keep every event in memory.
    pub retain: bool,
}

impl TraceConfig {
    /// Counts only.
    pub const COUNT: TraceConfig = TraceConfig {
        digest: false,
        retain: false,
    };
    /// Counts and digest.
    pub const DIGEST: TraceConfig = TraceConfig {
        digest: true,
        retain: false,
    };
    /// Counts, digest and the full event log.
    pub const FULL: TraceConfig = TraceConfig {
        digest: true,
        retain: true,
    };
}

/// Receives batches of packed probe events as they are flushed from the recorder.
///
/// Events are delivered in order. A phase marker is delivered after all
/// events preceding it have been observed.
pub trait ProbeObserver: Send {
    fn observe(&mut self, events: &[ProbeEvent]);

    fn enter_phase(&mut self, _phase: &str) {}
}

const FLUSH_THRESHOLD: usize = 1 << 14;

/// Collects probe events for one memory arena.
pub struct Recorder {
    config: TraceConfig,
    reads: u64,
    writes: u64,
    pending: Vec<u64>,
    hasher: Sha256,
    retained: Vec<u64>,
    observers: Vec<Box<dyn ProbeObserver>>,
    scratch: Vec<ProbeEvent>,
}

impl fmt::Debug for Recorder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Recorder")
            .field("config", &self.config)
            .field("reads", &self.reads)
            .field("writes", &self.writes)
            .field("observers", &self.observers.len())
            .finish()
    }
}

impl Recorder {
    pub fn new(config: TraceConfig) -> Self {
        Recorder {
            config,
            reads: 0,
            writes: 0,
            pending: Vec::new(),
            hasher: Sha256::new(),
            retained: Vec::new(),
            observers: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn config(&self) -> TraceConfig {
        self.config
    }

    #[inline]
    fn buffering(&self) -> bool {
        self.config.digest || self.config.retain || !self.observers.is_empty()
    }

    #[inline]
    pub(crate) fn record(&mut self, address: u64, op: ProbeOp) {
        match op {
            ProbeOp::Read => self.reads += 1,
            ProbeOp::Write => self.writes += 1,
        }
        if self.buffering() {
            self.pending.push(ProbeEvent { address, op }.pack());
            if self.pending.len() >= FLUSH_THRESHOLD {
                self.flush();
            }
        }
    }

    /// Attach an observer; it sees every event recorded from now on.
    pub fn attach(&mut self, observer: Box<dyn ProbeObserver>) {
        self.flush();
        self.observers.push(observer);
    }

    /// Detach all observers, returning them in attachment order.
    pub fn detach_all(&mut self) -> Vec<Box<dyn ProbeObserver>> {
        self.flush();
        std::mem::take(&mut self.observers)
    }

    /// Notify observers that a new phase of the computation begins.
    pub fn enter_phase(&mut self, phase: &str) {
        self.flush();
        for obs in &mut self.observers {
            obs.enter_phase(phase);
        }
    }

    fn flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        if self.config.digest {
            let mut bytes = Vec::with_capacity(self.pending.len() * 9);
            for &p in &self.pending {
                bytes.extend_from_slice(&ProbeEvent::unpack(p).to_bytes());
            }
            self.hasher.update(&bytes);
        }
        if self.config.retain {
            self.retained.extend_from_slice(&self.pending);
        }
        if !self.observers.is_empty() {
            self.scratch.clear();
            self.scratch
                .extend(self.pending.iter().map(|&p| ProbeEvent::unpack(p)));
            for obs in &mut self.observers {
                obs.observe(&self.scratch);
            }
        }
        self.pending.clear();
    }

    /// Total number of probes recorded so far.
    pub fn len(&self) -> u64 {
        self.reads + self.writes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reads(&self) -> u64 {
        self.reads
    }

    pub fn writes(&self) -> u64 {
        self.writes
    }

    /// Digest of everything recorded so far, without resetting.
    ///
    /// Returns `None` when digesting is disabled.
    pub fn digest(&mut self) -> Option<TraceDigest> {
        if !self.config.digest {
            return None;
        }
        self.flush();
        Some(TraceDigest(self.hasher.clone().finalize().into()))
    }

    /// Close the current trace and start a fresh one with the same configuration.
    /// Observers stay attached.
    pub fn take(&mut self) -> ProbeTrace {
        self.flush();
        let digest = self
            .config
            .digest
            .then(|| TraceDigest(std::mem::take(&mut self.hasher).finalize().into()));
        let events = self
            .config
            .retain
            .then(|| std::mem::take(&mut self.retained));
        let trace = ProbeTrace {
            len: self.len(),
            reads: self.reads,
            digest,
            packed: events,
        };
        self.reads = 0;
        self.writes = 0;
        trace
    }
}

/// A closed probe sequence.
#[derive(Clone, Debug)]
pub struct ProbeTrace {
    len: u64,
    reads: u64,
    digest: Option<TraceDigest>,
    packed: Option<Vec<u64>>,
}

impl PartialEq for ProbeTrace {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len
            && match (self.digest, other.digest) {
                (Some(a), Some(b)) => a == b,
                _ => self.packed.is_some() && self.packed == other.packed,
            }
    }
}

impl ProbeTrace {
    /// Build a trace from an explicit event list (digest and events retained).
    pub fn from_events(events: &[ProbeEvent]) -> Self {
        let mut rec = Recorder::new(TraceConfig::FULL);
        for e in events {
            rec.record(e.address, e.op);
        }
        rec.take()
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn reads(&self) -> u64 {
        self.reads
    }

    pub fn writes(&self) -> u64 {
        self.len - self.reads
    }

    pub fn digest(&self) -> Option<TraceDigest> {
        self.digest
    }

    /// Whether the individual events were retained.
    pub fn has_events(&self) -> bool {
        self.packed.is_some()
    }

    /// Iterate the retained events. Empty if events were not retained.
    pub fn events(&self) -> impl Iterator<Item = ProbeEvent> + '_ {
        self.packed.iter().flatten().map(|&p| ProbeEvent::unpack(p))
    }

    /// Index and the two differing events of the first divergence between
    /// two retained traces. `None` if the retained sequences are identical.
    pub fn first_divergence(
        &self,
        other: &ProbeTrace,
    ) -> Option<(u64, Option<ProbeEvent>, Option<ProbeEvent>)> {
        let mut a = self.events();
        let mut b = other.events();
        let mut idx = 0u64;
        loop {
            match (a.next(), b.next()) {
                (None, None) => return None,
                (x, y) if x != y => return Some((idx, x, y)),
                _ => idx += 1,
            }
        }
    }

    /// Write the binary serialization (9 bytes per event).
    pub fn write_binary<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in self.events() {
            out.write_all(&e.to_bytes())?;
        }
        Ok(())
    }

    /// Write the `seq,address,op` CSV export.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "seq,address,op")?;
        for (seq, e) in self.events().enumerate() {
            writeln!(out, "{},{},{}", seq, e.address, e.op as u8)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_roundtrip() {
        for &(address, op) in &[
            (0, ProbeOp::Read),
            (1, ProbeOp::Write),
            ((1u64 << 62) - 1, ProbeOp::Write),
        ] {
            let e = ProbeEvent { address, op };
            assert_eq!(ProbeEvent::unpack(e.pack()), e);
        }
    }

    #[test]
    fn serialization_is_little_endian_address_then_op() {
        let e = ProbeEvent {
            address: 0x0102,
            op: ProbeOp::Write,
        };
        assert_eq!(e.to_bytes(), [0x02, 0x01, 0, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn digest_matches_direct_hash_of_serialization() {
        let events: Vec<_> = (0..40_000u64)
            .map(|i| ProbeEvent {
                address: i * 7 % 1000,
                op: if i % 3 == 0 {
                    ProbeOp::Write
                } else {
                    ProbeOp::Read
                },
            })
            .collect();
        let trace = ProbeTrace::from_events(&events);
        let mut h = Sha256::new();
        for e in &events {
            h.update(e.to_bytes());
        }
        let expected = TraceDigest(h.finalize().into());
        assert_eq!(trace.digest(), Some(expected));
        assert_eq!(trace.len(), 40_000);
        assert_eq!(trace.events().collect::<Vec<_>>(), events);
    }

    #[test]
    fn empty_trace_digest() {
        let trace = Recorder::new(TraceConfig::DIGEST).take();
        assert_eq!(trace.digest(), Some(TraceDigest::empty()));
        assert!(trace.is_empty());
    }

    #[test]
    fn csv_export() {
        let trace = ProbeTrace::from_events(&[
            ProbeEvent {
                address: 5,
                op: ProbeOp::Read,
            },
            ProbeEvent {
                address: 9,
                op: ProbeOp::Write,
            },
        ]);
        let mut out = Vec::new();
        trace.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "seq,address,op\n0,5,0\n1,9,1\n"
        );
        let mut bin = Vec::new();
        trace.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 18);
    }

    #[test]
    fn first_divergence_reports_index() {
        let a = ProbeTrace::from_events(&[
            ProbeEvent {
                address: 1,
                op: ProbeOp::Read,
            },
            ProbeEvent {
                address: 2,
                op: ProbeOp::Read,
            },
        ]);
        let b = ProbeTrace::from_events(&[
            ProbeEvent {
                address: 1,
                op: ProbeOp::Read,
            },
            ProbeEvent {
                address: 3,
                op: ProbeOp::Read,
            },
        ]);
        let (idx, x, y) = a.first_divergence(&b).unwrap();
        assert_eq!(idx, 1);
        assert_eq!(x.unwrap().address, 2);
        assert_eq!(y.unwrap().address, 3);
        assert!(a.first_divergence(&a).is_none());
        assert_ne!(a, b);
    }
}
