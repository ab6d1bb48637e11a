//! Probe-count measurements.

use crate::external::period_total;
use crate::memory::Memory;
use crate::pq::{AccessKind, ObliviousPq, PqError};
use crate::primitives::PartitionBackend;
use crate::trace::TraceConfig;

/// Probe costs of a queue's schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeProfile {
    pub capacity: usize,
    /// Probes of an operation excluding its rebuild.
    pub base: u64,
    /// Probes of `rebuild(m)` for each level `m`.
    pub rebuild: Vec<u64>,
    /// Peak arena size in cells.
    pub peak_cells: usize,
}

impl ProbeProfile {
    /// `(operations, probes)` of one full rebuild period.
    pub fn period(&self) -> (u64, u64) {
        let (ops, rebuilds) = period_total(&self.rebuild);
        (ops, ops * self.base + rebuilds)
    }

    /// Probes per operation, averaged over a full rebuild period.
    pub fn amortized(&self) -> f64 {
        let (ops, total) = self.period();
        total as f64 / ops as f64
    }
}

/// Measure one operation and every rebuild level of a queue of capacity `N`.
/// Traces are content-independent, so fresh empty queues suffice.
pub fn pq_probe_profile(
    capacity: usize,
    backend: PartitionBackend,
) -> Result<ProbeProfile, PqError> {
    let mut pq = ObliviousPq::with_memory(Memory::new(TraceConfig::COUNT), capacity, backend)?;
    pq.access(AccessKind::Min, 0, 0)?;
    let first = pq.memory().probes();
    let mut peak_cells = pq.memory().peak_allocated();
    let mut rebuild = Vec::new();
    for m in 0..pq.levels() {
        let mut pq = ObliviousPq::with_memory(Memory::new(TraceConfig::COUNT), capacity, backend)?;
        pq.rebuild_level(m)?;
        rebuild.push(pq.memory().probes());
        peak_cells = peak_cells.max(pq.memory().peak_allocated());
    }
    Ok(ProbeProfile {
        capacity,
        base: first - rebuild[0],
        rebuild,
        peak_cells,
    })
}

/// Total probes of `operations` accesses on a fresh queue, run directly.
pub fn pq_probes_direct(
    capacity: usize,
    operations: u64,
    backend: PartitionBackend,
) -> Result<(u64, usize), PqError> {
    let mut pq = ObliviousPq::with_memory(Memory::new(TraceConfig::COUNT), capacity, backend)?;
    for t in 0..operations {
        let kind = if t % 2 == 0 && pq.len() < capacity {
            AccessKind::InsertAndMin
        } else {
            AccessKind::DeleteMinAndMin
        };
        pq.access(kind, t, t % 17)?;
    }
    Ok((pq.memory().probes(), pq.memory().peak_allocated()))
}

/// Least-squares fit `y = a + b x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    LinearFit {
        intercept,
        slope,
        r_squared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let fit = linear_fit(&xs, &ys);
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_matches_direct_run_over_a_period() {
        for capacity in [2usize, 5, 16, 64, 200] {
            let profile = pq_probe_profile(capacity, PartitionBackend::SortNetwork).unwrap();
            let levels = profile.rebuild.len();
            let period = 1u64 << (levels - 1);
            let (direct, _) =
                pq_probes_direct(capacity, period, PartitionBackend::SortNetwork).unwrap();
            assert_eq!(profile.period(), (period, direct), "N={capacity}");
        }
    }
}
