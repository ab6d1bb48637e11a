//! External-memory cost model and I/O-efficient oblivious partitioning.

mod cache;
mod experiment;
mod partition;

pub use cache::{
    simulate_io, simulate_stream, BlockStream, BlockTracer, IoError, IoModel, IoStats, Policy,
    CSV_HEADER,
};
pub use experiment::{
    amortize, in_cache_levels, period_total, pq_io_experiment, pq_io_profile, rebuild_frequencies,
    trace_partition, PartitionAlgo, PartitionTrace, PqIoProfile, PqIoReport,
};
pub use partition::{
    agnostic_group_size, cache_agnostic_partition, cache_aware_partition,
    cache_aware_partition_phased, RecursionProfile,
};
