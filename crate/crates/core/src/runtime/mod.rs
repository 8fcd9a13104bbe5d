//! Partitioning and per-step spike exchange between ranks.
//!
//! Columns are dealt round-robin to ranks. Spikes travel as bare source ids;
//! the receiving rank expands them through the synapse table it was given at
//! partition time. Exchange happens every step over a [`Transport`], with
//! empty frames acting as the step barrier.

pub mod exchange;
pub mod frame;
pub mod partition;
pub mod runner;
pub mod transport;

pub use exchange::{Exchanger, DEFAULT_EXCHANGE_TIMEOUT};
pub use frame::{decode_frame, encode_frame, SpikeFrame, FRAME_MAGIC, FRAME_VERSION, HEADER_LEN};
pub use partition::{partition, PartitionMap};
pub use runner::{run_cluster_rank, run_network, run_rank, RankOutcome, RunOutcome, RunSettings, TransportKind};
pub use transport::{
    loopback_listeners, parse_cluster, read_cluster_file, InMemoryTransport, Received, TcpTransport, Transport,
};
