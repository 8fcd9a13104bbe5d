//! A distributed, clock-driven spiking network benchmark.
//!
//! The crate builds columnar networks of Izhikevich or adaptive LIF neurons,
//! simulates them over any number of ranks with bit-identical results, counts
//! every synaptic event, and turns measured electrical readings into energy
//! per synaptic event.

// Validation uses `!(x > lo)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod energy;
pub mod engine;
pub mod error;
pub mod network;
pub mod neuron;
pub mod plasticity;
pub mod rng;
pub mod runtime;
pub mod session;

pub use engine::{
    expected_event_count, poisson_external, DelayRing, Engine, EngineConfig, LocalSynapse, RunMetrics, SpikeRecord,
    StimulusSpec, Subnetwork,
};
pub use error::{Error, FrameError, Result};
pub use network::{build_network, count_equivalent_synapses, GridSpec, ModelFamily, Network, Synapse};
pub use neuron::{
    izhikevich_preset, step_adaptive_lif, step_izhikevich, AdaptiveLifParams, IzhikevichKind, IzhikevichParams,
    NeuronModel, NeuronState,
};
pub use plasticity::{apply_stdp, stdp_delta_w, StdpParams};
pub use runtime::{partition, run_network, PartitionMap, RunOutcome, RunSettings, TransportKind};
pub use config::{RunConfig, RasterFormat, PowerInputs};
pub use session::{calibrate_config, run_config, run_config_rank, RunReport};
