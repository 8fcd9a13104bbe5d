//! Columnar 2D-grid network construction.
//!
//! Neurons are grouped into columns laid out on a `grid_x` x `grid_y` grid
//! with unit spacing. Neuron `n` lives in column `n / neurons_per_column`;
//! columns are numbered row-major. Within a column the first
//! `round(exc_fraction * neurons_per_column)` neurons are excitatory.
//!
//! A source in column `c` connects into column `c'` with probability
//! `p0 * exp(-|c - c'| / decay_lambda)` per candidate target, where `p0` is
//! chosen so the mean fanout over all sources equals `target_fanout`. For each
//! (source, target column) pair the synapse count is binomial over the
//! column population (self excluded) and targets are drawn uniformly with
//! replacement, so a pair may be connected more than once.
//!
//! All draws for a source come from a [`KeyedRng`] stream keyed by
//! `(seed, source)`, so the result does not depend on build order,
//! parallelism or partitioning.

mod snapshot;
mod stats;

pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use stats::NetworkStats;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neuron::{izhikevich_preset, AdaptiveLifParams, IzhikevichKind, NeuronModel};
use crate::rng::{Domain, KeyedRng};

/// Neuron model family used for every neuron of a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelFamily {
    /// Excitatory neurons are RS, inhibitory neurons FS.
    Izhikevich,
    /// Every neuron is an adaptive LIF with the given parameters.
    AdaptiveLif(AdaptiveLifParams),
}

impl ModelFamily {
    pub fn model_for(&self, excitatory: bool) -> NeuronModel {
        match self {
            ModelFamily::Izhikevich => NeuronModel::Izhikevich(izhikevich_preset(if excitatory {
                IzhikevichKind::Rs
            } else {
                IzhikevichKind::Fs
            })),
            ModelFamily::AdaptiveLif(p) => NeuronModel::AdaptiveLif(*p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub grid_x: u32,
    pub grid_y: u32,
    pub neurons_per_column: u32,
    pub exc_fraction: f64,
    /// Mean outgoing internal synapses per neuron.
    pub target_fanout: f64,
    /// Connectivity length scale, in columns.
    pub decay_lambda: f64,
    /// Axonal delay range (ms).
    pub delay_min: f64,
    pub delay_max: f64,
    /// Integration step (ms) used to quantize delays.
    pub dt: f64,
    pub w_exc: f64,
    pub w_inh: f64,
    pub model: ModelFamily,
    pub seed: u64,
}

impl Default for GridSpec {
    /// Desk-scale configuration: 10x10 columns of 100 neurons.
    fn default() -> Self {
        Self {
            grid_x: 10,
            grid_y: 10,
            neurons_per_column: 100,
            exc_fraction: 0.8,
            target_fanout: 1195.0,
            decay_lambda: 2.0,
            delay_min: 1.0,
            delay_max: 20.0,
            dt: 1.0,
            w_exc: 0.05,
            w_inh: 0.8,
            model: ModelFamily::AdaptiveLif(AdaptiveLifParams::default()),
            seed: 1,
        }
    }
}

impl GridSpec {
    pub fn columns(&self) -> usize {
        self.grid_x as usize * self.grid_y as usize
    }

    pub fn total_neurons(&self) -> usize {
        self.columns() * self.neurons_per_column as usize
    }

    pub fn excitatory_per_column(&self) -> u32 {
        (self.exc_fraction * self.neurons_per_column as f64).round() as u32
    }

    pub fn column_of(&self, neuron: u32) -> u32 {
        neuron / self.neurons_per_column
    }

    pub fn is_excitatory(&self, neuron: u32) -> bool {
        neuron % self.neurons_per_column < self.excitatory_per_column()
    }

    pub fn delay_steps_range(&self) -> (u16, u16) {
        (
            (self.delay_min / self.dt).round() as u16,
            (self.delay_max / self.dt).round() as u16,
        )
    }

    /// Euclidean distance between column centers, in grid units.
    pub fn column_distance(&self, a: u32, b: u32) -> f64 {
        let (ax, ay) = (a % self.grid_x, a / self.grid_x);
        let (bx, by) = (b % self.grid_x, b / self.grid_x);
        let dx = ax as f64 - bx as f64;
        let dy = ay as f64 - by as f64;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.grid_x == 0 || self.grid_y == 0 || self.neurons_per_column == 0 {
            problems.push("grid dimensions and neurons_per_column must be >= 1".to_string());
        }
        if self.total_neurons() > u32::MAX as usize {
            problems.push("network exceeds 2^32 neurons".to_string());
        }
        if !(self.exc_fraction > 0.0 && self.exc_fraction < 1.0) {
            problems.push(format!("exc_fraction must be in (0, 1), got {}", self.exc_fraction));
        }
        if !(self.target_fanout >= 0.0) {
            problems.push(format!("target_fanout must be >= 0, got {}", self.target_fanout));
        }
        if !(self.decay_lambda > 0.0) {
            problems.push(format!("decay_lambda must be > 0, got {}", self.decay_lambda));
        }
        if !(self.dt > 0.0) {
            problems.push(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.delay_min >= self.dt) {
            problems.push(format!("delay_min ({}) must be >= dt ({})", self.delay_min, self.dt));
        }
        if !(self.delay_max >= self.delay_min) {
            problems.push(format!(
                "delay_max ({}) must be >= delay_min ({})",
                self.delay_max, self.delay_min
            ));
        }
        if self.dt > 0.0 && self.delay_max / self.dt > u16::MAX as f64 {
            problems.push("delay_max / dt must fit in 16 bits".to_string());
        }
        if !(self.w_exc >= 0.0) {
            problems.push(format!("w_exc must be >= 0, got {}", self.w_exc));
        }
        if !self.w_inh.is_finite() {
            problems.push("w_inh must be finite".to_string());
        }
        match &self.model {
            ModelFamily::Izhikevich => {}
            ModelFamily::AdaptiveLif(p) => {
                if let Err(e) = p.validate() {
                    problems.push(e.to_string());
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }
}

/// One outgoing synapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    /// Global target neuron id.
    pub target: u32,
    /// Efficacy; non-negative for excitatory sources, non-positive for inhibitory.
    pub weight: f64,
    pub delay_steps: u16,
}

/// Precomputed distance kernel with its normalization.
#[derive(Debug, Clone)]
pub struct ConnectivityKernel {
    pub p0: f64,
    decay_lambda: f64,
}

impl ConnectivityKernel {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        Ok(Self {
            p0: normalize_fanout(spec)?,
            decay_lambda: spec.decay_lambda,
        })
    }

    pub fn probability(&self, distance: f64) -> f64 {
        (self.p0 * (-distance / self.decay_lambda).exp()).clamp(0.0, 1.0)
    }
}

/// Connection probability per candidate target at inter-column distance `d`.
pub fn connection_probability(d: f64, spec: &GridSpec) -> Result<f64> {
    Ok(ConnectivityKernel::new(spec)?.probability(d))
}

/// Candidate targets in `target` for a source in `source` column.
fn candidates(spec: &GridSpec, source: u32, target: u32) -> u32 {
    if source == target {
        spec.neurons_per_column - 1
    } else {
        spec.neurons_per_column
    }
}

/// Peak probability `p0` making the source-averaged expected fanout equal
/// `target_fanout`.
pub fn normalize_fanout(spec: &GridSpec) -> Result<f64> {
    spec.validate()?;
    if spec.target_fanout >= spec.total_neurons() as f64 {
        return Err(Error::InfeasibleSpec(format!(
            "target_fanout {} needs at least {} neurons, network has {}",
            spec.target_fanout,
            spec.target_fanout as u64 + 1,
            spec.total_neurons()
        )));
    }
    if spec.target_fanout == 0.0 {
        return Ok(0.0);
    }
    let columns = spec.columns() as u32;
    let mut weighted = 0.0;
    for c in 0..columns {
        for t in 0..columns {
            let k = (-spec.column_distance(c, t) / spec.decay_lambda).exp();
            weighted += k * candidates(spec, c, t) as f64;
        }
    }
    let mean = weighted / columns as f64;
    let p0 = spec.target_fanout / mean;
    if p0 > 1.0 + 1e-12 {
        return Err(Error::InfeasibleSpec(format!(
            "target_fanout {} requires p0 = {p0:.4} > 1 on a {}x{} grid with lambda {}",
            spec.target_fanout, spec.grid_x, spec.grid_y, spec.decay_lambda
        )));
    }
    Ok(p0.min(1.0))
}

/// An immutable network: spec, plus the outgoing synapses of every neuron in
/// compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: GridSpec,
    offsets: Vec<usize>,
    synapses: Vec<Synapse>,
}

impl Network {
    pub(crate) fn from_parts(spec: GridSpec, offsets: Vec<usize>, synapses: Vec<Synapse>) -> Self {
        debug_assert_eq!(offsets.last().copied().unwrap_or(0), synapses.len());
        Self {
            spec,
            offsets,
            synapses,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn neuron_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn synapse_count(&self) -> usize {
        self.synapses.len()
    }

    pub fn outgoing(&self, neuron: u32) -> &[Synapse] {
        let n = neuron as usize;
        &self.synapses[self.offsets[n]..self.offsets[n + 1]]
    }

    pub fn fanout(&self, neuron: u32) -> usize {
        let n = neuron as usize;
        self.offsets[n + 1] - self.offsets[n]
    }

    pub fn is_excitatory(&self, neuron: u32) -> bool {
        self.spec.is_excitatory(neuron)
    }

    pub fn model(&self, neuron: u32) -> NeuronModel {
        self.spec.model.model_for(self.is_excitatory(neuron))
    }

    pub fn mean_fanout(&self) -> f64 {
        if self.neuron_count() == 0 {
            0.0
        } else {
            self.synapse_count() as f64 / self.neuron_count() as f64
        }
    }

    pub fn max_delay_steps(&self) -> u16 {
        self.synapses.iter().map(|s| s.delay_steps).max().unwrap_or(0)
    }

    pub fn stats(&self) -> NetworkStats {
        NetworkStats::collect(self)
    }
}

fn build_source(spec: &GridSpec, kernel: &ConnectivityKernel, source: u32, out: &mut Vec<Synapse>) {
    let npc = spec.neurons_per_column;
    let columns = spec.columns() as u32;
    let src_col = spec.column_of(source);
    let src_local = source % npc;
    let weight = if spec.is_excitatory(source) {
        spec.w_exc
    } else {
        -spec.w_inh.abs()
    };
    let (dmin, dmax) = spec.delay_steps_range();
    let delay_span = (dmax - dmin) as u32 + 1;
    let mut rng = KeyedRng::new(spec.seed, Domain::Connectivity, source as u64, 0);
    for col in 0..columns {
        let n = candidates(spec, src_col, col);
        if n == 0 {
            continue;
        }
        let p = kernel.probability(spec.column_distance(src_col, col));
        let count = rng.binomial(n, p);
        for _ in 0..count {
            let mut local = rng.below(n);
            if col == src_col && local >= src_local {
                local += 1;
            }
            let delay = dmin + rng.below(delay_span) as u16;
            out.push(Synapse {
                target: col * npc + local,
                weight,
                delay_steps: delay,
            });
        }
    }
}

/// Build a network from its spec.
pub fn build_network(spec: &GridSpec) -> Result<Network> {
    build_network_with(spec, true)
}

/// Build with or without thread parallelism; the result is identical.
pub fn build_network_with(spec: &GridSpec, parallel: bool) -> Result<Network> {
    let kernel = ConnectivityKernel::new(spec)?;
    let total = spec.total_neurons() as u32;
    let per_source: Vec<Vec<Synapse>> = if parallel {
        (0..total)
            .into_par_iter()
            .map(|n| {
                let mut v = Vec::new();
                build_source(spec, &kernel, n, &mut v);
                v
            })
            .collect()
    } else {
        (0..total)
            .map(|n| {
                let mut v = Vec::new();
                build_source(spec, &kernel, n, &mut v);
                v
            })
            .collect()
    };
    let mut offsets = Vec::with_capacity(total as usize + 1);
    offsets.push(0);
    let mut len = 0;
    for list in &per_source {
        len += list.len();
        offsets.push(len);
    }
    let mut synapses = Vec::with_capacity(len);
    for list in per_source {
        synapses.extend(list);
    }
    Ok(Network::from_parts(spec.clone(), offsets, synapses))
}

/// Internal synapses plus `ext_per_neuron` modeled external synapses per neuron.
pub fn count_equivalent_synapses(net: &Network, ext_per_neuron: u64) -> u64 {
    net.synapse_count() as u64 + net.neuron_count() as u64 * ext_per_neuron
}
