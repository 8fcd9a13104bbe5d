//! Per-rank clock-driven simulation loop.
//!
//! Each step an [`Engine`] drains the current delay-ring slot into the input
//! of every local neuron, adds the aggregated Poisson external stimulus,
//! integrates neurons in ascending id order and collects spikes. Delivery
//! then takes the step's local and remote spikes merged in ascending source
//! id order and expands them through the synapse table held by this rank.
//! Because every rank stores all synapses that target its neurons, and the
//! delivery order is the global id order, floating-point accumulation is
//! identical for any rank count.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::network::GridSpec;
use crate::neuron::{NeuronModel, NeuronState};
use crate::plasticity::{StdpParams, StdpTraces};
use crate::rng::{Domain, KeyedRng};

/// Modeled external input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StimulusSpec {
    pub ext_synapses_per_neuron: u32,
    /// Per-synapse Poisson rate (Hz).
    pub ext_rate_hz: f64,
    /// Efficacy of one external event.
    pub ext_weight: f64,
}

impl Default for StimulusSpec {
    fn default() -> Self {
        Self {
            ext_synapses_per_neuron: 594,
            ext_rate_hz: 3.0,
            ext_weight: 0.8,
        }
    }
}

impl StimulusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ext_rate_hz >= 0.0 && self.ext_weight.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "stimulus rate must be >= 0 and weight finite: {self:?}"
            )))
        }
    }

    /// Mean external events per neuron per step.
    pub fn mean_per_step(&self, dt: f64) -> f64 {
        self.ext_synapses_per_neuron as f64 * self.ext_rate_hz * dt / 1000.0
    }
}

/// Number of external events arriving at `neuron` during `step`.
pub fn poisson_external(neuron: u32, step: u32, stim: &StimulusSpec, dt: f64, seed: u64) -> u64 {
    let mean = stim.mean_per_step(dt);
    if mean <= 0.0 {
        return 0;
    }
    KeyedRng::new(seed, Domain::Stimulus, neuron as u64, step as u64).poisson(mean)
}

/// A synapse as stored on the receiving rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSynapse {
    /// Index into the rank's local neuron list.
    pub target: u32,
    pub weight: f64,
    pub delay_steps: u16,
}

/// Circular buffer of future input, one accumulator per local neuron per slot.
#[derive(Debug, Clone)]
pub struct DelayRing {
    slots: usize,
    neurons: usize,
    acc: Vec<f64>,
    step: u32,
}

impl DelayRing {
    /// A ring able to hold delays up to `max_delay_steps`.
    pub fn new(max_delay_steps: u16, neurons: usize) -> Self {
        let slots = max_delay_steps as usize + 1;
        Self {
            slots,
            neurons,
            acc: vec![0.0; slots * neurons],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.slots
    }

    pub fn is_empty(&self) -> bool {
        self.neurons == 0
    }

    pub fn current_step(&self) -> u32 {
        self.step
    }

    fn slot(&self, step: u32) -> usize {
        step as usize % self.slots
    }

    /// Accumulated input for `neuron` arriving `delay` steps from now.
    pub fn pending(&self, neuron: u32, delay: u16) -> f64 {
        let slot = self.slot(self.step.wrapping_add(delay as u32));
        self.acc[slot * self.neurons + neuron as usize]
    }

    /// Add the efficacies of one spike's synapses; returns the event count.
    pub fn deliver_spike(&mut self, synapses: &[LocalSynapse]) -> Result<u64> {
        for syn in synapses {
            self.add(syn)?;
        }
        Ok(synapses.len() as u64)
    }

    #[inline]
    fn add(&mut self, syn: &LocalSynapse) -> Result<()> {
        if syn.delay_steps == 0 {
            return Err(Error::ContractViolation(format!(
                "synapse onto local neuron {} has zero delay",
                syn.target
            )));
        }
        if syn.delay_steps as usize >= self.slots {
            return Err(Error::ContractViolation(format!(
                "delay {} exceeds ring capacity {}",
                syn.delay_steps,
                self.slots - 1
            )));
        }
        let slot = self.slot(self.step.wrapping_add(syn.delay_steps as u32));
        self.acc[slot * self.neurons + syn.target as usize] += syn.weight;
        Ok(())
    }

    /// Take the current slot's input for `neuron`, zeroing it.
    #[inline]
    pub fn drain(&mut self, neuron: u32) -> f64 {
        let idx = self.slot(self.step) * self.neurons + neuron as usize;
        std::mem::take(&mut self.acc[idx])
    }

    pub fn advance(&mut self) {
        self.step = self.step.wrapping_add(1);
    }
}

/// One rank's share of a network: its neurons and every synapse targeting them.
#[derive(Debug, Clone)]
pub struct Subnetwork {
    pub spec: GridSpec,
    pub rank: usize,
    pub ranks: usize,
    /// Global ids of local neurons, ascending.
    pub local_neurons: Vec<u32>,
    /// Total (all-rank) fanout of each local neuron.
    pub local_fanout: Vec<u32>,
    /// Global ids of every neuron with at least one synapse onto this rank, ascending.
    pub sources: Vec<u32>,
    pub offsets: Vec<usize>,
    pub synapses: Vec<LocalSynapse>,
    /// For each local neuron, the other ranks that need its spikes (CSR).
    pub dest_offsets: Vec<usize>,
    pub dest_ranks: Vec<u16>,
    /// Ranks this rank sends frames to / receives frames from.
    pub outgoing_ranks: Vec<usize>,
    pub incoming_ranks: Vec<usize>,
}

impl Subnetwork {
    /// Local index of `neuron` if this rank owns it (columns round-robin).
    pub fn local_index(&self, neuron: u32) -> Option<u32> {
        let npc = self.spec.neurons_per_column;
        let col = neuron / npc;
        if (col as usize) % self.ranks != self.rank || neuron as usize >= self.spec.total_neurons() {
            return None;
        }
        Some((col / self.ranks as u32) * npc + neuron % npc)
    }

    pub fn source_slot(&self, neuron: u32) -> Option<usize> {
        self.sources.binary_search(&neuron).ok()
    }

    pub fn synapses_of_slot(&self, slot: usize) -> &[LocalSynapse] {
        &self.synapses[self.offsets[slot]..self.offsets[slot + 1]]
    }

    pub fn destinations(&self, local: usize) -> &[u16] {
        &self.dest_ranks[self.dest_offsets[local]..self.dest_offsets[local + 1]]
    }

    /// Multiply every excitatory efficacy by `scale`.
    pub fn scale_excitatory(&mut self, scale: f64) {
        for (slot, &src) in self.sources.iter().enumerate() {
            if self.spec.is_excitatory(src) {
                for syn in &mut self.synapses[self.offsets[slot]..self.offsets[slot + 1]] {
                    syn.weight *= scale;
                }
            }
        }
    }
}

/// Counters of one run (or one rank of a run).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunMetrics {
    pub neurons: u64,
    pub steps: u64,
    pub simulated_seconds: f64,
    pub wall_seconds: f64,
    pub total_spikes: u64,
    pub internal_synaptic_events: u64,
    pub external_synaptic_events: u64,
    /// Sum over emitted spikes of the spiker's total fanout.
    pub emitted_fanout: u64,
    pub mean_rate_hz: f64,
}

impl RunMetrics {
    pub fn total_synaptic_events(&self) -> u64 {
        self.internal_synaptic_events + self.external_synaptic_events
    }

    pub fn events_per_wall_second(&self) -> f64 {
        if self.wall_seconds > 0.0 {
            self.total_synaptic_events() as f64 / self.wall_seconds
        } else {
            0.0
        }
    }

    fn refresh_rate(&mut self) {
        self.mean_rate_hz = if self.neurons == 0 || self.simulated_seconds <= 0.0 {
            0.0
        } else {
            self.total_spikes as f64 / (self.neurons as f64 * self.simulated_seconds)
        };
    }

    /// Combine per-rank metrics; wall time is the slowest rank's.
    pub fn merge<'a>(parts: impl IntoIterator<Item = &'a RunMetrics>) -> RunMetrics {
        let mut out = RunMetrics::default();
        for p in parts {
            out.neurons += p.neurons;
            out.steps = out.steps.max(p.steps);
            out.simulated_seconds = out.simulated_seconds.max(p.simulated_seconds);
            out.wall_seconds = out.wall_seconds.max(p.wall_seconds);
            out.total_spikes += p.total_spikes;
            out.internal_synaptic_events += p.internal_synaptic_events;
            out.external_synaptic_events += p.external_synaptic_events;
            out.emitted_fanout += p.emitted_fanout;
        }
        out.refresh_rate();
        out
    }

    /// Internal events must equal the summed fanout of every emitted spike.
    pub fn check_conservation(&self) -> Result<()> {
        if self.internal_synaptic_events == self.emitted_fanout {
            Ok(())
        } else {
            Err(Error::ContractViolation(format!(
                "event conservation broken: {} internal events for {} emitted synapse crossings",
                self.internal_synaptic_events, self.emitted_fanout
            )))
        }
    }
}

/// Expected synaptic events of a run at a given mean firing rate.
pub fn expected_event_count(
    neurons: f64,
    seconds: f64,
    mean_rate_hz: f64,
    fanout: f64,
    ext_syn: f64,
    ext_rate_hz: f64,
) -> f64 {
    neurons * seconds * (mean_rate_hz * fanout + ext_rate_hz * ext_syn)
}

/// One raster entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeRecord {
    pub step: u32,
    pub neuron: u32,
}

/// Write a raster as little-endian `(step u32, neuron u32)` pairs.
pub fn write_raster_binary<W: Write>(raster: &[SpikeRecord], mut w: W) -> io::Result<()> {
    for r in raster {
        w.write_all(&r.step.to_le_bytes())?;
        w.write_all(&r.neuron.to_le_bytes())?;
    }
    w.flush()
}

pub fn write_raster_csv<W: Write>(raster: &[SpikeRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "step,neuron")?;
    for r in raster {
        writeln!(w, "{},{}", r.step, r.neuron)?;
    }
    w.flush()
}

pub fn read_raster_binary(bytes: &[u8]) -> Result<Vec<SpikeRecord>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Io(io::Error::new(
            io::ErrorKind::InvalidData,
            "raster length is not a multiple of 8",
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| SpikeRecord {
            step: u32::from_le_bytes(c[..4].try_into().unwrap()),
            neuron: u32::from_le_bytes(c[4..].try_into().unwrap()),
        })
        .collect())
}

/// Hex SHA-256 of the binary raster encoding.
pub fn raster_checksum(raster: &[SpikeRecord]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for r in raster {
        h.update(r.step.to_le_bytes());
        h.update(r.neuron.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub stimulus: StimulusSpec,
    pub stimulus_seed: u64,
    /// `None` builds no plasticity state at all.
    pub stdp: Option<StdpParams>,
    pub record_raster: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            stimulus: StimulusSpec::default(),
            stimulus_seed: 2,
            stdp: None,
            record_raster: true,
        }
    }
}

struct Plasticity {
    traces: StdpTraces,
    /// Per local target: (synapse index, source slot) of excitatory synapses (CSR).
    incoming_offsets: Vec<usize>,
    incoming: Vec<(usize, usize)>,
}

pub struct Engine {
    sub: Subnetwork,
    models: Vec<NeuronModel>,
    states: Vec<NeuronState>,
    ring: DelayRing,
    config: EngineConfig,
    dt: f64,
    step: u32,
    metrics: RunMetrics,
    raster: Vec<SpikeRecord>,
    plasticity: Option<Plasticity>,
    scratch: Vec<u32>,
}

impl Engine {
    pub fn new(sub: Subnetwork, config: EngineConfig) -> Result<Self> {
        sub.spec.validate()?;
        config.stimulus.validate()?;
        let models: Vec<NeuronModel> = sub
            .local_neurons
            .iter()
            .map(|&n| sub.spec.model.model_for(sub.spec.is_excitatory(n)))
            .collect();
        let states = models.iter().map(NeuronModel::rest_state).collect();
        let (_, dmax) = sub.spec.delay_steps_range();
        let ring = DelayRing::new(dmax, sub.local_neurons.len());
        let plasticity = match config.stdp {
            Some(p) if p.enabled => {
                p.validate()?;
                Some(Self::plasticity_state(&sub, p))
            }
            Some(p) => {
                p.validate()?;
                None
            }
            None => None,
        };
        let metrics = RunMetrics {
            neurons: sub.local_neurons.len() as u64,
            ..RunMetrics::default()
        };
        Ok(Self {
            dt: sub.spec.dt,
            sub,
            models,
            states,
            ring,
            config,
            step: 0,
            metrics,
            raster: Vec::new(),
            plasticity,
            scratch: Vec::new(),
        })
    }

    fn plasticity_state(sub: &Subnetwork, params: StdpParams) -> Plasticity {
        let n = sub.local_neurons.len();
        let mut counts = vec![0usize; n + 1];
        for (slot, &src) in sub.sources.iter().enumerate() {
            if sub.spec.is_excitatory(src) {
                for syn in sub.synapses_of_slot(slot) {
                    counts[syn.target as usize + 1] += 1;
                }
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut incoming = vec![(0, 0); counts[n]];
        for (slot, &src) in sub.sources.iter().enumerate() {
            if sub.spec.is_excitatory(src) {
                for idx in sub.offsets[slot]..sub.offsets[slot + 1] {
                    let t = sub.synapses[idx].target as usize;
                    incoming[fill[t]] = (idx, slot);
                    fill[t] += 1;
                }
            }
        }
        Plasticity {
            traces: StdpTraces::new(params, sub.sources.len(), n),
            incoming_offsets: counts,
            incoming,
        }
    }

    pub fn subnetwork(&self) -> &Subnetwork {
        &self.sub
    }

    pub fn current_step(&self) -> u32 {
        self.step
    }

    pub fn ring(&self) -> &DelayRing {
        &self.ring
    }

    pub fn states(&self) -> &[NeuronState] {
        &self.states
    }

    pub fn raster(&self) -> &[SpikeRecord] {
        &self.raster
    }

    pub fn take_raster(&mut self) -> Vec<SpikeRecord> {
        std::mem::take(&mut self.raster)
    }

    /// Current efficacies of every synapse stored on this rank.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.sub.synapses.iter().map(|s| s.weight)
    }

    pub fn metrics(&self) -> RunMetrics {
        let mut m = self.metrics;
        m.steps = self.step as u64;
        m.simulated_seconds = self.step as f64 * self.dt / 1000.0;
        m.refresh_rate();
        m
    }

    pub fn set_wall_seconds(&mut self, secs: f64) {
        self.metrics.wall_seconds = secs;
    }

    /// Drain input, inject stimulus and integrate every local neuron.
    /// Returns the global ids of local spikers, ascending.
    pub fn integrate(&mut self) -> Result<Vec<u32>> {
        let mut spikes = Vec::new();
        let stim = self.config.stimulus;
        let seed = self.config.stimulus_seed;
        for (local, &gid) in self.sub.local_neurons.iter().enumerate() {
            let mut input = self.ring.drain(local as u32);
            let ext = poisson_external(gid, self.step, &stim, self.dt, seed);
            if ext > 0 {
                self.metrics.external_synaptic_events += ext;
                input += stim.ext_weight * ext as f64;
            }
            let (mut next, spiked) = self.models[local]
                .step(&self.states[local], input, self.dt)
                .map_err(|e| e.at_step(gid, self.step))?;
            if spiked {
                next.last_spike_step = Some(self.step);
                spikes.push(gid);
                self.metrics.total_spikes += 1;
                self.metrics.emitted_fanout += self.sub.local_fanout[local] as u64;
                if self.config.record_raster {
                    self.raster.push(SpikeRecord {
                        step: self.step,
                        neuron: gid,
                    });
                }
            }
            self.states[local] = next;
        }
        Ok(spikes)
    }

    /// Expand this step's spikes through the local synapse table and advance
    /// to the next step. `local` and `remote` must each be ascending.
    pub fn deliver(&mut self, local: &[u32], remote: &[u32]) -> Result<()> {
        let mut merged = std::mem::take(&mut self.scratch);
        merged.clear();
        merged.reserve(local.len() + remote.len());
        let (mut i, mut j) = (0, 0);
        while i < local.len() || j < remote.len() {
            let take_local = j == remote.len() || (i < local.len() && local[i] < remote[j]);
            if take_local {
                merged.push(local[i]);
                i += 1;
            } else {
                if remote[j] as usize >= self.sub.spec.total_neurons()
                    || self.sub.local_index(remote[j]).is_some()
                {
                    self.scratch = merged;
                    return Err(Error::ProtocolViolation(format!(
                        "rank {} received spike from unknown remote source {}",
                        self.sub.rank, remote[j]
                    )));
                }
                merged.push(remote[j]);
                j += 1;
            }
        }
        let result = self.deliver_sorted(&merged, remote.len());
        self.scratch = merged;
        result?;
        self.ring.advance();
        self.step += 1;
        Ok(())
    }

    fn deliver_sorted(&mut self, spikes: &[u32], n_remote: usize) -> Result<()> {
        let t = self.step as f64 * self.dt;
        let mut slots_spiked = Vec::with_capacity(if self.plasticity.is_some() { spikes.len() } else { 0 });
        let mut remote_seen = 0;
        for &src in spikes {
            let is_local = self.sub.local_index(src).is_some();
            let slot = match self.sub.source_slot(src) {
                Some(s) => s,
                None if is_local => continue,
                None => {
                    return Err(Error::ProtocolViolation(format!(
                        "rank {} has no synapses from remote source {src}",
                        self.sub.rank
                    )))
                }
            };
            if !is_local {
                remote_seen += 1;
            }
            let range = self.sub.offsets[slot]..self.sub.offsets[slot + 1];
            self.metrics.internal_synaptic_events +=
                self.ring.deliver_spike(&self.sub.synapses[range.clone()])?;
            if let Some(p) = &self.plasticity {
                if self.sub.spec.is_excitatory(src) {
                    for syn in &mut self.sub.synapses[range] {
                        let dep = p.traces.depression(syn.target as usize, t);
                        syn.weight = p.traces.params.clamp(syn.weight - dep);
                    }
                }
                slots_spiked.push(slot);
            }
        }
        debug_assert!(remote_seen <= n_remote);
        if let Some(p) = &mut self.plasticity {
            let mut posts = Vec::new();
            for &src in spikes {
                if let Some(local) = self.sub.local_index(src) {
                    let local = local as usize;
                    posts.push(local);
                    for &(idx, slot) in &p.incoming[p.incoming_offsets[local]..p.incoming_offsets[local + 1]] {
                        let pot = p.traces.potentiation(slot, t);
                        let syn = &mut self.sub.synapses[idx];
                        syn.weight = p.traces.params.clamp(syn.weight + pot);
                    }
                }
            }
            for slot in slots_spiked {
                p.traces.record_pre(slot, t);
            }
            for local in posts {
                p.traces.record_post(local, t);
            }
        }
        Ok(())
    }

    /// Deliver spikes received from other ranks for the current step.
    /// Equivalent to `deliver(&[], remote)`.
    pub fn deliver_remote(&mut self, remote: &[u32]) -> Result<()> {
        self.deliver(&[], remote)
    }

    /// One full step of a rank with no peers.
    pub fn step(&mut self) -> Result<Vec<u32>> {
        let spikes = self.integrate()?;
        self.deliver(&spikes, &[])?;
        Ok(spikes)
    }
}

/// Steps needed to cover `seconds` of simulated time.
pub fn steps_for(seconds: f64, dt: f64) -> u32 {
    (seconds * 1000.0 / dt).round() as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syn(target: u32, weight: f64, delay_steps: u16) -> LocalSynapse {
        LocalSynapse {
            target,
            weight,
            delay_steps,
        }
    }

    #[test]
    fn ring_delivery_and_drain() {
        let mut ring = DelayRing::new(5, 2);
        assert_eq!(ring.len(), 6);
        assert_eq!(ring.deliver_spike(&[]).unwrap(), 0);
        assert_eq!(ring.deliver_spike(&[syn(1, 0.25, 3)]).unwrap(), 1);
        assert_eq!(ring.pending(1, 3), 0.25);
        assert_eq!(ring.deliver_spike(&[syn(1, 0.5, 3), syn(0, 1.0, 5)]).unwrap(), 2);
        assert_eq!(ring.pending(1, 3), 0.75);
        for _ in 0..3 {
            assert_eq!(ring.drain(1), 0.0);
            ring.advance();
        }
        assert_eq!(ring.drain(1), 0.75);
        assert_eq!(ring.drain(1), 0.0);
        ring.advance();
        assert_eq!(ring.drain(0), 0.0);
        ring.advance();
        assert_eq!(ring.drain(0), 1.0);
    }

    #[test]
    fn ring_wraps_many_times() {
        let mut ring = DelayRing::new(3, 1);
        for step in 0..1000u32 {
            assert_eq!(ring.drain(0), if step >= 2 { step as f64 - 2.0 } else { 0.0 });
            ring.deliver_spike(&[syn(0, step as f64, 2)]).unwrap();
            ring.advance();
        }
    }

    #[test]
    fn zero_delay_is_rejected() {
        let mut ring = DelayRing::new(4, 1);
        assert!(matches!(
            ring.deliver_spike(&[syn(0, 1.0, 0)]),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn stimulus_draws() {
        let stim = StimulusSpec::default();
        assert_eq!(poisson_external(3, 9, &stim, 1.0, 5), poisson_external(3, 9, &stim, 1.0, 5));
        let silent = StimulusSpec {
            ext_rate_hz: 0.0,
            ..stim
        };
        assert!((0..1000).all(|s| poisson_external(1, s, &silent, 1.0, 5) == 0));
        assert!((stim.mean_per_step(1.0) - 1.782).abs() < 1e-12);
    }

    #[test]
    fn expected_events_arithmetic() {
        assert_eq!(expected_event_count(10000.0, 3.0, 5.1, 1195.0, 594.0, 3.0), 236_295_000.0);
        assert_eq!(expected_event_count(1000.0, 1.0, 5.0, 200.0, 0.0, 0.0), 1_000_000.0);
        assert_eq!(expected_event_count(0.0, 3.0, 5.1, 1195.0, 594.0, 3.0), 0.0);
        assert_eq!(expected_event_count(10.0, 3.0, 0.0, 1195.0, 0.0, 3.0), 0.0);
    }

    #[test]
    fn raster_codecs() {
        let raster = vec![
            SpikeRecord { step: 0, neuron: 7 },
            SpikeRecord { step: 3, neuron: 1 << 20 },
        ];
        let mut bin = Vec::new();
        write_raster_binary(&raster, &mut bin).unwrap();
        assert_eq!(bin.len(), 16);
        assert_eq!(&bin[..8], &[0, 0, 0, 0, 7, 0, 0, 0]);
        assert_eq!(read_raster_binary(&bin).unwrap(), raster);
        let mut csv = Vec::new();
        write_raster_csv(&raster, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "step,neuron\n0,7\n3,1048576\n");
        assert_eq!(raster_checksum(&[]).len(), 64);
    }
}
