use std::fmt;

use super::Network;

/// Summary counts of a built network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStats {
    pub neurons: usize,
    pub columns: usize,
    pub excitatory: usize,
    pub synapses: usize,
    pub mean_fanout: f64,
    pub min_fanout: usize,
    pub max_fanout: usize,
    pub fanout_bin_width: usize,
    pub fanout_histogram: Vec<u64>,
    /// Index 0 is the smallest delay in steps, `delay_offset`.
    pub delay_offset: u16,
    pub delay_histogram: Vec<u64>,
}

const FANOUT_BINS: usize = 20;

impl NetworkStats {
    pub fn collect(net: &Network) -> Self {
        let n = net.neuron_count();
        let fanouts: Vec<usize> = (0..n as u32).map(|i| net.fanout(i)).collect();
        let min_fanout = fanouts.iter().copied().min().unwrap_or(0);
        let max_fanout = fanouts.iter().copied().max().unwrap_or(0);
        let fanout_bin_width = ((max_fanout - min_fanout) / FANOUT_BINS + 1).max(1);
        let mut fanout_histogram = vec![0u64; (max_fanout - min_fanout) / fanout_bin_width + 1];
        for f in &fanouts {
            fanout_histogram[(f - min_fanout) / fanout_bin_width] += 1;
        }
        let (dmin, dmax) = net.spec().delay_steps_range();
        let mut delay_histogram = vec![0u64; (dmax - dmin) as usize + 1];
        for s in &net.synapses {
            delay_histogram[(s.delay_steps - dmin) as usize] += 1;
        }
        Self {
            neurons: n,
            columns: net.spec().columns(),
            excitatory: (0..n as u32).filter(|&i| net.is_excitatory(i)).count(),
            synapses: net.synapse_count(),
            mean_fanout: net.mean_fanout(),
            min_fanout,
            max_fanout,
            fanout_bin_width,
            fanout_histogram,
            delay_offset: dmin,
            delay_histogram,
        }
    }
}

fn join(values: &[u64]) -> String {
    values.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for NetworkStats {
    /// Key-value dump, one `key = value` per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "network.neurons = {}", self.neurons)?;
        writeln!(f, "network.columns = {}", self.columns)?;
        writeln!(f, "network.excitatory = {}", self.excitatory)?;
        writeln!(f, "network.inhibitory = {}", self.neurons - self.excitatory)?;
        writeln!(f, "network.synapses = {}", self.synapses)?;
        writeln!(f, "network.fanout.mean = {:.3}", self.mean_fanout)?;
        writeln!(f, "network.fanout.min = {}", self.min_fanout)?;
        writeln!(f, "network.fanout.max = {}", self.max_fanout)?;
        writeln!(f, "network.fanout.histogram.start = {}", self.min_fanout)?;
        writeln!(f, "network.fanout.histogram.bin_width = {}", self.fanout_bin_width)?;
        writeln!(f, "network.fanout.histogram.counts = {}", join(&self.fanout_histogram))?;
        writeln!(f, "network.delay.histogram.start_steps = {}", self.delay_offset)?;
        writeln!(f, "network.delay.histogram.counts = {}", join(&self.delay_histogram))
    }
}
