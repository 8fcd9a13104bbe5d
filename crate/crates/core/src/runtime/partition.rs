use std::collections::BTreeSet;

use crate::engine::{LocalSynapse, Subnetwork};
use crate::error::{Error, Result};
use crate::network::Network;

/// Column-to-rank assignment: column `c` belongs to rank `c % ranks`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMap {
    pub ranks: usize,
    pub columns: usize,
    pub neurons_per_column: u32,
}

impl PartitionMap {
    pub fn new(columns: usize, neurons_per_column: u32, ranks: usize) -> Result<Self> {
        if ranks == 0 || ranks > columns || ranks > u16::MAX as usize + 1 {
            return Err(Error::InfeasiblePartition { ranks, columns });
        }
        Ok(Self {
            ranks,
            columns,
            neurons_per_column,
        })
    }

    pub fn rank_of_column(&self, column: u32) -> usize {
        column as usize % self.ranks
    }

    pub fn rank_of(&self, neuron: u32) -> usize {
        self.rank_of_column(neuron / self.neurons_per_column)
    }

    pub fn columns_of(&self, rank: usize) -> impl Iterator<Item = u32> + '_ {
        (rank..self.columns).step_by(self.ranks).map(|c| c as u32)
    }
}

/// Split `net` over `ranks` ranks, round-robin by column in row-major order.
///
/// Each rank receives every synapse whose target it owns, grouped by source,
/// plus the static communication graph: the ranks it must send spikes to and
/// the ranks it will hear from.
pub fn partition(net: &Network, ranks: usize) -> Result<(PartitionMap, Vec<Subnetwork>)> {
    let spec = net.spec();
    let map = PartitionMap::new(spec.columns(), spec.neurons_per_column, ranks)?;
    let npc = spec.neurons_per_column;
    let local_index = |n: u32| -> u32 { (n / npc / ranks as u32) * npc + n % npc };

    let mut subs: Vec<Subnetwork> = (0..ranks)
        .map(|rank| {
            let local_neurons: Vec<u32> = map
                .columns_of(rank)
                .flat_map(|c| (c * npc)..(c + 1) * npc)
                .collect();
            let local_fanout = local_neurons.iter().map(|&n| net.fanout(n) as u32).collect();
            let n_local = local_neurons.len();
            Subnetwork {
                spec: spec.clone(),
                rank,
                ranks,
                local_neurons,
                local_fanout,
                sources: Vec::new(),
                offsets: vec![0],
                synapses: Vec::new(),
                dest_offsets: vec![0; n_local + 1],
                dest_ranks: Vec::new(),
                outgoing_ranks: Vec::new(),
                incoming_ranks: Vec::new(),
            }
        })
        .collect();

    let mut outgoing: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ranks];
    let mut incoming: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ranks];
    let mut touched = vec![false; ranks];
    for src in 0..net.neuron_count() as u32 {
        let home = map.rank_of(src);
        touched.iter_mut().for_each(|t| *t = false);
        for syn in net.outgoing(src) {
            let r = map.rank_of(syn.target);
            touched[r] = true;
            subs[r].synapses.push(LocalSynapse {
                target: local_index(syn.target),
                weight: syn.weight,
                delay_steps: syn.delay_steps,
            });
        }
        let home_sub = &mut subs[home];
        for (r, &hit) in touched.iter().enumerate() {
            if hit && r != home {
                home_sub.dest_ranks.push(r as u16);
                outgoing[home].insert(r);
                incoming[r].insert(home);
            }
        }
        let li = local_index(src) as usize;
        home_sub.dest_offsets[li + 1] = home_sub.dest_ranks.len();
        for (r, sub) in subs.iter_mut().enumerate() {
            if touched[r] {
                sub.sources.push(src);
                sub.offsets.push(sub.synapses.len());
            }
        }
    }
    for (r, sub) in subs.iter_mut().enumerate() {
        sub.outgoing_ranks = outgoing[r].iter().copied().collect();
        sub.incoming_ranks = incoming[r].iter().copied().collect();
    }
    Ok((map, subs))
}
