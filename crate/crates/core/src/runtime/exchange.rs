use std::collections::VecDeque;
use std::time::{Duration, Instant};

use super::frame::{decode_frame, encode_frame, SpikeFrame};
use super::transport::{Received, Transport};
use crate::engine::Subnetwork;
use crate::error::{Error, Result};

pub const DEFAULT_EXCHANGE_TIMEOUT: Duration = Duration::from_secs(30);

/// Per-step spike exchange over a static communication graph.
///
/// Every step one frame, possibly empty, goes to each outgoing peer, and one
/// frame is awaited from each incoming peer; the empty frames double as the
/// step barrier. Frames from a peer that is already ahead are buffered.
pub struct Exchanger<T: Transport> {
    transport: T,
    outgoing: Vec<usize>,
    incoming: Vec<usize>,
    /// Next step expected from each rank.
    expected: Vec<u32>,
    pending: Vec<VecDeque<SpikeFrame>>,
    step: u32,
    timeout: Duration,
    frames_sent: u64,
    bytes_sent: u64,
}

impl<T: Transport> Exchanger<T> {
    pub fn new(transport: T, outgoing: Vec<usize>, incoming: Vec<usize>, timeout: Duration) -> Self {
        let ranks = transport.ranks();
        Self {
            transport,
            outgoing,
            incoming,
            expected: vec![0; ranks],
            pending: (0..ranks).map(|_| VecDeque::new()).collect(),
            step: 0,
            timeout,
            frames_sent: 0,
            bytes_sent: 0,
        }
    }

    pub fn for_subnetwork(transport: T, sub: &Subnetwork, timeout: Duration) -> Self {
        Self::new(transport, sub.outgoing_ranks.clone(), sub.incoming_ranks.clone(), timeout)
    }

    pub fn rank(&self) -> usize {
        self.transport.rank()
    }

    pub fn frames_sent(&self) -> u64 {
        self.frames_sent
    }

    pub fn bytes_sent(&self) -> u64 {
        self.bytes_sent
    }

    /// Send `step`'s spikes, each list addressed to one outgoing peer, and
    /// return the ascending union of spikes received for `step`.
    pub fn exchange_lists(&mut self, step: u32, outbound: &[(usize, Vec<u32>)]) -> Result<Vec<u32>> {
        if step != self.step {
            return Err(Error::ProtocolViolation(format!(
                "rank {} exchanged step {step} out of order (expected {})",
                self.rank(),
                self.step
            )));
        }
        let me = self.rank() as u16;
        for &peer in &self.outgoing {
            let spikes = outbound
                .iter()
                .find(|(r, _)| *r == peer)
                .map(|(_, s)| s.as_slice())
                .unwrap_or(&[]);
            let frame = encode_frame(me, step, spikes);
            self.bytes_sent += frame.len() as u64;
            self.frames_sent += 1;
            self.transport.send(peer, frame).map_err(|e| match e {
                Error::ExchangeFailure { rank, reason, .. } => Error::ExchangeFailure { rank, step, reason },
                other => other,
            })?;
        }

        let mut received = Vec::new();
        let mut waiting: Vec<usize> = Vec::new();
        for &peer in &self.incoming {
            match self.pending[peer].front() {
                Some(f) if f.step == step => {
                    received.extend_from_slice(&self.pending[peer].pop_front().unwrap().spikes);
                }
                _ => waiting.push(peer),
            }
        }
        let deadline = Instant::now() + self.timeout;
        while !waiting.is_empty() {
            let now = Instant::now();
            let left = deadline.saturating_duration_since(now);
            let missing = waiting[0];
            if left.is_zero() {
                return Err(Error::ExchangeFailure {
                    rank: missing,
                    step,
                    reason: format!("timed out after {:?}", self.timeout),
                });
            }
            match self.transport.receive(left)? {
                Received::Timeout => continue,
                Received::Disconnected(peer) => {
                    if peer == usize::MAX || waiting.contains(&peer) {
                        let rank = if peer == usize::MAX { missing } else { peer };
                        return Err(Error::ExchangeFailure {
                            rank,
                            step,
                            reason: "disconnected".into(),
                        });
                    }
                }
                Received::Frame(bytes) => {
                    let frame = decode_frame(&bytes)?;
                    let sender = frame.sender as usize;
                    if !self.incoming.contains(&sender) {
                        return Err(Error::ProtocolViolation(format!(
                            "rank {} got a frame from rank {sender}, which is not an incoming peer",
                            self.rank()
                        )));
                    }
                    if frame.step != self.expected[sender] {
                        return Err(Error::ProtocolViolation(format!(
                            "rank {} expected step {} from rank {sender}, got step {}",
                            self.rank(),
                            self.expected[sender],
                            frame.step
                        )));
                    }
                    self.expected[sender] += 1;
                    if frame.step == step {
                        waiting.retain(|&p| p != sender);
                        received.extend_from_slice(&frame.spikes);
                    } else {
                        self.pending[sender].push_back(frame);
                    }
                }
            }
        }
        self.step += 1;
        received.sort_unstable();
        Ok(received)
    }

    /// Route `spikes` (ascending, all owned by `sub`) to the ranks that hold
    /// their synapses and collect this step's remote spikes.
    pub fn exchange(&mut self, sub: &Subnetwork, step: u32, spikes: &[u32]) -> Result<Vec<u32>> {
        let mut outbound: Vec<(usize, Vec<u32>)> = self.outgoing.iter().map(|&r| (r, Vec::new())).collect();
        for &gid in spikes {
            let local = sub.local_index(gid).ok_or_else(|| {
                Error::ProtocolViolation(format!("rank {} asked to send foreign neuron {gid}", sub.rank))
            })? as usize;
            for &dest in sub.destinations(local) {
                if let Some((_, list)) = outbound.iter_mut().find(|(r, _)| *r == dest as usize) {
                    list.push(gid);
                }
            }
        }
        self.exchange_lists(step, &outbound)
    }
}
