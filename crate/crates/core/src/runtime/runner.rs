use std::net::SocketAddr;
use std::thread;
use std::time::{Duration, Instant};

use super::exchange::{Exchanger, DEFAULT_EXCHANGE_TIMEOUT};
use super::partition::partition;
use super::transport::{loopback_listeners, InMemoryTransport, TcpTransport, Transport};
use crate::engine::{steps_for, Engine, EngineConfig, RunMetrics, SpikeRecord, Subnetwork};
use crate::error::{Error, Result};
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    InMemory,
    Tcp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub engine: EngineConfig,
    pub seconds: f64,
    pub ranks: usize,
    pub transport: TransportKind,
    /// Multiplier on every excitatory efficacy.
    pub exc_scale: f64,
    pub timeout: Duration,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            seconds: 1.0,
            ranks: 1,
            transport: TransportKind::InMemory,
            exc_scale: 1.0,
            timeout: DEFAULT_EXCHANGE_TIMEOUT,
        }
    }
}

/// Result of one rank.
#[derive(Debug, Clone)]
pub struct RankOutcome {
    pub rank: usize,
    pub metrics: RunMetrics,
    pub raster: Vec<SpikeRecord>,
    pub weights: Vec<f64>,
    pub frames_sent: u64,
    pub bytes_sent: u64,
}

/// Merged result of all ranks.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub ranks: Vec<RankOutcome>,
    /// Global raster ordered by `(step, neuron)`.
    pub raster: Vec<SpikeRecord>,
}

impl RunOutcome {
    fn merge(mut ranks: Vec<RankOutcome>) -> Result<Self> {
        ranks.sort_by_key(|r| r.rank);
        let metrics = RunMetrics::merge(ranks.iter().map(|r| &r.metrics));
        metrics.check_conservation()?;
        let mut raster: Vec<SpikeRecord> = ranks.iter().flat_map(|r| r.raster.iter().copied()).collect();
        raster.sort_unstable();
        Ok(Self { metrics, ranks, raster })
    }
}

/// Drive one rank to completion over `transport`.
pub fn run_rank<T: Transport>(
    mut sub: Subnetwork,
    transport: T,
    settings: &RunSettings,
) -> Result<RankOutcome> {
    if settings.exc_scale != 1.0 {
        sub.scale_excitatory(settings.exc_scale);
    }
    let mut exchanger = Exchanger::for_subnetwork(transport, &sub, settings.timeout);
    let mut engine = Engine::new(sub, settings.engine)?;
    let steps = steps_for(settings.seconds, engine.subnetwork().spec.dt);
    let started = Instant::now();
    for step in 0..steps {
        let local = engine.integrate()?;
        let remote = exchanger.exchange(engine.subnetwork(), step, &local)?;
        engine.deliver(&local, &remote)?;
    }
    engine.set_wall_seconds(started.elapsed().as_secs_f64());
    Ok(RankOutcome {
        rank: engine.subnetwork().rank,
        metrics: engine.metrics(),
        weights: engine.weights().collect(),
        raster: engine.take_raster(),
        frames_sent: exchanger.frames_sent(),
        bytes_sent: exchanger.bytes_sent(),
    })
}

fn join_all(handles: Vec<thread::ScopedJoinHandle<'_, Result<RankOutcome>>>) -> Result<Vec<RankOutcome>> {
    let mut outcomes = Vec::new();
    let mut first_err = None;
    for h in handles {
        match h.join() {
            Ok(Ok(o)) => outcomes.push(o),
            Ok(Err(e)) => {
                // Peers of a failed rank report a secondary exchange failure;
                // keep the root cause.
                let secondary = matches!(e, Error::ExchangeFailure { .. });
                match &first_err {
                    None => first_err = Some(e),
                    Some(Error::ExchangeFailure { .. }) if !secondary => first_err = Some(e),
                    _ => {}
                }
            }
            Err(_) => {
                first_err.get_or_insert(Error::ContractViolation("rank thread panicked".into()));
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(outcomes),
    }
}

/// Run `net` with `settings.ranks` ranks as threads of this process.
pub fn run_network(net: &Network, settings: &RunSettings) -> Result<RunOutcome> {
    let (_, subs) = partition(net, settings.ranks)?;
    let started = Instant::now();
    let outcomes = match settings.transport {
        TransportKind::InMemory => {
            let mesh = InMemoryTransport::mesh(settings.ranks);
            thread::scope(|s| {
                let handles = subs
                    .into_iter()
                    .zip(mesh)
                    .map(|(sub, t)| s.spawn(move || run_rank(sub, t, settings)))
                    .collect();
                join_all(handles)
            })?
        }
        TransportKind::Tcp => {
            let (listeners, addrs) = loopback_listeners(settings.ranks)?;
            thread::scope(|s| {
                let handles = subs
                    .into_iter()
                    .zip(listeners)
                    .map(|(sub, listener)| {
                        let addrs = addrs.clone();
                        s.spawn(move || {
                            let t = TcpTransport::connect(sub.rank, &addrs, listener, settings.timeout)?;
                            run_rank(sub, t, settings)
                        })
                    })
                    .collect();
                join_all(handles)
            })?
        }
    };
    let mut out = RunOutcome::merge(outcomes)?;
    out.metrics.wall_seconds = started.elapsed().as_secs_f64();
    Ok(out)
}

/// Run only `rank` of a multi-process job described by a cluster listing.
pub fn run_cluster_rank(
    net: &Network,
    settings: &RunSettings,
    rank: usize,
    cluster: &[SocketAddr],
) -> Result<RankOutcome> {
    if rank >= cluster.len() {
        return Err(Error::Config(vec![format!(
            "rank {rank} is not listed in the cluster file ({} ranks)",
            cluster.len()
        )]));
    }
    let (_, mut subs) = partition(net, cluster.len())?;
    let sub = subs.swap_remove(rank);
    let listener = std::net::TcpListener::bind(cluster[rank])?;
    let transport = TcpTransport::connect(rank, cluster, listener, settings.timeout)?;
    run_rank(sub, transport, settings)
}
