//! A configured run end to end: build, simulate, summarize.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use crate::calibration::{calibrate_rate, Calibration};
use crate::config::{RasterFormat, RunConfig};
use crate::energy::{energy_report, EnergyReport};
use crate::engine::{expected_event_count, raster_checksum, write_raster_binary, write_raster_csv, RunMetrics, SpikeRecord};
use crate::error::Result;
use crate::network::{build_network, count_equivalent_synapses, Network, NetworkStats};
use crate::runtime::{run_cluster_rank, run_network, RunSettings};

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: RunConfig,
    /// `Some(rank)` when only one rank of a multi-process job ran here.
    pub rank: Option<usize>,
    pub ranks: usize,
    pub network: NetworkStats,
    pub equivalent_synapses: u64,
    pub metrics: RunMetrics,
    pub raster: Vec<SpikeRecord>,
    pub raster_sha256: String,
    pub frames_sent: u64,
    pub bytes_sent: u64,
    pub energy: Option<EnergyReport>,
}

impl RunReport {
    #[allow(clippy::too_many_arguments)]
    fn new(
        config: &RunConfig,
        net: &Network,
        rank: Option<usize>,
        ranks: usize,
        metrics: RunMetrics,
        raster: Vec<SpikeRecord>,
        frames_sent: u64,
        bytes_sent: u64,
    ) -> Result<Self> {
        let energy = match &config.power {
            Some(p) => Some(energy_report(&p.record(metrics.wall_seconds, metrics.total_synaptic_events()))?),
            None => None,
        };
        Ok(Self {
            config: config.clone(),
            rank,
            ranks,
            network: net.stats(),
            equivalent_synapses: count_equivalent_synapses(net, config.stimulus.ext_synapses_per_neuron as u64),
            metrics,
            raster_sha256: raster_checksum(&raster),
            raster,
            frames_sent,
            bytes_sent,
            energy,
        })
    }

    /// Events predicted from the achieved mean rate and mean fanout.
    pub fn expected_synaptic_events(&self) -> f64 {
        let s = &self.config.stimulus;
        expected_event_count(
            self.metrics.neurons as f64,
            self.metrics.simulated_seconds,
            self.metrics.mean_rate_hz,
            self.network.mean_fanout,
            s.ext_synapses_per_neuron as f64,
            s.ext_rate_hz,
        )
    }

    /// File name stem, suffixed with the rank for single-rank outputs.
    fn stem(&self, base: &str) -> String {
        match self.rank {
            Some(r) => format!("{base}-rank{r}"),
            None => base.to_string(),
        }
    }

    pub fn raster_file_name(&self) -> Option<String> {
        match self.config.raster {
            RasterFormat::Binary => Some(format!("{}.bin", self.stem("raster"))),
            RasterFormat::Csv => Some(format!("{}.csv", self.stem("raster"))),
            RasterFormat::None => None,
        }
    }

    /// Key-value metrics document, including the resolved config.
    pub fn metrics_document(&self) -> String {
        let m = &self.metrics;
        let mut s = String::from("# dpsnn run metrics\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("run.ranks", self.ranks.to_string());
        if let Some(r) = self.rank {
            kv("run.rank", r.to_string());
        }
        kv("metrics.neurons", m.neurons.to_string());
        kv("metrics.steps", m.steps.to_string());
        kv("metrics.simulated_seconds", m.simulated_seconds.to_string());
        kv("metrics.wall_seconds", m.wall_seconds.to_string());
        kv("metrics.total_spikes", m.total_spikes.to_string());
        kv("metrics.mean_rate_hz", m.mean_rate_hz.to_string());
        kv("metrics.synaptic_events.internal", m.internal_synaptic_events.to_string());
        kv("metrics.synaptic_events.external", m.external_synaptic_events.to_string());
        kv("metrics.synaptic_events.total", m.total_synaptic_events().to_string());
        kv("metrics.synaptic_events.expected", format!("{:.0}", self.expected_synaptic_events()));
        kv("metrics.emitted_fanout", m.emitted_fanout.to_string());
        kv("throughput.events_per_second", m.events_per_wall_second().to_string());
        let realtime = if m.wall_seconds > 0.0 { m.simulated_seconds / m.wall_seconds } else { 0.0 };
        kv("throughput.realtime_factor", realtime.to_string());
        kv("exchange.frames_sent", self.frames_sent.to_string());
        kv("exchange.bytes_sent", self.bytes_sent.to_string());
        kv("network.synapses", self.network.synapses.to_string());
        kv("network.mean_fanout", self.network.mean_fanout.to_string());
        kv("network.equivalent_synapses", self.equivalent_synapses.to_string());
        kv("raster.spikes", self.raster.len().to_string());
        kv("raster.sha256", self.raster_sha256.clone());
        if let Some(f) = self.raster_file_name() {
            kv("raster.file", f);
        }
        s.push_str(&self.config.to_prefixed_text("config"));
        if let Some(e) = &self.energy {
            s.push_str(&e.to_kv());
        }
        s
    }

    /// Write raster, metrics, network summary and, with power inputs, the
    /// energy report into `dir`. Returns the paths written.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if let Some(name) = self.raster_file_name() {
            let path = dir.join(name);
            let w = BufWriter::new(fs::File::create(&path)?);
            match self.config.raster {
                RasterFormat::Csv => write_raster_csv(&self.raster, w)?,
                _ => write_raster_binary(&self.raster, w)?,
            }
            written.push(path);
        }
        let path = dir.join(format!("{}.txt", self.stem("metrics")));
        fs::write(&path, self.metrics_document())?;
        written.push(path);
        let path = dir.join("network.txt");
        fs::write(&path, self.network.to_string())?;
        written.push(path);
        if let Some(e) = &self.energy {
            let path = dir.join(format!("{}.txt", self.stem("energy")));
            fs::write(&path, format!("{}{}", self.config.to_prefixed_text("config"), e.to_kv()))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Build the network and run every rank in this process.
pub fn run_config(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let net = build_network(&config.grid)?;
    run_on(config, &net)
}

/// Run `config` on an already built network.
pub fn run_on(config: &RunConfig, net: &Network) -> Result<RunReport> {
    let out = run_network(net, &config.run_settings())?;
    let frames = out.ranks.iter().map(|r| r.frames_sent).sum();
    let bytes = out.ranks.iter().map(|r| r.bytes_sent).sum();
    RunReport::new(config, net, None, config.ranks, out.metrics, out.raster, frames, bytes)
}

/// Run one rank of a job spread over the hosts in `cluster`.
pub fn run_config_rank(config: &RunConfig, rank: usize, cluster: &[SocketAddr]) -> Result<RunReport> {
    config.validate()?;
    let net = build_network(&config.grid)?;
    let mut settings = config.run_settings();
    settings.ranks = cluster.len();
    let out = run_cluster_rank(&net, &settings, rank, cluster)?;
    let mut raster = out.raster;
    raster.sort_unstable();
    RunReport::new(
        config,
        &net,
        Some(rank),
        cluster.len(),
        out.metrics,
        raster,
        out.frames_sent,
        out.bytes_sent,
    )
}

/// Calibrate the excitatory scale of `config`; returns the derived config.
pub fn calibrate_config(config: &RunConfig) -> Result<(RunConfig, Calibration)> {
    config.validate()?;
    let net = build_network(&config.grid)?;
    let base = RunSettings {
        seconds: config.calibration.probe_seconds,
        ..config.run_settings()
    };
    let cal = calibrate_rate(config.exc_scale, &config.calibration, |scale| {
        let settings = RunSettings {
            exc_scale: scale,
            ..base.clone()
        };
        Ok(run_network(&net, &settings)?.metrics.mean_rate_hz)
    })?;
    let mut derived = config.clone();
    derived.exc_scale = cal.scale;
    Ok((derived, cal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PowerInputs;
    use crate::energy::PowerMeasurement;

    fn tiny() -> RunConfig {
        let mut c = RunConfig::desk();
        c.apply_overrides(&[
            "grid.x=3",
            "grid.y=2",
            "grid.neurons_per_column=20",
            "grid.target_fanout=40",
            "sim.seconds=0.2",
            "sim.ranks=2",
        ])
        .unwrap();
        c
    }

    #[test]
    fn metrics_document_carries_config_and_counts() {
        let mut c = tiny();
        c.power = Some(PowerInputs {
            label: "desk".into(),
            measurement: PowerMeasurement::new(220.0, 0.5),
            baseline_w: 0.0,
        });
        let r = run_config(&c).unwrap();
        let doc = r.metrics_document();
        assert!(doc.contains("config.sim.ranks = 2"));
        assert!(doc.contains(&format!("raster.sha256 = {}", r.raster_sha256)));
        assert!(doc.contains("throughput.events_per_second = "));
        assert!(doc.contains("energy.desk.joule_per_event = "));
        assert_eq!(r.equivalent_synapses, r.network.synapses as u64 + 120 * 594);
        // The embedded config reproduces the run configuration.
        let embedded: String = doc
            .lines()
            .filter_map(|l| l.strip_prefix("config."))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(RunConfig::parse(&embedded).unwrap(), c);
    }

    #[test]
    fn artifacts_are_written() {
        let dir = std::env::temp_dir().join(format!("dpsnn-session-{}", std::process::id()));
        let mut c = tiny();
        c.raster = RasterFormat::Csv;
        let r = run_config(&c).unwrap();
        let files = r.write_artifacts(&dir).unwrap();
        let csv = fs::read_to_string(dir.join("raster.csv")).unwrap();
        assert_eq!(csv.lines().count(), r.raster.len() + 1);
        assert_eq!(files.len(), 3);
        fs::remove_dir_all(&dir).unwrap();
    }
}
