//! Run configuration as flat `section.key = value` text.
//!
//! Every key has a default (the desk-scale benchmark run), so a config file
//! only needs the keys it changes. Unknown keys and malformed values are
//! reported together, one diagnostic per field. [`RunConfig::to_text`]
//! writes every key, and parsing that text yields the same config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::calibration::CalibrationSpec;
use crate::energy::{PlatformRecord, PowerMeasurement};
use crate::engine::{EngineConfig, StimulusSpec};
use crate::error::{Error, Result};
use crate::network::{GridSpec, ModelFamily};
use crate::neuron::AdaptiveLifParams;
use crate::plasticity::StdpParams;
use crate::runtime::{RunSettings, TransportKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    Binary,
    Csv,
    None,
}

/// Electrical readings attached to a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerInputs {
    pub label: String,
    pub measurement: PowerMeasurement,
    pub baseline_w: f64,
}

impl PowerInputs {
    pub fn record(&self, wall_seconds: f64, events: u64) -> PlatformRecord {
        PlatformRecord {
            label: self.label.clone(),
            measurement: self.measurement,
            wall_seconds,
            synaptic_events: events,
            baseline_w: self.baseline_w,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Network layout; also carries `dt`, the network seed and the neuron model.
    pub grid: GridSpec,
    pub stimulus: StimulusSpec,
    pub stdp: StdpParams,
    pub exc_scale: f64,
    pub simulated_seconds: f64,
    pub ranks: usize,
    pub transport: TransportKind,
    pub timeout_seconds: f64,
    pub stimulus_seed: u64,
    pub output_dir: PathBuf,
    pub raster: RasterFormat,
    pub power: Option<PowerInputs>,
    pub calibration: CalibrationSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Key listing, in emission order.
pub const KEYS: &[&str] = &[
    "grid.x",
    "grid.y",
    "grid.neurons_per_column",
    "grid.exc_fraction",
    "grid.target_fanout",
    "grid.decay_lambda",
    "synapse.delay_min_ms",
    "synapse.delay_max_ms",
    "synapse.w_exc",
    "synapse.w_inh",
    "synapse.exc_scale",
    "neuron.model",
    "neuron.lif.tau_m",
    "neuron.lif.v_rest",
    "neuron.lif.v_thresh",
    "neuron.lif.v_reset",
    "neuron.lif.t_refr",
    "neuron.lif.g_c",
    "neuron.lif.tau_c",
    "neuron.lif.delta_c",
    "neuron.lif.e_k",
    "stimulus.ext_synapses_per_neuron",
    "stimulus.ext_rate_hz",
    "stimulus.ext_weight",
    "stdp.enabled",
    "stdp.a_plus",
    "stdp.a_minus",
    "stdp.tau_plus",
    "stdp.tau_minus",
    "stdp.w_min",
    "stdp.w_max",
    "sim.dt_ms",
    "sim.seconds",
    "sim.ranks",
    "sim.transport",
    "sim.timeout_s",
    "seed.network",
    "seed.stimulus",
    "output.dir",
    "output.raster",
    "power.label",
    "power.voltage",
    "power.current",
    "power.current_error",
    "power.baseline_w",
    "calibration.target_hz",
    "calibration.band_hz",
    "calibration.lower",
    "calibration.upper",
    "calibration.probe_seconds",
    "calibration.max_iterations",
];

impl RunConfig {
    /// Desk-scale defaults: 10x10 columns of 100
    /// adaptive LIF neurons, fanout 1195, 594 external synapses at 3 Hz,
    /// 3 s simulated, plasticity off.
    pub fn desk() -> Self {
        Self {
            grid: GridSpec::default(),
            stimulus: StimulusSpec::default(),
            stdp: StdpParams::default(),
            exc_scale: 1.0,
            simulated_seconds: 3.0,
            ranks: 1,
            transport: TransportKind::InMemory,
            timeout_seconds: 30.0,
            stimulus_seed: 2,
            output_dir: PathBuf::from("out"),
            raster: RasterFormat::Binary,
            power: None,
            calibration: CalibrationSpec::default(),
        }
    }

    pub fn lif(&self) -> AdaptiveLifParams {
        match self.grid.model {
            ModelFamily::AdaptiveLif(p) => p,
            ModelFamily::Izhikevich => AdaptiveLifParams::default(),
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            stimulus: self.stimulus,
            stimulus_seed: self.stimulus_seed,
            stdp: Some(self.stdp),
            record_raster: true,
        }
    }

    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            engine: self.engine_config(),
            seconds: self.simulated_seconds,
            ranks: self.ranks,
            transport: self.transport,
            exc_scale: self.exc_scale,
            timeout: Duration::from_secs_f64(self.timeout_seconds),
        }
    }

    /// Value of `key` as it appears in the text form; `None` for unset
    /// optional keys.
    pub fn get(&self, key: &str) -> Option<String> {
        let g = &self.grid;
        let lif = self.lif();
        let s = &self.stimulus;
        let p = &self.stdp;
        let c = &self.calibration;
        let power = self.power.as_ref();
        Some(match key {
            "grid.x" => g.grid_x.to_string(),
            "grid.y" => g.grid_y.to_string(),
            "grid.neurons_per_column" => g.neurons_per_column.to_string(),
            "grid.exc_fraction" => g.exc_fraction.to_string(),
            "grid.target_fanout" => g.target_fanout.to_string(),
            "grid.decay_lambda" => g.decay_lambda.to_string(),
            "synapse.delay_min_ms" => g.delay_min.to_string(),
            "synapse.delay_max_ms" => g.delay_max.to_string(),
            "synapse.w_exc" => g.w_exc.to_string(),
            "synapse.w_inh" => g.w_inh.to_string(),
            "synapse.exc_scale" => self.exc_scale.to_string(),
            "neuron.model" => match g.model {
                ModelFamily::Izhikevich => "izhikevich".into(),
                ModelFamily::AdaptiveLif(_) => "lif".into(),
            },
            "neuron.lif.tau_m" => lif.tau_m.to_string(),
            "neuron.lif.v_rest" => lif.v_rest.to_string(),
            "neuron.lif.v_thresh" => lif.v_thresh.to_string(),
            "neuron.lif.v_reset" => lif.v_reset.to_string(),
            "neuron.lif.t_refr" => lif.t_refr.to_string(),
            "neuron.lif.g_c" => lif.g_c.to_string(),
            "neuron.lif.tau_c" => lif.tau_c.to_string(),
            "neuron.lif.delta_c" => lif.delta_c.to_string(),
            "neuron.lif.e_k" => lif.e_k.to_string(),
            "stimulus.ext_synapses_per_neuron" => s.ext_synapses_per_neuron.to_string(),
            "stimulus.ext_rate_hz" => s.ext_rate_hz.to_string(),
            "stimulus.ext_weight" => s.ext_weight.to_string(),
            "stdp.enabled" => p.enabled.to_string(),
            "stdp.a_plus" => p.a_plus.to_string(),
            "stdp.a_minus" => p.a_minus.to_string(),
            "stdp.tau_plus" => p.tau_plus.to_string(),
            "stdp.tau_minus" => p.tau_minus.to_string(),
            "stdp.w_min" => p.w_min.to_string(),
            "stdp.w_max" => p.w_max.to_string(),
            "sim.dt_ms" => g.dt.to_string(),
            "sim.seconds" => self.simulated_seconds.to_string(),
            "sim.ranks" => self.ranks.to_string(),
            "sim.transport" => match self.transport {
                TransportKind::InMemory => "memory".into(),
                TransportKind::Tcp => "tcp".into(),
            },
            "sim.timeout_s" => self.timeout_seconds.to_string(),
            "seed.network" => g.seed.to_string(),
            "seed.stimulus" => self.stimulus_seed.to_string(),
            "output.dir" => self.output_dir.display().to_string(),
            "output.raster" => match self.raster {
                RasterFormat::Binary => "binary".into(),
                RasterFormat::Csv => "csv".into(),
                RasterFormat::None => "none".into(),
            },
            "power.label" => power?.label.clone(),
            "power.voltage" => power?.measurement.voltage.to_string(),
            "power.current" => power?.measurement.current.to_string(),
            "power.current_error" => power?.measurement.current_error.to_string(),
            "power.baseline_w" => power?.baseline_w.to_string(),
            "calibration.target_hz" => c.target_hz.to_string(),
            "calibration.band_hz" => c.band_hz.to_string(),
            "calibration.lower" => c.lower.to_string(),
            "calibration.upper" => c.upper.to_string(),
            "calibration.probe_seconds" => c.probe_seconds.to_string(),
            "calibration.max_iterations" => c.max_iterations.to_string(),
            _ => return None,
        })
    }

    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse()
                .map_err(|_| format!("{key}: cannot parse {v:?} as {}", std::any::type_name::<T>()))
        }
        let mut lif = self.lif();
        let lif_key = key.starts_with("neuron.lif.");
        let power_key = key.starts_with("power.");
        let mut power = self.power.clone().unwrap_or_else(|| PowerInputs {
            label: "platform".into(),
            measurement: PowerMeasurement::default(),
            baseline_w: 0.0,
        });
        let g = &mut self.grid;
        match key {
            "grid.x" => g.grid_x = num(key, value)?,
            "grid.y" => g.grid_y = num(key, value)?,
            "grid.neurons_per_column" => g.neurons_per_column = num(key, value)?,
            "grid.exc_fraction" => g.exc_fraction = num(key, value)?,
            "grid.target_fanout" => g.target_fanout = num(key, value)?,
            "grid.decay_lambda" => g.decay_lambda = num(key, value)?,
            "synapse.delay_min_ms" => g.delay_min = num(key, value)?,
            "synapse.delay_max_ms" => g.delay_max = num(key, value)?,
            "synapse.w_exc" => g.w_exc = num(key, value)?,
            "synapse.w_inh" => g.w_inh = num(key, value)?,
            "synapse.exc_scale" => self.exc_scale = num(key, value)?,
            "neuron.model" => {
                g.model = match value {
                    "lif" => ModelFamily::AdaptiveLif(lif),
                    "izhikevich" => ModelFamily::Izhikevich,
                    other => return Err(format!("{key}: expected `lif` or `izhikevich`, got {other:?}")),
                }
            }
            "neuron.lif.tau_m" => lif.tau_m = num(key, value)?,
            "neuron.lif.v_rest" => lif.v_rest = num(key, value)?,
            "neuron.lif.v_thresh" => lif.v_thresh = num(key, value)?,
            "neuron.lif.v_reset" => lif.v_reset = num(key, value)?,
            "neuron.lif.t_refr" => lif.t_refr = num(key, value)?,
            "neuron.lif.g_c" => lif.g_c = num(key, value)?,
            "neuron.lif.tau_c" => lif.tau_c = num(key, value)?,
            "neuron.lif.delta_c" => lif.delta_c = num(key, value)?,
            "neuron.lif.e_k" => lif.e_k = num(key, value)?,
            "stimulus.ext_synapses_per_neuron" => self.stimulus.ext_synapses_per_neuron = num(key, value)?,
            "stimulus.ext_rate_hz" => self.stimulus.ext_rate_hz = num(key, value)?,
            "stimulus.ext_weight" => self.stimulus.ext_weight = num(key, value)?,
            "stdp.enabled" => self.stdp.enabled = num(key, value)?,
            "stdp.a_plus" => self.stdp.a_plus = num(key, value)?,
            "stdp.a_minus" => self.stdp.a_minus = num(key, value)?,
            "stdp.tau_plus" => self.stdp.tau_plus = num(key, value)?,
            "stdp.tau_minus" => self.stdp.tau_minus = num(key, value)?,
            "stdp.w_min" => self.stdp.w_min = num(key, value)?,
            "stdp.w_max" => self.stdp.w_max = num(key, value)?,
            "sim.dt_ms" => g.dt = num(key, value)?,
            "sim.seconds" => self.simulated_seconds = num(key, value)?,
            "sim.ranks" => self.ranks = num(key, value)?,
            "sim.transport" => {
                self.transport = match value {
                    "memory" => TransportKind::InMemory,
                    "tcp" => TransportKind::Tcp,
                    other => return Err(format!("{key}: expected `memory` or `tcp`, got {other:?}")),
                }
            }
            "sim.timeout_s" => self.timeout_seconds = num(key, value)?,
            "seed.network" => g.seed = num(key, value)?,
            "seed.stimulus" => self.stimulus_seed = num(key, value)?,
            "output.dir" => self.output_dir = PathBuf::from(value),
            "output.raster" => {
                self.raster = match value {
                    "binary" => RasterFormat::Binary,
                    "csv" => RasterFormat::Csv,
                    "none" => RasterFormat::None,
                    other => return Err(format!("{key}: expected `binary`, `csv` or `none`, got {other:?}")),
                }
            }
            "power.label" => power.label = value.to_string(),
            "power.voltage" => power.measurement.voltage = num(key, value)?,
            "power.current" => power.measurement.current = num(key, value)?,
            "power.current_error" => power.measurement.current_error = num(key, value)?,
            "power.baseline_w" => power.baseline_w = num(key, value)?,
            "calibration.target_hz" => self.calibration.target_hz = num(key, value)?,
            "calibration.band_hz" => self.calibration.band_hz = num(key, value)?,
            "calibration.lower" => self.calibration.lower = num(key, value)?,
            "calibration.upper" => self.calibration.upper = num(key, value)?,
            "calibration.probe_seconds" => self.calibration.probe_seconds = num(key, value)?,
            "calibration.max_iterations" => self.calibration.max_iterations = num(key, value)?,
            _ => return Err(format!("{key}: unknown key")),
        }
        if lif_key {
            if let ModelFamily::AdaptiveLif(p) = &mut self.grid.model {
                *p = lif;
            } else {
                return Err(format!("{key}: only valid with neuron.model = lif"));
            }
        }
        if power_key {
            self.power = Some(power);
        }
        Ok(())
    }

    /// Apply `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut problems = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = self.set(k.trim(), v.trim()) {
                        problems.push(format!("line {}: {e}", i + 1));
                    }
                }
                None => problems.push(format!("line {}: expected `key = value`, got {line:?}", i + 1)),
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Apply `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        let mut problems = Vec::new();
        for o in overrides {
            let o = o.as_ref();
            match o.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = self.set(k.trim(), v.trim()) {
                        problems.push(e);
                    }
                }
                None => problems.push(format!("override {o:?} is not `key=value`")),
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::desk();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Field-level validation of every component.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut check = |field: &str, r: Result<()>| {
            if let Err(e) = r {
                problems.push(format!("{field}: {e}"));
            }
        };
        check("grid", self.grid.validate());
        check("stimulus", self.stimulus.validate());
        check("stdp", self.stdp.validate());
        check("calibration", self.calibration.validate());
        if let Some(p) = &self.power {
            check("power", p.measurement.validate());
            if !(p.baseline_w >= 0.0) {
                problems.push("power.baseline_w: must be >= 0".into());
            }
        }
        if !(self.simulated_seconds > 0.0) {
            problems.push(format!("sim.seconds: must be > 0, got {}", self.simulated_seconds));
        }
        if self.ranks == 0 {
            problems.push("sim.ranks: must be >= 1".into());
        } else if self.ranks > self.grid.columns() {
            problems.push(format!(
                "sim.ranks: {} ranks exceed {} columns",
                self.ranks,
                self.grid.columns()
            ));
        }
        if !(self.timeout_seconds > 0.0) {
            problems.push("sim.timeout_s: must be > 0".into());
        }
        if !(self.exc_scale >= 0.0) {
            problems.push(format!("synapse.exc_scale: must be >= 0, got {}", self.exc_scale));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Every key as `key = value`, one per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            if let Some(v) = self.get(key) {
                // LIF keys are meaningless for an Izhikevich network.
                if key.starts_with("neuron.lif.") && matches!(self.grid.model, ModelFamily::Izhikevich) {
                    continue;
                }
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }

    /// Same as [`to_text`](Self::to_text) with every line under `prefix.`.
    pub fn to_prefixed_text(&self, prefix: &str) -> String {
        self.to_text().lines().map(|l| format!("{prefix}.{l}\n")).collect()
    }
}
