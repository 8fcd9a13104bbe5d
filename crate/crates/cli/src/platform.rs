//! Platform records from `--platform` specs and metrics files.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use dpsnn_core::energy::{PlatformRecord, PowerMeasurement};
use dpsnn_core::Error;

use crate::commands::{CliError, CliResult};

#[derive(Debug, Default)]
struct Fields {
    label: Option<String>,
    voltage: Option<f64>,
    current: Option<f64>,
    current_error: Option<f64>,
    baseline: Option<f64>,
    seconds: Option<f64>,
    events: Option<u64>,
}

impl Fields {
    fn into_record(self, origin: &str) -> CliResult<PlatformRecord> {
        let defaults = PowerMeasurement::default();
        let current = self
            .current
            .ok_or_else(|| CliError::Usage(format!("{origin}: missing `current` (A)")))?;
        let seconds = self
            .seconds
            .ok_or_else(|| CliError::Usage(format!("{origin}: missing `seconds` (wall-clock time)")))?;
        let events = self.events.ok_or_else(|| {
            Error::UndefinedMetric(format!(
                "{origin}: no synaptic event count; add `events=N` or `metrics=PATH` from a completed run"
            ))
        })?;
        let mut record = PlatformRecord::new(
            self.label.unwrap_or_else(|| "platform".into()),
            PowerMeasurement {
                voltage: self.voltage.unwrap_or(defaults.voltage),
                current,
                current_error: self.current_error.unwrap_or(defaults.current_error),
            },
            seconds,
            events,
        );
        record.baseline_w = self.baseline.unwrap_or(0.0);
        Ok(record)
    }
}

fn number<T: std::str::FromStr>(origin: &str, key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{origin}: `{key}` has a malformed value {v:?}")))
}

fn read_kv(path: &Path) -> CliResult<HashMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read metrics {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}

fn fields_from_metrics(path: &Path) -> CliResult<Fields> {
    let kv = read_kv(path)?;
    let origin = path.display().to_string();
    let get = |k: &str| kv.get(k).map(String::as_str);
    let opt_f64 = |k: &str| get(k).map(|v| number::<f64>(&origin, k, v)).transpose();
    Ok(Fields {
        label: get("config.power.label").map(str::to_string),
        voltage: opt_f64("config.power.voltage")?,
        current: opt_f64("config.power.current")?,
        current_error: opt_f64("config.power.current_error")?,
        baseline: opt_f64("config.power.baseline_w")?,
        seconds: opt_f64("metrics.wall_seconds")?,
        events: get("metrics.synaptic_events.total")
            .map(|v| number::<u64>(&origin, "metrics.synaptic_events.total", v))
            .transpose()?,
    })
}

/// Record from a metrics file; power inputs come from its embedded config
/// unless `label` overrides the name.
pub fn platform_from_metrics(path: &Path, label: Option<String>) -> CliResult<PlatformRecord> {
    let mut f = fields_from_metrics(path)?;
    if label.is_some() {
        f.label = label;
    }
    f.into_record(&path.display().to_string())
}

/// Parse `key=value,...`; keys: label, voltage, current, current_error,
/// baseline, seconds, events, metrics.
pub fn parse_platform(spec: &str) -> CliResult<PlatformRecord> {
    let origin = format!("--platform {spec:?}");
    let mut pairs = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{origin}: `{part}` is not key=value")))?;
        pairs.push((k.trim(), v.trim()));
    }
    // A metrics file supplies the base values; explicit keys win.
    let mut f = match pairs.iter().find(|(k, _)| *k == "metrics") {
        Some((_, path)) => fields_from_metrics(Path::new(path))?,
        None => Fields::default(),
    };
    for (k, v) in pairs {
        match k {
            "label" => f.label = Some(v.to_string()),
            "voltage" => f.voltage = Some(number(&origin, k, v)?),
            "current" => f.current = Some(number(&origin, k, v)?),
            "current_error" => f.current_error = Some(number(&origin, k, v)?),
            "baseline" => f.baseline = Some(number(&origin, k, v)?),
            "seconds" => f.seconds = Some(number(&origin, k, v)?),
            "events" => f.events = Some(number(&origin, k, v)?),
            "metrics" => {}
            other => return Err(CliError::Usage(format!("{origin}: unknown key `{other}`"))),
        }
    }
    f.into_record(&origin)
}
