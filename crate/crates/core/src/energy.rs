//! Power, energy-to-solution and energy per synaptic event from measured
//! supply current.
//!
//! Power is taken at the wall plug as `V * I`; the absolute error is
//! `V * current_error`, so the relative error of power and energy is
//! `current_error / current`. An optional idle baseline can be subtracted
//! before any derived figure.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

/// Reference energy-per-event figures quoted alongside comparisons (J/event).
pub const REFERENCE_JOULES_PER_EVENT: [(&str, f64); 3] = [
    ("compass_core_i7", 5.7e-6),
    ("spinnaker", 20e-9),
    ("truenorth", 26e-12),
];

/// A value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub error: f64,
}

impl Measured {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.error / self.value
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMeasurement {
    /// Supply voltage (V).
    pub voltage: f64,
    /// Observed current (A).
    pub current: f64,
    /// Absolute current error (A).
    pub current_error: f64,
}

impl Default for PowerMeasurement {
    fn default() -> Self {
        Self {
            voltage: 220.0,
            current: 0.0,
            current_error: 0.005,
        }
    }
}

impl PowerMeasurement {
    pub fn new(voltage: f64, current: f64) -> Self {
        Self {
            voltage,
            current,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.voltage > 0.0 && self.current >= 0.0 && self.current_error >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "measurement needs voltage > 0, current >= 0, current_error >= 0: {self:?}"
            )))
        }
    }
}

pub fn electrical_power(m: &PowerMeasurement) -> Measured {
    Measured {
        value: m.voltage * m.current,
        error: m.voltage * m.current_error,
    }
}

pub fn energy_to_solution(power: Measured, wall_seconds: f64) -> Measured {
    Measured {
        value: power.value * wall_seconds,
        error: power.error * wall_seconds,
    }
}

pub fn energy_per_event(energy_j: f64, events: u64) -> Result<f64> {
    if events == 0 {
        return Err(Error::UndefinedMetric(
            "energy per event needs a non-zero synaptic event count".into(),
        ));
    }
    Ok(energy_j / events as f64)
}

/// Measured inputs of one platform.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformRecord {
    pub label: String,
    pub measurement: PowerMeasurement,
    pub wall_seconds: f64,
    pub synaptic_events: u64,
    /// Idle power subtracted before derived quantities (W).
    pub baseline_w: f64,
}

impl PlatformRecord {
    pub fn new(label: impl Into<String>, measurement: PowerMeasurement, wall_seconds: f64, synaptic_events: u64) -> Self {
        Self {
            label: label.into(),
            measurement,
            wall_seconds,
            synaptic_events,
            baseline_w: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.measurement.validate()?;
        if !(self.wall_seconds > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{}: wall_seconds must be > 0, got {}",
                self.label, self.wall_seconds
            )));
        }
        if !(self.baseline_w >= 0.0) {
            return Err(Error::InvalidParameter(format!("{}: baseline must be >= 0", self.label)));
        }
        Ok(())
    }
}

/// Derived energy figures of one platform.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub label: String,
    pub wall_seconds: f64,
    pub synaptic_events: u64,
    pub power_w: Measured,
    pub energy_j: Measured,
    pub joule_per_event: Measured,
}

pub fn energy_report(record: &PlatformRecord) -> Result<EnergyReport> {
    record.validate()?;
    let raw = electrical_power(&record.measurement);
    let power = Measured {
        value: (raw.value - record.baseline_w).max(0.0),
        error: raw.error,
    };
    let energy = energy_to_solution(power, record.wall_seconds);
    let per_event = Measured {
        value: energy_per_event(energy.value, record.synaptic_events)?,
        error: energy_per_event(energy.error, record.synaptic_events)?,
    };
    Ok(EnergyReport {
        label: record.label.clone(),
        wall_seconds: record.wall_seconds,
        synaptic_events: record.synaptic_events,
        power_w: power,
        energy_j: energy,
        joule_per_event: per_event,
    })
}

/// `a / b` and `b / a` of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio {
    pub a_over_b: f64,
    pub b_over_a: f64,
}

impl Ratio {
    fn of(a: f64, b: f64) -> Self {
        Self {
            a_over_b: a / b,
            b_over_a: b / a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: EnergyReport,
    pub b: EnergyReport,
    pub energy: Ratio,
    pub power: Ratio,
    pub time: Ratio,
    pub joule_per_event: Ratio,
}

pub fn comparison_report(a: &PlatformRecord, b: &PlatformRecord) -> Result<Comparison> {
    let a = energy_report(a)?;
    let b = energy_report(b)?;
    Ok(Comparison {
        energy: Ratio::of(a.energy_j.value, b.energy_j.value),
        power: Ratio::of(a.power_w.value, b.power_w.value),
        time: Ratio::of(a.wall_seconds, b.wall_seconds),
        joule_per_event: Ratio::of(a.joule_per_event.value, b.joule_per_event.value),
        a,
        b,
    })
}

/// Format with an SI prefix to three significant digits, e.g. `2.25 μJ`.
pub fn si(value: f64, unit: &str) -> String {
    const PREFIXES: [(f64, &str); 7] = [
        (1e9, "G"),
        (1e6, "M"),
        (1e3, "k"),
        (1.0, ""),
        (1e-3, "m"),
        (1e-6, "μ"),
        (1e-9, "n"),
    ];
    if value == 0.0 || !value.is_finite() {
        return format!("{value} {unit}");
    }
    let (scale, prefix) = PREFIXES
        .iter()
        .copied()
        .find(|(s, _)| value.abs() >= *s)
        .unwrap_or((1e-12, "p"));
    let scaled = value / scale;
    // Three significant digits.
    let decimals = (2 - scaled.abs().log10().floor() as i32).max(0) as usize;
    format!("{scaled:.decimals$} {prefix}{unit}")
}

impl EnergyReport {
    /// Key-value lines under `energy.<label>.`.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let p = format!("energy.{}", self.label);
        let _ = writeln!(s, "{p}.wall_seconds = {}", self.wall_seconds);
        let _ = writeln!(s, "{p}.synaptic_events = {}", self.synaptic_events);
        let _ = writeln!(s, "{p}.power_w = {}", self.power_w.value);
        let _ = writeln!(s, "{p}.power_w.error = {}", self.power_w.error);
        let _ = writeln!(s, "{p}.energy_j = {}", self.energy_j.value);
        let _ = writeln!(s, "{p}.energy_j.error = {}", self.energy_j.error);
        let _ = writeln!(s, "{p}.joule_per_event = {:e}", self.joule_per_event.value);
        let _ = writeln!(s, "{p}.joule_per_event.error = {:e}", self.joule_per_event.error);
        let _ = writeln!(s, "{p}.relative_error = {}", self.power_w.relative_error());
        s
    }
}

impl Comparison {
    pub fn to_kv(&self) -> String {
        let mut s = self.a.to_kv();
        s.push_str(&self.b.to_kv());
        let (a, b) = (&self.a.label, &self.b.label);
        for (name, r) in [
            ("energy", self.energy),
            ("power", self.power),
            ("time", self.time),
            ("joule_per_event", self.joule_per_event),
        ] {
            let _ = writeln!(s, "ratio.{name}.{a}_over_{b} = {}", r.a_over_b);
            let _ = writeln!(s, "ratio.{name}.{b}_over_{a} = {}", r.b_over_a);
        }
        for (name, j) in REFERENCE_JOULES_PER_EVENT {
            let _ = writeln!(s, "reference.{name}.joule_per_event = {j:e}");
        }
        s
    }
}

fn better(ratio: Ratio, a: &str, b: &str, lower_is: &str) -> String {
    if ratio.a_over_b >= 1.0 {
        format!("\"{b}\" {:.1}x {lower_is}", ratio.a_over_b)
    } else {
        format!("\"{a}\" {:.1}x {lower_is}", ratio.b_over_a)
    }
}

impl fmt::Display for EnergyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("Joule per synaptic event", si(self.joule_per_event.value, "J")),
            ("Total energy to complete the task", si(self.energy_j.value, "J")),
            ("Instantaneous power consumption", si(self.power_w.value, "W")),
            ("Time to complete the task", format!("{} s", self.wall_seconds)),
            ("Synaptic events", self.synaptic_events.to_string()),
        ];
        writeln!(f, "{:<36} {}", "", self.label)?;
        for (name, v) in rows {
            writeln!(f, "{name:<36} {v}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Comparison {
    /// Human-readable table: one column per platform plus the comparison.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = (&self.a.label, &self.b.label);
        let rows = [
            (
                "Joule per synaptic event",
                si(self.a.joule_per_event.value, "J"),
                si(self.b.joule_per_event.value, "J"),
                better(self.joule_per_event, a, b, "lower"),
            ),
            (
                "Total energy to complete the task",
                si(self.a.energy_j.value, "J"),
                si(self.b.energy_j.value, "J"),
                better(self.energy, a, b, "lower"),
            ),
            (
                "Instantaneous power consumption",
                si(self.a.power_w.value, "W"),
                si(self.b.power_w.value, "W"),
                better(self.power, a, b, "lower"),
            ),
            (
                "Time to complete the task",
                format!("{} s", self.a.wall_seconds),
                format!("{} s", self.b.wall_seconds),
                better(self.time, a, b, "faster"),
            ),
        ];
        writeln!(f, "{:<36} {:<14} {:<14} comparison", "", a, b)?;
        for (name, x, y, cmp) in rows {
            writeln!(f, "{name:<36} {x:<14} {y:<14} {cmp}")?;
        }
        write!(f, "reference J/event:")?;
        for (name, j) in REFERENCE_JOULES_PER_EVENT {
            write!(f, " {name} {}", si(j, "J"))?;
        }
        writeln!(f)
    }
}
