//! Bisection of the global excitatory weight scale onto a target firing rate.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSpec {
    pub target_hz: f64,
    /// Half-width of the accepted band around `target_hz`.
    pub band_hz: f64,
    /// Search bracket for the scale.
    pub lower: f64,
    pub upper: f64,
    /// Simulated length of each probe run (s).
    pub probe_seconds: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            target_hz: 5.1,
            band_hz: 1.5,
            lower: 0.0,
            upper: 6.0,
            probe_seconds: 3.0,
            max_iterations: 32,
        }
    }
}

impl CalibrationSpec {
    pub fn in_band(&self, rate: f64) -> bool {
        (rate - self.target_hz).abs() <= self.band_hz
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_hz >= 0.0
            && self.band_hz >= 0.0
            && self.lower <= self.upper
            && self.lower >= 0.0
            && self.probe_seconds > 0.0
            && self.max_iterations > 0
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad calibration settings: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub scale: f64,
    pub rate_hz: f64,
    /// Every `(scale, rate)` probed, in order.
    pub probes: Vec<(f64, f64)>,
}

/// Find an excitatory scale whose probe rate lies within the target band.
///
/// `probe(scale)` runs a short simulation and returns its mean rate; the
/// response is assumed non-decreasing in `scale`. The starting scale is
/// tried first and returned unchanged if already in band; otherwise it
/// replaces the bracket end on its side and bisection follows. Every probe counts towards `max_iterations`.
pub fn calibrate_rate<F>(start_scale: f64, spec: &CalibrationSpec, mut probe: F) -> Result<Calibration>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    let mut probes = Vec::new();
    let mut run = |scale: f64, probes: &mut Vec<(f64, f64)>| -> Result<f64> {
        let rate = probe(scale)?;
        log::debug!("calibration probe: scale {scale:.6} -> {rate:.3} Hz");
        probes.push((scale, rate));
        Ok(rate)
    };
    let done = |scale, rate_hz, probes| Ok(Calibration { scale, rate_hz, probes });
    let fail = |achieved_hz, probes: &Vec<(f64, f64)>| Error::CalibrationFailure {
        achieved_hz,
        target_hz: spec.target_hz,
        iterations: probes.len(),
    };

    let rate = run(start_scale, &mut probes)?;
    if spec.in_band(rate) {
        return done(start_scale, rate, probes);
    }
    // The start probe narrows one side of the bracket when it lies inside it.
    let inside = start_scale > spec.lower && start_scale < spec.upper;
    let (mut lo, mut hi) = (spec.lower, spec.upper);
    let (lo_rate, hi_rate);
    if inside && rate < spec.target_hz {
        lo = start_scale;
        lo_rate = rate;
    } else {
        lo_rate = run(lo, &mut probes)?;
        if spec.in_band(lo_rate) {
            return done(lo, lo_rate, probes);
        }
    }
    if lo_rate > spec.target_hz {
        return Err(fail(lo_rate, &probes));
    }
    if inside && rate > spec.target_hz {
        hi = start_scale;
        hi_rate = rate;
    } else {
        hi_rate = run(hi, &mut probes)?;
        if spec.in_band(hi_rate) {
            return done(hi, hi_rate, probes);
        }
    }
    if hi_rate < spec.target_hz {
        return Err(fail(hi_rate, &probes));
    }
    let mut last = hi_rate;
    while probes.len() < spec.max_iterations {
        let mid = 0.5 * (lo + hi);
        let rate = run(mid, &mut probes)?;
        if spec.in_band(rate) {
            return done(mid, rate, probes);
        }
        if rate < spec.target_hz {
            lo = mid;
        } else {
            hi = mid;
        }
        last = rate;
    }
    Err(fail(last, &probes))
}
