//! Point-neuron models and their single-step integrators.
//!
//! Two families are provided:
//!
//! * Izhikevich quadratic model, `v' = 0.04 v^2 + 5 v + 140 - u + I`,
//!   `u' = a (b v - u)`, with the regular-spiking (excitatory) and
//!   fast-spiking (inhibitory) presets.
//! * Leaky integrate-and-fire with a calcium-like adaptation variable `c`
//!   driving a hyperpolarizing current `g_c c (v - e_k)`.
//!
//! Both integrators are explicit Euler and are pure functions of their
//! inputs, so repeated calls are bit-identical.

use crate::error::{Error, Result};

/// Izhikevich neuron class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IzhikevichKind {
    /// Regular spiking, used for excitatory neurons.
    Rs,
    /// Fast spiking, used for inhibitory neurons.
    Fs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IzhikevichParams {
    /// Recovery time scale (1/ms).
    pub a: f64,
    /// Recovery sensitivity to `v`.
    pub b: f64,
    /// Reset potential (mV).
    pub c: f64,
    /// Recovery increment after a spike.
    pub d: f64,
    /// Spike cut-off (mV).
    pub v_peak: f64,
}

impl IzhikevichParams {
    pub fn preset(kind: IzhikevichKind) -> Self {
        match kind {
            IzhikevichKind::Rs => Self {
                a: 0.02,
                b: 0.2,
                c: -65.0,
                d: 8.0,
                v_peak: 30.0,
            },
            IzhikevichKind::Fs => Self {
                a: 0.1,
                b: 0.2,
                c: -65.0,
                d: 2.0,
                v_peak: 30.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(Error::InvalidParameter(format!("izhikevich a must be > 0, got {}", self.a)));
        }
        if !(self.v_peak > self.c) {
            return Err(Error::InvalidParameter(format!(
                "izhikevich v_peak ({}) must exceed c ({})",
                self.v_peak, self.c
            )));
        }
        Ok(())
    }

    /// Resting state used to initialize a network: `v = c`, `u = b c`.
    pub fn rest_state(&self) -> NeuronState {
        NeuronState::new(self.c, self.b * self.c)
    }
}

pub fn izhikevich_preset(kind: IzhikevichKind) -> IzhikevichParams {
    IzhikevichParams::preset(kind)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveLifParams {
    /// Membrane time constant (ms).
    pub tau_m: f64,
    pub v_rest: f64,
    pub v_thresh: f64,
    pub v_reset: f64,
    /// Refractory period (ms).
    pub t_refr: f64,
    /// Adaptation conductance scale.
    pub g_c: f64,
    /// Adaptation decay (ms).
    pub tau_c: f64,
    /// Adaptation increment per spike.
    pub delta_c: f64,
    /// Adaptation reversal potential (mV).
    pub e_k: f64,
}

impl Default for AdaptiveLifParams {
    fn default() -> Self {
        Self {
            tau_m: 20.0,
            v_rest: -70.0,
            v_thresh: -50.0,
            v_reset: -60.0,
            t_refr: 2.0,
            g_c: 0.05,
            tau_c: 500.0,
            delta_c: 0.2,
            e_k: -90.0,
        }
    }
}

impl AdaptiveLifParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.tau_m > 0.0) {
            return bad(format!("lif tau_m must be > 0, got {}", self.tau_m));
        }
        if !(self.tau_c > 0.0) {
            return bad(format!("lif tau_c must be > 0, got {}", self.tau_c));
        }
        if !(self.v_thresh > self.v_reset) {
            return bad(format!(
                "lif v_thresh ({}) must exceed v_reset ({})",
                self.v_thresh, self.v_reset
            ));
        }
        if !(self.t_refr >= 0.0) {
            return bad(format!("lif t_refr must be >= 0, got {}", self.t_refr));
        }
        if self.g_c < 0.0 || self.delta_c < 0.0 {
            return bad("lif g_c and delta_c must be >= 0".into());
        }
        Ok(())
    }

    pub fn rest_state(&self) -> NeuronState {
        NeuronState::new(self.v_rest, 0.0)
    }
}

/// Dynamical variables of one neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: f64,
    /// Adaptation variable: `u` for Izhikevich, calcium `c` for adaptive LIF.
    pub w: f64,
    /// Remaining refractory time (ms).
    pub refr_remaining: f64,
    pub last_spike_step: Option<u32>,
}

impl NeuronState {
    pub fn new(v: f64, w: f64) -> Self {
        Self {
            v,
            w,
            refr_remaining: 0.0,
            last_spike_step: None,
        }
    }
}

fn check_finite(state: &NeuronState) -> Result<()> {
    if state.v.is_finite() && state.w.is_finite() {
        Ok(())
    } else {
        // Identity and step are attached by the caller.
        Err(Error::NumericalDivergence { neuron: 0, step: 0 })
    }
}

/// Advance an Izhikevich neuron by `dt` ms.
///
/// The cut-off is tested on entry: a state already at or above `v_peak`
/// is reset (`v = c`, `u += d`) and reported as a spike without further
/// integration. Otherwise `v` takes two Euler half-steps of `dt/2` and `u`
/// one full step using the updated `v`.
pub fn step_izhikevich(
    state: &NeuronState,
    params: &IzhikevichParams,
    i_syn: f64,
    dt: f64,
) -> Result<(NeuronState, bool)> {
    let mut next = *state;
    if state.v >= params.v_peak {
        next.v = params.c;
        next.w = state.w + params.d;
        check_finite(&next)?;
        return Ok((next, true));
    }
    let half = 0.5 * dt;
    let mut v = state.v;
    let u = state.w;
    v += half * (0.04 * v * v + 5.0 * v + 140.0 - u + i_syn);
    v += half * (0.04 * v * v + 5.0 * v + 140.0 - u + i_syn);
    next.v = v;
    next.w = u + dt * params.a * (params.b * v - u);
    check_finite(&next)?;
    Ok((next, false))
}

/// Advance an adaptive LIF neuron by `dt` ms.
///
/// While refractory the membrane is clamped at `v_reset` and only the
/// calcium variable decays. A step counts as refractory while more than
/// half a step of refractory time remains, so accumulated rounding in
/// `refr_remaining` never adds or drops a step.
pub fn step_adaptive_lif(
    state: &NeuronState,
    params: &AdaptiveLifParams,
    i_syn: f64,
    dt: f64,
) -> Result<(NeuronState, bool)> {
    let mut next = *state;
    let c = state.w;
    let c_next = c + dt * (-c / params.tau_c);
    if state.refr_remaining > 0.5 * dt {
        next.refr_remaining = (state.refr_remaining - dt).max(0.0);
        next.v = params.v_reset;
        next.w = c_next;
        check_finite(&next)?;
        return Ok((next, false));
    }
    next.refr_remaining = 0.0;
    let v = state.v;
    let dv = -(v - params.v_rest) / params.tau_m - params.g_c * c * (v - params.e_k) + i_syn;
    next.v = v + dt * dv;
    next.w = c_next;
    check_finite(&next)?;
    if next.v >= params.v_thresh {
        next.v = params.v_reset;
        next.w = c_next + params.delta_c;
        next.refr_remaining = params.t_refr;
        return Ok((next, true));
    }
    Ok((next, false))
}

/// Model assigned to one neuron in a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeuronModel {
    Izhikevich(IzhikevichParams),
    AdaptiveLif(AdaptiveLifParams),
}

impl NeuronModel {
    pub fn rest_state(&self) -> NeuronState {
        match self {
            NeuronModel::Izhikevich(p) => p.rest_state(),
            NeuronModel::AdaptiveLif(p) => p.rest_state(),
        }
    }

    #[inline]
    pub fn step(&self, state: &NeuronState, i_syn: f64, dt: f64) -> Result<(NeuronState, bool)> {
        match self {
            NeuronModel::Izhikevich(p) => step_izhikevich(state, p, i_syn, dt),
            NeuronModel::AdaptiveLif(p) => step_adaptive_lif(state, p, i_syn, dt),
        }
    }

    /// Reset potential, returned exactly whenever a step reports a spike.
    pub fn reset_potential(&self) -> f64 {
        match self {
            NeuronModel::Izhikevich(p) => p.c,
            NeuronModel::AdaptiveLif(p) => p.v_reset,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn presets_differ_only_in_a_and_d() {
        let rs = izhikevich_preset(IzhikevichKind::Rs);
        let fs = izhikevich_preset(IzhikevichKind::Fs);
        assert_eq!((rs.a, rs.b, rs.c, rs.d, rs.v_peak), (0.02, 0.2, -65.0, 8.0, 30.0));
        assert_eq!((fs.a, fs.b, fs.c, fs.d, fs.v_peak), (0.1, 0.2, -65.0, 2.0, 30.0));
        assert_eq!((rs.b, rs.c, rs.v_peak), (fs.b, fs.c, fs.v_peak));
        assert_ne!(rs.a, fs.a);
        assert_ne!(rs.d, fs.d);
    }

    #[test]
    fn cutoff_on_entry_resets() {
        let p = izhikevich_preset(IzhikevichKind::Rs);
        let s = NeuronState::new(31.0, -10.0);
        let (next, spiked) = step_izhikevich(&s, &p, 0.0, 1.0).unwrap();
        assert!(spiked);
        assert_eq!(next.v, p.c);
        assert_eq!(next.w, -10.0 + p.d);
    }

    #[test]
    fn rs_at_rest_never_spikes() {
        let p = izhikevich_preset(IzhikevichKind::Rs);
        let mut s = NeuronState::new(-65.0, p.b * -65.0);
        for _ in 0..100_000 {
            let (next, spiked) = step_izhikevich(&s, &p, 0.0, 1.0).unwrap();
            assert!(!spiked);
            s = next;
        }
        // Settles on the stable fixed point of 0.04v^2 + 4.8v + 140 = 0.
        assert!((s.v + 70.0).abs() < 1e-6, "v = {}", s.v);
    }

    #[test]
    fn rs_resting_drift_is_bounded() {
        // (-65, -13) is not itself a fixed point: v relaxes towards -70 mV
        // with a slight Euler undershoot, staying within 7 mV of the start.
        let p = izhikevich_preset(IzhikevichKind::Rs);
        let mut s = NeuronState::new(-65.0, -13.0);
        for _ in 0..100 {
            let (next, spiked) = step_izhikevich(&s, &p, 0.0, 1.0).unwrap();
            assert!(!spiked);
            assert!(next.v <= -65.0 && next.v > -72.0, "v = {}", next.v);
            s = next;
        }
    }

    #[test]
    fn divergence_is_reported() {
        let p = izhikevich_preset(IzhikevichKind::Rs);
        let s = NeuronState::new(29.0, 0.0);
        let err = step_izhikevich(&s, &p, 1e308, 1.0).unwrap_err();
        assert!(matches!(err, Error::NumericalDivergence { .. }));
        let lif = AdaptiveLifParams::default();
        let err = step_adaptive_lif(&lif.rest_state(), &lif, f64::NAN, 1.0).unwrap_err();
        assert!(matches!(err, Error::NumericalDivergence { .. }));
    }

    #[test]
    fn lif_fixed_point_at_rest() {
        let p = AdaptiveLifParams::default();
        let mut s = p.rest_state();
        for _ in 0..10_000 {
            let (next, spiked) = step_adaptive_lif(&s, &p, 0.0, 1.0).unwrap();
            assert!(!spiked);
            s = next;
        }
        assert_eq!(s.v, p.v_rest);
        assert_eq!(s.w, 0.0);
    }

    #[test]
    fn lif_refractory_holds_reset() {
        let p = AdaptiveLifParams::default();
        let mut s = p.rest_state();
        let mut spike_at = None;
        let mut trace = Vec::new();
        for t in 0..200 {
            let (next, spiked) = step_adaptive_lif(&s, &p, 5.0, 1.0).unwrap();
            if spiked && spike_at.is_none() {
                spike_at = Some(t);
            }
            trace.push(next);
            s = next;
        }
        let t0 = spike_at.expect("suprathreshold input must fire");
        // t_refr = 2 ms at dt = 1 ms: two clamped steps follow the spike.
        assert_eq!(trace[t0 + 1].v, p.v_reset);
        assert_eq!(trace[t0 + 2].v, p.v_reset);
        assert!(trace[t0 + 3].v > p.v_reset);
    }

    #[test]
    fn lif_refractory_counts_steps_at_fine_dt() {
        let p = AdaptiveLifParams::default();
        let s = NeuronState::new(p.v_thresh - 1e-9, 0.0);
        let (mut s, spiked) = step_adaptive_lif(&s, &p, 100.0, 0.1).unwrap();
        assert!(spiked);
        let mut clamped = 0;
        loop {
            let (next, _) = step_adaptive_lif(&s, &p, 100.0, 0.1).unwrap();
            if next.v == p.v_reset && next.refr_remaining < s.refr_remaining {
                clamped += 1;
                s = next;
            } else {
                break;
            }
        }
        assert_eq!(clamped, 20);
    }

    #[test]
    fn lif_adaptation_suppresses_firing() {
        let p = AdaptiveLifParams::default();
        let count = |c0: f64| {
            let mut s = NeuronState::new(p.v_rest, c0);
            let mut n = 0;
            for _ in 0..200 {
                let (next, spiked) = step_adaptive_lif(&s, &p, 1.5, 1.0).unwrap();
                n += spiked as u32;
                s = next;
            }
            n
        };
        let free = count(0.0);
        let adapted = count(5.0);
        assert!(free > 0);
        assert!(adapted < free, "adapted {adapted} vs free {free}");
    }

    proptest! {
        #[test]
        fn reset_contract_and_calcium_nonnegative(
            v in -90.0f64..40.0,
            w in 0.0f64..5.0,
            refr in 0.0f64..3.0,
            i in -5.0f64..30.0,
            dt in prop::sample::select(vec![0.1, 0.5, 1.0]),
        ) {
            let lif = AdaptiveLifParams::default();
            let mut s = NeuronState::new(v, w);
            s.refr_remaining = refr;
            let (next, spiked) = step_adaptive_lif(&s, &lif, i, dt).unwrap();
            prop_assert!(next.w >= 0.0);
            prop_assert!(next.refr_remaining >= 0.0);
            if spiked { prop_assert_eq!(next.v, lif.v_reset); }

            let izh = izhikevich_preset(IzhikevichKind::Fs);
            let s = NeuronState::new(v, -w);
            let (a, sa) = step_izhikevich(&s, &izh, i, dt).unwrap();
            let (b, sb) = step_izhikevich(&s, &izh, i, dt).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(sa, sb);
            if sa { prop_assert_eq!(a.v, izh.c); }
        }
    }
}
