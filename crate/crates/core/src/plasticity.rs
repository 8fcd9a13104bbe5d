//! Pair-based STDP with all-to-all pairing through exponential traces.
//!
//! Every pre spike leaves a trace decaying with `tau_plus`, every post spike
//! one decaying with `tau_minus`. A post spike potentiates each incoming
//! excitatory synapse by `a_plus * pre_trace`; a pre spike depresses each
//! outgoing one by `a_minus * post_trace`. Traces are read before the current
//! instant's spikes are added, so coincident pre and post spikes contribute
//! nothing, matching `stdp_delta_w(0) = 0`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpParams {
    pub a_plus: f64,
    pub a_minus: f64,
    /// Potentiation window (ms).
    pub tau_plus: f64,
    /// Depression window (ms).
    pub tau_minus: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub enabled: bool,
}

impl Default for StdpParams {
    fn default() -> Self {
        Self {
            a_plus: 0.01,
            a_minus: 0.012,
            tau_plus: 20.0,
            tau_minus: 20.0,
            w_min: 0.0,
            w_max: 1.0,
            enabled: false,
        }
    }
}

impl StdpParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau_plus > 0.0
            && self.tau_minus > 0.0
            && self.w_min <= self.w_max
            && self.a_plus >= 0.0
            && self.a_minus >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "stdp requires tau_plus, tau_minus > 0, w_min <= w_max, a_plus, a_minus >= 0: {self:?}"
            )))
        }
    }

    /// Clamp an excitatory weight into `[max(w_min, 0), w_max]`.
    #[inline]
    pub fn clamp(&self, w: f64) -> f64 {
        w.min(self.w_max).max(self.w_min.max(0.0))
    }
}

/// Closed-form weight change for one pre/post pair at lag `t_post - t_pre`.
pub fn stdp_delta_w(dt_pre_post: f64, params: &StdpParams) -> f64 {
    if dt_pre_post > 0.0 {
        params.a_plus * (-dt_pre_post / params.tau_plus).exp()
    } else if dt_pre_post < 0.0 {
        -params.a_minus * (dt_pre_post / params.tau_minus).exp()
    } else {
        0.0
    }
}

/// Lazily decayed exponential trace.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExpTrace {
    value: f64,
    at: f64,
}

impl ExpTrace {
    #[inline]
    pub fn value_at(&self, t: f64, tau: f64) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.value * (-(t - self.at) / tau).exp()
        }
    }

    #[inline]
    pub fn bump(&mut self, t: f64, tau: f64) {
        self.value = self.value_at(t, tau) + 1.0;
        self.at = t;
    }
}

/// Per-neuron pre and post traces for a population.
#[derive(Debug, Clone)]
pub struct StdpTraces {
    pub params: StdpParams,
    pre: Vec<ExpTrace>,
    post: Vec<ExpTrace>,
}

impl StdpTraces {
    pub fn new(params: StdpParams, pre_neurons: usize, post_neurons: usize) -> Self {
        Self {
            params,
            pre: vec![ExpTrace::default(); pre_neurons],
            post: vec![ExpTrace::default(); post_neurons],
        }
    }

    /// Depression applied to a synapse onto `post` by a pre spike at `t`.
    #[inline]
    pub fn depression(&self, post: usize, t: f64) -> f64 {
        self.params.a_minus * self.post[post].value_at(t, self.params.tau_minus)
    }

    /// Potentiation applied to a synapse from `pre` by a post spike at `t`.
    #[inline]
    pub fn potentiation(&self, pre: usize, t: f64) -> f64 {
        self.params.a_plus * self.pre[pre].value_at(t, self.params.tau_plus)
    }

    pub fn record_pre(&mut self, pre: usize, t: f64) {
        self.pre[pre].bump(t, self.params.tau_plus);
    }

    pub fn record_post(&mut self, post: usize, t: f64) {
        self.post[post].bump(t, self.params.tau_minus);
    }
}

/// Apply STDP to the excitatory synapses `edges[i] = (pre, post)` with
/// weights `weights[i]`, given a spike list of `(time_ms, neuron)`.
///
/// Spikes are processed in time order; at each instant all depressions and
/// potentiations use the traces from strictly earlier spikes, then the traces
/// are bumped. With `params.enabled == false` the weights are untouched.
pub fn apply_stdp(
    weights: &mut [f64],
    edges: &[(u32, u32)],
    spikes: &[(f64, u32)],
    neurons: usize,
    params: &StdpParams,
) {
    assert_eq!(weights.len(), edges.len());
    if !params.enabled {
        return;
    }
    let mut order: Vec<usize> = (0..spikes.len()).collect();
    order.sort_by(|&a, &b| spikes[a].0.total_cmp(&spikes[b].0).then(spikes[a].1.cmp(&spikes[b].1)));
    let mut traces = StdpTraces::new(*params, neurons, neurons);
    let mut i = 0;
    while i < order.len() {
        let t = spikes[order[i]].0;
        let mut j = i;
        while j < order.len() && spikes[order[j]].0 == t {
            j += 1;
        }
        let group: Vec<u32> = order[i..j].iter().map(|&k| spikes[k].1).collect();
        for &n in &group {
            for (w, &(pre, post)) in weights.iter_mut().zip(edges) {
                if pre == n {
                    *w = params.clamp(*w - traces.depression(post as usize, t));
                }
                if post == n {
                    *w = params.clamp(*w + traces.potentiation(pre as usize, t));
                }
            }
        }
        for &n in &group {
            traces.record_pre(n as usize, t);
            traces.record_post(n as usize, t);
        }
        i = j;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn params() -> StdpParams {
        StdpParams {
            enabled: true,
            w_min: -100.0,
            w_max: 100.0,
            ..StdpParams::default()
        }
    }

    #[test]
    fn window_values() {
        let p = params();
        assert_eq!(stdp_delta_w(0.0, &p), 0.0);
        assert!((stdp_delta_w(p.tau_plus, &p) - p.a_plus / E).abs() < 1e-15);
        assert!((stdp_delta_w(-p.tau_minus, &p) + p.a_minus / E).abs() < 1e-15);
        let far = stdp_delta_w(10.0 * p.tau_plus, &p);
        assert!(far > 0.0 && far < p.a_plus * (-10.0f64).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn disabled_leaves_weights_alone() {
        let p = StdpParams::default();
        let mut w = vec![0.3, 0.7];
        apply_stdp(&mut w, &[(0, 1), (1, 0)], &[(1.0, 0), (3.0, 1), (4.0, 0)], 2, &p);
        assert_eq!(w, vec![0.3, 0.7]);
    }

    #[test]
    fn single_pair_matches_window() {
        let p = params();
        for lag in [-35.0, -5.0, -1.0, 1.0, 7.5, 40.0] {
            let mut w = vec![0.5];
            let (t_pre, t_post) = if lag > 0.0 { (10.0, 10.0 + lag) } else { (10.0 - lag, 10.0) };
            apply_stdp(&mut w, &[(0, 1)], &[(t_pre, 0), (t_post, 1)], 2, &p);
            let expect = 0.5 + stdp_delta_w(t_post - t_pre, &p);
            assert!((w[0] - expect).abs() < 1e-12, "lag {lag}");
        }
    }

    #[test]
    fn clamped_at_bounds() {
        let p = StdpParams {
            enabled: true,
            ..StdpParams::default()
        };
        let mut w = vec![p.w_max];
        apply_stdp(&mut w, &[(0, 1)], &[(0.0, 0), (1.0, 1)], 2, &p);
        assert_eq!(w[0], p.w_max);
        let mut w = vec![0.001];
        apply_stdp(&mut w, &[(0, 1)], &[(1.0, 1), (2.0, 0)], 2, &p);
        assert_eq!(w[0], 0.0);
    }
}
