//! Reference implementations and fixtures shared by the integration tests.
//! Nothing here calls the code under test except to build fixtures.
#![allow(dead_code)]

use dpsnn_core::{GridSpec, RunConfig};

/// xorshift64* for test inputs, independent of the library RNG.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// Scalar Izhikevich step: cut-off on entry, two half-steps of v, one step of u.
/// Returns `(v, u, spiked)`.
#[allow(clippy::too_many_arguments)]
pub fn izhikevich_ref(v: f64, u: f64, a: f64, b: f64, c: f64, d: f64, v_peak: f64, i: f64, dt: f64) -> (f64, f64, bool) {
    if v >= v_peak {
        return (c, u + d, true);
    }
    let h = dt / 2.0;
    let v1 = v + h * (0.04 * v * v + 5.0 * v + 140.0 - u + i);
    let v2 = v1 + h * (0.04 * v1 * v1 + 5.0 * v1 + 140.0 - u + i);
    let u2 = u + dt * a * (b * v2 - u);
    (v2, u2, false)
}

pub struct LifRef {
    pub tau_m: f64,
    pub v_rest: f64,
    pub v_thresh: f64,
    pub v_reset: f64,
    pub t_refr: f64,
    pub g_c: f64,
    pub tau_c: f64,
    pub delta_c: f64,
    pub e_k: f64,
}

/// Scalar adaptive LIF step. Returns `(v, c, refr, spiked)`.
pub fn lif_ref(p: &LifRef, v: f64, c: f64, refr: f64, i: f64, dt: f64) -> (f64, f64, f64, bool) {
    let c_new = c + dt * (-c / p.tau_c);
    if refr > dt / 2.0 {
        let r = refr - dt;
        return (p.v_reset, c_new, if r > 0.0 { r } else { 0.0 }, false);
    }
    let dvdt = -(v - p.v_rest) / p.tau_m - p.g_c * c * (v - p.e_k) + i;
    let v_new = v + dt * dvdt;
    if v_new >= p.v_thresh {
        (p.v_reset, c_new + p.delta_c, p.t_refr, true)
    } else {
        (v_new, c_new, 0.0, false)
    }
}

/// Pairwise all-to-all STDP sum for one synapse.
pub fn stdp_pairwise(pre: &[f64], post: &[f64], a_plus: f64, a_minus: f64, tau_plus: f64, tau_minus: f64) -> f64 {
    let mut dw = 0.0;
    for &tp in pre {
        for &tq in post {
            let lag = tq - tp;
            if lag > 0.0 {
                dw += a_plus * (-lag / tau_plus).exp();
            } else if lag < 0.0 {
                dw -= a_minus * (lag / tau_minus).exp();
            }
        }
    }
    dw
}

/// About 1000 neurons on a 5x5 grid.
pub fn kilo_grid() -> GridSpec {
    GridSpec {
        grid_x: 5,
        grid_y: 5,
        neurons_per_column: 40,
        target_fanout: 200.0,
        ..GridSpec::default()
    }
}

pub fn kilo_config(seconds: f64) -> RunConfig {
    let mut c = RunConfig::desk();
    c.grid = kilo_grid();
    c.simulated_seconds = seconds;
    c
}
