mod common;

use common::{izhikevich_ref, lif_ref, LifRef, TestRng};
use dpsnn_core::neuron::{
    izhikevich_preset, step_adaptive_lif, step_izhikevich, AdaptiveLifParams, IzhikevichKind, NeuronState,
};

fn lif_ref_params(p: &AdaptiveLifParams) -> LifRef {
    LifRef {
        tau_m: p.tau_m,
        v_rest: p.v_rest,
        v_thresh: p.v_thresh,
        v_reset: p.v_reset,
        t_refr: p.t_refr,
        g_c: p.g_c,
        tau_c: p.tau_c,
        delta_c: p.delta_c,
        e_k: p.e_k,
    }
}

#[test]
fn izhikevich_matches_scalar_reference_bitwise() {
    let mut rng = TestRng::new(11);
    for case in 0..10_000 {
        let kind = if case % 2 == 0 { IzhikevichKind::Rs } else { IzhikevichKind::Fs };
        let p = izhikevich_preset(kind);
        let v = rng.uniform(-90.0, 35.0);
        let u = rng.uniform(-20.0, 20.0);
        let i = rng.uniform(-20.0, 40.0);
        let dt = [0.1, 0.5, 1.0][rng.below(3) as usize];
        let (s, spiked) = step_izhikevich(&NeuronState::new(v, u), &p, i, dt).unwrap();
        let (rv, ru, rspk) = izhikevich_ref(v, u, p.a, p.b, p.c, p.d, p.v_peak, i, dt);
        assert_eq!((s.v.to_bits(), s.w.to_bits(), spiked), (rv.to_bits(), ru.to_bits(), rspk), "case {case}");
    }
}

#[test]
fn adaptive_lif_matches_scalar_reference_bitwise() {
    let mut rng = TestRng::new(12);
    let p = AdaptiveLifParams::default();
    let r = lif_ref_params(&p);
    for case in 0..10_000 {
        let v = rng.uniform(-80.0, -45.0);
        let c = rng.uniform(0.0, 5.0);
        let refr = if rng.below(3) == 0 { rng.uniform(0.0, 3.0) } else { 0.0 };
        let i = rng.uniform(-5.0, 5.0);
        let dt = [0.1, 0.5, 1.0][rng.below(3) as usize];
        let state = NeuronState {
            refr_remaining: refr,
            ..NeuronState::new(v, c)
        };
        let (s, spiked) = step_adaptive_lif(&state, &p, i, dt).unwrap();
        let (rv, rc, rr, rspk) = lif_ref(&r, v, c, refr, i, dt);
        assert_eq!(
            (s.v.to_bits(), s.w.to_bits(), s.refr_remaining.to_bits(), spiked),
            (rv.to_bits(), rc.to_bits(), rr.to_bits(), rspk),
            "case {case}"
        );
    }
}

#[test]
fn rs_tonic_spike_count_matches_reference() {
    let p = izhikevich_preset(IzhikevichKind::Rs);
    let mut s = NeuronState::new(-65.0, -13.0);
    let (mut v, mut u) = (-65.0, -13.0);
    let (mut count, mut ref_count) = (0, 0);
    for _ in 0..1000 {
        let (next, spiked) = step_izhikevich(&s, &p, 10.0, 1.0).unwrap();
        s = next;
        count += spiked as u32;
        let (nv, nu, rs) = izhikevich_ref(v, u, p.a, p.b, p.c, p.d, p.v_peak, 10.0, 1.0);
        v = nv;
        u = nu;
        ref_count += rs as u32;
    }
    assert_eq!(count, ref_count);
    // Regular spiking at I = 10: a few spikes per 100 ms after adaptation.
    assert!((5..=30).contains(&count), "{count}");
}

#[test]
fn rs_with_zero_input_never_spikes() {
    let p = izhikevich_preset(IzhikevichKind::Rs);
    let mut s = NeuronState::new(-65.0, p.b * -65.0);
    for _ in 0..200_000 {
        let (next, spiked) = step_izhikevich(&s, &p, 0.0, 1.0).unwrap();
        assert!(!spiked);
        s = next;
    }
}

#[test]
fn lif_interspike_intervals_do_not_shrink() {
    let p = AdaptiveLifParams::default();
    let r = lif_ref_params(&p);
    let mut s = p.rest_state();
    let (mut v, mut c, mut refr) = (p.v_rest, 0.0, 0.0);
    let mut spikes = Vec::new();
    // 2 s at dt = 0.1 ms under constant suprathreshold drive.
    for step in 0..20_000u32 {
        let (next, spiked) = step_adaptive_lif(&s, &p, 3.0, 0.1).unwrap();
        s = next;
        let (nv, nc, nr, rs) = lif_ref(&r, v, c, refr, 3.0, 0.1);
        (v, c, refr) = (nv, nc, nr);
        assert_eq!(spiked, rs);
        if spiked {
            spikes.push(step);
        }
    }
    assert!(spikes.len() > 5);
    let isi: Vec<u32> = spikes.windows(2).map(|w| w[1] - w[0]).collect();
    // Spike times live on the step grid, so a settled ISI may jitter by one step.
    assert!(isi.windows(2).all(|w| w[1] + 1 >= w[0]), "{isi:?}");
    assert!(isi.last().unwrap() > &(isi[0] * 2), "{isi:?}");
}

#[test]
fn entering_above_peak_resets() {
    for kind in [IzhikevichKind::Rs, IzhikevichKind::Fs] {
        let p = izhikevich_preset(kind);
        let (s, spiked) = step_izhikevich(&NeuronState::new(31.0, 4.0), &p, 0.0, 1.0).unwrap();
        assert!(spiked);
        assert_eq!(s.v, p.c);
        assert_eq!(s.w, 4.0 + p.d);
    }
    let rs = izhikevich_preset(IzhikevichKind::Rs);
    let fs = izhikevich_preset(IzhikevichKind::Fs);
    assert_eq!((rs.b, rs.c, rs.v_peak), (fs.b, fs.c, fs.v_peak));
    assert_ne!((rs.a, rs.d), (fs.a, fs.d));
}
