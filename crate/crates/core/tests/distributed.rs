mod common;

use common::{kilo_config, lif_ref, LifRef};
use dpsnn_core::engine::{raster_checksum, Engine, EngineConfig};
use dpsnn_core::runtime::{decode_frame, encode_frame};
use dpsnn_core::{
    build_network, partition, poisson_external, run_config, run_network, AdaptiveLifParams, FrameError, GridSpec,
    RunSettings, TransportKind,
};

#[test]
fn single_neuron_follows_the_scalar_oracle() {
    let spec = GridSpec {
        grid_x: 1,
        grid_y: 1,
        neurons_per_column: 2,
        target_fanout: 0.0,
        ..GridSpec::default()
    };
    let net = build_network(&spec).unwrap();
    assert_eq!(net.synapse_count(), 0);
    let (_, mut subs) = partition(&net, 1).unwrap();
    let cfg = EngineConfig::default();
    let mut engine = Engine::new(subs.remove(0), cfg).unwrap();
    let p = AdaptiveLifParams::default();
    let r = LifRef {
        tau_m: p.tau_m,
        v_rest: p.v_rest,
        v_thresh: p.v_thresh,
        v_reset: p.v_reset,
        t_refr: p.t_refr,
        g_c: p.g_c,
        tau_c: p.tau_c,
        delta_c: p.delta_c,
        e_k: p.e_k,
    };
    let (mut v, mut c, mut refr) = (p.v_rest, 0.0, 0.0);
    let mut oracle = Vec::new();
    for step in 0..3000u32 {
        let ext = poisson_external(0, step, &cfg.stimulus, 1.0, cfg.stimulus_seed);
        let input = if ext > 0 { 0.0 + cfg.stimulus.ext_weight * ext as f64 } else { 0.0 };
        let (nv, nc, nr, spiked) = lif_ref(&r, v, c, refr, input, 1.0);
        (v, c, refr) = (nv, nc, nr);
        if spiked {
            oracle.push(step);
        }
        engine.step().unwrap();
        assert_eq!(engine.states()[0].v.to_bits(), v.to_bits(), "step {step}");
    }
    let got: Vec<u32> = engine.raster().iter().filter(|s| s.neuron == 0).map(|s| s.step).collect();
    assert_eq!(got, oracle);
    assert!(!got.is_empty());
}

#[test]
fn rasters_agree_across_rank_counts() {
    let cfg = kilo_config(1.0);
    let net = build_network(&cfg.grid).unwrap();
    let base = run_network(&net, &cfg.run_settings()).unwrap();
    assert!(base.metrics.total_spikes > 0);
    for ranks in [2, 4, 8] {
        let out = run_network(&net, &RunSettings { ranks, ..cfg.run_settings() }).unwrap();
        assert_eq!(raster_checksum(&out.raster), raster_checksum(&base.raster), "P={ranks}");
        let sum = |f: fn(&dpsnn_core::RunMetrics) -> u64| out.ranks.iter().map(|r| f(&r.metrics)).sum::<u64>();
        assert_eq!(sum(|m| m.internal_synaptic_events), base.metrics.internal_synaptic_events);
        assert_eq!(sum(|m| m.external_synaptic_events), base.metrics.external_synaptic_events);
        assert_eq!(sum(|m| m.total_spikes), base.metrics.total_spikes);
    }
}

#[test]
fn tcp_and_memory_transports_agree() {
    let cfg = kilo_config(0.5);
    let net = build_network(&cfg.grid).unwrap();
    let settings = RunSettings { ranks: 4, ..cfg.run_settings() };
    let mem = run_network(&net, &settings).unwrap();
    let tcp = run_network(&net, &RunSettings { transport: TransportKind::Tcp, ..settings }).unwrap();
    assert_eq!(mem.raster, tcp.raster);
    assert_eq!(mem.metrics.total_synaptic_events(), tcp.metrics.total_synaptic_events());
}

#[test]
fn internal_events_recount_from_raster() {
    let cfg = kilo_config(1.0);
    let report = run_config(&cfg).unwrap();
    let net = build_network(&cfg.grid).unwrap();
    let recount: u64 = report.raster.iter().map(|s| net.fanout(s.neuron) as u64).sum();
    assert_eq!(recount, report.metrics.internal_synaptic_events);
    assert_eq!(report.metrics.total_spikes, report.raster.len() as u64);
}

#[test]
fn corrupted_frames_are_rejected() {
    let good = encode_frame(2, 17, &[1, 5, 9]);
    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(matches!(decode_frame(&bad), Err(FrameError::BadMagic(_))));
    assert!(matches!(
        decode_frame(&good[..good.len() - 1]),
        Err(FrameError::Truncated { .. })
    ));
    let frame = decode_frame(&good).unwrap();
    assert_eq!((frame.sender, frame.step, frame.spikes.as_slice()), (2, 17, &[1u32, 5, 9][..]));
}
