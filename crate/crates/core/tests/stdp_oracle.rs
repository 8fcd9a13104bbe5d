mod common;

use common::{kilo_grid, stdp_pairwise};
use dpsnn_core::engine::{Engine, EngineConfig};
use dpsnn_core::{apply_stdp, build_network, partition, StdpParams};

const GRID: [f64; 6] = [0.0, 3.0, 7.0, 12.0, 20.0, 33.0];

/// Every subset of `GRID` with at most three elements.
fn patterns() -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << GRID.len()) {
        if mask.count_ones() <= 3 {
            out.push((0..GRID.len()).filter(|i| mask & (1 << i) != 0).map(|i| GRID[i]).collect());
        }
    }
    out
}

#[test]
fn traces_equal_pairwise_sum_for_small_patterns() {
    let p = StdpParams {
        enabled: true,
        w_max: 100.0,
        ..StdpParams::default()
    };
    let mut checked = 0;
    for pre in patterns() {
        for post in patterns() {
            let mut spikes: Vec<(f64, u32)> = pre.iter().map(|&t| (t, 0)).collect();
            spikes.extend(post.iter().map(|&t| (t, 1)));
            let mut w = vec![0.5];
            apply_stdp(&mut w, &[(0, 1)], &spikes, 2, &p);
            let expect = 0.5 + stdp_pairwise(&pre, &post, p.a_plus, p.a_minus, p.tau_plus, p.tau_minus);
            assert!((w[0] - expect).abs() <= 1e-12, "pre {pre:?} post {post:?}: {} vs {expect}", w[0]);
            checked += 1;
        }
    }
    assert_eq!(checked, 42 * 42);
}

#[test]
fn weights_stay_clamped_under_random_trains() {
    let p = StdpParams {
        enabled: true,
        a_plus: 0.2,
        a_minus: 0.25,
        ..StdpParams::default()
    };
    let mut rng = common::TestRng::new(5);
    let edges: Vec<(u32, u32)> = (0..20).map(|_| (rng.below(6) as u32, rng.below(6) as u32)).collect();
    let spikes: Vec<(f64, u32)> = (0..300).map(|_| (rng.below(500) as f64, rng.below(6) as u32)).collect();
    let mut w: Vec<f64> = (0..20).map(|_| rng.uniform(0.0, 1.0)).collect();
    apply_stdp(&mut w, &edges, &spikes, 6, &p);
    assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
}

fn run_engine(stdp: Option<StdpParams>, steps: u32) -> (Vec<f64>, Vec<f64>, Vec<dpsnn_core::SpikeRecord>) {
    let net = build_network(&kilo_grid()).unwrap();
    let (_, mut subs) = partition(&net, 1).unwrap();
    let sub = subs.remove(0);
    let before: Vec<f64> = sub.synapses.iter().map(|s| s.weight).collect();
    let mut engine = Engine::new(
        sub,
        EngineConfig {
            stdp,
            ..EngineConfig::default()
        },
    )
    .unwrap();
    for _ in 0..steps {
        engine.step().unwrap();
    }
    (before, engine.weights().collect(), engine.take_raster())
}

#[test]
fn disabled_plasticity_is_invisible() {
    let (before, after_absent, raster_absent) = run_engine(None, 500);
    let (_, after_disabled, raster_disabled) = run_engine(Some(StdpParams::default()), 500);
    let bits = |w: &[f64]| w.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&before), bits(&after_disabled));
    assert_eq!(bits(&after_absent), bits(&after_disabled));
    assert_eq!(raster_absent, raster_disabled);
    assert!(!raster_absent.is_empty());
}

#[test]
fn enabled_plasticity_only_moves_excitatory_weights() {
    let p = StdpParams {
        enabled: true,
        ..StdpParams::default()
    };
    let (before, after, _) = run_engine(Some(p), 500);
    let mut changed = 0;
    for (b, a) in before.iter().zip(&after) {
        if *b < 0.0 {
            assert_eq!(a, b, "inhibitory weight moved");
        } else {
            assert!((0.0..=p.w_max).contains(a));
            changed += (a != b) as usize;
        }
    }
    assert!(changed > 0);
}
