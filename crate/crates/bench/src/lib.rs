//! Fixtures shared by the criterion benches.

use dpsnn_core::{build_network, GridSpec, Network};

/// A grid of `side`x`side` columns with `per_column` neurons and the
/// desk-scale fanout scaled to the column size.
pub fn grid(side: u32, per_column: u32) -> GridSpec {
    let neurons = (side * side * per_column) as f64;
    GridSpec {
        grid_x: side,
        grid_y: side,
        neurons_per_column: per_column,
        target_fanout: (neurons * 0.12).min(1195.0),
        ..GridSpec::default()
    }
}

pub fn network(side: u32, per_column: u32) -> Network {
    build_network(&grid(side, per_column)).expect("bench network")
}
