//! Shared helpers for the criterion benchmarks in `benches/`.

use hierclass::{generate_synthetic, Hierarchy, SynthConfig};

/// Complete tree of the given shape with leaves labeled, without samples.
pub fn synth_tree(depth: usize, branching: usize) -> Hierarchy {
    let cfg = SynthConfig {
        depth,
        branching,
        samples_per_leaf: 1,
        dim: 1,
        level_scale: 1.0,
        noise: 1.0,
        seed: 0,
    };
    generate_synthetic(&cfg).unwrap().0
}
