//! Fixtures shared by the benchmarks.

use boxreg::sampling::PairSampler;
use boxreg::{generate_cases, BBox, LossKind, LossSpec, RegressionCase, ScenarioConfig};

pub fn pairs(n: usize, seed: u64) -> Vec<(BBox, BBox)> {
    let mut s = PairSampler::new(seed);
    (0..n).map(|_| s.sample_pair()).collect()
}

pub fn all_losses() -> Vec<LossSpec> {
    LossKind::ALL.iter().map(|k| k.default_spec()).collect()
}

/// A scenario small enough to time in a loop.
pub fn small_scenario(n_anchors: usize) -> Vec<RegressionCase> {
    let cfg = ScenarioConfig {
        n_anchors,
        ..Default::default()
    };
    generate_cases(&cfg).expect("default scenario is valid")
}
