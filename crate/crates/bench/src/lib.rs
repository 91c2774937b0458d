//! Fixtures shared by the benchmarks.

use bgev::{build_bgev, generate_synthetic, BgevDistribution, BlendSpec, GevParams, TrainingSet};

pub fn specs() -> (BlendSpec, BlendSpec) {
    (
        BlendSpec::positive_default(),
        BlendSpec::negative(0.85, 0.01).expect("valid default spec"),
    )
}

/// Upper-tail blend at the scenario shape.
pub fn upper_blend() -> BgevDistribution {
    let (p, n) = specs();
    build_bgev(GevParams::new(305.0, 1.0, -0.22).expect("valid"), p, n).expect("valid")
}

/// One 84-year series with a warming trend and bounded tail.
pub fn scenario_series() -> TrainingSet {
    generate_synthetic(1, 84, 1.4, -0.22, 1)
        .expect("valid synthetic config")
        .remove(0)
}
