//! Shared fixtures for the criterion benches.

use dereg_core::{ExpressionMatrix, ModelParams, RegulatoryNetwork};

pub fn bench_params() -> ModelParams {
    ModelParams::new([1.0 / 3.0; 3], 0.1, [-1.0, 0.0, 1.0], [0.5; 3])
        .expect("fixture parameters are valid")
}

/// Deterministic network and data set sized for throughput measurements.
pub fn fixture(
    regulators: usize,
    targets: usize,
    samples: usize,
) -> (RegulatoryNetwork, ModelParams, ExpressionMatrix) {
    let net = dereg_core::random_network(regulators, targets, 3, 97).expect("valid sizes");
    let params = bench_params();
    let (data, _) = dereg_core::simulate(&net, &params, samples, 98).expect("simulation succeeds");
    (net, params, data)
}
