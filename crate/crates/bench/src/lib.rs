//! Shared fixtures for the criterion benchmarks.

use awm_core::{GridSpec, ModelParams, RedistributionPolicy, SolverConfig};

/// Unit-mean model with `n` agents.
pub fn params(zeta: f64, lambda: f64, n: usize) -> ModelParams {
    ModelParams::new(zeta, lambda, n, n as f64).expect("valid benchmark parameters")
}

pub fn flat(chi: f64) -> RedistributionPolicy {
    RedistributionPolicy::flat(chi)
}

/// Default solver on an `nodes`-point grid.
pub fn solver(nodes: usize) -> SolverConfig {
    SolverConfig { grid: GridSpec::new(nodes, 2.0, 1000.0).expect("valid grid"), ..SolverConfig::default() }
}
