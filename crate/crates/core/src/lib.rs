//! Kinetic wealth-exchange models with general redistribution.

pub mod asymptotics;
pub mod distribution;
mod error;
pub mod fitting;
pub mod fp;
pub mod grid;
pub mod lorenz;
pub mod mc;
pub mod model;
pub mod policy;
pub mod potentials;

pub use asymptotics::{
    check_assumptions, crossover_wealth, forward_tail, invert_redistribution, validate_reduction, InvertedPolicy,
    MomentInputs, TailFamily, TailFunction,
};
pub use distribution::WealthDistribution;
pub use error::{Error, Result};
pub use fitting::{fit, load_survey, EmpiricalLorenz, FitConfig, FitResult, Theta};
pub use fp::{steady_state, SolverConfig, SteadyStateReport};
pub use grid::GridSpec;
pub use lorenz::{gini, lorenz_curve};
pub use mc::{AgentEnsemble, SimConfig};
pub use model::{l_infinity_eysm, oligarch_fraction_awm, ModelParams};
pub use policy::{eval_policy, CatalogueFamily, RateFunction, RedistributionPolicy};
pub use potentials::{compute_potentials, Potentials};
