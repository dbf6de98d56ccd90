//! Simulation and drift-parameter estimation for the Cox-Ingersoll-Ross process
//! `dr = (a - b r) dt + sigma sqrt(r) dW` observed along a finely sampled path.

pub mod cli;
pub mod config;
pub mod error;
pub mod estimators;
pub mod model;
pub mod montecarlo;
pub mod quad;
pub mod simulate;
pub mod statistics;

pub use error::{Error, Result};
pub use estimators::{alt_estimate, mle_estimate, residual_decomposition, to_alpha_mu, DriftEstimate, EstimatorKind};
pub use model::{stationary_density, stationary_moment, transient_mean, ModelParams, MomentKind, StationaryLaw};
pub use montecarlo::{run_experiment, run_experiment_with_workers, summarize, ExperimentConfig, MonteCarloReport};
pub use simulate::{derive_replication_seed, simulate_path, Path, Scheme, SimConfig};
pub use statistics::{checkpoint_statistics, ergodic_gaps, path_statistics, PathStatistics};
