//! Configuration, scenario orchestration, and persistence of results.

pub mod config;
pub mod initial;
mod output;
mod scenarios;

pub use config::{ExperimentConfig, ForcingConfig, InitialConfig, IntegratorConfig, ModeAmplitude, PairKind, Scenario, ScenarioOptions};
pub use initial::{build_forcing, build_initial, gaussian_bump, seeded_initial_data, ManufacturedSource};
pub use output::{write_bundle, write_failure, write_series, SERIES_HEADER};
pub use scenarios::{
    galerkin_refinement, record_trajectory, run_scenario, temporal_order, trajectory_certificates, GapSeries, ResultBundle,
};
