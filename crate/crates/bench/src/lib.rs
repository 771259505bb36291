//! Experiment harness: method comparison, parameter-noise sweep, circuit
//! resources and circuit counts over seeded random paint shop instances.

pub mod config;
pub mod experiments;
pub mod measure;
pub mod output;

pub use config::{ExperimentConfig, Method, Mode};
pub use experiments::{
    run_circuit_count_report, run_method_comparison, run_on_instance, run_resource_report, run_sigma_sweep, CountRow, ResourceRow,
    ResultRow,
};
pub use measure::{aggregate, approximation_measure, Summary};
