//! Experiment plumbing: shapes, synthetic data, presets, and file outputs.

pub mod data;
pub mod experiment;
pub mod output;
pub mod selftest;
pub mod shape;
pub mod spec;

pub use data::{add_noise, generate_data, restrict_trace};
pub use experiment::{
    measure, reconstruct, run_experiment, run_from_data_dir, run_sweep, shape_difference, shape_error, ExperimentOutcome,
    Measurements, SweepRun,
};
pub use shape::{Primitive, Region};
pub use spec::{BetaAlphaRule, ExperimentSpec, SweepSpec, PRESET_NAMES};
