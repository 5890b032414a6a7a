//! Experiment runner behind the `covplan` binary: scenario loading,
//! Monte-Carlo sweeps over one parameter, scheme execution and result
//! tables.

pub mod emit;
pub mod recipe;
pub mod run;
pub mod spec;

pub use emit::{emit, parse_structured, render, Format, Metadata, Report};
pub use recipe::{load_recipe, parse_recipe};
pub use run::{run_experiment, trial_seeds, ResultRow};
pub use spec::{Axis, Command, ExperimentSpec, ScenarioSource, SchemeTag, Sweep};
