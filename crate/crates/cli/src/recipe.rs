//! Recipe files: a whole experiment in TOML, optionally with inline
//! scenario overrides. The shipped presets live in `presets/`.
//!
//! ```toml
//! command = "sweep"
//! trials = 20
//! [sweep]
//! axis = "c_MA"
//! values = [10, 20, 30, 40, 50]
//! [scenario.areas]
//! gamma_db = 10
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::spec::{parse_value, Axis, Command, ExperimentSpec, ScenarioSource, Sweep};

/// Trials per point when a recipe does not say.
pub const DEFAULT_TRIALS: usize = 20;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Value {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecipeSweep {
    axis: Axis,
    values: Vec<Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecipeFile {
    #[allow(dead_code)]
    description: Option<String>,
    command: Command,
    trials: Option<usize>,
    seed: Option<u64>,
    kappa: Option<f64>,
    budget: Option<f64>,
    sweep: Option<RecipeSweep>,
    /// Path of a scenario file, relative to the recipe.
    scenario_file: Option<String>,
    /// Inline overrides in the scenario file format.
    scenario: Option<toml::Table>,
}

pub fn parse_recipe(text: &str, base: &Path) -> Result<ExperimentSpec> {
    let file: RecipeFile = toml::from_str(text)?;
    let scenario = match (file.scenario_file, file.scenario) {
        (Some(_), Some(_)) => bail!("give either scenario_file or a [scenario] table, not both"),
        (Some(p), None) => ScenarioSource::File(base.join(p)),
        (None, Some(t)) => ScenarioSource::Inline(toml::to_string(&t)?),
        (None, None) => ScenarioSource::Default,
    };
    let sweep = match file.sweep {
        Some(s) => Some(Sweep {
            axis: s.axis,
            values: s
                .values
                .iter()
                .map(|v| match v {
                    Value::Number(x) => Ok(*x),
                    Value::Text(t) => parse_value(t),
                })
                .collect::<Result<_>>()?,
        }),
        None => None,
    };
    let mut spec = ExperimentSpec::new(file.command);
    spec.scenario = scenario;
    spec.sweep = sweep;
    spec.trials = file.trials.unwrap_or(DEFAULT_TRIALS);
    spec.seed = file.seed.unwrap_or(0);
    if let Some(k) = file.kappa {
        spec.kappa = k;
    }
    spec.budget = file.budget;
    Ok(spec)
}

pub fn load_recipe(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_recipe(&text, base).with_context(|| format!("in recipe {}", path.display()))
}
