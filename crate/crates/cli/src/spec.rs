//! What to run: the command, the scenario template, an optional sweep axis
//! and the Monte-Carlo settings.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use covplan_core::scenario::{parse_scenario, parse_scenario_str, ScenarioSpec};
use covplan_core::{CostModel, Scheme, SolverConfig};
use serde::{Deserialize, Serialize};

/// A single scheme selectable with `baseline:<tag>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeTag {
    Joint,
    Pruned,
    PerAreaUnion,
    AllIrs,
    FpaIrs,
    BudgetMa,
    BudgetFpa,
}

impl SchemeTag {
    pub const ALL: [SchemeTag; 7] = [
        SchemeTag::Joint,
        SchemeTag::Pruned,
        SchemeTag::PerAreaUnion,
        SchemeTag::AllIrs,
        SchemeTag::FpaIrs,
        SchemeTag::BudgetMa,
        SchemeTag::BudgetFpa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeTag::Joint => "joint",
            SchemeTag::Pruned => "pruned",
            SchemeTag::PerAreaUnion => "per_area_union",
            SchemeTag::AllIrs => "all_irs",
            SchemeTag::FpaIrs => "fpa_irs",
            SchemeTag::BudgetMa => "budget_ma",
            SchemeTag::BudgetFpa => "budget_fpa",
        }
    }

    pub fn needs_budget(self) -> bool {
        matches!(self, SchemeTag::BudgetMa | SchemeTag::BudgetFpa)
    }

    /// The core scheme, with `kappa` and `budget` filled in where used.
    pub fn scheme(self, kappa: f64, budget: Option<f64>) -> Scheme {
        let budget = budget.unwrap_or(f64::NAN);
        match self {
            SchemeTag::Joint => Scheme::Joint,
            SchemeTag::Pruned => Scheme::Pruned,
            SchemeTag::PerAreaUnion => Scheme::PerAreaUnion,
            SchemeTag::AllIrs => Scheme::AllIrs,
            SchemeTag::FpaIrs => Scheme::FpaIrs { kappa },
            SchemeTag::BudgetMa => Scheme::BudgetMa { budget },
            SchemeTag::BudgetFpa => Scheme::BudgetFpa { budget, kappa },
        }
    }
}

impl FromStr for SchemeTag {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .with_context(|| {
                let names: Vec<_> = SchemeTag::ALL.iter().map(|t| t.name()).collect();
                format!("unknown scheme {s:?}; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Command {
    Feasibility,
    /// Joint cost minimization.
    Costmin,
    /// Joint plan followed by element pruning; emits both.
    Prune,
    Baseline(SchemeTag),
    /// Budget-constrained SNR maximization with movable and fixed arrays.
    Budget,
    /// The full cost comparison: joint, pruned, per-area union, all-IRS and FPA.
    Sweep,
}

impl Command {
    /// Schemes evaluated per trial, in row order. Empty for feasibility.
    pub fn schemes(self) -> Vec<SchemeTag> {
        match self {
            Command::Feasibility => Vec::new(),
            Command::Costmin => vec![SchemeTag::Joint],
            Command::Prune => vec![SchemeTag::Joint, SchemeTag::Pruned],
            Command::Baseline(t) => vec![t],
            Command::Budget => vec![SchemeTag::BudgetMa, SchemeTag::BudgetFpa],
            Command::Sweep => vec![
                SchemeTag::Joint,
                SchemeTag::Pruned,
                SchemeTag::PerAreaUnion,
                SchemeTag::AllIrs,
                SchemeTag::FpaIrs,
            ],
        }
    }

    pub fn needs_budget(self) -> bool {
        self.schemes().iter().any(|t| t.needs_budget())
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Feasibility => f.write_str("feasibility"),
            Command::Costmin => f.write_str("costmin"),
            Command::Prune => f.write_str("prune"),
            Command::Baseline(t) => write!(f, "baseline:{}", t.name()),
            Command::Budget => f.write_str("budget"),
            Command::Sweep => f.write_str("sweep"),
        }
    }
}

impl FromStr for Command {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "feasibility" => Command::Feasibility,
            "costmin" => Command::Costmin,
            "prune" => Command::Prune,
            "budget" => Command::Budget,
            "sweep" => Command::Sweep,
            other => match other.strip_prefix("baseline:") {
                Some(tag) => Command::Baseline(tag.parse()?),
                None => bail!(
                    "unknown command {other:?}; expected feasibility, costmin, prune, baseline:<tag>, budget or sweep"
                ),
            },
        })
    }
}

impl From<Command> for String {
    fn from(c: Command) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Command {
    type Error = anyhow::Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Sweepable quantity. `A` and `d` are in wavelengths, `γ` in dB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Axis {
    CMa,
    Aperture,
    Areas,
    GammaDb,
    Step,
    Budget,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::CMa => "c_MA",
            Axis::Aperture => "A",
            Axis::Areas => "J",
            Axis::GammaDb => "gamma",
            Axis::Step => "d",
            Axis::Budget => "budget",
        }
    }

    /// Applies `value` to the scenario template. `Budget` leaves it untouched.
    pub fn apply(self, spec: &mut ScenarioSpec, value: f64) -> Result<()> {
        let wl = spec.wavelength();
        match self {
            Axis::CMa => spec.cost = CostModel::new(value, spec.cost.element, spec.cost.fpa_ratio)?,
            Axis::Aperture => {
                ensure!(spec.step <= value * wl * (1.0 + 1e-9), "A = {value}λ is smaller than the grid step");
                spec.aperture = value * wl;
            }
            Axis::Areas => spec.set_area_count(value as usize)?,
            Axis::GammaDb => spec.set_gamma_db(value),
            Axis::Step => {
                ensure!(value * wl <= spec.aperture * (1.0 + 1e-9), "d = {value}λ exceeds the aperture");
                spec.step = value * wl;
            }
            Axis::Budget => {}
        }
        Ok(())
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "c_MA" | "c_ma" | "cma" => Axis::CMa,
            "A" | "aperture" => Axis::Aperture,
            "J" | "areas" => Axis::Areas,
            "gamma" | "γ" | "gamma_db" => Axis::GammaDb,
            "d" | "step" => Axis::Step,
            "budget" => Axis::Budget,
            other => bail!("unknown sweep axis {other:?}; expected c_MA, A, J, gamma, d or budget"),
        })
    }
}

impl From<Axis> for String {
    fn from(a: Axis) -> String {
        a.name().to_string()
    }
}

impl TryFrom<String> for Axis {
    type Error = anyhow::Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

/// Parses a single value; fractions such as `1/3` are accepted.
pub fn parse_value(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().with_context(|| format!("bad numerator in {s:?}"))?;
            let d: f64 = d.trim().parse().with_context(|| format!("bad denominator in {s:?}"))?;
            n / d
        }
        None => s.parse().with_context(|| format!("bad number {s:?}"))?,
    };
    ensure!(v.is_finite(), "{s:?} is not a finite number");
    Ok(v)
}

impl FromStr for Sweep {
    type Err = anyhow::Error;

    /// `axis=v1,v2,...`
    fn from_str(s: &str) -> Result<Self> {
        let (axis, values) = s.split_once('=').context("expected <axis>=v1,v2,...")?;
        let values = values.split(',').map(parse_value).collect::<Result<Vec<_>>>()?;
        Ok(Sweep {
            axis: axis.trim().parse()?,
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    /// Built-in defaults.
    Default,
    File(PathBuf),
    /// TOML text in the scenario file format.
    Inline(String),
}

impl ScenarioSource {
    pub fn load(&self) -> Result<ScenarioSpec> {
        Ok(match self {
            ScenarioSource::Default => ScenarioSpec::default(),
            ScenarioSource::File(p) => parse_scenario(p)?,
            ScenarioSource::Inline(text) => parse_scenario_str(text)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSource,
    pub command: Command,
    pub sweep: Option<Sweep>,
    pub trials: usize,
    pub seed: u64,
    /// FPA unit cost as a fraction of `c_MA`.
    pub kappa: f64,
    /// Budget for the budget schemes when it is not the sweep axis.
    pub budget: Option<f64>,
    /// Record wall-clock time per row. Off by default so that output is
    /// reproducible byte for byte.
    pub timing: bool,
    pub config: SolverConfig,
}

impl ExperimentSpec {
    pub fn new(command: Command) -> Self {
        Self {
            scenario: ScenarioSource::Default,
            command,
            sweep: None,
            trials: 1,
            seed: 0,
            kappa: 1.0 / 3.0,
            budget: None,
            timing: false,
            config: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.trials >= 1, "trials must be at least 1");
        ensure!(self.kappa > 0.0 && self.kappa.is_finite(), "kappa must be positive, got {}", self.kappa);
        if let Some(b) = self.budget {
            ensure!(b >= 0.0 && b.is_finite(), "budget must be non-negative, got {b}");
        }
        let budget_axis = matches!(&self.sweep, Some(s) if s.axis == Axis::Budget);
        if let Some(sweep) = &self.sweep {
            ensure!(!sweep.values.is_empty(), "sweep over {} has no values", sweep.axis);
            ensure!(sweep.values.iter().all(|v| v.is_finite()), "sweep values must be finite");
            ensure!(
                sweep.values.windows(2).all(|w| w[0] < w[1]),
                "sweep values must be sorted in increasing order without repeats"
            );
            match sweep.axis {
                Axis::Areas => ensure!(
                    sweep.values.iter().all(|&v| v >= 1.0 && v.fract() == 0.0),
                    "J values must be positive integers"
                ),
                Axis::Budget => {
                    ensure!(self.command.needs_budget(), "a budget sweep needs the budget command or a budget scheme");
                    ensure!(sweep.values.iter().all(|&v| v >= 0.0), "budgets must be non-negative");
                }
                Axis::CMa => ensure!(sweep.values.iter().all(|&v| v >= 0.0), "c_MA must be non-negative"),
                Axis::Aperture | Axis::Step => {
                    ensure!(sweep.values.iter().all(|&v| v > 0.0), "{} must be positive", sweep.axis)
                }
                Axis::GammaDb => {}
            }
        }
        if self.command.needs_budget() && !budget_axis {
            ensure!(self.budget.is_some(), "{} needs --budget or a budget sweep", self.command);
        }
        self.scenario.load().context("loading the scenario")?;
        Ok(())
    }

    /// `(axis value, trial)` pairs in output order.
    pub fn points(&self) -> Vec<(Option<f64>, usize)> {
        let values: Vec<Option<f64>> = match &self.sweep {
            Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        };
        values
            .into_iter()
            .flat_map(|v| (0..self.trials).map(move |t| (v, t)))
            .collect()
    }
}
