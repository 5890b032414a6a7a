//! Monte-Carlo execution of an [`ExperimentSpec`].

use std::time::Instant;

use anyhow::Result;
use covplan_core::scenario::Scenario;
use covplan_core::{DeploymentSolution, FeasibilityReport, RunStatus, SchemeResult, SchemeRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spec::{Axis, Command, ExperimentSpec, SchemeTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub axis: Option<Axis>,
    pub axis_value: Option<f64>,
    pub trial: usize,
    /// Seed of this trial's area draw.
    pub seed: u64,
    pub scheme: String,
    pub feasible: bool,
    /// Total cost; `None` without a deployment.
    pub cost: Option<f64>,
    /// Worst SNR over all samples of all areas, dB.
    pub worst_snr_db: Option<f64>,
    /// Antennas per area, averaged over areas.
    pub ma_per_area: f64,
    pub sites: usize,
    pub elements: usize,
    pub m_max: usize,
    pub wall_ms: Option<f64>,
    /// `converged`, `not_converged`, `infeasible` or `error: <message>`.
    pub status: String,
    /// Per-antenna price the cost was computed with.
    pub antenna_unit: Option<f64>,
    pub solution: Option<DeploymentSolution>,
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        self.status.starts_with("error")
    }
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Converged => "converged",
        RunStatus::NotConverged => "not_converged",
    }
}

/// Trial seeds, shared by every axis value so each trial sees the same
/// area draw along the sweep.
pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| rng.gen()).collect()
}

struct Point {
    axis: Option<Axis>,
    value: Option<f64>,
    trial: usize,
    seed: u64,
}

impl Point {
    fn row(&self, scheme: &str) -> ResultRow {
        ResultRow {
            axis: self.axis,
            axis_value: self.value,
            trial: self.trial,
            seed: self.seed,
            scheme: scheme.to_string(),
            feasible: false,
            cost: None,
            worst_snr_db: None,
            ma_per_area: 0.0,
            sites: 0,
            elements: 0,
            m_max: 0,
            wall_ms: None,
            status: String::new(),
            antenna_unit: None,
            solution: None,
        }
    }
}

fn labels(command: Command) -> Vec<&'static str> {
    match command {
        Command::Feasibility => vec!["feasibility"],
        c => c.schemes().into_iter().map(SchemeTag::name).collect(),
    }
}

fn mean_count(counts: &[usize]) -> f64 {
    if counts.is_empty() {
        0.0
    } else {
        counts.iter().sum::<usize>() as f64 / counts.len() as f64
    }
}

fn feasibility_row(p: &Point, sc: &Scenario, rep: &FeasibilityReport) -> ResultRow {
    let counts: Vec<usize> = rep.x.iter().map(|r| r.iter().filter(|&&b| b).count()).collect();
    ResultRow {
        feasible: rep.feasible,
        worst_snr_db: rep.worst_snr_db.iter().copied().reduce(f64::min),
        ma_per_area: mean_count(&counts),
        sites: sc.n_sites(),
        elements: sc.n_elements(),
        m_max: sc.m_max(),
        status: status_name(rep.status).into(),
        ..p.row("feasibility")
    }
}

fn scheme_row(p: &Point, sc: &Scenario, r: &SchemeResult) -> ResultRow {
    let status = if r.solution.is_none() {
        "infeasible"
    } else {
        status_name(r.status)
    };
    ResultRow {
        feasible: r.feasible,
        cost: r.total_cost(),
        worst_snr_db: r.worst_db(),
        ma_per_area: mean_count(&r.ma_counts),
        sites: r.sites,
        elements: r.elements,
        m_max: sc.m_max(),
        status: status.into(),
        antenna_unit: r.cost.as_ref().map(|c| c.antenna_unit),
        solution: r.solution.clone(),
        ..p.row(r.scheme.tag())
    }
}

fn run_point(spec: &ExperimentSpec, p: &Point) -> Vec<ResultRow> {
    match try_point(spec, p) {
        Ok(rows) => rows,
        Err(e) => {
            log::warn!("trial {} at {:?}: {e:#}", p.trial, p.value);
            labels(spec.command)
                .into_iter()
                .map(|name| ResultRow {
                    status: format!("error: {e:#}"),
                    ..p.row(name)
                })
                .collect()
        }
    }
}

fn try_point(spec: &ExperimentSpec, p: &Point) -> Result<Vec<ResultRow>> {
    let mut template = spec.scenario.load()?;
    let mut budget = spec.budget;
    if let (Some(axis), Some(v)) = (p.axis, p.value) {
        axis.apply(&mut template, v)?;
        if axis == Axis::Budget {
            budget = Some(v);
        }
    }
    let sc = template.instantiate(&mut ChaCha8Rng::seed_from_u64(p.seed))?;
    let start = Instant::now();
    let runner = SchemeRunner::new(&sc, &spec.config)?;
    let elapsed = |t: Instant| spec.timing.then(|| t.elapsed().as_secs_f64() * 1e3);
    if spec.command == Command::Feasibility {
        return Ok(vec![ResultRow {
            wall_ms: elapsed(start),
            ..feasibility_row(p, &sc, runner.feasibility())
        }]);
    }
    let mut rows = Vec::new();
    let mut joint = None;
    for tag in spec.command.schemes() {
        let t = Instant::now();
        let result = match tag {
            SchemeTag::Joint => {
                let plan = runner.joint_plan()?;
                let r = match &plan {
                    Some(plan) => SchemeResult::from_plan(tag.scheme(spec.kappa, budget), plan, &sc),
                    None => SchemeResult::infeasible(tag.scheme(spec.kappa, budget), &sc),
                };
                joint = Some(plan);
                r
            }
            SchemeTag::Pruned => match &joint {
                Some(plan) => runner.pruned(plan.as_ref())?,
                None => runner.run(tag.scheme(spec.kappa, budget))?,
            },
            _ => runner.run(tag.scheme(spec.kappa, budget))?,
        };
        rows.push(ResultRow {
            wall_ms: elapsed(t),
            ..scheme_row(p, &sc, &result)
        });
    }
    Ok(rows)
}

/// Runs every `(axis value, trial)` point, in parallel, and returns rows
/// ordered by axis value, then trial, then scheme. Failures are recorded in
/// the rows' status and never abort the run.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let seeds = trial_seeds(spec.seed, spec.trials);
    let axis = spec.sweep.as_ref().map(|s| s.axis);
    let points: Vec<Point> = spec
        .points()
        .into_iter()
        .map(|(value, trial)| Point {
            axis,
            value,
            trial,
            seed: seeds[trial],
        })
        .collect();
    let rows: Vec<Vec<ResultRow>> = points
        .par_iter()
        .map(|p| {
            let rows = run_point(spec, p);
            log::info!("{} trial {} at {}: done", spec.command, p.trial, p.value.map_or("-".into(), |v| v.to_string()));
            rows
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}
