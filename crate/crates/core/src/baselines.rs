//! Comparison schemes and the budget-constrained variant, all built on the
//! feasibility and cost-minimization machinery.

use serde::{Deserialize, Serialize};

use crate::audit::{audit_solution, AuditReport};
use crate::channel::ChannelSet;
use crate::config::SolverConfig;
use crate::costmin::{run_budget, run_costmin_with, Config, CostminVariant, Ctx};
use crate::feasibility::{run_feasibility_with, FeasibilityReport};
use crate::phase::{self, EtaMode, PhaseTask};
use crate::plan::{CostBreakdown, Plan, RunStatus};
use crate::pruning::run_pruning_with;
use crate::scenario::{DeploymentSolution, Scenario};
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum Scheme {
    Joint,
    Pruned,
    PerAreaUnion,
    AllIrs,
    FpaIrs { kappa: f64 },
    BudgetMa { budget: f64 },
    BudgetFpa { budget: f64, kappa: f64 },
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::Joint => "joint",
            Scheme::Pruned => "pruned",
            Scheme::PerAreaUnion => "per_area_union",
            Scheme::AllIrs => "all_irs",
            Scheme::FpaIrs { .. } => "fpa_irs",
            Scheme::BudgetMa { .. } => "budget_ma",
            Scheme::BudgetFpa { .. } => "budget_fpa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub feasible: bool,
    /// `None` when the scheme found no deployment.
    pub cost: Option<CostBreakdown>,
    /// Worst SNR per area, dB.
    pub worst_snr_db: Vec<f64>,
    pub ma_counts: Vec<usize>,
    pub sites: usize,
    pub elements: usize,
    pub status: RunStatus,
    pub solution: Option<DeploymentSolution>,
    pub audit: Option<AuditReport>,
}

impl SchemeResult {
    pub fn total_cost(&self) -> Option<f64> {
        self.cost.as_ref().map(|c| c.total)
    }

    /// Minimum over all areas, dB; `None` without a deployment.
    pub fn worst_db(&self) -> Option<f64> {
        let w = self.worst_snr_db.iter().copied().fold(f64::INFINITY, f64::min);
        (w.is_finite()).then_some(w)
    }

    pub fn from_plan(scheme: Scheme, plan: &Plan, scenario: &Scenario) -> Self {
        Self {
            scheme,
            feasible: plan.audit.passed,
            cost: Some(plan.cost.clone()),
            worst_snr_db: plan.audit.worst_snr_db.clone(),
            ma_counts: plan.solution.ma_counts(),
            sites: plan.solution.site_count(),
            elements: plan.installed_elements(scenario),
            status: plan.status,
            solution: Some(plan.solution.clone()),
            audit: Some(plan.audit.clone()),
        }
    }

    pub fn infeasible(scheme: Scheme, scenario: &Scenario) -> Self {
        Self {
            scheme,
            feasible: false,
            cost: None,
            worst_snr_db: Vec::new(),
            ma_counts: vec![0; scenario.n_areas()],
            sites: 0,
            elements: 0,
            status: RunStatus::NotConverged,
            solution: None,
            audit: None,
        }
    }
}

/// Shared channels and feasibility run for evaluating several schemes on
/// one scenario.
pub struct SchemeRunner<'a> {
    scenario: &'a Scenario,
    config: SolverConfig,
    ch: ChannelSet,
    init: FeasibilityReport,
}

impl<'a> SchemeRunner<'a> {
    pub fn new(scenario: &'a Scenario, config: &SolverConfig) -> Result<Self> {
        let ch = ChannelSet::new(scenario)?;
        let init = run_feasibility_with(scenario, &ch, config)?;
        Ok(Self {
            scenario,
            config: *config,
            ch,
            init,
        })
    }

    pub fn feasibility(&self) -> &FeasibilityReport {
        &self.init
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.ch
    }

    /// The joint plan, or `None` when the scenario is infeasible.
    pub fn joint_plan(&self) -> Result<Option<Plan>> {
        self.plan(&CostminVariant::joint(self.scenario))
    }

    fn plan(&self, variant: &CostminVariant) -> Result<Option<Plan>> {
        match run_costmin_with(self.scenario, &self.ch, &self.config, &self.init, variant) {
            Ok(p) => Ok(Some(p)),
            Err(Error::Infeasible(msg)) => {
                log::debug!("scheme infeasible: {msg}");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn wrap(&self, scheme: Scheme, plan: Option<Plan>) -> SchemeResult {
        match plan {
            Some(p) => SchemeResult::from_plan(scheme, &p, self.scenario),
            None => SchemeResult::infeasible(scheme, self.scenario),
        }
    }

    pub fn run(&self, scheme: Scheme) -> Result<SchemeResult> {
        match scheme {
            Scheme::Joint => Ok(self.wrap(scheme, self.joint_plan()?)),
            Scheme::Pruned => {
                let joint = self.joint_plan()?;
                self.pruned(joint.as_ref())
            }
            Scheme::PerAreaUnion => per_area_union(self.scenario, &self.config),
            Scheme::AllIrs => Ok(self.wrap(scheme, self.plan(&CostminVariant::all_irs(self.scenario))?)),
            Scheme::FpaIrs { kappa } => {
                check_kappa(kappa)?;
                Ok(self.wrap(scheme, self.plan(&CostminVariant::fixed_array(self.scenario, kappa))?))
            }
            Scheme::BudgetMa { budget } => self.budget(scheme, budget, &CostminVariant::joint(self.scenario)),
            Scheme::BudgetFpa { budget, kappa } => {
                check_kappa(kappa)?;
                self.budget(scheme, budget, &CostminVariant::fixed_array(self.scenario, kappa))
            }
        }
    }

    /// Prunes an already computed joint plan.
    pub fn pruned(&self, joint: Option<&Plan>) -> Result<SchemeResult> {
        match joint {
            Some(p) => {
                let pruned = run_pruning_with(p, self.scenario, &self.ch, &self.config)?;
                Ok(SchemeResult::from_plan(Scheme::Pruned, &pruned, self.scenario))
            }
            None => Ok(SchemeResult::infeasible(Scheme::Pruned, self.scenario)),
        }
    }

    fn budget(&self, scheme: Scheme, budget: f64, variant: &CostminVariant) -> Result<SchemeResult> {
        if !(budget >= 0.0 && budget.is_finite()) {
            return Err(Error::Config(format!("budget must be a finite non-negative number, got {budget}")));
        }
        let ctx = Ctx::new(self.scenario, &self.ch, &self.config, variant);
        let out = run_budget(&ctx, &self.init, budget)?;
        log::debug!("budget {budget}: normalized floor {:.4}", out.eta);
        let audit = audit_solution(self.scenario, &out.solution, self.config.audit_tolerance)?;
        let cost = CostBreakdown::compute(&out.solution, self.scenario, variant.antenna_unit);
        Ok(SchemeResult {
            scheme,
            feasible: out.feasible,
            worst_snr_db: audit.worst_snr_db.clone(),
            ma_counts: out.solution.ma_counts(),
            sites: out.solution.site_count(),
            elements: out.solution.installed_count(self.scenario).iter().sum(),
            cost: Some(cost),
            status: out.status,
            solution: Some(out.solution),
            audit: Some(audit),
        })
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("κ must be positive, got {kappa}")))
    }
}

/// Union of independent single-area designs: every site any area picked,
/// and the largest per-area antenna count.
pub fn per_area_union(scenario: &Scenario, config: &SolverConfig) -> Result<SchemeResult> {
    let scheme = Scheme::PerAreaUnion;
    let mut plans = Vec::with_capacity(scenario.n_areas());
    for area in scenario.areas() {
        let sub = scenario.with_areas(vec![area.clone()])?;
        let runner = SchemeRunner::new(&sub, config)?;
        match runner.joint_plan()? {
            Some(p) => plans.push(p),
            None => return Ok(SchemeResult::infeasible(scheme, scenario)),
        }
    }
    if plans.len() == 1 {
        return Ok(SchemeResult::from_plan(scheme, &plans[0], scenario));
    }
    let l_count = scenario.n_sites();
    let z: Vec<bool> = (0..l_count).map(|l| plans.iter().any(|p| p.solution.z[l])).collect();
    let x: Vec<Vec<bool>> = plans.iter().map(|p| p.solution.x[0].clone()).collect();
    let ch = ChannelSet::new(scenario)?;
    let active: Vec<bool> = (0..scenario.n_elements()).map(|n| z[ch.site_of(n)]).collect();
    // sites added by other areas still reflect; give them phases that help
    let v: Vec<Vec<Complex64>> = plans
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let own = p.solution.phase_vector(0);
            let xw: Vec<f64> = x[j].iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            let task = PhaseTask {
                area: j,
                x: &xw,
                active: &active,
                gamma: scenario.areas()[j].gamma_th(),
            };
            let m0 = x[j].iter().position(|&b| b).unwrap_or(0);
            let aligned = phase::align_to(&ch, j, scenario.areas()[j].centroid_sample(), m0, &active);
            let mut best = own.clone();
            let mut best_floor = f64::NEG_INFINITY;
            for k in 0..ROTATIONS {
                let rot = Complex64::from_polar(1.0, k as f64 * std::f64::consts::TAU / ROTATIONS as f64);
                let cand: Vec<Complex64> = (0..own.len())
                    .map(|n| {
                        let l = ch.site_of(n);
                        if p.solution.z[l] || !z[l] { own[n] } else { aligned[n] * rot }
                    })
                    .collect();
                let f = phase::floor(&ch, &task, &cand);
                if f > best_floor {
                    best_floor = f;
                    best = cand;
                }
            }
            if best_floor < 1.0 {
                best = phase::refine(&ch, &[task], &[best], EtaMode::PerArea, config.polish_iterations, &config.conic)
                    .remove(0);
            }
            best
        })
        .collect();
    let sol = Config { x, z, v }.solution();
    let status = if plans.iter().all(|p| p.status == RunStatus::Converged) {
        RunStatus::Converged
    } else {
        RunStatus::NotConverged
    };
    let plan = Plan::new(scenario, sol, scenario.cost().ma, status, Vec::new(), config.audit_tolerance)?;
    Ok(SchemeResult::from_plan(scheme, &plan, scenario))
}

/// Extra-site phase rotations tried when merging per-area designs.
const ROTATIONS: usize = 8;

pub fn all_irs(scenario: &Scenario, config: &SolverConfig) -> Result<SchemeResult> {
    SchemeRunner::new(scenario, config)?.run(Scheme::AllIrs)
}

pub fn fpa_irs(scenario: &Scenario, config: &SolverConfig, kappa: f64) -> Result<SchemeResult> {
    SchemeRunner::new(scenario, config)?.run(Scheme::FpaIrs { kappa })
}

/// Maximizes the worst normalized SNR within `budget` with movable
/// antennas, or with a fixed array priced at `κ·c_MA` when `kappa` is given.
pub fn budget_snr_max(scenario: &Scenario, config: &SolverConfig, budget: f64, kappa: Option<f64>) -> Result<SchemeResult> {
    let scheme = match kappa {
        Some(kappa) => Scheme::BudgetFpa { budget, kappa },
        None => Scheme::BudgetMa { budget },
    };
    SchemeRunner::new(scenario, config)?.run(scheme)
}

#[cfg(test)]
mod tests;
