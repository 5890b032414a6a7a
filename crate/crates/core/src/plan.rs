//! Final deployment plans and their cost accounting.

use serde::{Deserialize, Serialize};

use crate::audit::{audit_solution, AuditReport};
use crate::feasibility::TraceRecord;
use crate::scenario::{DeploymentSolution, Scenario};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteCost {
    pub site: usize,
    pub install: f64,
    pub elements: usize,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Price of one antenna (`c_MA`, or `κ·c_MA` for fixed arrays).
    pub antenna_unit: f64,
    pub antennas: usize,
    pub antenna_total: f64,
    pub sites: Vec<SiteCost>,
    pub total: f64,
}

impl CostBreakdown {
    pub fn compute(sol: &DeploymentSolution, scenario: &Scenario, antenna_unit: f64) -> Self {
        let antennas = sol.max_ma_count();
        let element = scenario.cost().element;
        let sites: Vec<SiteCost> = scenario
            .sites()
            .iter()
            .enumerate()
            .filter(|(l, _)| sol.z[*l])
            .map(|(l, s)| {
                let elements = (0..s.n_elements()).filter(|&n| sol.element_installed(l, n)).count();
                SiteCost {
                    site: l,
                    install: s.install_cost(),
                    elements,
                    total: s.install_cost() + element * elements as f64,
                }
            })
            .collect();
        let antenna_total = antenna_unit * antennas as f64;
        let total = antenna_total + sites.iter().map(|s| s.total).sum::<f64>();
        Self {
            antenna_unit,
            antennas,
            antenna_total,
            sites,
            total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub solution: DeploymentSolution,
    pub cost: CostBreakdown,
    pub audit: AuditReport,
    pub status: RunStatus,
    pub trace: Vec<TraceRecord>,
}

impl Plan {
    pub fn new(
        scenario: &Scenario,
        solution: DeploymentSolution,
        antenna_unit: f64,
        status: RunStatus,
        trace: Vec<TraceRecord>,
        tolerance: f64,
    ) -> Result<Self> {
        let audit = audit_solution(scenario, &solution, tolerance)?;
        let cost = CostBreakdown::compute(&solution, scenario, antenna_unit);
        Ok(Self {
            solution,
            cost,
            audit,
            status,
            trace,
        })
    }

    pub fn total_cost(&self) -> f64 {
        self.cost.total
    }

    pub fn installed_elements(&self, scenario: &Scenario) -> usize {
        self.solution.installed_count(scenario).iter().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}
