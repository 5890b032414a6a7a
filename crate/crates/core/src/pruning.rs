//! Element pruning: with antennas, sites and phases of a feasible plan held
//! fixed, choose which elements of the selected IRSs to actually install.
//! The per-sample SNR is the quadratic form `pbar·yᵀQ_j(u)y` in the real
//! installation vector `y`; a penalized SCA on `y` is followed by rounding,
//! an audit with the exact quadratic and greedy re-installation.

use rayon::prelude::*;

use crate::channel::{CMatrix, ChannelSet};
use crate::conic::{solve_lp_with, LinearProgramSpec};
use crate::config::SolverConfig;
use crate::feasibility::{weights, TraceRecord};
use crate::plan::{Plan, RunStatus};
use crate::sca::binary_penalty;
use crate::scenario::{DeploymentSolution, Scenario};
use crate::{Complex64, Result};

/// Dense `Q_j(u)` of a solution at sample `s` of area `j`, so that the MRT
/// SNR with installation vector `y` is `pbar·yᵀQy`.
pub fn build_q(ch: &ChannelSet, sol: &DeploymentSolution, j: usize, s: usize) -> CMatrix {
    ch.q_matrix(j, s, &sol.phase_vector(j), &sol.x[j], &sol.z)
}

struct Problem<'a> {
    scenario: &'a Scenario,
    ch: &'a ChannelSet,
    sol: &'a DeploymentSolution,
    v: Vec<Vec<Complex64>>,
    xw: Vec<Vec<f64>>,
    /// Elements on selected sites; all others stay uninstalled.
    free: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn new(scenario: &'a Scenario, ch: &'a ChannelSet, sol: &'a DeploymentSolution) -> Self {
        let free = (0..scenario.n_elements())
            .filter(|&n| sol.z[scenario.site_of_element(n)])
            .collect();
        Self {
            scenario,
            ch,
            sol,
            v: (0..scenario.n_areas()).map(|j| sol.phase_vector(j)).collect(),
            xw: sol.x.iter().map(|r| weights(r)).collect(),
            free,
        }
    }

    fn samples(&self) -> Vec<(usize, usize)> {
        (0..self.scenario.n_areas())
            .flat_map(|j| (0..self.ch.n_samples(j)).map(move |s| (j, s)))
            .collect()
    }

    fn weighted(&self, j: usize, y: &[f64]) -> Vec<Complex64> {
        self.v[j].iter().zip(y).map(|(v, y)| v * *y).collect()
    }

    /// `yᵀQy·pbar/γ` and its gradient over the stacked elements.
    fn value_and_gradient(&self, j: usize, s: usize, y: &[f64]) -> (f64, Vec<f64>) {
        let scale = self.ch.pbar() / self.scenario.areas()[j].gamma_th();
        let (q, power) = self.ch.r_times(j, s, &self.weighted(j, y), &self.xw[j]);
        let grad = self.v[j]
            .iter()
            .zip(&q)
            .map(|(v, q)| 2.0 * scale * (v.conj() * q).re)
            .collect();
        (scale * power, grad)
    }

    /// Exact normalized SNR at every sample.
    fn normalized(&self, y: &[f64]) -> Vec<f64> {
        self.samples()
            .par_iter()
            .map(|&(j, s)| {
                let scale = self.ch.pbar() / self.scenario.areas()[j].gamma_th();
                scale * self.ch.r_times(j, s, &self.weighted(j, y), &self.xw[j]).1
            })
            .collect()
    }

    /// One penalized LP around `y_r`; `None` if it has no optimal point.
    fn step(&self, y_r: &[f64], nu: f64, config: &SolverConfig) -> Option<Vec<f64>> {
        let element = self.scenario.cost().element;
        let mut lp = LinearProgramSpec::default();
        let vars: Vec<usize> = self
            .free
            .iter()
            .map(|&n| lp.add_var(0.0, 1.0, -element - nu * binary_penalty(y_r[n]).0))
            .collect();
        let rows: Vec<(Vec<(usize, f64)>, f64)> = self
            .samples()
            .par_iter()
            .map(|&(j, s)| {
                let (f, g) = self.value_and_gradient(j, s, y_r);
                // 2Re{y_rᵀQy} − y_rᵀQy_r = gᵀy − f ≥ 1
                let coeffs = self.free.iter().zip(&vars).map(|(&n, &i)| (i, -g[n])).collect();
                (coeffs, -1.0 - f)
            })
            .collect();
        for (c, b) in rows {
            lp.add_row(c, b);
        }
        let out = solve_lp_with(&lp, &config.conic);
        if !out.is_optimal() {
            log::debug!("pruning LP ended with {:?}", out.status);
            return None;
        }
        let mut y = vec![0.0; self.scenario.n_elements()];
        for (&n, &i) in self.free.iter().zip(&vars) {
            y[n] = out.x[i].clamp(0.0, 1.0);
        }
        Some(y)
    }

    /// Re-installs elements one at a time, each time the one that raises
    /// the worst exact normalized SNR most, until every sample passes.
    fn repair(&self, y: &mut [f64]) -> bool {
        loop {
            let worst = |y: &[f64]| self.normalized(y).into_iter().fold(f64::INFINITY, f64::min);
            let current = worst(y);
            if current >= 1.0 {
                return true;
            }
            let best = self
                .free
                .par_iter()
                .filter(|&&n| y[n] < 0.5)
                .map(|&n| {
                    let mut t = y.to_vec();
                    t[n] = 1.0;
                    (n, worst(&t))
                })
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((n, _)) => y[n] = 1.0,
                None => return false,
            }
        }
    }

    fn solution(&self, y: &[f64]) -> DeploymentSolution {
        let installed = self
            .scenario
            .sites()
            .iter()
            .enumerate()
            .map(|(l, _)| self.scenario.element_range(l).map(|n| y[n] >= 0.5).collect())
            .collect();
        DeploymentSolution {
            installed: Some(installed),
            ..self.sol.clone()
        }
    }
}

pub fn run_pruning(plan: &Plan, scenario: &Scenario, config: &SolverConfig) -> Result<Plan> {
    let ch = ChannelSet::new(scenario)?;
    run_pruning_with(plan, scenario, &ch, config)
}

/// Prunes `plan`; the result never costs more and always passes the audit
/// (the input plan is returned unchanged otherwise).
pub fn run_pruning_with(plan: &Plan, scenario: &Scenario, ch: &ChannelSet, config: &SolverConfig) -> Result<Plan> {
    let base = DeploymentSolution {
        installed: None,
        ..plan.solution.clone()
    };
    let prob = Problem::new(scenario, ch, &base);
    let mut y: Vec<f64> = (0..scenario.n_elements())
        .map(|n| {
            let l = scenario.site_of_element(n);
            let local = n - scenario.element_range(l).start;
            if plan.solution.element_installed(l, local) { 1.0 } else { 0.0 }
        })
        .collect();
    if prob.free.is_empty() || prob.normalized(&y).iter().any(|&f| f < 1.0 - config.audit_tolerance) {
        log::debug!("pruning skipped: nothing to prune or the input misses a threshold");
        return Ok(plan.clone());
    }
    let sched = config.penalty;
    let mut nu = sched.initial_fraction * scenario.cost().element.max(1e-9);
    let mut trace = plan.trace.clone();
    let mut status = RunStatus::NotConverged;
    let objective = |y: &[f64], nu: f64| -> f64 {
        let count: f64 = prob.free.iter().map(|&n| y[n]).sum();
        let gap: f64 = prob.free.iter().map(|&n| y[n] * (1.0 - y[n])).sum();
        scenario.cost().element * count + nu * gap
    };
    'outer: for outer in 0..sched.max_outer {
        let mut prev = objective(&y, nu);
        let mut inner = 0;
        while inner < sched.max_inner {
            inner += 1;
            let Some(next) = prob.step(&y, nu, config) else {
                break 'outer;
            };
            y = next;
            let f = objective(&y, nu);
            let done = (f - prev).abs() <= sched.tol_inner * f.abs().max(1e-12);
            prev = f;
            if done {
                break;
            }
        }
        let violation = prob.free.iter().map(|&n| y[n] * (1.0 - y[n])).fold(0.0, f64::max);
        trace.push(TraceRecord {
            outer,
            inner_iterations: inner,
            penalties: vec![nu],
            objective: prev,
            max_violation: violation,
        });
        if violation < sched.tol_binary {
            status = RunStatus::Converged;
            break;
        }
        nu *= sched.growth;
    }

    let mut yb: Vec<f64> = y.iter().map(|&a| if a >= 0.5 { 1.0 } else { 0.0 }).collect();
    if !prob.repair(&mut yb) {
        return Ok(plan.clone());
    }
    let pruned = Plan::new(
        scenario,
        prob.solution(&yb),
        plan.cost.antenna_unit,
        status,
        trace,
        config.audit_tolerance,
    )?;
    if pruned.audit.passed && pruned.total_cost() <= plan.total_cost() {
        Ok(pruned)
    } else {
        Ok(plan.clone())
    }
}

#[cfg(test)]
mod tests;
