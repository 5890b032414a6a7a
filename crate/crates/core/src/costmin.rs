//! Cost minimization. A penalized deployment LP over antennas `x`, sites `z`
//! and the McCormick products `s = z_ℓ z_ℓ' x` alternates with a per-area
//! margin SOCP over the phases of the deployed elements. The relaxed
//! solution is then rounded, repaired and trimmed by a removal search.

use rayon::prelude::*;

use crate::channel::{pair_count, ChannelSet};
use crate::conic::{solve_lp_with, LinearProgramSpec};
use crate::config::SolverConfig;
use crate::feasibility::{antenna_gains, binary_violation, fill_antennas_to, weights, FeasibilityReport, TraceRecord};
use crate::phase::{self, EtaMode, PhaseTask};
use crate::plan::{Plan, RunStatus};
use crate::sca::binary_penalty;
use crate::scenario::{DeploymentSolution, Scenario};
use crate::{Complex64, Error, Result};

/// Variables pinned by a comparison scheme, plus the price of one antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct CostminVariant {
    pub fixed_x: Option<Vec<Vec<bool>>>,
    pub fixed_z: Option<Vec<bool>>,
    pub antenna_unit: f64,
}

impl CostminVariant {
    /// Everything free: the joint MA-IRS design.
    pub fn joint(scenario: &Scenario) -> Self {
        Self {
            fixed_x: None,
            fixed_z: None,
            antenna_unit: scenario.cost().ma,
        }
    }

    /// Every candidate IRS built.
    pub fn all_irs(scenario: &Scenario) -> Self {
        Self {
            fixed_x: None,
            fixed_z: Some(vec![true; scenario.n_sites()]),
            antenna_unit: scenario.cost().ma,
        }
    }

    /// Fixed-position array: the packing layout in every area, each antenna
    /// priced at `κ·c_MA`.
    pub fn fixed_array(scenario: &Scenario, kappa: f64) -> Self {
        Self {
            fixed_x: Some(vec![packing_mask(scenario); scenario.n_areas()]),
            fixed_z: None,
            antenna_unit: kappa * scenario.cost().ma,
        }
    }
}

pub(crate) fn packing_mask(scenario: &Scenario) -> Vec<bool> {
    let mut x = vec![false; scenario.n_antennas()];
    for &m in scenario.packing() {
        x[m] = true;
    }
    x
}

/// Removal choices tried per area when lowering the antenna count.
const SHRINK_TRIES: usize = 3;

#[derive(Debug, Clone)]
struct Relaxed {
    x: Vec<Vec<f64>>,
    z: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Goal {
    MinCost,
    MaxFloor { budget: f64 },
}

#[derive(Debug, Clone, Copy)]
enum Term {
    Const(f64),
    Var(usize),
}

/// Adds `s` with the convex-hull rows of `z_a·z_b·x` (of `z_a·z_b` when `x`
/// is `None`, i.e. pinned at 1). `a == b` is allowed.
pub(crate) fn add_product(lp: &mut LinearProgramSpec, za: usize, zb: usize, x: Option<usize>) -> usize {
    let s = lp.add_var(0.0, 1.0, 0.0);
    lp.add_row(vec![(s, 1.0), (za, -1.0)], 0.0);
    if zb != za {
        lp.add_row(vec![(s, 1.0), (zb, -1.0)], 0.0);
    }
    let mut lower = vec![(za, 1.0), (zb, 1.0), (s, -1.0)];
    match x {
        Some(xi) => {
            lp.add_row(vec![(s, 1.0), (xi, -1.0)], 0.0);
            lower.push((xi, 1.0));
            lp.add_row(lower, 2.0);
        }
        None => lp.add_row(lower, 1.0),
    }
    s
}

/// A binary configuration with its phases.
#[derive(Debug, Clone)]
pub(crate) struct Config {
    pub x: Vec<Vec<bool>>,
    pub z: Vec<bool>,
    pub v: Vec<Vec<Complex64>>,
}

impl Config {
    pub fn solution(&self) -> DeploymentSolution {
        DeploymentSolution {
            x: self.x.clone(),
            z: self.z.clone(),
            phases: self.v.iter().map(|vj| vj.iter().map(|c| c.arg()).collect()).collect(),
            installed: None,
        }
    }
}

/// Shared state of one cost-minimization or budget run.
pub(crate) struct Ctx<'a> {
    pub scenario: &'a Scenario,
    pub ch: &'a ChannelSet,
    pub config: &'a SolverConfig,
    pub variant: &'a CostminVariant,
    site_cost: Vec<f64>,
}

impl<'a> Ctx<'a> {
    pub fn new(scenario: &'a Scenario, ch: &'a ChannelSet, config: &'a SolverConfig, variant: &'a CostminVariant) -> Self {
        let site_cost = scenario
            .sites()
            .iter()
            .map(|s| s.install_cost() + scenario.cost().element * s.n_elements() as f64)
            .collect();
        Self {
            scenario,
            ch,
            config,
            variant,
            site_cost,
        }
    }

    pub fn cost(&self, x: &[Vec<bool>], z: &[bool]) -> f64 {
        let count = x.iter().map(|r| r.iter().filter(|&&b| b).count()).max().unwrap_or(0);
        self.variant.antenna_unit * count as f64
            + z.iter().zip(&self.site_cost).filter(|(&b, _)| b).map(|(_, c)| c).sum::<f64>()
    }

    fn relaxed_cost(&self, r: &Relaxed) -> f64 {
        let t = r.x.iter().map(|row| row.iter().sum::<f64>()).fold(0.0, f64::max);
        self.variant.antenna_unit * t + r.z.iter().zip(&self.site_cost).map(|(z, c)| z * c).sum::<f64>()
    }

    pub fn element_mask(&self, z: &[bool]) -> Vec<bool> {
        (0..self.ch.n_elements()).map(|n| z[self.ch.site_of(n)]).collect()
    }

    fn tasks<'b>(&self, xw: &'b [Vec<f64>], active: &'b [bool]) -> Vec<PhaseTask<'b>> {
        self.scenario
            .areas()
            .iter()
            .enumerate()
            .map(|(j, a)| PhaseTask {
                area: j,
                x: &xw[j],
                active,
                gamma: a.gamma_th(),
            })
            .collect()
    }

    /// Worst normalized SNR of each area.
    pub fn floors(&self, c: &Config) -> Vec<f64> {
        let active = self.element_mask(&c.z);
        let xw: Vec<Vec<f64>> = c.x.iter().map(|r| weights(r)).collect();
        self.tasks(&xw, &active)
            .iter()
            .zip(&c.v)
            .map(|(t, vj)| phase::floor(self.ch, t, vj))
            .collect()
    }

    pub fn meets(&self, floors: &[f64]) -> bool {
        floors.iter().all(|&f| f >= 1.0)
    }

    /// Phase-independent bound `|a_m| ≤ Σ_n |Ψ_nm|`; `false` rules the
    /// configuration out for any phases.
    fn may_meet(&self, x: &[Vec<bool>], z: &[bool]) -> bool {
        self.scenario.areas().iter().enumerate().all(|(j, area)| {
            (0..self.ch.n_samples(j)).all(|s| {
                let w = self.ch.element_gains(j, s);
                let mut per_site = vec![0.0; z.len()];
                for (n, wn) in w.iter().enumerate() {
                    per_site[self.ch.site_of(n)] += wn.norm();
                }
                let bound: f64 = (0..self.ch.n_antennas())
                    .filter(|&m| x[j][m])
                    .map(|m| {
                        let amp: f64 = (0..z.len())
                            .filter(|&l| z[l])
                            .map(|l| per_site[l] * self.ch.bs_steering(l)[m].norm())
                            .sum();
                        amp * amp
                    })
                    .sum();
                self.ch.pbar() * bound >= area.gamma_th() * (1.0 - 1e-9)
            })
        })
    }

    /// Phase refinement for a fixed binary configuration.
    pub fn polish(&self, c: &mut Config, mode: EtaMode) {
        let active = self.element_mask(&c.z);
        if !active.iter().any(|&a| a) || c.x.iter().any(|r| !r.iter().any(|&b| b)) {
            return;
        }
        let xw: Vec<Vec<f64>> = c.x.iter().map(|r| weights(r)).collect();
        let tasks = self.tasks(&xw, &active);
        c.v = phase::refine(self.ch, &tasks, &c.v, mode, self.config.polish_iterations, &self.config.conic);
    }

    fn round(&self, r: &Relaxed) -> (Vec<Vec<bool>>, Vec<bool>) {
        let x = match &self.variant.fixed_x {
            Some(fx) => fx.clone(),
            None => r
                .x
                .iter()
                .map(|row| {
                    let mut xj: Vec<bool> = row.iter().map(|&a| a >= 0.5).collect();
                    for &(a, b) in self.scenario.conflicts().pairs() {
                        if xj[a] && xj[b] {
                            if row[a] >= row[b] {
                                xj[b] = false;
                            } else {
                                xj[a] = false;
                            }
                        }
                    }
                    while xj.iter().filter(|&&b| b).count() > self.scenario.m_max() {
                        let weakest = (0..xj.len())
                            .filter(|&m| xj[m])
                            .min_by(|&a, &b| row[a].total_cmp(&row[b]))
                            .expect("non-empty");
                        xj[weakest] = false;
                    }
                    xj
                })
                .collect(),
        };
        let z = match &self.variant.fixed_z {
            Some(fz) => fz.clone(),
            None => r.z.iter().map(|&a| a >= 0.5).collect(),
        };
        (x, z)
    }

    /// Penalized deployment LP around `cur`. Returns the new relaxed point and
    /// the floor variable (meaningful for [`Goal::MaxFloor`]), or `None` when
    /// the LP has no optimal solution.
    fn deployment_step(&self, v: &[Vec<Complex64>], cur: &Relaxed, goal: Goal, zeta: f64) -> Option<(Relaxed, f64)> {
        let sc = self.scenario;
        let m_count = sc.n_antennas();
        let l_count = sc.n_sites();
        let p_count = pair_count(l_count);
        let unit = self.variant.antenna_unit;
        let min_cost = goal == Goal::MinCost;
        let mut lp = LinearProgramSpec::default();

        let x_vars: Option<Vec<Vec<usize>>> = match &self.variant.fixed_x {
            Some(_) => None,
            None => Some(
                cur.x
                    .iter()
                    .map(|row| row.iter().map(|&xr| lp.add_var(0.0, 1.0, -zeta * binary_penalty(xr).0)).collect())
                    .collect(),
            ),
        };
        let z_vars: Option<Vec<usize>> = match &self.variant.fixed_z {
            Some(_) => None,
            None => Some(
                cur.z
                    .iter()
                    .zip(&self.site_cost)
                    .map(|(&zr, &c)| {
                        let price = if min_cost { c } else { 0.0 };
                        lp.add_var(0.0, 1.0, -price - zeta * binary_penalty(zr).0)
                    })
                    .collect(),
            ),
        };
        let t_var = x_vars.as_ref().map(|_| {
            let price = if min_cost { unit } else { 0.0 };
            lp.add_var(0.0, sc.m_max() as f64, -price)
        });
        let eta_var = (!min_cost).then(|| lp.add_var(0.0, self.config.eta_cap, 1.0));

        if let (Some(xv), Some(t)) = (&x_vars, t_var) {
            for row in xv {
                let mut coeffs: Vec<(usize, f64)> = row.iter().map(|&i| (i, 1.0)).collect();
                coeffs.push((t, -1.0));
                lp.add_row(coeffs, 0.0);
                for &(a, b) in sc.conflicts().pairs() {
                    lp.add_row(vec![(row[a], 1.0), (row[b], 1.0)], 1.0);
                }
                if sc.m_max() < m_count {
                    lp.add_row(row.iter().map(|&i| (i, 1.0)).collect(), sc.m_max() as f64);
                }
            }
        }
        if let Goal::MaxFloor { budget } = goal {
            let mut fixed = 0.0;
            if let Some(fx) = &self.variant.fixed_x {
                fixed += unit * fx.iter().map(|r| r.iter().filter(|&&b| b).count()).max().unwrap_or(0) as f64;
            }
            if let Some(fz) = &self.variant.fixed_z {
                fixed += fz.iter().zip(&self.site_cost).filter(|(&b, _)| b).map(|(_, c)| c).sum::<f64>();
            }
            let mut coeffs = Vec::new();
            if let Some(t) = t_var {
                coeffs.push((t, unit));
            }
            if let Some(zv) = &z_vars {
                coeffs.extend(zv.iter().zip(&self.site_cost).map(|(&i, &c)| (i, c)));
            }
            if budget - fixed < 0.0 {
                return None;
            }
            if !coeffs.is_empty() {
                lp.add_row(coeffs, budget - fixed);
            }
        }

        // value of the product z_ℓ z_ℓ' x_{m,j}, per (j, pair, m)
        let mut terms: Vec<Option<Term>> = Vec::with_capacity(sc.n_areas() * p_count * m_count);
        for j in 0..sc.n_areas() {
            for l in 0..l_count {
                for lp_ in l..l_count {
                    for m in 0..m_count {
                        let zz = self.variant.fixed_z.as_ref().map(|z| z[l] && z[lp_]);
                        let xx = self.variant.fixed_x.as_ref().map(|x| x[j][m]);
                        let term = match (zz, xx) {
                            (Some(false), _) | (_, Some(false)) => None,
                            (Some(true), Some(true)) => Some(Term::Const(1.0)),
                            (Some(true), None) => Some(Term::Var(x_vars.as_ref().expect("free x")[j][m])),
                            (None, xx) => {
                                let zv = z_vars.as_ref().expect("free z");
                                let xi = xx.is_none().then(|| x_vars.as_ref().expect("free x")[j][m]);
                                Some(Term::Var(add_product(&mut lp, zv[l], zv[lp_], xi)))
                            }
                        };
                        terms.push(term);
                    }
                }
            }
        }

        let n_vars = lp.n_vars;
        let samples: Vec<(usize, usize)> = (0..sc.n_areas())
            .flat_map(|j| (0..self.ch.n_samples(j)).map(move |s| (j, s)))
            .collect();
        let rows: Vec<(Vec<(usize, f64)>, f64)> = samples
            .par_iter()
            .map(|&(j, s)| {
                let b = self.ch.b_coeffs(j, s, &v[j]);
                let scale = self.ch.pbar() / sc.areas()[j].gamma_th();
                let mut dense = vec![0.0; n_vars];
                let mut constant = 0.0;
                let base = j * p_count * m_count;
                let mut p = 0;
                for l in 0..l_count {
                    for lp_ in l..l_count {
                        let kappa = if l == lp_ { 1.0 } else { 2.0 };
                        for m in 0..m_count {
                            let idx = p * m_count + m;
                            let c = scale * kappa * b[idx].re;
                            match terms[base + idx] {
                                None => {}
                                Some(Term::Const(k)) => constant += c * k,
                                Some(Term::Var(i)) => dense[i] += c,
                            }
                        }
                        p += 1;
                    }
                }
                let mut coeffs: Vec<(usize, f64)> = dense
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(i, &c)| (i, -c))
                    .collect();
                match eta_var {
                    // Σ c·s + constant ≥ 1
                    None => (coeffs, constant - 1.0),
                    // Σ c·s + constant ≥ η
                    Some(eta) => {
                        coeffs.push((eta, 1.0));
                        (coeffs, constant)
                    }
                }
            })
            .collect();
        for (coeffs, bound) in rows {
            lp.add_row(coeffs, bound);
        }

        let out = solve_lp_with(&lp, &self.config.conic);
        if !out.is_optimal() {
            log::debug!("deployment LP ended with {:?}", out.status);
            return None;
        }
        let x = match (&x_vars, &self.variant.fixed_x) {
            (Some(xv), _) => xv
                .iter()
                .map(|row| row.iter().map(|&i| out.x[i].clamp(0.0, 1.0)).collect())
                .collect(),
            (None, Some(fx)) => fx.iter().map(|r| weights(r)).collect(),
            (None, None) => unreachable!("x is either free or fixed"),
        };
        let z = match (&z_vars, &self.variant.fixed_z) {
            (Some(zv), _) => zv.iter().map(|&i| out.x[i].clamp(0.0, 1.0)).collect(),
            (None, Some(fz)) => weights(fz),
            (None, None) => unreachable!("z is either free or fixed"),
        };
        let eta = eta_var.map(|i| out.x[i]).unwrap_or(f64::NAN);
        Some((Relaxed { x, z }, eta))
    }

    /// Phase update on the rounded configuration.
    fn margin_step(&self, x: &[Vec<bool>], z: &[bool], v: &[Vec<Complex64>], xi: f64, mode: EtaMode) -> Option<Vec<Vec<Complex64>>> {
        let active = self.element_mask(z);
        if !active.iter().any(|&a| a) || x.iter().any(|r| !r.iter().any(|&b| b)) {
            return None;
        }
        let xw: Vec<Vec<f64>> = x.iter().map(|r| weights(r)).collect();
        let tasks = self.tasks(&xw, &active);
        let bounds = match mode {
            // per-area margin η_j − 1, free in sign
            EtaMode::PerArea => (f64::NEG_INFINITY, self.config.eta_cap),
            EtaMode::Common => (0.0, self.config.eta_cap),
        };
        match phase::phase_step(self.ch, &tasks, v, mode, xi, bounds, &self.config.conic) {
            Ok(step) => Some(step.v),
            Err(e) => {
                log::debug!("margin step skipped: {e}");
                None
            }
        }
    }

    fn binary_gap(&self, r: &Relaxed) -> f64 {
        let gx: f64 = if self.variant.fixed_x.is_some() {
            0.0
        } else {
            r.x.iter().flatten().map(|a| a * (1.0 - a)).sum()
        };
        let gz: f64 = if self.variant.fixed_z.is_some() {
            0.0
        } else {
            r.z.iter().map(|a| a * (1.0 - a)).sum()
        };
        gx + gz
    }

    /// Outer penalty loop shared by both goals. Returns the final relaxed
    /// point, phases, trace and convergence flag.
    fn penalty_loop(&self, start: &Config, goal: Goal, scale: f64) -> (Relaxed, Vec<Vec<Complex64>>, Vec<TraceRecord>, RunStatus) {
        let sched = self.config.penalty;
        let mut cur = Relaxed {
            x: start.x.iter().map(|r| weights(r)).collect(),
            z: weights(&start.z),
        };
        let mut v = start.v.clone();
        let mut zeta = sched.initial_fraction * scale;
        let mut xi = sched.initial_fraction;
        let mode = match goal {
            Goal::MinCost => EtaMode::PerArea,
            Goal::MaxFloor { .. } => EtaMode::Common,
        };
        let mut trace = Vec::new();
        let mut status = RunStatus::NotConverged;
        let mut last_violation = f64::INFINITY;
        for outer in 0..sched.max_outer {
            let mut g_prev = f64::NAN;
            let mut inner = 0;
            let mut stalled = false;
            while inner < sched.max_inner {
                inner += 1;
                let step = match self.deployment_step(&v, &cur, goal, zeta) {
                    Some(s) => Some(s),
                    None => {
                        let (xb, zb) = self.round(&cur);
                        if let Some(nv) = self.margin_step(&xb, &zb, &v, xi, mode) {
                            v = nv;
                        }
                        self.deployment_step(&v, &cur, goal, zeta)
                    }
                };
                let Some((next, eta)) = step else {
                    stalled = true;
                    break;
                };
                cur = next;
                let (xb, zb) = self.round(&cur);
                if let Some(nv) = self.margin_step(&xb, &zb, &v, xi, mode) {
                    v = nv;
                }
                let g = match goal {
                    Goal::MinCost => self.relaxed_cost(&cur) + zeta * self.binary_gap(&cur),
                    Goal::MaxFloor { .. } => eta - zeta * self.binary_gap(&cur),
                };
                let done = (g - g_prev).abs() <= sched.tol_inner * g.abs().max(1e-12);
                g_prev = g;
                if done {
                    break;
                }
            }
            let mut violation = self.binary_gap(&cur);
            if self.variant.fixed_x.is_none() {
                violation = violation.max(binary_violation(&cur.x));
            }
            trace.push(TraceRecord {
                outer,
                inner_iterations: inner,
                penalties: vec![zeta, xi],
                objective: g_prev,
                max_violation: violation,
            });
            if stalled {
                log::debug!("deployment LP infeasible after an extra margin pass; stopping");
                break;
            }
            if violation < sched.tol_binary {
                status = RunStatus::Converged;
                break;
            }
            // entries pinned near 1/2 (e.g. both ends of a conflict) get no
            // push from the linearized penalty; leave them to the rounding
            if (last_violation - violation).abs() <= sched.tol_inner * violation {
                log::debug!("binary gap stuck at {violation:.4}; handing over to rounding");
                break;
            }
            last_violation = violation;
            zeta *= sched.growth;
            xi *= sched.growth;
        }
        let v = v.iter().map(|vj| phase::normalize(vj)).collect();
        (cur, v, trace, status)
    }

    /// Largest-gain compatible antenna not yet used in area `j`.
    fn best_new_antenna(&self, c: &Config, j: usize) -> Option<usize> {
        let gains = antenna_gains(self.ch, j, &c.v[j], &c.z);
        let conflicts = self.scenario.conflicts();
        let xj = &c.x[j];
        if xj.iter().filter(|&&b| b).count() >= self.scenario.m_max() {
            return None;
        }
        (0..xj.len())
            .filter(|&m| !xj[m] && (0..xj.len()).all(|q| !xj[q] || !conflicts.contains(m.min(q), m.max(q))))
            .max_by(|&a, &b| gains[a].total_cmp(&gains[b]).then(b.cmp(&a)))
    }

    /// Greedy restoration of the SNR constraints, by finite-difference
    /// benefit per unit cost. Returns whether the configuration now meets
    /// every threshold.
    fn repair(&self, c: &mut Config) -> bool {
        let mut floors = self.floors(c);
        let mut polished = false;
        let limit = self.scenario.n_sites() + self.scenario.n_areas() * self.scenario.n_antennas();
        for _ in 0..limit {
            if self.meets(&floors) {
                return true;
            }
            let base_cost = self.cost(&c.x, &c.z);
            let deficit = |f: &[f64]| -> f64 { f.iter().map(|v| v.min(1.0)).sum() };
            let mut moves: Vec<Config> = Vec::new();
            if self.variant.fixed_z.is_none() {
                for l in 0..c.z.len() {
                    if !c.z[l] {
                        let mut n = c.clone();
                        n.z[l] = true;
                        moves.push(n);
                    }
                }
            }
            if self.variant.fixed_x.is_none() {
                for j in 0..c.x.len() {
                    if floors[j] < 1.0 {
                        if let Some(m) = self.best_new_antenna(c, j) {
                            let mut n = c.clone();
                            n.x[j][m] = true;
                            moves.push(n);
                        }
                    }
                }
            }
            let before = deficit(&floors);
            let best = moves
                .into_iter()
                .map(|n| {
                    let f = self.floors(&n);
                    let gain = deficit(&f) - before;
                    let extra = (self.cost(&n.x, &n.z) - base_cost).max(1e-6);
                    (gain / extra, gain, n, f)
                })
                .filter(|(_, gain, _, _)| *gain > 1e-12)
                .max_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((_, _, n, f)) => {
                    *c = n;
                    floors = f;
                    polished = false;
                }
                None if !polished => {
                    self.polish(c, EtaMode::PerArea);
                    floors = self.floors(c);
                    polished = true;
                    continue;
                }
                None => return false,
            }
            if !self.meets(&floors) {
                self.polish(c, EtaMode::PerArea);
                floors = self.floors(c);
                polished = true;
            }
        }
        self.meets(&floors)
    }

    /// For every area at the maximum count, drops the antenna whose removal
    /// hurts that area's floor least (`rank` 0), or the next ones.
    fn shrink_antennas(&self, c: &Config, rank: usize) -> Option<Config> {
        let count = c.x.iter().map(|r| r.iter().filter(|&&b| b).count()).max().unwrap_or(0);
        if count <= 1 {
            return None;
        }
        let mut n = c.clone();
        for j in 0..c.x.len() {
            if c.x[j].iter().filter(|&&b| b).count() < count {
                continue;
            }
            let mut order: Vec<(usize, f64)> = (0..c.x[j].len())
                .filter(|&m| c.x[j][m])
                .map(|m| {
                    let mut trial = c.clone();
                    trial.x[j][m] = false;
                    (m, self.floors(&trial)[j])
                })
                .collect();
            order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            n.x[j][order.get(rank)?.0] = false;
        }
        Some(n)
    }

    /// The `k` strongest compatible antennas of every area for sites `z`.
    fn top_antennas(&self, v: &[Vec<Complex64>], z: &[bool], k: usize) -> Vec<Vec<bool>> {
        (0..self.scenario.n_areas())
            .map(|j| {
                let gains = antenna_gains(self.ch, j, &v[j], z);
                let mut xj = vec![false; self.scenario.n_antennas()];
                fill_antennas_to(self.scenario, &gains, &mut xj, k);
                xj
            })
            .collect()
    }

    /// Checks `c` with its current phases, then after a polish.
    fn settle(&self, mut c: Config) -> Option<Config> {
        if self.meets(&self.floors(&c)) {
            return Some(c);
        }
        self.polish(&mut c, EtaMode::PerArea);
        self.meets(&self.floors(&c)).then_some(c)
    }

    /// Cheapest feasible configuration on sites `z` that undercuts `budget`,
    /// searching the antenna count by bisection between the phase-free lower
    /// bound and the count the budget allows.
    fn fit_sites(&self, c: &Config, z: &[bool], budget: f64) -> Option<Config> {
        let site_part = self.cost(&vec![Vec::new(); 0], z);
        if let Some(fx) = &self.variant.fixed_x {
            if !self.may_meet(fx, z) || self.cost(fx, z) >= budget - 1e-9 {
                return None;
            }
            return self.settle(Config {
                x: fx.clone(),
                z: z.to_vec(),
                v: c.v.clone(),
            });
        }
        let unit = self.variant.antenna_unit;
        let m_max = self.scenario.m_max();
        let k_hi = if unit > 0.0 {
            (((budget - site_part) / unit) - 1e-9).ceil() as isize - 1
        } else {
            m_max as isize
        };
        let k_hi = k_hi.min(m_max as isize);
        if k_hi < 1 {
            return None;
        }
        let k_hi = k_hi as usize;
        let mut lo = (1..=k_hi).find(|&k| self.may_meet(&self.top_antennas(&c.v, z, k), z))?;
        let mut hi = k_hi;
        let mut best = None;
        while lo <= hi {
            let mid = (lo + hi) / 2;
            let trial = Config {
                x: self.top_antennas(&c.v, z, mid),
                z: z.to_vec(),
                v: c.v.clone(),
            };
            match self.settle(trial) {
                Some(ok) => {
                    best = Some(ok);
                    if mid == 1 {
                        break;
                    }
                    hi = mid - 1;
                }
                None => lo = mid + 1,
            }
        }
        best
    }

    /// Local search over site sets one flip or swap away from the current
    /// one (plus the current set), each with its smallest sufficient antenna
    /// count. Takes the largest saving until nothing improves.
    fn descend(&self, c: &mut Config) {
        loop {
            let base = self.cost(&c.x, &c.z);
            let mut site_sets: Vec<Vec<bool>> = vec![c.z.clone()];
            if self.variant.fixed_z.is_none() {
                for l in 0..c.z.len() {
                    let mut flip = c.z.clone();
                    flip[l] = !flip[l];
                    site_sets.push(flip.clone());
                    if c.z[l] {
                        for k in 0..c.z.len() {
                            if !c.z[k] {
                                let mut sw = flip.clone();
                                sw[k] = true;
                                site_sets.push(sw);
                            }
                        }
                    }
                }
            }
            let mut options: Vec<Config> = Vec::new();
            if self.variant.fixed_x.is_none() {
                for rank in 0..SHRINK_TRIES {
                    let Some(n) = self.shrink_antennas(c, rank) else { break };
                    if self.may_meet(&n.x, &n.z) {
                        if let Some(ok) = self.settle(n) {
                            options.push(ok);
                            break;
                        }
                    }
                }
            }
            options.extend(site_sets.iter().filter_map(|z| self.fit_sites(c, z, base)));
            let best = options
                .into_iter()
                .map(|n| (self.cost(&n.x, &n.z), n))
                .filter(|(cost, _)| *cost < base - 1e-9)
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((_, n)) => *c = n,
                None => return,
            }
        }
    }
}

pub fn run_costmin(scenario: &Scenario, config: &SolverConfig, init: &FeasibilityReport) -> Result<Plan> {
    let ch = ChannelSet::new(scenario)?;
    run_costmin_with(scenario, &ch, config, init, &CostminVariant::joint(scenario))
}

pub fn run_costmin_with(
    scenario: &Scenario,
    ch: &ChannelSet,
    config: &SolverConfig,
    init: &FeasibilityReport,
    variant: &CostminVariant,
) -> Result<Plan> {
    if !init.feasible {
        return Err(Error::Infeasible(format!(
            "worst normalized SNR {:.4} < 1 with every resource deployed",
            init.eta
        )));
    }
    let ctx = Ctx::new(scenario, ch, config, variant);
    let mut start = Config {
        x: variant.fixed_x.clone().unwrap_or_else(|| init.x.clone()),
        z: variant.fixed_z.clone().unwrap_or_else(|| vec![true; scenario.n_sites()]),
        v: init.phases.clone(),
    };
    if !ctx.meets(&ctx.floors(&start)) {
        ctx.polish(&mut start, EtaMode::PerArea);
        if !ctx.meets(&ctx.floors(&start)) {
            return Err(Error::Infeasible("the scheme's starting configuration misses a threshold".into()));
        }
    }
    let start_cost = ctx.cost(&start.x, &start.z);

    let (relaxed, v, trace, status) = ctx.penalty_loop(&start, Goal::MinCost, start_cost.max(1.0));
    let (mut x, z) = ctx.round(&relaxed);
    if variant.fixed_x.is_none() {
        // antennas below the busiest area's count are free
        let cap = x.iter().map(|r| r.iter().filter(|&&b| b).count()).max().unwrap_or(0).max(1);
        for (j, xj) in x.iter_mut().enumerate() {
            let gains = antenna_gains(ch, j, &v[j], &z);
            fill_antennas_to(scenario, &gains, xj, cap);
        }
    }
    let mut cand = Config { x, z, v };
    ctx.polish(&mut cand, EtaMode::PerArea);
    let mut ok = ctx.repair(&mut cand);
    if ok && config.descent {
        ctx.descend(&mut cand);
        ok = ctx.meets(&ctx.floors(&cand));
    }
    let chosen = if ok && ctx.cost(&cand.x, &cand.z) <= start_cost {
        cand
    } else {
        log::debug!("falling back to the starting configuration");
        start.clone()
    };
    let plan = Plan::new(
        scenario,
        chosen.solution(),
        variant.antenna_unit,
        status,
        trace.clone(),
        config.audit_tolerance,
    )?;
    if plan.audit.passed {
        return Ok(plan);
    }
    let fallback = Plan::new(scenario, start.solution(), variant.antenna_unit, status, trace, config.audit_tolerance)?;
    if fallback.audit.passed {
        Ok(fallback)
    } else {
        Err(Error::Audit(format!(
            "no configuration passed the SNR audit (worst margin {:.3} dB)",
            plan.audit.worst_db()
        )))
    }
}

/// Outcome of the budget-constrained floor maximization.
#[derive(Debug, Clone)]
pub(crate) struct BudgetOutcome {
    pub solution: DeploymentSolution,
    /// Worst normalized SNR over all areas; 0 when nothing is deployed.
    pub eta: f64,
    pub feasible: bool,
    pub status: RunStatus,
}

/// Maximizes the common normalized SNR floor subject to `cost ≤ budget`.
pub(crate) fn run_budget(ctx: &Ctx, init: &FeasibilityReport, budget: f64) -> Result<BudgetOutcome> {
    let scenario = ctx.scenario;
    let empty = |ctx: &Ctx| -> BudgetOutcome {
        let c = Config {
            x: ctx.variant.fixed_x.clone().unwrap_or_else(|| vec![vec![false; scenario.n_antennas()]; scenario.n_areas()]),
            z: vec![false; scenario.n_sites()],
            v: init.phases.clone(),
        };
        BudgetOutcome {
            solution: c.solution(),
            eta: 0.0,
            feasible: false,
            status: RunStatus::Converged,
        }
    };
    let start = Config {
        x: ctx.variant.fixed_x.clone().unwrap_or_else(|| init.x.clone()),
        z: ctx.variant.fixed_z.clone().unwrap_or_else(|| vec![true; scenario.n_sites()]),
        v: init.phases.clone(),
    };
    let fixed_x_cost = ctx
        .variant
        .fixed_x
        .as_ref()
        .map(|fx| ctx.cost(fx, &vec![false; scenario.n_sites()]))
        .unwrap_or(0.0);
    if budget < fixed_x_cost {
        return Ok(empty(ctx));
    }
    let common = |f: &[f64]| f.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let eta0 = common(&ctx.floors(&start));
    let (relaxed, v, _trace, status) = ctx.penalty_loop(&start, Goal::MaxFloor { budget }, eta0.max(1e-9));
    let (x, z) = ctx.round(&relaxed);
    let mut c = Config { x, z, v };

    // get within budget, losing as little floor as possible
    while ctx.cost(&c.x, &c.z) > budget + 1e-9 {
        let mut moves = Vec::new();
        if ctx.variant.fixed_z.is_none() {
            for l in 0..c.z.len() {
                if c.z[l] {
                    let mut n = c.clone();
                    n.z[l] = false;
                    moves.push(n);
                }
            }
        }
        if ctx.variant.fixed_x.is_none() {
            if let Some(n) = ctx.shrink_antennas(&c, 0) {
                moves.push(n);
            }
        }
        let best = moves
            .into_iter()
            .map(|n| (common(&ctx.floors(&n)), n))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((_, n)) => c = n,
            None => return Ok(empty(ctx)),
        }
    }
    ctx.polish(&mut c, EtaMode::Common);

    // spend what is left on whatever raises the floor most
    loop {
        let floor = common(&ctx.floors(&c));
        let mut moves = Vec::new();
        if ctx.variant.fixed_z.is_none() {
            for l in 0..c.z.len() {
                if !c.z[l] {
                    let mut n = c.clone();
                    n.z[l] = true;
                    if ctx.variant.fixed_x.is_none() {
                        for j in 0..n.x.len() {
                            if !n.x[j].iter().any(|&b| b) {
                                if let Some(m) = ctx.best_new_antenna(&n, j) {
                                    n.x[j][m] = true;
                                }
                            }
                        }
                    }
                    moves.push(n);
                }
            }
        }
        if ctx.variant.fixed_x.is_none() && c.z.iter().any(|&b| b) {
            for j in 0..c.x.len() {
                if let Some(m) = ctx.best_new_antenna(&c, j) {
                    let mut n = c.clone();
                    n.x[j][m] = true;
                    moves.push(n);
                }
            }
        }
        let best = moves
            .into_iter()
            .filter(|n| ctx.cost(&n.x, &n.z) <= budget + 1e-9)
            .map(|n| (common(&ctx.floors(&n)), n))
            .filter(|(f, _)| *f > floor * (1.0 + 1e-9) && *f > 0.0)
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((_, n)) => c = n,
            None => break,
        }
    }
    ctx.polish(&mut c, EtaMode::Common);
    let eta = common(&ctx.floors(&c)).min(ctx.config.eta_cap);
    let feasible = eta > 0.0 && ctx.cost(&c.x, &c.z) <= budget + 1e-9;
    Ok(BudgetOutcome {
        solution: c.solution(),
        eta,
        feasible,
        status,
    })
}
