//! Feasibility check: with every candidate IRS built and up to `M_max`
//! antennas per area, maximize the worst normalized SNR `η` over all samples.
//! `η* ≥ 1` certifies that every threshold can be met; the resulting
//! configuration seeds cost minimization.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::conic::{solve_lp_with, LinearProgramSpec};
use crate::config::SolverConfig;
use crate::phase::{self, EtaMode, PhaseTask};
use crate::plan::RunStatus;
use crate::scenario::{linear_to_db, Scenario};
use crate::sca::binary_penalty;
use crate::{Complex64, Error, Result};

/// One outer-iteration record of a penalty loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub outer: usize,
    pub inner_iterations: usize,
    /// Penalty weights in force during this outer iteration.
    pub penalties: Vec<f64>,
    /// True penalized objective after the last inner iteration.
    pub objective: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Worst normalized SNR with exact binaries and unit-modulus phases.
    pub eta: f64,
    /// Worst SNR per area, dB.
    pub worst_snr_db: Vec<f64>,
    pub x: Vec<Vec<bool>>,
    pub phases: Vec<Vec<Complex64>>,
    pub trace: Vec<TraceRecord>,
    pub feasible: bool,
    pub status: RunStatus,
}

/// Antenna selection as weights.
pub(crate) fn weights(x: &[bool]) -> Vec<f64> {
    x.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// Initial state: the packing layout for every area and phases aligned to
/// the area's central sample through antenna `packing[0]`.
pub(crate) fn initial_point(scenario: &Scenario, ch: &ChannelSet, active: &[bool]) -> (Vec<Vec<f64>>, Vec<Vec<Complex64>>) {
    let mut x0 = vec![0.0; scenario.n_antennas()];
    for &m in scenario.packing() {
        x0[m] = 1.0;
    }
    let m0 = scenario.packing()[0];
    let xs = vec![x0; scenario.n_areas()];
    let vs = scenario
        .areas()
        .iter()
        .enumerate()
        .map(|(j, a)| phase::align_to(ch, j, a.centroid_sample(), m0, active))
        .collect();
    (xs, vs)
}

pub(crate) fn binary_violation(x: &[Vec<f64>]) -> f64 {
    x.iter()
        .flatten()
        .map(|v| (v * (1.0 - v)).abs())
        .fold(0.0, f64::max)
}

fn binary_gap(x: &[Vec<f64>]) -> f64 {
    x.iter().flatten().map(|v| v * (1.0 - v)).sum()
}

/// Greedily adds compatible antennas (largest total gain first) until the
/// area holds `M_max` of them. Extra antennas never reduce an MRT SNR.
pub(crate) fn fill_antennas(scenario: &Scenario, gains: &[f64], x: &mut [bool]) {
    fill_antennas_to(scenario, gains, x, scenario.m_max());
}

pub(crate) fn fill_antennas_to(scenario: &Scenario, gains: &[f64], x: &mut [bool], cap: usize) {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    let conflicts = scenario.conflicts();
    for m in order {
        if x.iter().filter(|&&b| b).count() >= cap.min(scenario.m_max()) {
            break;
        }
        if x[m] {
            continue;
        }
        if (0..x.len()).all(|q| !x[q] || !conflicts.contains(m.min(q), m.max(q))) {
            x[m] = true;
        }
    }
}

/// Sum over samples of `C_m` for every antenna, the greedy ranking key.
pub(crate) fn antenna_gains(ch: &ChannelSet, area: usize, v: &[Complex64], z: &[bool]) -> Vec<f64> {
    let mut g = vec![0.0; ch.n_antennas()];
    for s in 0..ch.n_samples(area) {
        for (gm, c) in g.iter_mut().zip(ch.c_coeffs(area, s, v, z)) {
            *gm += c;
        }
    }
    g
}

fn ma_step(
    scenario: &Scenario,
    ch: &ChannelSet,
    v: &[Vec<Complex64>],
    x_r: &[Vec<f64>],
    rho: f64,
    config: &SolverConfig,
) -> Result<Vec<Vec<f64>>> {
    let m = scenario.n_antennas();
    let j_count = scenario.n_areas();
    let all = vec![true; scenario.n_sites()];
    let mut lp = LinearProgramSpec::new(m * j_count, 0.0, 1.0);
    for j in 0..j_count {
        for k in 0..m {
            lp.objective[j * m + k] = -rho * binary_penalty(x_r[j][k]).0;
        }
    }
    let eta = lp.add_var(0.0, config.eta_cap, 1.0);
    for (j, area) in scenario.areas().iter().enumerate() {
        let scale = ch.pbar() / area.gamma_th();
        for s in 0..ch.n_samples(j) {
            let c = ch.c_coeffs(j, s, &v[j], &all);
            let mut row: Vec<(usize, f64)> = c.iter().enumerate().map(|(k, ck)| (j * m + k, -scale * ck)).collect();
            row.push((eta, 1.0));
            lp.add_row(row, 0.0);
        }
        for &(a, b) in scenario.conflicts().pairs() {
            lp.add_row(vec![(j * m + a, 1.0), (j * m + b, 1.0)], 1.0);
        }
        if scenario.m_max() < m {
            lp.add_row((0..m).map(|k| (j * m + k, 1.0)).collect(), scenario.m_max() as f64);
        }
    }
    let out = solve_lp_with(&lp, &config.conic);
    if !out.is_optimal() {
        return Err(Error::Solver {
            context: "antenna subproblem".into(),
            status: out.status,
        });
    }
    Ok((0..j_count)
        .map(|j| out.x[j * m..(j + 1) * m].iter().map(|v| v.clamp(0.0, 1.0)).collect())
        .collect())
}

fn tasks<'a>(scenario: &'a Scenario, x: &'a [Vec<f64>], active: &'a [bool]) -> Vec<PhaseTask<'a>> {
    scenario
        .areas()
        .iter()
        .enumerate()
        .map(|(j, a)| PhaseTask {
            area: j,
            x: &x[j],
            active,
            gamma: a.gamma_th(),
        })
        .collect()
}

fn common_floor(ch: &ChannelSet, tasks: &[PhaseTask], v: &[Vec<Complex64>]) -> f64 {
    tasks
        .iter()
        .zip(v)
        .map(|(t, vj)| phase::floor(ch, t, vj))
        .fold(f64::INFINITY, f64::min)
}

pub fn run_feasibility(scenario: &Scenario, config: &SolverConfig) -> Result<FeasibilityReport> {
    let ch = ChannelSet::new(scenario)?;
    run_feasibility_with(scenario, &ch, config)
}

pub fn run_feasibility_with(scenario: &Scenario, ch: &ChannelSet, config: &SolverConfig) -> Result<FeasibilityReport> {
    let active = vec![true; scenario.n_elements()];
    let (mut x, mut v) = initial_point(scenario, ch, &active);
    let sched = config.penalty;
    let eta0 = common_floor(ch, &tasks(scenario, &x, &active), &v).min(config.eta_cap);
    let base = if eta0 > 0.0 { eta0 } else { 1.0 };
    let mut rho = sched.initial_fraction * base;
    let mut lambda = sched.initial_fraction * base;
    let mut trace = Vec::new();
    let mut status = RunStatus::NotConverged;

    let objective = |x: &[Vec<f64>], v: &[Vec<Complex64>], rho: f64, lambda: f64| -> f64 {
        let t = tasks(scenario, x, &active);
        let deficit: f64 = v.iter().map(|vj| phase::modulus_deficit(vj, &active)).sum();
        common_floor(ch, &t, v).min(config.eta_cap) - rho * binary_gap(x) - lambda * deficit
    };

    for outer in 0..sched.max_outer {
        let mut f_prev = objective(&x, &v, rho, lambda);
        let mut inner = 0;
        while inner < sched.max_inner {
            inner += 1;
            x = ma_step(scenario, ch, &v, &x, rho, config)?;
            let step = phase::phase_step(
                ch,
                &tasks(scenario, &x, &active),
                &v,
                EtaMode::Common,
                lambda,
                (0.0, config.eta_cap),
                &config.conic,
            )?;
            v = step.v;
            let f = objective(&x, &v, rho, lambda);
            if f < f_prev - config.monotone_slack * f_prev.abs().max(1.0) {
                log::debug!("feasibility objective dipped from {f_prev} to {f}");
            }
            let done = (f - f_prev).abs() <= sched.tol_inner * f.abs().max(1e-12);
            f_prev = f;
            if done {
                break;
            }
        }
        let violation = binary_violation(&x).max(
            v.iter()
                .map(|vj| phase::modulus_violation(vj, &active))
                .fold(0.0, f64::max),
        );
        trace.push(TraceRecord {
            outer,
            inner_iterations: inner,
            penalties: vec![rho, lambda],
            objective: f_prev,
            max_violation: violation,
        });
        if violation < sched.tol_binary {
            status = RunStatus::Converged;
            break;
        }
        rho *= sched.growth;
        lambda *= sched.growth;
    }

    // terminal rounding
    let phases: Vec<Vec<Complex64>> = v.iter().map(|vj| phase::normalize(vj)).collect();
    let all = vec![true; scenario.n_sites()];
    let mut xb: Vec<Vec<bool>> = x.iter().map(|r| r.iter().map(|&a| a >= 0.5).collect()).collect();
    for (j, xj) in xb.iter_mut().enumerate() {
        // drop any rounding-induced conflict, keeping the lower index
        for &(a, b) in scenario.conflicts().pairs() {
            if xj[a] && xj[b] {
                xj[b] = false;
            }
        }
        while xj.iter().filter(|&&b| b).count() > scenario.m_max() {
            let last = xj.iter().rposition(|&b| b).expect("non-empty");
            xj[last] = false;
        }
        let gains = antenna_gains(ch, j, &phases[j], &all);
        fill_antennas(scenario, &gains, xj);
    }
    let xw: Vec<Vec<f64>> = xb.iter().map(|r| weights(r)).collect();
    let t = tasks(scenario, &xw, &active);
    let eta = common_floor(ch, &t, &phases).min(config.eta_cap);
    let worst_snr_db = t
        .iter()
        .zip(&phases)
        .map(|(task, vj)| linear_to_db(phase::floor(ch, task, vj) * task.gamma))
        .collect();
    Ok(FeasibilityReport {
        eta,
        worst_snr_db,
        x: xb,
        phases,
        trace,
        feasible: eta >= 1.0,
        status,
    })
}
