//! Phase-shift subproblem shared by every stage: an SOCP over the phases of
//! the active IRS elements that raises a (common or per-area) normalized SNR
//! floor, with the unit-modulus shell relaxed by a hinge penalty.

use rayon::prelude::*;

use crate::channel::ChannelSet;
use crate::conic::{solve_socp_with, ComplexLayout, ConeProgramSpec, LinearProgramSpec, SolverOptions};
use crate::{Complex64, Error, Result};

/// One area's fixed data for the phase step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PhaseTask<'a> {
    pub area: usize,
    /// Antenna weights `x_m` (binary or relaxed).
    pub x: &'a [f64],
    /// Elements whose phases are decision variables; the rest contribute nothing.
    pub active: &'a [bool],
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EtaMode {
    /// One floor shared by all tasks.
    Common,
    /// One floor per task; the objective is their sum.
    PerArea,
}

#[derive(Debug, Clone)]
pub(crate) struct PhaseStep {
    pub v: Vec<Vec<Complex64>>,
    pub eta: Vec<f64>,
}

pub(crate) fn masked(v: &[Complex64], active: &[bool]) -> Vec<Complex64> {
    v.iter()
        .zip(active)
        .map(|(&c, &on)| if on { c } else { Complex64::new(0.0, 0.0) })
        .collect()
}

/// `pbar·Σ_m x_m |a_m|² / γ` at every sample of the task's area.
pub(crate) fn normalized_snrs(ch: &ChannelSet, task: &PhaseTask, v: &[Complex64]) -> Vec<f64> {
    let vz = masked(v, task.active);
    let all = vec![true; ch.n_sites()];
    (0..ch.n_samples(task.area))
        .map(|s| {
            let a = ch.effective(task.area, s, &vz, &all);
            let p: f64 = a.iter().zip(task.x).map(|(c, x)| x * c.norm_sqr()).sum();
            ch.pbar() * p / task.gamma
        })
        .collect()
}

pub(crate) fn floor(ch: &ChannelSet, task: &PhaseTask, v: &[Complex64]) -> f64 {
    normalized_snrs(ch, task, v).into_iter().fold(f64::INFINITY, f64::min)
}

/// `Σ max(0, 1 − |v_n|²)` over active elements.
pub(crate) fn modulus_deficit(v: &[Complex64], active: &[bool]) -> f64 {
    v.iter()
        .zip(active)
        .filter(|(_, &on)| on)
        .map(|(c, _)| (1.0 - c.norm_sqr()).max(0.0))
        .sum()
}

pub(crate) fn modulus_violation(v: &[Complex64], active: &[bool]) -> f64 {
    v.iter()
        .zip(active)
        .filter(|(_, &on)| on)
        .map(|(c, _)| (1.0 - c.norm()).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn normalize(v: &[Complex64]) -> Vec<Complex64> {
    v.iter()
        .map(|c| {
            if c.norm() > 1e-12 {
                c / c.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect()
}

/// One SCA step around `v_r` (one vector per task).
pub(crate) fn phase_step(
    ch: &ChannelSet,
    tasks: &[PhaseTask],
    v_r: &[Vec<Complex64>],
    mode: EtaMode,
    hinge_penalty: f64,
    eta_bounds: (f64, f64),
    opts: &SolverOptions,
) -> Result<PhaseStep> {
    if mode == EtaMode::PerArea && tasks.len() > 1 {
        let parts: Result<Vec<PhaseStep>> = tasks
            .par_iter()
            .zip(v_r.par_iter())
            .map(|(t, vr)| {
                phase_step(ch, std::slice::from_ref(t), std::slice::from_ref(vr), mode, hinge_penalty, eta_bounds, opts)
            })
            .collect();
        let parts = parts?;
        return Ok(PhaseStep {
            v: parts.iter().map(|p| p.v[0].clone()).collect(),
            eta: parts.iter().map(|p| p.eta[0]).collect(),
        });
    }

    let mut lp = LinearProgramSpec::default();
    let eta_vars: Vec<usize> = match mode {
        EtaMode::Common => vec![lp.add_var(eta_bounds.0, eta_bounds.1, 1.0)],
        EtaMode::PerArea => tasks
            .iter()
            .map(|_| lp.add_var(eta_bounds.0, eta_bounds.1, 1.0))
            .collect(),
    };
    let mut cones = Vec::new();
    let mut layouts = Vec::with_capacity(tasks.len());
    for (k, task) in tasks.iter().enumerate() {
        let vr = &v_r[k];
        let idx: Vec<usize> = (0..vr.len()).filter(|&n| task.active[n]).collect();
        let lay = ComplexLayout::append(&mut lp, idx.len());
        let eta = eta_vars[if mode == EtaMode::Common { 0 } else { k }];
        let vz = masked(vr, task.active);
        let scale = ch.pbar() / task.gamma;
        for s in 0..ch.n_samples(task.area) {
            let (q, power) = ch.r_times(task.area, s, &vz, task.x);
            // scale·(2·Re{q^H v} − power) ≥ η
            let sub: Vec<Complex64> = idx.iter().map(|&n| q[n] * (2.0 * scale)).collect();
            let mut coeffs: Vec<(usize, f64)> = lay.real_inner(&sub).into_iter().map(|(i, a)| (i, -a)).collect();
            coeffs.push((eta, 1.0));
            lp.add_row(coeffs, -scale * power);
        }
        for (slot, &n) in idx.iter().enumerate() {
            cones.push(lay.unit_disc(slot));
            // 1 − δ ≤ 2·Re{conj(vr)·v} − |vr|²
            let d = lp.add_var(0.0, f64::INFINITY, -hinge_penalty);
            let c = vr[n] * 2.0;
            lp.add_row(
                vec![(lay.re(slot), -c.re), (lay.im(slot), -c.im), (d, -1.0)],
                -1.0 - vr[n].norm_sqr(),
            );
        }
        layouts.push((lay, idx));
    }
    let spec = ConeProgramSpec { lp, cones };
    let out = solve_socp_with(&spec, opts);
    if !out.is_optimal() {
        return Err(Error::Solver {
            context: "phase subproblem".into(),
            status: out.status,
        });
    }
    let v = layouts
        .iter()
        .zip(v_r)
        .map(|((lay, idx), vr)| {
            let mut v = vr.clone();
            for (slot, val) in lay.unlift(&out.x).into_iter().enumerate() {
                v[idx[slot]] = val;
            }
            v
        })
        .collect();
    Ok(PhaseStep {
        v,
        eta: eta_vars.iter().map(|&i| out.x[i]).collect(),
    })
}

/// Penalized SCA on the phases alone, keeping the best unit-modulus iterate
/// by true per-area floor (common floor when `mode` is `Common`).
pub(crate) fn refine(
    ch: &ChannelSet,
    tasks: &[PhaseTask],
    v0: &[Vec<Complex64>],
    mode: EtaMode,
    iterations: usize,
    opts: &SolverOptions,
) -> Vec<Vec<Complex64>> {
    let score = |v: &[Vec<Complex64>]| -> Vec<f64> {
        tasks.iter().zip(v).map(|(t, vj)| floor(ch, t, vj)).collect()
    };
    let better = |a: &[f64], b: &[f64]| -> bool {
        match mode {
            EtaMode::Common => {
                a.iter().copied().fold(f64::INFINITY, f64::min)
                    > b.iter().copied().fold(f64::INFINITY, f64::min) * (1.0 + 1e-9)
            }
            EtaMode::PerArea => a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| *x > y * (1.0 + 1e-9)),
        }
    };
    let mut best: Vec<Vec<Complex64>> = v0.iter().map(|v| normalize(v)).collect();
    let mut best_score = score(&best);
    let mut cur = best.clone();
    let mut penalty = 1e-2 * best_score.iter().copied().fold(0.0, f64::max).max(1e-6);
    for _ in 0..iterations {
        let step = match phase_step(ch, tasks, &cur, mode, penalty, (f64::NEG_INFINITY, f64::INFINITY), opts) {
            Ok(s) => s,
            Err(e) => {
                log::debug!("phase refinement stopped: {e}");
                break;
            }
        };
        let unit: Vec<Vec<Complex64>> = step.v.iter().map(|v| normalize(v)).collect();
        let sc = score(&unit);
        if better(&sc, &best_score) {
            best = unit.clone();
            best_score = sc;
        }
        let gap = tasks
            .iter()
            .zip(&step.v)
            .map(|(t, v)| modulus_violation(v, t.active))
            .fold(0.0, f64::max);
        cur = step.v;
        if gap < 1e-4 {
            // linearizing at the projected point keeps the next step feasible
            cur = unit;
        }
        penalty *= 2.0;
    }
    best
}

/// Per-element conjugate alignment of every active element to antenna
/// `m0` at sample `s0`, the natural single-user initialization.
pub(crate) fn align_to(ch: &ChannelSet, area: usize, s0: usize, m0: usize, active: &[bool]) -> Vec<Complex64> {
    let w = ch.element_gains(area, s0);
    (0..w.len())
        .map(|n| {
            if !active[n] {
                return Complex64::new(1.0, 0.0);
            }
            let psi = w[n] * ch.bs_steering(ch.site_of(n))[m0];
            // a_m0 = Σ conj(v_n) Ψ[n, m0]; make every term real positive
            if psi.norm() > 0.0 {
                psi / psi.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_phases, random_scenario, SmallSpec};
    use crate::Scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_element() -> (Scenario, ChannelSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = SmallSpec {
            sites: 1,
            rows: 1,
            cols: 1,
            ..SmallSpec::default()
        };
        let sc = random_scenario(&mut rng, &spec).unwrap();
        let ch = ChannelSet::new(&sc).unwrap();
        (sc, ch)
    }

    #[test]
    fn single_element_closed_form() {
        let (sc, ch) = one_element();
        let x = vec![1.0; sc.n_antennas()];
        let active = vec![true];
        let r11 = ch.r_matrix(0, 0, &x)[(0, 0)].re;
        let snr = ch.pbar() * r11;
        // threshold at half the attainable SNR, so the normalized floor is 2
        let task = PhaseTask { area: 0, x: &x, active: &active, gamma: snr / 2.0 };
        let vr = vec![Complex64::from_polar(1.0, 0.4)];
        let step = phase_step(&ch, &[task], &[vr.clone()], EtaMode::Common, 10.0, (0.0, 1e6), &SolverOptions::default()).unwrap();
        assert!((step.eta[0] - 2.0).abs() <= 1e-6, "{}", step.eta[0]);
        assert!((step.v[0][0].norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_weights_give_zero_floor() {
        let (sc, ch) = one_element();
        let x = vec![0.0; sc.n_antennas()];
        let active = vec![true];
        let task = PhaseTask { area: 0, x: &x, active: &active, gamma: 1.0 };
        let step = phase_step(&ch, &[task], &[vec![Complex64::new(1.0, 0.0)]], EtaMode::Common, 1.0, (0.0, 1e6), &SolverOptions::default()).unwrap();
        assert!(step.eta[0].abs() < 1e-7);
    }

    #[test]
    fn step_never_lowers_the_surrogate_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let spec = SmallSpec { sites: 2, rows: 2, cols: 3, samples_side: 2, ..SmallSpec::default() };
        let sc = random_scenario(&mut rng, &spec).unwrap();
        let ch = ChannelSet::new(&sc).unwrap();
        let x = vec![1.0; sc.n_antennas()];
        let active = vec![true; sc.n_elements()];
        let task = PhaseTask { area: 0, x: &x, active: &active, gamma: 1.0 };
        let mut v = random_phases(&mut rng, sc.n_elements());
        let mut prev = floor(&ch, &task, &v);
        let lambda = 1e-2 * prev;
        for _ in 0..5 {
            let step = phase_step(&ch, &[task], &[v.clone()], EtaMode::Common, lambda, (0.0, 1e6), &SolverOptions::default()).unwrap();
            let now = floor(&ch, &task, &step.v[0]) - lambda * modulus_deficit(&step.v[0], &active);
            assert!(now >= prev - 1e-7 * prev.abs(), "{now} < {prev}");
            prev = now;
            v = step.v[0].clone();
        }
    }

    #[test]
    fn alignment_maximizes_single_antenna_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sc = random_scenario(&mut rng, &SmallSpec::default()).unwrap();
        let ch = ChannelSet::new(&sc).unwrap();
        let active = vec![true; sc.n_elements()];
        let v = align_to(&ch, 0, 0, 0, &active);
        let a = ch.effective(0, 0, &v, &[true, true]);
        let bound: f64 = ch.psi(0, 0).column(0).iter().map(|c| c.norm()).sum();
        assert!((a[0].norm() - bound).abs() <= 1e-12 * bound);
        assert!(a[0].im.abs() <= 1e-12 * bound && a[0].re > 0.0);
    }
}
