//! Independent SNR audit of a deployment.
//!
//! Rebuilds every per-site channel matrix straight from the scenario geometry
//! (no cached factors), forms the effective channel from the raw binaries and
//! phases, applies MRT and compares each sample against its threshold.

use serde::{Deserialize, Serialize};

use crate::channel::{bs_irs_channel, irs_user_channel, mrt, select, snr};
use crate::scenario::{linear_to_db, DeploymentSolution, Scenario};
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Linear SNR per area and sample.
    pub snr: Vec<Vec<f64>>,
    /// `10·log10(SNR / γ_th)` per area and sample.
    pub margin_db: Vec<Vec<f64>>,
    pub worst_snr_db: Vec<f64>,
    pub violations: usize,
    pub passed: bool,
}

impl AuditReport {
    /// Minimum SNR over all samples of all areas, dB.
    pub fn worst_db(&self) -> f64 {
        self.worst_snr_db.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Worst `SNR / γ_th` over everything.
    pub fn worst_ratio(&self) -> f64 {
        self.margin_db
            .iter()
            .flatten()
            .map(|m| 10f64.powf(m / 10.0))
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_shapes(scenario: &Scenario, sol: &DeploymentSolution) -> Result<()> {
    let bad = sol.x.len() != scenario.n_areas()
        || sol.x.iter().any(|r| r.len() != scenario.n_antennas())
        || sol.z.len() != scenario.n_sites()
        || sol.phases.len() != scenario.n_areas()
        || sol.phases.iter().any(|p| p.len() != scenario.n_elements())
        || sol.installed.as_ref().is_some_and(|map| {
            map.len() != scenario.n_sites()
                || map.iter().zip(scenario.sites()).any(|(r, s)| r.len() != s.n_elements())
        });
    if bad {
        return Err(Error::DimensionMismatch("solution does not match the scenario".into()));
    }
    if sol.phases.iter().flatten().any(|p| !p.is_finite()) {
        return Err(Error::Audit("non-finite phase".into()));
    }
    Ok(())
}

/// Audits `sol`; a sample passes when `SNR ≥ γ_th·(1 − tolerance)`.
pub fn audit_solution(scenario: &Scenario, sol: &DeploymentSolution, tolerance: f64) -> Result<AuditReport> {
    check_shapes(scenario, sol)?;
    let rc = scenario.radio();
    let m = scenario.n_antennas();
    let mut g_bar = Vec::with_capacity(scenario.n_sites());
    for (l, site) in scenario.sites().iter().enumerate() {
        g_bar.push(if sol.z[l] { Some(bs_irs_channel(site, scenario.grid(), rc)?) } else { None });
    }
    let mut snrs = Vec::with_capacity(scenario.n_areas());
    let mut margins = Vec::with_capacity(scenario.n_areas());
    let mut worst = Vec::with_capacity(scenario.n_areas());
    let mut violations = 0;
    for (j, area) in scenario.areas().iter().enumerate() {
        let mut area_snr = Vec::with_capacity(area.samples().len());
        for u in area.samples() {
            let mut a = vec![Complex64::new(0.0, 0.0); m];
            for (l, site) in scenario.sites().iter().enumerate() {
                let Some(g) = &g_bar[l] else { continue };
                let h = irs_user_channel(site, u, rc)?;
                let offset = scenario.element_range(l).start;
                for (k, hk) in h.iter().enumerate() {
                    if !sol.element_installed(l, k) {
                        continue;
                    }
                    let theta = Complex64::from_polar(1.0, -sol.phases[j][offset + k]);
                    let coef = hk * theta;
                    for (mm, am) in a.iter_mut().enumerate() {
                        *am += coef * g[(k, mm)];
                    }
                }
            }
            let value = match mrt(&a, &sol.x[j]) {
                Some(w) => snr(rc.pbar(), &select(&a, &sol.x[j]), &w)?,
                None => 0.0,
            };
            if !(value >= area.gamma_th() * (1.0 - tolerance)) {
                violations += 1;
            }
            area_snr.push(value);
        }
        margins.push(area_snr.iter().map(|s| linear_to_db(s / area.gamma_th())).collect());
        worst.push(linear_to_db(area_snr.iter().copied().fold(f64::INFINITY, f64::min)));
        snrs.push(area_snr);
    }
    Ok(AuditReport {
        snr: snrs,
        margin_db: margins,
        worst_snr_db: worst,
        violations,
        passed: violations == 0,
    })
}
