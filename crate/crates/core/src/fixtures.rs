//! Small randomized instances for tests, oracle checks and benchmarks.

use rand::Rng;

use crate::scenario::{
    build_ma_grid, CostModel, IrsSite, Orientation, RadioConstants, Scenario, TargetArea,
};
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct SmallSpec {
    pub sites: usize,
    pub rows: usize,
    pub cols: usize,
    /// Aperture and grid step, both in wavelengths.
    pub aperture_wl: f64,
    pub step_wl: f64,
    pub min_spacing_wl: f64,
    pub areas: usize,
    /// Samples per area side; 1 gives single-point areas.
    pub samples_side: usize,
    pub gamma: f64,
}

impl Default for SmallSpec {
    fn default() -> Self {
        Self {
            sites: 2,
            rows: 2,
            cols: 2,
            aperture_wl: 1.0,
            step_wl: 0.5,
            min_spacing_wl: 0.5,
            areas: 1,
            samples_side: 1,
            gamma: 1.0,
        }
    }
}

/// Random sites around the BS and random areas 30–60 m away, with the
/// reference radio constants (3 GHz, 20 dBm, −90 dBm).
pub fn random_scenario<R: Rng>(rng: &mut R, spec: &SmallSpec) -> Result<Scenario> {
    let lambda = 0.1;
    let radio = RadioConstants::from_dbm(lambda, 20.0, -90.0)?;
    let grid = build_ma_grid(spec.aperture_wl * lambda, spec.step_wl * lambda)?;
    let mut sites = Vec::with_capacity(spec.sites);
    for l in 0..spec.sites {
        let reference = [
            rng.gen_range(0.0..15.0),
            rng.gen_range(-25.0..25.0),
            rng.gen_range(3.0..12.0),
        ];
        let orientation = if rng.gen_bool(0.3) {
            Orientation::HorizontalDown
        } else {
            Orientation::Vertical {
                azimuth: rng.gen_range(-0.5..0.5),
            }
        };
        let cost = rng.gen_range(5.0..30.0f64).round();
        sites.push(IrsSite::new(
            l,
            reference,
            orientation,
            spec.rows,
            spec.cols,
            lambda / 2.0,
            cost,
        )?);
    }
    let mut areas = Vec::with_capacity(spec.areas);
    for j in 0..spec.areas {
        let corner = [rng.gen_range(30.0..60.0), rng.gen_range(-20.0..20.0)];
        let area = if spec.samples_side <= 1 {
            TargetArea::single_point(j, [corner[0], corner[1], 0.0], spec.gamma)?
        } else {
            let ext = (spec.samples_side - 1) as f64;
            TargetArea::new(j, corner, [ext, ext], 1.0, spec.gamma)?
        };
        areas.push(area);
    }
    Scenario::new(
        radio,
        grid,
        spec.min_spacing_wl * lambda,
        sites,
        areas,
        CostModel::new(30.0, 1.0, 1.0 / 3.0)?,
    )
}

/// Random unit-modulus phase vector.
pub fn random_phases<R: Rng>(rng: &mut R, n: usize) -> Vec<crate::Complex64> {
    (0..n)
        .map(|_| crate::Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect()
}
