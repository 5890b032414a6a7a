//! Geometry and economics of a planning instance: the movable-antenna grid
//! with its spacing conflicts, the candidate IRS panels, the sampled target
//! areas and the cost model.

mod file;
mod packing;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{self, Point};
use crate::{Complex64, Error, Result};

pub use file::{parse_scenario, parse_scenario_str, AreaPlacement, ScenarioSpec};
pub use packing::{max_deployable, max_packing, max_packing_exhaustive};

/// Relative slack used when comparing lattice distances against thresholds.
pub(crate) const GEOM_EPS: f64 = 1e-9;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

/// Carrier wavelength and link budget. `c0` and `pbar` are derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConstants {
    wavelength: f64,
    transmit_power: f64,
    noise_power: f64,
}

impl RadioConstants {
    pub fn new(wavelength: f64, transmit_power: f64, noise_power: f64) -> Result<Self> {
        for (name, v) in [
            ("wavelength", wavelength),
            ("transmit power", transmit_power),
            ("noise power", noise_power),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            wavelength,
            transmit_power,
            noise_power,
        })
    }

    pub fn from_dbm(wavelength: f64, transmit_dbm: f64, noise_dbm: f64) -> Result<Self> {
        Self::new(wavelength, dbm_to_watts(transmit_dbm), dbm_to_watts(noise_dbm))
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// Transmit-power to noise ratio.
    pub fn pbar(&self) -> f64 {
        self.transmit_power / self.noise_power
    }

    /// Free-space gain at 1 m, `(λ/4π)²`.
    pub fn c0(&self) -> f64 {
        let r = self.wavelength / (4.0 * std::f64::consts::PI);
        r * r
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }
}

/// Candidate movable-antenna positions: a square lattice in the y–z plane
/// anchored at the origin. Index `m = row * per_side + col`, row along z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaGrid {
    aperture: f64,
    step: f64,
    per_side: usize,
    points: Vec<Point>,
}

impl MaGrid {
    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn per_side(&self) -> usize {
        self.per_side
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// (row, col) lattice coordinates of point `m`.
    pub fn coords(&self, m: usize) -> (usize, usize) {
        (m / self.per_side, m % self.per_side)
    }
}

pub fn build_ma_grid(aperture: f64, step: f64) -> Result<MaGrid> {
    if !(aperture > 0.0 && aperture.is_finite()) {
        return Err(Error::InvalidGeometry(format!("aperture must be positive, got {aperture}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidGeometry(format!("grid step must be positive, got {step}")));
    }
    if step > aperture * (1.0 + GEOM_EPS) {
        return Err(Error::InvalidGeometry(format!(
            "grid step {step} exceeds aperture {aperture}"
        )));
    }
    let per_side = (aperture / step + GEOM_EPS).floor() as usize + 1;
    let mut points = Vec::with_capacity(per_side * per_side);
    for row in 0..per_side {
        for col in 0..per_side {
            points.push([0.0, col as f64 * step, row as f64 * step]);
        }
    }
    Ok(MaGrid {
        aperture,
        step,
        per_side,
        points,
    })
}

/// Grid-point pairs closer than the minimum inter-antenna distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictSet {
    min_distance: f64,
    pairs: Vec<(usize, usize)>,
}

impl ConflictSet {
    pub fn min_distance(&self) -> f64 {
        self.min_distance
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pairs.binary_search(&key).is_ok()
    }

    /// Adjacency lists over `n` points.
    pub fn adjacency(&self, n: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.pairs {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// Two points conflict when their distance is strictly below `min_distance`.
pub fn conflict_set(grid: &MaGrid, min_distance: f64) -> Result<ConflictSet> {
    if !(min_distance > 0.0 && min_distance.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "minimum antenna spacing must be positive, got {min_distance}"
        )));
    }
    let limit = min_distance * (1.0 - GEOM_EPS);
    let pts = grid.points();
    let mut pairs = Vec::new();
    for m in 0..pts.len() {
        for q in (m + 1)..pts.len() {
            if geometry::distance(&pts[m], &pts[q]) < limit {
                pairs.push((m, q));
            }
        }
    }
    Ok(ConflictSet {
        min_distance,
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Orientation {
    /// Panel in a horizontal plane facing down; rows along x, columns along y.
    HorizontalDown,
    /// Panel on a vertical wall whose normal points at `azimuth` (radians from +x).
    /// Rows run along z, columns along the horizontal in-plane direction.
    Vertical { azimuth: f64 },
}

impl Orientation {
    fn axes(&self) -> (Point, Point) {
        match *self {
            Orientation::HorizontalDown => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            Orientation::Vertical { azimuth } => {
                ([0.0, 0.0, 1.0], [-azimuth.sin(), azimuth.cos(), 0.0])
            }
        }
    }
}

/// A candidate IRS site with its full-size planar panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrsSite {
    index: usize,
    reference: Point,
    orientation: Orientation,
    rows: usize,
    cols: usize,
    spacing: f64,
    install_cost: f64,
    elements: Vec<Point>,
}

impl IrsSite {
    pub fn new(
        index: usize,
        reference: Point,
        orientation: Orientation,
        rows: usize,
        cols: usize,
        spacing: f64,
        install_cost: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGeometry(format!("site {index}: empty panel {rows}x{cols}")));
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidGeometry(format!("site {index}: element spacing must be positive")));
        }
        if !(install_cost >= 0.0) {
            return Err(Error::InvalidGeometry(format!("site {index}: negative install cost")));
        }
        if geometry::norm(&reference) == 0.0 {
            return Err(Error::DegenerateGeometry(format!("site {index} coincides with the BS reference")));
        }
        let (row_axis, col_axis) = orientation.axes();
        let mut elements = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let offset = geometry::add(
                    &geometry::scale(&row_axis, r as f64 * spacing),
                    &geometry::scale(&col_axis, c as f64 * spacing),
                );
                elements.push(geometry::add(&reference, &offset));
            }
        }
        Ok(Self {
            index,
            reference,
            orientation,
            rows,
            cols,
            spacing,
            install_cost,
            elements,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn reference(&self) -> Point {
        self.reference
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn layout(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn install_cost(&self) -> f64 {
        self.install_cost
    }

    pub fn elements(&self) -> &[Point] {
        &self.elements
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Distance from the BS reference point to the panel reference element.
    pub fn bs_distance(&self) -> f64 {
        geometry::norm(&self.reference)
    }
}

/// A rectangular target area on the ground plane, sampled on an inclusive grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetArea {
    index: usize,
    corner: [f64; 2],
    extent: [f64; 2],
    resolution: f64,
    gamma_th: f64,
    samples: Vec<Point>,
}

impl TargetArea {
    pub fn new(
        index: usize,
        corner: [f64; 2],
        extent: [f64; 2],
        resolution: f64,
        gamma_th: f64,
    ) -> Result<Self> {
        if !(extent[0] >= 0.0 && extent[1] >= 0.0) {
            return Err(Error::InvalidGeometry(format!("area {index}: negative extent")));
        }
        if !(resolution > 0.0) {
            return Err(Error::InvalidGeometry(format!("area {index}: resolution must be positive")));
        }
        if !(gamma_th > 0.0 && gamma_th.is_finite()) {
            return Err(Error::InvalidGeometry(format!("area {index}: SNR threshold must be positive")));
        }
        let nx = (extent[0] / resolution + GEOM_EPS).floor() as usize + 1;
        let ny = (extent[1] / resolution + GEOM_EPS).floor() as usize + 1;
        let mut samples = Vec::with_capacity(nx * ny);
        for ix in 0..nx {
            for iy in 0..ny {
                samples.push([
                    corner[0] + ix as f64 * resolution,
                    corner[1] + iy as f64 * resolution,
                    0.0,
                ]);
            }
        }
        Ok(Self {
            index,
            corner,
            extent,
            resolution,
            gamma_th,
            samples,
        })
    }

    /// Single-sample area, handy for small instances and tests.
    pub fn single_point(index: usize, point: Point, gamma_th: f64) -> Result<Self> {
        if !(gamma_th > 0.0 && gamma_th.is_finite()) {
            return Err(Error::InvalidGeometry(format!("area {index}: SNR threshold must be positive")));
        }
        Ok(Self {
            index,
            corner: [point[0], point[1]],
            extent: [0.0, 0.0],
            resolution: 1.0,
            gamma_th,
            samples: vec![point],
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn corner(&self) -> [f64; 2] {
        self.corner
    }

    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn gamma_th(&self) -> f64 {
        self.gamma_th
    }

    pub fn with_gamma(&self, gamma_th: f64) -> Self {
        Self {
            gamma_th,
            ..self.clone()
        }
    }

    /// Sample closest to the geometric center (lowest index on ties).
    pub fn centroid_sample(&self) -> usize {
        let c = [
            self.corner[0] + 0.5 * self.extent[0],
            self.corner[1] + 0.5 * self.extent[1],
            0.0,
        ];
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.samples.iter().enumerate() {
            let d = geometry::distance(s, &c);
            if d < best_d - 1e-12 {
                best = i;
                best_d = d;
            }
        }
        best
    }

    fn overlaps(&self, other: &TargetArea) -> bool {
        let sep_x = self.corner[0] + self.extent[0] < other.corner[0]
            || other.corner[0] + other.extent[0] < self.corner[0];
        let sep_y = self.corner[1] + self.extent[1] < other.corner[1]
            || other.corner[1] + other.extent[1] < self.corner[1];
        !(sep_x || sep_y)
    }
}

/// Axis-aligned box on the ground plane in which areas are placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementRegion {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl PlacementRegion {
    pub fn centroid(&self) -> Point {
        [0.5 * (self.x[0] + self.x[1]), 0.5 * (self.y[0] + self.y[1]), 0.0]
    }
}

pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Draws `count` pairwise-disjoint square areas uniformly inside `region`.
pub fn place_areas<R: Rng>(
    rng: &mut R,
    count: usize,
    size: f64,
    region: &PlacementRegion,
    resolution: f64,
    gamma_th: f64,
) -> Result<Vec<TargetArea>> {
    let span_x = region.x[1] - region.x[0] - size;
    let span_y = region.y[1] - region.y[0] - size;
    if span_x < 0.0 || span_y < 0.0 {
        return Err(Error::InvalidGeometry(format!(
            "areas of size {size} m do not fit in the placement region"
        )));
    }
    let mut areas: Vec<TargetArea> = Vec::with_capacity(count);
    let mut attempts = 0;
    while areas.len() < count {
        if attempts >= MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::InvalidGeometry(format!(
                "could not place {count} disjoint areas after {MAX_PLACEMENT_ATTEMPTS} attempts"
            )));
        }
        attempts += 1;
        let corner = [
            region.x[0] + rng.gen::<f64>() * span_x,
            region.y[0] + rng.gen::<f64>() * span_y,
        ];
        let candidate = TargetArea::new(areas.len(), corner, [size, size], resolution, gamma_th)?;
        if areas.iter().all(|a| !a.overlaps(&candidate)) {
            areas.push(candidate);
        }
    }
    Ok(areas)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Cost per movable antenna.
    pub ma: f64,
    /// Cost per IRS element.
    pub element: f64,
    /// Fixed-position antenna cost as a fraction of `ma`.
    pub fpa_ratio: f64,
}

impl CostModel {
    pub fn new(ma: f64, element: f64, fpa_ratio: f64) -> Result<Self> {
        if !(ma >= 0.0 && element >= 0.0 && fpa_ratio >= 0.0) {
            return Err(Error::Config("costs must be non-negative".into()));
        }
        Ok(Self {
            ma,
            element,
            fpa_ratio,
        })
    }

    pub fn fpa_unit(&self) -> f64 {
        self.fpa_ratio * self.ma
    }

    /// The same model with a different per-antenna cost.
    pub fn with_antenna_cost(&self, unit: f64) -> Self {
        Self { ma: unit, ..*self }
    }
}

/// A complete, validated planning instance. Immutable once built.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    radio: RadioConstants,
    grid: MaGrid,
    conflicts: ConflictSet,
    packing: Vec<usize>,
    sites: Vec<IrsSite>,
    areas: Vec<TargetArea>,
    cost: CostModel,
    element_offsets: Vec<usize>,
}

impl Scenario {
    pub fn new(
        radio: RadioConstants,
        grid: MaGrid,
        min_distance: f64,
        sites: Vec<IrsSite>,
        areas: Vec<TargetArea>,
        cost: CostModel,
    ) -> Result<Self> {
        let conflicts = conflict_set(&grid, min_distance)?;
        let packing = max_packing(&grid, &conflicts);
        Self::assemble(radio, grid, conflicts, packing, sites, areas, cost)
    }

    fn assemble(
        radio: RadioConstants,
        grid: MaGrid,
        conflicts: ConflictSet,
        packing: Vec<usize>,
        sites: Vec<IrsSite>,
        areas: Vec<TargetArea>,
        cost: CostModel,
    ) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Config("at least one candidate IRS site is required".into()));
        }
        if areas.is_empty() {
            return Err(Error::Config("at least one target area is required".into()));
        }
        if areas.iter().any(|a| a.samples().is_empty()) {
            return Err(Error::InvalidGeometry("target area without samples".into()));
        }
        let mut element_offsets = Vec::with_capacity(sites.len() + 1);
        let mut acc = 0;
        element_offsets.push(0);
        for s in &sites {
            acc += s.n_elements();
            element_offsets.push(acc);
        }
        Ok(Self {
            radio,
            grid,
            conflicts,
            packing,
            sites,
            areas,
            cost,
            element_offsets,
        })
    }

    /// Same hardware and cost model, different target areas.
    pub fn with_areas(&self, areas: Vec<TargetArea>) -> Result<Self> {
        Self::assemble(
            self.radio,
            self.grid.clone(),
            self.conflicts.clone(),
            self.packing.clone(),
            self.sites.clone(),
            areas,
            self.cost,
        )
    }

    pub fn with_cost(&self, cost: CostModel) -> Self {
        Self {
            cost,
            ..self.clone()
        }
    }

    pub fn radio(&self) -> &RadioConstants {
        &self.radio
    }

    pub fn grid(&self) -> &MaGrid {
        &self.grid
    }

    pub fn conflicts(&self) -> &ConflictSet {
        &self.conflicts
    }

    /// A maximum conflict-free antenna layout.
    pub fn packing(&self) -> &[usize] {
        &self.packing
    }

    pub fn m_max(&self) -> usize {
        self.packing.len()
    }

    pub fn sites(&self) -> &[IrsSite] {
        &self.sites
    }

    pub fn areas(&self) -> &[TargetArea] {
        &self.areas
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn n_antennas(&self) -> usize {
        self.grid.len()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_areas(&self) -> usize {
        self.areas.len()
    }

    /// Aggregate element count over all candidate sites.
    pub fn n_elements(&self) -> usize {
        *self.element_offsets.last().unwrap_or(&0)
    }

    /// Stacked-index range of site `l`'s elements.
    pub fn element_range(&self, l: usize) -> std::ops::Range<usize> {
        self.element_offsets[l]..self.element_offsets[l + 1]
    }

    pub fn site_of_element(&self, n: usize) -> usize {
        match self.element_offsets.binary_search(&n) {
            Ok(i) => i.min(self.sites.len() - 1),
            Err(i) => i - 1,
        }
    }

    pub fn total_samples(&self) -> usize {
        self.areas.iter().map(|a| a.samples().len()).sum()
    }
}

/// Binary deployment decisions plus per-area phases (radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentSolution {
    /// `x[j][m]`: antenna at grid point `m` while serving area `j`.
    pub x: Vec<Vec<bool>>,
    /// `z[l]`: IRS built at site `l`.
    pub z: Vec<bool>,
    /// `phases[j][n]`: phase of stacked element `n` for area `j`, so `v_n = e^{jψ}`.
    pub phases: Vec<Vec<f64>>,
    /// Per-site installed-element bitmap; `None` means full panels on selected sites.
    pub installed: Option<Vec<Vec<bool>>>,
}

impl DeploymentSolution {
    /// Converts relaxed values to binaries, rejecting anything farther than
    /// `tol` from 0 or 1.
    pub fn from_relaxed(
        x: &[Vec<f64>],
        z: &[f64],
        v: &[Vec<Complex64>],
        tol: f64,
    ) -> Result<Self> {
        let to_bool = |val: f64, what: &str| -> Result<bool> {
            if val.abs() <= tol {
                Ok(false)
            } else if (val - 1.0).abs() <= tol {
                Ok(true)
            } else {
                Err(Error::Audit(format!("{what} = {val} is not binary")))
            }
        };
        let x = x
            .iter()
            .map(|row| row.iter().map(|&v| to_bool(v, "x")).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let z = z.iter().map(|&v| to_bool(v, "z")).collect::<Result<Vec<_>>>()?;
        let phases = v
            .iter()
            .map(|vj| vj.iter().map(|c| c.arg()).collect())
            .collect();
        Ok(Self {
            x,
            z,
            phases,
            installed: None,
        })
    }

    pub fn ma_counts(&self) -> Vec<usize> {
        self.x.iter().map(|r| r.iter().filter(|&&b| b).count()).collect()
    }

    pub fn max_ma_count(&self) -> usize {
        self.ma_counts().into_iter().max().unwrap_or(0)
    }

    pub fn site_count(&self) -> usize {
        self.z.iter().filter(|&&b| b).count()
    }

    /// Installed element indicator `y_{l,n}`, which equals `z_l` without pruning.
    pub fn element_installed(&self, l: usize, n: usize) -> bool {
        self.z[l]
            && match &self.installed {
                Some(map) => map[l][n],
                None => true,
            }
    }

    pub fn installed_count(&self, scenario: &Scenario) -> Vec<usize> {
        scenario
            .sites()
            .iter()
            .enumerate()
            .map(|(l, s)| (0..s.n_elements()).filter(|&n| self.element_installed(l, n)).count())
            .collect()
    }

    /// Phase vector `v_j` as unit-modulus complex entries.
    pub fn phase_vector(&self, j: usize) -> Vec<Complex64> {
        self.phases[j]
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect()
    }
}

/// Antenna term plus per-site terms of the deployment cost.
pub fn total_cost(sol: &DeploymentSolution, cm: &CostModel, sites: &[IrsSite]) -> f64 {
    let antenna = cm.ma * sol.max_ma_count() as f64;
    let irs: f64 = sites
        .iter()
        .enumerate()
        .filter(|(l, _)| sol.z[*l])
        .map(|(l, s)| {
            let n = (0..s.n_elements()).filter(|&n| sol.element_installed(l, n)).count();
            s.install_cost() + cm.element * n as f64
        })
        .sum();
    antenna + irs
}

#[cfg(test)]
mod tests;
