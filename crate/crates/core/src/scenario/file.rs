//! Scenario file ingestion.
//!
//! Files are TOML; every field is optional and falls back to the reference
//! deployment (3 GHz carrier, five candidate sites, two 5 m × 5 m areas at
//! 10 dB). Lengths on the antenna grid are given in wavelengths, powers and
//! SNR thresholds in dB. Conversion to linear units happens here and nowhere
//! else.
//!
//! ```toml
//! [radio]
//! frequency_ghz = 3.0
//! tx_power_dbm = 20.0
//! noise_power_dbm = -90.0
//!
//! [array]
//! aperture_wl = 3.0
//! step_wl = 0.5
//! min_spacing_wl = 0.5
//!
//! [cost]
//! ma = 30.0
//! element = 1.0
//! fpa_ratio = 0.3333333333
//!
//! [panel]            # default layout for every site
//! rows = 5
//! cols = 10
//! spacing_wl = 0.5
//!
//! [[sites]]          # replaces the whole default site list when present
//! position = [5.0, 0.0, 12.0]
//! orientation = "horizontal"   # or "vertical"
//! azimuth_deg = 0.0            # vertical only; default faces the area region
//! install_cost = 30.0
//!
//! [areas]
//! count = 2
//! size_m = 5.0
//! resolution_m = 1.0
//! gamma_db = 10.0
//! region_x = [50.0, 70.0]
//! region_y = [-40.0, 40.0]
//! # fixed = [{ corner = [55.0, 0.0] }]   # skips random placement
//! ```

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_ma_grid, db_to_linear, place_areas, CostModel, IrsSite, Orientation, PlacementRegion,
    RadioConstants, Scenario, TargetArea,
};
use crate::geometry::Point;
use crate::{Error, Result};

const DEFAULT_SITES: [(Point, bool, f64); 5] = [
    ([5.0, 0.0, 12.0], true, 30.0),
    ([0.0, 12.0, 5.0], false, 20.0),
    ([0.0, -12.0, 5.0], false, 20.0),
    ([10.0, 25.0, 5.0], false, 10.0),
    ([10.0, -25.0, 5.0], false, 10.0),
];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    radio: Option<RadioSection>,
    array: Option<ArraySection>,
    cost: Option<CostSection>,
    panel: Option<PanelSection>,
    sites: Option<Vec<SiteSection>>,
    areas: Option<AreasSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioSection {
    frequency_ghz: Option<f64>,
    tx_power_dbm: Option<f64>,
    noise_power_dbm: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArraySection {
    aperture_wl: Option<f64>,
    step_wl: Option<f64>,
    min_spacing_wl: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostSection {
    ma: Option<f64>,
    element: Option<f64>,
    fpa_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PanelSection {
    rows: Option<usize>,
    cols: Option<usize>,
    spacing_wl: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteSection {
    position: [f64; 3],
    orientation: Option<String>,
    azimuth_deg: Option<f64>,
    rows: Option<usize>,
    cols: Option<usize>,
    install_cost: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AreasSection {
    count: Option<usize>,
    size_m: Option<f64>,
    resolution_m: Option<f64>,
    gamma_db: Option<f64>,
    region_x: Option<[f64; 2]>,
    region_y: Option<[f64; 2]>,
    fixed: Option<Vec<FixedArea>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedArea {
    corner: [f64; 2],
    size: Option<[f64; 2]>,
    gamma_db: Option<f64>,
}

/// How target areas are obtained for each trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AreaPlacement {
    Random {
        count: usize,
        size: f64,
        resolution: f64,
        gamma_th: f64,
        region: PlacementRegion,
    },
    Fixed(Vec<TargetArea>),
}

/// A resolved scenario template: everything except (possibly random) areas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub radio: RadioConstants,
    /// Aperture side `A` in meters.
    pub aperture: f64,
    /// Grid step `d` in meters.
    pub step: f64,
    /// Minimum inter-antenna distance `D` in meters.
    pub min_distance: f64,
    pub sites: Vec<IrsSite>,
    pub cost: CostModel,
    pub areas: AreaPlacement,
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_scenario_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioSpec> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    resolve(file)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be non-negative, got {v}")))
    }
}

fn resolve(file: ScenarioFile) -> Result<ScenarioSpec> {
    let radio_s = file.radio.unwrap_or_default();
    let freq = positive("radio.frequency_ghz", radio_s.frequency_ghz.unwrap_or(3.0))?;
    let wavelength = 299_792_458.0 / (freq * 1e9);
    // 3 GHz is quoted as λ = 0.1 m; keep that exact value for the default carrier.
    let wavelength = if (freq - 3.0).abs() < 1e-12 { 0.1 } else { wavelength };
    let radio = RadioConstants::from_dbm(
        wavelength,
        radio_s.tx_power_dbm.unwrap_or(20.0),
        radio_s.noise_power_dbm.unwrap_or(-90.0),
    )
    .map_err(|e| Error::Config(format!("radio: {e}")))?;

    let array = file.array.unwrap_or_default();
    let aperture = positive("array.aperture_wl", array.aperture_wl.unwrap_or(3.0))? * wavelength;
    let step = positive("array.step_wl", array.step_wl.unwrap_or(0.5))? * wavelength;
    let min_distance =
        positive("array.min_spacing_wl", array.min_spacing_wl.unwrap_or(0.5))? * wavelength;
    if step > aperture * (1.0 + 1e-9) {
        return Err(Error::Config("array.step_wl exceeds array.aperture_wl".into()));
    }

    let cost_s = file.cost.unwrap_or_default();
    let cost = CostModel::new(
        non_negative("cost.ma", cost_s.ma.unwrap_or(30.0))?,
        non_negative("cost.element", cost_s.element.unwrap_or(1.0))?,
        non_negative("cost.fpa_ratio", cost_s.fpa_ratio.unwrap_or(1.0 / 3.0))?,
    )?;

    let areas_s = file.areas.unwrap_or_default();
    let region = PlacementRegion {
        x: areas_s.region_x.unwrap_or([50.0, 70.0]),
        y: areas_s.region_y.unwrap_or([-40.0, 40.0]),
    };
    if !(region.x[0] < region.x[1] && region.y[0] < region.y[1]) {
        return Err(Error::Config("areas.region_x / region_y must be increasing intervals".into()));
    }
    let size = positive("areas.size_m", areas_s.size_m.unwrap_or(5.0))?;
    let resolution = positive("areas.resolution_m", areas_s.resolution_m.unwrap_or(1.0))?;
    let gamma_db = areas_s.gamma_db.unwrap_or(10.0);
    if !gamma_db.is_finite() {
        return Err(Error::Config("areas.gamma_db must be finite".into()));
    }
    let gamma_th = db_to_linear(gamma_db);
    let (placement, aim) = match areas_s.fixed {
        Some(fixed) if !fixed.is_empty() => {
            let mut areas = Vec::with_capacity(fixed.len());
            for (j, f) in fixed.iter().enumerate() {
                let ext = f.size.unwrap_or([size, size]);
                let g = f.gamma_db.map(db_to_linear).unwrap_or(gamma_th);
                areas.push(
                    TargetArea::new(j, f.corner, ext, resolution, g)
                        .map_err(|e| Error::Config(format!("areas.fixed[{j}]: {e}")))?,
                );
            }
            let n = areas.len() as f64;
            let cx = areas.iter().map(|a| a.corner()[0] + 0.5 * a.extent()[0]).sum::<f64>() / n;
            let cy = areas.iter().map(|a| a.corner()[1] + 0.5 * a.extent()[1]).sum::<f64>() / n;
            (AreaPlacement::Fixed(areas), [cx, cy, 0.0])
        }
        _ => {
            let count = areas_s.count.unwrap_or(2);
            if count == 0 {
                return Err(Error::Config("areas.count must be at least 1".into()));
            }
            (
                AreaPlacement::Random {
                    count,
                    size,
                    resolution,
                    gamma_th,
                    region,
                },
                region.centroid(),
            )
        }
    };

    let panel = file.panel.unwrap_or_default();
    let rows = panel.rows.unwrap_or(5);
    let cols = panel.cols.unwrap_or(10);
    let spacing = positive("panel.spacing_wl", panel.spacing_wl.unwrap_or(0.5))? * wavelength;
    let site_sections: Vec<SiteSection> = match file.sites {
        Some(s) => s,
        None => DEFAULT_SITES
            .iter()
            .map(|&(position, horizontal, c)| SiteSection {
                position,
                orientation: Some(if horizontal { "horizontal" } else { "vertical" }.into()),
                azimuth_deg: None,
                rows: None,
                cols: None,
                install_cost: Some(c),
            })
            .collect(),
    };
    if site_sections.is_empty() {
        return Err(Error::Config("sites: at least one candidate site is required".into()));
    }
    let mut sites = Vec::with_capacity(site_sections.len());
    for (l, s) in site_sections.iter().enumerate() {
        let orientation = match s.orientation.as_deref().unwrap_or("vertical") {
            "horizontal" => Orientation::HorizontalDown,
            "vertical" => {
                let azimuth = match s.azimuth_deg {
                    Some(deg) => deg.to_radians(),
                    None => (aim[1] - s.position[1]).atan2(aim[0] - s.position[0]),
                };
                Orientation::Vertical { azimuth }
            }
            other => {
                return Err(Error::Config(format!(
                    "sites[{l}].orientation: expected \"horizontal\" or \"vertical\", got {other:?}"
                )))
            }
        };
        let install_cost = non_negative(
            &format!("sites[{l}].install_cost"),
            s.install_cost.unwrap_or(10.0),
        )?;
        let site = IrsSite::new(
            l,
            s.position,
            orientation,
            s.rows.unwrap_or(rows),
            s.cols.unwrap_or(cols),
            spacing,
            install_cost,
        )
        .map_err(|e| Error::Config(format!("sites[{l}]: {e}")))?;
        sites.push(site);
    }

    Ok(ScenarioSpec {
        radio,
        aperture,
        step,
        min_distance,
        sites,
        cost,
        areas: placement,
    })
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        resolve(ScenarioFile::default()).expect("built-in defaults are valid")
    }
}

impl ScenarioSpec {
    /// Builds a scenario with explicit areas.
    pub fn build(&self, areas: Vec<TargetArea>) -> Result<Scenario> {
        let grid = build_ma_grid(self.aperture, self.step)?;
        Scenario::new(
            self.radio,
            grid,
            self.min_distance,
            self.sites.clone(),
            areas,
            self.cost,
        )
    }

    /// Draws areas (when random) and builds the scenario.
    pub fn instantiate<R: Rng>(&self, rng: &mut R) -> Result<Scenario> {
        let areas = self.draw_areas(rng)?;
        self.build(areas)
    }

    pub fn draw_areas<R: Rng>(&self, rng: &mut R) -> Result<Vec<TargetArea>> {
        match &self.areas {
            AreaPlacement::Fixed(a) => Ok(a.clone()),
            AreaPlacement::Random {
                count,
                size,
                resolution,
                gamma_th,
                region,
            } => place_areas(rng, *count, *size, region, *resolution, *gamma_th),
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.radio.wavelength()
    }

    pub fn set_gamma_db(&mut self, db: f64) {
        let g = db_to_linear(db);
        match &mut self.areas {
            AreaPlacement::Fixed(a) => {
                for area in a.iter_mut() {
                    *area = area.with_gamma(g);
                }
            }
            AreaPlacement::Random { gamma_th, .. } => *gamma_th = g,
        }
    }

    pub fn set_area_count(&mut self, j: usize) -> Result<()> {
        match &mut self.areas {
            AreaPlacement::Random { count, .. } => {
                *count = j;
                Ok(())
            }
            AreaPlacement::Fixed(_) => Err(Error::Config(
                "cannot change the area count of a fixed-area scenario".into(),
            )),
        }
    }
}
