//! Fixed instances shared by the benchmarks.

use covplan_core::fixtures::{random_scenario, SmallSpec};
use covplan_core::scenario::ScenarioSpec;
use covplan_core::{run_feasibility, Scenario, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default geometry with one seeded area placement.
pub fn reference_scenario(seed: u64) -> Scenario {
    ScenarioSpec::default()
        .instantiate(&mut ChaCha8Rng::seed_from_u64(seed))
        .expect("default scenario")
}

/// Three small sites, a 2λ aperture and two 3×3-sample areas, with the
/// threshold at a quarter of the best worst-case SNR.
pub fn small_scenario(seed: u64) -> Scenario {
    let spec = SmallSpec {
        sites: 3,
        rows: 3,
        cols: 3,
        aperture_wl: 2.0,
        areas: 2,
        samples_side: 3,
        ..SmallSpec::default()
    };
    let sc = random_scenario(&mut ChaCha8Rng::seed_from_u64(seed), &spec).expect("small scenario");
    let best = run_feasibility(&sc, &SolverConfig::default()).expect("feasibility").eta;
    let areas = sc.areas().iter().map(|a| a.with_gamma(best / 4.0)).collect();
    sc.with_areas(areas).expect("rescaled areas")
}
