use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::costmin::{run_costmin_with, CostminVariant};
use crate::feasibility::run_feasibility_with;
use crate::fixtures::{random_scenario, SmallSpec};
use crate::scenario::total_cost;

fn spec() -> SmallSpec {
    SmallSpec {
        sites: 2,
        rows: 3,
        cols: 3,
        aperture_wl: 1.0,
        areas: 2,
        samples_side: 2,
        ..SmallSpec::default()
    }
}

/// A costmin plan whose thresholds sit at `backoff` times what the full
/// deployment achieves.
fn planned(seed: u64, backoff: f64) -> (Scenario, ChannelSet, Plan) {
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sc = random_scenario(&mut rng, &spec()).unwrap();
    let ch = ChannelSet::new(&sc).unwrap();
    let init = run_feasibility_with(&sc, &ch, &config).unwrap();
    let areas = sc.areas().iter().map(|a| a.with_gamma(a.gamma_th() * init.eta * backoff)).collect();
    let sc = sc.with_areas(areas).unwrap();
    let ch = ChannelSet::new(&sc).unwrap();
    let init = run_feasibility_with(&sc, &ch, &config).unwrap();
    let plan = run_costmin_with(&sc, &ch, &config, &init, &CostminVariant::joint(&sc)).unwrap();
    (sc, ch, plan)
}

#[test]
fn full_installation_reproduces_the_audit() {
    let (sc, ch, plan) = planned(1, 0.5);
    let y: Vec<f64> = (0..sc.n_elements())
        .map(|n| if plan.solution.z[sc.site_of_element(n)] { 1.0 } else { 0.0 })
        .collect();
    for j in 0..sc.n_areas() {
        for s in 0..ch.n_samples(j) {
            let q = build_q(&ch, &plan.solution, j, s);
            let mut quad = Complex64::new(0.0, 0.0);
            for a in 0..y.len() {
                for b in 0..y.len() {
                    quad += y[a] * q[(a, b)] * y[b];
                }
            }
            let want = plan.audit.snr[j][s];
            assert!((ch.pbar() * quad.re - want).abs() <= 1e-9 * want);
            assert!(quad.im.abs() <= 1e-9 * quad.re.abs());
        }
    }
}

#[test]
fn q_is_hermitian_with_dead_sites_zeroed() {
    let (sc, ch, plan) = planned(2, 0.5);
    let mut sol = plan.solution.clone();
    sol.z = vec![true, false];
    let q = build_q(&ch, &sol, 0, 0);
    for a in 0..sc.n_elements() {
        assert!(q[(a, a)].re >= 0.0);
        for b in 0..sc.n_elements() {
            assert_eq!(q[(a, b)], q[(b, a)].conj());
            if sc.site_of_element(a) == 1 {
                assert_eq!(q[(a, b)], Complex64::new(0.0, 0.0));
            }
        }
    }
}

/// Re-targets every area of `plan` at `factor` times its worst audited SNR.
fn retarget(sc: &Scenario, plan: &Plan, factor: f64) -> (Scenario, ChannelSet, Plan) {
    let areas = sc
        .areas()
        .iter()
        .enumerate()
        .map(|(j, a)| a.with_gamma(factor * plan.audit.snr[j].iter().copied().fold(f64::INFINITY, f64::min)))
        .collect();
    let sc = sc.with_areas(areas).unwrap();
    let ch = ChannelSet::new(&sc).unwrap();
    let plan = Plan::new(&sc, plan.solution.clone(), plan.cost.antenna_unit, plan.status, vec![], 1e-6).unwrap();
    assert!(plan.audit.passed);
    (sc, ch, plan)
}

#[test]
fn large_margins_remove_elements() {
    for seed in 0..3 {
        let (sc, _, plan) = planned(10 + seed, 0.5);
        // thresholds 10 dB below the audited worst SNR
        let (sc, ch, plan) = retarget(&sc, &plan, 0.1);
        let pruned = run_pruning_with(&plan, &sc, &ch, &SolverConfig::default()).unwrap();
        assert!(pruned.audit.passed);
        assert!(pruned.total_cost() < plan.total_cost(), "seed {seed}");
        assert!(pruned.installed_elements(&sc) < plan.installed_elements(&sc));
        let recomputed = total_cost(&pruned.solution, sc.cost(), sc.sites());
        assert!((recomputed - pruned.total_cost()).abs() < 1e-9);
        for (l, &on) in pruned.solution.z.iter().enumerate() {
            if !on {
                assert!((0..sc.sites()[l].n_elements()).all(|n| !pruned.solution.element_installed(l, n)));
            }
        }
    }
}

#[test]
fn tight_thresholds_keep_every_element() {
    let config = SolverConfig::default();
    let (sc, _, plan) = planned(4, 0.5);
    // move each threshold onto the plan's own worst sample
    let (tight, ch, plan) = retarget(&sc, &plan, 1.0);
    let prob = Problem::new(&tight, &ch, &plan.solution);
    let full: Vec<f64> = (0..tight.n_elements())
        .map(|n| if prob.free.contains(&n) { 1.0 } else { 0.0 })
        .collect();
    let removable = prob.free.iter().any(|&n| {
        let mut y = full.clone();
        y[n] = 0.0;
        prob.normalized(&y).iter().all(|&f| f >= 1.0)
    });
    let pruned = run_pruning_with(&plan, &tight, &ch, &config).unwrap();
    assert!(pruned.audit.passed);
    assert!(pruned.total_cost() <= plan.total_cost());
    if !removable {
        assert_eq!(pruned.total_cost(), plan.total_cost());
    }
}

#[test]
fn pruning_twice_never_costs_more() {
    let (sc, ch, plan) = planned(6, 0.3);
    let config = SolverConfig::default();
    let once = run_pruning_with(&plan, &sc, &ch, &config).unwrap();
    let twice = run_pruning_with(&once, &sc, &ch, &config).unwrap();
    assert!(twice.total_cost() <= once.total_cost());
    assert!(twice.audit.passed);
}
