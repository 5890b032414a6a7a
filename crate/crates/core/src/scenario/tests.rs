use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

const LAMBDA: f64 = 0.1;

fn grid_and_conflicts(a: f64, d: f64, dmin: f64) -> (MaGrid, ConflictSet) {
    let g = build_ma_grid(a, d).unwrap();
    let c = conflict_set(&g, dmin).unwrap();
    (g, c)
}

fn brute_force_pairs(g: &MaGrid, dmin: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for m in 0..g.len() {
        for q in m + 1..g.len() {
            if geometry::distance(&g.points()[m], &g.points()[q]) < dmin * (1.0 - GEOM_EPS) {
                out.push((m, q));
            }
        }
    }
    out
}

#[test]
fn grid_counts() {
    assert_eq!(build_ma_grid(3.0 * LAMBDA, LAMBDA / 2.0).unwrap().len(), 49);
    assert_eq!(build_ma_grid(LAMBDA, LAMBDA).unwrap().len(), 4);
    assert_eq!(build_ma_grid(3.0 * LAMBDA, LAMBDA).unwrap().len(), 16);
}

#[test]
fn grid_rejects_bad_dimensions() {
    assert!(build_ma_grid(0.0, 0.1).is_err());
    assert!(build_ma_grid(0.3, -0.1).is_err());
    assert!(build_ma_grid(0.1, 0.3).is_err());
}

#[test]
fn grid_spans_yz_square() {
    let g = build_ma_grid(0.3, 0.05).unwrap();
    for p in g.points() {
        assert_eq!(p[0], 0.0);
        assert!(p[1] >= 0.0 && p[1] <= 0.3 + 1e-12);
        assert!(p[2] >= 0.0 && p[2] <= 0.3 + 1e-12);
    }
    assert_eq!(g.coords(8), (1, 1));
    assert_eq!(g.points()[8], [0.0, 0.05, 0.05]);
}

#[test]
fn conflicts_at_exact_spacing_are_empty() {
    let (_, c) = grid_and_conflicts(3.0 * LAMBDA, LAMBDA / 2.0, LAMBDA / 2.0);
    assert!(c.is_empty());
}

#[test]
fn conflicts_third_wavelength_include_all_neighbours() {
    let (g, c) = grid_and_conflicts(3.0 * LAMBDA, LAMBDA / 3.0, LAMBDA / 2.0);
    assert_eq!(c.pairs(), brute_force_pairs(&g, LAMBDA / 2.0).as_slice());
    let n = g.per_side();
    for m in 0..g.len() {
        let (r, col) = g.coords(m);
        for (dr, dc) in [(0i64, 1i64), (1, 0), (1, 1), (1, -1)] {
            let (r2, c2) = (r as i64 + dr, col as i64 + dc);
            if r2 < n as i64 && c2 >= 0 && c2 < n as i64 {
                let q = r2 as usize * n + c2 as usize;
                assert!(c.contains(m, q), "missing neighbour pair ({m},{q})");
            }
        }
    }
}

#[test]
fn single_point_grid_has_no_conflicts() {
    let g = MaGrid {
        aperture: 0.0,
        step: 0.05,
        per_side: 1,
        points: vec![[0.0; 3]],
    };
    let c = conflict_set(&g, 0.05).unwrap();
    assert!(c.is_empty());
    assert_eq!(max_deployable(&g, &c), 1);
}

#[test]
fn m_max_matches_reference_values() {
    let a = 3.0 * LAMBDA;
    let dm = LAMBDA / 2.0;
    for (d, want) in [(LAMBDA / 2.0, 49), (LAMBDA / 3.0, 25), (LAMBDA / 4.0, 49), (LAMBDA, 16)] {
        let (g, c) = grid_and_conflicts(a, d, dm);
        assert_eq!(max_deployable(&g, &c), want, "d = {d}");
    }
}

#[test]
fn packing_is_conflict_free() {
    for d in [LAMBDA / 2.0, LAMBDA / 3.0, LAMBDA / 4.0, LAMBDA / 5.0] {
        let (g, c) = grid_and_conflicts(3.0 * LAMBDA, d, LAMBDA / 2.0);
        let p = max_packing(&g, &c);
        for (i, &a) in p.iter().enumerate() {
            for &b in &p[i + 1..] {
                assert!(!c.contains(a, b));
            }
        }
    }
}

proptest! {
    #[test]
    fn stride_packing_matches_exhaustive(per_side in 2usize..=6, ratio in 1.0f64..3.2) {
        let d = 0.05;
        let a = d * (per_side - 1) as f64;
        let (g, c) = grid_and_conflicts(a, d, ratio * d);
        prop_assert_eq!(g.per_side(), per_side);
        let fast = max_deployable(&g, &c);
        let exact = max_packing_exhaustive(g.len(), &c).len();
        prop_assert_eq!(fast, exact);
    }

    #[test]
    fn conflict_membership_is_symmetric(per_side in 2usize..=6, ratio in 0.5f64..3.0) {
        let d = 0.05;
        let (g, c) = grid_and_conflicts(d * (per_side - 1) as f64, d, ratio * d);
        for m in 0..g.len() {
            for q in 0..g.len() {
                if m != q {
                    prop_assert_eq!(c.contains(m, q), c.contains(q, m));
                }
            }
        }
        let brute = brute_force_pairs(&g, ratio * d);
        prop_assert_eq!(c.pairs(), brute.as_slice());
    }

    #[test]
    fn grid_count_formula(ratio in 1.0f64..12.0) {
        let d = 0.05;
        let g = build_ma_grid(ratio * d, d).unwrap();
        let side = (ratio + 1e-9).floor() as usize + 1;
        prop_assert_eq!(g.len(), side * side);
    }

    #[test]
    fn total_cost_is_monotone(bits in proptest::collection::vec(any::<bool>(), 9 + 3 + 4), flip in 0usize..16) {
        let sites = tiny_sites();
        let cm = CostModel::new(30.0, 1.0, 1.0 / 3.0).unwrap();
        let make = |b: &[bool]| DeploymentSolution {
            x: vec![b[0..3].to_vec(), b[3..6].to_vec(), b[6..9].to_vec()],
            z: b[9..12].to_vec(),
            phases: vec![vec![0.0; 6]; 3],
            installed: Some(vec![b[12..14].to_vec(), b[14..16].to_vec(), vec![true, true]]),
        };
        let base = make(&bits);
        let mut raised = bits.clone();
        raised[flip] = true;
        let up = make(&raised);
        prop_assert!(total_cost(&up, &cm, &sites) >= total_cost(&base, &cm, &sites) - 1e-12);
    }
}

fn tiny_sites() -> Vec<IrsSite> {
    (0..3)
        .map(|l| {
            IrsSite::new(
                l,
                [1.0 + l as f64, 2.0, 3.0],
                Orientation::HorizontalDown,
                1,
                2,
                0.05,
                10.0 * (l + 1) as f64,
            )
            .unwrap()
        })
        .collect()
}

fn reference_sites() -> Vec<IrsSite> {
    ScenarioSpec::default().sites
}

fn deployment(max_ma: usize, z: &[bool]) -> DeploymentSolution {
    let mut x = vec![false; 49];
    x[..max_ma].iter_mut().for_each(|b| *b = true);
    DeploymentSolution {
        x: vec![x],
        z: z.to_vec(),
        phases: vec![vec![0.0; 250]],
        installed: None,
    }
}

#[test]
fn total_cost_examples() {
    let sites = reference_sites();
    let cm = CostModel::new(30.0, 1.0, 1.0 / 3.0).unwrap();
    let sol = deployment(3, &[true, false, false, false, false]);
    assert_eq!(total_cost(&sol, &cm, &sites), 170.0);
    let sol = deployment(0, &[false; 5]);
    assert_eq!(total_cost(&sol, &cm, &sites), 0.0);
    let sol = deployment(1, &[false, true, true, false, false]);
    assert_eq!(total_cost(&sol, &cm, &sites), 170.0);
}

#[test]
fn pruned_elements_reduce_cost() {
    let sites = reference_sites();
    let cm = CostModel::new(30.0, 1.0, 1.0 / 3.0).unwrap();
    let mut sol = deployment(1, &[true, false, false, false, false]);
    let mut map = vec![vec![true; 50]; 5];
    map[0][..10].iter_mut().for_each(|b| *b = false);
    sol.installed = Some(map);
    assert_eq!(total_cost(&sol, &cm, &sites), 30.0 + 30.0 + 40.0);
    assert_eq!(sol.installed_count(&ScenarioSpec::default().build(default_areas()).unwrap())[0], 40);
}

#[test]
fn from_relaxed_rejects_fractional_values() {
    let v = vec![vec![Complex64::new(1.0, 0.0)]];
    assert!(DeploymentSolution::from_relaxed(&[vec![0.4]], &[1.0], &v, 1e-4).is_err());
    let sol = DeploymentSolution::from_relaxed(&[vec![0.99999]], &[1e-6], &v, 1e-4).unwrap();
    assert_eq!(sol.x, vec![vec![true]]);
    assert_eq!(sol.z, vec![false]);
}

fn default_areas() -> Vec<TargetArea> {
    vec![TargetArea::new(0, [55.0, 0.0], [5.0, 5.0], 1.0, 10.0).unwrap()]
}

#[test]
fn panel_geometry() {
    let spec = ScenarioSpec::default();
    let top = &spec.sites[0];
    assert_eq!(top.reference(), [5.0, 0.0, 12.0]);
    assert_eq!(top.n_elements(), 50);
    assert_eq!(top.layout(), (5, 10));
    assert_eq!(top.bs_distance(), 13.0);
    // horizontal panel stays at its height
    assert!(top.elements().iter().all(|p| (p[2] - 12.0).abs() < 1e-12));
    let side = &spec.sites[1];
    // vertical panel: rows climb in z, columns stay at constant height
    assert!((side.elements()[10][2] - side.elements()[0][2] - 0.05).abs() < 1e-12);
    assert!((side.elements()[1][2] - side.elements()[0][2]).abs() < 1e-12);
    for s in &spec.sites {
        let e = s.elements();
        let (rows, cols) = s.layout();
        for r in 0..rows {
            for c in 0..cols.saturating_sub(1) {
                let gap = geometry::distance(&e[r * cols + c], &e[r * cols + c + 1]);
                assert!((gap - 0.05).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn area_sampling_is_inclusive() {
    let a = TargetArea::new(0, [50.0, -3.0], [5.0, 5.0], 1.0, 10.0).unwrap();
    assert_eq!(a.samples().len(), 36);
    for s in a.samples() {
        assert!(s[0] >= 50.0 && s[0] <= 55.0 && s[1] >= -3.0 && s[1] <= 2.0 && s[2] == 0.0);
    }
    let c = a.samples()[a.centroid_sample()];
    assert_eq!([c[0], c[1]], [52.0, -1.0]);
}

#[test]
fn placement_is_disjoint_and_inside() {
    let region = PlacementRegion {
        x: [50.0, 70.0],
        y: [-40.0, 40.0],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let areas = place_areas(&mut rng, 4, 5.0, &region, 1.0, 10.0).unwrap();
        for (i, a) in areas.iter().enumerate() {
            assert!(a.samples().iter().all(|s| s[0] >= 50.0 && s[0] <= 70.0 && s[1] >= -40.0 && s[1] <= 40.0));
            for b in &areas[i + 1..] {
                assert!(!a.overlaps(b));
            }
        }
    }
}

#[test]
fn placement_gives_up_when_impossible() {
    let region = PlacementRegion {
        x: [0.0, 6.0],
        y: [0.0, 6.0],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(place_areas(&mut rng, 3, 5.0, &region, 1.0, 10.0).is_err());
}

#[test]
fn radio_defaults() {
    let spec = ScenarioSpec::default();
    let r = spec.radio;
    assert_eq!(r.wavelength(), 0.1);
    assert!((r.pbar() - 1e11).abs() / 1e11 < 1e-12);
    assert!((r.c0() - (0.1 / (4.0 * std::f64::consts::PI)).powi(2)).abs() < 1e-18);
    assert!(RadioConstants::new(0.1, 0.0, 1.0).is_err());
}

#[test]
fn empty_file_yields_reference_scenario() {
    let spec = parse_scenario_str("").unwrap();
    assert_eq!(spec, ScenarioSpec::default());
    assert_eq!(spec.sites.len(), 5);
    assert_eq!(spec.sites[0].reference(), [5.0, 0.0, 12.0]);
    let costs: Vec<f64> = spec.sites.iter().map(|s| s.install_cost()).collect();
    assert_eq!(costs, vec![30.0, 20.0, 20.0, 10.0, 10.0]);
    assert_eq!(spec.cost, CostModel::new(30.0, 1.0, 1.0 / 3.0).unwrap());
    assert!((spec.aperture - 0.3).abs() < 1e-12);
    assert!((spec.step - 0.05).abs() < 1e-12);
    assert!((spec.min_distance - 0.05).abs() < 1e-12);
    match &spec.areas {
        AreaPlacement::Random { count, size, gamma_th, .. } => {
            assert_eq!(*count, 2);
            assert_eq!(*size, 5.0);
            assert!((gamma_th - 10.0).abs() < 1e-12);
        }
        other => panic!("unexpected placement {other:?}"),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sc = spec.instantiate(&mut rng).unwrap();
    assert_eq!(sc.m_max(), 49);
    assert_eq!(sc.n_elements(), 250);
    assert_eq!(sc.total_samples(), 72);
}

#[test]
fn gamma_override_in_db() {
    let spec = parse_scenario_str("[areas]\ngamma_db = 15.0\n").unwrap();
    match spec.areas {
        AreaPlacement::Random { gamma_th, .. } => assert!((gamma_th - 31.6227766).abs() < 1e-6),
        _ => unreachable!(),
    }
}

#[test]
fn invalid_files_are_rejected() {
    assert!(parse_scenario_str("[array]\nstep_wl = -0.5\n").is_err());
    assert!(parse_scenario_str("[array]\nbogus = 1\n").is_err());
    assert!(parse_scenario_str("[cost]\nma = -1\n").is_err());
    assert!(parse_scenario_str("[[sites]]\nposition = [1.0, 0.0, 1.0]\norientation = \"diagonal\"\n").is_err());
    let err = parse_scenario_str("[array]\nstep_wl = -0.5\n").unwrap_err().to_string();
    assert!(err.contains("array.step_wl"), "{err}");
}

#[test]
fn fixed_areas_and_custom_sites() {
    let text = r#"
        [[sites]]
        position = [3.0, 4.0, 5.0]
        orientation = "vertical"
        azimuth_deg = 90.0
        rows = 2
        cols = 2
        install_cost = 7.0

        [areas]
        gamma_db = 0.0
        fixed = [{ corner = [60.0, 1.0], size = [0.0, 0.0] }]
    "#;
    let spec = parse_scenario_str(text).unwrap();
    assert_eq!(spec.sites.len(), 1);
    assert_eq!(spec.sites[0].n_elements(), 4);
    // azimuth 90°: the horizontal panel axis is -x
    let e = spec.sites[0].elements();
    assert!((e[1][0] - (3.0 - 0.05)).abs() < 1e-12 && (e[1][1] - 4.0).abs() < 1e-12);
    let sc = spec.instantiate(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(sc.n_areas(), 1);
    assert_eq!(sc.areas()[0].samples(), &[[60.0, 1.0, 0.0]]);
    assert_eq!(sc.areas()[0].gamma_th(), 1.0);
}

#[test]
fn site_lookup_by_element() {
    let sc = ScenarioSpec::default().build(default_areas()).unwrap();
    assert_eq!(sc.element_range(2), 100..150);
    assert_eq!(sc.site_of_element(0), 0);
    assert_eq!(sc.site_of_element(49), 0);
    assert_eq!(sc.site_of_element(50), 1);
    assert_eq!(sc.site_of_element(249), 4);
}
