use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fixtures::{random_phases, random_scenario, SmallSpec};
use crate::scenario::{build_ma_grid, Orientation};

fn radio() -> RadioConstants {
    RadioConstants::from_dbm(0.1, 20.0, -90.0).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn unit_direction_examples() {
    let d = unit_direction(&[0.0; 3], &[5.0, 0.0, 12.0]).unwrap();
    assert!((d[0] - 5.0 / 13.0).abs() < 1e-15 && d[1] == 0.0 && (d[2] - 12.0 / 13.0).abs() < 1e-15);
    assert_eq!(unit_direction(&[0.0; 3], &[0.0, 0.0, 1.0]).unwrap(), [0.0, 0.0, 1.0]);
    assert!(unit_direction(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
}

proptest! {
    #[test]
    fn unit_direction_is_scale_invariant(
        p in proptest::array::uniform3(-10.0f64..10.0),
        v in proptest::array::uniform3(-1.0f64..1.0),
        c in 0.1f64..100.0,
    ) {
        let n = geometry::norm(&v);
        prop_assume!(n > 1e-3);
        let vh = geometry::scale(&v, 1.0 / n);
        let to = geometry::add(&p, &geometry::scale(&vh, c));
        let d = unit_direction(&p, &to).unwrap();
        for i in 0..3 {
            prop_assert!((d[i] - vh[i]).abs() < 1e-9);
        }
        prop_assert!((geometry::norm(&d) - 1.0).abs() < 1e-12);
    }
}

fn single_element_site(reference: Point) -> IrsSite {
    IrsSite::new(0, reference, Orientation::HorizontalDown, 1, 1, 0.05, 1.0).unwrap()
}

#[test]
fn bs_irs_reference_entry_is_real() {
    let rc = radio();
    let grid = build_ma_grid(0.05, 0.05).unwrap();
    let site = single_element_site([5.0, 0.0, 12.0]);
    let g = bs_irs_channel(&site, &grid, &rc).unwrap();
    assert_eq!(g.shape(), (1, 4));
    let want = rc.c0().sqrt() / 13.0;
    assert!((g[(0, 0)].re - want).abs() < 1e-18 && g[(0, 0)].im == 0.0);
}

#[test]
fn bs_irs_is_rank_one_with_constant_magnitude() {
    let rc = radio();
    let grid = build_ma_grid(0.3, 0.05).unwrap();
    let spec = crate::scenario::ScenarioSpec::default();
    for site in &spec.sites {
        let g = bs_irs_channel(site, &grid, &rc).unwrap();
        let amp = rc.c0().sqrt() / site.bs_distance();
        assert!(g.iter().all(|c| close(c.norm(), amp, 1e-12)));
        let sv = g.singular_values();
        assert!(sv[1] / sv[0] < 1e-9, "rank > 1: {sv:?}");
        // column selection by a binary diagonal zeroes exactly the dropped columns
        let x: Vec<f64> = (0..grid.len()).map(|m| (m % 3 == 0) as u8 as f64).collect();
        let xd = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            grid.len(),
            x.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let gx = &g * xd;
        for m in 0..grid.len() {
            let zero = gx.column(m).iter().all(|c| c.norm() == 0.0);
            assert_eq!(zero, x[m] == 0.0);
        }
    }
}

#[test]
fn irs_user_magnitudes_and_symmetry() {
    let rc = radio();
    let site = single_element_site([5.0, 0.0, 12.0]);
    let u = [50.0, 3.0, 0.0];
    let h = irs_user_channel(&site, &u, &rc).unwrap();
    let dt = geometry::distance(&[5.0, 0.0, 12.0], &u);
    assert_eq!(h.len(), 1);
    assert!((h[0].re - rc.c0().sqrt() / dt).abs() < 1e-18 && h[0].im == 0.0);
    assert!(irs_user_channel(&site, &[5.0, 0.0, 12.0], &rc).is_err());

    // symmetric 1×5 strip, user on the broadside axis of the strip center
    let strip = IrsSite::new(0, [0.0, -0.1, 5.0], Orientation::Vertical { azimuth: 0.0 }, 1, 5, 0.05, 1.0).unwrap();
    let h = irs_user_channel(&strip, &[20.0, 0.0, 5.0], &rc).unwrap();
    let amp = h[0].norm();
    assert!(h.iter().all(|c| close(c.norm(), amp, 1e-12)));
    for i in 1..=2 {
        let up = h[2 + i] / h[2];
        let down = h[2 - i] / h[2];
        assert!((up - down.conj()).norm() < 1e-12);
    }
}

fn dense_effective(sc: &Scenario, j: usize, s: usize, v: &[Complex64], z: &[bool]) -> Vec<Complex64> {
    // Σ_ℓ z_ℓ h_ℓ^H Θ_ℓ Ḡ_ℓ from full per-site matrices
    let rc = sc.radio();
    let u = sc.areas()[j].samples()[s];
    let mut a = vec![Complex64::new(0.0, 0.0); sc.n_antennas()];
    for (l, site) in sc.sites().iter().enumerate() {
        if !z[l] {
            continue;
        }
        let g = bs_irs_channel(site, sc.grid(), rc).unwrap();
        let h = irs_user_channel(site, &u, rc).unwrap();
        let r = sc.element_range(l);
        for m in 0..sc.n_antennas() {
            for (k, n) in r.clone().enumerate() {
                a[m] += h[k] * v[n].conj() * g[(k, m)];
            }
        }
    }
    a
}

#[test]
fn single_path_snr_closed_form() {
    let rc = radio();
    let grid = build_ma_grid(0.05, 0.05).unwrap();
    let p = [4.0, 3.0, 10.0];
    let u = [40.0, -2.0, 0.0];
    let sc = Scenario::new(
        rc,
        grid,
        0.05,
        vec![single_element_site(p)],
        vec![crate::TargetArea::single_point(0, u, 1.0).unwrap()],
        crate::CostModel::new(30.0, 1.0, 1.0 / 3.0).unwrap(),
    )
    .unwrap();
    let ch = ChannelSet::new(&sc).unwrap();
    let v = vec![Complex64::from_polar(1.0, 0.7)];
    let a = ch.effective(0, 0, &v, &[true]);
    let x = [true, false, false, false];
    let w = mrt(&a, &x).unwrap();
    let got = snr(ch.pbar(), &select(&a, &x), &w).unwrap();
    let d = geometry::norm(&p);
    let dt = geometry::distance(&p, &u);
    let want = rc.pbar() * rc.c0() * rc.c0() / (d * d * dt * dt);
    assert!(close(got, want, 1e-12), "{got} vs {want}");
    // the same through the independent dense path
    let ad = dense_effective(&sc, 0, 0, &v, &[true]);
    assert!(close(snr(rc.pbar(), &select(&ad, &x), &w).unwrap(), want, 1e-12));
}

#[test]
fn snr_trivial_cases() {
    let a = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.3)];
    assert!(mrt(&a, &[false, false]).is_none());
    let w = [Complex64::new(2.0, -1.0) / 5f64.sqrt(), Complex64::new(0.0, 0.0)];
    // w orthogonal to the channel: a·w = 0
    let ortho = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    assert_eq!(snr(1.0, &[a[0], Complex64::new(0.0, 0.0)], &ortho).unwrap(), 0.0);
    assert!(snr(1.0, &a, &w[..1]).is_err());
    // single antenna: unit vector carrying the conjugate phase
    let w1 = mrt(&a, &[true, false]).unwrap();
    assert!((w1[0] - a[0].conj() / a[0].norm()).norm() < 1e-15 && w1[1].norm() == 0.0);
    // all antennas: a^H / ‖a‖
    let wall = mrt(&a, &[true, true]).unwrap();
    let n = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    for m in 0..2 {
        assert!((wall[m] - a[m].conj() / n).norm() < 1e-15);
    }
}

fn small(seed: u64, sites: usize, side: usize) -> (Scenario, ChannelSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = SmallSpec {
        sites,
        rows: 2,
        cols: 3,
        aperture_wl: 1.0,
        step_wl: 0.5,
        samples_side: side,
        areas: 2,
        ..SmallSpec::default()
    };
    let sc = random_scenario(&mut rng, &spec).unwrap();
    let ch = ChannelSet::new(&sc).unwrap();
    (sc, ch)
}

fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.gen_bool(0.5)).collect()
}

#[test]
fn factored_channels_match_dense_matrices() {
    let (sc, ch) = small(11, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for j in 0..sc.n_areas() {
        for s in 0..ch.n_samples(j) {
            let v = random_phases(&mut rng, sc.n_elements());
            let z = random_bits(&mut rng, sc.n_sites());
            let fast = ch.effective(j, s, &v, &z);
            let dense = dense_effective(&sc, j, s, &v, &z);
            let scale = dense.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
            for (a, b) in fast.iter().zip(&dense) {
                assert!((a - b).norm() <= 1e-10 * scale);
            }
        }
    }
}

#[test]
fn mrt_beats_random_beamformers() {
    let (sc, ch) = small(3, 2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let v = random_phases(&mut rng, sc.n_elements());
        let mut x = random_bits(&mut rng, sc.n_antennas());
        x[0] = true;
        let a = select(&ch.effective(0, 0, &v, &[true, true]), &x);
        let best = snr(ch.pbar(), &a, &mrt(&a, &x).unwrap()).unwrap();
        let expected: f64 = ch.pbar() * a.iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!(close(best, expected, 1e-12));
        let raw: Vec<Complex64> = (0..x.len())
            .map(|m| if x[m] { Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) } else { Complex64::new(0.0, 0.0) })
            .collect();
        let n = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let w: Vec<Complex64> = raw.iter().map(|c| c / n).collect();
        assert!(snr(ch.pbar(), &a, &w).unwrap() <= best * (1.0 + 1e-12));
    }
}

#[test]
fn global_phase_invariance() {
    let (sc, ch) = small(4, 2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let v = random_phases(&mut rng, sc.n_elements());
    let x = vec![true; sc.n_antennas()];
    let a = ch.effective(0, 0, &v, &[true, true]);
    let w = mrt(&a, &x).unwrap();
    let base = snr(ch.pbar(), &a, &w).unwrap();
    let rot = Complex64::from_polar(1.0, 1.3);
    let w2: Vec<Complex64> = w.iter().map(|c| c * rot).collect();
    assert!(close(snr(ch.pbar(), &a, &w2).unwrap(), base, 1e-12));
    let v2: Vec<Complex64> = v.iter().map(|c| c * rot).collect();
    let a2 = ch.effective(0, 0, &v2, &[true, true]);
    assert!(close(snr(ch.pbar(), &a2, &mrt(&a2, &x).unwrap()).unwrap(), base, 1e-12));
    // applying the selection twice changes nothing
    let xs: Vec<bool> = (0..x.len()).map(|m| m % 2 == 0).collect();
    let once = select(&a, &xs);
    assert_eq!(select(&once, &xs), once);
}

#[test]
fn gain_coefficient_identities() {
    let (sc, ch) = small(8, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let l_count = sc.n_sites();
    for _ in 0..50 {
        let j = rng.gen_range(0..sc.n_areas());
        let s = rng.gen_range(0..ch.n_samples(j));
        let v = random_phases(&mut rng, sc.n_elements());
        let x = random_bits(&mut rng, sc.n_antennas());
        let z = random_bits(&mut rng, l_count);
        let direct: f64 = select(&dense_effective(&sc, j, s, &v, &z), &x).iter().map(|c| c.norm_sqr()).sum();
        let tol = 1e-10 * direct.max(1e-300);

        // Σ_m x_m C_m
        let c = ch.c_coeffs(j, s, &v, &z);
        let via_c: f64 = c.iter().zip(&x).filter(|(_, &on)| on).map(|(c, _)| c).sum();
        assert!((via_c - direct).abs() <= tol);

        // folded B with s = z_ℓ z_ℓ' x_m
        let b = ch.b_coeffs(j, s, &v);
        let mut via_b = 0.0;
        for l in 0..l_count {
            for lp in l..l_count {
                let kappa = if l == lp { 1.0 } else { 2.0 };
                for m in 0..sc.n_antennas() {
                    let sv = (z[l] && z[lp] && x[m]) as u8 as f64;
                    via_b += kappa * sv * b[pair_index(l, lp, l_count) * sc.n_antennas() + m].re;
                }
            }
        }
        assert!((via_b - direct).abs() <= tol);

        // v^H R v with sites masked into v
        let vz: Vec<Complex64> = (0..v.len()).map(|n| if z[ch.site_of(n)] { v[n] } else { Complex64::new(0.0, 0.0) }).collect();
        let xf: Vec<f64> = x.iter().map(|&b| b as u8 as f64).collect();
        let r = ch.r_matrix(j, s, &xf);
        let vr = nalgebra::DVector::from_column_slice(&vz);
        let quad = (vr.adjoint() * &r * &vr)[(0, 0)];
        assert!((quad.re - direct).abs() <= tol && quad.im.abs() <= tol.max(1e-30) * 10.0);
        let (q, power) = ch.r_times(j, s, &vz, &xf);
        assert!((power - direct).abs() <= tol);
        let rv = &r * &vr;
        for n in 0..q.len() {
            assert!((q[n] - rv[n]).norm() <= 1e-10 * rv.norm().max(1e-300));
        }

        // y = 1: y^T Q y
        let qm = ch.q_matrix(j, s, &v, &x, &z);
        let ones = nalgebra::DVector::from_element(v.len(), Complex64::new(1.0, 0.0));
        let yqy = (ones.adjoint() * &qm * &ones)[(0, 0)].re;
        assert!((yqy - direct).abs() <= tol);
        let k = rng.gen_range(0..v.len());
        assert!(qm[(k, k)].re >= 0.0 && qm[(k, k)].im == 0.0);
    }
}

#[test]
fn b_coefficients_are_hermitian_pairs() {
    let (sc, ch) = small(21, 3, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = random_phases(&mut rng, sc.n_elements());
    let beta = ch.site_sums(0, 0, &v);
    let b = ch.b_coeffs(0, 0, &v);
    let m_count = sc.n_antennas();
    for l in 0..3 {
        for lp in l..3 {
            for m in 0..m_count {
                let blm = beta[l] * ch.bs_steering(l)[m];
                let blpm = beta[lp] * ch.bs_steering(lp)[m];
                let want = blm * blpm.conj();
                assert!((b[pair_index(l, lp, 3) * m_count + m] - want).norm() <= 1e-12 * want.norm().max(1e-300));
                // swapping the pair conjugates the coefficient
                assert!((blpm * blm.conj() - want.conj()).norm() <= 1e-12 * want.norm().max(1e-300));
            }
        }
    }
}

#[test]
fn r_matrix_is_psd() {
    let (_, ch) = small(5, 2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let x: Vec<f64> = (0..ch.n_antennas()).map(|_| rng.gen::<f64>()).collect();
        let r = ch.r_matrix(0, 0, &x);
        let herm = (&r + r.adjoint()) * Complex64::new(0.5, 0.0);
        let trace: f64 = (0..herm.nrows()).map(|i| herm[(i, i)].re).sum();
        let eig = herm.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= -1e-10 * trace));
    }
}

#[test]
fn pair_indexing_is_dense() {
    let mut seen = Vec::new();
    for l in 0..4 {
        for lp in l..4 {
            seen.push(pair_index(l, lp, 4));
        }
    }
    assert_eq!(seen, (0..pair_count(4)).collect::<Vec<_>>());
}

#[test]
fn debug_dump_is_json() {
    let (_, ch) = small(1, 2, 1);
    let v: serde_json::Value = serde_json::from_str(&ch.debug_dump()).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 2);
}
