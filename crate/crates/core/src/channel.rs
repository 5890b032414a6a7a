//! Line-of-sight channel synthesis and the derived gain coefficients.
//!
//! Conventions (kept in one place so solvers never re-derive them):
//!
//! * `Ḡ_ℓ = √c0/d_ℓ · e_ℓ g_ℓ^H` with `[e_ℓ]_n = exp(−jk (p_n − p_1)·a_r)` and
//!   `[g_ℓ^H]_m = exp(jk t_m·a_t)`, where `a_t = a_r` is the unit vector from
//!   the BS reference point to the panel reference element.
//! * `[h_ℓ^H(u)]_n = √c0/d̃ · exp(jk (p_n − p_1)·a_d(u))`, `a_d` pointing from
//!   the panel reference element to `u`.
//! * The phase vector `v` holds the conjugated diagonal of `Θ`, so the
//!   effective channel is `a_m = Σ_n conj(v_n) Ψ[n, m]` with
//!   `Ψ(u) = diag(h^H(u)) Ḡ`.
//!
//! Every `Ḡ_ℓ` is rank one, so [`ChannelSet`] stores the factors: per site the
//! row `g_ℓ^H`, and per sample the stacked element gains
//! `w_n = [h^H(u)]_n · √c0/d_ℓ · [e_ℓ]_n`. Then `Ψ[n, m] = w_n [g_{ℓ(n)}^H]_m`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{self, Point};
use crate::scenario::{IrsSite, MaGrid, RadioConstants, Scenario};
use crate::{Complex64, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Unit vector pointing from `from` to `to`.
pub fn unit_direction(from: &Point, to: &Point) -> Result<Point> {
    let d = geometry::sub(to, from);
    let n = geometry::norm(&d);
    if !(n > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "coincident points {from:?} and {to:?}"
        )));
    }
    Ok(geometry::scale(&d, 1.0 / n))
}

fn steering(k: f64, offset: &Point, dir: &Point) -> Complex64 {
    Complex64::from_polar(1.0, k * geometry::dot(offset, dir))
}

fn element_steering(site: &IrsSite, k: f64, dir: &Point, sign: f64) -> Vec<Complex64> {
    let p1 = site.reference();
    site.elements()
        .iter()
        .map(|p| steering(sign * k, &geometry::sub(p, &p1), dir))
        .collect()
}

fn bs_steering(grid: &MaGrid, k: f64, dir: &Point) -> Vec<Complex64> {
    grid.points().iter().map(|t| steering(k, t, dir)).collect()
}

/// Full `N_ℓ × M` BS-to-IRS matrix `Ḡ_ℓ`.
pub fn bs_irs_channel(site: &IrsSite, grid: &MaGrid, rc: &RadioConstants) -> Result<CMatrix> {
    let a = unit_direction(&[0.0; 3], &site.reference())?;
    let k = rc.wavenumber();
    let e = element_steering(site, k, &a, -1.0);
    let g = bs_steering(grid, k, &a);
    let amp = rc.c0().sqrt() / site.bs_distance();
    Ok(CMatrix::from_fn(e.len(), g.len(), |n, m| e[n] * g[m] * amp))
}

/// Row vector `h_ℓ^H(u)` as its `N_ℓ` entries.
pub fn irs_user_channel(site: &IrsSite, u: &Point, rc: &RadioConstants) -> Result<Vec<Complex64>> {
    let p1 = site.reference();
    let a = unit_direction(&p1, u)?;
    let amp = rc.c0().sqrt() / geometry::distance(&p1, u);
    Ok(element_steering(site, rc.wavenumber(), &a, 1.0)
        .into_iter()
        .map(|c| c * amp)
        .collect())
}

/// Received SNR `pbar·|a·w|²` for an effective channel `a` that already
/// includes the antenna selection, i.e. `a = v^H Ψ X`.
pub fn snr(pbar: f64, a: &[Complex64], w: &[Complex64]) -> Result<f64> {
    if a.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} entries, beamformer {}",
            a.len(),
            w.len()
        )));
    }
    let s: Complex64 = a.iter().zip(w).map(|(x, y)| x * y).sum();
    Ok(pbar * s.norm_sqr())
}

/// Masks the effective channel by the antenna selection, `a X`.
pub fn select(a: &[Complex64], x: &[bool]) -> Vec<Complex64> {
    a.iter()
        .zip(x)
        .map(|(&c, &on)| if on { c } else { Complex64::new(0.0, 0.0) })
        .collect()
}

/// Maximum-ratio beamformer `X a^H / ‖X a^H‖`.
pub fn mrt(a: &[Complex64], x: &[bool]) -> Option<Vec<Complex64>> {
    let masked = select(a, x);
    let norm = masked.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return None;
    }
    Some(masked.iter().map(|c| c.conj() / norm).collect())
}

/// Factored channels for every sample of every area.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    m: usize,
    site_of: Vec<usize>,
    offsets: Vec<usize>,
    /// `g[ℓ][m] = [g_ℓ^H]_m`
    g: Vec<Vec<Complex64>>,
    bs_gain: Vec<f64>,
    /// `w[j][s][n]`
    w: Vec<Vec<Vec<Complex64>>>,
    pbar: f64,
}

impl ChannelSet {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let rc = scenario.radio();
        let k = rc.wavenumber();
        let sites = scenario.sites();
        let mut g = Vec::with_capacity(sites.len());
        let mut e = Vec::with_capacity(sites.len());
        let mut bs_gain = Vec::with_capacity(sites.len());
        for s in sites {
            let a = unit_direction(&[0.0; 3], &s.reference())?;
            g.push(bs_steering(scenario.grid(), k, &a));
            e.push(element_steering(s, k, &a, -1.0));
            bs_gain.push(rc.c0().sqrt() / s.bs_distance());
        }
        let n_total = scenario.n_elements();
        let site_of: Vec<usize> = (0..n_total).map(|n| scenario.site_of_element(n)).collect();
        let offsets: Vec<usize> = (0..=sites.len())
            .map(|l| if l == sites.len() { n_total } else { scenario.element_range(l).start })
            .collect();

        let mut w = Vec::with_capacity(scenario.n_areas());
        for (j, area) in scenario.areas().iter().enumerate() {
            let per_sample: Result<Vec<Vec<Complex64>>> = area
                .samples()
                .par_iter()
                .enumerate()
                .map(|(si, u)| {
                    let mut row = Vec::with_capacity(n_total);
                    for (l, site) in sites.iter().enumerate() {
                        let h = irs_user_channel(site, u, rc).map_err(|_| Error::NoLink {
                            area: j,
                            sample: si,
                        })?;
                        row.extend(h.iter().zip(&e[l]).map(|(h, e)| h * e * bs_gain[l]));
                    }
                    Ok(row)
                })
                .collect();
            w.push(per_sample?);
        }
        Ok(Self {
            m: scenario.n_antennas(),
            site_of,
            offsets,
            g,
            bs_gain,
            w,
            pbar: rc.pbar(),
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.m
    }

    pub fn n_elements(&self) -> usize {
        self.site_of.len()
    }

    pub fn n_sites(&self) -> usize {
        self.g.len()
    }

    pub fn n_areas(&self) -> usize {
        self.w.len()
    }

    pub fn n_samples(&self, j: usize) -> usize {
        self.w[j].len()
    }

    pub fn pbar(&self) -> f64 {
        self.pbar
    }

    pub fn site_of(&self, n: usize) -> usize {
        self.site_of[n]
    }

    pub fn site_range(&self, l: usize) -> std::ops::Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    pub fn bs_steering(&self, l: usize) -> &[Complex64] {
        &self.g[l]
    }

    pub fn element_gains(&self, j: usize, s: usize) -> &[Complex64] {
        &self.w[j][s]
    }

    /// Per-site partial sums `β_ℓ = Σ_{n∈ℓ} conj(v_n) w_n`, so that the
    /// site-`ℓ` contribution at antenna `m` is `b_ℓm = β_ℓ [g_ℓ^H]_m`.
    pub fn site_sums(&self, j: usize, s: usize, v: &[Complex64]) -> Vec<Complex64> {
        let w = &self.w[j][s];
        (0..self.n_sites())
            .map(|l| self.site_range(l).map(|n| v[n].conj() * w[n]).sum())
            .collect()
    }

    /// Effective channel `a_m = Σ_ℓ z_ℓ b_ℓm` over all `M` antennas.
    pub fn effective(&self, j: usize, s: usize, v: &[Complex64], z: &[bool]) -> Vec<Complex64> {
        let beta = self.site_sums(j, s, v);
        self.combine(&beta, z)
    }

    fn combine(&self, beta: &[Complex64], z: &[bool]) -> Vec<Complex64> {
        let mut a = vec![Complex64::new(0.0, 0.0); self.m];
        for (l, b) in beta.iter().enumerate() {
            if !z[l] {
                continue;
            }
            for (am, gm) in a.iter_mut().zip(&self.g[l]) {
                *am += b * gm;
            }
        }
        a
    }

    /// `C_{m,j}(u) = |a_m|²` with sites masked by `z`.
    pub fn c_coeffs(&self, j: usize, s: usize, v: &[Complex64], z: &[bool]) -> Vec<f64> {
        self.effective(j, s, v, z).iter().map(|c| c.norm_sqr()).collect()
    }

    /// `B_{ℓℓ'm} = b_ℓm conj(b_ℓ'm)` for `ℓ ≤ ℓ'`, in [`pair_index`] order,
    /// `m` fastest.
    pub fn b_coeffs(&self, j: usize, s: usize, v: &[Complex64]) -> Vec<Complex64> {
        let beta = self.site_sums(j, s, v);
        let l_count = self.n_sites();
        let mut out = Vec::with_capacity(l_count * (l_count + 1) / 2 * self.m);
        for l in 0..l_count {
            for lp in l..l_count {
                let bb = beta[l] * beta[lp].conj();
                for m in 0..self.m {
                    out.push(bb * self.g[l][m] * self.g[lp][m].conj());
                }
            }
        }
        out
    }

    /// Gradient helper for quadratic forms in the element vector.
    ///
    /// With `vy` the (possibly masked or weighted) phase vector and `x`
    /// antenna weights, returns `q = R vy` and `vy^H R vy`, where
    /// `R = Ψ diag(x) Ψ^H`.
    pub fn r_times(&self, j: usize, s: usize, vy: &[Complex64], x: &[f64]) -> (Vec<Complex64>, f64) {
        let w = &self.w[j][s];
        let beta = self.site_sums(j, s, vy);
        let all = vec![true; self.n_sites()];
        let a = self.combine(&beta, &all);
        let power: f64 = a.iter().zip(x).map(|(c, xm)| xm * c.norm_sqr()).sum();
        // per-site G_ℓ = Σ_m g_ℓm x_m conj(a_m)
        let gsum: Vec<Complex64> = (0..self.n_sites())
            .map(|l| {
                self.g[l]
                    .iter()
                    .zip(x)
                    .zip(&a)
                    .map(|((g, xm), am)| g * am.conj() * *xm)
                    .sum()
            })
            .collect();
        let q = (0..w.len()).map(|n| w[n] * gsum[self.site_of[n]]).collect();
        (q, power)
    }

    /// Dense `Ψ(u)` (`N × M`).
    pub fn psi(&self, j: usize, s: usize) -> CMatrix {
        let w = &self.w[j][s];
        CMatrix::from_fn(w.len(), self.m, |n, m| w[n] * self.g[self.site_of[n]][m])
    }

    /// Dense `R(u) = Ψ X X^H Ψ^H` for antenna weights `x`.
    pub fn r_matrix(&self, j: usize, s: usize, x: &[f64]) -> CMatrix {
        let psi = self.psi(j, s);
        let xx = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.m,
            x.iter().map(|v| Complex64::new(v * v, 0.0)),
        ));
        &psi * xx * psi.adjoint()
    }

    /// Dense pruning matrix `Q(u)` with `[Q]_{uv} = c_u^T conj(c_v)` and
    /// `c_n = z_{ℓ(n)} conj(v_n) Ψ[n, :] X`.
    pub fn q_matrix(&self, j: usize, s: usize, v: &[Complex64], x: &[bool], z: &[bool]) -> CMatrix {
        let psi = self.psi(j, s);
        let n_total = self.n_elements();
        let c = CMatrix::from_fn(n_total, self.m, |n, m| {
            if z[self.site_of[n]] && x[m] {
                v[n].conj() * psi[(n, m)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mut q = &c * c.adjoint();
        // the Gram product is Hermitian up to rounding; make it exact
        for a in 0..n_total {
            q[(a, a)].im = 0.0;
            for b in a + 1..n_total {
                let avg = (q[(a, b)] + q[(b, a)].conj()) * 0.5;
                q[(a, b)] = avg;
                q[(b, a)] = avg.conj();
            }
        }
        q
    }

    /// Per-sample magnitudes and phases for offline inspection.
    pub fn debug_dump(&self) -> String {
        #[derive(Serialize)]
        struct Sample {
            area: usize,
            sample: usize,
            magnitude: Vec<f64>,
            phase: Vec<f64>,
        }
        #[derive(Serialize)]
        struct Dump {
            pbar: f64,
            bs_gain: Vec<f64>,
            bs_phase: Vec<Vec<f64>>,
            samples: Vec<Sample>,
        }
        let dump = Dump {
            pbar: self.pbar,
            bs_gain: self.bs_gain.clone(),
            bs_phase: self.g.iter().map(|g| g.iter().map(|c| c.arg()).collect()).collect(),
            samples: self
                .w
                .iter()
                .enumerate()
                .flat_map(|(j, area)| {
                    area.iter().enumerate().map(move |(s, w)| Sample {
                        area: j,
                        sample: s,
                        magnitude: w.iter().map(|c| c.norm()).collect(),
                        phase: w.iter().map(|c| c.arg()).collect(),
                    })
                })
                .collect(),
        };
        serde_json::to_string_pretty(&dump).expect("channel dump serializes")
    }
}

/// Position of the unordered pair `(ℓ, ℓ')`, `ℓ ≤ ℓ'`, in the packed
/// upper-triangular order used by [`ChannelSet::b_coeffs`].
pub fn pair_index(l: usize, lp: usize, n_sites: usize) -> usize {
    debug_assert!(l <= lp && lp < n_sites);
    l * n_sites - l * (l + 1) / 2 + lp
}

pub fn pair_count(n_sites: usize) -> usize {
    n_sites * (n_sites + 1) / 2
}

#[cfg(test)]
mod tests;
