//! First-order lower bounds used by the successive convex approximation
//! steps. Each bound is tight at its expansion point `r` and never exceeds
//! the function it replaces.

use crate::Complex64;

/// Lower bound of `x²` at `xr`: `−xr² + 2·xr·x`.
pub fn square_lb(x: f64, xr: f64) -> f64 {
    -xr * xr + 2.0 * xr * x
}

/// Lower bound of `z²` written around the expansion point:
/// `zr² + 2·zr·(z − zr)`. Algebraically equal to [`square_lb`].
pub fn square_lb_shifted(z: f64, zr: f64) -> f64 {
    zr * zr + 2.0 * zr * (z - zr)
}

/// Lower bound of `|v|²` at `vr`: `2·Re{conj(vr)·v} − |vr|²`.
pub fn modulus_lb(v: Complex64, vr: Complex64) -> f64 {
    2.0 * (vr.conj() * v).re - vr.norm_sqr()
}

/// Lower bound of the PSD quadratic form `v^H R v` at `vr`, given
/// `q = R vr` and `s = vr^H R vr`: `2·Re{q^H v} − s`.
pub fn quadratic_lb(v: &[Complex64], q: &[Complex64], s: f64) -> f64 {
    let lin: f64 = q.iter().zip(v).map(|(q, v)| (q.conj() * v).re).sum();
    2.0 * lin - s
}

/// Binary-gap penalty `x − square_lb(x, xr)` as `(slope, constant)`, so the
/// penalty is `slope·x + constant` and vanishes at binary `x = xr`.
pub fn binary_penalty(xr: f64) -> (f64, f64) {
    (1.0 - 2.0 * xr, xr * xr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn square_bounds(x in -2.0f64..2.0, xr in -2.0f64..2.0) {
            prop_assert!(square_lb(x, xr) <= x * x + 1e-12);
            prop_assert!((square_lb(xr, xr) - xr * xr).abs() < 1e-12);
            prop_assert!((square_lb_shifted(x, xr) - square_lb(x, xr)).abs() < 1e-12);
            let (a, b) = binary_penalty(xr);
            prop_assert!((a * x + b - (x - square_lb(x, xr))).abs() < 1e-12);
        }

        #[test]
        fn modulus_bound(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
            let v = Complex64::new(a, b);
            let vr = Complex64::new(c, d);
            prop_assert!(modulus_lb(v, vr) <= v.norm_sqr() + 1e-12);
            prop_assert!((modulus_lb(vr, vr) - vr.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_expansion_has_no_penalty() {
        for xr in [0.0, 1.0] {
            let (a, b) = binary_penalty(xr);
            assert_eq!(a * xr + b, 0.0);
        }
    }
}
