//! 1-D root bracketing and bisection.
//!
//! All boundary searches in the crate reduce to finding a sign change of
//! s ↦ rho(x + s·v) and bisecting. Bisection is preferred over faster
//! iterations: defining functions are cheap and bisection never leaves the
//! bracket.

use crate::error::{Error, Result};

/// Bisect a sign change of `f` on [a, b] down to interval width `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::SearchFailed(format!(
            "no sign change on [{a:.6e}, {b:.6e}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() < tol {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// March geometrically from `s0` in the direction of `step`'s sign until `f`
/// changes sign relative to `f(s0)`, then bisect. Gives the first root along
/// the ray within `|s| <= s_max`.
pub fn first_root_along(
    f: impl Fn(f64) -> f64,
    s0: f64,
    step: f64,
    s_max: f64,
    tol: f64,
) -> Result<f64> {
    let f0 = f(s0);
    if f0 == 0.0 {
        return Ok(s0);
    }
    let mut prev = s0;
    let mut h = step;
    loop {
        let s = prev + h;
        if s.abs() > s_max {
            return Err(Error::RootNotBracketed(s_max));
        }
        let fs = f(s);
        if fs == 0.0 {
            return Ok(s);
        }
        if fs.signum() != f0.signum() {
            return bisect(&f, prev, s, tol);
        }
        prev = s;
        h *= 1.6;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn first_root_marches_past_flat_region() {
        // f < 0 until x = 5
        let r = first_root_along(|x| x - 5.0, 0.0, 0.1, 100.0, 1e-13).unwrap();
        assert!((r - 5.0).abs() < 1e-11);
    }

    #[test]
    fn missing_root_reports_radius() {
        let e = first_root_along(|_| -1.0, 0.0, 0.5, 10.0, 1e-12).unwrap_err();
        assert!(matches!(e, Error::RootNotBracketed(_)));
    }
}
