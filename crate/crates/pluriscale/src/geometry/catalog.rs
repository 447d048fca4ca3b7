//! The model-domain catalog.
//!
//! Every entry supplies rho, the complex gradient, the mixed Hessian, and
//! (except the bidisc, whose boundary is only piecewise smooth) an exact
//! polynomial term list. Coordinates follow the convention that z_0 is the
//! distinguished/normal direction: siegel is {Re z_0 > |z_1|² + …},
//! bp_model(m) is {Re z_0 > |z_1|^{2m}}.

use std::sync::Arc;

use crate::error::{Error, Result};
#[cfg(test)]
use crate::linalg::c;
use crate::linalg::{cr, CMat, CVec, ZERO};

use super::{DefiningFunction, ZPoly};

/// Build a catalog domain from its stable string name.
///
/// Recognized tags: `ball`, `disc` (the ball in C¹), `bidisc`, `egg(k)`,
/// `siegel`, `halfspace`, `kohn_nirenberg`, `bp_model(m)`. `dim` applies to
/// the entries defined in every dimension; the C²-only entries reject other
/// values.
pub fn make_catalog_domain(tag: &str, dim: usize) -> Result<DefiningFunction> {
    if dim == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    let (name, param) = split_tag(tag)?;
    match (name, param) {
        ("ball", None) => Ok(ball(dim)),
        ("disc", None) => {
            if dim > 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: dim });
            }
            Ok(ball(1))
        }
        ("bidisc", None) => {
            require_dim(dim, 2)?;
            Ok(bidisc())
        }
        ("egg", Some(k)) => {
            require_dim(dim, 2)?;
            if k == 0 {
                return Err(Error::Precondition("egg(k) needs k >= 1".into()));
            }
            Ok(egg(k))
        }
        ("siegel", None) => {
            if dim < 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: dim });
            }
            Ok(siegel(dim))
        }
        ("halfspace", None) => Ok(halfspace(dim)),
        ("kohn_nirenberg", None) => {
            require_dim(dim, 2)?;
            Ok(kohn_nirenberg())
        }
        ("bp_model", Some(m)) => {
            require_dim(dim, 2)?;
            if m == 0 {
                return Err(Error::Precondition("bp_model(m) needs m >= 1".into()));
            }
            Ok(bp_model(m))
        }
        _ => Err(Error::UnknownDomain(tag.to_string())),
    }
}

fn split_tag(tag: &str) -> Result<(&str, Option<u32>)> {
    match (tag.find('('), tag.ends_with(')')) {
        (None, _) => Ok((tag, None)),
        (Some(i), true) => {
            let inner = &tag[i + 1..tag.len() - 1];
            let val: u32 = inner
                .parse()
                .map_err(|_| Error::UnknownDomain(tag.to_string()))?;
            Ok((&tag[..i], Some(val)))
        }
        _ => Err(Error::UnknownDomain(tag.to_string())),
    }
}

fn require_dim(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch { expected: want, got });
    }
    Ok(())
}

pub(crate) fn ball(d: usize) -> DefiningFunction {
    let poly = (d == 2).then(|| {
        ZPoly::new(vec![
            (cr(1.0), [1, 0], [1, 0]),
            (cr(1.0), [0, 1], [0, 1]),
            (cr(-1.0), [0, 0], [0, 0]),
        ])
    });
    DefiningFunction::from_parts(
        d,
        if d == 1 { "disc" } else { "ball" },
        true,
        Arc::new(|z: &CVec| z.iter().map(|w| w.norm_sqr()).sum::<f64>() - 1.0),
        Arc::new(|z: &CVec| z.map(|w| w.conj())),
        Arc::new(move |_| CMat::identity(d, d)),
        Some(Arc::new(move |_| CMat::zeros(d, d))),
        poly,
    )
}

fn bidisc() -> DefiningFunction {
    // active branch = first coordinate of maximal modulus; derivatives are
    // those of |z_j|² - 1 on that branch
    let active = |z: &CVec| -> usize {
        if z[1].norm_sqr() > z[0].norm_sqr() {
            1
        } else {
            0
        }
    };
    DefiningFunction::from_parts(
        2,
        "bidisc",
        true,
        Arc::new(|z: &CVec| z[0].norm_sqr().max(z[1].norm_sqr()) - 1.0),
        Arc::new(move |z: &CVec| {
            let j = active(z);
            let mut g = CVec::zeros(2);
            g[j] = z[j].conj();
            g
        }),
        Arc::new(move |z: &CVec| {
            let j = active(z);
            let mut h = CMat::zeros(2, 2);
            h[(j, j)] = cr(1.0);
            h
        }),
        Some(Arc::new(|_| CMat::zeros(2, 2))),
        None,
    )
}

fn egg(k: u32) -> DefiningFunction {
    let kf = f64::from(k);
    let poly = ZPoly::new(vec![
        (cr(1.0), [1, 0], [1, 0]),
        (cr(1.0), [0, k], [0, k]),
        (cr(-1.0), [0, 0], [0, 0]),
    ]);
    DefiningFunction::from_parts(
        2,
        format!("egg({k})"),
        true,
        Arc::new(move |z: &CVec| z[0].norm_sqr() + z[1].norm_sqr().powi(k as i32) - 1.0),
        Arc::new(move |z: &CVec| {
            let r2 = z[1].norm_sqr();
            CVec::from_vec(vec![
                z[0].conj(),
                cr(kf) * z[1].conj() * cr(r2.powi(k as i32 - 1)),
            ])
        }),
        Arc::new(move |z: &CVec| {
            let r2 = z[1].norm_sqr();
            CMat::from_row_slice(
                2,
                2,
                &[
                    cr(1.0),
                    ZERO,
                    ZERO,
                    cr(kf * kf * r2.powi(k as i32 - 1)),
                ],
            )
        }),
        Some(Arc::new(move |z: &CVec| {
            let mut q = CMat::zeros(2, 2);
            if k >= 2 {
                q[(1, 1)] = cr(kf * (kf - 1.0)) * z[1].powu(k - 2) * z[1].conj().powu(k);
            }
            q
        })),
        Some(poly),
    )
}

fn siegel(d: usize) -> DefiningFunction {
    let poly = (d == 2).then(|| {
        ZPoly::new(vec![
            (cr(-0.5), [1, 0], [0, 0]),
            (cr(-0.5), [0, 0], [1, 0]),
            (cr(1.0), [0, 1], [0, 1]),
        ])
    });
    DefiningFunction::from_parts(
        d,
        "siegel",
        true,
        Arc::new(|z: &CVec| {
            z.iter().skip(1).map(|w| w.norm_sqr()).sum::<f64>() - z[0].re
        }),
        Arc::new(|z: &CVec| {
            let mut g = z.map(|w| w.conj());
            g[0] = cr(-0.5);
            g
        }),
        Arc::new(move |_| {
            let mut h = CMat::identity(d, d);
            h[(0, 0)] = ZERO;
            h
        }),
        Some(Arc::new(move |_| CMat::zeros(d, d))),
        poly,
    )
}

fn halfspace(d: usize) -> DefiningFunction {
    let poly = (d == 2).then(|| {
        ZPoly::new(vec![
            (cr(-0.5), [1, 0], [0, 0]),
            (cr(-0.5), [0, 0], [1, 0]),
        ])
    });
    DefiningFunction::from_parts(
        d,
        "halfspace",
        true,
        Arc::new(|z: &CVec| -z[0].re),
        Arc::new(move |_| {
            let mut g = CVec::zeros(d);
            g[0] = cr(-0.5);
            g
        }),
        Arc::new(move |_| CMat::zeros(d, d)),
        Some(Arc::new(move |_| CMat::zeros(d, d))),
        poly,
    )
}

/// Re z_0 + |z_0 z_1|² + |z_1|⁸ + (15/7)|z_1|²·Re(z_1⁶) < 0: pseudoconvex of
/// finite type at the origin, with no supporting analytic variety there.
fn kohn_nirenberg() -> DefiningFunction {
    const A: f64 = 15.0 / 7.0;
    let poly = ZPoly::new(vec![
        (cr(0.5), [1, 0], [0, 0]),
        (cr(0.5), [0, 0], [1, 0]),
        (cr(1.0), [1, 1], [1, 1]),
        (cr(1.0), [0, 4], [0, 4]),
        (cr(A / 2.0), [0, 7], [0, 1]),
        (cr(A / 2.0), [0, 1], [0, 7]),
    ]);
    DefiningFunction::from_parts(
        2,
        "kohn_nirenberg",
        false,
        Arc::new(|z: &CVec| {
            let z6 = z[1].powu(6);
            z[0].re
                + z[0].norm_sqr() * z[1].norm_sqr()
                + z[1].norm_sqr().powi(4)
                + A * z[1].norm_sqr() * z6.re
        }),
        Arc::new(|z: &CVec| {
            let r1 = z[1].norm_sqr();
            let g0 = cr(0.5) + z[0].conj() * cr(r1);
            let g1 = cr(z[0].norm_sqr()) * z[1].conj()
                + cr(4.0) * z[1].powu(3) * z[1].conj().powu(4)
                + cr(A / 2.0) * (cr(7.0) * z[1].powu(6) * z[1].conj() + z[1].conj().powu(7));
            CVec::from_vec(vec![g0, g1])
        }),
        Arc::new(|z: &CVec| {
            let r1 = z[1].norm_sqr();
            let h01 = z[0].conj() * z[1];
            let h11 = cr(z[0].norm_sqr() + 16.0 * r1.powi(3) + 15.0 * z[1].powu(6).re);
            CMat::from_row_slice(2, 2, &[cr(r1), h01, h01.conj(), h11])
        }),
        Some(Arc::new(|z: &CVec| {
            let q01 = z[0].conj() * z[1].conj();
            let q11 = cr(12.0) * z[1].powu(2) * z[1].conj().powu(4)
                + cr(45.0) * z[1].powu(5) * z[1].conj();
            CMat::from_row_slice(2, 2, &[ZERO, q01, q01, q11])
        })),
        Some(poly),
    )
}

/// {Re z_0 > |z_1|^{2m}}: the model at a weakly pseudoconvex finite-type
/// boundary point; m = 1 recovers the siegel domain in C².
fn bp_model(m: u32) -> DefiningFunction {
    let mf = f64::from(m);
    let poly = ZPoly::new(vec![
        (cr(1.0), [0, m], [0, m]),
        (cr(-0.5), [1, 0], [0, 0]),
        (cr(-0.5), [0, 0], [1, 0]),
    ]);
    DefiningFunction::from_parts(
        2,
        format!("bp_model({m})"),
        true,
        Arc::new(move |z: &CVec| z[1].norm_sqr().powi(m as i32) - z[0].re),
        Arc::new(move |z: &CVec| {
            let r2 = z[1].norm_sqr();
            CVec::from_vec(vec![
                cr(-0.5),
                cr(mf) * z[1].conj() * cr(r2.powi(m as i32 - 1)),
            ])
        }),
        Arc::new(move |z: &CVec| {
            let r2 = z[1].norm_sqr();
            CMat::from_row_slice(
                2,
                2,
                &[ZERO, ZERO, ZERO, cr(mf * mf * r2.powi(m as i32 - 1))],
            )
        }),
        Some(Arc::new(move |z: &CVec| {
            let mut q = CMat::zeros(2, 2);
            if m >= 2 {
                q[(1, 1)] = cr(mf * (mf - 1.0)) * z[1].powu(m - 2) * z[1].conj().powu(m);
            }
            q
        })),
        Some(poly),
    )
}

/// Gradient consistency check used by tests: central finite differences of
/// rho against the analytic complex gradient. Returns the worst absolute
/// component deviation.
#[cfg(test)]
pub(crate) fn gradient_fd_defect(f: &DefiningFunction, z: &CVec) -> f64 {
    let h = 1e-6;
    let g = f.grad(z);
    let mut worst = 0.0f64;
    for j in 0..f.dim() {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += cr(h);
        zm[j] -= cr(h);
        let dx = (f.rho(&zp) - f.rho(&zm)) / (2.0 * h);
        let mut zpi = z.clone();
        let mut zmi = z.clone();
        zpi[j] += c(0.0, h);
        zmi[j] -= c(0.0, h);
        let dy = (f.rho(&zpi) - f.rho(&zmi)) / (2.0 * h);
        let fd = c(dx, -dy) * cr(0.5);
        worst = worst.max((g[j] - fd).norm());
    }
    worst
}

/// Hessian consistency: central differences of the analytic gradient in the
/// antiholomorphic directions against the analytic mixed Hessian.
#[cfg(test)]
pub(crate) fn hessian_fd_defect(f: &DefiningFunction, z: &CVec) -> f64 {
    let h = 1e-6;
    let hm = f.hess(z);
    let mut worst = 0.0f64;
    for k in 0..f.dim() {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[k] += cr(h);
        zm[k] -= cr(h);
        let dx = (f.grad(&zp) - f.grad(&zm)) / cr(2.0 * h);
        let mut zpi = z.clone();
        let mut zmi = z.clone();
        zpi[k] += c(0.0, h);
        zmi[k] -= c(0.0, h);
        let dy = (f.grad(&zpi) - f.grad(&zmi)) / cr(2.0 * h);
        for j in 0..f.dim() {
            // ∂/∂z̄_k of grad_j = (∂_x + i∂_y)/2
            let fd = (dx[j] + c(0.0, 1.0) * dy[j]) * cr(0.5);
            worst = worst.max((hm[(j, k)] - fd).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cvec, rvec};

    const CATALOG: &[(&str, usize)] = &[
        ("ball", 2),
        ("ball", 3),
        ("disc", 1),
        ("bidisc", 2),
        ("egg(2)", 2),
        ("egg(4)", 2),
        ("siegel", 2),
        ("siegel", 3),
        ("halfspace", 2),
        ("kohn_nirenberg", 2),
        ("bp_model(1)", 2),
        ("bp_model(3)", 2),
    ];

    fn sample_points(d: usize) -> Vec<CVec> {
        let mut out = Vec::new();
        let coords = [(0.31, -0.12), (0.44, 0.27), (-0.25, 0.61), (0.15, 0.05)];
        for s in 0..3 {
            let mut pts = Vec::with_capacity(d);
            for j in 0..d {
                let (re, im) = coords[(s + j) % coords.len()];
                pts.push((re, im));
            }
            out.push(cvec(&pts));
        }
        out
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        for &(tag, d) in CATALOG {
            let f = make_catalog_domain(tag, d).unwrap();
            for z in sample_points(d) {
                let gd = gradient_fd_defect(&f, &z);
                let hd = hessian_fd_defect(&f, &z);
                assert!(gd < 5e-8, "{tag} d={d}: gradient defect {gd:.2e}");
                assert!(hd < 5e-7, "{tag} d={d}: hessian defect {hd:.2e}");
            }
        }
    }

    #[test]
    fn ball_values_at_origin() {
        let f = make_catalog_domain("ball", 2).unwrap();
        let z = rvec(&[0.0, 0.0]);
        assert!((f.rho(&z) + 1.0).abs() < 1e-15);
        assert!(crate::linalg::norm(&f.grad(&z)) < 1e-15);
    }

    #[test]
    fn egg_boundary_point() {
        let f = make_catalog_domain("egg(2)", 2).unwrap();
        let z = rvec(&[1.0, 0.0]);
        assert_eq!(f.rho(&z), 0.0);
        // tangential second derivative degenerates at z_1 = 0
        assert_eq!(f.hess(&z)[(1, 1)], ZERO);
    }

    #[test]
    fn siegel_membership_orientation() {
        let f = make_catalog_domain("siegel", 2).unwrap();
        assert!(f.rho(&rvec(&[1.0, 0.5])) < 0.0); // Re z_0 = 1 > 0.25
        assert!(f.rho(&rvec(&[0.1, 0.5])) > 0.0);
        assert!(f.rho(&rvec(&[-1.0, 0.0])) > 0.0);
    }

    #[test]
    fn bp_model_one_is_siegel() {
        let a = make_catalog_domain("bp_model(1)", 2).unwrap();
        let b = make_catalog_domain("siegel", 2).unwrap();
        for z in sample_points(2) {
            assert!((a.rho(&z) - b.rho(&z)).abs() < 1e-14);
        }
    }

    #[test]
    fn unknown_tags_are_rejected() {
        assert!(matches!(
            make_catalog_domain("annulus", 2),
            Err(Error::UnknownDomain(_))
        ));
        assert!(make_catalog_domain("egg(x)", 2).is_err());
        assert!(make_catalog_domain("egg(2", 2).is_err());
        assert!(matches!(
            make_catalog_domain("bidisc", 3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kohn_nirenberg_signs() {
        let f = make_catalog_domain("kohn_nirenberg", 2).unwrap();
        // deep interior along the negative Re z_0 axis
        assert!(f.rho(&rvec(&[-1.0, 0.0])) < 0.0);
        assert_eq!(f.rho(&rvec(&[0.0, 0.0])), 0.0);
        assert!(!f.is_convex());
    }
}
