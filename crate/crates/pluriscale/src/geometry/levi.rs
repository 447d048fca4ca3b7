//! Levi form restriction to the complex tangent space and pseudoconvexity
//! classification.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{norm, orthogonal_complement, CMat, CVec};
use crate::roots::first_root_along;

use super::{DefiningFunction, BOUNDARY_TOL, EIG_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeviClass {
    StronglyPseudoconvex,
    WeaklyPseudoconvex,
    LeviFlat,
    NotPseudoconvex,
}

#[derive(Debug, Clone, Copy)]
pub struct LeviOptions {
    pub boundary_tol: f64,
    pub eig_tol: f64,
    /// Rescale rho so that the real gradient has unit norm at p before
    /// reading off eigenvalues (the normalization used in boundary-asymptotic
    /// statements). Recorded in the report.
    pub normalize_gradient: bool,
}

impl Default for LeviOptions {
    fn default() -> Self {
        LeviOptions {
            boundary_tol: BOUNDARY_TOL,
            eig_tol: EIG_TOL,
            normalize_gradient: false,
        }
    }
}

/// Serialized complex scalars are [re, im] pairs.
fn pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LeviReport {
    pub point: Vec<[f64; 2]>,
    /// Complex gradient of the classified function (rescaled when
    /// `gradient_normalized`).
    pub gradient: Vec<[f64; 2]>,
    /// Eigenvalues of the Levi form restricted to the complex tangent space,
    /// ascending. Empty in dimension 1.
    pub levi_eigenvalues: Vec<f64>,
    pub classification: LeviClass,
    pub gradient_normalized: bool,
    pub eig_tol: f64,
    /// Orthonormal tangent basis, one entry per basis vector.
    pub tangent_basis: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Restricted Levi matrix at a boundary point: the mixed Hessian compressed
/// to an orthonormal basis of `{w : Σ_j (∂ρ/∂z_j)(p) w_j = 0}`.
fn restricted_levi(f: &DefiningFunction, p: &CVec) -> Result<(CVec, CMat, CMat)> {
    let g = f.grad(p);
    if norm(&g) < 1e-14 {
        return Err(Error::Precondition(
            "vanishing gradient: defining function degenerate at p".into(),
        ));
    }
    let basis = orthogonal_complement(&g.map(|z| z.conj()))?;
    let h = f.hess(p);
    // L(w) = Σ H_jk w_j conj(w_k); on w = B c this is c* (B^* H^T B) c
    let r = basis.adjoint() * h.transpose() * &basis;
    Ok((g, basis, r))
}

/// Classify the boundary point `p` of `{rho < 0}` by the eigenvalues of the
/// restricted Levi form.
///
/// All-zero tangential eigenvalues alone do not separate a Levi-flat point
/// from a weakly pseudoconvex degeneracy (the egg at its poles), so in that
/// case nearby boundary points are probed: the point counts as Levi-flat only
/// when the restricted form also vanishes on the probe set.
pub fn levi_classify(
    f: &DefiningFunction,
    p: &CVec,
    opts: &LeviOptions,
) -> Result<LeviReport> {
    if p.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: p.len() });
    }
    let r0 = f.rho(p);
    if r0.abs() > opts.boundary_tol {
        return Err(Error::NotOnBoundary(r0.abs()));
    }
    let mut notes = Vec::new();
    let work;
    let func = if opts.normalize_gradient {
        let gn = f.real_gradient_norm(p);
        if gn < 1e-14 {
            return Err(Error::Precondition(
                "vanishing gradient: defining function degenerate at p".into(),
            ));
        }
        work = f.scale(1.0 / gn);
        &work
    } else {
        f
    };

    let (g, basis, levi) = restricted_levi(func, p)?;
    let (eigs, _) = if levi.nrows() > 0 {
        crate::linalg::hermitian_eigen(&levi)
    } else {
        (Vec::new(), CMat::zeros(0, 0))
    };

    let tol = opts.eig_tol;
    let classification = if eigs.is_empty() {
        notes.push("dimension 1: empty complex tangent space, strongly pseudoconvex by convention".into());
        LeviClass::StronglyPseudoconvex
    } else {
        let min = eigs[0];
        let max = eigs[eigs.len() - 1];
        if min < -tol {
            LeviClass::NotPseudoconvex
        } else if min > tol {
            LeviClass::StronglyPseudoconvex
        } else if max > tol {
            LeviClass::WeaklyPseudoconvex
        } else {
            // degenerate at p: probe nearby boundary points
            match flat_probe(func, p, &g, &basis, tol) {
                Ok(true) => LeviClass::LeviFlat,
                Ok(false) => {
                    notes.push("restricted Levi form vanishes at p but not on nearby boundary points".into());
                    LeviClass::WeaklyPseudoconvex
                }
                Err(e) => {
                    notes.push(format!("flatness probe failed ({e}); classified pointwise"));
                    LeviClass::LeviFlat
                }
            }
        }
    };

    Ok(LeviReport {
        point: pairs(p),
        gradient: pairs(&g),
        levi_eigenvalues: eigs,
        classification,
        gradient_normalized: opts.normalize_gradient,
        eig_tol: tol,
        tangent_basis: (0..basis.ncols())
            .map(|j| pairs(&CVec::from_iterator(basis.nrows(), basis.column(j).iter().cloned())))
            .collect(),
        notes,
    })
}

/// True when the restricted Levi form stays within `tol` of zero at boundary
/// points displaced from `p` along tangent directions.
fn flat_probe(
    f: &DefiningFunction,
    p: &CVec,
    g: &CVec,
    basis: &CMat,
    tol: f64,
) -> Result<bool> {
    let delta = 1e-3 * (1.0 + norm(p));
    let normal = g.map(|z| z.conj()) / crate::linalg::cr(norm(g));
    for j in 0..basis.ncols() {
        let col = CVec::from_iterator(basis.nrows(), basis.column(j).iter().cloned());
        for dir in [col.clone(), col * crate::linalg::c(0.0, 1.0)] {
            let x = p + &dir * crate::linalg::cr(delta);
            // project back to the boundary along the real normal line
            let s = first_root_along(
                |s| f.rho(&(&x + &normal * crate::linalg::cr(s))),
                0.0,
                -delta,
                10.0 * (1.0 + norm(p)),
                1e-13,
            )
            .or_else(|_| {
                first_root_along(
                    |s| f.rho(&(&x + &normal * crate::linalg::cr(s))),
                    0.0,
                    delta,
                    10.0 * (1.0 + norm(p)),
                    1e-13,
                )
            })?;
            let pb = &x + &normal * crate::linalg::cr(s);
            let (_, _, levi) = restricted_levi(f, &pb)?;
            let (eigs, _) = crate::linalg::hermitian_eigen(&levi);
            if eigs.iter().any(|e| e.abs() > tol) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_catalog_domain;
    use crate::linalg::{cr, cvec, rvec, ZERO};
    use std::sync::Arc;

    #[test]
    fn ball_boundary_is_strongly_pseudoconvex_with_unit_eigenvalue() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let p = rvec(&[1.0, 0.0]);
        let rep = levi_classify(&ball, &p, &LeviOptions::default()).unwrap();
        assert_eq!(rep.classification, LeviClass::StronglyPseudoconvex);
        assert_eq!(rep.levi_eigenvalues.len(), 1);
        assert!((rep.levi_eigenvalues[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_normalization_halves_ball_eigenvalue() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let p = rvec(&[1.0, 0.0]);
        let opts = LeviOptions { normalize_gradient: true, ..Default::default() };
        let rep = levi_classify(&ball, &p, &opts).unwrap();
        assert!(rep.gradient_normalized);
        assert!((rep.levi_eigenvalues[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn halfspace_is_levi_flat() {
        let hs = make_catalog_domain("halfspace", 2).unwrap();
        let p = rvec(&[0.0, 5.0]);
        let rep = levi_classify(&hs, &p, &LeviOptions::default()).unwrap();
        assert_eq!(rep.classification, LeviClass::LeviFlat);
        assert!(rep.levi_eigenvalues.iter().all(|e| e.abs() < 1e-14));
    }

    #[test]
    fn egg_pole_is_weakly_pseudoconvex() {
        let egg = make_catalog_domain("egg(2)", 2).unwrap();
        let p = rvec(&[1.0, 0.0]);
        let rep = levi_classify(&egg, &p, &LeviOptions::default()).unwrap();
        assert_eq!(rep.classification, LeviClass::WeaklyPseudoconvex);
        assert!(rep.levi_eigenvalues[0].abs() < 1e-14);
    }

    #[test]
    fn concave_direction_is_flagged() {
        // -Re z_0 - |z_1|^2: tangential eigenvalue -1 at the origin
        let f = DefiningFunction::from_parts(
            2,
            "concave",
            false,
            Arc::new(|z: &CVec| -z[0].re - z[1].norm_sqr()),
            Arc::new(|z: &CVec| CVec::from_vec(vec![cr(-0.5), -z[1].conj()])),
            Arc::new(|_: &CVec| {
                CMat::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, cr(-1.0)])
            }),
            None,
            None,
        );
        let rep = levi_classify(&f, &rvec(&[0.0, 0.0]), &LeviOptions::default()).unwrap();
        assert_eq!(rep.classification, LeviClass::NotPseudoconvex);
    }

    #[test]
    fn rescaling_preserves_classification_and_scales_eigenvalues() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let scaled = ball.scale(2.5);
        let p = cvec(&[(0.6, 0.0), (0.0, 0.8)]);
        let a = levi_classify(&ball, &p, &LeviOptions::default()).unwrap();
        let b = levi_classify(&scaled, &p, &LeviOptions::default()).unwrap();
        assert_eq!(a.classification, b.classification);
        assert!((b.levi_eigenvalues[0] - 2.5 * a.levi_eigenvalues[0]).abs() < 1e-12);
    }

    #[test]
    fn off_boundary_points_are_rejected() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let e = levi_classify(&ball, &rvec(&[0.5, 0.0]), &LeviOptions::default()).unwrap_err();
        assert!(matches!(e, Error::NotOnBoundary(_)));
    }

    #[test]
    fn disc_boundary_reports_empty_tangent_space() {
        let disc = make_catalog_domain("disc", 1).unwrap();
        let rep = levi_classify(&disc, &rvec(&[1.0]), &LeviOptions::default()).unwrap();
        assert_eq!(rep.classification, LeviClass::StronglyPseudoconvex);
        assert!(rep.levi_eigenvalues.is_empty());
    }
}
