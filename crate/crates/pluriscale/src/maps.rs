//! Affine and holomorphic map types.
//!
//! `AffineMap` is matrix-plus-shift with exact composition and inversion.
//! `HoloMap` wraps evaluator and Jacobian closures; inverses are carried
//! explicitly when known. Both are immutable; composition builds new maps.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, cr, norm, CMat, CVec};

#[derive(Clone, Debug)]
pub struct AffineMap {
    pub matrix: CMat,
    pub shift: CVec,
    pub tag: String,
}

impl AffineMap {
    pub fn new(matrix: CMat, shift: CVec, tag: impl Into<String>) -> Self {
        assert_eq!(matrix.nrows(), shift.len());
        AffineMap { matrix, shift, tag: tag.into() }
    }

    pub fn identity(dim: usize) -> Self {
        AffineMap::new(CMat::identity(dim, dim), CVec::zeros(dim), "identity")
    }

    /// Translation z ↦ z + b.
    pub fn translation(b: &CVec) -> Self {
        AffineMap::new(CMat::identity(b.len(), b.len()), b.clone(), "translation")
    }

    /// Diagonal scaling z_j ↦ factors_j z_j.
    pub fn diagonal(factors: &[Complex64], tag: impl Into<String>) -> Self {
        let d = factors.len();
        let m = CMat::from_fn(d, d, |r, ci| if r == ci { factors[r] } else { crate::linalg::ZERO });
        AffineMap::new(m, CVec::zeros(d), tag)
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, z: &CVec) -> CVec {
        &self.matrix * z + &self.shift
    }

    /// self ∘ other, i.e. z ↦ self(other(z)).
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap::new(
            &self.matrix * &other.matrix,
            &self.matrix * &other.shift + &self.shift,
            format!("{}∘{}", self.tag, other.tag),
        )
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = crate::linalg::inverse(&self.matrix, "affine inverse")?;
        let shift = -(&inv * &self.shift);
        Ok(AffineMap::new(inv, shift, format!("{}⁻¹", self.tag)))
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }
}

type EvalFn = Arc<dyn Fn(&CVec) -> CVec + Send + Sync>;
type JacFn = Arc<dyn Fn(&CVec) -> CMat + Send + Sync>;

#[derive(Clone)]
pub struct HoloMap {
    dim_in: usize,
    dim_out: usize,
    tag: String,
    f: EvalFn,
    jac: JacFn,
    finv: Option<EvalFn>,
}

impl std::fmt::Debug for HoloMap {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fm, "HoloMap({}, {}→{})", self.tag, self.dim_in, self.dim_out)
    }
}

impl HoloMap {
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        tag: impl Into<String>,
        f: impl Fn(&CVec) -> CVec + Send + Sync + 'static,
        jac: impl Fn(&CVec) -> CMat + Send + Sync + 'static,
    ) -> Self {
        HoloMap {
            dim_in,
            dim_out,
            tag: tag.into(),
            f: Arc::new(f),
            jac: Arc::new(jac),
            finv: None,
        }
    }

    pub fn with_inverse(mut self, finv: impl Fn(&CVec) -> CVec + Send + Sync + 'static) -> Self {
        self.finv = Some(Arc::new(finv));
        self
    }

    pub fn from_affine(a: &AffineMap) -> Self {
        let d = a.dim();
        let m = a.matrix.clone();
        let tag = a.tag.clone();
        let a1 = a.clone();
        let mut h = HoloMap::new(d, d, tag, move |z| a1.apply(z), move |_| m.clone());
        if let Ok(ainv) = a.inverse() {
            h = h.with_inverse(move |w| ainv.apply(w));
        }
        h
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn retag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn apply(&self, z: &CVec) -> CVec {
        (self.f)(z)
    }

    /// Like `apply`, but rejects non-finite output (poles, overflow).
    pub fn apply_checked(&self, z: &CVec) -> Result<CVec> {
        let w = self.apply(z);
        if w.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(w)
        } else {
            Err(Error::Singular("map evaluated at a pole"))
        }
    }

    pub fn jacobian(&self, z: &CVec) -> CMat {
        (self.jac)(z)
    }

    pub fn has_inverse(&self) -> bool {
        self.finv.is_some()
    }

    pub fn apply_inverse(&self, w: &CVec) -> Result<CVec> {
        match &self.finv {
            Some(g) => Ok(g(w)),
            None => Err(Error::Precondition(format!(
                "map `{}` carries no inverse",
                self.tag
            ))),
        }
    }

    /// The inverse as a map of its own. Its Jacobian is computed as the
    /// matrix inverse of the forward Jacobian at the preimage.
    pub fn inverse(&self) -> Result<HoloMap> {
        let finv = self.finv.clone().ok_or_else(|| {
            Error::Precondition(format!("map `{}` carries no inverse", self.tag))
        })?;
        let f = self.f.clone();
        let jac = self.jac.clone();
        let finv2 = finv.clone();
        Ok(HoloMap {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            tag: format!("{}⁻¹", self.tag),
            f: finv,
            jac: Arc::new(move |w| {
                let z = finv2(w);
                jac(&z)
                    .try_inverse()
                    .unwrap_or_else(|| CMat::zeros(z.len(), z.len()))
            }),
            finv: Some(f),
        })
    }

    /// self ∘ other, with chain-rule Jacobian.
    pub fn compose(&self, other: &HoloMap) -> HoloMap {
        assert_eq!(other.dim_out, self.dim_in);
        let f1 = other.f.clone();
        let f2 = self.f.clone();
        let j1 = other.jac.clone();
        let j2 = self.jac.clone();
        let f1b = other.f.clone();
        let finv = match (&self.finv, &other.finv) {
            (Some(g2), Some(g1)) => {
                let g1 = g1.clone();
                let g2 = g2.clone();
                Some(Arc::new(move |w: &CVec| g1(&g2(w))) as EvalFn)
            }
            _ => None,
        };
        HoloMap {
            dim_in: other.dim_in,
            dim_out: self.dim_out,
            tag: format!("{}∘{}", self.tag, other.tag),
            f: Arc::new(move |z| f2(&f1(z))),
            jac: Arc::new(move |z| j2(&f1b(z)) * j1(z)),
            finv,
        }
    }

    /// Max relative deviation of the analytic Jacobian from a central
    /// finite-difference Jacobian at `z`. Validation helper for tests.
    pub fn jacobian_fd_defect(&self, z: &CVec) -> f64 {
        let h = 1e-6;
        let jac = self.jacobian(z);
        let scale = jac.iter().map(|e| e.norm()).fold(1.0f64, f64::max);
        let mut worst = 0.0f64;
        for j in 0..self.dim_in {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += cr(h);
            zm[j] -= cr(h);
            let dx = (self.apply(&zp) - self.apply(&zm)) / cr(2.0 * h);
            let mut zpi = z.clone();
            let mut zmi = z.clone();
            zpi[j] += c(0.0, h);
            zmi[j] -= c(0.0, h);
            let dy = (self.apply(&zpi) - self.apply(&zmi)) / cr(2.0 * h);
            for i in 0..self.dim_out {
                // holomorphic: ∂f/∂z = ∂f/∂x = -i ∂f/∂y
                let fd = (dx[i] + c(0.0, -1.0) * dy[i]) * cr(0.5);
                worst = worst.max((fd - jac[(i, j)]).norm() / scale);
            }
        }
        worst
    }
}

/// Round-trip defect `max(|f⁻¹(f(z)) - z|)` over the given samples.
pub fn round_trip_defect(map: &HoloMap, samples: &[CVec]) -> Result<f64> {
    let mut worst = 0.0f64;
    for z in samples {
        let back = map.apply_inverse(&map.apply(z))?;
        worst = worst.max(norm(&(back - z)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cvec, ZERO};

    #[test]
    fn affine_round_trip() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 2.0), cr(0.5), c(0.0, -1.0), cr(3.0)]);
        let a = AffineMap::new(m, cvec(&[(1.0, 1.0), (0.0, -2.0)]), "t");
        let ainv = a.inverse().unwrap();
        let z = cvec(&[(0.3, -0.7), (1.5, 0.2)]);
        let back = ainv.apply(&a.apply(&z));
        assert!(norm(&(back - &z)) < 1e-12);
        let comp = a.compose(&ainv);
        let w = comp.apply(&z);
        assert!(norm(&(w - &z)) < 1e-12);
    }

    #[test]
    fn holo_jacobian_matches_finite_differences() {
        // f(z) = (z_0^2 + z_1, z_0 z_1)
        let f = HoloMap::new(
            2,
            2,
            "quad",
            |z: &CVec| {
                CVec::from_vec(vec![z[0] * z[0] + z[1], z[0] * z[1]])
            },
            |z: &CVec| {
                CMat::from_row_slice(2, 2, &[cr(2.0) * z[0], cr(1.0), z[1], z[0]])
            },
        );
        let z = cvec(&[(0.4, 0.1), (-0.3, 0.8)]);
        assert!(f.jacobian_fd_defect(&z) < 1e-6);
    }

    #[test]
    fn composition_chains_jacobians_and_inverses() {
        let a = AffineMap::new(
            CMat::from_row_slice(2, 2, &[cr(2.0), ZERO, ZERO, c(0.0, 1.0)]),
            cvec(&[(0.0, 0.0), (1.0, 0.0)]),
            "a",
        );
        let ha = HoloMap::from_affine(&a);
        let hb = HoloMap::from_affine(&AffineMap::translation(&cvec(&[(0.5, 0.5), (0.0, 0.0)])));
        let comp = ha.compose(&hb);
        let z = cvec(&[(0.1, 0.2), (0.3, 0.4)]);
        let w = comp.apply(&z);
        let back = comp.apply_inverse(&w).unwrap();
        assert!(norm(&(back - &z)) < 1e-12);
        assert!(comp.jacobian_fd_defect(&z) < 1e-8);
    }
}
