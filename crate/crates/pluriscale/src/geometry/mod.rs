//! Defining functions, Levi-form classification, convex normal forms, and
//! finite-type computation.

mod catalog;
mod contact;
mod levi;
mod normal_form;

pub use catalog::make_catalog_domain;
pub use contact::{order_of_contact, ContactReport, CurveFamily, FiniteType, MonomialCurve};
pub use levi::{levi_classify, LeviClass, LeviOptions, LeviReport};
pub use normal_form::{convex_normal_form, NormalFormMap};

use std::sync::Arc;

use num_complex::Complex64;

use crate::linalg::{c, cr, CMat, CVec};
use crate::maps::HoloMap;

/// Global default for "is this point on the boundary".
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Global default for eigenvalue sign decisions in the Levi classification.
pub const EIG_TOL: f64 = 1e-8;

type ScalarFn = Arc<dyn Fn(&CVec) -> f64 + Send + Sync>;
type VecFn = Arc<dyn Fn(&CVec) -> CVec + Send + Sync>;
type MatFn = Arc<dyn Fn(&CVec) -> CMat + Send + Sync>;

/// A smooth real-valued defining function for a domain `{rho < 0}` in C^d,
/// with analytic complex gradient `(∂ρ/∂z_j)_j` and mixed complex Hessian
/// `(∂²ρ/∂z_j∂z̄_k)_{jk}`.
///
/// Catalog entries also carry the holomorphic Hessian `(∂²ρ/∂z_j∂z_k)` and,
/// where the function is a polynomial in (z, z̄), an exact term list used by
/// the finite-type search.
#[derive(Clone)]
pub struct DefiningFunction {
    dim: usize,
    tag: String,
    convex: bool,
    rho: ScalarFn,
    grad: VecFn,
    hess: MatFn,
    hess_holo: Option<MatFn>,
    poly: Option<ZPoly>,
}

impl std::fmt::Debug for DefiningFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DefiningFunction({}, d={})", self.tag, self.dim)
    }
}

impl DefiningFunction {
    pub(crate) fn from_parts(
        dim: usize,
        tag: impl Into<String>,
        convex: bool,
        rho: ScalarFn,
        grad: VecFn,
        hess: MatFn,
        hess_holo: Option<MatFn>,
        poly: Option<ZPoly>,
    ) -> Self {
        DefiningFunction {
            dim,
            tag: tag.into(),
            convex,
            rho,
            grad,
            hess,
            hess_holo,
            poly,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Whether the domain `{rho < 0}` is convex (catalog knowledge, not a
    /// numerical test).
    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn rho(&self, z: &CVec) -> f64 {
        (self.rho)(z)
    }

    /// Complex gradient `(∂ρ/∂z_j)_j`.
    pub fn grad(&self, z: &CVec) -> CVec {
        (self.grad)(z)
    }

    /// Mixed complex Hessian `H_jk = ∂²ρ/∂z_j∂z̄_k`; Hermitian for real ρ.
    pub fn hess(&self, z: &CVec) -> CMat {
        (self.hess)(z)
    }

    /// Holomorphic Hessian `Q_jk = ∂²ρ/∂z_j∂z_k` (symmetric). Catalog entries
    /// supply it in closed form; otherwise it is recovered from the analytic
    /// gradient by central differences.
    pub fn hess_holo(&self, z: &CVec) -> CMat {
        if let Some(q) = &self.hess_holo {
            return q(z);
        }
        let d = self.dim;
        let h = 1e-5;
        let mut q = CMat::zeros(d, d);
        for j in 0..d {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += cr(h);
            zm[j] -= cr(h);
            let dx = (self.grad(&zp) - self.grad(&zm)) / cr(2.0 * h);
            let mut zpi = z.clone();
            let mut zmi = z.clone();
            zpi[j] += c(0.0, h);
            zmi[j] -= c(0.0, h);
            let dy = (self.grad(&zpi) - self.grad(&zmi)) / cr(2.0 * h);
            for k in 0..d {
                // ∂/∂z_j of grad_k = (∂_x - i∂_y)/2 applied to grad_k
                q[(j, k)] = (dx[k] + c(0.0, -1.0) * dy[k]) * cr(0.5);
            }
        }
        // symmetrize: ∂²ρ/∂z_j∂z_k = ∂²ρ/∂z_k∂z_j
        let qt = q.transpose();
        (q + qt) * cr(0.5)
    }

    /// Real gradient norm `|∇ρ|` over R^{2d}; equals twice the Euclidean norm
    /// of the complex gradient.
    pub fn real_gradient_norm(&self, z: &CVec) -> f64 {
        2.0 * crate::linalg::norm(&self.grad(z))
    }

    pub(crate) fn poly(&self) -> Option<&ZPoly> {
        self.poly.as_ref()
    }

    /// The function `c·ρ`, `c > 0`; same zero set, all derivative data scaled.
    pub fn scale(&self, factor: f64) -> DefiningFunction {
        assert!(factor > 0.0, "defining functions only rescale by c > 0");
        let rho = self.rho.clone();
        let grad = self.grad.clone();
        let hess = self.hess.clone();
        let hess_holo = self.hess_holo.clone();
        let fc = cr(factor);
        DefiningFunction {
            dim: self.dim,
            tag: format!("{}·{:.3e}", self.tag, factor),
            convex: self.convex,
            rho: Arc::new(move |z| factor * rho(z)),
            grad: Arc::new(move |z| grad(z) * fc),
            hess: Arc::new(move |z| hess(z) * fc),
            hess_holo: hess_holo
                .map(|q| Arc::new(move |z: &CVec| q(z) * fc) as MatFn),
            poly: self.poly.as_ref().map(|p| p.scale(factor)),
        }
    }

    /// The pullback `ρ ∘ g` for holomorphic `g`. Chain rule:
    /// grad = Jᵀ grad∘g, Hess = Jᵀ (H∘g) J̄. The holomorphic Hessian is
    /// dropped (it would need second derivatives of `g`); the finite
    /// difference fallback covers it.
    pub fn pullback(&self, g: &HoloMap) -> DefiningFunction {
        assert_eq!(g.dim_out(), self.dim);
        let rho = self.rho.clone();
        let grad = self.grad.clone();
        let hess = self.hess.clone();
        let g1 = g.clone();
        let g2 = g.clone();
        let g3 = g.clone();
        DefiningFunction {
            dim: g.dim_in(),
            tag: format!("{}∘{}", self.tag, g.tag()),
            convex: false,
            rho: Arc::new(move |z| rho(&g1.apply(z))),
            grad: Arc::new(move |z| {
                let w = g2.apply(z);
                let j = g2.jacobian(z);
                j.transpose() * grad(&w)
            }),
            hess: Arc::new(move |z| {
                let w = g3.apply(z);
                let j = g3.jacobian(z);
                j.transpose() * hess(&w) * j.conjugate()
            }),
            hess_holo: None,
            poly: None,
        }
    }

    /// Membership with an explicit margin: `rho(z) < -margin`.
    pub fn contains(&self, z: &CVec, margin: f64) -> bool {
        self.rho(z) < -margin
    }
}

/// Exact term list of a polynomial in (z, z̄) on C²: each term is
/// `coeff · z^a · z̄^b`. The sum is real-valued (terms come in conjugate
/// pairs); used by the finite-type search for exact jet arithmetic.
#[derive(Clone, Debug)]
pub struct ZPoly {
    pub terms: Vec<(Complex64, [u32; 2], [u32; 2])>,
}

impl ZPoly {
    pub fn new(terms: Vec<(Complex64, [u32; 2], [u32; 2])>) -> Self {
        ZPoly { terms }
    }

    pub fn eval(&self, z: &CVec) -> Complex64 {
        let zc = [z[0].conj(), z[1].conj()];
        self.terms
            .iter()
            .map(|&(coef, a, b)| {
                coef * z[0].powu(a[0]) * z[1].powu(a[1]) * zc[0].powu(b[0]) * zc[1].powu(b[1])
            })
            .sum()
    }

    fn scale(&self, factor: f64) -> ZPoly {
        ZPoly {
            terms: self
                .terms
                .iter()
                .map(|&(coef, a, b)| (coef * cr(factor), a, b))
                .collect(),
        }
    }

    /// Largest total degree |α| + |β| over the terms.
    pub fn total_degree(&self) -> usize {
        self.terms
            .iter()
            .map(|&(_, a, b)| (a[0] + a[1] + b[0] + b[1]) as usize)
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cvec, hermitian_defect, rvec};

    #[test]
    fn finite_difference_holo_hessian_matches_catalog() {
        // egg(3) has a nontrivial holomorphic Hessian; compare closed form
        // against the finite-difference fallback.
        let egg = make_catalog_domain("egg(3)", 2).unwrap();
        let stripped = DefiningFunction {
            hess_holo: None,
            ..egg.clone()
        };
        let z = cvec(&[(0.3, -0.2), (0.5, 0.4)]);
        let exact = egg.hess_holo(&z);
        let fd = stripped.hess_holo(&z);
        for j in 0..2 {
            for k in 0..2 {
                assert!(
                    (exact[(j, k)] - fd[(j, k)]).norm() < 1e-7,
                    "({j},{k}): {} vs {}",
                    exact[(j, k)],
                    fd[(j, k)]
                );
            }
        }
    }

    #[test]
    fn scale_acts_on_all_derivatives() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let s = ball.scale(3.0);
        let z = cvec(&[(0.1, 0.2), (-0.3, 0.4)]);
        assert!((s.rho(&z) - 3.0 * ball.rho(&z)).abs() < 1e-15);
        assert!(crate::linalg::norm(&(s.grad(&z) - ball.grad(&z) * cr(3.0))) < 1e-15);
        assert!(hermitian_defect(&s.hess(&z)) < 1e-15);
    }

    #[test]
    fn pullback_chain_rule_against_direct_composition() {
        // pull the ball back through z ↦ (z_0², z_1) and check the gradient
        // by finite differences of rho itself
        let ball = make_catalog_domain("ball", 2).unwrap();
        let sq = HoloMap::new(
            2,
            2,
            "square",
            |z: &CVec| CVec::from_vec(vec![z[0] * z[0], z[1]]),
            |z: &CVec| {
                CMat::from_row_slice(2, 2, &[cr(2.0) * z[0], cr(0.0).into(), cr(0.0), cr(1.0)])
            },
        );
        let pulled = ball.pullback(&sq);
        let z = cvec(&[(0.4, 0.1), (0.2, -0.3)]);
        let g = pulled.grad(&z);
        let h = 1e-6;
        for j in 0..2 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += cr(h);
            zm[j] -= cr(h);
            let dx = (pulled.rho(&zp) - pulled.rho(&zm)) / (2.0 * h);
            let mut zpi = z.clone();
            let mut zmi = z.clone();
            zpi[j] += c(0.0, h);
            zmi[j] -= c(0.0, h);
            let dy = (pulled.rho(&zpi) - pulled.rho(&zmi)) / (2.0 * h);
            let fd = c(dx, -dy) * cr(0.5);
            assert!((g[j] - fd).norm() < 1e-7, "component {j}");
        }
        assert!(hermitian_defect(&pulled.hess(&z)) < 1e-12);
    }

    #[test]
    fn zpoly_matches_evaluator_on_catalog() {
        for tag in ["ball", "egg(2)", "siegel", "halfspace", "kohn_nirenberg", "bp_model(3)"] {
            let dom = make_catalog_domain(tag, 2).unwrap();
            let poly = dom.poly().expect(tag);
            for z in [
                cvec(&[(0.3, 0.1), (-0.2, 0.5)]),
                rvec(&[1.0, 0.0]),
                cvec(&[(-0.1, -0.9), (0.7, 0.2)]),
            ] {
                let pv = poly.eval(&z);
                assert!(pv.im.abs() < 1e-12, "{tag}: poly not real at sample");
                assert!((pv.re - dom.rho(&z)).abs() < 1e-12, "{tag}");
            }
        }
    }
}
