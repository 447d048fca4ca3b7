//! Order of contact of monomial analytic discs with a hypersurface.
//!
//! The search walks curves t ↦ p + (a t^p, b t^q) with unit-modulus (or zero)
//! coefficients, expands the defining polynomial along the curve exactly as a
//! polynomial in (t, t̄), and reads off the vanishing order. The reported type
//! is the maximum of order/multiplicity over the family, which is insensitive
//! to reparameterizations like t ↦ t^2 that would otherwise inflate the order.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{DefiningFunction, ZPoly, BOUNDARY_TOL};
use crate::linalg::CVec;

/// Curve z(t) = center + (a t^p, b t^q).
#[derive(Clone, Debug, Serialize)]
pub struct MonomialCurve {
    pub a: [f64; 2],
    pub p: u32,
    pub b: [f64; 2],
    pub q: u32,
}

impl MonomialCurve {
    fn coeff(&self, j: usize) -> Complex64 {
        let c = if j == 0 { self.a } else { self.b };
        Complex64::new(c[0], c[1])
    }

    fn exponent(&self, j: usize) -> u32 {
        if j == 0 {
            self.p
        } else {
            self.q
        }
    }

    /// Order of vanishing of z(t) - center at t = 0.
    pub fn multiplicity(&self) -> u32 {
        let mut m = u32::MAX;
        for j in 0..2 {
            if self.coeff(j).norm() > 0.0 {
                m = m.min(self.exponent(j));
            }
        }
        m
    }

    pub fn eval(&self, center: &CVec, t: Complex64) -> CVec {
        let mut z = center.clone();
        z[0] += Complex64::new(self.a[0], self.a[1]) * t.powu(self.p);
        z[1] += Complex64::new(self.b[0], self.b[1]) * t.powu(self.q);
        z
    }
}

/// Search family: exponents 1..=max_p, 1..=max_q, coefficients drawn from
/// {0} ∪ {e^{2πik/phases}}, excluding the identically-constant curve.
#[derive(Clone, Debug, Serialize)]
pub struct CurveFamily {
    pub max_p: u32,
    pub max_q: u32,
    pub phases: u32,
}

impl Default for CurveFamily {
    fn default() -> Self {
        CurveFamily { max_p: 6, max_q: 6, phases: 8 }
    }
}

impl CurveFamily {
    pub fn validate(&self) -> Result<()> {
        if self.max_p == 0 || self.max_q == 0 || self.max_p > 16 || self.max_q > 16 {
            return Err(Error::Precondition(
                "curve exponent bounds must lie in 1..=16".into(),
            ));
        }
        if self.phases == 0 {
            return Err(Error::Precondition("phase count must be positive".into()));
        }
        Ok(())
    }

    fn coefficients(&self) -> Vec<Complex64> {
        let mut cs = vec![Complex64::new(0.0, 0.0)];
        for k in 0..self.phases {
            let th = 2.0 * std::f64::consts::PI * k as f64 / self.phases as f64;
            cs.push(Complex64::new(th.cos(), th.sin()));
        }
        cs
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum FiniteType {
    Finite(f64),
    Exceeds(String),
}

impl FiniteType {
    pub fn exceeds() -> Self {
        FiniteType::Exceeds("exceeds search bound".into())
    }

    pub fn order(&self) -> Option<f64> {
        match self {
            FiniteType::Finite(k) => Some(*k),
            FiniteType::Exceeds(_) => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContactReport {
    pub point: Vec<[f64; 2]>,
    pub family: CurveFamily,
    pub best_curve: Option<MonomialCurve>,
    /// Vanishing order of ρ∘z for the best curve.
    pub vanishing_order: Option<u32>,
    pub multiplicity: Option<u32>,
    pub finite_type: FiniteType,
    pub notes: Vec<String>,
}

/// Truncated polynomial in (t, t̄); dense grid of coefficients up to `cap`
/// in each variable separately.
struct Jet {
    cap: usize,
    c: Vec<Complex64>,
}

impl Jet {
    fn zero(cap: usize) -> Self {
        Jet { cap, c: vec![Complex64::new(0.0, 0.0); (cap + 1) * (cap + 1)] }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.cap + 1) + j
    }

    fn add(&mut self, i: usize, j: usize, v: Complex64) {
        if i <= self.cap && j <= self.cap {
            let k = self.idx(i, j);
            self.c[k] += v;
        }
    }

    /// Lowest total degree with a coefficient above the noise floor.
    fn vanishing_order(&self) -> Option<usize> {
        let floor = 1e-9 * (1.0 + self.c.iter().map(|v| v.norm()).fold(0.0, f64::max));
        let mut best: Option<usize> = None;
        for i in 0..=self.cap {
            for j in 0..=self.cap {
                if self.c[self.idx(i, j)].norm() > floor {
                    let d = i + j;
                    best = Some(best.map_or(d, |b| b.min(d)));
                }
            }
        }
        best
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Expand ρ(z(t)) for a ZPoly ρ and a monomial curve, exactly, up to total
/// degree `cap` in (t, t̄). Each factor (c_j + a_j t^{p_j})^{α_j} is a binomial
/// sum, so the whole term is a finite convolution.
fn curve_jet(poly: &ZPoly, center: &CVec, curve: &MonomialCurve, cap: usize) -> Jet {
    let mut jet = Jet::zero(cap);
    for (coeff, alpha, beta) in &poly.terms {
        // holomorphic part: Π_j (c_j + a_j t^{p_j})^{α_j} → poly in t
        // antiholomorphic part: same with conjugates → poly in t̄
        let holo = expand_product(center, curve, alpha, cap, false);
        let anti = expand_product(center, curve, beta, cap, true);
        for (dt, ch) in holo.iter().enumerate() {
            if ch.norm() == 0.0 {
                continue;
            }
            for (db, ca) in anti.iter().enumerate() {
                if ca.norm() == 0.0 {
                    continue;
                }
                jet.add(dt, db, coeff * ch * ca);
            }
        }
    }
    jet
}

/// Coefficients of Π_j (c_j + a_j s^{p_j})^{e_j} as a polynomial in s,
/// conjugating the data when `conj` is set (s then stands for t̄).
fn expand_product(
    center: &CVec,
    curve: &MonomialCurve,
    e: &[u32; 2],
    cap: usize,
    conj: bool,
) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); cap + 1];
    acc[0] = Complex64::new(1.0, 0.0);
    for j in 0..2 {
        if e[j] == 0 {
            continue;
        }
        let (cj, aj) = {
            let c = center[j];
            let a = curve.coeff(j);
            if conj {
                (c.conj(), a.conj())
            } else {
                (c, a)
            }
        };
        let pj = curve.exponent(j) as usize;
        // this factor alone
        let mut factor = vec![Complex64::new(0.0, 0.0); cap + 1];
        for i in 0..=e[j] {
            let deg = pj * i as usize;
            if deg > cap {
                break;
            }
            factor[deg] += binomial(e[j], i) * cj.powu(e[j] - i) * aj.powu(i);
        }
        let mut next = vec![Complex64::new(0.0, 0.0); cap + 1];
        for (d1, v1) in acc.iter().enumerate() {
            if v1.norm() == 0.0 {
                continue;
            }
            for (d2, v2) in factor.iter().enumerate() {
                if d1 + d2 > cap {
                    break;
                }
                next[d1 + d2] += v1 * v2;
            }
        }
        acc = next;
    }
    acc
}

/// Maximize (vanishing order)/(curve multiplicity) over the family. A curve
/// whose jet vanishes identically up to the degree cap wins outright and the
/// verdict becomes "exceeds search bound".
pub fn order_of_contact(
    f: &DefiningFunction,
    p: &CVec,
    family: &CurveFamily,
) -> Result<ContactReport> {
    family.validate()?;
    if f.dim() != 2 || p.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim().max(p.len()) });
    }
    let poly = f.poly().ok_or_else(|| {
        Error::Precondition(format!(
            "contact search needs polynomial defining data; '{}' has none",
            f.tag()
        ))
    })?;
    let r0 = f.rho(p);
    if r0.abs() > BOUNDARY_TOL {
        return Err(Error::NotOnBoundary(r0));
    }

    let cap = poly.total_degree() * family.max_p.max(family.max_q) as usize;
    let coeffs = family.coefficients();

    let mut best: Option<(f64, MonomialCurve, usize)> = None;
    for a in &coeffs {
        for b in &coeffs {
            if a.norm() == 0.0 && b.norm() == 0.0 {
                continue;
            }
            let p_range = if a.norm() == 0.0 { 1..=1 } else { 1..=family.max_p };
            for pe in p_range {
                let q_range = if b.norm() == 0.0 { 1..=1 } else { 1..=family.max_q };
                for qe in q_range.clone() {
                    let curve = MonomialCurve {
                        a: [a.re, a.im],
                        p: pe,
                        b: [b.re, b.im],
                        q: qe,
                    };
                    let jet = curve_jet(poly, p, &curve, cap);
                    match jet.vanishing_order() {
                        None => {
                            // flat to machine depth: curve sits inside the zero set
                            return Ok(ContactReport {
                                point: point_pairs(p),
                                family: family.clone(),
                                best_curve: Some(curve),
                                vanishing_order: None,
                                multiplicity: None,
                                finite_type: FiniteType::exceeds(),
                                notes: vec![
                                    format!(
                                        "curve jet vanishes identically up to degree {cap}"
                                    ),
                                    family_note(),
                                ],
                            });
                        }
                        Some(d) => {
                            let m = curve.multiplicity();
                            let ratio = d as f64 / m as f64;
                            let better = match &best {
                                None => true,
                                Some((r, _, _)) => ratio > *r + 1e-12,
                            };
                            if better {
                                best = Some((ratio, curve, d));
                            }
                        }
                    }
                }
            }
        }
    }

    let (ratio, curve, d) = best.expect("family is nonempty");
    Ok(ContactReport {
        point: point_pairs(p),
        family: family.clone(),
        best_curve: Some(curve.clone()),
        vanishing_order: Some(d as u32),
        multiplicity: Some(curve.multiplicity()),
        finite_type: FiniteType::Finite(ratio),
        notes: vec![family_note()],
    })
}

fn family_note() -> String {
    "search restricted to monomial curves (a t^p, b t^q); \
     adequate for product/rotation-invariant polynomial boundaries"
        .into()
}

fn point_pairs(p: &CVec) -> Vec<[f64; 2]> {
    p.iter().map(|z| [z.re, z.im]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_catalog_domain;
    use crate::linalg::cvec;

    fn report(tag: &str, p: &CVec) -> ContactReport {
        let f = make_catalog_domain(tag, 2).unwrap();
        order_of_contact(&f, p, &CurveFamily::default()).unwrap()
    }

    #[test]
    fn ball_has_type_two() {
        let r = report("ball", &cvec(&[(1.0, 0.0), (0.0, 0.0)]));
        assert_eq!(r.finite_type.order(), Some(2.0));
        // best curve is tangential: constant first coordinate
        let c = r.best_curve.unwrap();
        assert_eq!(c.a, [0.0, 0.0]);
    }

    #[test]
    fn egg_order_doubles_the_exponent() {
        for k in 2..=4u32 {
            let f = make_catalog_domain(&format!("egg({k})"), 2).unwrap();
            let r = order_of_contact(
                &f,
                &cvec(&[(1.0, 0.0), (0.0, 0.0)]),
                &CurveFamily::default(),
            )
            .unwrap();
            let order = r.finite_type.order().unwrap();
            assert_eq!(order, 2.0 * k as f64, "egg({k})");
            assert_eq!(order as u32 % 2, 0);
            let c = r.best_curve.unwrap();
            assert_eq!((c.a, c.q), ([0.0, 0.0], 1), "maximizer is (1,0)+(0,t)");
        }
    }

    #[test]
    fn halfspace_exceeds_bound() {
        let r = report("halfspace", &cvec(&[(0.0, 0.0), (0.3, -0.2)]));
        assert!(matches!(r.finite_type, FiniteType::Exceeds(_)));
        assert!(r.vanishing_order.is_none());
    }

    #[test]
    fn kohn_nirenberg_origin_has_type_eight() {
        let r = report("kohn_nirenberg", &cvec(&[(0.0, 0.0), (0.0, 0.0)]));
        assert_eq!(r.finite_type.order(), Some(8.0));
    }

    #[test]
    fn siegel_boundary_type_two() {
        let r = report("siegel", &cvec(&[(0.0, 0.0), (0.0, 0.0)]));
        assert_eq!(r.finite_type.order(), Some(2.0));
    }

    #[test]
    fn reported_order_bounds_rho_samples() {
        // invariant: |ρ(z(t))| ≤ C|t|^k on a sampled t-range
        for (tag, p) in [
            ("egg(3)", cvec(&[(1.0, 0.0), (0.0, 0.0)])),
            ("ball", cvec(&[(0.0, 0.0), (1.0, 0.0)])),
            ("kohn_nirenberg", cvec(&[(0.0, 0.0), (0.0, 0.0)])),
        ] {
            let f = make_catalog_domain(tag, 2).unwrap();
            let r = order_of_contact(&f, &p, &CurveFamily::default()).unwrap();
            let k = r.vanishing_order.unwrap() as f64;
            let curve = r.best_curve.unwrap();
            let mut c_required: f64 = 0.0;
            for i in 0..40 {
                let tm = 1e-3 * (300f64).powf(i as f64 / 39.0);
                let t = Complex64::from_polar(tm, 0.7 * i as f64);
                let z = curve.eval(&p, t);
                c_required = c_required.max(f.rho(&z).abs() / tm.powf(k));
            }
            assert!(c_required.is_finite() && c_required < 1e3, "{tag}: C = {c_required}");
        }
    }

    #[test]
    fn off_boundary_point_rejected() {
        let f = make_catalog_domain("ball", 2).unwrap();
        let err = order_of_contact(
            &f,
            &cvec(&[(0.5, 0.0), (0.0, 0.0)]),
            &CurveFamily::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotOnBoundary(_)));
    }

    #[test]
    fn domain_without_polynomial_data_rejected() {
        let f = make_catalog_domain("bidisc", 2).unwrap();
        let err = order_of_contact(
            &f,
            &cvec(&[(1.0, 0.0), (0.0, 0.0)]),
            &CurveFamily::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn exponent_bounds_validated() {
        let fam = CurveFamily { max_p: 0, max_q: 3, phases: 8 };
        assert!(fam.validate().is_err());
        let fam = CurveFamily { max_p: 17, max_q: 3, phases: 8 };
        assert!(fam.validate().is_err());
    }
}
