//! Scaling-method machinery: centering and anisotropic dilatation at a
//! boundary point, orbit-driven scaling sequences, derivative (Frankel)
//! rescaling, corner dilatation on the quarter space, Cayley transforms, and
//! the automorphism families used to drive orbits.

mod convergence;
mod kernel;

pub use convergence::{frankel_pinchuk_compare, normal_convergence_check};
pub use kernel::{caratheodory_kernel_estimate, DomainSequence, GridSpec, KernelEstimate};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{make_catalog_domain, DefiningFunction};
use crate::linalg::{self, cr, CMat, CVec, ONE};
use crate::maps::{AffineMap, HoloMap};
use crate::roots::first_root_along;

/// How far along the normal line the boundary root is bracketed.
const CHART_RADIUS: f64 = 4.0;

/// The standard involutive Möbius automorphism of the unit ball swapping
/// 0 and a. For a = 0 this degenerates to z ↦ -z; the tag records it.
pub fn ball_automorphism(a: &CVec) -> Result<HoloMap> {
    let d = a.len();
    let na2 = {
        let n = linalg::norm(a);
        if n >= 1.0 {
            return Err(Error::Precondition(format!(
                "ball automorphism needs |a| < 1, got {n}"
            )));
        }
        n * n
    };
    let s = (1.0 - na2).sqrt();
    // B = P_a + s(I - P_a) with P_a the projection onto span(a)
    let mut b = CMat::identity(d, d).scale(s);
    if na2 > 0.0 {
        let proj = (a * a.adjoint()).scale(1.0 / na2);
        b += proj.scale(1.0 - s);
    }
    let tag = if na2 == 0.0 {
        "ball Möbius a=0 (z ↦ -z)".to_string()
    } else {
        "ball Möbius involution".to_string()
    };
    let a1 = a.clone();
    let a2 = a.clone();
    let a3 = a.clone();
    let b1 = b.clone();
    let b2 = b.clone();
    let b3 = b;
    let eval = move |z: &CVec| -> CVec {
        let denom = ONE - linalg::hdot(z, &a1);
        (&a1 - &b1 * z).scale(1.0) / denom
    };
    let eval2 = eval.clone();
    let map = HoloMap::new(
        d,
        d,
        tag,
        move |z| eval(z),
        move |z: &CVec| -> CMat {
            let denom = ONE - linalg::hdot(z, &a2);
            let num = &a2 - &b2 * z;
            // d/dz of (a - Bz)/(1 - ⟨z,a⟩); ⟨z,a⟩ is holomorphic in z
            let mut j = (-&b3).scale(1.0) / denom;
            let abar = a3.map(|v| v.conj());
            j += (num * abar.transpose()).scale(1.0) / (denom * denom);
            j
        },
    )
    .with_inverse(move |w| eval2(w));
    Ok(map)
}

/// Cayley-type biholomorphism from the Siegel domain {Re z_0 > |z'|²} onto
/// the unit ball: (w, z') ↦ ((1-w)/(1+w), 2z'/(1+w)). Pole at w = -1;
/// `apply_checked` reports it.
pub fn cayley_siegel_to_ball(d: usize) -> HoloMap {
    HoloMap::new(
        d,
        d,
        "cayley siegel→ball",
        move |z: &CVec| {
            let denom = ONE + z[0];
            let mut u = CVec::zeros(z.len());
            u[0] = (ONE - z[0]) / denom;
            for j in 1..z.len() {
                u[j] = 2.0 * z[j] / denom;
            }
            u
        },
        move |z: &CVec| {
            let d_ = z.len();
            let denom = ONE + z[0];
            let d2 = denom * denom;
            let mut j = CMat::zeros(d_, d_);
            j[(0, 0)] = -2.0 * ONE / d2;
            for k in 1..d_ {
                j[(k, 0)] = -2.0 * z[k] / d2;
                j[(k, k)] = 2.0 * ONE / denom;
            }
            j
        },
    )
    .with_inverse(move |u: &CVec| {
        let denom = ONE + u[0];
        let mut z = CVec::zeros(u.len());
        z[0] = (ONE - u[0]) / denom;
        for j in 1..u.len() {
            z[j] = u[j] / denom;
        }
        z
    })
}

/// Automorphism (z_0, z_1) ↦ (s·z_0 + it, s^{1/(2m)}·z_1) of the model domain
/// {Re z_0 > |z_1|^{2m}}.
pub fn bp_model_automorphisms(m: u32, t: f64, s: f64) -> Result<HoloMap> {
    if m < 1 {
        return Err(Error::Precondition("model exponent m ≥ 1".into()));
    }
    if s <= 0.0 {
        return Err(Error::Precondition(format!(
            "dilation factor must be positive, got {s}"
        )));
    }
    let root = s.powf(1.0 / (2.0 * m as f64));
    let shift = Complex64::new(0.0, t);
    let jac = CMat::from_diagonal(&CVec::from_vec(vec![cr(s), cr(root)]));
    let jval = jac.clone();
    Ok(HoloMap::new(
        2,
        2,
        format!("model translation+dilation (m={m}, t={t}, s={s})"),
        move |z: &CVec| CVec::from_vec(vec![s * z[0] + shift, root * z[1]]),
        move |_: &CVec| jval.clone(),
    )
    .with_inverse(move |w: &CVec| {
        CVec::from_vec(vec![(w[0] - shift) / s, w[1] / root])
    }))
}

/// Diagonal dilatation of the quarter space V² = {Re z_0 ≥ 0, Re z_1 ≥ 0}:
/// z_j ↦ (z_j - i·Im t_j)/Re t_j. The subtraction of Im t as a real quantity
/// is resolved as subtracting i·Im t, which preserves V² exactly and sends
/// t to (1, 1); the tag records the convention.
pub fn corner_dilatation(t: &[Complex64; 2]) -> Result<AffineMap> {
    if t[0].re <= 0.0 || t[1].re <= 0.0 {
        return Err(Error::Precondition(format!(
            "corner dilatation needs Re t_j > 0, got ({}, {})",
            t[0].re, t[1].re
        )));
    }
    let matrix = CMat::from_diagonal(&CVec::from_vec(vec![
        cr(1.0 / t[0].re),
        cr(1.0 / t[1].re),
    ]));
    let shift = CVec::from_vec(vec![
        Complex64::new(0.0, -t[0].im / t[0].re),
        Complex64::new(0.0, -t[1].im / t[1].re),
    ]);
    Ok(AffineMap::new(
        matrix,
        shift,
        "corner dilatation; convention z ↦ (z - i·Im t)/Re t",
    ))
}

/// Result of centering at the boundary point over an interior q: the boundary
/// foot p on the z_0-line through q and the affine map ζ = A(z - p) whose
/// first row is -2·∇ρ(p), so the transported defining function starts
/// -Re ζ_0 + O(|ζ|²) and the interior sits on {Re ζ_0 > 0}.
#[derive(Debug)]
pub struct Centering {
    pub p_boundary: CVec,
    pub map: AffineMap,
}

pub fn centering_map(f: &DefiningFunction, q: &CVec) -> Result<Centering> {
    let d = f.dim();
    if q.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: q.len() });
    }
    let rq = f.rho(q);
    if rq >= 0.0 {
        return Err(Error::NotInterior(rq));
    }

    // nearest boundary point along the real z_0-line through q
    let along = |sign: f64| {
        let fq = f.clone();
        let q1 = q.clone();
        move |s: f64| {
            let mut z = q1.clone();
            z[0] += cr(sign * s);
            fq.rho(&z)
        }
    };
    let tol = 1e-13 * (1.0 + linalg::norm(q));
    let fwd = first_root_along(&along(1.0), 0.0, 1e-3, CHART_RADIUS, tol);
    let bwd = first_root_along(&along(-1.0), 0.0, 1e-3, CHART_RADIUS, tol);
    let s_star = match (fwd, bwd) {
        (Ok(sf), Ok(sb)) => {
            if sf < sb {
                sf
            } else {
                -sb
            }
        }
        (Ok(sf), Err(_)) => sf,
        (Err(_), Ok(sb)) => -sb,
        (Err(_), Err(_)) => return Err(Error::RootNotBracketed(CHART_RADIUS)),
    };
    let mut p = q.clone();
    p[0] += cr(s_star);

    let g = f.grad(&p);
    if linalg::norm(&g) < 1e-12 {
        return Err(Error::Singular("degenerate gradient at the boundary foot"));
    }
    let mut matrix = CMat::identity(d, d);
    for j in 0..d {
        matrix[(0, j)] = -2.0 * g[j];
    }
    let map = AffineMap::new(matrix.clone(), -(matrix * &p), "pinchuk centering");
    Ok(Centering { p_boundary: p, map })
}

/// Tangential stretching rule of the dilatation: coordinate j ≥ 1 divides by
/// λ_0^{e_j}. The strongly pseudoconvex rule is e_j = ½ throughout.
#[derive(Clone, Debug)]
pub enum Anisotropy {
    StronglyPseudoconvex,
    Powers(Vec<f64>),
}

impl Anisotropy {
    fn exponent(&self, j: usize) -> f64 {
        match self {
            Anisotropy::StronglyPseudoconvex => 0.5,
            Anisotropy::Powers(e) => e.get(j - 1).copied().unwrap_or(0.5),
        }
    }
}

#[derive(Debug)]
pub struct PinchukDilatation {
    /// Λ = L ∘ A.
    pub map: AffineMap,
    pub centering: AffineMap,
    pub p_boundary: CVec,
    /// λ_0 = first centered coordinate of q; the normal stretching factor.
    pub lambda0: f64,
}

pub fn pinchuk_dilatation(
    f: &DefiningFunction,
    q: &CVec,
    anisotropy: &Anisotropy,
) -> Result<PinchukDilatation> {
    let centering = centering_map(f, q)?;
    let zeta_q = centering.map.apply(q);
    let lambda0 = zeta_q[0].re;
    if lambda0 <= 1e-14 {
        return Err(Error::OrderingViolated(lambda0));
    }
    if zeta_q[0].im.abs() > 1e-10 * (1.0 + lambda0) {
        return Err(Error::OrderingViolated(zeta_q[0].im));
    }
    let d = f.dim();
    let mut factors = vec![cr(1.0 / lambda0)];
    for j in 1..d {
        factors.push(cr(lambda0.powf(-anisotropy.exponent(j))));
    }
    let dil = AffineMap::diagonal(&factors, "anisotropic dilation");
    let map = dil.compose(&centering.map).with_tag("pinchuk dilatation");
    Ok(PinchukDilatation {
        map,
        centering: centering.map,
        p_boundary: centering.p_boundary,
        lambda0,
    })
}

/// Orbit of a base point under a parameterized automorphism family.
#[derive(Clone, Debug)]
pub struct OrbitSpec {
    pub base: CVec,
    pub accumulation: CVec,
    pub family: OrbitFamily,
}

#[derive(Clone, Debug)]
pub enum OrbitFamily {
    /// Möbius maps pushing the ball's center to (1 - rate^ν)·e_0.
    BallMoebius { rate: f64 },
    /// Siegel/model dilations (z_0, z_1) ↦ (rate^ν z_0, rate^{ν/2} z_1).
    SiegelDilation { rate: f64 },
    /// Constant identity orbit (compact case).
    Identity,
}

impl OrbitSpec {
    pub fn automorphism(&self, nu: u32) -> Result<HoloMap> {
        match &self.family {
            OrbitFamily::BallMoebius { rate } => {
                let d = self.base.len();
                let mut a = CVec::zeros(d);
                a[0] = cr(1.0 - rate.powi(nu as i32));
                ball_automorphism(&a)
            }
            OrbitFamily::SiegelDilation { rate } => {
                let s = rate.powi(nu as i32);
                bp_model_automorphisms(1, 0.0, s)
            }
            OrbitFamily::Identity => {
                let d = self.base.len();
                Ok(HoloMap::from_affine(&AffineMap::identity(d)))
            }
        }
    }

    pub fn point(&self, nu: u32) -> Result<CVec> {
        Ok(self.automorphism(nu)?.apply(&self.base))
    }

    /// Check the orbit invariant: every q^ν interior, |q^ν - accumulation|
    /// non-increasing beyond some index; returns that index.
    pub fn validate(&self, f: &DefiningFunction, nu_max: u32) -> Result<u32> {
        let mut dist_prev = f64::INFINITY;
        let mut settled = 0;
        for nu in 1..=nu_max {
            let q = self.point(nu)?;
            let r = f.rho(&q);
            if r >= 0.0 {
                return Err(Error::NotInterior(r));
            }
            let dist = linalg::norm(&(&q - &self.accumulation));
            if dist > dist_prev + 1e-12 {
                settled = nu;
            }
            dist_prev = dist;
        }
        Ok(settled)
    }

    /// Parse from whitespace- or newline-separated `key=value` pairs:
    /// `family=ball_moebius|siegel_dilation|identity`, `rate=0.5`,
    /// `base=re:im,re:im`, `accumulation=re:im,re:im`.
    pub fn parse(text: &str) -> Result<OrbitSpec> {
        let mut family = None;
        let mut rate = 0.5f64;
        let mut base = None;
        let mut accumulation = None;
        for tok in text.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::ConfigParse(format!("expected key=value, got `{tok}`")))?;
            match k {
                "family" => family = Some(v.to_string()),
                "rate" => {
                    rate = v
                        .parse()
                        .map_err(|_| Error::ConfigParse(format!("bad rate `{v}`")))?
                }
                "base" => base = Some(parse_point(v)?),
                "accumulation" => accumulation = Some(parse_point(v)?),
                _ => return Err(Error::ConfigParse(format!("unknown key `{k}`"))),
            }
        }
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::ConfigParse(format!("rate must lie in (0,1), got {rate}")));
        }
        let family = match family.as_deref() {
            Some("ball_moebius") => OrbitFamily::BallMoebius { rate },
            Some("siegel_dilation") => OrbitFamily::SiegelDilation { rate },
            Some("identity") => OrbitFamily::Identity,
            Some(other) => {
                return Err(Error::ConfigParse(format!("unknown family `{other}`")))
            }
            None => return Err(Error::ConfigParse("missing family".into())),
        };
        let base = base.ok_or_else(|| Error::ConfigParse("missing base".into()))?;
        let accumulation = match accumulation {
            Some(a) => a,
            None => match &family {
                OrbitFamily::BallMoebius { .. } => {
                    let mut a = CVec::zeros(base.len());
                    a[0] = cr(1.0);
                    a
                }
                _ => CVec::zeros(base.len()),
            },
        };
        if accumulation.len() != base.len() {
            return Err(Error::DimensionMismatch {
                expected: base.len(),
                got: accumulation.len(),
            });
        }
        Ok(OrbitSpec { base, accumulation, family })
    }

    /// The catalog orbit used throughout: ball Möbius maps pushing the
    /// center toward (1, 0) at rate ½.
    pub fn ball_default() -> OrbitSpec {
        let mut acc = CVec::zeros(2);
        acc[0] = cr(1.0);
        OrbitSpec {
            base: CVec::zeros(2),
            accumulation: acc,
            family: OrbitFamily::BallMoebius { rate: 0.5 },
        }
    }
}

/// Point syntax `re:im,re:im,…` (`:im` optional).
pub fn parse_point(text: &str) -> Result<CVec> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let (re, im) = match part.split_once(':') {
            Some((r, i)) => (r, i),
            None => (part, "0"),
        };
        let re: f64 = re
            .trim()
            .parse()
            .map_err(|_| Error::ConfigParse(format!("bad coordinate `{part}`")))?;
        let im: f64 = im
            .trim()
            .parse()
            .map_err(|_| Error::ConfigParse(format!("bad coordinate `{part}`")))?;
        out.push(Complex64::new(re, im));
    }
    if out.is_empty() {
        return Err(Error::ConfigParse("empty point".into()));
    }
    Ok(CVec::from_vec(out))
}

/// σ_ν = Λ_ν ∘ φ_ν for ν = 1..=ν_max, with Λ_ν the dilatation at q^ν = φ_ν(q).
pub fn pinchuk_scaling_sequence(
    f: &DefiningFunction,
    orbit: &OrbitSpec,
    nu_max: u32,
) -> Result<Vec<HoloMap>> {
    if nu_max > 10_000 {
        return Err(Error::Precondition("ν_max capped at 10^4".into()));
    }
    let mut out = Vec::with_capacity(nu_max as usize);
    for nu in 1..=nu_max {
        let phi = orbit.automorphism(nu)?;
        let q_nu = phi.apply(&orbit.base);
        if f.rho(&q_nu) >= 0.0 {
            return Err(Error::NotInterior(f.rho(&q_nu)));
        }
        let dil = pinchuk_dilatation(f, &q_nu, &Anisotropy::StronglyPseudoconvex)?;
        let sigma = HoloMap::from_affine(&dil.map)
            .compose(&phi)
            .retag(format!("σ_{nu}"));
        out.push(sigma);
    }
    Ok(out)
}

/// Derivative rescaling ω(z) = [dφ(q)]⁻¹ (φ(z) - φ(q)); ω(q) = 0, dω(q) = I.
pub fn frankel_scaling(phi: &HoloMap, q: &CVec) -> Result<HoloMap> {
    let j = phi.jacobian(q);
    let jinv = linalg::inverse(&j, "Frankel scaling Jacobian")?;
    let fq = phi.apply(q);
    let phi1 = phi.clone();
    let phi2 = phi.clone();
    let jinv1 = jinv.clone();
    let jinv2 = jinv.clone();
    let fq1 = fq.clone();
    let fq2 = fq.clone();
    let jmat = j;
    let mut omega = HoloMap::new(
        phi.dim_in(),
        phi.dim_out(),
        format!("frankel({})", phi.tag()),
        move |z: &CVec| &jinv1 * (phi1.apply(z) - &fq1),
        move |z: &CVec| &jinv2 * phi2.jacobian(z),
    );
    if phi.has_inverse() {
        let phi3 = phi.clone();
        omega = omega.with_inverse(move |w: &CVec| {
            phi3.apply_inverse(&(&fq2 + &jmat * w)).unwrap_or_else(|_| fq2.clone())
        });
    }
    // normalization contract
    let w0 = omega.apply(q);
    let dw = omega.jacobian(q);
    let defect = linalg::norm(&w0)
        .max((dw - CMat::identity(omega.dim_in(), omega.dim_in())).norm());
    if defect > 1e-10 {
        return Err(Error::Singular("Frankel normalization drifted"));
    }
    Ok(omega)
}

/// Unit ball of radius r about the origin as a defining function; used by
/// domain sequences.
pub(crate) fn ball_of_radius(d: usize, r: f64) -> DefiningFunction {
    let f = make_catalog_domain(if d == 1 { "disc" } else { "ball" }, d)
        .expect("catalog ball");
    let factors: Vec<Complex64> = (0..d).map(|_| cr(1.0 / r)).collect();
    let squeeze = AffineMap::diagonal(&factors, format!("1/{r} dilation"));
    f.pullback(&HoloMap::from_affine(&squeeze))
}
