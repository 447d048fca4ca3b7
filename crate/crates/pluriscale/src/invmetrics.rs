//! Invariant metrics: closed forms on the model domains, certified sandwich
//! bounds on convex domains, and the boundary-asymptotics harnesses.
//!
//! The Kobayashi metric is computed exactly where a model formula exists
//! (ball, bidisc, half-space product, Siegel domain via the Cayley map). On
//! other convex catalog domains the value is bracketed: a Carathéodory lower
//! bound from supporting half-spaces and circled linear functionals, and a
//! Kobayashi upper bound from the largest flat disc through the point.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{levi_classify, DefiningFunction, LeviClass, LeviOptions};
use crate::linalg::{self, bdot, c, cr, hdot, CVec};
use crate::report::{fit_limit, ConvergenceReport, ConvergenceRow};
use crate::roots::first_root_along;
use crate::scaling::cayley_siegel_to_ball;

/// Ray searches give up beyond this parameter value.
const RAY_MAX: f64 = 64.0;
/// Supporting half-space fan size (golden-angle directions; coordinate axes
/// are appended on top so the model configurations are hit exactly).
const FAN_SIZE: usize = 64;
/// Phase resolution when measuring the largest flat disc.
const PHASES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMethod {
    ClosedForm,
    Sandwich,
}

/// A metric value with its certification interval. Closed forms carry
/// `lower = upper = value`; bound-only results use `f64::INFINITY` for the
/// missing side.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricValue {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: MetricMethod,
}

/// One metric evaluation request; `evaluate` dispatches on the method.
#[derive(Debug, Clone)]
pub struct MetricQuery {
    pub domain: DefiningFunction,
    pub q: CVec,
    pub xi: CVec,
    pub method: MetricMethod,
}

impl MetricQuery {
    pub fn evaluate(&self) -> Result<MetricValue> {
        match self.method {
            MetricMethod::ClosedForm => kobayashi_closed_form(&self.domain, &self.q, &self.xi),
            MetricMethod::Sandwich => metric_sandwich(&self.domain, &self.q, &self.xi),
        }
    }
}

fn check_query(f: &DefiningFunction, q: &CVec, xi: &CVec) -> Result<()> {
    if q.len() != f.dim() || xi.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: q.len().max(xi.len()) });
    }
    let r = f.rho(q);
    if r >= 0.0 {
        return Err(Error::NotInterior(r));
    }
    if linalg::norm(xi) == 0.0 {
        return Err(Error::Precondition("metric direction must be nonzero".into()));
    }
    Ok(())
}

fn closed_form_supported(tag: &str) -> bool {
    matches!(tag, "ball" | "disc" | "bidisc" | "halfspace" | "siegel")
}

/// Whether the catalog domain is invariant under z ↦ e^{iθ}z and bounded,
/// which upgrades every supporting half-space {Re L < R} to the disc bound
/// {|L| < R}.
fn is_bounded_circled(tag: &str) -> bool {
    tag == "ball" || tag == "disc" || tag == "bidisc" || tag.starts_with("egg(")
}

fn ball_metric(q: &CVec, xi: &CVec) -> f64 {
    let s = 1.0 - hdot(q, q).re;
    let mixed = hdot(xi, q).norm_sqr();
    ((hdot(xi, xi).re * s + mixed) / (s * s)).sqrt()
}

/// Exact Kobayashi/Royden metric on the model domains. The Siegel value is
/// the ball value pulled back through the Cayley map.
pub fn kobayashi_closed_form(f: &DefiningFunction, q: &CVec, xi: &CVec) -> Result<MetricValue> {
    check_query(f, q, xi)?;
    let v = match f.tag() {
        "ball" | "disc" => ball_metric(q, xi),
        "bidisc" => (0..2)
            .map(|j| xi[j].norm() / (1.0 - q[j].norm_sqr()))
            .fold(0.0f64, f64::max),
        "halfspace" => xi[0].norm() / (2.0 * q[0].re),
        "siegel" => {
            let cay = cayley_siegel_to_ball(f.dim());
            ball_metric(&cay.apply(q), &(cay.jacobian(q) * xi))
        }
        other => {
            return Err(Error::UnknownDomain(format!(
                "no closed-form metric for `{other}`"
            )))
        }
    };
    Ok(MetricValue { value: v, lower: v, upper: v, method: MetricMethod::ClosedForm })
}

/// Low-discrepancy unit directions on the sphere of C^d: d-1 magnitude
/// angles and d phases driven by the rank-1 lattice with generalized
/// golden-ratio increments, preceded by the 4d signed coordinate axes.
fn support_fan(d: usize) -> Vec<CVec> {
    let mut dirs = Vec::with_capacity(4 * d + FAN_SIZE);
    for j in 0..d {
        for ph in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            let mut v = CVec::zeros(d);
            v[j] = ph;
            dirs.push(v);
        }
    }
    let m = 2 * d - 1;
    // psi solves psi^{m+1} = psi + 1 (m = 1 recovers the golden ratio)
    let mut psi = 1.5f64;
    for _ in 0..64 {
        psi = (1.0 + psi).powf(1.0 / (m as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=m as i32).map(|j| psi.powi(-j)).collect();
    for k in 0..FAN_SIZE {
        let u: Vec<f64> = alphas
            .iter()
            .map(|a| (0.5 + (k + 1) as f64 * a).fract())
            .collect();
        let mut mags = vec![0.0f64; d];
        let mut sin_prod = 1.0;
        for i in 0..d - 1 {
            let a = u[i] * std::f64::consts::FRAC_PI_2;
            mags[i] = sin_prod * a.cos();
            sin_prod *= a.sin();
        }
        mags[d - 1] = sin_prod;
        let v = CVec::from_fn(d, |j, _| {
            Complex64::from_polar(mags[j], 2.0 * std::f64::consts::PI * u[d - 1 + j])
        });
        dirs.push(v);
    }
    dirs
}

/// First boundary parameter along t ↦ q + t·v, bisected then Newton-polished.
fn ray_root(f: &DefiningFunction, q: &CVec, v: &CVec) -> Option<f64> {
    let h = |t: f64| f.rho(&(q + v * cr(t)));
    let mut t = first_root_along(h, 0.0, 0.05, RAY_MAX, 1e-11).ok()?;
    for _ in 0..4 {
        let z = q + v * cr(t);
        let slope = 2.0 * bdot(&f.grad(&z), v).re;
        if slope.abs() < 1e-12 {
            break;
        }
        t -= f.rho(&z) / slope;
    }
    (t.is_finite() && t > 0.0).then_some(t)
}

/// Certified Carathéodory lower bound on a convex domain: the best metric
/// value among supporting half-spaces (and, on bounded circled domains, the
/// sharper supporting functional discs {|L| < R}) over the direction fan.
pub fn caratheodory_halfspace_lower(
    f: &DefiningFunction,
    q: &CVec,
    xi: &CVec,
) -> Result<MetricValue> {
    check_query(f, q, xi)?;
    if !f.is_convex() {
        return Err(Error::Precondition(format!(
            "support bounds need a convex domain; `{}` is not flagged convex",
            f.tag()
        )));
    }
    let circled = is_bounded_circled(f.tag());
    let mut best: Option<f64> = None;
    for v in support_fan(f.dim()) {
        let Some(t) = ray_root(f, q, &v) else { continue };
        let b = q + &v * cr(t);
        let g = f.grad(&b);
        if linalg::norm(&g) < 1e-12 {
            continue;
        }
        let num = bdot(&g, xi).norm();
        let bound = if circled {
            // Omega ⊂ {|L| < R} for L(z) = Σ g_j z_j, R = Re L(b)
            let r = bdot(&g, &b).re;
            let lq2 = bdot(&g, q).norm_sqr();
            if r <= 1e-12 || r * r - lq2 <= 1e-12 * r * r {
                continue;
            }
            r * num / (r * r - lq2)
        } else {
            let denom = 2.0 * bdot(&g, &(q - &b)).re.abs();
            if denom <= 1e-14 {
                continue;
            }
            num / denom
        };
        best = Some(best.map_or(bound, |cur| cur.max(bound)));
    }
    let lower = best.ok_or_else(|| {
        Error::SearchFailed("degenerate support search: no supporting boundary point".into())
    })?;
    Ok(MetricValue { value: lower, lower, upper: f64::INFINITY, method: MetricMethod::Sandwich })
}

/// Kobayashi upper bound from the largest flat disc through q in the complex
/// line of ξ. The sampled minimal boundary distance is shrunk by cos(π/K) so
/// the disc certifiably fits inside the convex domain.
pub fn kobayashi_linear_disc_upper(
    f: &DefiningFunction,
    q: &CVec,
    xi: &CVec,
) -> Result<MetricValue> {
    check_query(f, q, xi)?;
    if !f.is_convex() {
        return Err(Error::Precondition(format!(
            "the inscribed-disc bound needs a convex domain; `{}` is not flagged convex",
            f.tag()
        )));
    }
    let xin = linalg::norm(xi);
    let mut u = xi / cr(xin);
    // canonical phase: the dominant component made real positive, so the
    // bound depends only on the complex line of ξ
    let jstar = (0..u.len())
        .max_by(|&a, &b| u[a].norm().total_cmp(&u[b].norm()))
        .unwrap();
    u *= u[jstar].conj() / cr(u[jstar].norm());
    let mut rmin = f64::INFINITY;
    for k in 0..PHASES {
        let ph = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / PHASES as f64);
        if let Some(t) = ray_root(f, q, &(&u * ph)) {
            rmin = rmin.min(t);
        }
    }
    let upper = if rmin.is_finite() {
        xin / (rmin * (std::f64::consts::PI / PHASES as f64).cos())
    } else {
        // no boundary in the whole complex line: a metrically free direction
        0.0
    };
    Ok(MetricValue { value: upper, lower: 0.0, upper, method: MetricMethod::Sandwich })
}

/// Two-sided bound on convex domains; the reported value is the midpoint.
pub fn metric_sandwich(f: &DefiningFunction, q: &CVec, xi: &CVec) -> Result<MetricValue> {
    let lo = caratheodory_halfspace_lower(f, q, xi)?;
    let up = kobayashi_linear_disc_upper(f, q, xi)?;
    Ok(MetricValue {
        value: 0.5 * (lo.lower + up.upper),
        lower: lo.lower,
        upper: up.upper,
        method: MetricMethod::Sandwich,
    })
}

fn metric_for_harness(f: &DefiningFunction, q: &CVec, xi: &CVec) -> Result<(f64, Option<f64>)> {
    if closed_form_supported(f.tag()) {
        Ok((kobayashi_closed_form(f, q, xi)?.value, None))
    } else {
        let s = metric_sandwich(f, q, xi)?;
        Ok((s.value, Some(s.upper - s.lower)))
    }
}

/// Nearest boundary point by an alternating foot iteration: reposition on the
/// line through q along the outward normal of the current iterate until the
/// displacement is parallel to the normal. Seeds come from the gradient at q
/// and the coordinate-axis rays; two distinct feet at the same distance
/// (within 1e-8) raise an ambiguity error.
pub fn nearest_boundary_point(f: &DefiningFunction, q: &CVec) -> Result<(CVec, f64)> {
    let r0 = f.rho(q);
    if r0 >= 0.0 {
        return Err(Error::NotInterior(r0));
    }
    let d = f.dim();
    let mut seeds: Vec<CVec> = Vec::new();
    let g0 = f.grad(q);
    if linalg::norm(&g0) > 1e-10 {
        seeds.push(g0.map(|z| z.conj()) / cr(linalg::norm(&g0)));
    }
    for j in 0..d {
        for ph in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            let mut v = CVec::zeros(d);
            v[j] = ph;
            seeds.push(v);
        }
    }
    let mut feet: Vec<(CVec, f64)> = Vec::new();
    for dir in &seeds {
        let Some(t) = ray_root(f, q, dir) else { continue };
        let Ok(foot) = settle_foot(f, q, &(q + dir * cr(t))) else { continue };
        if !feet.iter().any(|(p, _)| linalg::norm(&(p - &foot.0)) < 1e-9) {
            feet.push(foot);
        }
    }
    if feet.is_empty() {
        return Err(Error::SearchFailed(
            "no boundary foot found from any seed direction".into(),
        ));
    }
    feet.sort_by(|a, b| a.1.total_cmp(&b.1));
    if feet.len() > 1 && feet[1].1 - feet[0].1 <= 1e-8 * (1.0 + feet[0].1) {
        return Err(Error::SearchFailed(format!(
            "ambiguous nearest boundary point: two feet at distance {:.6e} and {:.6e}",
            feet[0].1, feet[1].1
        )));
    }
    Ok(feet.swap_remove(0))
}

fn settle_foot(f: &DefiningFunction, q: &CVec, start: &CVec) -> Result<(CVec, f64)> {
    let mut p = start.clone();
    let scale = 1.0 + linalg::norm(q);
    for _ in 0..100 {
        let g = f.grad(&p);
        let gn = linalg::norm(&g);
        if gn < 1e-12 {
            return Err(Error::Singular("vanishing gradient in the foot iteration"));
        }
        let u = g.map(|z| z.conj()) / cr(gn);
        let t = ray_root(f, q, &u)
            .ok_or_else(|| Error::SearchFailed("foot line search lost the boundary".into()))?;
        let pn = q + &u * cr(t);
        let moved = linalg::norm(&(&pn - &p));
        p = pn;
        if moved < 1e-13 * (scale + t) {
            return Ok((p, t));
        }
    }
    Err(Error::SearchFailed("nearest-point iteration did not settle".into()))
}

/// Levi form Σ H_jk w_j conj(w_k) of ρ/|∇ρ| at p (real gradient normalized
/// to 1, the normalization the asymptotic statements are phrased in).
fn normalized_levi_value(f: &DefiningFunction, p: &CVec, w: &CVec) -> f64 {
    let h = f.hess(p);
    let val = (w.transpose() * &h * w.conjugate())[(0, 0)].re;
    val / f.real_gradient_norm(p)
}

fn pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// One row of a boundary-approach table.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsRow {
    /// Approach parameter (equals d for rows indexed by distance).
    pub t: f64,
    /// Distance to the boundary at the sample point.
    pub d: f64,
    /// |ξ_N|: Euclidean length of the complex-normal component at the foot.
    pub normal_part: f64,
    /// Normalized Levi form on the tangential component.
    pub levi_tangential: f64,
    pub f_value: f64,
    pub d_f: f64,
    pub sqrt_d_f: f64,
    pub lee_ratio: f64,
    /// upper - lower when F came from a sandwich instead of a closed form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_width: Option<f64>,
}

/// Fixed-column CSV for approach tables.
pub fn asymptotics_csv(rows: &[AsymptoticsRow]) -> String {
    let mut out = String::from("t,d,F,dF,sqrt_dF,lee_ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            r.t, r.d, r.f_value, r.d_f, r.sqrt_d_f, r.lee_ratio
        ));
    }
    out
}

fn decompose_at(f: &DefiningFunction, p: &CVec, xi: &CVec) -> (CVec, CVec) {
    let g = f.grad(p);
    let n = g.map(|z| z.conj()) / cr(linalg::norm(&g));
    let xi_n = &n * hdot(xi, &n);
    let xi_t = xi - &xi_n;
    (xi_n, xi_t)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrahamReport {
    pub boundary_point: Vec<[f64; 2]>,
    pub xi: Vec<[f64; 2]>,
    pub normal_part: f64,
    pub levi_tangential: f64,
    pub rows: Vec<AsymptoticsRow>,
    /// d·F along the approach; target |ξ_N|/2 when ξ is purely normal.
    pub normal_product: ConvergenceReport,
    /// √d·F along the approach; target √L(ξ_T,ξ_T) when ξ is purely
    /// tangential (the products of mixed directions have no finite joint
    /// limit at polynomial rate, so those reports carry no target).
    pub tangential_product: ConvergenceReport,
}

/// Boundary asymptotics of d·F and √d·F along the inner normal at a strongly
/// pseudoconvex boundary point.
pub fn graham_asymptotics(
    f: &DefiningFunction,
    p: &CVec,
    xi: &CVec,
    t_list: &[f64],
    tolerance: f64,
) -> Result<GrahamReport> {
    if t_list.is_empty() {
        return Err(Error::Precondition("empty approach grid".into()));
    }
    if linalg::norm(xi) == 0.0 {
        return Err(Error::Precondition("metric direction must be nonzero".into()));
    }
    let levi = levi_classify(f, p, &LeviOptions { normalize_gradient: true, ..Default::default() })?;
    if levi.classification != LeviClass::StronglyPseudoconvex {
        return Err(Error::Precondition(format!(
            "approach point is {:?}, not strongly pseudoconvex",
            levi.classification
        )));
    }
    let g = f.grad(p);
    let nu = g.map(|z| z.conj()) / cr(linalg::norm(&g));
    let (xi_n, xi_t) = decompose_at(f, p, xi);
    let normal_part = linalg::norm(&xi_n);
    let levi_t = normalized_levi_value(f, p, &xi_t);
    let xin = linalg::norm(xi);

    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let q = p - &nu * cr(t);
        if f.rho(&q) >= 0.0 {
            return Err(Error::Precondition(format!(
                "approach parameter t = {t} leaves the domain"
            )));
        }
        let (_, dist) = nearest_boundary_point(f, &q)?;
        let (fv, width) = metric_for_harness(f, &q, xi)?;
        let dist_f = dist * fv;
        rows.push(AsymptoticsRow {
            t,
            d: dist,
            normal_part,
            levi_tangential: levi_t,
            f_value: fv,
            d_f: dist_f,
            sqrt_d_f: dist.sqrt() * fv,
            lee_ratio: ((normal_part / (2.0 * dist)).powi(2) + levi_t / dist) / (fv * fv),
            bound_width: width,
        });
    }

    let df: Vec<f64> = rows.iter().map(|r| r.d_f).collect();
    let sdf: Vec<f64> = rows.iter().map(|r| r.sqrt_d_f).collect();
    let (df_fit, df_note) = fit_limit(t_list, &df);
    let (sdf_fit, sdf_note) = fit_limit(t_list, &sdf);
    let as_rows = |vals: &[f64]| -> Vec<ConvergenceRow> {
        vals.iter()
            .enumerate()
            .map(|(i, &v)| ConvergenceRow { index: i + 1, deviation_a: v, deviation_b: None })
            .collect()
    };
    let pure_normal = linalg::norm(&xi_t) <= 1e-10 * xin;
    let pure_tangential = normal_part <= 1e-10 * xin;
    let normal_product = ConvergenceReport::new(
        "d·F along the inner normal",
        as_rows(&df),
        df_fit,
        pure_normal.then_some(normal_part / 2.0),
        tolerance,
    )
    .with_note(df_note);
    let tangential_product = ConvergenceReport::new(
        "√d·F along the inner normal",
        as_rows(&sdf),
        sdf_fit,
        pure_tangential.then_some(levi_t.sqrt()),
        tolerance,
    )
    .with_note(sdf_note);

    Ok(GrahamReport {
        boundary_point: pairs(p),
        xi: pairs(xi),
        normal_part,
        levi_tangential: levi_t,
        rows,
        normal_product,
        tangential_product,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LeeReport {
    pub xi: Vec<[f64; 2]>,
    pub rows: Vec<AsymptoticsRow>,
    /// The combined normal/tangential ratio per sample; target 1.
    pub ratio: ConvergenceReport,
}

/// Ratio ((|ξ_N|/2d)² + L(ξ_T,ξ_T)/d)·F⁻² at each sample point, with the
/// decomposition taken at the nearest boundary foot of the sample. The
/// reference point p fixes where strong pseudoconvexity is certified.
pub fn lee_ratio(
    f: &DefiningFunction,
    p: &CVec,
    xi: &CVec,
    q_list: &[CVec],
    tolerance: f64,
) -> Result<LeeReport> {
    if q_list.is_empty() {
        return Err(Error::Precondition("empty sample list".into()));
    }
    if linalg::norm(xi) == 0.0 {
        return Err(Error::Precondition("metric direction must be nonzero".into()));
    }
    let levi = levi_classify(f, p, &LeviOptions { normalize_gradient: true, ..Default::default() })?;
    if levi.classification != LeviClass::StronglyPseudoconvex {
        return Err(Error::Precondition(format!(
            "reference point is {:?}, not strongly pseudoconvex",
            levi.classification
        )));
    }
    let mut rows = Vec::with_capacity(q_list.len());
    for q in q_list {
        let (foot, dist) = nearest_boundary_point(f, q)?;
        let (xi_n, xi_t) = decompose_at(f, &foot, xi);
        let normal_part = linalg::norm(&xi_n);
        let levi_t = normalized_levi_value(f, &foot, &xi_t);
        let (fv, width) = metric_for_harness(f, q, xi)?;
        let ratio = ((normal_part / (2.0 * dist)).powi(2) + levi_t / dist) / (fv * fv);
        rows.push(AsymptoticsRow {
            t: dist,
            d: dist,
            normal_part,
            levi_tangential: levi_t,
            f_value: fv,
            d_f: dist * fv,
            sqrt_d_f: dist.sqrt() * fv,
            lee_ratio: ratio,
            bound_width: width,
        });
    }
    let conv_rows: Vec<ConvergenceRow> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| ConvergenceRow { index: i + 1, deviation_a: r.lee_ratio, deviation_b: None })
        .collect();
    let ratio = ConvergenceReport::new(
        "normal/tangential ratio against F²",
        conv_rows,
        None,
        Some(1.0),
        tolerance,
    )
    .with_note("rows follow the order of q_list; the verdict reads the last row");
    Ok(LeeReport { xi: pairs(xi), rows, ratio })
}
