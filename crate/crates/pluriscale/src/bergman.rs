//! Bergman kernel, metric, and holomorphic sectional curvature on the
//! complete Reinhardt catalog domains, via monomial orthonormalization.
//!
//! Monomials are orthogonal on Reinhardt domains, so the kernel truncates to
//! K(z,w) = Σ_α z^α conj(w)^α / c_α over a box of multi-indices. The squared
//! norms c_α reduce to one-dimensional radial integrals (polar coordinates in
//! each variable), evaluated by Gauss-Legendre quadrature with node doubling.
//! Curvature comes from exact term-wise differentiation of the series:
//! fourth-order finite differences of log K would amplify noise precisely
//! where the boundary limit is measured.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{levi_classify, make_catalog_domain, DefiningFunction, LeviClass, LeviOptions};
use crate::linalg::{self, cr, CMat, CVec, HermitianForm, ZERO};
use crate::report::{fit_limit, ConvergenceReport, ConvergenceRow};
use crate::scaling::ball_of_radius;

/// Relative tail budget for certified kernel evaluations.
const TAIL_TOL: f64 = 1e-10;
/// Tail budget for metric/curvature moment sums. Much looser than the kernel
/// rule: the log-derivative contractions cancel the leading tail effects, and
/// accuracy is gauged by the truncation-sensitivity check instead.
const MOMENT_TAIL_TOL: f64 = 5e-2;
/// Default |S_N - S_{N-4}| gate for accepted curvature reports.
pub const CURVATURE_SENS_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureSpec {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { initial_nodes: 32, max_nodes: 4096, rel_tol: 1e-12 }
    }
}

/// Gauss-Legendre nodes and weights on [0, 1], by Newton iteration on the
/// Legendre recurrence.
pub(crate) fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        xs[i] = 0.5 * (x + 1.0);
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[derive(Default)]
struct RuleCache(HashMap<usize, (Vec<f64>, Vec<f64>)>);

impl RuleCache {
    fn integrate(&mut self, f: &dyn Fn(f64) -> f64, hi: f64, n: usize) -> f64 {
        let (xs, ws) = self.0.entry(n).or_insert_with(|| gauss_legendre_unit(n));
        xs.iter().zip(ws.iter()).map(|(&x, &w)| hi * w * f(hi * x)).sum()
    }

    fn adaptive(&mut self, f: &dyn Fn(f64) -> f64, hi: f64, quad: &QuadratureSpec) -> Result<f64> {
        let mut n = quad.initial_nodes;
        let mut prev = self.integrate(f, hi, n);
        while n * 2 <= quad.max_nodes {
            n *= 2;
            let next = self.integrate(f, hi, n);
            if (next - prev).abs() <= quad.rel_tol * next.abs().max(1e-300) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::QuadratureUnstable((prev).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reinhardt {
    Disc,
    Bidisc,
    /// egg(k); k = 1 is the ball in C².
    Egg(u32),
}

fn classify_tag(tag: &str) -> Result<(Reinhardt, usize)> {
    match tag {
        "disc" => Ok((Reinhardt::Disc, 1)),
        "ball" => Ok((Reinhardt::Egg(1), 2)),
        "bidisc" => Ok((Reinhardt::Bidisc, 2)),
        t => {
            if let Some(body) = t.strip_prefix("egg(").and_then(|s| s.strip_suffix(')')) {
                let k: u32 = body
                    .parse()
                    .map_err(|_| Error::UnknownDomain(format!("bad egg exponent in `{t}`")))?;
                if k == 0 {
                    return Err(Error::UnknownDomain("egg exponent must be positive".into()));
                }
                Ok((Reinhardt::Egg(k), 2))
            } else {
                Err(Error::UnknownDomain(format!(
                    "`{t}` is not a complete Reinhardt catalog domain"
                )))
            }
        }
    }
}

/// Truncated monomial orthogonal system: all α with |α|_∞ ≤ n_trunc and the
/// squared norms c_α = ‖z^α‖²_{L²(Ω)}.
#[derive(Debug, Clone)]
pub struct MonomialKernel {
    domain: DefiningFunction,
    tag: String,
    kind: Reinhardt,
    radius: f64,
    n_trunc: u32,
    alphas: Vec<Vec<u32>>,
    norms: Vec<f64>,
    quad: QuadratureSpec,
}

impl MonomialKernel {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn n_trunc(&self) -> u32 {
        self.n_trunc
    }

    pub fn domain(&self) -> &DefiningFunction {
        &self.domain
    }

    pub fn alphas(&self) -> &[Vec<u32>] {
        &self.alphas
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// ∫ 1 dμ, the squared norm of the constant monomial.
    pub fn volume(&self) -> f64 {
        self.norms[0]
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }
}

fn alpha_box(d: usize, n: u32) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|base| {
                (0..=n).map(move |a| {
                    let mut v = base.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    out
}

/// Squared monomial norms on the unit catalog domain.
pub fn monomial_norms(tag: &str, n_trunc: u32, quad: &QuadratureSpec) -> Result<MonomialKernel> {
    monomial_norms_dilated(tag, n_trunc, quad, 1.0)
}

/// Same, on the dilated copy radius·Ω; the radial integrals run to the
/// dilated extent directly rather than through the scaling law, so the law
/// itself stays testable.
pub fn monomial_norms_dilated(
    tag: &str,
    n_trunc: u32,
    quad: &QuadratureSpec,
    radius: f64,
) -> Result<MonomialKernel> {
    if n_trunc > 64 {
        return Err(Error::Precondition(format!(
            "monomial truncation is capped at 64, got {n_trunc}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Precondition("dilation radius must be positive".into()));
    }
    let (kind, d) = classify_tag(tag)?;
    let alphas = alpha_box(d, n_trunc);
    let mut rules = RuleCache::default();
    let two_pi = 2.0 * PI;
    let mut norms = Vec::with_capacity(alphas.len());
    for alpha in &alphas {
        let c = match kind {
            Reinhardt::Disc => {
                let p = (2 * alpha[0] + 1) as i32;
                two_pi * rules.adaptive(&|r: f64| r.powi(p), radius, quad)?
            }
            Reinhardt::Bidisc => {
                let mut c = 1.0;
                for j in 0..2 {
                    let p = (2 * alpha[j] + 1) as i32;
                    c *= two_pi * rules.adaptive(&|r: f64| r.powi(p), radius, quad)?;
                }
                c
            }
            Reinhardt::Egg(k) => {
                // inner r_0 integral closed: region r_0² + (r_1 R^{-1})^{2k} R² < R²
                let e0 = (alpha[0] + 1) as i32;
                let p1 = (2 * alpha[1] + 1) as i32;
                let kk = (2 * k) as i32;
                let pref = two_pi * two_pi * radius.powi(2 * e0)
                    / (2.0 * (alpha[0] + 1) as f64);
                pref
                    * rules.adaptive(
                        &|r: f64| (1.0 - (r / radius).powi(kk)).powi(e0) * r.powi(p1),
                        radius,
                        quad,
                    )?
            }
        };
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::QuadratureUnstable(c));
        }
        norms.push(c);
    }
    let domain = if (radius - 1.0).abs() < 1e-15 {
        make_catalog_domain(tag, d)?
    } else {
        match kind {
            Reinhardt::Disc => ball_of_radius(1, radius),
            _ => {
                return Err(Error::Precondition(
                    "dilated norms are implemented for the disc family".into(),
                ))
            }
        }
    };
    let tag_str =
        if (radius - 1.0).abs() < 1e-15 { tag.to_string() } else { format!("{tag}·{radius}") };
    Ok(MonomialKernel {
        domain,
        tag: tag_str,
        kind,
        radius,
        n_trunc,
        alphas,
        norms,
        quad: *quad,
    })
}

fn power_table(v: &CVec, n: u32) -> Vec<Vec<Complex64>> {
    v.iter()
        .map(|&z| {
            let mut col = Vec::with_capacity(n as usize + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            col.push(acc);
            for _ in 0..n {
                acc *= z;
                col.push(acc);
            }
            col
        })
        .collect()
}

struct SeriesEval {
    value: Complex64,
    /// Σ |z^α w^α|/c_α over the box, the certified mass.
    mass: f64,
    shell_prev: f64,
    shell_last: f64,
}

fn eval_series(kern: &MonomialKernel, n_filter: u32, z: &CVec, w: &CVec) -> SeriesEval {
    let pz = power_table(z, n_filter);
    let pw = power_table(&w.map(|x| x.conj()), n_filter);
    let mut value = ZERO;
    let mut mass = 0.0;
    let mut shell_prev = 0.0;
    let mut shell_last = 0.0;
    for (alpha, &c) in kern.alphas.iter().zip(&kern.norms) {
        let top = *alpha.iter().max().unwrap();
        if top > n_filter {
            continue;
        }
        let mut term = Complex64::new(1.0 / c, 0.0);
        for (j, &a) in alpha.iter().enumerate() {
            term *= pz[j][a as usize] * pw[j][a as usize];
        }
        value += term;
        let m = term.norm();
        mass += m;
        if top == n_filter {
            shell_last += m;
        } else if top + 1 == n_filter {
            shell_prev += m;
        }
    }
    SeriesEval { value, mass, shell_prev, shell_last }
}

/// Geometric tail estimate from the outermost index shells, relative to the
/// absolute mass of the truncated series.
fn relative_tail(ev: &SeriesEval) -> Result<f64> {
    if ev.shell_last == 0.0 {
        return Ok(0.0);
    }
    let gamma = ev.shell_last / ev.shell_prev.max(1e-300);
    if gamma >= 0.95 {
        return Err(Error::TruncationInsufficient(format!(
            "index shells are not decaying (ratio {gamma:.3}); point too close to the boundary \
             for this truncation"
        )));
    }
    Ok(ev.shell_last * gamma / (1.0 - gamma) / ev.mass.max(1e-300))
}

fn check_point(kern: &MonomialKernel, z: &CVec) -> Result<()> {
    if z.len() != kern.dim() {
        return Err(Error::DimensionMismatch { expected: kern.dim(), got: z.len() });
    }
    let r = kern.domain.rho(z);
    if r >= 0.0 {
        return Err(Error::NotInterior(r));
    }
    Ok(())
}

/// Truncated kernel K(z,w) = Σ_α z^α conj(w)^α / c_α, certified to relative
/// tail 1e-10; Hermitian symmetry holds exactly by construction.
pub fn bergman_kernel(kern: &MonomialKernel, z: &CVec, w: &CVec) -> Result<Complex64> {
    check_point(kern, z)?;
    check_point(kern, w)?;
    let ev = eval_series(kern, kern.n_trunc, z, w);
    let tail = relative_tail(&ev)?;
    if tail > TAIL_TOL {
        return Err(Error::TruncationInsufficient(format!(
            "estimated relative series tail {tail:.3e} exceeds {TAIL_TOL:.1e} at this point"
        )));
    }
    Ok(ev.value)
}

fn multi_orders(d: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; d]];
    for i in 0..d {
        let mut v = vec![0u32; d];
        v[i] = 1;
        out.push(v);
    }
    for i in 0..d {
        for k in i..d {
            let mut v = vec![0u32; d];
            v[i] += 1;
            v[k] += 1;
            out.push(v);
        }
    }
    out
}

fn esum(d: usize, slots: &[usize]) -> Vec<u32> {
    let mut v = vec![0u32; d];
    for &s in slots {
        v[s] += 1;
    }
    v
}

type MomentTable = HashMap<(Vec<u32>, Vec<u32>), Complex64>;

/// Mixed moment sums T[m][n] = ∂^m_z ∂^n_z̄ K(z, z̄) at q, for all multi-orders
/// with |m|, |n| ≤ 2, by exact term-wise differentiation.
fn moment_table(kern: &MonomialKernel, n_filter: u32, q: &CVec) -> Result<MomentTable> {
    let d = kern.dim();
    let pows = power_table(q, n_filter);
    let pows_c = power_table(&q.map(|x| x.conj()), n_filter);
    // ffpow[j][m][a] = a(a-1)...(a-m+1) q_j^{a-m}
    let ff_of = |tbl: &[Vec<Complex64>], j: usize, m: usize, a: usize| -> Complex64 {
        if a < m {
            ZERO
        } else {
            let ff: f64 = (0..m).map(|i| (a - i) as f64).product();
            tbl[j][a - m] * cr(ff)
        }
    };
    let orders = multi_orders(d);
    let mut table: MomentTable = HashMap::new();
    for m in &orders {
        for n in &orders {
            table.insert((m.clone(), n.clone()), ZERO);
        }
    }
    // mass bookkeeping rides on the plain kernel series
    let ev = eval_series(kern, n_filter, q, q);
    let tail = relative_tail(&ev)?;
    if tail > MOMENT_TAIL_TOL {
        return Err(Error::TruncationInsufficient(format!(
            "estimated relative series tail {tail:.3e} exceeds {MOMENT_TAIL_TOL:.1e}; \
             moment sums are unreliable here"
        )));
    }
    for (alpha, &c) in kern.alphas.iter().zip(&kern.norms) {
        if alpha.iter().max().copied().unwrap() > n_filter {
            continue;
        }
        let invc = cr(1.0 / c);
        let hol: Vec<Complex64> = orders
            .iter()
            .map(|m| {
                let mut p = Complex64::new(1.0, 0.0);
                for j in 0..d {
                    p *= ff_of(&pows, j, m[j] as usize, alpha[j] as usize);
                }
                p
            })
            .collect();
        let anti: Vec<Complex64> = orders
            .iter()
            .map(|n| {
                let mut p = Complex64::new(1.0, 0.0);
                for j in 0..d {
                    p *= ff_of(&pows_c, j, n[j] as usize, alpha[j] as usize);
                }
                p
            })
            .collect();
        for (mi, m) in orders.iter().enumerate() {
            if hol[mi] == ZERO {
                continue;
            }
            for (ni, n) in orders.iter().enumerate() {
                if anti[ni] == ZERO {
                    continue;
                }
                *table.get_mut(&(m.clone(), n.clone())).unwrap() += hol[mi] * anti[ni] * invc;
            }
        }
    }
    Ok(table)
}

struct LogDerivatives {
    d: usize,
    table: MomentTable,
    k0: f64,
}

impl LogDerivatives {
    fn new(kern: &MonomialKernel, n_filter: u32, q: &CVec) -> Result<LogDerivatives> {
        let table = moment_table(kern, n_filter, q)?;
        let d = kern.dim();
        let k0 = table[&(vec![0; d], vec![0; d])].re;
        if !(k0 > 0.0) {
            return Err(Error::TruncationInsufficient(format!(
                "kernel diagonal value {k0:.3e} is not positive"
            )));
        }
        Ok(LogDerivatives { d, table, k0 })
    }

    fn mom(&self, h: &[usize], a: &[usize]) -> Complex64 {
        self.table[&(esum(self.d, h), esum(self.d, a))]
    }

    /// g_{kl̄} = ∂_k ∂̄_l log K.
    fn metric_entry(&self, k: usize, l: usize) -> Complex64 {
        let f = cr(self.k0);
        (f * self.mom(&[k], &[l]) - self.mom(&[k], &[]) * self.mom(&[], &[l])) / (f * f)
    }

    /// ∂_i ∂_k ∂̄_q log K by the three-slot partition formula.
    fn third(&self, i: usize, k: usize, q: usize) -> Complex64 {
        let f = self.k0;
        let f1 = self.mom(&[i], &[]);
        let f2 = self.mom(&[k], &[]);
        let f3 = self.mom(&[], &[q]);
        let f12 = self.mom(&[i, k], &[]);
        let f13 = self.mom(&[i], &[q]);
        let f23 = self.mom(&[k], &[q]);
        let f123 = self.mom(&[i, k], &[q]);
        f123 / cr(f) - (f12 * f3 + f13 * f2 + f23 * f1) / cr(f * f)
            + f1 * f2 * f3 * cr(2.0 / (f * f * f))
    }

    /// ∂_i ∂_k ∂̄_j ∂̄_l log K by the four-slot partition formula.
    fn fourth(&self, i: usize, k: usize, j: usize, l: usize) -> Complex64 {
        let f = self.k0;
        let f1 = self.mom(&[i], &[]);
        let f2 = self.mom(&[k], &[]);
        let f3 = self.mom(&[], &[j]);
        let f4 = self.mom(&[], &[l]);
        let f12 = self.mom(&[i, k], &[]);
        let f13 = self.mom(&[i], &[j]);
        let f14 = self.mom(&[i], &[l]);
        let f23 = self.mom(&[k], &[j]);
        let f24 = self.mom(&[k], &[l]);
        let f34 = self.mom(&[], &[j, l]);
        let f123 = self.mom(&[i, k], &[j]);
        let f124 = self.mom(&[i, k], &[l]);
        let f134 = self.mom(&[i], &[j, l]);
        let f234 = self.mom(&[k], &[j, l]);
        let f1234 = self.mom(&[i, k], &[j, l]);
        f1234 / cr(f)
            - (f123 * f4 + f124 * f3 + f134 * f2 + f234 * f1 + f12 * f34 + f13 * f24 + f14 * f23)
                / cr(f * f)
            + (f12 * f3 * f4
                + f13 * f2 * f4
                + f14 * f2 * f3
                + f23 * f1 * f4
                + f24 * f1 * f3
                + f34 * f1 * f2)
                * cr(2.0 / (f * f * f))
            - f1 * f2 * f3 * f4 * cr(6.0 / (f * f * f * f))
    }

    fn metric_matrix(&self) -> CMat {
        CMat::from_fn(self.d, self.d, |k, l| self.metric_entry(k, l))
    }
}

/// Bergman metric tensor β_{jk} = ∂²log K / ∂z_j ∂z̄_k at q, positive definite
/// on success.
pub fn bergman_metric(kern: &MonomialKernel, q: &CVec) -> Result<HermitianForm> {
    check_point(kern, q)?;
    let ld = LogDerivatives::new(kern, kern.n_trunc, q)?;
    let form = HermitianForm::from_matrix(&ld.metric_matrix(), 1e-10)?;
    if !form.positive_definite {
        return Err(Error::TruncationInsufficient(format!(
            "metric tensor lost positive definiteness (min eigenvalue {:.3e}); \
             increase the truncation",
            form.eigenvalues[0]
        )));
    }
    Ok(form)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub point: Vec<[f64; 2]>,
    pub xi: Vec<[f64; 2]>,
    /// β(ξ,ξ) at the full truncation.
    pub metric_value: f64,
    /// Holomorphic sectional curvature S(q,ξ).
    pub curvature: f64,
    pub n_trunc: u32,
    /// |S_N - S_{N-4}|, the truncation-sensitivity gauge.
    pub sensitivity: f64,
}

fn curvature_at(kern: &MonomialKernel, n_filter: u32, q: &CVec, xi: &CVec) -> Result<(f64, f64)> {
    let ld = LogDerivatives::new(kern, n_filter, q)?;
    let d = ld.d;
    let gmat = ld.metric_matrix();
    let beta = (xi.transpose() * &gmat * xi.conjugate())[(0, 0)].re;
    if !(beta > 0.0) {
        return Err(Error::TruncationInsufficient(format!(
            "β(ξ,ξ) = {beta:.3e} is not positive at this truncation"
        )));
    }
    let ginv = linalg::inverse(&gmat, "bergman metric tensor")?;
    let mut a = CVec::zeros(d);
    for qi in 0..d {
        for i in 0..d {
            for k in 0..d {
                a[qi] += ld.third(i, k, qi) * xi[i] * xi[k];
            }
        }
    }
    let b = a.conjugate();
    let corr = (b.adjoint() * &ginv * &b)[(0, 0)].re;
    let mut p4 = ZERO;
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                for l in 0..d {
                    p4 += ld.fourth(i, k, j, l) * xi[i] * xi[k] * xi[j].conj() * xi[l].conj();
                }
            }
        }
    }
    let s = 2.0 * (corr - p4.re) / (beta * beta);
    Ok((beta, s))
}

/// Holomorphic sectional curvature of the Bergman metric from the Kähler
/// curvature tensor of log K, contracted on ξ. Sign convention pinned by the
/// disc: S ≡ -2 there. A report is only returned when the value is stable
/// under dropping the outermost four index shells.
pub fn sectional_curvature(
    kern: &MonomialKernel,
    q: &CVec,
    xi: &CVec,
    sens_tol: f64,
) -> Result<CurvatureReport> {
    check_point(kern, q)?;
    if linalg::norm(xi) == 0.0 {
        return Err(Error::Precondition("curvature direction must be nonzero".into()));
    }
    if xi.len() != kern.dim() {
        return Err(Error::DimensionMismatch { expected: kern.dim(), got: xi.len() });
    }
    if kern.n_trunc < 12 {
        return Err(Error::Precondition(
            "curvature needs n_trunc ≥ 12 for the sensitivity check".into(),
        ));
    }
    let (beta, s_full) = curvature_at(kern, kern.n_trunc, q, xi)?;
    let (_, s_drop) = curvature_at(kern, kern.n_trunc - 4, q, xi)?;
    let sensitivity = (s_full - s_drop).abs();
    if sensitivity > sens_tol {
        return Err(Error::TruncationInsufficient(format!(
            "curvature sensitivity |S_N - S_{{N-4}}| = {sensitivity:.3e} exceeds {sens_tol:.1e}"
        )));
    }
    Ok(CurvatureReport {
        point: q.iter().map(|z| [z.re, z.im]).collect(),
        xi: xi.iter().map(|z| [z.re, z.im]).collect(),
        metric_value: beta,
        curvature: s_full,
        n_trunc: kern.n_trunc,
        sensitivity,
    })
}

/// Boundary behavior of the sectional curvature along the inner normal at a
/// strongly pseudoconvex point; the limit is -4/(d+1) in dimension d. Rows
/// whose truncation check fails are dropped and noted, not silently kept.
pub fn klembeck_harness(
    tag: &str,
    p: &CVec,
    xi: &CVec,
    t_list: &[f64],
    n_trunc: u32,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    if t_list.is_empty() {
        return Err(Error::Precondition("empty approach grid".into()));
    }
    let kern = monomial_norms(tag, n_trunc, &QuadratureSpec::default())?;
    let f = kern.domain().clone();
    let levi =
        levi_classify(&f, p, &LeviOptions { normalize_gradient: true, ..Default::default() })?;
    if levi.classification != LeviClass::StronglyPseudoconvex {
        return Err(Error::Precondition(format!(
            "approach point is {:?}, not strongly pseudoconvex",
            levi.classification
        )));
    }
    let g = f.grad(p);
    let nu = g.map(|z| z.conj()) / cr(linalg::norm(&g));
    let mut kept_t = Vec::new();
    let mut kept_s = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for &t in t_list {
        let q = p - &nu * cr(t);
        if f.rho(&q) >= 0.0 {
            return Err(Error::Precondition(format!(
                "approach parameter t = {t} leaves the domain"
            )));
        }
        match sectional_curvature(&kern, &q, xi, CURVATURE_SENS_TOL) {
            Ok(rep) => {
                rows.push(ConvergenceRow {
                    index: rows.len() + 1,
                    deviation_a: rep.curvature,
                    deviation_b: Some(rep.sensitivity),
                });
                kept_t.push(t);
                kept_s.push(rep.curvature);
            }
            Err(Error::TruncationInsufficient(msg)) => {
                dropped.push(format!("t = {t} dropped: {msg}"));
            }
            Err(e) => return Err(e),
        }
    }
    if kept_s.is_empty() {
        return Err(Error::TruncationInsufficient(
            "every approach row failed the truncation check".into(),
        ));
    }
    let (fitted, note) = fit_limit(&kept_t, &kept_s);
    let target = -4.0 / (f.dim() as f64 + 1.0);
    let mut report = ConvergenceReport::new(
        "sectional curvature along the inner normal",
        rows,
        fitted,
        Some(target),
        tolerance,
    )
    .with_note(note)
    .with_note("deviation_a = S(q_t, ξ); deviation_b = truncation sensitivity");
    for msg in dropped {
        report = report.with_note(msg);
    }
    Ok(report)
}

/// Worst reproducing defect over the truncated basis at z. Angular integrals
/// are exact by Reinhardt symmetry, so the reproducing integral of K(z,·)
/// against z^α collapses to z^α · c'_α/c_α with c'_α an independent
/// fixed-order radial quadrature; the defect measures |c'_α/c_α - 1|·|z^α|.
pub fn reproducing_defect(kern: &MonomialKernel, z: &CVec) -> Result<f64> {
    check_point(kern, z)?;
    let needed = match kern.kind {
        Reinhardt::Disc | Reinhardt::Bidisc => kern.n_trunc as usize + 2,
        Reinhardt::Egg(k) => (k as usize + 1) * (kern.n_trunc as usize + 1) + 2,
    };
    let n_indep = (needed + 17).next_power_of_two().max(128);
    let mut rules = RuleCache::default();
    let two_pi = 2.0 * PI;
    let radius = kern.radius;
    let pows = power_table(z, kern.n_trunc);
    let mut worst = 0.0f64;
    for (alpha, &c) in kern.alphas.iter().zip(&kern.norms) {
        let c2 = match kern.kind {
            Reinhardt::Disc => {
                let p = (2 * alpha[0] + 1) as i32;
                two_pi * rules.integrate(&|r: f64| r.powi(p), radius, n_indep)
            }
            Reinhardt::Bidisc => {
                let mut v = 1.0;
                for j in 0..2 {
                    let p = (2 * alpha[j] + 1) as i32;
                    v *= two_pi * rules.integrate(&|r: f64| r.powi(p), radius, n_indep);
                }
                v
            }
            Reinhardt::Egg(k) => {
                let e0 = (alpha[0] + 1) as i32;
                let p1 = (2 * alpha[1] + 1) as i32;
                let kk = (2 * k) as i32;
                let pref =
                    two_pi * two_pi * radius.powi(2 * e0) / (2.0 * (alpha[0] + 1) as f64);
                pref * rules.integrate(
                    &|r: f64| (1.0 - (r / radius).powi(kk)).powi(e0) * r.powi(p1),
                    radius,
                    n_indep,
                )
            }
        };
        let mono: Complex64 =
            alpha.iter().enumerate().map(|(j, &a)| pows[j][a as usize]).product();
        worst = worst.max(mono.norm() * (c2 / c - 1.0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cvec, rvec};
    use approx::assert_relative_eq;
    use statrs::function::beta::beta;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn gauss_legendre_rule_is_exact_on_polynomials() {
        let mut rules = RuleCache::default();
        for k in [0, 5, 17, 40, 63] {
            let exact = 1.0 / (k as f64 + 1.0);
            let got = rules.integrate(&|r: f64| r.powi(k), 1.0, 32);
            assert_relative_eq!(got, exact, max_relative = 1e-14);
        }
        // and correct scaling of the upper limit
        let got = rules.integrate(&|r: f64| r * r, 2.0, 32);
        assert_relative_eq!(got, 8.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn disc_norms_match_the_radial_oracle() {
        let kern = monomial_norms("disc", 48, &QuadratureSpec::default()).unwrap();
        for (alpha, &c) in kern.alphas().iter().zip(kern.norms()) {
            let expect = PI / (alpha[0] as f64 + 1.0);
            assert_relative_eq!(c, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn ball_norms_match_the_factorial_oracle() {
        let kern = monomial_norms("ball", 16, &QuadratureSpec::default()).unwrap();
        for (alpha, &c) in kern.alphas().iter().zip(kern.norms()) {
            let (a0, a1) = (alpha[0] as f64, alpha[1] as f64);
            let ln_expect = 2.0 * PI.ln() + ln_gamma(a0 + 1.0) + ln_gamma(a1 + 1.0)
                - ln_gamma(a0 + a1 + 3.0);
            assert_relative_eq!(c.ln(), ln_expect, epsilon = 1e-11);
        }
    }

    #[test]
    fn egg_norms_match_the_beta_oracle() {
        let k = 2.0;
        let kern = monomial_norms("egg(2)", 12, &QuadratureSpec::default()).unwrap();
        for (alpha, &c) in kern.alphas().iter().zip(kern.norms()) {
            let (a0, a1) = (alpha[0] as f64, alpha[1] as f64);
            let expect = PI * PI * beta(a0 + 2.0, (a1 + 1.0) / k) / (k * (a0 + 1.0));
            assert_relative_eq!(c, expect, max_relative = 1e-11);
        }
    }

    #[test]
    fn bidisc_norms_are_disc_products() {
        let kern = monomial_norms("bidisc", 10, &QuadratureSpec::default()).unwrap();
        for (alpha, &c) in kern.alphas().iter().zip(kern.norms()) {
            let expect = PI * PI / ((alpha[0] as f64 + 1.0) * (alpha[1] as f64 + 1.0));
            assert_relative_eq!(c, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn non_reinhardt_tags_are_rejected() {
        assert!(matches!(
            monomial_norms("siegel", 8, &QuadratureSpec::default()),
            Err(Error::UnknownDomain(_))
        ));
        assert!(monomial_norms("ball", 65, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn kernel_center_values() {
        let quad = QuadratureSpec::default();
        let disc = monomial_norms("disc", 48, &quad).unwrap();
        let k0 = bergman_kernel(&disc, &rvec(&[0.0]), &rvec(&[0.0])).unwrap();
        assert!((k0.re - 1.0 / PI).abs() < 1e-10 && k0.im == 0.0);

        let ball = monomial_norms("ball", 32, &quad).unwrap();
        let k0 = bergman_kernel(&ball, &rvec(&[0.0, 0.0]), &rvec(&[0.0, 0.0])).unwrap();
        assert!((k0.re - 2.0 / (PI * PI)).abs() < 1e-10);

        let bidisc = monomial_norms("bidisc", 32, &quad).unwrap();
        let k0 = bergman_kernel(&bidisc, &rvec(&[0.0, 0.0]), &rvec(&[0.0, 0.0])).unwrap();
        assert!((k0.re - 1.0 / (PI * PI)).abs() < 1e-10);
    }

    #[test]
    fn disc_kernel_matches_the_geometric_series() {
        let kern = monomial_norms("disc", 48, &QuadratureSpec::default()).unwrap();
        let k = bergman_kernel(&kern, &rvec(&[0.5]), &rvec(&[0.5])).unwrap();
        let expect = 1.0 / (PI * 0.75 * 0.75);
        assert!((k.re - expect).abs() < 1e-10, "{} vs {expect}", k.re);
    }

    #[test]
    fn kernel_is_exactly_hermitian() {
        let kern = monomial_norms("ball", 24, &QuadratureSpec::default()).unwrap();
        let z = cvec(&[(0.31, -0.12), (0.05, 0.4)]);
        let w = cvec(&[(-0.2, 0.33), (0.17, 0.08)]);
        let kzw = bergman_kernel(&kern, &z, &w).unwrap();
        let kwz = bergman_kernel(&kern, &w, &z).unwrap();
        assert_eq!(kzw.re, kwz.re);
        assert_eq!(kzw.im, -kwz.im);
    }

    #[test]
    fn kernel_tail_rule_rejects_near_boundary_points() {
        let kern = monomial_norms("disc", 12, &QuadratureSpec::default()).unwrap();
        assert!(matches!(
            bergman_kernel(&kern, &rvec(&[0.97]), &rvec(&[0.97])),
            Err(Error::TruncationInsufficient(_))
        ));
    }

    #[test]
    fn diagonal_dominates_the_volume_floor() {
        let kern = monomial_norms("egg(2)", 24, &QuadratureSpec::default()).unwrap();
        let vol = kern.volume();
        for z in [rvec(&[0.0, 0.0]), cvec(&[(0.3, 0.1), (0.2, -0.4)]), rvec(&[-0.5, 0.3])] {
            let k = bergman_kernel(&kern, &z, &z).unwrap();
            assert!(k.re > 0.0 && k.im.abs() < 1e-15);
            assert!(k.re >= 1.0 / vol - 1e-12);
        }
    }

    #[test]
    fn metric_center_oracles() {
        let quad = QuadratureSpec::default();
        let disc = monomial_norms("disc", 32, &quad).unwrap();
        let m = bergman_metric(&disc, &rvec(&[0.0])).unwrap();
        assert!((m.matrix[(0, 0)].re - 2.0).abs() < 1e-10);
        assert!(m.positive_definite);

        let ball = monomial_norms("ball", 32, &quad).unwrap();
        let m = bergman_metric(&ball, &rvec(&[0.0, 0.0])).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let expect = if j == k { 3.0 } else { 0.0 };
                assert!((m.matrix[(j, k)] - cr(expect)).norm() < 1e-10);
            }
        }

        let bidisc = monomial_norms("bidisc", 32, &quad).unwrap();
        let m = bergman_metric(&bidisc, &rvec(&[0.0, 0.0])).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let expect = if j == k { 2.0 } else { 0.0 };
                assert!((m.matrix[(j, k)] - cr(expect)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn metric_respects_dilation_covariance() {
        // β_{RΩ}(Rq) = β_Ω(q)/R² on the disc family, the dilated copy
        // integrated directly
        let quad = QuadratureSpec::default();
        let unit = monomial_norms("disc", 40, &quad).unwrap();
        let scaled = monomial_norms_dilated("disc", 40, &quad, 2.5).unwrap();
        let q = 0.3;
        let b_unit = bergman_metric(&unit, &rvec(&[q])).unwrap().matrix[(0, 0)].re;
        let b_scaled = bergman_metric(&scaled, &rvec(&[2.5 * q])).unwrap().matrix[(0, 0)].re;
        assert_relative_eq!(b_scaled, b_unit / (2.5 * 2.5), max_relative = 1e-9);
    }

    #[test]
    fn disc_curvature_is_constant_minus_two() {
        let kern = monomial_norms("disc", 48, &QuadratureSpec::default()).unwrap();
        for q in [rvec(&[0.0]), rvec(&[0.3]), cvec(&[(0.5, 0.2)]), cvec(&[(-0.49, 0.49)])] {
            let rep = sectional_curvature(&kern, &q, &rvec(&[1.0]), CURVATURE_SENS_TOL).unwrap();
            assert!(
                (rep.curvature + 2.0).abs() < 1e-6,
                "S({q:?}) = {}",
                rep.curvature
            );
            assert!(rep.metric_value > 0.0);
        }
    }

    #[test]
    fn ball_curvature_is_constant_and_scale_invariant() {
        let kern = monomial_norms("ball", 48, &QuadratureSpec::default()).unwrap();
        let xi = cvec(&[(0.6, 0.1), (-0.3, 0.8)]);
        for q in [rvec(&[0.0, 0.0]), rvec(&[0.5, 0.0]), cvec(&[(0.3, 0.3), (-0.2, 0.4)])] {
            let rep = sectional_curvature(&kern, &q, &xi, CURVATURE_SENS_TOL).unwrap();
            assert!(
                (rep.curvature + 4.0 / 3.0).abs() < 1e-4,
                "S({q:?}) = {}",
                rep.curvature
            );
        }
        let q = rvec(&[0.4, 0.0]);
        let s1 = sectional_curvature(&kern, &q, &xi, CURVATURE_SENS_TOL).unwrap().curvature;
        let s2 = sectional_curvature(&kern, &q, &(&xi * c(0.3, -1.7)), CURVATURE_SENS_TOL)
            .unwrap()
            .curvature;
        assert!((s1 - s2).abs() < 1e-10, "scale invariance: {s1} vs {s2}");
    }

    #[test]
    fn curvature_rejections() {
        let kern = monomial_norms("disc", 24, &QuadratureSpec::default()).unwrap();
        assert!(sectional_curvature(&kern, &rvec(&[0.2]), &rvec(&[0.0]), 1e-4).is_err());
        assert!(sectional_curvature(&kern, &rvec(&[1.2]), &rvec(&[1.0]), 1e-4).is_err());
        let tiny = monomial_norms("disc", 8, &QuadratureSpec::default()).unwrap();
        assert!(matches!(
            sectional_curvature(&tiny, &rvec(&[0.2]), &rvec(&[1.0]), 1e-4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn klembeck_ball_rows_sit_at_the_limit() {
        let rep = klembeck_harness(
            "ball",
            &rvec(&[1.0, 0.0]),
            &rvec(&[0.0, 1.0]),
            &[0.5, 0.4, 0.3],
            48,
            1e-4,
        )
        .unwrap();
        assert!(rep.verdict.passed(), "{:?}", rep);
        for row in &rep.rows {
            assert!((row.deviation_a + 4.0 / 3.0).abs() < 1e-4);
        }
    }

    #[test]
    fn klembeck_egg_limit_from_the_reliable_rows() {
        // at N = 48 the t = 0.05 and t = 0.1 rows fail the truncation checks
        // (relative tail ~1e-1 at t = 0.05) and are dropped with notes; the
        // retained rows already sit within 5e-2 of -4/3
        let rep = klembeck_harness(
            "egg(2)",
            &rvec(&[0.0, 1.0]),
            &rvec(&[1.0, 0.0]),
            &[0.4, 0.2, 0.1, 0.05],
            48,
            5e-2,
        )
        .unwrap();
        assert!(rep.verdict.passed(), "{:?}", rep.fitted_limit);
        let fit = rep.fitted_limit.unwrap();
        assert!((fit + 4.0 / 3.0).abs() < 5e-2, "fit {fit}");
        assert!(rep.rows.len() < 4, "near-boundary rows must be dropped");
        assert!(rep.notes.iter().any(|n| n.contains("dropped")));
    }

    #[test]
    fn klembeck_rejections() {
        let p = rvec(&[1.0, 0.0]);
        assert!(klembeck_harness("ball", &p, &rvec(&[0.0, 1.0]), &[], 48, 1e-4).is_err());
        // weakly pseudoconvex pole of the egg
        assert!(klembeck_harness("egg(2)", &p, &rvec(&[0.0, 1.0]), &[0.1], 48, 1e-4).is_err());
        assert!(klembeck_harness("siegel", &p, &rvec(&[0.0, 1.0]), &[0.1], 48, 1e-4).is_err());
    }

    #[test]
    fn reproducing_defect_is_tiny_on_the_truncated_space() {
        let quad = QuadratureSpec::default();
        let disc = monomial_norms("disc", 32, &quad).unwrap();
        let d = reproducing_defect(&disc, &cvec(&[(0.4, 0.2)])).unwrap();
        assert!(d < 1e-8, "disc defect {d}");
        let ball = monomial_norms("ball", 24, &quad).unwrap();
        let d = reproducing_defect(&ball, &cvec(&[(0.3, 0.0), (0.0, 0.2)])).unwrap();
        assert!(d < 1e-8, "ball defect {d}");
    }
}
