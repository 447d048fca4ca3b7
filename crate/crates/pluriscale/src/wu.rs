//! Wu metric: the minimum-volume Hermitian ellipsoid containing the Kobayashi
//! indicatrix, computed from closed-form metric samples by a complex
//! Khachiyan ascent (D-optimal design with away steps).
//!
//! The indicatrix here is the closed sublevel set {v : F_K(q,v) ≤ 1}; its
//! boundary is sampled on a deterministic sphere grid quotiented by the
//! global phase (both the indicatrix and every Hermitian ellipsoid are
//! circled, so a global phase carries no information).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::DefiningFunction;
use crate::invmetrics::kobayashi_closed_form;
use crate::linalg::{self, cr, hdot, CMat, CVec, HermitianForm};

/// Weight threshold below which a sample does not count as a support point.
const SUPPORT_TOL: f64 = 1e-8;
const ITERATION_CAP: usize = 100_000;

#[derive(Debug, Clone)]
pub struct IndicatrixSample {
    pub q: CVec,
    /// Directions v with F_K(q, v) = 1, phase-quotiented.
    pub directions: Vec<CVec>,
    pub resolution: usize,
}

impl IndicatrixSample {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Deterministic grid on the unit sphere of C^d modulo a global phase:
/// magnitude angles step i·π/(2R) for i = 0..=R (so the coordinate axes and
/// the diagonal sit exactly on the grid) and each coordinate after the first
/// carries R phases. Directions whose leading magnitudes vanish are emitted
/// once instead of once per dead phase.
fn sphere_grid(d: usize, resolution: usize) -> Vec<CVec> {
    assert!(d >= 1 && resolution >= 2);
    let r = resolution;
    if d == 1 {
        // nothing survives the phase quotient in one variable; keep the
        // phase circle so sample sets stay comfortably overdetermined
        return (0..r)
            .map(|k| {
                let ph = 2.0 * std::f64::consts::PI * k as f64 / r as f64;
                CVec::from_element(1, Complex64::from_polar(1.0, ph))
            })
            .collect();
    }
    let mut mags: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..d - 1 {
        let mut next = Vec::new();
        for base in &mags {
            let scale: f64 = base.iter().map(|x| x * x).sum::<f64>();
            let remaining = (1.0 - scale).max(0.0).sqrt();
            for i in 0..=r {
                let a = i as f64 * std::f64::consts::FRAC_PI_2 / r as f64;
                let mut v = base.clone();
                v.push(remaining * a.cos());
                if i == 0 || i == r || remaining > 0.0 {
                    next.push(v);
                }
            }
        }
        mags = next;
    }
    // last coordinate takes whatever magnitude is left
    for v in &mut mags {
        let scale: f64 = v.iter().map(|x| x * x).sum::<f64>();
        v.push((1.0 - scale).max(0.0).sqrt());
    }
    let mut dirs: Vec<CVec> = Vec::new();
    for m in &mags {
        // phases on coordinates after the first nonzero magnitude
        let lead = m.iter().position(|&x| x > 1e-15).unwrap_or(0);
        let free: Vec<usize> = (lead + 1..d).filter(|&j| m[j] > 1e-15).collect();
        let mut stack: Vec<Vec<f64>> = vec![vec![]];
        for _ in &free {
            stack = stack
                .into_iter()
                .flat_map(|p| {
                    (0..r).map(move |k| {
                        let mut q = p.clone();
                        q.push(2.0 * std::f64::consts::PI * k as f64 / r as f64);
                        q
                    })
                })
                .collect();
        }
        for phases in stack {
            let mut v = CVec::zeros(d);
            let mut it = phases.iter();
            for j in 0..d {
                if m[j] <= 1e-15 {
                    continue;
                }
                v[j] = if j == lead {
                    cr(m[j])
                } else {
                    Complex64::from_polar(m[j], *it.next().unwrap())
                };
            }
            dirs.push(v);
        }
    }
    dirs
}

/// Boundary samples of the Kobayashi indicatrix at q: v = u / F_K(q,u) over
/// the sphere grid, so F_K(q,v) = 1 exactly by homogeneity.
pub fn indicatrix_sample(
    f: &DefiningFunction,
    q: &CVec,
    resolution: usize,
) -> Result<IndicatrixSample> {
    if resolution < 2 {
        return Err(Error::Precondition("grid resolution must be at least 2".into()));
    }
    let mut directions = Vec::new();
    for u in sphere_grid(f.dim(), resolution) {
        let fk = kobayashi_closed_form(f, q, &u)?.value;
        if fk <= 1e-12 {
            return Err(Error::Precondition(format!(
                "Kobayashi indicatrix of `{}` is unbounded (degenerate direction found); \
                 no enclosing ellipsoid exists",
                f.tag()
            )));
        }
        directions.push(&u / cr(fk));
    }
    Ok(IndicatrixSample { q: q.clone(), directions, resolution })
}

/// Minimum-volume Hermitian ellipsoid {v : v*Hv ≤ 1} around the samples.
#[derive(Debug, Clone)]
pub struct WuEllipsoid {
    pub form: HermitianForm,
    pub det: f64,
    /// Indices of samples carrying weight above 1e-8 in the optimal design.
    pub support: Vec<usize>,
    pub iterations: usize,
    /// max v*Hv - 1 over the samples at return.
    pub containment_defect: f64,
}

impl WuEllipsoid {
    /// JSON view: H row-major as (re, im) pairs, the determinant and its
    /// volume proxy, and the support indices.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "h": self.form.entry_pairs(),
            "det": self.det,
            "volume_proxy": 1.0 / self.det,
            "support": self.support,
            "iterations": self.iterations,
            "containment_defect": self.containment_defect,
        })
    }
}

fn scatter(samples: &[CVec], weights: &[f64]) -> CMat {
    let d = samples[0].len();
    let mut s = CMat::zeros(d, d);
    for (v, &w) in samples.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for a in 0..d {
            for b in 0..d {
                s[(a, b)] += cr(w) * v[a] * v[b].conj();
            }
        }
    }
    s
}

fn kappas(samples: &[CVec], minv: &CMat) -> Vec<f64> {
    samples
        .iter()
        .map(|v| {
            let mv = minv * v;
            hdot(&mv, v).re
        })
        .collect()
}

/// Khachiyan-style multiplicative-weights ascent for the complex centered
/// MVEE, with Wolfe away steps for linear convergence: maximize log det S(u)
/// over the weight simplex, S(u) = Σ u_i v_i v_i*; at the optimum
/// H = S^{-1}/d satisfies max_i v_i*Hv_i = 1.
pub fn mvee_hermitian(samples: &IndicatrixSample, tol: f64) -> Result<WuEllipsoid> {
    let vs = &samples.directions;
    let m = vs.len();
    if m == 0 {
        return Err(Error::Precondition("empty sample set".into()));
    }
    let d = vs[0].len();
    if m < 2 * d {
        return Err(Error::Precondition(format!(
            "need at least 2d = {} samples, got {m}",
            2 * d
        )));
    }
    let uniform = vec![1.0 / m as f64; m];
    let s0 = scatter(vs, &uniform);
    let (eigs, _) = linalg::hermitian_eigen(&s0);
    if eigs[0] <= 1e-12 * eigs[d - 1].max(1e-300) {
        return Err(Error::Singular(
            "samples lie in a complex hyperplane; the enclosing ellipsoid is degenerate",
        ));
    }
    if d == 1 {
        // one ray after the phase quotient: H = 1/max|v|²
        let top = vs.iter().map(|v| v[0].norm_sqr()).fold(0.0f64, f64::max);
        let h = CMat::from_element(1, 1, cr(1.0 / top));
        let support = (0..m).filter(|&i| vs[i][0].norm_sqr() >= top * (1.0 - 1e-12)).collect();
        return Ok(WuEllipsoid {
            form: HermitianForm::from_matrix(&h, 0.0)?,
            det: 1.0 / top,
            support,
            iterations: 0,
            containment_defect: 0.0,
        });
    }

    let df = d as f64;
    let mut u = uniform;
    let mut s = s0;
    let mut minv = linalg::inverse(&s, "indicatrix scatter matrix")?;
    let mut kap = kappas(vs, &minv);
    let mut iterations = 0usize;
    loop {
        // argmax over all samples, argmin over the current support
        let mut iplus = 0;
        for i in 1..m {
            if kap[i] > kap[iplus] {
                iplus = i;
            }
        }
        let mut iminus = None;
        for i in 0..m {
            if u[i] > 1e-12 && iminus.is_none_or(|j: usize| kap[i] < kap[j]) {
                iminus = Some(i);
            }
        }
        let iminus = iminus.expect("weights sum to one");
        let up_gap = kap[iplus] - df;
        let down_gap = df - kap[iminus];
        if up_gap <= df * tol && down_gap <= df * tol {
            break;
        }
        if iterations >= ITERATION_CAP {
            return Err(Error::IterationCap { cap: ITERATION_CAP, residual: up_gap / df });
        }
        iterations += 1;
        // optimal rank-one step length: S' = (1-β)S + β vv*, with β < 0 on
        // away steps (weight pushed off the worst support point)
        let (idx, beta) = if up_gap >= down_gap {
            let k = kap[iplus];
            let tau = (k - df) / (k * (df - 1.0));
            (iplus, tau / (1.0 + tau))
        } else {
            let k = kap[iminus];
            let tau = (k - df) / (k * (df - 1.0));
            let beta = tau / (1.0 + tau);
            let cap = -u[iminus] / (1.0 - u[iminus]);
            (iminus, beta.max(cap))
        };
        if beta.abs() < 1e-17 {
            break;
        }
        let v = &vs[idx];
        let tau = beta / (1.0 - beta);
        let w = &minv * v;
        let denom = 1.0 + tau * kap[idx];
        // Sherman-Morrison update of the inverse and the κ column
        let scale = cr(1.0 / (1.0 - beta));
        let coef = cr(tau / denom);
        minv = (&minv - &w * w.adjoint() * coef) * scale;
        for a in 0..d {
            for b in 0..d {
                s[(a, b)] = (s[(a, b)] * cr(1.0 - beta)) + cr(beta) * v[a] * v[b].conj();
            }
        }
        for i in 0..m {
            let cross = hdot(&w, &vs[i]).norm_sqr();
            kap[i] = (kap[i] - tau / denom * cross) / (1.0 - beta);
        }
        for ui in u.iter_mut() {
            *ui *= 1.0 - beta;
        }
        u[idx] += beta;
        if u[idx] < 0.0 {
            u[idx] = 0.0;
        }
        // periodic refresh against Sherman-Morrison drift
        if iterations % 1024 == 0 {
            s = scatter(vs, &u);
            minv = linalg::inverse(&s, "indicatrix scatter matrix")?;
            kap = kappas(vs, &minv);
        }
    }
    // final polish from the weights actually reached
    s = scatter(vs, &u);
    minv = linalg::inverse(&s, "indicatrix scatter matrix")?;
    kap = kappas(vs, &minv);
    let h = minv.map(|z| z / cr(df));
    let form = HermitianForm::from_matrix(&h, 1e-9)?;
    if !form.positive_definite {
        return Err(Error::Singular("enclosing ellipsoid matrix lost positive definiteness"));
    }
    let det = form.eigenvalues.iter().product();
    let support: Vec<usize> = (0..m).filter(|&i| u[i] > SUPPORT_TOL).collect();
    let containment_defect = kap.iter().fold(0.0f64, |acc, &k| acc.max(k / df - 1.0));
    Ok(WuEllipsoid { form, det, support, iterations, containment_defect })
}

/// Wu Hermitian form at q: enclose the sampled Kobayashi indicatrix.
pub fn wu_metric(
    f: &DefiningFunction,
    q: &CVec,
    resolution: usize,
    tol: f64,
) -> Result<WuEllipsoid> {
    let samples = indicatrix_sample(f, q, resolution)?;
    mvee_hermitian(&samples, tol)
}

/// Same, doubling the grid resolution until det H moves by less than
/// `det_tol` relatively (the ellipsoid is exact only in the grid limit).
pub fn wu_metric_refined(
    f: &DefiningFunction,
    q: &CVec,
    start_resolution: usize,
    det_tol: f64,
    tol: f64,
) -> Result<WuEllipsoid> {
    let mut resolution = start_resolution.max(2);
    let mut current = wu_metric(f, q, resolution, tol)?;
    while resolution * 2 <= 256 {
        resolution *= 2;
        let next = wu_metric(f, q, resolution, tol)?;
        let moved = (next.det - current.det).abs() / current.det.abs().max(1e-300);
        current = next;
        if moved < det_tol {
            return Ok(current);
        }
    }
    Err(Error::IterationCap { cap: 256, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_catalog_domain;
    use crate::linalg::{c, cvec, norm, rvec, ZERO};
    use crate::scaling::ball_automorphism;

    fn max_entry_diff(a: &CMat, b: &CMat) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..a.nrows() {
            for k in 0..a.ncols() {
                worst = worst.max((a[(j, k)] - b[(j, k)]).norm());
            }
        }
        worst
    }

    #[test]
    fn sphere_grid_covers_axes_and_diagonal() {
        let dirs = sphere_grid(2, 8);
        for v in &dirs {
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        let has = |target: &CVec| dirs.iter().any(|v| norm(&(v - target)) < 1e-12);
        assert!(has(&rvec(&[1.0, 0.0])));
        assert!(has(&rvec(&[0.0, 1.0])));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(has(&rvec(&[s, s])));
        // poles are emitted once, not once per dead phase
        assert_eq!(dirs.iter().filter(|v| norm(&(*v - &rvec(&[0.0, 1.0]))) < 1e-12).count(), 1);
    }

    #[test]
    fn ball_indicatrix_at_center_is_the_unit_sphere() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let sample = indicatrix_sample(&ball, &rvec(&[0.0, 0.0]), 16).unwrap();
        for v in &sample.directions {
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bidisc_indicatrix_at_center_fills_the_unit_bidisc_shell() {
        let bidisc = make_catalog_domain("bidisc", 2).unwrap();
        let sample = indicatrix_sample(&bidisc, &rvec(&[0.0, 0.0]), 16).unwrap();
        for v in &sample.directions {
            let sup = v[0].norm().max(v[1].norm());
            assert!((sup - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unbounded_indicatrix_is_rejected() {
        let half = make_catalog_domain("halfspace", 2).unwrap();
        assert!(indicatrix_sample(&half, &rvec(&[1.0, 0.0]), 8).is_err());
        let ball = make_catalog_domain("ball", 2).unwrap();
        assert!(indicatrix_sample(&ball, &rvec(&[2.0, 0.0]), 8).is_err());
    }

    #[test]
    fn ball_center_ellipsoid_is_the_identity() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let wu = wu_metric(&ball, &rvec(&[0.0, 0.0]), 64, 1e-8).unwrap();
        let id = CMat::identity(2, 2);
        assert!(max_entry_diff(&wu.form.matrix, &id) < 1e-6, "{:?}", wu.form.matrix);
        assert!(wu.containment_defect <= 1e-8);
        assert!((wu.det - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bidisc_center_ellipsoid_is_half_identity() {
        let bidisc = make_catalog_domain("bidisc", 2).unwrap();
        let wu = wu_metric(&bidisc, &rvec(&[0.0, 0.0]), 64, 1e-8).unwrap();
        let expect = CMat::identity(2, 2).map(|z| z * cr(0.5));
        assert!(max_entry_diff(&wu.form.matrix, &expect) < 1e-4, "{:?}", wu.form.matrix);
        assert!(wu.containment_defect <= 1e-8);
    }

    #[test]
    fn ball_off_center_matches_the_closed_form_ellipsoid() {
        // the indicatrix of the ball is itself a Hermitian ellipsoid, so the
        // enclosing ellipsoid must reproduce the metric form
        let ball = make_catalog_domain("ball", 2).unwrap();
        let r = 0.5f64;
        let s = 1.0 - r * r;
        let wu = wu_metric(&ball, &rvec(&[r, 0.0]), 32, 1e-8).unwrap();
        let expect = CMat::from_diagonal(&cvec(&[(1.0 / (s * s), 0.0), (1.0 / s, 0.0)]));
        let rel = max_entry_diff(&wu.form.matrix, &expect) / (1.0 / (s * s));
        assert!(rel < 1e-6, "relative defect {rel}");
    }

    #[test]
    fn disc_ellipsoid_is_the_squared_metric() {
        let disc = make_catalog_domain("disc", 1).unwrap();
        let q = rvec(&[0.4]);
        let wu = wu_metric(&disc, &q, 8, 1e-8).unwrap();
        let fk = kobayashi_closed_form(&disc, &q, &rvec(&[1.0])).unwrap().value;
        assert!((wu.form.matrix[(0, 0)].re - fk * fk).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_samples_are_rejected()  {
        let sample = IndicatrixSample {
            q: rvec(&[0.0, 0.0]),
            directions: (0..8)
                .map(|k| {
                    let ph = Complex64::from_polar(1.0, 0.7 * k as f64);
                    CVec::from_iterator(2, [ph, ZERO])
                })
                .collect(),
            resolution: 8,
        };
        assert!(matches!(mvee_hermitian(&sample, 1e-8), Err(Error::Singular(_))));
    }

    #[test]
    fn undersized_sample_sets_are_rejected() {
        let sample = IndicatrixSample {
            q: rvec(&[0.0, 0.0]),
            directions: vec![rvec(&[1.0, 0.0]), rvec(&[0.0, 1.0]), rvec(&[0.6, 0.8])],
            resolution: 2,
        };
        assert!(mvee_hermitian(&sample, 1e-8).is_err());
    }

    #[test]
    fn unitary_change_of_frame_is_quotiented_out() {
        // recompute with rotated samples, rotate the result back
        let bidisc = make_catalog_domain("bidisc", 2).unwrap();
        let base = indicatrix_sample(&bidisc, &rvec(&[0.0, 0.0]), 32).unwrap();
        let th = 0.37f64;
        let u_mat = CMat::from_row_slice(
            2,
            2,
            &[
                cr(th.cos()),
                -th.sin() * c(0.6, 0.8),
                th.sin() * c(0.6, -0.8),
                cr(th.cos()),
            ],
        );
        let defect = linalg::hermitian_defect(&(&u_mat * u_mat.adjoint()));
        assert!(defect < 1e-14);
        assert!(max_entry_diff(&(&u_mat * u_mat.adjoint()), &CMat::identity(2, 2)) < 1e-14);
        let rotated = IndicatrixSample {
            q: base.q.clone(),
            directions: base.directions.iter().map(|v| &u_mat * v).collect(),
            resolution: base.resolution,
        };
        let h0 = mvee_hermitian(&base, 1e-8).unwrap();
        let h1 = mvee_hermitian(&rotated, 1e-8).unwrap();
        let pulled = u_mat.adjoint() * &h1.form.matrix * &u_mat;
        assert!(
            max_entry_diff(&pulled, &h0.form.matrix) < 1e-6,
            "{pulled} vs {}",
            h0.form.matrix
        );
    }

    #[test]
    fn moebius_equivariance_of_the_wu_form() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let q = cvec(&[(0.2, 0.1), (-0.1, 0.3)]);
        let a = cvec(&[(0.3, 0.0), (0.0, -0.2)]);
        let phi = ball_automorphism(&a).unwrap();
        let h_q = wu_metric(&ball, &q, 32, 1e-8).unwrap();
        let h_im = wu_metric(&ball, &phi.apply(&q), 32, 1e-8).unwrap();
        let jinv = linalg::inverse(&phi.jacobian(&q), "automorphism jacobian").unwrap();
        let transported = jinv.adjoint() * &h_q.form.matrix * &jinv;
        let scale = h_im.form.matrix[(0, 0)].re.abs().max(1.0);
        let defect = max_entry_diff(&transported, &h_im.form.matrix) / scale;
        assert!(defect < 1e-4, "equivariance defect {defect}");
    }

    #[test]
    fn adding_samples_never_grows_the_determinant() {
        let bidisc = make_catalog_domain("bidisc", 2).unwrap();
        let coarse = indicatrix_sample(&bidisc, &rvec(&[0.0, 0.0]), 16).unwrap();
        let fine = indicatrix_sample(&bidisc, &rvec(&[0.0, 0.0]), 32).unwrap();
        let mut merged = coarse.clone();
        merged.directions.extend(fine.directions.iter().cloned());
        let d_coarse = mvee_hermitian(&coarse, 1e-9).unwrap().det;
        let d_merged = mvee_hermitian(&merged, 1e-9).unwrap().det;
        assert!(d_merged <= d_coarse + 1e-7, "{d_merged} vs {d_coarse}");
    }

    #[test]
    fn refinement_stabilizes_the_determinant() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let wu = wu_metric_refined(&ball, &rvec(&[0.3, 0.0]), 8, 1e-6, 1e-8).unwrap();
        let s = 1.0 - 0.09;
        let expect = 1.0 / (s * s * s);
        let rel = (wu.det - expect).abs() / expect;
        assert!(rel < 1e-4, "det {} vs {expect}", wu.det);
    }

    #[test]
    fn ellipsoid_serializes_with_pairs_det_support() {
        let ball = make_catalog_domain("ball", 2).unwrap();
        let wu = wu_metric(&ball, &rvec(&[0.0, 0.0]), 8, 1e-8).unwrap();
        let js = wu.to_json();
        assert!(js["h"].as_array().unwrap().len() == 2);
        assert!(js["det"].as_f64().unwrap() > 0.0);
        assert!(js["volume_proxy"].as_f64().unwrap() > 0.0);
        assert!(js["support"].is_array());
    }
}
