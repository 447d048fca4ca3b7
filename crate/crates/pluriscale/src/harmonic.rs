//! Poisson kernel of the unit ball in R^{n+1} and a grid verification of the
//! two-sided comparison c1·δ(x)/|x−y|^{n+1} ≤ P(x,y) ≤ c2·δ(x)/|x−y|^{n+1},
//! δ(x) = 1 − |x|.
//!
//! Only the round ball is covered: the comparison for general C² domains
//! needs a harmonic-measure solver, which is out of scope here; on the ball
//! the kernel is closed-form and the bound is exact. All distances are
//! Euclidean (isotropic); no anisotropic rescaling enters the scan.

use serde::Serialize;

use crate::bergman::gauss_legendre_unit;
use crate::error::{Error, Result};
use crate::report::{ConvergenceReport, ConvergenceRow, Verdict};

use std::f64::consts::PI;

/// Γ(half/2) for positive integer `half`, by the recurrence from Γ(1/2) = √π
/// and Γ(1) = 1. That covers every sphere measure exactly.
fn gamma_half_integer(half: u32) -> f64 {
    assert!(half >= 1);
    let mut val = if half % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if half % 2 == 0 { 2 } else { 1 };
    while k < half {
        val *= k as f64 / 2.0;
        k += 2;
    }
    val
}

/// Surface measure of the unit sphere S^n in R^{n+1}: 2π^{(n+1)/2}/Γ((n+1)/2).
pub fn sphere_measure(n: usize) -> f64 {
    2.0 * PI.powf((n as f64 + 1.0) / 2.0) / gamma_half_integer(n as u32 + 1)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// An interior/boundary point pair for the kernel, with the boundary
/// distance δ(x) = 1 − |x| precomputed.
#[derive(Debug, Clone, Serialize)]
pub struct PoissonQuery {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub delta: f64,
}

impl PoissonQuery {
    pub fn new(x: &[f64], y: &[f64]) -> Result<PoissonQuery> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        if x.is_empty() {
            return Err(Error::Precondition("points must live in R^{n+1}, n >= 1".into()));
        }
        let r = norm(x);
        if r >= 1.0 {
            return Err(Error::NotInterior(r - 1.0));
        }
        let yr = norm(y);
        if (yr - 1.0).abs() > 1e-12 {
            return Err(Error::NotOnBoundary(yr - 1.0));
        }
        Ok(PoissonQuery { x: x.to_vec(), y: y.to_vec(), delta: 1.0 - r })
    }
}

/// Poisson kernel of the unit ball in R^{n+1}:
/// P(x,y) = (1 − |x|²) / (ω_n |x−y|^{n+1}).
pub fn poisson_ball(x: &[f64], y: &[f64], n: usize) -> Result<f64> {
    if x.len() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, got: x.len() });
    }
    let q = PoissonQuery::new(x, y)?;
    let r = norm(&q.x);
    let sep = dist(&q.x, &q.y);
    Ok((1.0 - r * r) / (sphere_measure(n) * sep.powi(n as i32 + 1)))
}

/// Quadrature of P(x,·) over the boundary sphere; equals 1 for every
/// interior x. The circle uses the periodic trapezoid rule (spectrally
/// accurate); S² uses Gauss-Legendre in the polar cosine times the
/// trapezoid in longitude. Dimensions beyond R³ carry no rule here.
pub fn boundary_integral(x: &[f64], nodes: usize) -> Result<f64> {
    if nodes < 4 {
        return Err(Error::Precondition("need at least 4 quadrature nodes".into()));
    }
    match x.len() {
        2 => {
            let mut total = 0.0;
            for k in 0..nodes {
                let th = 2.0 * PI * k as f64 / nodes as f64;
                total += poisson_ball(x, &[th.cos(), th.sin()], 1)?;
            }
            Ok(total * 2.0 * PI / nodes as f64)
        }
        3 => {
            let (ts, ws) = gauss_legendre_unit(nodes);
            let longs = 2 * nodes;
            let mut total = 0.0;
            for (t, w) in ts.iter().zip(&ws) {
                let u = 2.0 * t - 1.0; // cos of the polar angle
                let s = (1.0 - u * u).max(0.0).sqrt();
                for k in 0..longs {
                    let ph = 2.0 * PI * k as f64 / longs as f64;
                    let y = [s * ph.cos(), s * ph.sin(), u];
                    total += 2.0 * w * poisson_ball(x, &y, 2)? * 2.0 * PI / longs as f64;
                }
            }
            Ok(total)
        }
        d => Err(Error::Precondition(format!(
            "no boundary quadrature rule for R^{d}; only the disc and the ball in R^3"
        ))),
    }
}

/// One scan sample: the pair, the kernel value, and the comparison ratio
/// P·|x−y|^{n+1}/δ(x).
#[derive(Debug, Clone, Serialize)]
pub struct ScanSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub kernel: f64,
    pub ratio: f64,
}

/// Refinement ladder for the bound scan. Each level doubles both the radial
/// count and the boundary resolution; radii run from 0 up to `max_radius`.
#[derive(Debug, Clone, Serialize)]
pub struct ScanGrid {
    pub radial: usize,
    pub angular: usize,
    pub max_radius: f64,
    pub levels: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid { radial: 8, angular: 16, max_radius: 1.0 - 1e-4, levels: 3 }
    }
}

#[derive(Debug, Clone)]
pub struct PoissonScan {
    pub c1_hat: f64,
    pub c2_hat: f64,
    /// Samples from the finest level, downsampled to at most 4096 rows.
    pub samples: Vec<ScanSample>,
    pub report: ConvergenceReport,
}

impl PoissonScan {
    /// CSV rows `x,y,P,ratio`; vector components are `;`-joined inside the
    /// x and y cells.
    pub fn to_csv(&self) -> String {
        let join = |v: &[f64]| {
            v.iter().map(|t| format!("{t:.17e}")).collect::<Vec<_>>().join(";")
        };
        let mut out = String::from("x,y,P,ratio\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e}\n",
                join(&s.x),
                join(&s.y),
                s.kernel,
                s.ratio
            ));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "c1_hat": self.c1_hat,
            "c2_hat": self.c2_hat,
            "verdict": self.report.verdict,
            "levels": self.report.rows.len(),
        })
    }
}

/// Interior directions for the scan: coordinate axes plus diagonals. The
/// ratio is rotation invariant, so a fixed spray loses nothing; rotation
/// invariance itself is checked separately.
fn direction_spray(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for j in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[j] = sign;
            dirs.push(v);
        }
    }
    let diag = 1.0 / (dim as f64).sqrt();
    for mask in 0..(1usize << dim) {
        let v: Vec<f64> = (0..dim)
            .map(|j| if mask & (1 << j) != 0 { -diag } else { diag })
            .collect();
        dirs.push(v);
    }
    dirs
}

fn boundary_grid(dim: usize, angular: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..angular)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / angular as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let mut ys = vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]];
            let rings = angular / 2;
            for i in 1..rings {
                let th = PI * i as f64 / rings as f64;
                let (s, u) = (th.sin(), th.cos());
                for k in 0..angular {
                    let ph = 2.0 * PI * k as f64 / angular as f64;
                    ys.push(vec![s * ph.cos(), s * ph.sin(), u]);
                }
            }
            ys
        }
        _ => unreachable!("scan dimensions are checked upstream"),
    }
}

/// Measures the comparison constants over a refinement ladder:
/// c1_hat = min of P·|x−y|^{n+1}/δ over the grid, c2_hat = max. On the ball
/// the ratio equals (1+|x|)/ω_n, so the envelope [1/ω_n, 2/ω_n] is tight and
/// the verdict reduces to positivity, ordering, and level stability.
pub fn poisson_bound_scan(n: usize, grid: &ScanGrid) -> Result<(f64, f64, PoissonScan)> {
    if !(1..=2).contains(&n) {
        return Err(Error::Precondition(
            "bound scan covers the disc (n=1) and the ball in R^3 (n=2)".into(),
        ));
    }
    if grid.radial == 0 || grid.angular < 4 || grid.levels == 0 {
        return Err(Error::Precondition("empty scan grid".into()));
    }
    if !(0.0..=1.0 - 1e-4).contains(&grid.max_radius) {
        return Err(Error::Precondition(
            "scan radii must stay within 1 - 1e-4 of the boundary".into(),
        ));
    }
    let dim = n + 1;
    let dirs = direction_spray(dim);
    let mut rows = Vec::new();
    let mut last: Vec<ScanSample> = Vec::new();
    let mut cs = (f64::INFINITY, f64::NEG_INFINITY);
    for level in 0..grid.levels {
        let m = grid.radial << level;
        let ys = boundary_grid(dim, grid.angular << level);
        let mut radii = vec![0.0];
        for i in 1..m {
            radii.push(grid.max_radius * i as f64 / (m - 1) as f64);
        }
        if m == 1 {
            radii = vec![0.0];
        }
        let mut xs: Vec<Vec<f64>> = vec![vec![0.0; dim]];
        for &r in radii.iter().filter(|&&r| r > 0.0) {
            for d in &dirs {
                xs.push(d.iter().map(|t| t * r).collect());
            }
        }
        let mut c1 = f64::INFINITY;
        let mut c2 = f64::NEG_INFINITY;
        let mut samples = Vec::with_capacity(xs.len() * ys.len());
        for x in &xs {
            let delta = 1.0 - norm(x);
            for y in &ys {
                let kernel = poisson_ball(x, y, n)?;
                let ratio = kernel * dist(x, y).powi(dim as i32) / delta;
                c1 = c1.min(ratio);
                c2 = c2.max(ratio);
                samples.push(ScanSample { x: x.clone(), y: y.clone(), kernel, ratio });
            }
        }
        rows.push(ConvergenceRow { index: level, deviation_a: c1, deviation_b: Some(c2) });
        cs = (c1, c2);
        last = samples;
    }
    let stab_tol = 1e-9;
    let stable = rows.len() < 2 || {
        let a = &rows[rows.len() - 2];
        let b = &rows[rows.len() - 1];
        (a.deviation_a - b.deviation_a).abs() <= stab_tol
            && (a.deviation_b.unwrap() - b.deviation_b.unwrap()).abs() <= stab_tol
    };
    let (c1_hat, c2_hat) = cs;
    let ok = c1_hat > 0.0 && c1_hat <= c2_hat && c2_hat.is_finite() && stable;
    let mut report = ConvergenceReport::new(
        format!("poisson comparison constants on S^{n} (c1 in deviation_a, c2 in deviation_b)"),
        rows,
        Some(c2_hat),
        None,
        stab_tol,
    )
    .with_note("pass requires 0 < c1 <= c2 < inf and level-to-level stability of both")
    .with_note(format!(
        "algebraic envelope [{:.12e}, {:.12e}] from ratio = (1+|x|)/omega_n",
        1.0 / sphere_measure(n),
        2.0 / sphere_measure(n)
    ));
    report.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    let stride = last.len().div_ceil(4096);
    let samples = if stride > 1 {
        report = report.with_note(format!("csv downsampled with stride {stride}"));
        last.into_iter().step_by(stride).collect()
    } else {
        last
    };
    Ok((c1_hat, c2_hat, PoissonScan { c1_hat, c2_hat, samples, report }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn sphere_measures_match_the_gamma_oracle() {
        for half in 1..=10u32 {
            let oracle = (ln_gamma(half as f64 / 2.0)).exp();
            assert_relative_eq!(gamma_half_integer(half), oracle, max_relative = 1e-13);
        }
        assert_relative_eq!(sphere_measure(1), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_measure(2), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_measure(3), 2.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn disc_kernel_closed_form_values() {
        let p0 = poisson_ball(&[0.0, 0.0], &[0.6, 0.8], 1).unwrap();
        assert_relative_eq!(p0, 1.0 / (2.0 * PI), max_relative = 1e-15);
        let p = poisson_ball(&[0.5, 0.0], &[1.0, 0.0], 1).unwrap();
        assert_relative_eq!(p, 3.0 / (2.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn kernel_rejects_bad_points() {
        assert!(matches!(
            poisson_ball(&[1.0, 0.0], &[0.0, 1.0], 1),
            Err(Error::NotInterior(_))
        ));
        assert!(matches!(
            poisson_ball(&[0.3, 0.0], &[0.5, 0.0], 1),
            Err(Error::NotOnBoundary(_))
        ));
        assert!(matches!(
            poisson_ball(&[0.3, 0.0], &[1.0, 0.0], 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kernel_is_positive_on_a_grid() {
        for i in 0..5 {
            let r = 0.19 * i as f64;
            for k in 0..12 {
                let th = 2.0 * PI * k as f64 / 12.0;
                let p = poisson_ball(&[r, 0.0], &[th.cos(), th.sin()], 1).unwrap();
                assert!(p > 0.0);
            }
        }
    }

    #[test]
    fn boundary_integral_is_one_on_the_disc() {
        for (r, nodes) in [(0.0, 16), (0.5, 64), (0.9, 512), (0.99, 4096)] {
            let total = boundary_integral(&[r, 0.0], nodes).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "r={r}: {total}");
        }
    }

    #[test]
    fn boundary_integral_is_one_on_the_ball() {
        for (x, nodes) in [
            ([0.0, 0.0, 0.0], 24),
            ([0.3, 0.2, 0.4], 48),
            ([0.0, 0.0, 0.9], 160),
        ] {
            let total = boundary_integral(&x, nodes).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "x={x:?}: {total}");
        }
    }

    #[test]
    fn no_quadrature_beyond_three_dimensions() {
        assert!(boundary_integral(&[0.0, 0.0, 0.0, 0.0], 16).is_err());
    }

    #[test]
    fn kernel_is_rotation_invariant() {
        let th = 0.7f64;
        let rot2 = |v: &[f64]| vec![th.cos() * v[0] - th.sin() * v[1], th.sin() * v[0] + th.cos() * v[1]];
        let x = [0.4, 0.2];
        let y = [0.6, 0.8];
        let p = poisson_ball(&x, &y, 1).unwrap();
        let pr = poisson_ball(&rot2(&x), &rot2(&y), 1).unwrap();
        assert!((p - pr).abs() < 1e-12);

        // rotate R^3 about the x-axis
        let rot3 = |v: &[f64]| {
            vec![v[0], th.cos() * v[1] - th.sin() * v[2], th.sin() * v[1] + th.cos() * v[2]]
        };
        let x3 = [0.1, 0.5, -0.2];
        let y3 = [0.0, 0.6, 0.8];
        let p3 = poisson_ball(&x3, &y3, 2).unwrap();
        let p3r = poisson_ball(&rot3(&x3), &rot3(&y3), 2).unwrap();
        assert!((p3 - p3r).abs() < 1e-12);
    }

    #[test]
    fn disc_scan_hits_the_tight_envelope() {
        let (c1, c2, scan) = poisson_bound_scan(1, &ScanGrid::default()).unwrap();
        let lo = 1.0 / (2.0 * PI);
        let hi = 1.0 / PI;
        assert!(c1 >= lo - 1e-9 && c2 <= hi + 1e-9, "[{c1}, {c2}]");
        assert_relative_eq!(c1, lo, max_relative = 1e-12);
        assert_relative_eq!(c2, (2.0 - 1e-4) / (2.0 * PI), max_relative = 1e-12);
        assert!(scan.report.verdict.passed());
        for s in &scan.samples {
            assert!(s.ratio >= lo - 1e-9 && s.ratio <= hi + 1e-9);
        }
    }

    #[test]
    fn ball_scan_spread_is_one_plus_max_radius() {
        let grid = ScanGrid { radial: 4, angular: 8, max_radius: 0.95, levels: 2 };
        let (c1, c2, scan) = poisson_bound_scan(2, &grid).unwrap();
        assert_relative_eq!(c2 / c1, 1.95, max_relative = 1e-12);
        let lo = 1.0 / (4.0 * PI);
        assert!(c1 >= lo - 1e-12 && c2 <= 2.0 * lo + 1e-12);
        assert!(scan.report.verdict.passed());
    }

    #[test]
    fn single_point_scan_collapses_the_constants() {
        let grid = ScanGrid { radial: 1, angular: 8, max_radius: 0.0, levels: 1 };
        let (c1, c2, _) = poisson_bound_scan(1, &grid).unwrap();
        assert_relative_eq!(c1, c2, max_relative = 1e-15);
        assert_relative_eq!(c1, 1.0 / (2.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn empty_grids_are_rejected() {
        assert!(poisson_bound_scan(1, &ScanGrid { radial: 0, ..Default::default() }).is_err());
        assert!(poisson_bound_scan(1, &ScanGrid { levels: 0, ..Default::default() }).is_err());
        assert!(poisson_bound_scan(3, &ScanGrid::default()).is_err());
    }

    #[test]
    fn scan_outputs_csv_and_summary() {
        let grid = ScanGrid { radial: 2, angular: 8, max_radius: 0.5, levels: 1 };
        let (_, _, scan) = poisson_bound_scan(1, &grid).unwrap();
        let csv = scan.to_csv();
        assert!(csv.starts_with("x,y,P,ratio\n"));
        assert!(csv.lines().count() > 8);
        let js = scan.summary_json();
        assert!(js["c1_hat"].as_f64().unwrap() > 0.0);
        assert!(js["c2_hat"].as_f64().unwrap() >= js["c1_hat"].as_f64().unwrap());
    }
}
