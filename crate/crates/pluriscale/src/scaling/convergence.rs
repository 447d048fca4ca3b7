//! Set-convergence diagnostics for scaling sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::DefiningFunction;
use crate::linalg::{self, CMat, CVec};
use crate::maps::HoloMap;
use crate::report::{ConvergenceReport, ConvergenceRow};

use super::{frankel_scaling, pinchuk_scaling_sequence, OrbitSpec};

/// Box half-width used both for drawing source samples and for clipping
/// image samples before measuring distance to the target.
const SAMPLE_BOX: f64 = 2.0;

/// Two deviation measures between the images σ_ν(source) and the target set:
/// (a) target-compact samples pulled back through σ_ν⁻¹ must land inside the
/// source (their defining-function violation is recorded), and (b) forward
/// images of source samples inside a fixed box must come close to the target
/// (first-order distance ρ/|∇ρ|). Verdict: both tend to the target value 0
/// within `tolerance` at the last index.
pub fn normal_convergence_check(
    maps: &[HoloMap],
    source: &DefiningFunction,
    target: &DefiningFunction,
    compacts: &[CVec],
    tolerance: f64,
) -> Result<ConvergenceReport> {
    if compacts.is_empty() {
        return Err(Error::Precondition("empty compact sample set".into()));
    }
    for w in compacts {
        if target.rho(w) >= 0.0 {
            return Err(Error::Precondition(format!(
                "compact sample not interior to the target (ρ = {})",
                target.rho(w)
            )));
        }
    }

    // fixed seeded source samples, kept when inside the source domain
    let d = source.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut source_samples: Vec<CVec> = Vec::new();
    let mut draws = 0;
    while source_samples.len() < 300 && draws < 20_000 {
        draws += 1;
        let z = CVec::from_fn(d, |_, _| {
            num_complex::Complex64::new(
                SAMPLE_BOX * (2.0 * rng.gen::<f64>() - 1.0),
                SAMPLE_BOX * (2.0 * rng.gen::<f64>() - 1.0),
            )
        });
        if source.rho(&z) < -1e-9 {
            source_samples.push(z);
        }
    }

    let mut rows = Vec::with_capacity(maps.len());
    for (i, sigma) in maps.iter().enumerate() {
        // (a) pull target compacts back into the source
        let mut dev_a: f64 = 0.0;
        for w in compacts {
            let z = sigma.apply_inverse(w)?;
            dev_a = dev_a.max(source.rho(&z).max(0.0));
        }
        // (b) push source samples forward, measure linearized distance
        let mut dev_b: f64 = 0.0;
        for z in &source_samples {
            let w = sigma.apply(z);
            if w.iter().any(|v| v.re.abs() > SAMPLE_BOX || v.im.abs() > SAMPLE_BOX) {
                continue;
            }
            let r = target.rho(&w);
            if r > 0.0 {
                let gn = 2.0 * linalg::norm(&target.grad(&w));
                dev_b = dev_b.max(if gn > 1e-9 { r / gn } else { r });
            }
        }
        rows.push(ConvergenceRow {
            index: i + 1,
            deviation_a: dev_a,
            deviation_b: Some(dev_b),
        });
    }

    let fitted = rows
        .last()
        .map(|r| r.deviation_a.max(r.deviation_b.unwrap_or(0.0)));
    Ok(ConvergenceReport::new(
        format!("set deviation of scaled {} images from {}", source.tag(), target.tag()),
        rows,
        fitted,
        Some(0.0),
        tolerance,
    )
    .with_note("deviation_a: source violation of pulled-back target compacts")
    .with_note(format!(
        "deviation_b: linearized target distance of forward samples in the box |Re|,|Im| ≤ {SAMPLE_BOX}"
    )))
}

/// Affine comparison of the derivative (Frankel) and boundary (Pinchuk)
/// scalings along one orbit: per index, least-squares fit of an affine T with
/// T(ω_ν(z)) ≈ σ_ν(z) over the compact samples, reporting the sup residual.
pub fn frankel_pinchuk_compare(
    omega_domain: &DefiningFunction,
    orbit: &OrbitSpec,
    nu_max: u32,
    compacts: &[CVec],
    tolerance: f64,
) -> Result<ConvergenceReport> {
    let d = omega_domain.dim();
    if compacts.is_empty() || compacts.len() < d + 1 {
        return Err(Error::Precondition(format!(
            "need at least {} compact samples, got {}",
            d + 1,
            compacts.len()
        )));
    }
    let sigmas = pinchuk_scaling_sequence(omega_domain, orbit, nu_max)?;
    let mut rows = Vec::with_capacity(sigmas.len());
    for (i, sigma) in sigmas.iter().enumerate() {
        let nu = i as u32 + 1;
        let omega = frankel_scaling(&orbit.automorphism(nu)?, &orbit.base)?;
        // design matrix rows (ω(z)ᵀ, 1); one least-squares solve per output
        // coordinate of σ
        let m = compacts.len();
        let mut a = CMat::zeros(m, d + 1);
        let mut targets = vec![CVec::zeros(m); d];
        for (k, z) in compacts.iter().enumerate() {
            let w = omega.apply(z);
            for j in 0..d {
                a[(k, j)] = w[j];
            }
            a[(k, d)] = linalg::ONE;
            let s = sigma.apply(z);
            for (j, t) in targets.iter_mut().enumerate() {
                t[k] = s[j];
            }
        }
        let mut err2 = vec![0.0f64; m];
        for t in &targets {
            let coef = linalg::lstsq(&a, t)?;
            let fit = &a * coef;
            for k in 0..m {
                err2[k] += (fit[k] - t[k]).norm_sqr();
            }
        }
        let residual = err2.iter().fold(0.0f64, |acc, e| acc.max(e.sqrt()));
        rows.push(ConvergenceRow { index: nu as usize, deviation_a: residual, deviation_b: None });
    }
    let fitted = rows.last().map(|r| r.deviation_a);
    Ok(ConvergenceReport::new(
        "sup residual of the affine fit T∘ω_ν ≈ σ_ν",
        rows,
        fitted,
        Some(0.0),
        tolerance,
    ))
}
