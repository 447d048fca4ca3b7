//! Small complex linear-algebra helpers on top of nalgebra.
//!
//! Dimensions here are tiny (2 to 4 in practice), so everything uses dynamic
//! matrices; no effort is spent on fixed-size specialization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Point constructor from (re, im) pairs.
pub fn cvec(parts: &[(f64, f64)]) -> CVec {
    CVec::from_iterator(parts.len(), parts.iter().map(|&(re, im)| c(re, im)))
}

/// Point constructor from real parts only.
pub fn rvec(parts: &[f64]) -> CVec {
    CVec::from_iterator(parts.len(), parts.iter().map(|&re| cr(re)))
}

/// Hermitian inner product `sum_j u_j conj(v_j)`.
pub fn hdot(u: &CVec, v: &CVec) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Bilinear pairing `sum_j u_j v_j` (no conjugation).
pub fn bdot(u: &CVec, v: &CVec) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &CVec) -> f64 {
    hdot(u, u).re.sqrt()
}

/// Max deviation from Hermitian symmetry, `max |H_jk - conj(H_kj)|`.
pub fn hermitian_defect(h: &CMat) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            worst = worst.max((h[(j, k)] - h[(k, j)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
/// The input is symmetrized first so callers can pass matrices with
/// rounding-level defects.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    let sym = CMat::from_fn(n, n, |j, k| (h[(j, k)] + h[(k, j)].conj()) * cr(0.5));
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, ci| eig.eigenvectors[(r, order[ci])]);
    (vals, vecs)
}

/// Hermitian positive-definite square root, `H = S S` with `S` Hermitian.
pub fn hermitian_sqrt(h: &CMat) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(h);
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(Error::Precondition(format!(
            "hermitian_sqrt needs a positive matrix (min eigenvalue {:.3e})",
            vals[0]
        )));
    }
    let n = h.nrows();
    let d = CMat::from_fn(n, n, |r, ci| {
        if r == ci {
            cr(vals[r].sqrt())
        } else {
            ZERO
        }
    });
    Ok(&vecs * d * vecs.adjoint())
}

pub fn inverse(m: &CMat, what: &'static str) -> Result<CMat> {
    m.clone().try_inverse().ok_or(Error::Singular(what))
}

/// Orthonormal basis of the orthogonal complement of `v` (Hermitian inner
/// product), returned as the columns of a d x (d-1) matrix. Uses a Householder
/// reflection sending v/|v| to e_0; columns 1..d of the reflector span the
/// complement.
pub fn orthogonal_complement(v: &CVec) -> Result<CMat> {
    let d = v.len();
    let nv = norm(v);
    if nv == 0.0 {
        return Err(Error::Singular("orthogonal_complement of zero vector"));
    }
    let u = v / cr(nv);
    // w = u - phase*e_0 with phase chosen to avoid cancellation
    let phase = if u[0].norm() > 0.0 {
        u[0] / cr(u[0].norm())
    } else {
        ONE
    };
    let mut w = u.clone();
    w[0] += phase;
    let wn = norm(&w);
    let reflect = |x: &CVec| -> CVec {
        if wn < 1e-300 {
            return x.clone();
        }
        let coef = hdot(x, &w) / cr(0.5 * wn * wn);
        x - &w * coef
    };
    // reflect maps u to -phase*e_0, so images of e_1..e_{d-1} are orthogonal to u
    let mut cols = CMat::zeros(d, d - 1);
    for k in 1..d {
        let mut e = CVec::zeros(d);
        e[k] = ONE;
        let col = reflect(&e);
        cols.set_column(k - 1, &col);
    }
    Ok(cols)
}

/// A Hermitian form with its spectrum, shared by the Levi machinery, the
/// Bergman metric tensor, and the Wu ellipsoid matrix.
#[derive(Debug, Clone)]
pub struct HermitianForm {
    pub matrix: CMat,
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    pub positive_definite: bool,
}

impl HermitianForm {
    /// Wraps a matrix after checking its Hermitian defect against `tol`.
    pub fn from_matrix(m: &CMat, tol: f64) -> Result<HermitianForm> {
        let defect = hermitian_defect(m);
        if defect > tol {
            return Err(Error::Precondition(format!(
                "matrix is not Hermitian (defect {defect:.3e} > {tol:.3e})"
            )));
        }
        let (eigenvalues, _) = hermitian_eigen(m);
        let positive_definite = eigenvalues.first().is_some_and(|&v| v > 0.0);
        Ok(HermitianForm { matrix: m.clone(), eigenvalues, positive_definite })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Real value `xi* H xi` of the form on a vector.
    pub fn evaluate(&self, xi: &CVec) -> f64 {
        (xi.adjoint() * &self.matrix * xi)[(0, 0)].re
    }

    /// Row-major entries as (re, im) pairs, for serialization.
    pub fn entry_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.matrix.nrows())
            .map(|r| {
                (0..self.matrix.ncols())
                    .map(|c| [self.matrix[(r, c)].re, self.matrix[(r, c)].im])
                    .collect()
            })
            .collect()
    }
}

/// Least-squares solve of `A x = b` for complex A via normal equations with
/// a small Tikhonov floor. Sample systems here are short and well conditioned.
pub fn lstsq(a: &CMat, b: &CVec) -> Result<CVec> {
    let ah = a.adjoint();
    let mut g = &ah * a;
    let rhs = &ah * b;
    let n = g.nrows();
    let scale = g.diagonal().iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    for i in 0..n {
        g[(i, i)] += cr(scale * 1e-14 + 1e-300);
    }
    let chol = g
        .clone()
        .cholesky()
        .ok_or(Error::Singular("lstsq normal equations"))?;
    Ok(chol.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermitian_eigen_recovers_spectrum() {
        // H = U diag(1,3) U^* for a hand-picked unitary
        let u = CMat::from_row_slice(
            2,
            2,
            &[
                c(0.6, 0.0),
                c(0.0, 0.8),
                c(0.0, 0.8),
                c(0.6, 0.0),
            ],
        );
        let d = CMat::from_row_slice(2, 2, &[cr(1.0), ZERO, ZERO, cr(3.0)]);
        let h = &u * d * u.adjoint();
        assert!(hermitian_defect(&h) < 1e-14);
        let (vals, vecs) = hermitian_eigen(&h);
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        // residual ||H v - lambda v||
        for k in 0..2 {
            let v = CVec::from_iterator(2, vecs.column(k).iter().cloned());
            let r = &h * &v - &v * cr(vals[k]);
            assert!(norm(&r) < 1e-12);
        }
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        let h = CMat::from_row_slice(2, 2, &[cr(2.0), c(0.3, 0.4), c(0.3, -0.4), cr(1.5)]);
        let s = hermitian_sqrt(&h).unwrap();
        let back = &s * &s;
        for j in 0..2 {
            for k in 0..2 {
                assert!((back[(j, k)] - h[(j, k)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn complement_is_orthonormal() {
        let v = cvec(&[(1.0, 2.0), (-0.5, 0.25), (0.0, 3.0)]);
        let b = orthogonal_complement(&v).unwrap();
        for j in 0..2 {
            let col = CVec::from_iterator(3, b.column(j).iter().cloned());
            assert!(hdot(&col, &v).norm() < 1e-12);
            for k in 0..2 {
                let colk = CVec::from_iterator(3, b.column(k).iter().cloned());
                let expect = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(hdot(&col, &colk).norm(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lstsq_exact_on_square_system() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 1.0), cr(2.0), cr(0.0), c(0.0, -1.0)]);
        let x_true = cvec(&[(0.5, -0.5), (1.0, 2.0)]);
        let b = &a * &x_true;
        let x = lstsq(&a, &b).unwrap();
        assert!(norm(&(x - x_true)) < 1e-10);
    }
}
