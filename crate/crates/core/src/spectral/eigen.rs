//! Eigenvalues of rational matrices.
//!
//! The float path balances the matrix, runs nalgebra's real Schur decomposition and then checks
//! every eigenvalue by the smallest singular value of `M - λI`. The exact path decides whether a
//! given rational is an eigenvalue through `det(M - λI) = 0`.

use nalgebra::{DMatrix, Schur, SVD};
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::rational::Rational;

const SCHUR_EPS: f64 = 1e-14;
const MAX_ITER: usize = 10_000;
const RESIDUAL_TOL: f64 = 1e-6;

/// Parlett–Reinsch balancing with radix 2; returns a similar matrix with comparable row and
/// column norms.
pub fn balance(mut a: DMatrix<f64>) -> DMatrix<f64> {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| a[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                a.row_mut(i).scale_mut(1.0 / f);
                a.column_mut(i).scale_mut(f);
            }
        }
    }
    a
}

/// Smallest singular value of `M - λI`.
fn residual(m: &DMatrix<f64>, lambda: Complex64) -> Result<f64> {
    let n = m.nrows();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let v = Complex64::new(m[(i, j)], 0.0);
        if i == j {
            v - lambda
        } else {
            v
        }
    });
    let svd = SVD::try_new(shifted, false, false, 1e-15, MAX_ITER)
        .ok_or_else(|| Error::Eigen("singular value iteration did not converge".into()))?;
    Ok(svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// All eigenvalues, each certified by a small residual.
pub fn eigenvalues_f64(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape("eigenvalues need a square matrix".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let balanced = balance(m.clone());
    let schur = Schur::try_new(balanced, SCHUR_EPS, MAX_ITER)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let values: Vec<Complex64> = schur.complex_eigenvalues().iter().cloned().collect();
    let scale = m.norm().max(1.0);
    for &lambda in &values {
        let res = residual(m, lambda)?;
        if res > RESIDUAL_TOL * scale {
            return Err(Error::Eigen(format!("eigenvalue {lambda} has residual {res:e}")));
        }
    }
    Ok(values)
}

pub fn eigenvalues(m: &RatMatrix) -> Result<Vec<Complex64>> {
    eigenvalues_f64(&m.to_f64())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &RatMatrix) -> Result<f64> {
    spectral_radius_f64(&m.to_f64())
}

pub fn spectral_radius_f64(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues_f64(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `true` iff `λ` is an eigenvalue of `M`, decided exactly.
pub fn has_exact_eigenvalue(m: &RatMatrix, lambda: &Rational) -> bool {
    if !m.is_square() || m.rows() == 0 {
        return false;
    }
    let shifted = m.sub(&RatMatrix::identity(m.rows()).scale(lambda));
    shifted.determinant().is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn known_spectra() {
        let m = RatMatrix::from_i64(&[&[1, 0], &[-2, 4]], 4);
        assert!((spectral_radius(&m).unwrap() - 1.0).abs() < 1e-12);
        assert!(has_exact_eigenvalue(&m, &int(1)));
        assert!(has_exact_eigenvalue(&m, &rat(1, 4)));
        assert!(!has_exact_eigenvalue(&m, &rat(1, 2)));

        let nil = RatMatrix::from_i64(&[&[0, 1], &[0, 0]], 1);
        assert!(spectral_radius(&nil).unwrap() < 1e-9);
        assert!((spectral_radius(&RatMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        let rot = RatMatrix::from_i64(&[&[0, -1], &[1, 0]], 2);
        let ev = eigenvalues(&rot).unwrap();
        assert!(ev.iter().all(|z| (z.norm() - 0.5).abs() < 1e-12 && z.im.abs() > 0.4));
        assert_eq!(spectral_radius(&RatMatrix::zeros(0, 0)).unwrap(), 0.0);
    }

    #[test]
    fn balancing_preserves_spectrum() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1e6, 0.0, 1e-6, 2.0, 1e5, 0.0, 1e-5, 3.0]);
        let b = balance(m.clone());
        let ev_m = eigenvalues_f64(&m).unwrap();
        let ev_b = eigenvalues_f64(&b).unwrap();
        let mut a: Vec<f64> = ev_m.iter().map(|z| z.re).collect();
        let mut c: Vec<f64> = ev_b.iter().map(|z| z.re).collect();
        a.sort_by(f64::total_cmp);
        c.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&c) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!(b.norm() < m.norm());
    }

    #[test]
    fn power_iteration_oracle() {
        // Nonnegative primitive matrix: power iteration converges to the Perron root.
        let m = RatMatrix::from_i64(&[&[1, 2, 0], &[0, 1, 3], &[1, 0, 1]], 5);
        let f = m.to_f64();
        let mut v = nalgebra::DVector::from_element(3, 1.0);
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let w = &f * &v;
            lambda = w.norm() / v.norm();
            v = w / lambda;
        }
        assert!((spectral_radius(&m).unwrap() - lambda).abs() < 1e-9);
    }
}
