//! Submultiplicative matrix norms, selectable by name.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::rational::{self, Rational};

/// A norm value: exact for the ∞-norm, a float with a declared tolerance otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum NormValue {
    Exact(Rational),
    Approx(f64),
}

impl NormValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            NormValue::Exact(q) => rational::to_f64(q),
            NormValue::Approx(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            NormValue::Exact(q) => Some(q),
            NormValue::Approx(_) => None,
        }
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Exact(q) => write!(f, "{}", rational::format_rational(q)),
            NormValue::Approx(v) => write!(f, "{v:.12}"),
        }
    }
}

/// An operator norm on square rational matrices.
pub trait MatrixNorm: Send + Sync {
    fn id(&self) -> &'static str;
    fn norm(&self, m: &RatMatrix) -> Result<NormValue>;
    /// Absolute error bound of [`MatrixNorm::norm`]; zero for exact norms.
    fn tolerance(&self) -> f64;
}

/// Maximum absolute row sum, exact.
#[derive(Clone, Copy, Debug, Default)]
pub struct InfNorm;

impl MatrixNorm for InfNorm {
    fn id(&self) -> &'static str {
        "inf"
    }

    fn norm(&self, m: &RatMatrix) -> Result<NormValue> {
        Ok(NormValue::Exact(m.inf_norm()))
    }

    fn tolerance(&self) -> f64 {
        0.0
    }
}

/// Spectral norm `sqrt(λ_max(MᵀM))`, with `MᵀM` formed exactly before conversion.
#[derive(Clone, Copy, Debug, Default)]
pub struct TwoNorm;

impl MatrixNorm for TwoNorm {
    fn id(&self) -> &'static str {
        "two"
    }

    fn norm(&self, m: &RatMatrix) -> Result<NormValue> {
        if m.rows() == 0 || m.cols() == 0 {
            return Ok(NormValue::Approx(0.0));
        }
        let gram = m.transpose().mul(m).to_f64();
        let eig = SymmetricEigen::try_new(gram, 1e-15, 10_000)
            .ok_or_else(|| Error::Eigen("symmetric eigenvalue iteration did not converge".into()))?;
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        Ok(NormValue::Approx(top.sqrt()))
    }

    fn tolerance(&self) -> f64 {
        1e-10
    }
}

/// Norms by name; `inf` and `two` are registered by default.
pub struct NormRegistry {
    norms: BTreeMap<&'static str, Box<dyn MatrixNorm>>,
}

impl Default for NormRegistry {
    fn default() -> Self {
        let mut r = NormRegistry { norms: BTreeMap::new() };
        r.register(Box::new(InfNorm));
        r.register(Box::new(TwoNorm));
        r
    }
}

impl NormRegistry {
    pub fn register(&mut self, norm: Box<dyn MatrixNorm>) {
        self.norms.insert(norm.id(), norm);
    }

    pub fn get(&self, name: &str) -> Result<&dyn MatrixNorm> {
        self.norms
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Unsupported(format!("unknown norm '{name}' (known: {})", self.names().join(", "))))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.norms.keys().copied().collect()
    }
}

pub fn matrix_norm(m: &RatMatrix, which: &str) -> Result<NormValue> {
    NormRegistry::default().get(which)?.norm(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn identity_and_known_values() {
        let id = RatMatrix::identity(4);
        assert_eq!(matrix_norm(&id, "inf").unwrap(), NormValue::Exact(int(1)));
        assert!((matrix_norm(&id, "two").unwrap().to_f64() - 1.0).abs() < 1e-12);
        let m = RatMatrix::from_i64(&[&[1, -2], &[3, 4]], 2);
        assert_eq!(matrix_norm(&m, "inf").unwrap(), NormValue::Exact(rat(7, 2)));
        // singular values of [[1,-2],[3,4]] are sqrt(15 ± 5 sqrt 5)
        let expected = (15.0 + 5.0 * 5f64.sqrt()).sqrt() / 2.0;
        assert!((matrix_norm(&m, "two").unwrap().to_f64() - expected).abs() < 1e-12);
        assert!(matches!(matrix_norm(&m, "one"), Err(Error::Unsupported(_))));
    }

    #[test]
    fn rectangular_two_norm() {
        let m = RatMatrix::from_i64(&[&[3, 0, 4]], 1);
        assert!((TwoNorm.norm(&m).unwrap().to_f64() - 5.0).abs() < 1e-12);
        assert_eq!(NormRegistry::default().names(), vec!["inf", "two"]);
    }
}
