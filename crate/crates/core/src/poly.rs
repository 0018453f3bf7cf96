//! Scalar multivariate polynomials with rational coefficients and the few divisions the
//! difference-mask construction needs.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::linalg::RatMatrix;
use crate::mask::{MatrixMask, MultiIndex};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Poly {
    s: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl Poly {
    pub fn zero(s: usize) -> Self {
        Poly { s, terms: BTreeMap::new() }
    }

    /// Entry `(i, j)` of a matrix mask, read as `Σ_α A_ij(α) z^α`.
    pub fn from_mask_entry(mask: &MatrixMask, i: usize, j: usize) -> Self {
        let terms = mask
            .entries()
            .iter()
            .filter(|(_, m)| !m[(i, j)].is_zero())
            .map(|(k, m)| (k.clone(), m[(i, j)].clone()))
            .collect();
        Poly { s: mask.dim(), terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Rational> {
        &self.terms
    }

    fn add_term(&mut self, at: MultiIndex, c: Rational) {
        let slot = self.terms.entry(at.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&at);
        }
    }

    /// Multiplies by `z_var - 1`.
    pub fn mul_z_minus_one(&self, var: usize) -> Poly {
        let unit = MultiIndex::unit(self.s, var);
        let mut out = Poly::zero(self.s);
        for (k, c) in &self.terms {
            out.add_term(k.add(&unit), c.clone());
            out.add_term(k.clone(), -c.clone());
        }
        out
    }

    fn max_degree(&self, var: usize) -> i64 {
        self.terms.keys().map(|k| k.components()[var]).max().unwrap_or(0)
    }

    /// Division by `z_var^2 - 1` in the variable `var`; the remainder has degree < 2 in `var`.
    pub fn div_rem_z2_minus_one(&self, var: usize) -> (Poly, Poly) {
        let two = MultiIndex::unit(self.s, var).scale(2);
        let mut rem = self.clone();
        let mut quot = Poly::zero(self.s);
        for d in (2..=rem.max_degree(var)).rev() {
            let lead: Vec<(MultiIndex, Rational)> = rem
                .terms
                .iter()
                .filter(|(k, _)| k.components()[var] == d)
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect();
            for (k, c) in lead {
                let lower = k.sub(&two);
                quot.add_term(lower.clone(), c.clone());
                rem.add_term(k, -c.clone());
                rem.add_term(lower, c);
            }
        }
        (quot, rem)
    }
}

/// Assembles a matrix mask from a grid of scalar polynomials.
pub(crate) fn mask_from_polys(s: usize, polys: &[Vec<Poly>]) -> MatrixMask {
    let rows = polys.len();
    let cols = polys.first().map_or(0, Vec::len);
    let mut acc: BTreeMap<MultiIndex, RatMatrix> = BTreeMap::new();
    for (i, row) in polys.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            for (k, c) in p.terms() {
                acc.entry(k.clone()).or_insert_with(|| RatMatrix::zeros(rows, cols))[(i, j)] = c.clone();
            }
        }
    }
    MatrixMask::from_sums(s, rows, cols, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn poly1(coeffs: &[i64]) -> Poly {
        let mut p = Poly::zero(1);
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0 {
                p.add_term(MultiIndex::new(vec![i as i64]), int(c));
            }
        }
        p
    }

    #[test]
    fn divides_by_z2_minus_one() {
        // z^3 + 2 = z (z^2 - 1) + (z + 2)
        let (q, r) = poly1(&[2, 0, 0, 1]).div_rem_z2_minus_one(0);
        assert_eq!(q, poly1(&[0, 1]));
        assert_eq!(r, poly1(&[2, 1]));
    }
}
