//! Dense matrices over exact rationals.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(RatMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Convenience for tests and fixtures: integer numerators over a common denominator.
    pub fn from_i64(rows: &[&[i64]], denom: i64) -> Self {
        let data = rows.iter().map(|row| row.iter().map(|&v| rational::rat(v, denom)).collect()).collect();
        Self::from_rows(data).expect("rectangular literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rational> {
        self.data.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|v| !v.is_negative())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn abs(&self) -> Self {
        RatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v.abs()).collect() }
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        RatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * factor).collect() }
    }

    pub fn add_assign(&mut self, other: &RatMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &RatMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        RatMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn mul(&self, other: &RatMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).filter(|(a, _)| !a.is_zero()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![Rational::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                if !a.is_zero() {
                    *o += vi * a;
                }
            }
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> Rational {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<Rational>())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| rational::to_f64(&self[(i, j)]))
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in c..m.cols {
                let v = &m[(r, j)] * &inv;
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in c..m.cols {
                        let d = &f * &m[(r, j)];
                        m[(i, j)] -= d;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{x : M x = 0}`, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![Rational::zero(); self.cols];
                x[f] = Rational::one();
                for (i, &p) in pivots.iter().enumerate() {
                    x[p] = -r[(i, f)].clone();
                }
                x
            })
            .collect()
    }

    pub fn determinant(&self) -> Rational {
        assert!(self.is_square());
        let mut m = self.clone();
        let n = m.rows;
        let mut det = Rational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else { return Rational::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let pivot = m[(c, c)].clone();
            det *= &pivot;
            for i in c + 1..n {
                if !m[(i, c)].is_zero() {
                    let f = &m[(i, c)] / &pivot;
                    for j in c..n {
                        let d = &f * &m[(c, j)];
                        m[(i, j)] -= d;
                    }
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Result<RatMatrix> {
        if !self.is_square() {
            return Err(Error::Shape("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = RatMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rational::one();
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::Internal("singular matrix".into()));
        }
        let mut inv = RatMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = r[(i, n + j)].clone();
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = Rational;

    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(rational::format_rational).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Incrementally maintained echelon basis, used for greedy independence tests.
#[derive(Clone, Debug, Default)]
pub struct EchelonBasis {
    rows: Vec<(usize, Vec<Rational>)>,
}

impl EchelonBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn reduce(&self, v: &[Rational]) -> Vec<Rational> {
        let mut w = v.to_vec();
        for (p, row) in &self.rows {
            if !w[*p].is_zero() {
                let f = w[*p].clone();
                for (a, b) in w.iter_mut().zip(row) {
                    if !b.is_zero() {
                        *a -= &f * b;
                    }
                }
            }
        }
        w
    }

    pub fn is_independent(&self, v: &[Rational]) -> bool {
        self.reduce(v).iter().any(|x| !x.is_zero())
    }

    /// Adds `v` if independent of the current span; returns whether it was added.
    pub fn insert(&mut self, v: &[Rational]) -> bool {
        let w = self.reduce(v);
        let Some(p) = w.iter().position(|x| !x.is_zero()) else { return false };
        let inv = w[p].recip();
        let w: Vec<Rational> = w.iter().map(|x| x * &inv).collect();
        for (_, row) in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let f = row[p].clone();
                for (a, b) in row.iter_mut().zip(&w) {
                    if !b.is_zero() {
                        *a -= &f * b;
                    }
                }
            }
        }
        self.rows.push((p, w));
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn product_and_norm() {
        let a = RatMatrix::from_i64(&[&[1, -2], &[3, 4]], 2);
        let b = RatMatrix::identity(2);
        assert_eq!(a.mul(&b), a);
        assert_eq!(a.inf_norm(), rat(7, 2));
        assert_eq!(a.transpose()[(0, 1)], rat(3, 2));
    }

    #[test]
    fn rank_nullspace_inverse() {
        let a = RatMatrix::from_i64(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]], 1);
        assert_eq!(a.rank(), 2);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(a.mul_vec(&ns[0]).iter().all(Zero::is_zero));
        assert_eq!(a.determinant(), int(0));

        let b = RatMatrix::from_i64(&[&[2, 1], &[1, 1]], 1);
        let inv = b.inverse().unwrap();
        assert_eq!(b.mul(&inv), RatMatrix::identity(2));
        assert_eq!(b.determinant(), int(1));
        assert!(a.inverse().is_err());
    }

    #[test]
    fn echelon_greedy() {
        let mut e = EchelonBasis::new();
        assert!(e.insert(&[int(1), int(1), int(0)]));
        assert!(e.insert(&[int(0), int(1), int(1)]));
        assert!(!e.insert(&[int(1), int(2), int(1)]));
        assert!(e.insert(&[int(0), int(0), int(1)]));
        assert_eq!(e.len(), 3);
    }
}
