//! Finitely supported matrix masks on `Z^s` and the subdivision operator with dilation `2I`.
//!
//! A mask `A` maps multi-indices to `rows x cols` rational matrices. The subdivision operator is
//! `S_A c(α) = Σ_β A(α - 2β) c(β)` and its symbol is `A*(z) = 2^{-s} Σ_α A(α) z^α`.
//! Masks ingested from files are translated so that their support lies in `[0, N]^s`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::rational::{self, Rational};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(components: Vec<i64>) -> Self {
        MultiIndex(components)
    }

    pub fn zeros(s: usize) -> Self {
        MultiIndex(vec![0; s])
    }

    pub fn unit(s: usize, axis: usize) -> Self {
        let mut v = vec![0; s];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: i64) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| a * factor).collect())
    }

    /// Component-wise `rem_euclid`.
    pub fn residue(&self, modulus: i64) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| a.rem_euclid(modulus)).collect())
    }

    /// Component-wise exact division; `None` if some component is not divisible.
    pub fn div_exact(&self, divisor: i64) -> Option<MultiIndex> {
        self.0
            .iter()
            .map(|a| (a.rem_euclid(divisor) == 0).then(|| a.div_euclid(divisor)))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn total_degree(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn within(&self, lo: &[i64], hi: &[i64]) -> bool {
        self.0.iter().zip(lo).zip(hi).all(|((a, l), h)| l <= a && a <= h)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex(v)
    }
}

impl From<&[i64]> for MultiIndex {
    fn from(v: &[i64]) -> Self {
        MultiIndex(v.to_vec())
    }
}

/// All points of the box `[lo, hi]` in lexicographic order (first coordinate slowest).
pub fn box_points(lo: &[i64], hi: &[i64]) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex(Vec::with_capacity(lo.len()))];
    for (&l, &h) in lo.iter().zip(hi) {
        let mut next = Vec::with_capacity(out.len() * (h - l + 1).max(0) as usize);
        for p in &out {
            for x in l..=h {
                let mut q = p.0.clone();
                q.push(x);
                next.push(MultiIndex(q));
            }
        }
        out = next;
    }
    out
}

/// The cosets `{0,1}^s` in binary order.
pub fn cosets(s: usize) -> Vec<MultiIndex> {
    box_points(&vec![0; s], &vec![1; s])
}

#[derive(Clone, PartialEq, Eq)]
pub struct MatrixMask {
    s: usize,
    rows: usize,
    cols: usize,
    entries: BTreeMap<MultiIndex, RatMatrix>,
}

impl MatrixMask {
    /// Builds a mask from explicit entries; zero matrices are dropped.
    pub fn new(
        s: usize,
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (MultiIndex, RatMatrix)>,
    ) -> Result<Self> {
        if s == 0 || rows == 0 || cols == 0 {
            return Err(Error::Shape("dimensions must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for (idx, m) in entries {
            if idx.dim() != s {
                return Err(Error::Shape(format!("index {idx:?} has length {} but s = {s}", idx.dim())));
            }
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::Shape(format!(
                    "entry at {idx:?} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
            if map.contains_key(&idx) {
                return Err(Error::DuplicateIndex(idx.0));
            }
            map.insert(idx, m);
        }
        map.retain(|_, m| !m.is_zero());
        Ok(MatrixMask { s, rows, cols, entries: map })
    }

    pub fn zero(s: usize, rows: usize, cols: usize) -> Self {
        MatrixMask { s, rows, cols, entries: BTreeMap::new() }
    }

    /// Scalar mask from `(index, value)` pairs.
    pub fn scalar(s: usize, entries: &[(&[i64], Rational)]) -> Result<Self> {
        let mut acc: BTreeMap<MultiIndex, RatMatrix> = BTreeMap::new();
        for (idx, v) in entries {
            let m = RatMatrix::from_rows(vec![vec![v.clone()]])?;
            if acc.insert(MultiIndex::from(*idx), m).is_some() {
                return Err(Error::DuplicateIndex(idx.to_vec()));
            }
        }
        Self::new(s, 1, 1, acc)
    }

    /// Accumulating constructor: repeated indices are summed.
    pub(crate) fn from_sums(s: usize, rows: usize, cols: usize, entries: BTreeMap<MultiIndex, RatMatrix>) -> Self {
        let mut entries = entries;
        entries.retain(|_, m| !m.is_zero());
        MatrixMask { s, rows, cols, entries }
    }

    pub fn dim(&self) -> usize {
        self.s
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

    pub fn entries(&self) -> &BTreeMap<MultiIndex, RatMatrix> {
        &self.entries
    }

    pub fn get(&self, idx: &MultiIndex) -> Option<&RatMatrix> {
        self.entries.get(idx)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Componentwise bounding box of the support, `None` for the zero mask.
    pub fn support_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut it = self.entries.keys();
        let first = it.next()?;
        let mut lo = first.0.clone();
        let mut hi = first.0.clone();
        for k in it {
            for (d, &x) in k.0.iter().enumerate() {
                lo[d] = lo[d].min(x);
                hi[d] = hi[d].max(x);
            }
        }
        Some((lo, hi))
    }

    pub fn is_normalized(&self) -> bool {
        self.support_box().is_none_or(|(lo, _)| lo.iter().all(|&l| l >= 0))
    }

    /// The `N` with `supp ⊆ [0, N]^s` for a normalized mask.
    pub fn extent(&self) -> i64 {
        self.support_box().map_or(0, |(_, hi)| hi.into_iter().max().unwrap_or(0).max(0))
    }

    pub fn translated(&self, offset: &MultiIndex) -> MatrixMask {
        let entries = self.entries.iter().map(|(k, v)| (k.add(offset), v.clone())).collect();
        MatrixMask { s: self.s, rows: self.rows, cols: self.cols, entries }
    }

    /// Translates the support so that its lower corner is the origin; returns the shift applied.
    pub fn normalized(&self) -> (MatrixMask, MultiIndex) {
        let shift = match self.support_box() {
            Some((lo, _)) => MultiIndex(lo.iter().map(|l| -l).collect()),
            None => MultiIndex::zeros(self.s),
        };
        (self.translated(&shift), shift)
    }

    pub fn map_entries(&self, rows: usize, cols: usize, f: impl Fn(&RatMatrix) -> RatMatrix) -> MatrixMask {
        let entries = self.entries.iter().map(|(k, v)| (k.clone(), f(v))).collect();
        Self::from_sums(self.s, rows, cols, entries)
    }

    /// The scalar mask formed by entry `(i, j)` of every matrix.
    pub fn component(&self, i: usize, j: usize) -> MatrixMask {
        self.map_entries(1, 1, |m| RatMatrix::from_rows(vec![vec![m[(i, j)].clone()]]).expect("1x1"))
    }

    /// Signed coset sum `Σ_α A(ε - 2α)`.
    pub fn coset_sum(&self, eps: &MultiIndex) -> RatMatrix {
        let mut acc = RatMatrix::zeros(self.rows, self.cols);
        for (k, v) in &self.entries {
            if k.residue(2) == *eps {
                acc.add_assign(v);
            }
        }
        acc
    }
}

impl fmt::Debug for MatrixMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Column,
    Row,
}

/// Finitely supported sequence of length-`n` vectors; orientation is fixed at creation.
#[derive(Clone, PartialEq, Eq)]
pub struct VectorSequence {
    s: usize,
    n: usize,
    orientation: Orientation,
    entries: BTreeMap<MultiIndex, Vec<Rational>>,
}

impl VectorSequence {
    pub fn zero(s: usize, n: usize, orientation: Orientation) -> Self {
        VectorSequence { s, n, orientation, entries: BTreeMap::new() }
    }

    pub fn new(
        s: usize,
        n: usize,
        orientation: Orientation,
        entries: impl IntoIterator<Item = (MultiIndex, Vec<Rational>)>,
    ) -> Result<Self> {
        let mut seq = Self::zero(s, n, orientation);
        for (idx, v) in entries {
            if idx.dim() != s || v.len() != n {
                return Err(Error::Shape(format!("sequence entry {idx:?} has wrong shape")));
            }
            if seq.entries.contains_key(&idx) {
                return Err(Error::DuplicateIndex(idx.0));
            }
            seq.entries.insert(idx, v);
        }
        seq.prune();
        Ok(seq)
    }

    /// `δ e_j` shifted to `at`.
    pub fn delta(s: usize, n: usize, component: usize, at: MultiIndex, orientation: Orientation) -> Self {
        let mut v = vec![Rational::zero(); n];
        v[component] = Rational::one();
        let mut seq = Self::zero(s, n, orientation);
        seq.entries.insert(at, v);
        seq
    }

    pub fn dim(&self) -> usize {
        self.s
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn entries(&self) -> &BTreeMap<MultiIndex, Vec<Rational>> {
        &self.entries
    }

    pub fn get(&self, idx: &MultiIndex) -> Option<&Vec<Rational>> {
        self.entries.get(idx)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_at(&mut self, idx: MultiIndex, v: &[Rational]) {
        let slot = self.entries.entry(idx).or_insert_with(|| vec![Rational::zero(); v.len()]);
        for (a, b) in slot.iter_mut().zip(v) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, other: &VectorSequence, factor: &Rational) {
        for (k, v) in &other.entries {
            let scaled: Vec<Rational> = v.iter().map(|x| x * factor).collect();
            self.add_at(k.clone(), &scaled);
        }
        self.prune();
    }

    pub fn shifted(&self, offset: &MultiIndex) -> VectorSequence {
        let entries = self.entries.iter().map(|(k, v)| (k.add(offset), v.clone())).collect();
        VectorSequence { entries, ..self.clone() }
    }

    pub fn support_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut it = self.entries.keys();
        let first = it.next()?;
        let mut lo = first.0.clone();
        let mut hi = first.0.clone();
        for k in it {
            for (d, &x) in k.0.iter().enumerate() {
                lo[d] = lo[d].min(x);
                hi[d] = hi[d].max(x);
            }
        }
        Some((lo, hi))
    }

    pub fn sup_norm(&self) -> Rational {
        self.entries.values().flatten().map(rational::abs).max().unwrap_or_else(Rational::zero)
    }

    /// Flattens onto the grid `[0, extent]^s` (lexicographic points, components fastest).
    /// `None` if the support leaves the grid.
    pub fn flatten(&self, extent: i64) -> Option<Vec<Rational>> {
        let grid = box_points(&vec![0; self.s], &vec![extent; self.s]);
        let lo = vec![0; self.s];
        let hi = vec![extent; self.s];
        if self.entries.keys().any(|k| !k.within(&lo, &hi)) {
            return None;
        }
        let mut out = Vec::with_capacity(grid.len() * self.n);
        for p in &grid {
            match self.entries.get(p) {
                Some(v) => out.extend(v.iter().cloned()),
                None => out.extend(std::iter::repeat_n(Rational::zero(), self.n)),
            }
        }
        Some(out)
    }

    pub fn from_flat(s: usize, n: usize, extent: i64, orientation: Orientation, flat: &[Rational]) -> Self {
        let grid = box_points(&vec![0; s], &vec![extent; s]);
        let entries = grid.into_iter().enumerate().map(|(i, p)| (p, flat[i * n..(i + 1) * n].to_vec()));
        let mut seq = VectorSequence { s, n, orientation, entries: entries.collect() };
        seq.prune();
        seq
    }

    pub(crate) fn prune(&mut self) {
        self.entries.retain(|_, v| v.iter().any(|x| !x.is_zero()));
    }
}

impl fmt::Debug for VectorSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<(MultiIndex, Vec<String>)> =
            self.entries.iter().map(|(k, v)| (k.clone(), v.iter().map(rational::format_rational).collect())).collect();
        f.debug_map().entries(items.iter().map(|(k, v)| (k, v))).finish()
    }
}

/// `S_A c(α) = Σ_β A(α - 2β) c(β)`.
pub fn apply_subdivision(mask: &MatrixMask, c: &VectorSequence) -> Result<VectorSequence> {
    apply_dilated(mask, c, 2)
}

/// `Σ_β M(α - dilation·β) c(β)`, the operator of an iterated mask.
pub fn apply_dilated(mask: &MatrixMask, c: &VectorSequence, dilation: i64) -> Result<VectorSequence> {
    if mask.cols != c.n || mask.s != c.s {
        return Err(Error::DimensionMismatch(format!(
            "mask is {}x{} on Z^{}, sequence has width {} on Z^{}",
            mask.rows, mask.cols, mask.s, c.n, c.s
        )));
    }
    let mut out = VectorSequence::zero(mask.s, mask.rows, Orientation::Column);
    for (beta, cv) in &c.entries {
        let base = beta.scale(dilation);
        for (gamma, a) in &mask.entries {
            out.add_at(gamma.add(&base), &a.mul_vec(cv));
        }
    }
    out.prune();
    Ok(out)
}

/// Mask of `S_A^r`, acting with dilation `2^r`: `A^(r)(α) = Σ_β A(α - 2β) A^(r-1)(β)`.
pub fn iterate_mask(mask: &MatrixMask, r: u32) -> Result<MatrixMask> {
    if r == 0 {
        return Err(Error::Shape("iteration depth must be at least 1".into()));
    }
    if !mask.is_square() {
        return Err(Error::Shape("iterated masks must be square".into()));
    }
    let mut current = mask.clone();
    for _ in 1..r {
        let mut acc: BTreeMap<MultiIndex, RatMatrix> = BTreeMap::new();
        for (beta, prev) in &current.entries {
            let base = beta.scale(2);
            for (gamma, a) in &mask.entries {
                let prod = a.mul(prev);
                acc.entry(gamma.add(&base)).and_modify(|m| m.add_assign(&prod)).or_insert(prod);
            }
        }
        current = MatrixMask::from_sums(mask.s, mask.rows, mask.cols, acc);
    }
    Ok(current)
}

fn check_point_len(mask: &MatrixMask, len: usize) -> Result<()> {
    if len != mask.s {
        return Err(Error::DimensionMismatch(format!("point has {len} components, mask lives on Z^{}", mask.s)));
    }
    Ok(())
}

fn monomial(z: &[Rational], alpha: &MultiIndex) -> Result<Rational> {
    let mut acc = Rational::one();
    for (zi, &a) in z.iter().zip(alpha.components()) {
        acc *= rational::pow(zi, a)?;
    }
    Ok(acc)
}

/// Exact symbol `2^{-s} Σ_α A(α) z^α` at a rational point.
pub fn symbol_eval(mask: &MatrixMask, z: &[Rational]) -> Result<RatMatrix> {
    check_point_len(mask, z.len())?;
    if z.iter().any(Zero::is_zero) {
        return Err(Error::ZeroComponent);
    }
    let mut acc = RatMatrix::zeros(mask.rows, mask.cols);
    for (alpha, a) in &mask.entries {
        acc.add_assign(&a.scale(&monomial(z, alpha)?));
    }
    Ok(acc.scale(&rational::pow2(-(mask.s as i64))))
}

/// Floating symbol at a complex point.
pub fn symbol_eval_complex(mask: &MatrixMask, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
    check_point_len(mask, z.len())?;
    if z.iter().any(|c| c.norm() == 0.0) {
        return Err(Error::ZeroComponent);
    }
    let mut acc = DMatrix::<Complex64>::zeros(mask.rows, mask.cols);
    for (alpha, a) in &mask.entries {
        let w: Complex64 = z.iter().zip(alpha.components()).map(|(zi, &e)| zi.powi(e as i32)).product();
        let af = a.to_f64();
        acc += af.map(|x| Complex64::new(x, 0.0)) * w;
    }
    Ok(acc * Complex64::new(0.5f64.powi(mask.s as i32), 0.0))
}

/// Sub-symbol `Σ_α M(ε - 2α) z^α` (no `2^{-s}` factor).
pub fn subsymbol(mask: &MatrixMask, eps: &MultiIndex, z: &[Rational]) -> Result<RatMatrix> {
    check_point_len(mask, z.len())?;
    if eps.dim() != mask.s || eps.components().iter().any(|&e| e != 0 && e != 1) {
        return Err(Error::DimensionMismatch(format!("coset {eps:?} is not in {{0,1}}^{}", mask.s)));
    }
    if z.iter().any(Zero::is_zero) {
        return Err(Error::ZeroComponent);
    }
    let mut acc = RatMatrix::zeros(mask.rows, mask.cols);
    for (gamma, m) in &mask.entries {
        if let Some(alpha) = eps.sub(gamma).div_exact(2) {
            acc.add_assign(&m.scale(&monomial(z, &alpha)?));
        }
    }
    Ok(acc)
}

/// `max_α |Σ_β |M^(r)(α - 2^r β)||_∞` over residues `α ∈ {0,…,2^r-1}^s`; equals `‖S_M^r‖_∞`.
pub fn coset_infinity_norm(mask: &MatrixMask, r: u32) -> Result<Rational> {
    let iterated = iterate_mask(mask, r)?;
    Ok(coset_norm_of_iterated(&iterated, r))
}

pub(crate) fn coset_norm_of_iterated(iterated: &MatrixMask, r: u32) -> Rational {
    let modulus = 1i64 << r;
    let mut sums: BTreeMap<MultiIndex, RatMatrix> = BTreeMap::new();
    for (k, v) in iterated.entries() {
        let abs = v.abs();
        sums.entry(k.residue(modulus)).and_modify(|m| m.add_assign(&abs)).or_insert(abs);
    }
    sums.values().map(RatMatrix::inf_norm).max().unwrap_or_else(Rational::zero)
}
