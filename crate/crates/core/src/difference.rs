//! Difference operators and difference masks.
//!
//! For a mask `A` with fixed space `E_A` of dimension `m`, the `k`-th difference operator takes
//! `k`-th order backward differences `∇_ℓ c = -c + c(· - e_ℓ)` of the first `m` components and
//! passes the remaining `n - m` components through. A difference mask `B_k` satisfies
//! `∇^k S_A = S_{B_k} ∇^k`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{EchelonBasis, RatMatrix};
use crate::mask::{self, apply_subdivision, cosets, MatrixMask, MultiIndex, VectorSequence};
use crate::poly::{mask_from_polys, Poly};
use crate::rational::Rational;

/// Layout of the stacked output of `∇^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferenceSpec {
    pub k: u32,
    pub s: usize,
    pub n: usize,
    pub m: usize,
    /// Multi-indices with `|μ| = k` in graded lexicographic order.
    pub mus: Vec<MultiIndex>,
}

/// `binom(s + k - 1, s - 1)`.
pub fn difference_count(s: usize, k: u32) -> usize {
    let (top, bottom) = (s + k as usize - 1, s - 1);
    (0..bottom).fold(1usize, |acc, i| acc * (top - i) / (i + 1))
}

/// All `μ ∈ N_0^s` with `|μ| = k`, first component descending.
pub fn graded_lex(s: usize, k: u32) -> Vec<MultiIndex> {
    fn rec(s: usize, k: i64, prefix: &mut Vec<i64>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == s {
            prefix.push(k);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=k).rev() {
            prefix.push(first);
            rec(s, k - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(s, k as i64, &mut Vec::new(), &mut out);
    out
}

impl DifferenceSpec {
    pub fn new(s: usize, n: usize, m: usize, k: u32) -> Result<Self> {
        if k == 0 || s == 0 {
            return Err(Error::Shape("difference order and dimension must be positive".into()));
        }
        if m == 0 || m > n {
            return Err(Error::Shape(format!("block size m = {m} must satisfy 1 <= m <= n = {n}")));
        }
        if s > 1 && k > 1 && m < n {
            return Err(Error::Unsupported(
                "higher-order differences of multivariate vector data with a pass-through block".into(),
            ));
        }
        let mus = graded_lex(s, k);
        debug_assert_eq!(mus.len(), difference_count(s, k));
        Ok(DifferenceSpec { k, s, n, m, mus })
    }

    /// Number of stacked rows: `m · N_{s,k}` differenced rows plus `n - m` passed through once.
    pub fn rows(&self) -> usize {
        self.m * self.mus.len() + (self.n - self.m)
    }
}

/// Joint fixed space `E_A` of the coset sums.
#[derive(Clone, Debug)]
pub struct FixedSpace {
    pub basis: Vec<Vec<Rational>>,
}

impl FixedSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// `E_A = {v : Σ_α A(ε - 2α) v = v for every ε ∈ {0,1}^s}`.
pub fn compute_ea(mask: &MatrixMask) -> Result<FixedSpace> {
    if !mask.is_square() {
        return Err(Error::Shape("E_A needs a square mask".into()));
    }
    let n = mask.rows();
    let id = RatMatrix::identity(n);
    let mut stacked = Vec::new();
    for eps in cosets(mask.dim()) {
        let d = mask.coset_sum(&eps).sub(&id);
        for i in 0..n {
            stacked.push(d.row(i).to_vec());
        }
    }
    let system = RatMatrix::from_rows(stacked)?;
    Ok(FixedSpace { basis: system.nullspace() })
}

/// Change of basis `T` whose leading columns span `E_A`; returns `T^{-1} A T` and `T`.
///
/// The rotated mask has `E = span{e_1, …, e_m}`. `T` is the identity when that already holds.
pub fn rotate_to_leading(mask: &MatrixMask) -> Result<(MatrixMask, RatMatrix, usize)> {
    let fixed = compute_ea(mask)?;
    let n = mask.rows();
    let m = fixed.dim();
    let leading_already = (0..m).all(|j| {
        let mut e = vec![Rational::zero(); n];
        e[j] = Rational::one();
        let mut span = EchelonBasis::new();
        for v in &fixed.basis {
            span.insert(v);
        }
        !span.is_independent(&e)
    });
    if leading_already {
        return Ok((mask.clone(), RatMatrix::identity(n), m));
    }
    let mut cols = EchelonBasis::new();
    let mut chosen: Vec<Vec<Rational>> = Vec::new();
    for v in &fixed.basis {
        cols.insert(v);
        chosen.push(v.clone());
    }
    for j in 0..n {
        let mut e = vec![Rational::zero(); n];
        e[j] = Rational::one();
        if cols.insert(&e) {
            chosen.push(e);
        }
    }
    let t = RatMatrix::from_rows(chosen)?.transpose();
    let t_inv = t.inverse()?;
    let rotated = mask.map_entries(n, n, |a| t_inv.mul(a).mul(&t));
    Ok((rotated, t, m))
}

/// `∇_axis` on the first `m` components (axis is 0-based).
pub fn nabla_apply(c: &VectorSequence, axis: usize, m: usize) -> Result<VectorSequence> {
    if axis >= c.dim() {
        return Err(Error::DimensionMismatch(format!("axis {} out of range for Z^{}", axis + 1, c.dim())));
    }
    if m > c.width() {
        return Err(Error::DimensionMismatch(format!("block size {m} exceeds width {}", c.width())));
    }
    let unit = MultiIndex::unit(c.dim(), axis);
    let mut out = VectorSequence::zero(c.dim(), c.width(), c.orientation());
    for (k, v) in c.entries() {
        let mut here: Vec<Rational> = v.clone();
        for x in here.iter_mut().take(m) {
            *x = -x.clone();
        }
        out.add_at(k.clone(), &here);
        let mut next = vec![Rational::zero(); v.len()];
        next[..m].clone_from_slice(&v[..m]);
        out.add_at(k.add(&unit), &next);
    }
    out.prune();
    Ok(out)
}

/// Stacked `∇^k c`: for each `μ` the `m` differenced rows, then the `n - m` pass-through rows.
pub fn nabla_k_apply(c: &VectorSequence, spec: &DifferenceSpec) -> Result<VectorSequence> {
    if c.width() != spec.n || c.dim() != spec.s {
        return Err(Error::DimensionMismatch(format!(
            "difference layout is for width {} on Z^{}, sequence has width {} on Z^{}",
            spec.n,
            spec.s,
            c.width(),
            c.dim()
        )));
    }
    let blocks: Vec<VectorSequence> = spec
        .mus
        .iter()
        .map(|mu| {
            let mut d = c.clone();
            for (axis, &times) in mu.components().iter().enumerate() {
                for _ in 0..times {
                    d = nabla_apply(&d, axis, spec.m)?;
                }
            }
            Ok(d)
        })
        .collect::<Result<_>>()?;
    let mut out = VectorSequence::zero(spec.s, spec.rows(), c.orientation());
    let rows = spec.rows();
    for (b, block) in blocks.iter().enumerate() {
        for (k, v) in block.entries() {
            let mut row = vec![Rational::zero(); rows];
            row[b * spec.m..(b + 1) * spec.m].clone_from_slice(&v[..spec.m]);
            out.add_at(k.clone(), &row);
        }
    }
    let tail = spec.m * spec.mus.len();
    for (k, v) in c.entries() {
        let mut row = vec![Rational::zero(); rows];
        row[tail..].clone_from_slice(&v[spec.m..]);
        out.add_at(k.clone(), &row);
    }
    out.prune();
    Ok(out)
}

/// A difference mask together with the data needed to use it.
#[derive(Clone, Debug)]
pub struct FactorizationResult {
    pub b_mask: MatrixMask,
    pub k: u32,
    pub m: usize,
    pub verified: bool,
    pub canonical: bool,
    /// Change of basis applied to `A` before differencing, when `E_A` was not leading.
    pub rotation: Option<RatMatrix>,
}

impl FactorizationResult {
    pub fn dim(&self) -> usize {
        self.b_mask.dim()
    }

    /// Wraps a user-supplied difference mask after checking the identity exactly.
    pub fn from_supplied(a: &MatrixMask, b: MatrixMask, k: u32, m: usize) -> Result<Self> {
        let verified = verify_factorization(a, &b, k, m)?;
        Ok(FactorizationResult { b_mask: b, k, m, verified, canonical: false, rotation: None })
    }
}

/// Factorizes univariate masks: scalar of any order, vector of order one.
pub fn factor_univariate(mask: &MatrixMask, k: u32) -> Result<FactorizationResult> {
    if mask.dim() != 1 {
        return Err(Error::DimensionMismatch("univariate factorization needs s = 1".into()));
    }
    if !mask.is_square() {
        return Err(Error::Shape("subdivision masks are square".into()));
    }
    if k == 0 {
        return Err(Error::Shape("difference order must be positive".into()));
    }
    let n = mask.rows();
    let (a, rotation, m) = if n == 1 {
        (mask.clone(), None, 1)
    } else {
        if k > 1 {
            return Err(Error::Unsupported(format!(
                "order-{k} difference masks of vector schemes are not synthesized; supply B_{k} and verify it"
            )));
        }
        let (rotated, t, m) = rotate_to_leading(mask)?;
        if m == 0 {
            return Err(Error::SumRule("E_A is trivial, no difference mask exists".into()));
        }
        let rotation = (t != RatMatrix::identity(n)).then_some(t);
        (rotated, rotation, m)
    };
    let mut polys = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let mut p = Poly::from_mask_entry(&a, i, j);
            if i < m {
                for _ in 0..k {
                    p = p.mul_z_minus_one(0);
                }
            }
            if j < m {
                for _ in 0..k {
                    let (q, r) = p.div_rem_z2_minus_one(0);
                    if !r.is_zero() {
                        return Err(Error::SumRule(format!(
                            "entry ({}, {}) of the symbol is not divisible by (1 + z)^{k}",
                            i + 1,
                            j + 1
                        )));
                    }
                    p = q;
                }
            }
            row.push(p);
        }
        polys.push(row);
    }
    let b = mask_from_polys(1, &polys);
    let verified = verify_factorization(&a, &b, k, m)?;
    Ok(FactorizationResult { b_mask: b, k, m, verified, canonical: true, rotation })
}

/// First-order difference mask of a scalar multivariate mask.
///
/// Row `i` divides `(z_i - 1) A(z)` by `z_j^2 - 1` for `j = i` first and then the remaining
/// variables in increasing order; quotients become `B_ij` and the final remainder must vanish.
pub fn factor_multivariate_scalar(mask: &MatrixMask) -> Result<FactorizationResult> {
    let s = mask.dim();
    if mask.rows() != 1 || mask.cols() != 1 {
        return Err(Error::Unsupported("multivariate vector difference masks must be supplied".into()));
    }
    if s < 2 {
        return Err(Error::DimensionMismatch("multivariate factorization needs s >= 2".into()));
    }
    let a = Poly::from_mask_entry(mask, 0, 0);
    let mut polys = Vec::with_capacity(s);
    for i in 0..s {
        let mut rem = a.mul_z_minus_one(i);
        let mut row = vec![Poly::zero(s); s];
        let order = std::iter::once(i).chain((0..s).filter(|&j| j != i));
        for j in order {
            let (q, r) = rem.div_rem_z2_minus_one(j);
            row[j] = q;
            rem = r;
        }
        if !rem.is_zero() {
            return Err(Error::SumRule("mask violates first-order sum rules".into()));
        }
        polys.push(row);
    }
    let b = mask_from_polys(s, &polys);
    let verified = verify_factorization(mask, &b, 1, 1)?;
    Ok(FactorizationResult { b_mask: b, k: 1, m: 1, verified, canonical: true, rotation: None })
}

/// Canonical factorization for every supported `(s, n, k)` combination.
pub fn factor(mask: &MatrixMask, k: u32) -> Result<FactorizationResult> {
    match (mask.dim(), mask.rows()) {
        (1, _) => factor_univariate(mask, k),
        (_, 1) if k == 1 => factor_multivariate_scalar(mask),
        (_, 1) => Err(Error::Unsupported(format!("order-{k} difference masks of multivariate schemes"))),
        _ => Err(Error::Unsupported("difference masks of multivariate vector schemes must be supplied".into())),
    }
}

/// Exact check of `∇^k S_A = S_B ∇^k` on the generators `δ e_j (· - β)`.
///
/// Both sides are linear and satisfy `T(c(· - β)) = (T c)(· - 2β)`, so the generators with
/// `β ∈ {0,1}^s` determine the operators completely.
pub fn verify_factorization(a: &MatrixMask, b: &MatrixMask, k: u32, m: usize) -> Result<bool> {
    if !a.is_square() || !b.is_square() || a.dim() != b.dim() {
        return Err(Error::Shape("factorization needs square masks on the same lattice".into()));
    }
    let spec = DifferenceSpec::new(a.dim(), a.rows(), m, k)?;
    if b.rows() != spec.rows() {
        return Err(Error::Shape(format!(
            "difference mask is {}x{}, expected {}x{}",
            b.rows(),
            b.cols(),
            spec.rows(),
            spec.rows()
        )));
    }
    for beta in cosets(a.dim()) {
        for j in 0..a.rows() {
            let c = VectorSequence::delta(a.dim(), a.rows(), j, beta.clone(), mask::Orientation::Column);
            let lhs = nabla_k_apply(&apply_subdivision(a, &c)?, &spec)?;
            let rhs = apply_subdivision(b, &nabla_k_apply(&c, &spec)?)?;
            if lhs != rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Eigen-independent summary used by divergence checks: the sub-symbols at `(1, …, 1)`.
pub fn subsymbols_at_one(b: &MatrixMask) -> Result<Vec<(MultiIndex, RatMatrix)>> {
    let one = vec![Rational::one(); b.dim()];
    cosets(b.dim()).into_iter().map(|eps| Ok((eps.clone(), mask::subsymbol(b, &eps, &one)?))).collect()
}
