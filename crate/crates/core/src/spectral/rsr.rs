//! Restricted norms `‖S^r_B|_∇‖_∞` of a difference scheme and the resulting radius estimates.
//!
//! The norm is the operator norm of `S^r_B` on sequences that are differences of some `c`.
//! In one variable every bounded sequence is such a difference, so the restricted norm is the
//! coset formula. With several variables a difference field must be curl free, and the norm
//! becomes a family of exact linear programs.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::difference::FactorizationResult;
use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::lp::{solve_lp, LinearProgram};
use crate::mask::{self, box_points, coset_infinity_norm, iterate_mask, MatrixMask, MultiIndex};
use crate::rational::Rational;
use crate::spectral::eigen::spectral_radius;
use crate::spectral::jsr::ExactRoot;
use crate::spectral::norms::NormValue;

/// Radius of the index window used by the good-set method.
const GOODSET_RADIUS: i64 = 2;

/// One way of computing (or bounding) the restricted spectral radius.
pub trait RsrMethod: Send + Sync {
    fn id(&self) -> &'static str;
    /// `Ok(None)` when the method does not apply to this difference mask.
    fn estimate(&self, b: &FactorizationResult, r: u32) -> Result<Option<RsrEstimate>>;
}

#[derive(Clone, Debug, Serialize)]
pub struct RsrEstimate {
    pub method: String,
    pub depth: u32,
    /// `‖S^r_B|_∇‖_∞`, or the radius itself for methods that compute it directly.
    pub value: String,
    /// Upper bound on the restricted spectral radius implied by `value`.
    pub bound: f64,
    pub exact: Option<ExactRoot>,
    /// True when `bound` is the radius, not just an upper bound.
    pub is_radius: bool,
}

impl RsrEstimate {
    fn from_norm(method: &str, depth: u32, norm: Rational) -> Self {
        let exact = ExactRoot { value: norm.clone(), root: depth };
        RsrEstimate {
            method: method.to_string(),
            depth,
            value: NormValue::Exact(norm).to_string(),
            bound: exact.to_f64(),
            exact: Some(exact),
            is_radius: false,
        }
    }
}

pub struct ClosedForm;
pub struct LpMethod;
pub struct Nonnegative;
pub struct GoodSet;

impl RsrMethod for ClosedForm {
    fn id(&self) -> &'static str {
        "closed-form"
    }

    fn estimate(&self, b: &FactorizationResult, r: u32) -> Result<Option<RsrEstimate>> {
        if b.b_mask.dim() != 1 {
            return Ok(None);
        }
        Ok(Some(RsrEstimate::from_norm(self.id(), r, coset_infinity_norm(&b.b_mask, r)?)))
    }
}

impl RsrMethod for LpMethod {
    fn id(&self) -> &'static str {
        "lp"
    }

    fn estimate(&self, b: &FactorizationResult, r: u32) -> Result<Option<RsrEstimate>> {
        Ok(Some(RsrEstimate::from_norm(self.id(), r, restricted_norm_lp(b, r)?)))
    }
}

impl RsrMethod for Nonnegative {
    fn id(&self) -> &'static str {
        "nonnegative"
    }

    fn estimate(&self, b: &FactorizationResult, r: u32) -> Result<Option<RsrEstimate>> {
        Ok(restricted_norm_nonnegative_shortcut(b, r)?.map(|q| RsrEstimate::from_norm(self.id(), r, q)))
    }
}

impl RsrMethod for GoodSet {
    fn id(&self) -> &'static str {
        "goodset"
    }

    fn estimate(&self, b: &FactorizationResult, _r: u32) -> Result<Option<RsrEstimate>> {
        Ok(exact_rsr_goodset(b)?.map(|rho| RsrEstimate {
            method: self.id().to_string(),
            depth: 1,
            value: format!("{rho:.12}"),
            bound: rho,
            exact: None,
            is_radius: true,
        }))
    }
}

/// Methods by name: `closed-form`, `goodset`, `lp`, `nonnegative`.
pub struct RsrRegistry {
    methods: BTreeMap<&'static str, Box<dyn RsrMethod>>,
}

impl Default for RsrRegistry {
    fn default() -> Self {
        let mut r = RsrRegistry { methods: BTreeMap::new() };
        r.register(Box::new(ClosedForm));
        r.register(Box::new(LpMethod));
        r.register(Box::new(Nonnegative));
        r.register(Box::new(GoodSet));
        r
    }
}

impl RsrRegistry {
    pub fn register(&mut self, method: Box<dyn RsrMethod>) {
        self.methods.insert(method.id(), method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn RsrMethod> {
        self.methods
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Unsupported(format!("unknown method '{name}' (known: {})", self.names().join(", "))))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.keys().copied().collect()
    }
}

fn require_verified(b: &FactorizationResult) -> Result<()> {
    if !b.verified {
        return Err(Error::SumRule("difference mask does not satisfy the factorization identity".into()));
    }
    Ok(())
}

/// `‖S^r_B|_∇‖_∞` by the cheapest exact method: coset formula in one variable, LP otherwise.
pub fn restricted_norm(b: &FactorizationResult, r: u32) -> Result<Rational> {
    require_verified(b)?;
    if b.b_mask.dim() == 1 {
        coset_infinity_norm(&b.b_mask, r)
    } else {
        restricted_norm_lp(b, r)
    }
}

/// The unrestricted norm when `B^(r)` has no negative entry, where both norms coincide.
pub fn restricted_norm_nonnegative_shortcut(b: &FactorizationResult, r: u32) -> Result<Option<Rational>> {
    let iterated = iterate_mask(&b.b_mask, r)?;
    if !iterated.entries().values().all(RatMatrix::is_nonnegative) {
        return Ok(None);
    }
    Ok(Some(mask::coset_norm_of_iterated(&iterated, r)))
}

/// Layout of the difference field `d` seen by `S_B`.
struct FieldLayout {
    s: usize,
    m: usize,
    /// Width of `d`: `s·m` differenced components followed by the pass-through ones.
    width: usize,
}

impl FieldLayout {
    fn new(b: &FactorizationResult) -> Result<Self> {
        let s = b.b_mask.dim();
        let width = b.b_mask.cols();
        if s > 1 && b.k != 1 {
            return Err(Error::Unsupported(format!("restricted norm for s = {s} and k = {}", b.k)));
        }
        if s > 1 && width < s * b.m {
            return Err(Error::Shape(format!("difference mask has {width} columns, expected at least {}", s * b.m)));
        }
        Ok(FieldLayout { s, m: b.m, width })
    }

    /// Column of `d` holding the axis-`axis` difference of component `j < m`.
    fn column(&self, axis: usize, j: usize) -> usize {
        if self.s == 1 {
            j
        } else {
            axis * self.m + j
        }
    }
}

/// Linear program for one output row and residue, with the `(column, β)` of every variable.
pub struct LpInstance {
    pub program: LinearProgram,
    pub labels: Vec<(usize, MultiIndex)>,
}

/// Builds the LP maximizing `(S^r_B d)_row(α)` over difference fields with `|d| <= 1`.
pub fn rsr_lp_instance(b: &FactorizationResult, r: u32, row: usize, alpha: &MultiIndex) -> Result<LpInstance> {
    let iterated = iterate_mask(&b.b_mask, r)?;
    lp_instance_from_iterated(b, &iterated, r, row, alpha)
}

fn lp_instance_from_iterated(
    b: &FactorizationResult,
    iterated: &MatrixMask,
    r: u32,
    row: usize,
    alpha: &MultiIndex,
) -> Result<LpInstance> {
    let layout = FieldLayout::new(b)?;
    let s = layout.s;
    if row >= iterated.rows() || alpha.dim() != s {
        return Err(Error::Shape("row or residue out of range".into()));
    }
    let modulus = 1i64 << r;
    let (lo_b, hi_b) = match iterated.support_box() {
        Some(bx) => bx,
        None => {
            return Ok(LpInstance {
                program: LinearProgram::boxed(Vec::new(), Vec::new(), Vec::new()),
                labels: Vec::new(),
            })
        }
    };
    // β with α - 2^r β inside the support box of B^(r).
    let a = alpha.components();
    let lo: Vec<i64> = (0..s)
        .map(|i| (a[i] - hi_b[i]).div_euclid(modulus) + i64::from((a[i] - hi_b[i]).rem_euclid(modulus) != 0))
        .collect();
    let hi: Vec<i64> = (0..s).map(|i| (a[i] - lo_b[i]).div_euclid(modulus)).collect();
    let points = box_points(&lo, &hi);
    let position: BTreeMap<&MultiIndex, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let count = points.len();
    let var = |col: usize, pos: usize| col * count + pos;

    let mut objective = vec![Rational::zero(); layout.width * count];
    for (pos, beta) in points.iter().enumerate() {
        if let Some(coeff) = iterated.get(&alpha.sub(&beta.scale(modulus))) {
            for (col, c) in coeff.row(row).iter().enumerate() {
                objective[var(col, pos)] += c;
            }
        }
    }

    // Curl-free constraints on every unit square inside the window.
    let mut equalities: Vec<Vec<Rational>> = Vec::new();
    for (pos, beta) in points.iter().enumerate() {
        for l in 0..s {
            for l2 in l + 1..s {
                let (Some(&p_l), Some(&p_l2)) = (
                    position.get(&beta.sub(&MultiIndex::unit(s, l))),
                    position.get(&beta.sub(&MultiIndex::unit(s, l2))),
                ) else {
                    continue;
                };
                for j in 0..layout.m {
                    let mut eq = vec![Rational::zero(); objective.len()];
                    eq[var(layout.column(l, j), pos)] += Rational::one();
                    eq[var(layout.column(l, j), p_l2)] -= Rational::one();
                    eq[var(layout.column(l2, j), pos)] -= Rational::one();
                    eq[var(layout.column(l2, j), p_l)] += Rational::one();
                    equalities.push(eq);
                }
            }
        }
    }

    let n = objective.len();
    let rhs = vec![Rational::zero(); equalities.len()];
    let equalities = if equalities.is_empty() { RatMatrix::zeros(0, n) } else { RatMatrix::from_rows(equalities)? };
    let program =
        LinearProgram { objective, lower: vec![-Rational::one(); n], upper: vec![Rational::one(); n], equalities, rhs };
    let labels = (0..layout.width).flat_map(|col| points.iter().map(move |p| (col, p.clone()))).collect();
    Ok(LpInstance { program, labels })
}

/// `‖S^r_B|_∇‖_∞` as the largest optimum over all rows and residues.
pub fn restricted_norm_lp(b: &FactorizationResult, r: u32) -> Result<Rational> {
    require_verified(b)?;
    let iterated = iterate_mask(&b.b_mask, r)?;
    let s = b.b_mask.dim();
    let top = vec![(1i64 << r) - 1; s];
    let residues = box_points(&vec![0; s], &top);
    let mut best = Rational::zero();
    for row in 0..iterated.rows() {
        for alpha in &residues {
            let inst = lp_instance_from_iterated(b, &iterated, r, row, alpha)?;
            if inst.program.num_vars() == 0 {
                continue;
            }
            let sol = solve_lp(&inst.program).map_err(|e| match e {
                Error::Infeasible => Error::Internal("restricted-norm LP reported infeasible".into()),
                other => other,
            })?;
            best = best.max(sol.value);
        }
    }
    Ok(best)
}

/// Exact radius of a two-variable first-difference scheme whose rows decouple, computed as the
/// largest spectral radius of `[B_ii(α - 2β)]` over `α, β ∈ [-2, 2]^2`.
pub fn exact_rsr_goodset(b: &FactorizationResult) -> Result<Option<f64>> {
    let mask = &b.b_mask;
    if mask.dim() != 2 || b.k != 1 || !mask.is_square() {
        return Ok(None);
    }
    let decoupled =
        mask.entries().values().all(|m| (0..m.rows()).all(|i| (0..m.cols()).all(|j| i == j || m[(i, j)].is_zero())));
    if !decoupled {
        return Ok(None);
    }
    if mask.entries().values().flat_map(|m| m.iter()).any(Signed::is_negative) {
        return Ok(None);
    }
    let omega = box_points(&[-GOODSET_RADIUS; 2], &[GOODSET_RADIUS; 2]);
    let mut best: f64 = 0.0;
    for i in 0..mask.rows() {
        let rows: Vec<Vec<Rational>> = omega
            .iter()
            .map(|alpha| {
                omega
                    .iter()
                    .map(|beta| mask.get(&alpha.sub(&beta.scale(2))).map(|m| m[(i, i)].clone()).unwrap_or_default())
                    .collect()
            })
            .collect();
        best = best.max(spectral_radius(&RatMatrix::from_rows(rows)?)?);
    }
    Ok(Some(best))
}

/// Estimates at every depth `1..=max_depth` for one method, skipping inapplicable ones.
pub fn rsr_estimates(method: &dyn RsrMethod, b: &FactorizationResult, max_depth: u32) -> Result<Vec<RsrEstimate>> {
    require_verified(b)?;
    let mut out = Vec::new();
    for r in 1..=max_depth {
        match method.estimate(b, r)? {
            Some(e) => {
                let radius = e.is_radius;
                out.push(e);
                if radius {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(out)
}

/// Running minimum of the bounds, as recorded per depth.
pub fn best_bound(estimates: &[RsrEstimate]) -> Option<&RsrEstimate> {
    estimates.iter().fold(None, |best: Option<&RsrEstimate>, e| match best {
        None => Some(e),
        Some(cur) => {
            let better = match (&e.exact, &cur.exact) {
                (Some(a), Some(c)) => a.lt(c),
                _ => e.bound < cur.bound,
            };
            Some(if better { e } else { cur })
        }
    })
}
