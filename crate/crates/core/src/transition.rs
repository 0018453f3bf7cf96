//! Transition operators `𝒜_ε v = Σ_α v(α) A(ε + 2· - α)` on row sequences, their matrices over
//! `[0, N]^s`, invariant difference subspaces `V_k` and the restricted matrices `𝒜_ε|_{V_k}`.
//!
//! Restricted matrices store coordinates as rows: row `g` of `M_ε` holds the coordinates of
//! `𝒜_ε g`. A row vector of coordinates `c` therefore maps to `c · M_ε`, and the word
//! `(ε_1, …, ε_r)` applied as `𝒜_{ε_r} ⋯ 𝒜_{ε_1}` is represented by `M_{ε_1} ⋯ M_{ε_r}`.

use num_traits::Zero;
use serde::Serialize;

use crate::difference::{graded_lex, nabla_k_apply, DifferenceSpec};
use crate::error::{Error, Result};
use crate::linalg::{EchelonBasis, RatMatrix};
use crate::mask::{box_points, cosets, MatrixMask, MultiIndex, Orientation, VectorSequence};
use crate::rational::{format_rational, Rational};

/// The matrices `A_ε = [A^T(ε + 2α - β)]_{α,β ∈ [0,N]^s}`.
#[derive(Clone, Debug)]
pub struct TransitionSet {
    pub cosets: Vec<MultiIndex>,
    pub matrices: Vec<RatMatrix>,
    /// Grid points in flattening order; row `p·n + j` belongs to `(grid[p], j)`.
    pub grid: Vec<MultiIndex>,
    pub n: usize,
}

impl TransitionSet {
    pub fn index_of(&self, point: &MultiIndex, component: usize) -> Option<usize> {
        self.grid.binary_search(point).ok().map(|p| p * self.n + component)
    }
}

fn check_normalized(mask: &MatrixMask) -> Result<()> {
    if !mask.is_square() {
        return Err(Error::Shape("transition operators need a square mask".into()));
    }
    if !mask.is_normalized() {
        return Err(Error::Shape("mask support must lie in [0, N]^s".into()));
    }
    Ok(())
}

pub fn build_transition_set(mask: &MatrixMask) -> Result<TransitionSet> {
    check_normalized(mask)?;
    let s = mask.dim();
    let n = mask.rows();
    let big_n = mask.extent();
    let grid = box_points(&vec![0; s], &vec![big_n; s]);
    let size = grid.len() * n;
    let eps_list = cosets(s);
    let matrices = eps_list
        .iter()
        .map(|eps| {
            let mut m = RatMatrix::zeros(size, size);
            for (p, alpha) in grid.iter().enumerate() {
                let base = eps.add(&alpha.scale(2));
                for (q, beta) in grid.iter().enumerate() {
                    if let Some(a) = mask.get(&base.sub(beta)) {
                        for i in 0..n {
                            for j in 0..n {
                                m[(p * n + i, q * n + j)] = a[(j, i)].clone();
                            }
                        }
                    }
                }
            }
            m
        })
        .collect();
    Ok(TransitionSet { cosets: eps_list, matrices, grid, n })
}

/// `𝒜_ε v (γ) = Σ_α v(α) A(ε + 2γ - α)`.
pub fn apply_transition(mask: &MatrixMask, eps: &MultiIndex, v: &VectorSequence) -> Result<VectorSequence> {
    if v.width() != mask.rows() || v.dim() != mask.dim() {
        return Err(Error::DimensionMismatch(format!(
            "row sequence of width {} on Z^{} against a {}x{} mask on Z^{}",
            v.width(),
            v.dim(),
            mask.rows(),
            mask.cols(),
            mask.dim()
        )));
    }
    let mut out = VectorSequence::zero(v.dim(), mask.cols(), Orientation::Row);
    for (alpha, row) in v.entries() {
        // ε + 2γ - α = δ for every δ in the support with δ ≡ ε + α (mod 2)
        for (delta, a) in mask.entries() {
            if let Some(gamma) = delta.add(alpha).sub(eps).div_exact(2) {
                out.add_at(gamma, &a.vec_mul(row));
            }
        }
    }
    out.prune();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    ScalarUnivariate,
    VectorUnivariate,
    ScalarMultivariate,
    UserSupplied,
}

/// Ordered basis of an invariant subspace of row sequences supported in `[0, N]^s`.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    generators: Vec<VectorSequence>,
    coordinate_matrix: RatMatrix,
    pivots: Vec<usize>,
    pivot_inverse: RatMatrix,
    extent: i64,
    k: u32,
    kind: BasisKind,
}

impl SubspaceBasis {
    fn new(mask: &MatrixMask, generators: Vec<VectorSequence>, k: u32, kind: BasisKind) -> Result<Self> {
        check_normalized(mask)?;
        if generators.is_empty() {
            return Err(Error::InvalidBasis("no generators".into()));
        }
        let extent = mask.extent();
        let mut rows = Vec::with_capacity(generators.len());
        for (i, g) in generators.iter().enumerate() {
            if g.dim() != mask.dim() || g.width() != mask.rows() {
                return Err(Error::InvalidBasis(format!("generator {i} has the wrong shape")));
            }
            let flat = g
                .flatten(extent)
                .ok_or_else(|| Error::InvalidBasis(format!("generator {i} leaves [0, {extent}]^{}", mask.dim())))?;
            rows.push(flat);
        }
        let coordinate_matrix = RatMatrix::from_rows(rows)?;
        let (_, pivots) = coordinate_matrix.rref();
        if pivots.len() < generators.len() {
            return Err(Error::Dependent);
        }
        let square = RatMatrix::from_rows(
            (0..generators.len())
                .map(|i| pivots.iter().map(|&p| coordinate_matrix[(i, p)].clone()).collect())
                .collect(),
        )?;
        let pivot_inverse = square.inverse()?;
        let generators = generators.into_iter().map(|g| as_row(&g)).collect();
        let basis = SubspaceBasis { generators, coordinate_matrix, pivots, pivot_inverse, extent, k, kind };
        restrict(mask, &basis)?;
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[VectorSequence] {
        &self.generators
    }

    pub fn coordinate_matrix(&self) -> &RatMatrix {
        &self.coordinate_matrix
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    fn coordinates_flat(&self, flat: &[Rational]) -> Option<Vec<Rational>> {
        let picked: Vec<Rational> = self.pivots.iter().map(|&p| flat[p].clone()).collect();
        let coords = self.pivot_inverse.vec_mul(&picked);
        (self.coordinate_matrix.vec_mul(&coords) == flat).then_some(coords)
    }

    /// Exact coordinates of `v`; `None` when `v` is not in the span.
    pub fn coordinates(&self, v: &VectorSequence) -> Option<Vec<Rational>> {
        let flat = v.flatten(self.extent)?;
        self.coordinates_flat(&flat)
    }

    pub fn combine(&self, coords: &[Rational]) -> VectorSequence {
        let g = &self.generators[0];
        let flat = self.coordinate_matrix.vec_mul(coords);
        VectorSequence::from_flat(g.dim(), g.width(), self.extent, Orientation::Row, &flat)
    }
}

fn as_row(g: &VectorSequence) -> VectorSequence {
    if g.orientation() == Orientation::Row {
        return g.clone();
    }
    VectorSequence::new(g.dim(), g.width(), Orientation::Row, g.entries().iter().map(|(k, v)| (k.clone(), v.clone())))
        .expect("same entries")
}

fn row_delta(s: usize, n: usize, j: usize, at: MultiIndex) -> VectorSequence {
    VectorSequence::delta(s, n, j, at, Orientation::Row)
}

/// `(∇^k δ e_j)^T (· - at)` on `Z`.
fn univariate_difference(n: usize, m: usize, k: u32, j: usize, at: i64) -> Result<VectorSequence> {
    let spec = DifferenceSpec::new(1, n, m, k)?;
    let full = nabla_k_apply(&row_delta(1, n, j, MultiIndex::new(vec![at])), &spec)?;
    // For univariate data the stacked layout coincides with the original component order.
    VectorSequence::new(1, n, Orientation::Row, full.entries().iter().map(|(k, v)| (k.clone(), v.clone())))
}

fn mu_difference(s: usize, mu: &MultiIndex, at: MultiIndex) -> Result<VectorSequence> {
    let mut d = row_delta(s, 1, 0, at);
    for (axis, &times) in mu.components().iter().enumerate() {
        for _ in 0..times {
            d = crate::difference::nabla_apply(&d, axis, 1)?;
        }
    }
    Ok(d)
}

/// Moment rows `Σ_β v(β) (-β)^μ` for `|μ| < k` on the grid `[0, N]^s`.
fn moment_system(s: usize, extent: i64, k: u32) -> Result<RatMatrix> {
    let grid = box_points(&vec![0; s], &vec![extent; s]);
    let mut rows = Vec::new();
    for degree in 0..k {
        let mus = if degree == 0 { vec![MultiIndex::zeros(s)] } else { graded_lex(s, degree) };
        for mu in mus {
            rows.push(
                grid.iter()
                    .map(|beta| {
                        let v: i64 =
                            beta.components().iter().zip(mu.components()).map(|(&b, &e)| (-b).pow(e as u32)).product();
                        Rational::from_integer(v.into())
                    })
                    .collect(),
            );
        }
    }
    RatMatrix::from_rows(rows)
}

/// Checks that every generator annihilates the monomials of total degree `< k`.
pub fn annihilates_polynomials(basis: &SubspaceBasis, s: usize) -> Result<bool> {
    let moments = moment_system(s, basis.extent, basis.k)?;
    Ok((0..basis.dim()).all(|g| {
        let n = basis.generators[g].width();
        (0..n).all(|j| {
            let comp: Vec<Rational> = basis.coordinate_matrix.row(g).iter().skip(j).step_by(n).cloned().collect();
            moments.mul_vec(&comp).iter().all(Zero::is_zero)
        })
    }))
}

/// Canonical basis of `V_k` for a mask whose fixed space is spanned by the first `m` unit vectors.
pub fn build_vk_basis(mask: &MatrixMask, k: u32, m: usize) -> Result<SubspaceBasis> {
    check_normalized(mask)?;
    let s = mask.dim();
    let n = mask.rows();
    let big_n = mask.extent();
    if k == 0 {
        return Err(Error::Shape("difference order must be positive".into()));
    }
    match (s, n) {
        (1, 1) => {
            let gens = (0..=big_n - k as i64)
                .map(|beta| univariate_difference(1, 1, k, 0, beta))
                .collect::<Result<Vec<_>>>()?;
            SubspaceBasis::new(mask, gens, k, BasisKind::ScalarUnivariate)
        }
        (1, _) => {
            let mut gens = Vec::new();
            for j in 0..n {
                if j < m {
                    for beta in 0..=big_n - k as i64 {
                        gens.push(univariate_difference(n, m, k, j, beta)?);
                    }
                } else {
                    for beta in 0..=big_n {
                        gens.push(row_delta(1, n, j, MultiIndex::new(vec![beta])));
                    }
                }
            }
            SubspaceBasis::new(mask, gens, k, BasisKind::VectorUnivariate)
        }
        (_, 1) => {
            let gens = multivariate_generators(s, big_n, k)?;
            SubspaceBasis::new(mask, gens, k, BasisKind::ScalarMultivariate)
        }
        _ => {
            Err(Error::Unsupported("V_k is not constructed for multivariate vector masks; supply a basis file".into()))
        }
    }
}

/// Greedy choice among `∇^μ δ(· - β)` (μ in graded order, β nearest the centre of its admissible
/// box first), completed from the moment null space if the differences do not span `V_k`.
fn multivariate_generators(s: usize, big_n: i64, k: u32) -> Result<Vec<VectorSequence>> {
    let moments = moment_system(s, big_n, k)?;
    let target = moments.cols() - moments.rank();
    let mut span = EchelonBasis::new();
    let mut gens = Vec::new();
    'outer: for mu in graded_lex(s, k) {
        let lo = vec![0; s];
        let hi: Vec<i64> = mu.components().iter().map(|&e| big_n - e).collect();
        let mut betas = box_points(&lo, &hi);
        let centre: Vec<i64> = hi.clone();
        betas.sort_by_key(|b| {
            let d: i64 = b.components().iter().zip(&centre).map(|(&x, &c)| (2 * x - c).pow(2)).sum();
            (d, b.clone())
        });
        for beta in betas {
            if span.len() == target {
                break 'outer;
            }
            let g = mu_difference(s, &mu, beta)?;
            let flat = g.flatten(big_n).expect("inside the grid");
            if span.insert(&flat) {
                gens.push(g);
            }
        }
    }
    if span.len() < target {
        for v in moments.nullspace() {
            if span.len() == target {
                break;
            }
            if span.insert(&v) {
                gens.push(VectorSequence::from_flat(s, 1, big_n, Orientation::Row, &v));
            }
        }
    }
    Ok(gens)
}

/// Accepts an arbitrary basis after checking independence and invariance.
pub fn user_supplied_basis(mask: &MatrixMask, generators: Vec<VectorSequence>, k: u32) -> Result<SubspaceBasis> {
    SubspaceBasis::new(mask, generators, k, BasisKind::UserSupplied)
}

/// The restricted operators `𝒜_ε|_V` in coordinates-as-rows form.
#[derive(Clone, Debug)]
pub struct RestrictedFamily {
    pub cosets: Vec<MultiIndex>,
    pub matrices: Vec<RatMatrix>,
    pub basis: SubspaceBasis,
}

impl RestrictedFamily {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Matrices as nested arrays of rational strings.
    pub fn to_json(&self) -> serde_json::Value {
        let mats: Vec<Vec<Vec<String>>> = self
            .matrices
            .iter()
            .map(|m| (0..m.rows()).map(|i| m.row(i).iter().map(format_rational).collect()).collect())
            .collect();
        serde_json::json!({
            "cosets": self.cosets.iter().map(|e| e.components().to_vec()).collect::<Vec<_>>(),
            "matrices": mats,
        })
    }
}

pub fn restrict(mask: &MatrixMask, basis: &SubspaceBasis) -> Result<RestrictedFamily> {
    let eps_list = cosets(mask.dim());
    let mut matrices = Vec::with_capacity(eps_list.len());
    for eps in &eps_list {
        let mut rows = Vec::with_capacity(basis.dim());
        for (i, g) in basis.generators.iter().enumerate() {
            let image = apply_transition(mask, eps, g)?;
            let coords = basis.coordinates(&image).ok_or_else(|| {
                Error::NotInvariant(format!("image of generator {i} under coset {eps:?} leaves the span"))
            })?;
            rows.push(coords);
        }
        matrices.push(RatMatrix::from_rows(rows)?);
    }
    Ok(RestrictedFamily { cosets: eps_list, matrices, basis: basis.clone() })
}

/// Matrix of `𝒜_{ε_r} ⋯ 𝒜_{ε_1}` for the word `(ε_1, …, ε_r)` given as coset positions.
pub fn restricted_product(family: &RestrictedFamily, word: &[usize]) -> Result<RatMatrix> {
    let (first, rest) = word.split_first().ok_or_else(|| Error::Shape("empty word".into()))?;
    let mut acc = family.matrices[*first].clone();
    for &w in rest {
        acc = acc.mul(&family.matrices[w]);
    }
    Ok(acc)
}

/// Offset `ε_1 + 2ε_2 + … + 2^{r-1} ε_r` of a word.
pub fn word_offset(family: &RestrictedFamily, word: &[usize]) -> MultiIndex {
    let s = family.cosets[0].dim();
    word.iter().rev().fold(MultiIndex::zeros(s), |acc, &w| acc.scale(2).add(&family.cosets[w]))
}

/// All words of length `r` over `count` letters, in lexicographic order.
pub fn words(count: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..count).map(move |c| {
                    let mut v = w.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out
}
