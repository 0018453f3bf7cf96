//! Branch-and-bound bounds on the joint spectral radius of a restricted family.
//!
//! For products `P` of length `d`, `max ρ(P)^{1/d} <= ρ <= max ‖P‖^{1/d}`. The product tree is
//! explored breadth first; every level is evaluated in parallel and merged in word order, so the
//! report does not depend on scheduling.
//!
//! A node `p` of length `ℓ` is pruned only when no descendant of any length `d' <= max_depth`
//! can reach the current lower bound: `(‖p‖ · N(d' - ℓ))^{1/d'} < lower`, where `N(j)` is the
//! largest norm seen at depth `j` (or a submultiplicative bound for unexplored depths). Pruned
//! descendants can then neither raise the lower bound nor attain the maximal norm of their
//! level, so pruned and exhaustive searches return identical bounds.

use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::rational::{self, Rational};
use crate::spectral::eigen::spectral_radius;
use crate::spectral::norms::{MatrixNorm, NormValue};
use crate::transition::RestrictedFamily;

const PRUNE_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct BranchAndBoundOptions {
    pub max_depth: u32,
    /// Stop once `upper - lower` is at most this.
    pub target_gap: f64,
    pub prune: bool,
    /// Largest number of products evaluated on one level before giving up.
    pub node_limit: usize,
}

impl Default for BranchAndBoundOptions {
    fn default() -> Self {
        BranchAndBoundOptions { max_depth: 4, target_gap: 0.0, prune: true, node_limit: 1 << 20 }
    }
}

/// `value^{1/root}` kept exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactRoot {
    #[serde(with = "crate::rational::serde_str")]
    pub value: Rational,
    pub root: u32,
}

impl ExactRoot {
    pub fn to_f64(&self) -> f64 {
        rational::to_f64(&self.value).powf(1.0 / self.root as f64)
    }

    /// `value^{1/root} < other.value^{1/other.root}`, exactly.
    pub fn lt(&self, other: &ExactRoot) -> bool {
        num_traits::pow(self.value.clone(), other.root as usize)
            < num_traits::pow(other.value.clone(), self.root as usize)
    }

    /// `value^{1/root} < 2^{-k}`, exactly.
    pub fn below_pow2(&self, k: u32) -> bool {
        self.value < rational::pow2(-(k as i64) * self.root as i64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DepthRecord {
    pub depth: u32,
    pub nodes: usize,
    pub pruned: usize,
    /// Largest norm among the products of this length.
    pub max_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_rational")]
    pub max_norm_exact: Option<Rational>,
    pub lower: f64,
    pub upper: f64,
}

mod opt_rational {
    use serde::Serializer;

    use crate::rational::{format_rational, Rational};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(q) => s.serialize_str(&format_rational(q)),
            None => s.serialize_none(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub norm: String,
    pub lower: f64,
    pub upper: f64,
    /// Exact form of `upper` when the norm is exact.
    pub upper_exact: Option<ExactRoot>,
    /// A word attaining the lower bound.
    pub lower_word: Vec<usize>,
    /// Deepest level completed.
    pub depth: u32,
    pub max_depth: u32,
    pub words_examined: u64,
    pub pruned: u64,
    /// True when the node limit stopped the search before `max_depth`.
    pub exhausted: bool,
    /// Absolute tolerance of floating values in this report.
    pub tolerance: f64,
    pub history: Vec<DepthRecord>,
}

struct Node {
    word: Vec<usize>,
    product: RatMatrix,
    norm: NormValue,
    rho: f64,
}

fn evaluate(word: Vec<usize>, product: RatMatrix, norm: &dyn MatrixNorm) -> Result<Node> {
    let value = norm.norm(&product)?;
    let rho = spectral_radius(&product)?;
    Ok(Node { word, product, norm: value, rho })
}

/// Runs `f` on a pool capped by `SUBDIV_RADIUS_THREADS` when that variable is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var("SUBDIV_RADIUS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Upper bounds `N(j)` on the largest norm of a product of length `j`.
fn norm_bounds(known: &[f64], up_to: usize) -> Vec<f64> {
    let mut nb = known.to_vec();
    for j in known.len() + 1..=up_to {
        let best = (1..j).map(|a| nb[a - 1] * nb[j - a - 1]).fold(f64::INFINITY, f64::min);
        nb.push(best);
    }
    nb
}

pub fn jsr_branch_and_bound(
    family: &RestrictedFamily,
    norm: &dyn MatrixNorm,
    opts: &BranchAndBoundOptions,
) -> Result<BoundsReport> {
    if opts.max_depth == 0 {
        return Err(Error::Shape("branch-and-bound depth must be at least 1".into()));
    }
    if family.is_empty() {
        return Err(Error::Shape("empty matrix family".into()));
    }
    with_thread_cap(|| run(family, norm, opts))
}

fn run(family: &RestrictedFamily, norm: &dyn MatrixNorm, opts: &BranchAndBoundOptions) -> Result<BoundsReport> {
    let letters = family.len();
    let mut report = BoundsReport {
        norm: norm.id().to_string(),
        lower: 0.0,
        upper: f64::INFINITY,
        upper_exact: None,
        lower_word: Vec::new(),
        depth: 0,
        max_depth: opts.max_depth,
        words_examined: 0,
        pruned: 0,
        exhausted: false,
        tolerance: norm.tolerance(),
        history: Vec::new(),
    };
    let mut max_norms: Vec<f64> = Vec::new();
    let mut survivors: Vec<Node> = Vec::new();

    for depth in 1..=opts.max_depth {
        let candidates: Vec<(Vec<usize>, RatMatrix)> = if depth == 1 {
            (0..letters).map(|c| (vec![c], family.matrices[c].clone())).collect()
        } else {
            let count = survivors.len() * letters;
            if count > opts.node_limit {
                report.exhausted = true;
                break;
            }
            survivors
                .iter()
                .flat_map(|node| {
                    (0..letters).map(move |c| {
                        let mut w = node.word.clone();
                        w.push(c);
                        (w, node.product.mul(&family.matrices[c]))
                    })
                })
                .collect()
        };
        let level: Vec<Node> =
            candidates.into_par_iter().map(|(w, p)| evaluate(w, p, norm)).collect::<Result<Vec<_>>>()?;
        report.words_examined += level.len() as u64;

        let root = 1.0 / depth as f64;
        for node in &level {
            let r = node.rho.powf(root);
            if r > report.lower {
                report.lower = r;
                report.lower_word = node.word.clone();
            }
        }
        let max_norm = level.iter().map(|n| n.norm.to_f64()).fold(0.0, f64::max);
        let max_exact: Option<Rational> =
            level.iter().map(|n| n.norm.exact().cloned()).collect::<Option<Vec<_>>>().and_then(|v| v.into_iter().max());
        max_norms.push(max_norm);
        match max_exact.clone() {
            Some(q) => {
                let candidate = ExactRoot { value: q, root: depth };
                let better = report.upper_exact.as_ref().is_none_or(|best| candidate.lt(best));
                if better {
                    report.upper = candidate.to_f64();
                    report.upper_exact = Some(candidate);
                }
            }
            None => report.upper = report.upper.min(max_norm.powf(root)),
        }
        report.depth = depth;

        let mut pruned_here = 0;
        let done = report.upper - report.lower <= opts.target_gap || depth == opts.max_depth;
        if !done {
            let remaining = (opts.max_depth - depth) as usize;
            let nb = norm_bounds(&max_norms, remaining);
            let threshold = report.lower * (1.0 - PRUNE_MARGIN);
            let keep = |node: &Node| {
                if !opts.prune {
                    return true;
                }
                let p = node.norm.to_f64();
                !(1..=remaining).all(|j| (p * nb[j - 1]).powf(1.0 / (depth as usize + j) as f64) < threshold)
            };
            let before = level.len();
            survivors = level.into_iter().filter(keep).collect();
            pruned_here = before - survivors.len();
            report.pruned += pruned_here as u64;
        }
        report.history.push(DepthRecord {
            depth,
            nodes: report.words_examined as usize,
            pruned: pruned_here,
            max_norm,
            max_norm_exact: max_exact,
            lower: report.lower,
            upper: report.upper,
        });
        if done {
            break;
        }
        if survivors.is_empty() {
            // Every branch is dominated: deeper levels cannot change either bound.
            break;
        }
    }
    Ok(report)
}

/// Largest spectral radius `ρ(P)^{1/|P|}` over all words up to `max_len`, with its word.
pub fn max_short_word_radius(family: &RestrictedFamily, max_len: u32) -> Result<(f64, Vec<usize>)> {
    let mut best = (0.0, Vec::new());
    let mut level: Vec<(Vec<usize>, RatMatrix)> = vec![(Vec::new(), RatMatrix::identity(family.dim()))];
    for len in 1..=max_len {
        level = level
            .iter()
            .flat_map(|(w, p)| {
                (0..family.len()).map(move |c| {
                    let mut w = w.clone();
                    w.push(c);
                    (w, p.mul(&family.matrices[c]))
                })
            })
            .collect();
        let radii: Vec<f64> = level.par_iter().map(|(_, p)| spectral_radius(p)).collect::<Result<_>>()?;
        for ((w, _), r) in level.iter().zip(radii) {
            let r = r.powf(1.0 / len as f64);
            if r > best.0 {
                best = (r, w.clone());
            }
        }
    }
    Ok(best)
}

/// Words up to `max_len` whose product has the exact eigenvalue `1` or `-1`.
pub fn exact_unimodular_words(family: &RestrictedFamily, max_len: u32) -> Vec<(Vec<usize>, Rational)> {
    let one = Rational::one();
    let minus = -Rational::one();
    let mut found = Vec::new();
    let mut level: Vec<(Vec<usize>, RatMatrix)> = vec![(Vec::new(), RatMatrix::identity(family.dim()))];
    for _ in 1..=max_len {
        level = level
            .iter()
            .flat_map(|(w, p)| {
                (0..family.len()).map(move |c| {
                    let mut w = w.clone();
                    w.push(c);
                    (w, p.mul(&family.matrices[c]))
                })
            })
            .collect();
        let hits: Vec<Option<Rational>> = level
            .par_iter()
            .map(|(_, p)| {
                [&one, &minus].into_iter().find(|l| crate::spectral::eigen::has_exact_eigenvalue(p, l)).cloned()
            })
            .collect();
        for ((w, _), h) in level.iter().zip(hits) {
            if let Some(l) = h {
                found.push((w.clone(), l));
            }
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::rational::rat;
    use crate::spectral::norms::{InfNorm, TwoNorm};
    use crate::transition::{build_vk_basis, restrict};

    fn family(k: u32) -> RestrictedFamily {
        let a = corpus::four_point();
        restrict(&a, &build_vk_basis(&a, k, 1).unwrap()).unwrap()
    }

    fn opts(depth: u32, prune: bool) -> BranchAndBoundOptions {
        BranchAndBoundOptions { max_depth: depth, prune, ..Default::default() }
    }

    #[test]
    fn depth_one_bounds() {
        let r = jsr_branch_and_bound(&family(2), &InfNorm, &opts(1, true)).unwrap();
        assert_eq!(r.upper_exact, Some(ExactRoot { value: rat(1, 2), root: 1 }));
        assert!(!r.upper_exact.as_ref().unwrap().below_pow2(1));
        let t = jsr_branch_and_bound(&family(2), &TwoNorm, &opts(1, true)).unwrap();
        assert!((t.upper - 0.467).abs() < 1e-3, "{}", t.upper);
        let t1 = jsr_branch_and_bound(&family(1), &TwoNorm, &opts(1, true)).unwrap();
        assert!((t1.upper - 0.7195).abs() < 1e-3, "{}", t1.upper);
        assert!(r.lower <= r.upper + 1e-12);
    }

    #[test]
    fn pruning_matches_exhaustive_search() {
        for k in 1..=2 {
            for norm in [&InfNorm as &dyn MatrixNorm, &TwoNorm] {
                let a = jsr_branch_and_bound(&family(k), norm, &opts(5, true)).unwrap();
                let b = jsr_branch_and_bound(&family(k), norm, &opts(5, false)).unwrap();
                assert_eq!(a.lower, b.lower);
                assert_eq!(a.upper, b.upper);
                assert_eq!(a.upper_exact, b.upper_exact);
                assert_eq!(b.pruned, 0);
                for rec in a.history.iter().chain(&b.history) {
                    assert!(rec.lower <= rec.upper + 1e-12);
                }
            }
        }
    }

    #[test]
    fn dominated_branches_are_pruned() {
        let mut fam = family(1);
        fam.matrices = vec![RatMatrix::from_i64(&[&[1, 1], &[0, 1]], 1), RatMatrix::from_i64(&[&[1, 0], &[0, 1]], 8)];
        let a = jsr_branch_and_bound(&fam, &InfNorm, &opts(5, true)).unwrap();
        let b = jsr_branch_and_bound(&fam, &InfNorm, &opts(5, false)).unwrap();
        assert!(a.pruned > 0);
        assert!(a.words_examined < b.words_examined);
        assert_eq!((a.lower, a.upper, &a.upper_exact), (b.lower, b.upper, &b.upper_exact));
    }

    #[test]
    fn upper_is_a_running_minimum() {
        let r = jsr_branch_and_bound(&family(1), &InfNorm, &opts(4, false)).unwrap();
        assert!(r.history.windows(2).all(|w| w[1].upper <= w[0].upper));
        assert_eq!(r.words_examined, 2 + 4 + 8 + 16);
    }

    #[test]
    fn early_stop_and_node_limit() {
        let r =
            jsr_branch_and_bound(&family(1), &InfNorm, &BranchAndBoundOptions { target_gap: 10.0, ..opts(6, true) })
                .unwrap();
        assert_eq!(r.depth, 1);
        let r = jsr_branch_and_bound(&family(1), &InfNorm, &BranchAndBoundOptions { node_limit: 5, ..opts(6, false) })
            .unwrap();
        assert!(r.exhausted);
        assert_eq!(r.depth, 2);
        assert!(jsr_branch_and_bound(&family(1), &InfNorm, &opts(0, true)).is_err());
    }

    #[test]
    fn exact_root_comparison() {
        let a = ExactRoot { value: rat(1, 4), root: 2 };
        let b = ExactRoot { value: rat(1, 2), root: 1 };
        assert!(!a.lt(&b) && !b.lt(&a));
        assert!(ExactRoot { value: rat(1, 5), root: 2 }.lt(&b));
        assert!(ExactRoot { value: rat(1, 5), root: 2 }.below_pow2(1));
    }
}
