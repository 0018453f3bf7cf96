//! Convergence and smoothness verdicts.
//!
//! Level `ℓ` works with `B_ℓ` and `V_ℓ`; a certified bound `ρ < 2^{-(ℓ-1)}` there makes the
//! scheme `C^{ℓ-1}` (level 1 alone means convergent). Divergence is certified by a short word
//! whose restricted product has spectral radius at least one, or by a sub-symbol of `B_1` at
//! `(1, …, 1)` with such an eigenvalue.

use num_traits::One;
use serde::Serialize;

use crate::difference::{factor, rotate_to_leading, subsymbols_at_one, FactorizationResult};
use crate::error::{Error, Result};
use crate::format::to_canonical_json;
use crate::mask::MatrixMask;
use crate::rational::{format_rational, Rational};
use crate::spectral::eigen::{eigenvalues, has_exact_eigenvalue};
use crate::spectral::jsr::{
    exact_unimodular_words, jsr_branch_and_bound, max_short_word_radius, BoundsReport, BranchAndBoundOptions,
};
use crate::spectral::norms::NormRegistry;
use crate::spectral::rsr::{self, RsrEstimate, RsrMethod};
use crate::transition::{build_vk_basis, restrict};

/// Slack below one for float spectral radii that still count as "at least one".
pub const EIGEN_TOLERANCE: f64 = 1e-9;
/// Margin by which a float upper bound must clear its threshold.
pub const FLOAT_MARGIN: f64 = 1e-10;
/// Words up to this length are checked for divergence.
const DIVERGENCE_WORD_LENGTH: u32 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    DivergentCertified,
    ConvergentCertified,
    CkCertified,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Evidence {
    pub criterion: String,
    pub value: String,
    pub threshold: String,
    /// Whether the comparison was decided in exact arithmetic.
    pub exact: bool,
    /// Whether `value` meets the criterion (below the threshold for bounds, at or above for
    /// divergence tests).
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub level: u32,
    pub factorization: String,
    pub jsr: Vec<BoundsReport>,
    pub rsr: Vec<RsrEstimate>,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityVerdict {
    pub status: Status,
    /// `k` of a `C^k` certificate; `0` for plain convergence.
    pub smoothness: Option<u32>,
    pub holder_bound: Option<f64>,
    pub evidence: Vec<Evidence>,
    pub levels: Vec<LevelReport>,
}

impl RegularityVerdict {
    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    pub fn label(&self) -> String {
        match (&self.status, self.smoothness) {
            (Status::CkCertified, Some(k)) => format!("C{k}-certified"),
            (Status::DivergentCertified, _) => "divergent-certified".into(),
            (Status::ConvergentCertified, _) => "convergent-certified".into(),
            _ => "inconclusive".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DivergenceReport {
    pub flagged: bool,
    pub evidence: Vec<Evidence>,
}

/// Necessary-condition tests for convergence; `b` is a first difference mask when available.
pub fn divergence_check(mask: &MatrixMask, b: Option<&FactorizationResult>) -> Result<DivergenceReport> {
    let mut evidence = Vec::new();
    let threshold = format!("1 - {EIGEN_TOLERANCE:e}");

    let (lead, _, m) = rotate_to_leading(mask)?;
    match build_vk_basis(&lead, 1, m).and_then(|basis| restrict(&lead, &basis)) {
        Ok(family) => {
            let (radius, word) = max_short_word_radius(&family, DIVERGENCE_WORD_LENGTH)?;
            evidence.push(Evidence {
                criterion: format!(
                    "max spectral radius^(1/len) on V1, words {word:?} up to length {DIVERGENCE_WORD_LENGTH}"
                ),
                value: format!("{radius:.12}"),
                threshold: threshold.clone(),
                exact: false,
                holds: radius >= 1.0 - EIGEN_TOLERANCE,
            });
            if let Some((w, lambda)) = exact_unimodular_words(&family, DIVERGENCE_WORD_LENGTH).into_iter().next() {
                evidence.push(Evidence {
                    criterion: format!("exact eigenvalue of restricted product {w:?} on V1"),
                    value: format_rational(&lambda),
                    threshold: "modulus 1".into(),
                    exact: true,
                    holds: true,
                });
            }
        }
        Err(Error::Unsupported(_)) => {}
        Err(e) => return Err(e),
    }

    if let Some(b) = b {
        for (eps, sub) in subsymbols_at_one(&b.b_mask)? {
            let top = eigenvalues(&sub)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let one = has_exact_eigenvalue(&sub, &Rational::one());
            let minus = has_exact_eigenvalue(&sub, &-Rational::one());
            evidence.push(Evidence {
                criterion: format!("spectral radius of sub-symbol B1 at coset {:?}, evaluated at 1", eps.components()),
                value: format!("{top:.12}"),
                threshold: threshold.clone(),
                exact: one || minus,
                holds: one || minus || top >= 1.0 - EIGEN_TOLERANCE,
            });
        }
    }
    let flagged = evidence.iter().any(|e| e.holds);
    Ok(DivergenceReport { flagged, evidence })
}

#[derive(Clone, Debug)]
pub struct ReportOptions {
    pub k_max: u32,
    pub depth: u32,
    pub norms: Vec<String>,
    /// Also report the good-set radius where it applies; it is listed but never certifies.
    pub goodset: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { k_max: 1, depth: 1, norms: vec!["inf".into(), "two".into()], goodset: false }
    }
}

fn threshold_text(k: u32) -> String {
    format!("2^-{k}")
}

fn jsr_evidence(level: u32, report: &BoundsReport) -> Evidence {
    let k = level - 1;
    let limit = 0.5f64.powi(k as i32);
    let (value, exact, holds) = match &report.upper_exact {
        Some(q) => (format!("({})^(1/{})", format_rational(&q.value), q.root), true, q.below_pow2(k)),
        None => (format!("{:.12}", report.upper), false, report.upper < limit - FLOAT_MARGIN.max(report.tolerance)),
    };
    Evidence {
        criterion: format!("JSR upper bound on V{level}, {} norm, depth {}", report.norm, report.depth),
        value,
        threshold: threshold_text(k),
        exact,
        holds,
    }
}

fn rsr_evidence(level: u32, est: &RsrEstimate) -> Evidence {
    let k = level - 1;
    let limit = 0.5f64.powi(k as i32);
    let (value, exact, holds) = match &est.exact {
        Some(q) => (format!("({})^(1/{})", format_rational(&q.value), q.root), true, q.below_pow2(k)),
        None => (est.value.clone(), false, est.bound < limit - EIGEN_TOLERANCE),
    };
    Evidence {
        criterion: format!("restricted norm bound for B{level} ({}), depth {}", est.method, est.depth),
        value,
        threshold: threshold_text(k),
        exact,
        holds,
    }
}

/// Methods tried for the restricted-norm bound at one level, cheapest first.
fn rsr_methods(b: &FactorizationResult) -> Vec<Box<dyn RsrMethod>> {
    if b.b_mask.dim() == 1 {
        vec![Box::new(rsr::ClosedForm)]
    } else {
        vec![Box::new(rsr::Nonnegative), Box::new(rsr::LpMethod)]
    }
}

/// Runs every available test up to level `k_max + 1` and returns the strongest certified claim.
pub fn regularity_report(mask: &MatrixMask, opts: &ReportOptions) -> Result<RegularityVerdict> {
    if opts.depth == 0 {
        return Err(Error::Shape("depth must be at least 1".into()));
    }
    let registry = NormRegistry::default();
    let norms = opts.norms.iter().map(|n| registry.get(n)).collect::<Result<Vec<_>>>()?;
    let b1 = match factor(mask, 1) {
        Ok(b) => Some(b),
        Err(Error::SumRule(_) | Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let divergence = divergence_check(mask, b1.as_ref())?;
    let mut evidence = divergence.evidence;
    if divergence.flagged {
        return Ok(RegularityVerdict {
            status: Status::DivergentCertified,
            smoothness: None,
            holder_bound: None,
            evidence,
            levels: Vec::new(),
        });
    }

    let (lead, _, m) = rotate_to_leading(mask)?;
    let bb = BranchAndBoundOptions { max_depth: opts.depth, ..Default::default() };
    let mut levels = Vec::new();
    let mut top: Option<(u32, f64)> = None;
    for level in 1..=opts.k_max + 1 {
        let attempt = match (&b1, level) {
            (Some(b), 1) => Ok(b.clone()),
            _ => factor(mask, level),
        };
        let b = match attempt {
            Ok(b) => b,
            Err(e @ (Error::SumRule(_) | Error::Unsupported(_))) => {
                let factorization = e.to_string();
                levels.push(LevelReport { level, factorization, jsr: Vec::new(), rsr: Vec::new(), certified: false });
                break;
            }
            Err(e) => return Err(e),
        };
        let mut report = LevelReport {
            level,
            factorization: if b.verified { "verified".into() } else { "unverified".into() },
            jsr: Vec::new(),
            rsr: Vec::new(),
            certified: false,
        };
        let mut best: Option<f64> = None;
        let note = |holds: bool, bound: f64, best: &mut Option<f64>| {
            if holds {
                *best = Some(best.map_or(bound, |x: f64| x.min(bound)));
            }
        };

        match build_vk_basis(&lead, level, m).and_then(|basis| restrict(&lead, &basis)) {
            Ok(family) => {
                for norm in &norms {
                    let r = jsr_branch_and_bound(&family, *norm, &bb)?;
                    let ev = jsr_evidence(level, &r);
                    note(ev.holds, r.upper, &mut best);
                    evidence.push(ev);
                    report.jsr.push(r);
                }
            }
            Err(Error::Unsupported(msg)) => evidence.push(Evidence {
                criterion: format!("JSR on V{level}"),
                value: format!("unsupported: {msg}"),
                threshold: threshold_text(level - 1),
                exact: false,
                holds: false,
            }),
            Err(e) => return Err(e),
        }

        if b.verified {
            for method in rsr_methods(&b) {
                let est = match rsr::rsr_estimates(method.as_ref(), &b, opts.depth) {
                    Ok(est) => est,
                    Err(Error::Unsupported(_)) => continue,
                    Err(e) => return Err(e),
                };
                if let Some(e) = rsr::best_bound(&est) {
                    let ev = rsr_evidence(level, e);
                    note(ev.holds, e.bound, &mut best);
                    evidence.push(ev);
                }
                let found = !est.is_empty();
                report.rsr.extend(est);
                if found {
                    break;
                }
            }
            if opts.goodset {
                if let Some(rho) = rsr::exact_rsr_goodset(&b)? {
                    evidence.push(Evidence {
                        criterion: format!("good-set radius for B{level} (informational)"),
                        value: format!("{rho:.12}"),
                        threshold: threshold_text(level - 1),
                        exact: false,
                        holds: rho < 0.5f64.powi(level as i32 - 1) - EIGEN_TOLERANCE,
                    });
                }
            }
        }

        report.certified = best.is_some();
        let certified = report.certified;
        levels.push(report);
        if !certified {
            break;
        }
        top = Some((level, best.expect("certified level has a bound")));
    }

    let (status, smoothness, holder_bound) = match top {
        None => (Status::Inconclusive, None, None),
        Some((level, bound)) => {
            let k = level - 1;
            let holder = if bound > 0.0 { Some(-bound.log2()) } else { None };
            (if k == 0 { Status::ConvergentCertified } else { Status::CkCertified }, Some(k), holder)
        }
    };
    Ok(RegularityVerdict { status, smoothness, holder_bound, evidence, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn four_point_is_c1() {
        let v = regularity_report(&corpus::four_point(), &ReportOptions::default()).unwrap();
        assert_eq!(v.status, Status::CkCertified);
        assert_eq!(v.smoothness, Some(1));
        assert_eq!(v.label(), "C1-certified");
        let level2 = &v.levels[1];
        let inf = level2.jsr.iter().find(|r| r.norm == "inf").unwrap();
        assert!(!jsr_evidence(2, inf).holds, "1/2 is not below 1/2");
        let two = level2.jsr.iter().find(|r| r.norm == "two").unwrap();
        assert!(jsr_evidence(2, two).holds);
        assert!((v.holder_bound.unwrap() - (-(0.467f64).log2())).abs() < 0.01);
    }

    #[test]
    fn divergent_scheme_is_flagged_both_ways() {
        let a = corpus::divergent();
        let b = factor(&a, 1).unwrap();
        let d = divergence_check(&a, Some(&b)).unwrap();
        assert!(d.flagged);
        assert!(d.evidence.iter().any(|e| e.holds && e.criterion.contains("V1")));
        assert!(d.evidence.iter().any(|e| e.holds && e.criterion.contains("sub-symbol")));
        let v = regularity_report(&a, &ReportOptions::default()).unwrap();
        assert_eq!(v.status, Status::DivergentCertified);
    }

    #[test]
    fn bivariate_converges() {
        let opts = ReportOptions { k_max: 0, goodset: true, ..Default::default() };
        let v = regularity_report(&corpus::bivariate(), &opts).unwrap();
        assert_eq!(v.status, Status::ConvergentCertified);
        assert_eq!(v.holder_bound, Some(1.0));
        assert!(v.evidence.iter().any(|e| e.criterion.contains("nonnegative") && e.holds && e.exact));
    }

    #[test]
    fn four_point_not_flagged() {
        let a = corpus::four_point();
        let d = divergence_check(&a, factor(&a, 1).ok().as_ref()).unwrap();
        assert!(!d.flagged);
    }
}
