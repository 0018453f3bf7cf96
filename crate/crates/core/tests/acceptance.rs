//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status on any failure.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use subdiv_core::corpus;
use subdiv_core::difference::{
    factor, factor_univariate, nabla_k_apply, rotate_to_leading, subsymbols_at_one, verify_factorization,
    DifferenceSpec, FactorizationResult,
};
use subdiv_core::lp::solve_lp;
use subdiv_core::mask::{
    apply_subdivision, coset_infinity_norm, iterate_mask, MatrixMask, MultiIndex, Orientation, VectorSequence,
};
use subdiv_core::rational::{int, rat};
use subdiv_core::spectral::eigen::{has_exact_eigenvalue, spectral_radius};
use subdiv_core::spectral::jsr::{jsr_branch_and_bound, BranchAndBoundOptions};
use subdiv_core::spectral::norms::{InfNorm, MatrixNorm, TwoNorm};
use subdiv_core::spectral::rsr::{
    exact_rsr_goodset, restricted_norm, restricted_norm_lp, restricted_norm_nonnegative_shortcut, rsr_lp_instance,
};
use subdiv_core::spectral::verdict::{divergence_check, regularity_report, ReportOptions, Status};
use subdiv_core::transition::{
    build_vk_basis, restrict, restricted_product, user_supplied_basis, word_offset, words, RestrictedFamily,
};
use subdiv_core::{RatMatrix, Rational};

const SEED: u64 = 0x5eed_2024;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn family(mask: &MatrixMask, k: u32) -> Result<RestrictedFamily, String> {
    let (lead, _, m) = ok(rotate_to_leading(mask))?;
    ok(build_vk_basis(&lead, k, m).and_then(|b| restrict(&lead, &b)))
}

fn max_norm(fam: &RestrictedFamily, norm: &dyn MatrixNorm) -> Result<f64, String> {
    let mut best: f64 = 0.0;
    for m in &fam.matrices {
        best = best.max(ok(norm.norm(m))?.to_f64());
    }
    Ok(best)
}

fn max_inf(fam: &RestrictedFamily) -> Rational {
    fam.matrices.iter().map(RatMatrix::inf_norm).max().unwrap_or_else(Rational::zero)
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure!(elapsed < limit, "took {elapsed:?}, limit {limit:?}");
    Ok(())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let a = corpus::four_point();
    let b1 = ok(factor_univariate(&a, 1))?;
    let b2 = ok(factor_univariate(&a, 2))?;
    let coset = (ok(coset_infinity_norm(&b1.b_mask, 1))?, ok(coset_infinity_norm(&b2.b_mask, 1))?);
    let lp = (ok(restricted_norm_lp(&b1, 1))?, ok(restricted_norm_lp(&b2, 1))?);
    ensure!(coset == (rat(5, 8), rat(1, 2)), "coset norms {coset:?}");
    ensure!(lp == coset, "LP norms {lp:?}");
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("||S_B1|| = 5/8, ||S_B2|| = 1/2 by coset formula and LP in {:?}", start.elapsed()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let a = corpus::four_point();
    let v1 = max_norm(&family(&a, 1)?, &TwoNorm)?;
    let v2 = max_norm(&family(&a, 2)?, &TwoNorm)?;
    ensure!((v1 - 0.7195).abs() <= 1e-3, "V1 two-norm {v1}");
    ensure!((v2 - 0.467).abs() <= 1e-3, "V2 two-norm {v2}");
    let verdict = ok(regularity_report(&a, &ReportOptions::default()))?;
    ensure!(verdict.status == Status::CkCertified && verdict.smoothness == Some(1), "verdict {}", verdict.label());
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("two-norms {v1:.4} and {v2:.4}, verdict {} in {:?}", verdict.label(), start.elapsed()))
}

fn criterion_3() -> Outcome {
    let a = corpus::vector_example();
    let b = ok(factor_univariate(&a, 1))?;
    ensure!(b.b_mask == corpus::vector_example_b1(), "B1 differs from the reference coefficients");
    let n = ok(restricted_norm(&b, 1))?;
    ensure!(n == rat(5, 4), "norm {n}");
    Ok("B1 matches the four reference matrices, ||S_B1|| = 5/4".into())
}

fn criterion_4() -> Outcome {
    let a = corpus::bivariate();
    let b = ok(FactorizationResult::from_supplied(&a, corpus::bivariate_b1(), 1, 1))?;
    ensure!(b.verified, "reference B1 fails the factorization identity");
    let shortcut = ok(restricted_norm_nonnegative_shortcut(&b, 1))?;
    let lp = ok(restricted_norm_lp(&b, 1))?;
    let good = ok(exact_rsr_goodset(&b))?.ok_or("good-set method not applicable")?;
    ensure!(shortcut == Some(rat(1, 2)), "shortcut {shortcut:?}");
    ensure!(lp == rat(1, 2), "LP {lp}");
    ensure!((good - 0.5).abs() < 1e-9, "good set {good}");
    let basis = ok(user_supplied_basis(&a, corpus::bivariate_basis(), 1))?;
    let fam = ok(restrict(&a, &basis))?;
    let inf = max_inf(&fam);
    let two = max_norm(&fam, &TwoNorm)?;
    ensure!(inf == rat(3, 2), "max inf-norm {inf}");
    ensure!((two - 1.188).abs() <= 1e-3, "max two-norm {two}");
    ensure!(inf > lp, "no gap between {inf} and {lp}");
    Ok(format!("restricted norm 1/2 (shortcut, LP, good set {good:.12}), max norms 3/2 and {two:.4}"))
}

fn criterion_5() -> Outcome {
    let a = corpus::divergent();
    let fam = family(&a, 1)?;
    let origin = fam.cosets.iter().position(|e| e.components().iter().all(|&c| c == 0)).ok_or("no zero coset")?;
    let rho = ok(spectral_radius(&fam.matrices[origin]))?;
    ensure!(rho >= 1.0 - 1e-9, "rho(A_00|V1) = {rho}");
    let b = ok(factor(&a, 1))?;
    let subs = ok(subsymbols_at_one(&b.b_mask))?;
    let (_, s00) = subs.iter().find(|(e, _)| e.components() == [0, 0]).ok_or("no (0,0) sub-symbol")?;
    ensure!(*s00 == RatMatrix::from_i64(&[&[1, 0], &[-2, 4]], 4), "sub-symbol {s00:?}");
    ensure!(has_exact_eigenvalue(s00, &int(1)), "1 is not an eigenvalue");
    let check = ok(divergence_check(&a, Some(&b)))?;
    let via_words = check.evidence.iter().any(|e| e.holds && e.criterion.contains("V1"));
    let via_symbol = check.evidence.iter().any(|e| e.holds && e.criterion.contains("sub-symbol"));
    ensure!(via_words && via_symbol, "evidence paths: words {via_words}, sub-symbol {via_symbol}");
    let verdict = ok(regularity_report(&a, &ReportOptions::default()))?;
    ensure!(verdict.status == Status::DivergentCertified, "verdict {}", verdict.label());
    Ok(format!("rho(A_00|V1) = {rho:.12}, B1_00(1,1) = (1/4)[[1,0],[-2,4]], divergent-certified"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let masks = common::corpus(SEED, 50);
    let mut checks = 0;
    for (i, a) in masks.iter().enumerate() {
        for k in 1..=2 {
            let b = ok(factor_univariate(a, k))?;
            let fam = family(a, k)?;
            for r in 1..=3 {
                let expected = ok(restricted_norm(&b, r))?;
                let mut best = Rational::zero();
                for w in words(fam.len(), r as usize) {
                    best = best.max(ok(restricted_product(&fam, &w))?.inf_norm());
                }
                ensure!(best == expected, "mask {i}, k = {k}, r = {r}: {best} vs {expected}");
                checks += 1;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{checks} exact equalities over 50 masks in {:?}", start.elapsed()))
}

fn criterion_7() -> Outcome {
    let masks = common::corpus(SEED, 50);
    let mut entries = 0usize;
    for (i, a) in masks.iter().enumerate() {
        for k in 1..=2 {
            let b = ok(factor_univariate(a, k))?;
            let fam = family(a, k)?;
            let len = fam.dim() as i64;
            for r in 1..=3u32 {
                let br = ok(iterate_mask(&b.b_mask, r))?;
                for w in words(fam.len(), r as usize) {
                    let p = ok(restricted_product(&fam, &w))?;
                    let e = word_offset(&fam, &w).components()[0];
                    for bt in 0..len {
                        for bb in 0..len {
                            let at = MultiIndex::new(vec![e + (1 << r) * bb - bt]);
                            let expected = br.get(&at).map(|m| m[(0, 0)].clone()).unwrap_or_default();
                            ensure!(
                                p[(bt as usize, bb as usize)] == expected,
                                "mask {i}, k {k}, word {w:?}, entry ({bt},{bb})"
                            );
                            entries += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{entries} entries of restricted products match B_k^(r)"))
}

fn same_entries(x: &VectorSequence, y: &VectorSequence) -> bool {
    x.entries() == y.entries()
}

/// `∇^k S_A^r c = S_B^r ∇^k c` on unit impulses around the support.
fn commutes(a: &MatrixMask, b: &FactorizationResult, r: u32) -> Result<bool, String> {
    let spec = ok(DifferenceSpec::new(a.dim(), a.rows(), b.m, b.k))?;
    let hi = vec![2; a.dim()];
    for at in subdiv_core::mask::box_points(&vec![-1; a.dim()], &hi) {
        for j in 0..a.cols() {
            let mut left = VectorSequence::delta(a.dim(), a.cols(), j, at.clone(), Orientation::Column);
            let mut right = ok(nabla_k_apply(&left, &spec))?;
            for _ in 0..r {
                left = ok(apply_subdivision(a, &left))?;
                right = ok(apply_subdivision(&b.b_mask, &right))?;
            }
            if !same_entries(&ok(nabla_k_apply(&left, &spec))?, &right) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn criterion_8() -> Outcome {
    let mut cases: Vec<(String, MatrixMask, u32)> = Vec::new();
    for (i, a) in common::corpus(SEED, 50).into_iter().enumerate() {
        cases.push((format!("random {i}, k 1"), a.clone(), 1));
        cases.push((format!("random {i}, k 2"), a, 2));
    }
    for k in 1..=4 {
        cases.push((format!("four-point, k {k}"), corpus::four_point(), k));
    }
    cases.push(("vector".into(), corpus::vector_example(), 1));
    cases.push(("bivariate".into(), corpus::bivariate(), 1));
    cases.push(("divergent".into(), corpus::divergent(), 1));
    for (name, a, k) in &cases {
        let b = ok(factor(a, *k))?;
        let (lead, _, m) = ok(rotate_to_leading(a))?;
        ensure!(b.verified && ok(verify_factorization(&lead, &b.b_mask, *k, m))?, "{name}: identity fails");
        for r in 1..=2 {
            ensure!(commutes(&lead, &b, r)?, "{name}: sequences differ at r = {r}");
        }
    }
    Ok(format!("{} factorizations verified symbolically and on sequences for r <= 2", cases.len()))
}

fn criterion_9() -> Outcome {
    let a = corpus::four_point();
    let mut runs = 0;
    let mut pruned_nodes = 0;
    for k in 1..=2 {
        let fam = family(&a, k)?;
        for norm in [&InfNorm as &dyn MatrixNorm, &TwoNorm] {
            let opts = |prune| BranchAndBoundOptions { max_depth: 4, prune, ..Default::default() };
            let pruned = ok(jsr_branch_and_bound(&fam, norm, &opts(true)))?;
            let full = ok(jsr_branch_and_bound(&fam, norm, &opts(false)))?;
            ensure!(
                pruned.lower == full.lower && pruned.upper == full.upper && pruned.upper_exact == full.upper_exact,
                "V{k}, {} norm: pruned [{}, {}] vs exhaustive [{}, {}]",
                norm.id(),
                pruned.lower,
                pruned.upper,
                full.lower,
                full.upper
            );
            for rec in pruned.history.iter().chain(&full.history) {
                ensure!(rec.lower <= rec.upper + 1e-12, "sandwich fails at depth {}", rec.depth);
            }
            ensure!(full.depth == 4, "exhaustive run stopped at depth {}", full.depth);
            pruned_nodes += pruned.pruned;
            runs += 1;
        }
    }
    Ok(format!("{runs} pruned/exhaustive pairs agree to depth 4 ({pruned_nodes} nodes pruned)"))
}

fn criterion_10() -> Outcome {
    let masks = common::corpus(SEED ^ 0xa11, 20);
    let mut programs = 0;
    for (i, a) in masks.iter().enumerate() {
        let k = 1 + (i % 2) as u32;
        let b = ok(factor_univariate(a, k))?;
        for r in 1..=2u32 {
            for alpha in 0..(1i64 << r) {
                let inst = ok(rsr_lp_instance(&b, r, 0, &MultiIndex::new(vec![alpha])))?;
                let p = &inst.program;
                let signs: Vec<Rational> = p.objective.iter().map(|c| c.signum()).collect();
                let optimum: Rational = p.objective.iter().map(|c| c.abs()).sum();
                let sol = ok(solve_lp(p))?;
                ensure!(sol.value == optimum, "mask {i}, r {r}, alpha {alpha}: {} vs {optimum}", sol.value);
                ensure!(p.is_feasible(&signs) && p.value(&signs) == optimum, "sign pattern is not optimal");
                for (x, c) in sol.x.iter().zip(&p.objective) {
                    ensure!(c.is_zero() || *x == c.signum(), "mask {i}: solver optimum is not the sign pattern");
                }
                programs += 1;
            }
        }
    }
    Ok(format!("{programs} programs reach sum |coefficients| at d = sgn(coefficients)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("four-point exact norms", criterion_1),
        ("four-point two-norms and C1 verdict", criterion_2),
        ("vector scheme difference mask", criterion_3),
        ("bivariate restricted norm and norm gap", criterion_4),
        ("divergent scheme", criterion_5),
        ("word norms equal restricted norms", criterion_6),
        ("restricted products from iterated difference masks", criterion_7),
        ("factorization identity", criterion_8),
        ("branch-and-bound pruning", criterion_9),
        ("LP sign-pattern optimum", criterion_10),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2}  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2}  {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
