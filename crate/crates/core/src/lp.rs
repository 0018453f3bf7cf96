//! Exact linear programming over the rationals.
//!
//! `maximize c·x subject to A x = b, lo <= x <= hi` by a dense bounded-variable primal simplex
//! with Bland's rule. Bounds are handled implicitly; phase one adds one artificial per row.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::rational::Rational;

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub lower: Vec<Rational>,
    pub upper: Vec<Rational>,
    pub equalities: RatMatrix,
    pub rhs: Vec<Rational>,
}

impl LinearProgram {
    /// A box-constrained program without equality constraints.
    pub fn boxed(objective: Vec<Rational>, lower: Vec<Rational>, upper: Vec<Rational>) -> Self {
        let n = objective.len();
        LinearProgram { objective, lower, upper, equalities: RatMatrix::zeros(0, n), rhs: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.equalities.cols() != n {
            return Err(Error::Shape("linear program dimensions disagree".into()));
        }
        if self.equalities.rows() != self.rhs.len() {
            return Err(Error::Shape("equality matrix and right-hand side disagree".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, h)| l > h) {
            return Err(Error::Infeasible);
        }
        Ok(())
    }

    /// Exact feasibility of `x`.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), h)| l <= v && v <= h)
            && self.equalities.mul_vec(x) == self.rhs
    }

    pub fn value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
    pub pivots: usize,
}

struct Tableau {
    /// `B^{-1} [A | ±I]`, one row per constraint.
    t: RatMatrix,
    basis: Vec<usize>,
    x: Vec<Rational>,
    lower: Vec<Rational>,
    /// `None` is `+∞` (artificials in phase one).
    upper: Vec<Option<Rational>>,
    steps: usize,
    cap: usize,
}

enum Step {
    Optimal,
    Moved,
}

impl Tableau {
    fn can_move(&self, j: usize) -> bool {
        self.upper[j].as_ref() != Some(&self.lower[j])
    }

    fn reduced_costs(&self, c: &[Rational]) -> Vec<Rational> {
        let mut d = c.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if c[b].is_zero() {
                continue;
            }
            for (dj, tij) in d.iter_mut().zip(self.t.row(i)) {
                if !tij.is_zero() {
                    *dj -= &c[b] * tij;
                }
            }
        }
        d
    }

    fn step(&mut self, c: &[Rational]) -> Result<Step> {
        if self.steps >= self.cap {
            return Err(Error::IterationLimit(self.cap));
        }
        self.steps += 1;
        let d = self.reduced_costs(c);
        let mut is_basic = vec![false; c.len()];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        let entering = (0..c.len()).find(|&j| {
            if is_basic[j] || !self.can_move(j) {
                return false;
            }
            (d[j].is_positive() && self.upper[j].as_ref().is_none_or(|h| &self.x[j] < h))
                || (d[j].is_negative() && self.x[j] > self.lower[j])
        });
        let Some(j) = entering else { return Ok(Step::Optimal) };
        let up = d[j].is_positive();

        // Largest step t >= 0; `None` leaving row means the entering variable flips bounds.
        let mut best: Option<(Rational, usize, Option<usize>)> =
            self.upper[j].as_ref().map(|h| (h - &self.lower[j], j, None));
        for (i, &b) in self.basis.iter().enumerate() {
            let a = if up { self.t[(i, j)].clone() } else { -self.t[(i, j)].clone() };
            if a.is_zero() {
                continue;
            }
            let limit = if a.is_positive() {
                (&self.x[b] - &self.lower[b]) / &a
            } else {
                match &self.upper[b] {
                    Some(h) => (h - &self.x[b]) / -&a,
                    None => continue,
                }
            };
            let better = match &best {
                None => true,
                Some((t, idx, _)) => limit < *t || (limit == *t && b < *idx),
            };
            if better {
                best = Some((limit, b, Some(i)));
            }
        }
        let Some((t, _, row)) = best else { return Err(Error::Unbounded) };
        let delta = if up { t.clone() } else { -t.clone() };
        if !delta.is_zero() {
            for (i, &b) in self.basis.iter().enumerate() {
                let a = &self.t[(i, j)];
                if !a.is_zero() {
                    self.x[b] -= a * &delta;
                }
            }
            self.x[j] += &delta;
        }
        if let Some(r) = row {
            let leaving = self.basis[r];
            // Snap the leaving variable exactly onto the bound it reached.
            let a = if up { self.t[(r, j)].clone() } else { -self.t[(r, j)].clone() };
            self.x[leaving] = if a.is_positive() {
                self.lower[leaving].clone()
            } else {
                self.upper[leaving].clone().expect("finite bound reached")
            };
            self.pivot(r, j);
            self.basis[r] = j;
        }
        if log::log_enabled!(log::Level::Debug) {
            log::debug!("simplex step {}: entering {j}, leaving row {row:?}, step {t}", self.steps);
            log::debug!("basis {:?}\n{:?}", self.basis, self.t);
        }
        Ok(Step::Moved)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let inv = self.t[(r, j)].recip();
        let cols = self.t.cols();
        for c in 0..cols {
            if !self.t[(r, c)].is_zero() {
                let v = &self.t[(r, c)] * &inv;
                self.t[(r, c)] = v;
            }
        }
        let pivot_row: Vec<(usize, Rational)> =
            (0..cols).filter(|&c| !self.t[(r, c)].is_zero()).map(|c| (c, self.t[(r, c)].clone())).collect();
        for i in 0..self.t.rows() {
            if i == r || self.t[(i, j)].is_zero() {
                continue;
            }
            let f = self.t[(i, j)].clone();
            for (c, v) in &pivot_row {
                let d = &f * v;
                self.t[(i, *c)] -= d;
            }
        }
    }

    fn run(&mut self, c: &[Rational]) -> Result<()> {
        while let Step::Moved = self.step(c)? {}
        Ok(())
    }
}

/// Solves the program exactly. The returned point is checked by substitution.
pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars();
    let m = p.equalities.rows();
    let mut x: Vec<Rational> = p.lower.clone();
    let residual: Vec<Rational> = p.equalities.mul_vec(&x).iter().zip(&p.rhs).map(|(ax, b)| b - ax).collect();

    // Row i is scaled by the sign of its residual so every artificial starts at |residual| >= 0.
    let mut t = RatMatrix::zeros(m, n + m);
    for i in 0..m {
        let flip = residual[i].is_negative();
        for j in 0..n {
            let v = &p.equalities[(i, j)];
            t[(i, j)] = if flip { -v.clone() } else { v.clone() };
        }
        t[(i, n + i)] = Rational::from_integer(1.into());
        x.push(residual[i].abs());
    }
    let mut lower = p.lower.clone();
    lower.extend(std::iter::repeat_n(Rational::zero(), m));
    let mut upper: Vec<Option<Rational>> = p.upper.iter().cloned().map(Some).collect();
    upper.extend(std::iter::repeat_n(None, m));
    let cap = 50_000 + 200 * (n + m);
    let mut tab = Tableau { t, basis: (n..n + m).collect(), x, lower, upper, steps: 0, cap };

    if m > 0 {
        let mut phase_one = vec![Rational::zero(); n + m];
        for c in phase_one.iter_mut().skip(n) {
            *c = Rational::from_integer((-1).into());
        }
        tab.run(&phase_one)?;
        if tab.x[n..].iter().any(|v| !v.is_zero()) {
            return Err(Error::Infeasible);
        }
        for j in n..n + m {
            tab.upper[j] = Some(Rational::zero());
        }
    }
    let mut objective = p.objective.clone();
    objective.extend(std::iter::repeat_n(Rational::zero(), m));
    tab.run(&objective)?;

    let sol: Vec<Rational> = tab.x[..n].to_vec();
    if !p.is_feasible(&sol) {
        return Err(Error::Internal("simplex returned an infeasible point".into()));
    }
    Ok(LpSolution { value: p.value(&sol), x: sol, pivots: tab.steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn single_variable() {
        let p = LinearProgram::boxed(ints(&[1]), ints(&[-1]), ints(&[1]));
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.value, int(1));
        assert_eq!(s.x, ints(&[1]));
    }

    #[test]
    fn closed_form_without_equalities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..8);
            let c: Vec<Rational> = (0..n).map(|_| rat(rng.gen_range(-9..10), rng.gen_range(1..5))).collect();
            let lo: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(-3..1))).collect();
            let hi: Vec<Rational> = lo.iter().map(|l| l + int(rng.gen_range(0..4))).collect();
            // centre·c + radius·|c|
            let expected: Rational = (0..n)
                .map(|i| {
                    let centre = (&lo[i] + &hi[i]) / int(2);
                    let radius = (&hi[i] - &lo[i]) / int(2);
                    &c[i] * centre + radius * c[i].abs()
                })
                .sum();
            let s = solve_lp(&LinearProgram::boxed(c, lo, hi)).unwrap();
            assert_eq!(s.value, expected);
        }
    }

    #[test]
    fn equality_constrained() {
        // max x + y, x - y = 0, x + z = 1/2, box [-1, 1]
        let p = LinearProgram {
            objective: ints(&[1, 1, 0]),
            lower: ints(&[-1, -1, -1]),
            upper: ints(&[1, 1, 1]),
            equalities: RatMatrix::from_i64(&[&[1, -1, 0], &[1, 0, 1]], 1),
            rhs: vec![int(0), rat(1, 2)],
        };
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.value, int(2));
        assert_eq!(
            s.x,
            ints(&[1, 1, 0])
                .into_iter()
                .enumerate()
                .map(|(i, v)| if i == 2 { rat(-1, 2) } else { v })
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn infeasible_and_bad_shapes() {
        let p = LinearProgram {
            objective: ints(&[1, 1]),
            lower: ints(&[-1, -1]),
            upper: ints(&[1, 1]),
            equalities: RatMatrix::from_i64(&[&[1, 1]], 1),
            rhs: ints(&[5]),
        };
        assert!(matches!(solve_lp(&p), Err(Error::Infeasible)));
        let crossed = LinearProgram::boxed(ints(&[1]), ints(&[1]), ints(&[0]));
        assert!(matches!(solve_lp(&crossed), Err(Error::Infeasible)));
        let mut shape = LinearProgram::boxed(ints(&[1, 2]), ints(&[0]), ints(&[1]));
        assert!(matches!(solve_lp(&shape), Err(Error::Shape(_))));
        shape.lower = ints(&[0, 0]);
        shape.upper = ints(&[1, 1]);
        assert_eq!(solve_lp(&shape).unwrap().value, int(3));
    }

    #[test]
    fn redundant_equalities() {
        let p = LinearProgram {
            objective: ints(&[2, -1, 1]),
            lower: ints(&[-1, -1, -1]),
            upper: ints(&[1, 1, 1]),
            equalities: RatMatrix::from_i64(&[&[1, 1, 0], &[2, 2, 0], &[0, 1, 1]], 1),
            rhs: ints(&[0, 0, 0]),
        };
        // y = -x, z = x: objective 2x + x + x = 4x
        assert_eq!(solve_lp(&p).unwrap().value, int(4));
    }

    /// Brute force over vertices: n - rank variables at bounds, the rest solved from `A x = b`.
    fn brute_force(p: &LinearProgram) -> Option<Rational> {
        let n = p.num_vars();
        let mut best: Option<Rational> = None;
        for mask in 0..(3usize.pow(n as u32)) {
            // each variable: 0 = lower, 1 = upper, 2 = free
            let mut code = mask;
            let mut fixed = vec![None; n];
            for f in fixed.iter_mut() {
                *f = match code % 3 {
                    0 => Some(false),
                    1 => Some(true),
                    _ => None,
                };
                code /= 3;
            }
            let free: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
            if free.len() > p.equalities.rows() {
                continue;
            }
            let mut rows = Vec::new();
            for i in 0..p.equalities.rows() {
                let mut rhs = p.rhs[i].clone();
                for (j, f) in fixed.iter().enumerate() {
                    if let Some(up) = *f {
                        rhs -= &p.equalities[(i, j)] * if up { &p.upper[j] } else { &p.lower[j] };
                    }
                }
                let mut row: Vec<Rational> = free.iter().map(|&j| p.equalities[(i, j)].clone()).collect();
                row.push(rhs);
                rows.push(row);
            }
            let x_free: Vec<Rational> = if free.is_empty() {
                Vec::new()
            } else {
                let aug = RatMatrix::from_rows(rows).unwrap();
                let (r, pivots) = aug.rref();
                if pivots.len() != free.len() || pivots.contains(&free.len()) {
                    continue;
                }
                (0..free.len()).map(|i| r[(i, free.len())].clone()).collect()
            };
            let mut x = vec![Rational::zero(); n];
            for j in 0..n {
                x[j] = match fixed[j] {
                    Some(true) => p.upper[j].clone(),
                    Some(false) => p.lower[j].clone(),
                    None => x_free[free.iter().position(|&f| f == j).unwrap()].clone(),
                };
            }
            if p.is_feasible(&x) {
                let v = p.value(&x);
                if best.as_ref().is_none_or(|b| &v > b) {
                    best = Some(v);
                }
            }
        }
        best
    }

    #[test]
    fn agrees_with_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let n = rng.gen_range(2..6);
            let m = rng.gen_range(1..3).min(n - 1);
            let p = LinearProgram {
                objective: (0..n).map(|_| int(rng.gen_range(-4..5))).collect(),
                lower: (0..n).map(|_| int(rng.gen_range(-2..1))).collect(),
                upper: (0..n).map(|_| int(rng.gen_range(1..3))).collect(),
                equalities: RatMatrix::from_rows(
                    (0..m).map(|_| (0..n).map(|_| int(rng.gen_range(-2..3))).collect()).collect(),
                )
                .unwrap(),
                rhs: (0..m).map(|_| int(rng.gen_range(-1..2))).collect(),
            };
            match (solve_lp(&p), brute_force(&p)) {
                (Ok(s), Some(b)) => assert_eq!(s.value, b),
                (Err(Error::Infeasible), None) => {}
                (got, want) => panic!("solver {got:?} vs brute force {want:?}"),
            }
        }
    }
}
