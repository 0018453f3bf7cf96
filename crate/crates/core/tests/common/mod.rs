//! Random scalar univariate masks with dyadic coefficients and two sum rules.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subdiv_core::rational::{int, rat};
use subdiv_core::{MatrixMask, Rational};

/// `A(z) = (1 + z)^2 q(z)` with `q(1) = 1/2`, so the symbol `A(z)/2` has a double zero at `-1`
/// and value one at `1`. The support is `[0, N]` with `N <= max_len`.
pub fn random_mask(rng: &mut ChaCha8Rng, max_len: usize) -> MatrixMask {
    let q_len = rng.gen_range(1..=max_len - 1);
    let mut q: Vec<Rational> = (0..q_len - 1).map(|_| rat(rng.gen_range(-8..=8), 32)).collect();
    let rest = rat(1, 2) - q.iter().cloned().sum::<Rational>();
    q.push(rest);
    let mut a = vec![Rational::from_integer(0.into()); q_len + 2];
    for (i, c) in q.iter().enumerate() {
        a[i] += c;
        a[i + 1] += c * int(2);
        a[i + 2] += c;
    }
    let idx: Vec<[i64; 1]> = (0..a.len() as i64).map(|i| [i]).collect();
    let entries: Vec<(&[i64], Rational)> = idx.iter().zip(&a).map(|(i, c)| (&i[..], c.clone())).collect();
    let (mask, _) = MatrixMask::scalar(1, &entries).unwrap().normalized();
    mask
}

pub fn corpus(seed: u64, count: usize) -> Vec<MatrixMask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_mask(&mut rng, 8)).collect()
}
