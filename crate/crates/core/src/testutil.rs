//! Shared helpers for unit tests.

use crate::csp::{BinaryConstraint, Instance};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random tiny instance (2-5 variables, domain sizes 1-3, random table
/// constraints) for oracle cross-checks.
pub(crate) fn random_tiny(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 + crate::rng::uniform(&mut rng, 4) as usize;
    let d = 1 + crate::rng::uniform(&mut rng, 3) as usize;
    let max_pairs = n * (n - 1) / 2;
    let k = 1 + crate::rng::uniform(&mut rng, max_pairs as u64) as usize;
    let chosen = crate::rng::sample_distinct(&mut rng, max_pairs, k);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    let constraints = chosen
        .into_iter()
        .map(|p| {
            let (i, j) = pairs[p];
            let mask: u64 = rng.next_u64();
            BinaryConstraint::from_fn(i, j, d, d, |a, b| mask >> ((a * d + b) % 64) & 1 == 1)
        })
        .collect();
    Instance::new(vec![d; n], constraints).unwrap()
}
