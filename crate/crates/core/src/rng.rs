//! Deterministic sampling primitives.
//!
//! Generated instance sets must be reproducible bit-for-bit from a seed,
//! across releases and across reimplementations in other languages. The
//! stream generator is ChaCha8 (`rand_chacha`, seeded via `seed_from_u64`),
//! and every derived quantity is produced by the fixed algorithms below
//! rather than by library samplers whose internals may change:
//!
//! - `uniform(bound)`: rejection sampling on `next_u64`. Draw `x`; accept
//!   `x % bound` iff `x < 2^64 - (2^64 mod bound)`.
//! - `sample_distinct(n, k)`: partial Fisher-Yates over `0..n`, taking the
//!   first `k` slots, then sorted ascending.
//! - `shuffle`: full Fisher-Yates, swapping index `i` with `i + uniform(len-i)`.
//! - `unit_f64`: `(next_u64 >> 11) * 2^-53`, uniform on `[0, 1)`.

use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;

/// Uniform draw from `0..bound` by rejection. `bound` must be nonzero.
pub fn uniform(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    // 2^64 mod bound, then the last draw inside the largest multiple of bound
    let excess = (u64::MAX % bound + 1) % bound;
    let limit = u64::MAX - excess;
    loop {
        let x = rng.next_u64();
        if x <= limit {
            return x % bound;
        }
    }
}

/// `k` distinct values from `0..n`, ascending. `k <= n` required.
pub fn sample_distinct(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform(rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    let n = items.len();
    for i in 0..n.saturating_sub(1) {
        let j = i + uniform(rng, (n - i) as u64) as usize;
        items.swap(i, j);
    }
}

/// Uniform on `[0, 1)` with 53 bits of precision.
pub fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
