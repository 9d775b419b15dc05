//! Seeded randomness with a fixed, documented algorithm.
//!
//! Every random draw in the crate goes through [`seeded`] and the
//! helpers below so that a seed fully determines the output regardless of
//! changes in `rand`'s own bounded-integer or shuffling routines:
//!
//! * generator: ChaCha8, keyed with `SeedableRng::seed_from_u64(seed)`
//! * bounded integers: Lemire's widening-multiply method with rejection
//! * sampling without replacement: partial Fisher-Yates over the input order
//! * floats: top 53 bits of one 64-bit draw

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name recorded in run manifests.
pub const ALGORITHM: &str = "chacha8/seed_from_u64 + lemire-bounded + partial-fisher-yates";

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform integer in `0..bound`. `bound` must be nonzero.
pub fn below(rng: &mut Rng, bound: u64) -> u64 {
    assert!(bound > 0, "bound must be positive");
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let m = u128::from(rng.next_u64()) * u128::from(bound);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// Uniform `f64` in `[0, 1)` from the top 53 bits of one draw.
pub fn unit(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws `k` distinct elements of `items`, in draw order.
pub fn sample_without_replacement<T: Clone>(rng: &mut Rng, items: &[T], k: usize) -> Vec<T> {
    assert!(k <= items.len(), "cannot draw {k} of {}", items.len());
    let mut pool: Vec<usize> = (0..items.len()).collect();
    let n = pool.len();
    for i in 0..k {
        let j = i + below(rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool[..k].iter().map(|&i| items[i].clone()).collect()
}
