//! Seeded random streams.
//!
//! Every random decision in the toolkit comes from a [`ChaCha8Rng`]. Work
//! items that may run in parallel get their own stream so results do not depend
//! on scheduling.

pub use rand_chacha::ChaCha8Rng as Rng;
use rand::{Rng as _, SeedableRng};

/// Generator for `seed`, stream 0.
pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator for `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in `[lo, hi]`; a degenerate range still consumes one draw.
pub(crate) fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

/// Uniform index in `0..n` (`n > 0`).
pub(crate) fn index(rng: &mut Rng, n: usize) -> usize {
    rng.random_range(0..n)
}

/// Fisher-Yates shuffle driven by `rng`.
pub(crate) fn shuffle<T>(rng: &mut Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}
