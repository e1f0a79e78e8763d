//! Deterministic random rational points for sampling mode.

use super::{rat, Rat};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Draw a small-height rational avoiding `0` and `±1`, where most of the
/// paper's factors degenerate.
pub fn random_rat(rng: &mut impl Rng) -> Rat {
    loop {
        let n: i64 = rng.gen_range(2..=31) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let d: i64 = rng.gen_range(1..=31);
        let r = rat(n, d);
        if !r.is_zero() && !r.abs().is_one() {
            return r;
        }
    }
}

/// Seeded source of sample points. Every check derives its points from one
/// of these so that reports are reproducible.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
    pub fn rat(&mut self) -> Rat {
        random_rat(&mut self.rng)
    }
    pub fn rats(&mut self, k: usize) -> Vec<Rat> {
        (0..k).map(|_| self.rat()).collect()
    }
    pub fn next_seed(&mut self) -> u64 {
        self.rng.gen()
    }
}
