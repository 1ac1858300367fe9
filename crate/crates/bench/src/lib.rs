//! Fixtures shared by the benchmarks in `benches/`.

use qhmm_core::qhmm::random_density;
use qhmm_core::{ClassicalHmm, DensityOperator, GenerativeModel, Symbol};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `n` length-`len` sequences drawn from the market model.
pub fn market_sequences(n: usize, len: usize, seed: u64) -> Vec<Vec<Symbol>> {
    let m = ClassicalHmm::market4();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| m.sample_sequence(len, &mut rng)).collect()
}

/// A pair of random full-rank states of dimension `n`.
pub fn state_pair(n: usize, seed: u64) -> (DensityOperator, DensityOperator) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_density(n, &mut rng), random_density(n, &mut rng))
}
