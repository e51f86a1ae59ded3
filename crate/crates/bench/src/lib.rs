//! Synthetic inputs for the benchmarks.

use outfitter_core::{FeatureSpace, FeatureVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` vectors drawn around `archetypes` random centres; each slot keeps the
/// centre's value with probability `1 - noise`.
pub fn clustered_vectors(
    space: &FeatureSpace,
    n: usize,
    archetypes: usize,
    noise: f64,
    seed: u64,
) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<u32> {
        space
            .slots()
            .iter()
            .map(|s| rng.random_range(0..s.len() as u32))
            .collect()
    };
    let centres: Vec<Vec<u32>> = (0..archetypes).map(|_| draw(&mut rng)).collect();
    (0..n)
        .map(|i| {
            let mut v = centres[i % archetypes].clone();
            for (j, s) in space.slots().iter().enumerate() {
                if rng.random_bool(noise) {
                    v[j] = rng.random_range(0..s.len() as u32);
                }
            }
            FeatureVector::new(v)
        })
        .collect()
}
