//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from an explicit [`Stream`]
//! owned by the caller. Streams for independent work items (Monte Carlo
//! trials, audit pairs) are derived from a master seed and the item's
//! coordinates with [`derive_seed`], so results do not depend on the order in
//! which items are executed or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The concrete generator used for all seeded streams.
pub type Stream = ChaCha8Rng;

/// Creates a stream from a 64-bit seed.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a seed from a master seed and a path of coordinates.
///
/// Distinct paths give statistically independent seeds; the mapping is fixed
/// and portable.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master), |acc, &c| mix(acc ^ mix(c)))
}

/// Tags separating the data and noise streams of a single trial.
pub(crate) const DATA_STREAM: u64 = 0xDA7A;
pub(crate) const NOISE_STREAM: u64 = 0x4015E;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(7, &[100, 0]);
        assert_eq!(a, derive_seed(7, &[100, 0]));
        assert_ne!(a, derive_seed(7, &[100, 1]));
        assert_ne!(a, derive_seed(7, &[101, 0]));
        assert_ne!(a, derive_seed(8, &[100, 0]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
    }

    #[test]
    fn streams_reproduce() {
        let mut a = stream(42);
        let mut b = stream(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
