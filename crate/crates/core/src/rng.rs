//! Counter-based random streams.
//!
//! A stream is a ChaCha8 keystream selected by `(seed, stream)`: the seed
//! fixes the key, the stream id fixes the 64-bit nonce. Replicate `r` of a
//! Monte Carlo run always reads the same keystream, so results never depend
//! on which worker computed the replicate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStreamId {
    pub seed: u64,
    pub stream: u64,
}

impl RandomStreamId {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// The generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws `Z` conditioned on `Z > a` for `a > 0`, by exponential rejection
/// with the optimal rate `λ = (a + √(a² + 4)) / 2`.
pub(crate) fn upper_tail_normal<R: Rng + ?Sized>(rng: &mut R, a: f64) -> f64 {
    debug_assert!(a > 0.0);
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = Exp1.sample(rng);
        let x = a + e / lambda;
        let d = x - lambda;
        let u: f64 = rng.random();
        if u <= (-0.5 * d * d).exp() {
            return x;
        }
    }
}
