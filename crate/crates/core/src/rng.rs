//! Seeded random streams.
//!
//! Every simulated path is a pure function of a single `u64` seed. Independent
//! shock series of one path are drawn from separate ChaCha streams so that,
//! e.g., the ε series of a DGSV path coincides with the ε series of an AR(1)
//! path simulated from the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream carrying ε₁..ε_T.
pub const STREAM_EPS: u64 = 0;
/// Stream carrying η₁..η_T.
pub const STREAM_ETA: u64 = 1;
/// Stream carrying the pre-sample shocks ε₀, ε₋₁, ... (drawn backwards in time).
pub const STREAM_PRESAMPLE: u64 = 2;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` independent standard normal draws from one stream of `seed`.
pub fn normals(seed: u64, stream_id: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, stream_id);
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent realization under `base`.
///
/// Depends only on `(base, index)`, so realization `i` is the same whatever the
/// total number of realizations or the order they are evaluated in.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Separate seed family for auxiliary computations (oracles) that must not
/// share paths with the learning realizations.
pub fn domain_seed(base: u64, domain: &str) -> u64 {
    domain
        .bytes()
        .fold(splitmix64(base), |acc, b| splitmix64(acc ^ u64::from(b)))
}
