//! Reproducible random streams for parallel simulation.
//!
//! Every unit of work (a coverage cell, a replicate within it, a chain) owns a
//! ChaCha8 stream addressed by a 64-bit key and a stream index. ChaCha is a
//! counter-mode generator, so distinct `(key, stream)` pairs give independent
//! sequences no matter which worker consumes them or in what order.
//!
//! Keys are derived with a SplitMix64 chain:
//! `key = mix(... mix(mix(seed) ^ mix(c1)) ^ mix(c2) ...)`, where `mix` is the
//! SplitMix64 finaliser and `c1, c2, ...` are the identifying components
//! (method code, sample size, bit pattern of the parameter value).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finaliser.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds identifying components into a root seed.
pub fn derive_key(seed: u64, components: &[u64]) -> u64 {
    components.iter().fold(mix(seed), |acc, &c| mix(acc ^ mix(c)))
}

/// The generator for stream `index` under `key`.
pub fn substream(key: u64, index: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    let mut state = key;
    for chunk in bytes.chunks_exact_mut(8) {
        state = mix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(index);
    rng
}

/// Uniform on the open interval `(0, 1)` with 53 bits of resolution.
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
