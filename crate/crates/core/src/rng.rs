//! Deterministic stream derivation: every consumer of randomness derives its
//! own ChaCha stream from (master seed, domain label, index), so results do
//! not depend on evaluation order or thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the domain label; stable across platforms.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive an independent RNG stream for `(master, domain, index)`.
pub fn seed_stream(master: u64, domain: &str, index: u64) -> ChaCha8Rng {
    let mut state = master ^ fnv1a(domain.as_bytes()).rotate_left(17) ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// A 64-bit value derived from `(master, domain, index)`, for seeding
/// sub-components that take plain integer seeds.
pub fn derive_seed(master: u64, domain: &str, index: u64) -> u64 {
    let mut state = master ^ fnv1a(domain.as_bytes()).rotate_left(17) ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    splitmix64(&mut state)
}
