//! Seed derivation for independent, reproducible random streams.
//!
//! Every (drop, link) pair gets its own ChaCha20 stream:
//!
//! * key: four SplitMix64 outputs, the generator being seeded with
//!   `mix64(mix64(base_seed) ^ drop)` where `mix64` is the SplitMix64
//!   finalizer;
//! * stream id: the link id (`ChaCha20Rng::set_stream`), word position 0.
//!
//! The key deliberately excludes the repeater position and gain mode, so all
//! sweep cells see the same channel realizations for a given drop (common
//! random numbers). Streams depend only on their coordinates, never on the
//! order in which drops are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn drop_key(base_seed: u64, drop: u64) -> [u8; 32] {
    let mut state = mix64(mix64(base_seed) ^ drop);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    key
}

/// Random stream for `link` in drop `drop` of a run seeded with `base_seed`.
pub fn stream(base_seed: u64, drop: u64, link: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::from_seed(drop_key(base_seed, drop));
    rng.set_stream(link);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn chacha20_reference_vector() {
        // All-zero key and nonce: first keystream word of RFC 7539 / the
        // original ChaCha20 test vector (76 b8 e0 ad ...).
        let mut rng = ChaCha20Rng::from_seed([0u8; 32]);
        assert_eq!(rng.next_u32(), 0xade0_b876);
        assert_eq!(rng.next_u32(), 0x903d_f1a0);
    }

    #[test]
    fn splitmix_finalizer_vector() {
        // First output of SplitMix64 seeded with 0.
        assert_eq!(mix64(GOLDEN_GAMMA), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn derived_stream_vector() {
        let mut rng = stream(1, 0, 0);
        let first = rng.next_u64();
        let mut again = stream(1, 0, 0);
        assert_eq!(again.next_u64(), first);
        // Independent reimplementation of the key schedule and ChaCha20 block.
        assert_eq!(first, 0x3ea4_f3c8_617a_f277);
    }

    #[test]
    fn coordinates_separate_streams() {
        let a = stream(7, 3, 1).next_u64();
        assert_ne!(a, stream(7, 3, 2).next_u64());
        assert_ne!(a, stream(7, 4, 1).next_u64());
        assert_ne!(a, stream(8, 3, 1).next_u64());
    }
}
