//! Deterministic random sub-streams.
//!
//! Every parallel unit of work gets its own ChaCha8 stream keyed by a master
//! seed and a short tuple of indices, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a master seed with a key path into a single 64-bit seed.
pub fn mix_seed(master: u64, keys: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

/// Independent stream for the cell identified by `keys`.
pub fn substream(master: u64, keys: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(mix_seed(master, keys))
}

/// Plain seeded stream.
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = substream(7, &[1, 2]).random();
        let b: u64 = substream(7, &[1, 2]).random();
        let c: u64 = substream(7, &[2, 1]).random();
        let d: u64 = substream(8, &[1, 2]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
