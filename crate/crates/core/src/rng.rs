//! Deterministic random streams keyed by `(seed, replicate, stage, particle)`.
//!
//! Every unit of parallel work draws from its own stream, so results do not
//! depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Particle slot used for streams that belong to a whole stage (resampling).
pub const STAGE_STREAM: u64 = u64::MAX;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit key of a stream.
pub fn stream_key(seed: u64, replicate: u64, stage: u64, particle: u64) -> u64 {
    let mut h = splitmix64(seed);
    for v in [replicate, stage, particle] {
        h = splitmix64(h.rotate_left(23) ^ splitmix64(v));
    }
    h
}

pub fn stream(seed: u64, replicate: u64, stage: u64, particle: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_key(seed, replicate, stage, particle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(1, 2, 3, 4).random();
        let b: u64 = stream(1, 2, 3, 4).random();
        assert_eq!(a, b);
        let keys = [
            stream_key(1, 2, 3, 4),
            stream_key(1, 2, 4, 3),
            stream_key(1, 3, 2, 4),
            stream_key(2, 1, 3, 4),
            stream_key(1, 2, 3, STAGE_STREAM),
        ];
        for i in 0..keys.len() {
            for j in 0..i {
                assert_ne!(keys[i], keys[j]);
            }
        }
    }
}
