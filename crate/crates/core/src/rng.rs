//! Seed derivation. Every random stream is derived from one root seed and a
//! (stage, key) label so results do not depend on processing order.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 64-bit seed for `(stage, key)` under `root`.
pub fn derive_seed(root: u64, stage: &str, key: &str) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, stage.as_bytes());
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, key.as_bytes());
    splitmix(root ^ splitmix(h))
}

pub fn stage_rng(root: u64, stage: &str, key: &str) -> StageRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stage, key))
}

/// `n` distinct indices below `len`, uniformly, in sampled order. Panics
/// when `n > len`.
pub fn sample_indices(len: usize, n: usize, root: u64, stage: &str) -> Vec<usize> {
    let mut rng = stage_rng(root, stage, "");
    rand::seq::index::sample(&mut rng, len, n).into_vec()
}
