//! Seeded random streams.
//!
//! Every random object is drawn from its own ChaCha8 stream whose key is a hash of
//! `(master_seed, object_tag, index)`, so reconstruction from a seed is exact and
//! independent of construction order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// 256-bit stream key derived from the master seed, a tag naming the object, and an index.
pub fn stream_key(master_seed: u64, tag: &str, index: u64) -> [u8; 32] {
    let mut state = splitmix64(master_seed) ^ fnv1a(tag);
    state = splitmix64(state) ^ index;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

pub fn derive_stream(master_seed: u64, tag: &str, index: u64) -> Stream {
    ChaCha8Rng::from_seed(stream_key(master_seed, tag, index))
}

pub fn gaussian_vec(rng: &mut Stream, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn sign_vec(rng: &mut Stream, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Uniform random permutation of `0..n` (Fisher–Yates).
pub fn permutation(rng: &mut Stream, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

pub fn invert_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &pi) in p.iter().enumerate() {
        inv[pi] = i;
    }
    inv
}
