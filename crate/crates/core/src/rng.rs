//! Seed derivation and bit-set helpers shared by the samplers.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose word
//! position is a canonical index (edge index, arc index, pair index), so the
//! outcome of a draw never depends on iteration order or thread scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream used to derive per-(sample, run) cascade seeds.
pub(crate) const STREAM_RUNS: u64 = 1;
/// Stream used to derive per-round ensemble seeds in a campaign.
pub(crate) const STREAM_ROUNDS: u64 = 2;
/// Stream used to derive per-round recruitment draws in simulated campaigns.
pub(crate) const STREAM_SIMULATION: u64 = 3;

/// Deterministic child seed: word `index` of stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Draws one Bernoulli per probability, in order, from the stream keyed on
/// `seed`. Draw `i` always consumes the `i`-th 64-bit word of the stream.
pub(crate) fn bernoulli_bits(seed: u64, probs: impl Iterator<Item = f64>, out: &mut [u64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, p) in probs.enumerate() {
        let u: f64 = rng.random();
        if u < p {
            set_bit(out, i);
        }
    }
}

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
pub(crate) fn get_bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
pub(crate) fn set_bit(words: &mut [u64], i: usize) {
    words[i / 64] |= 1 << (i % 64);
}
