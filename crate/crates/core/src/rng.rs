//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(master seed, purpose, stream id)`; the stream id is the trial index.
//! Work is split into fixed-size blocks of trials so that results do not
//! depend on how many worker threads execute them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

/// Trials per parallel work unit. Fixed so aggregation order never depends
/// on the thread count.
pub const BLOCK_TRIALS: u64 = 2048;

/// Mixes a purpose label into a master seed (splitmix64 finalizer over an
/// FNV-1a hash of the label).
pub fn derive_seed(master: u64, purpose: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for one stream of a master seed.
#[derive(Clone)]
pub struct Streams {
    proto: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self {
            proto: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_purpose(master: u64, purpose: &str) -> Self {
        Self::new(derive_seed(master, purpose))
    }

    pub fn stream(&self, id: u64) -> StreamRng {
        let mut rng = self.proto.clone();
        rng.set_stream(id);
        rng.set_word_pos(0);
        rng
    }
}

/// Uniform draw from [-1, 1).
#[inline]
pub fn symmetric_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..1.0)
}

/// Uniform sign vector of length `n`, as ±1 values.
pub fn random_signs<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<i8> {
    let mut out = Vec::with_capacity(n);
    let mut word = 0u64;
    for i in 0..n {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        out.push(if word >> (i % 64) & 1 == 1 { 1 } else { -1 });
    }
    out
}

/// Accumulators that can absorb another accumulator of the same kind.
pub trait Absorb {
    fn absorb(&mut self, other: Self);
}

/// Runs `trial` once per trial index on its own stream, folds outputs into
/// per-block accumulators with `merge`, then absorbs the blocks in order.
pub fn run_trials<A, T, F, M>(streams: &Streams, trials: u64, init: A, trial: F, merge: M) -> A
where
    A: Absorb + Clone + Send + Sync,
    T: Send,
    F: Fn(&mut StreamRng, u64) -> T + Sync,
    M: Fn(&mut A, T) + Sync,
{
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let partials: Vec<A> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut acc = init.clone();
            let start = block * BLOCK_TRIALS;
            let end = (start + BLOCK_TRIALS).min(trials);
            for t in start..end {
                let mut rng = streams.stream(t);
                let out = trial(&mut rng, t);
                merge(&mut acc, out);
            }
            acc
        })
        .collect();
    let mut total = init;
    for part in partials {
        total.absorb(part);
    }
    total
}

/// Number of trials (out of `trials`) for which `event` returns true.
pub fn count_events<F>(streams: &Streams, trials: u64, event: F) -> u64
where
    F: Fn(&mut StreamRng) -> bool + Sync,
{
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    (0..blocks)
        .into_par_iter()
        .map(|block| {
            let start = block * BLOCK_TRIALS;
            let end = (start + BLOCK_TRIALS).min(trials);
            (start..end)
                .filter(|&t| {
                    let mut rng = streams.stream(t);
                    event(&mut rng)
                })
                .count() as u64
        })
        .sum()
}
