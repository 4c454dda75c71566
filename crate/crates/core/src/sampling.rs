//! Seeded randomness shared by the probes, so every report is reproducible.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::group::{GroupElement, Letter, Presentation};

/// Above this many items pairs are sampled rather than enumerated.
pub const ALL_PAIRS_LIMIT: usize = 2000;

/// Number of sampled pairs when enumeration is too large.
pub const SAMPLED_PAIRS: usize = 100_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Word of uniform length in `0..=max_len` over the `2n + 2` generators.
pub fn random_word<R: Rng>(pres: &Presentation, rng: &mut R, max_len: usize) -> Vec<Letter> {
    let gens = pres.generators();
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| *gens.choose(rng).expect("nonempty generating set")).collect()
}

pub fn random_element<R: Rng>(pres: &Presentation, rng: &mut R, max_len: usize) -> GroupElement {
    let w = random_word(pres, rng, max_len);
    pres.britton_reduce(&w).expect("generator words are valid")
}

/// Index pairs `i < j`: all of them for at most [`ALL_PAIRS_LIMIT`] items,
/// otherwise [`SAMPLED_PAIRS`] uniform draws with `i != j`.
pub fn index_pairs(count: usize, seed: u64) -> Vec<(usize, usize)> {
    if count <= ALL_PAIRS_LIMIT {
        let mut out = Vec::with_capacity(count * count.saturating_sub(1) / 2);
        for i in 0..count {
            for j in i + 1..count {
                out.push((i, j));
            }
        }
        return out;
    }
    let mut r = rng(seed);
    (0..SAMPLED_PAIRS)
        .map(|_| loop {
            let i = r.gen_range(0..count);
            let j = r.gen_range(0..count);
            if i != j {
                break (i.min(j), i.max(j));
            }
        })
        .collect()
}
