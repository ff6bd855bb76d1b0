//! Seeded, position-addressable random streams.
//!
//! All randomness in the crate flows through ChaCha12 keyed by a `u64` seed.
//! The generator is addressable by 32-bit word position, so the value drawn
//! for sample element `(i, j)` is a pure function of `(seed, i, j)`: chunked
//! parallel consumers reproduce the exact sequential stream regardless of
//! how work is split across threads.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::normal::norm_ppf;

/// One `f64` draw consumes two 32-bit ChaCha words.
const WORDS_PER_DRAW: u128 = 2;

/// RNG positioned so the next draw is draw number `draw_index` of `seed`'s stream.
pub(crate) fn rng_at(seed: u64, draw_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_word_pos(WORDS_PER_DRAW * draw_index as u128);
    rng
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Uniform draw on the open interval (0, 1); never returns an endpoint.
pub(crate) fn next_open01(rng: &mut ChaCha12Rng) -> f64 {
    let bits = rng.next_u64() >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw by inverse-CDF transform of one uniform.
pub(crate) fn next_std_normal(rng: &mut ChaCha12Rng) -> f64 {
    norm_ppf(next_open01(rng))
}

/// Uniform integer in [0, n) without modulo bias.
pub(crate) fn next_index(rng: &mut ChaCha12Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as u64;
    let zone = u64::MAX - u64::MAX % n;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % n) as usize;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positioning_matches_sequential_stream() {
        let mut seq = rng_from_seed(42);
        let all: Vec<f64> = (0..32).map(|_| next_open01(&mut seq)).collect();
        for start in [0usize, 1, 7, 19] {
            let mut rng = rng_at(42, start as u64);
            for k in 0..5 {
                let v = next_open01(&mut rng);
                assert_eq!(v, all[start + k], "mismatch at start={start} k={k}");
            }
        }
    }

    #[test]
    fn open01_stays_inside_unit_interval() {
        let mut rng = rng_from_seed(7);
        for _ in 0..10_000 {
            let u = next_open01(&mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_draws_have_sane_moments() {
        let mut rng = rng_from_seed(3);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let z = next_std_normal(&mut rng);
            sum += z;
            sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn index_draws_cover_range() {
        let mut rng = rng_from_seed(11);
        let mut seen = [false; 7];
        for _ in 0..200 {
            seen[next_index(&mut rng, 7)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
