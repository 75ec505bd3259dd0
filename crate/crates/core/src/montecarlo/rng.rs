//! Counter-addressed random words.
//!
//! Every trial owns a fixed block of [`WORDS_PER_TRIAL`] 32-bit words in the
//! ChaCha8 keystream selected by `(seed, stream)`, at word offset
//! `trial * WORDS_PER_TRIAL`. Any index range can therefore be generated
//! independently and in any order with identical results.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub const WORDS_PER_TRIAL: usize = 16;

#[derive(Clone)]
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    /// Positions the keystream at the first word of `first_trial`.
    pub fn new(seed: u64, stream: u64, first_trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(u128::from(first_trial) * WORDS_PER_TRIAL as u128);
        Self { rng }
    }

    /// The next trial's words.
    pub fn next_block(&mut self) -> [u32; WORDS_PER_TRIAL] {
        std::array::from_fn(|_| self.rng.next_u32())
    }
}

/// Two words as one 64-bit integer, low word first.
pub fn join_words(lo: u32, hi: u32) -> u64 {
    u64::from(lo) | (u64::from(hi) << 32)
}

/// Maps 64 random bits to the open interval (0, 1): the top 52 bits select a
/// cell of width 2^-52 and the result is its midpoint, which is exact.
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_are_addressable() {
        let mut seq = TrialStream::new(7, 3, 0);
        let blocks: Vec<_> = (0..10).map(|_| seq.next_block()).collect();
        for (k, b) in blocks.iter().enumerate() {
            assert_eq!(&TrialStream::new(7, 3, k as u64).next_block(), b);
        }
    }

    #[test]
    fn streams_and_seeds_differ() {
        let a = TrialStream::new(7, 0, 0).next_block();
        assert_ne!(a, TrialStream::new(7, 1, 0).next_block());
        assert_ne!(a, TrialStream::new(8, 0, 0).next_block());
    }

    #[test]
    fn unit_interval_is_open() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
        assert_eq!(open_unit(1 << 63), 0.5 + 0.5 / (1u64 << 52) as f64);
        assert_eq!(1.0 - open_unit(u64::MAX), open_unit(0));
    }
}
