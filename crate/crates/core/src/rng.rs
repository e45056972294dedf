//! Keyed random streams.
//!
//! Every random draw in an experiment comes from a ChaCha stream whose key is
//! the tuple `(master seed, cell, replication, role)`; bootstrap repetitions
//! and limit-law draws select a sub-stream inside that key. Streams are
//! therefore addressed rather than advanced, which is what makes results
//! independent of scheduling and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for inside one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Data = 0,
    Weights = 1,
    Limit = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    words: [u64; 4],
    substream: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, cell: u64, replication: u64, role: Role) -> Self {
        StreamKey {
            words: [master_seed, cell, replication, role as u64],
            substream: 0,
        }
    }

    /// Key for sub-stream `index`; distinct indices give independent streams.
    pub fn substream(self, index: u64) -> Self {
        StreamKey {
            substream: index.wrapping_add(1),
            ..self
        }
    }

    pub fn with_role(self, role: Role) -> Self {
        let mut words = self.words;
        words[3] = role as u64;
        StreamKey { words, substream: 0 }
    }

    pub fn rng(&self) -> StreamRng {
        let mut seed = [0u8; 32];
        for (chunk, word) in seed.chunks_exact_mut(8).zip(self.words) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.substream);
        rng
    }
}
