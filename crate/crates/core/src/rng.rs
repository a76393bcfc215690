//! Seeded random streams. One run seed fans out into independent ChaCha
//! streams so that, for example, changing how often the explorer draws does
//! not shift the environment's noise sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Transitions = 1,
    Resets = 2,
    OptionExploration = 3,
    FlatExploration = 4,
    Rollout = 5,
}

#[derive(Debug, Clone, Copy)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, which: Stream) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(which as u64);
        rng
    }
}
