//! Seeded random streams.
//!
//! Every trial owns one ChaCha stream derived from `(seed, point, trial)`,
//! so parallel and serial execution consume identical randomness.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies the stream a [`TrialRng`] was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone)]
pub struct TrialRng {
    id: StreamId,
    inner: ChaCha8Rng,
}

impl TrialRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            id: StreamId { seed, stream },
            inner,
        }
    }

    /// Stream for trial `trial` of grid point `point`.
    pub fn for_trial(seed: u64, point: u32, trial: u32) -> Self {
        Self::with_stream(seed, ((point as u64) << 32) | trial as u64)
    }

    pub fn id(&self) -> StreamId {
        self.id
    }
}

impl RngCore for TrialRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
