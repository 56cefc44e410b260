//! Deterministic random substreams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed, with the
//! stream id encoding `(chunk_index, role)`. A chunk's draws therefore
//! depend only on the seed and the chunk index, never on which worker
//! thread ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The independent consumers of randomness within one chunk of trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    AliceSetting = 0,
    BobSetting = 1,
    Source = 2,
    AliceLocal = 3,
    BobLocal = 4,
}

const ROLES_PER_CHUNK: u64 = 8;

pub fn substream(seed: u64, chunk_index: u64, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk_index * ROLES_PER_CHUNK + role as u64);
    rng
}

/// Randomness consumed by one trial of a hidden-variable model: the shared
/// source draw plus each station's private randomness.
#[derive(Debug, Clone)]
pub struct TrialStreams<R = ChaCha8Rng> {
    pub source: R,
    pub alice: R,
    pub bob: R,
}

impl TrialStreams<ChaCha8Rng> {
    pub fn for_chunk(seed: u64, chunk_index: u64) -> Self {
        TrialStreams {
            source: substream(seed, chunk_index, StreamRole::Source),
            alice: substream(seed, chunk_index, StreamRole::AliceLocal),
            bob: substream(seed, chunk_index, StreamRole::BobLocal),
        }
    }
}
