//! Deterministic derivation of independent RNG streams from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub enum Stream {
    ScenarioGeometry,
    TargetSampling,
    ObsNoise,
    ParamInit,
    /// Per-worker action sampling during rollout collection.
    Rollout(u64),
    /// Per-episode evaluation stream.
    EvalEpisode(u64),
    MinibatchShuffle,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::ScenarioGeometry => 1,
            Stream::TargetSampling => 2,
            Stream::ObsNoise => 3,
            Stream::ParamInit => 4,
            Stream::Rollout(w) => 5 + (w << 8),
            Stream::EvalEpisode(e) => 6 + (e << 8),
            Stream::MinibatchShuffle => 7,
        }
    }
}

/// splitmix64 finalizer; decorrelates nearby (seed, stream) pairs.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn stream(seed: u64, s: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(s.id())))
}
