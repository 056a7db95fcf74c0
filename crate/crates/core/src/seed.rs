//! Master-seed splitting.
//!
//! Every random stream in the crate is derived from one 64-bit master seed:
//!
//! ```text
//! derive(master, stream, index) = mix(mix(master ^ (stream_tag * GOLDEN)) ^ index)
//! ```
//!
//! where `mix` is the SplitMix64 finaliser. The stream tag separates subsystems
//! (traffic, policy initialisation, action sampling, evaluation, minibatch
//! shuffling) and `index` separates instances inside a subsystem, e.g. actor `i`
//! or evaluation rollout `k`. Each derived seed feeds a ChaCha8 generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Independent random streams fanned out from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Traffic generation inside one world.
    Traffic = 1,
    /// Network weight initialisation.
    PolicyInit = 2,
    /// Action sampling during rollouts.
    Sampling = 3,
    /// Evaluation rollout scenarios.
    Evaluation = 4,
    /// Minibatch shuffling.
    Minibatch = 5,
    /// Per-actor episode seeds during training.
    TrainEpisodes = 6,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    let base = splitmix64(master ^ (stream as u64).wrapping_mul(GOLDEN));
    splitmix64(base ^ index)
}

pub fn rng(master: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream, index))
}
