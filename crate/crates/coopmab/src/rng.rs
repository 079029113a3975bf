//! Seeded random-stream derivation.
//!
//! Every run owns a family of independent ChaCha streams keyed by
//! `(master seed, agent id, purpose)`, so adding agents never perturbs the
//! draws of existing ones, and action selection stays reproducible
//! independently of reward sampling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// One uniform draw per round for action selection.
    Action = 1,
    /// Reward sampling for the agent's own plays.
    Reward = 2,
    /// Per-seed instance randomization (e.g. drawing the optimal action).
    Instance = 3,
    /// Random graph construction.
    Graph = 4,
}

/// Derives the stream for `(master, agent, purpose)`.
pub fn stream(master: u64, agent: u64, purpose: StreamPurpose) -> ChaCha12Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&agent.to_le_bytes());
    seed[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    ChaCha12Rng::from_seed(seed)
}

pub fn action_stream(master: u64, agent: usize) -> ChaCha12Rng {
    stream(master, agent as u64, StreamPurpose::Action)
}

pub fn reward_stream(master: u64, agent: usize) -> ChaCha12Rng {
    stream(master, agent as u64, StreamPurpose::Reward)
}

pub fn instance_stream(master: u64) -> ChaCha12Rng {
    stream(master, 0, StreamPurpose::Instance)
}

pub fn graph_stream(seed: u64) -> ChaCha12Rng {
    stream(seed, 0, StreamPurpose::Graph)
}
