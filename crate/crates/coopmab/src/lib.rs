//! Simulation library for cooperative stochastic multi-armed bandits on
//! communication graphs.
//!
//! `m` agents sit on the vertices of a connected undirected graph. Each round
//! every agent plays one of `A` actions, observes a stochastic reward, and
//! exchanges messages with its neighbors. All policies here are built around
//! successive elimination: an action is dropped once its upper confidence
//! bound falls strictly below another action's lower confidence bound.
//!
//! The crate provides:
//! - bandit instances, reward sampling, and pseudo-regret accounting ([`bandit`]);
//! - graph families, BFS distances, and shared rooted spanning trees ([`graph`]);
//! - protocol events/messages with canonical bit-size accounting ([`events`]);
//! - the agent policies: gossip-flooding elimination (`CoopSe`), the
//!   diameter-delayed lockstep variant (`SusAct`), the tree-aggregated variant
//!   (`Restricted`), the one-event-per-message clocked variant (`LowComm`),
//!   and a single-agent baseline ([`agents`]);
//! - a deterministic round simulator, a message-free fast path for the
//!   flooding policy, trace checkers for the structural properties the
//!   protocols are supposed to satisfy, and experiment helpers ([`sim`]).
//!
//! Everything is deterministic given a master seed: per-agent action and
//! reward draws come from independent ChaCha streams keyed by
//! `(master seed, agent id, purpose)`.

pub mod agents;
pub mod bandit;
pub mod events;
pub mod graph;
pub mod rng;
pub mod sim;

pub use bandit::{iota, make_instance, sample_reward, BanditInstance, ConfidenceParams, RegretLedger, RewardKind};
pub use events::{dedupe, encode_size_bits, Event, EventKey, EventWidths, Message};
pub use graph::{build_spanning_tree, generate, CommGraph, SpanningTree, Topology};
pub use sim::{run, run_fast_coop_se, sweep, InstanceSpec, Metrics, PolicyKind, RunTrace, SimConfig, TopologySpec};
