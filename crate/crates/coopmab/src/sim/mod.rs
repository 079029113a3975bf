//! Round-synchronized simulation driver.
//!
//! A run executes `T` rounds over all agents: in phase 1 every agent ingests
//! its inbox, eliminates, plays, and emits outboxes; in phase 2 the outboxes
//! become round-`t+1` inboxes. Everything is deterministic given the seed
//! list: per-agent action and reward randomness come from independent
//! streams, so the fast flooding path (which visits agents in a different
//! order) reproduces explicit runs bit for bit.
//!
//! Submodules: explicit message-passing engines ([`engine`]), the
//! allocation-free flooding fast path ([`fast`]), trace checkers
//! ([`checkers`]), CSV/JSON writers ([`output`]), and the hard-instance
//! lower-bound experiment ([`lower_bound`]).

pub mod checkers;
mod engine;
mod fast;
pub mod lower_bound;
pub mod output;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::low_comm::UnitStore;
use crate::bandit::{make_instance, BanditInstance, InstanceError, RewardKind};
use crate::graph::{build_spanning_tree, generate, CommGraph, GraphError, SpanningTree, Topology};
use crate::rng::graph_stream;

pub use lower_bound::{lower_bound_floor, run_lower_bound, LowerBoundReport};

/// The implemented policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Flooding successive elimination.
    CoopSe,
    /// Diameter-delayed lockstep elimination, round-robin selection.
    SusAct,
    /// Spanning-tree aggregation, one aggregate per active action per round.
    Restricted,
    /// Clocked spanning-tree schedule, one event per edge direction per round.
    LowComm,
    /// Single-agent baseline (m = 1).
    SingleSe,
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PolicyKind::CoopSe => "coop-se",
            PolicyKind::SusAct => "sus-act",
            PolicyKind::Restricted => "restricted",
            PolicyKind::LowComm => "low-comm",
            PolicyKind::SingleSe => "single-se",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coop-se" => Ok(PolicyKind::CoopSe),
            "sus-act" => Ok(PolicyKind::SusAct),
            "restricted" => Ok(PolicyKind::Restricted),
            "low-comm" => Ok(PolicyKind::LowComm),
            "single-se" => Ok(PolicyKind::SingleSe),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

/// Which graph to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: Topology,
    pub m: usize,
    /// Seed for randomized families; ignored by deterministic ones.
    pub graph_seed: u64,
}

/// Which bandit instance to play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub means: Vec<f64>,
    pub kind: RewardKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub policy: PolicyKind,
    pub topology: TopologySpec,
    pub instance: InstanceSpec,
    pub t_horizon: u32,
    /// Master seeds, one independent simulation each.
    pub seeds: Vec<u64>,
    /// Use the message-free flooding fast path (CoopSe only).
    pub fast_path: bool,
    /// Record per-round actions, active sets, message bits, eliminations.
    pub capture_trace: bool,
    /// Additionally record per-round confidence snapshots (n and reward sums).
    pub capture_conf: bool,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("horizon must be at least 1")]
    HorizonZero,
    #[error("seed list is empty")]
    NoSeeds,
    #[error("single-se requires m = 1, got m={m}")]
    SingleAgentOnly { m: usize },
    #[error("fast path only applies to coop-se, got {policy}")]
    FastPathOnlyCoopSe { policy: PolicyKind },
    #[error("sus-act needs delay {delay} <= horizon {t_horizon}")]
    DelayExceedsHorizon { delay: u32, t_horizon: u32 },
    #[error("at most 65535 actions are supported, got {a}")]
    TooManyActions { a: usize },
    #[error("the hard instance needs sqrt(A) > 20, i.e. A >= 441, got A={a}")]
    LowerBoundTooFewActions { a: usize },
}

/// One action leaving one agent's active set via its own elimination step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Elimination {
    pub t: u32,
    pub agent: u32,
    pub action: u32,
}

/// A maximal interval during which an agent's active set is constant, in the
/// one-removal-per-stage convention: stage `j` holds `A - j + 1` actions, and
/// simultaneous removals produce intervening zero-length stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// 1-based stage index `j`.
    pub index: usize,
    /// First round of the stage, `t_j`.
    pub start: u32,
    /// One past the last round, `t_{j+1}`.
    pub end_excl: u32,
    /// Active actions during the stage, ascending.
    pub active: Vec<u32>,
}

impl Stage {
    /// Stage length τ_j (zero when several actions left at once).
    pub fn len(&self) -> u32 {
        self.end_excl - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end_excl
    }

    /// A_j, the number of active actions.
    pub fn a_j(&self) -> usize {
        self.active.len()
    }
}

/// Full per-round record of one simulation. Row-major over rounds then
/// agents: index `(t-1)*m + u` for round `t` (1-based) and agent `u`.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub m: usize,
    pub t_horizon: u32,
    pub a_count: usize,
    /// Chosen action per (round, agent).
    pub actions: Vec<u16>,
    /// Words per active-set bitmask.
    pub active_words: usize,
    /// Active-set snapshot per (round, agent), taken after the round's
    /// elimination step (= the set the play was drawn from).
    pub active: Vec<u64>,
    /// Bits sent per (round, agent), summed over that agent's messages.
    pub msg_bits: Vec<u64>,
    /// Own elimination-step removals, in execution order.
    pub eliminations: Vec<Elimination>,
    /// Observation counts per (round, agent, action) at elimination-step
    /// time, when confidence capture was requested.
    pub conf_n: Option<Vec<u64>>,
    /// Reward sums, same layout as `conf_n`.
    pub conf_r: Option<Vec<f64>>,
}

impl RunTrace {
    fn idx(&self, t: u32, u: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.t_horizon && u < self.m);
        (t as usize - 1) * self.m + u
    }

    pub fn action_at(&self, t: u32, u: usize) -> u32 {
        self.actions[self.idx(t, u)] as u32
    }

    pub fn msg_bits_at(&self, t: u32, u: usize) -> u64 {
        self.msg_bits[self.idx(t, u)]
    }

    pub fn is_active(&self, t: u32, u: usize, a: u32) -> bool {
        let base = self.idx(t, u) * self.active_words;
        self.active[base + (a / 64) as usize] >> (a % 64) & 1 == 1
    }

    pub fn active_size(&self, t: u32, u: usize) -> usize {
        let base = self.idx(t, u) * self.active_words;
        self.active[base..base + self.active_words]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn active_vec(&self, t: u32, u: usize) -> Vec<u32> {
        (0..self.a_count as u32).filter(|&a| self.is_active(t, u, a)).collect()
    }

    /// Observation count entering round `t` (panics unless captured).
    pub fn n_at(&self, t: u32, u: usize, a: u32) -> u64 {
        let conf = self.conf_n.as_ref().expect("trace captured without confidence snapshots");
        conf[self.idx(t, u) * self.a_count + a as usize]
    }

    /// Reward sum entering round `t` (panics unless captured).
    pub fn r_at(&self, t: u32, u: usize, a: u32) -> f64 {
        let conf = self.conf_r.as_ref().expect("trace captured without confidence snapshots");
        conf[self.idx(t, u) * self.a_count + a as usize]
    }

    /// Rounds at which actions left agent `u`'s active set (own eliminations
    /// and applied remote notices alike), ascending by round then action.
    pub fn removal_order(&self, u: usize) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        let mut prev: Vec<u32> = (0..self.a_count as u32).collect();
        for t in 1..=self.t_horizon {
            let cur = self.active_vec(t, u);
            if cur.len() != prev.len() {
                for &a in &prev {
                    if !cur.contains(&a) {
                        out.push((t, a));
                    }
                }
            }
            prev = cur;
        }
        out
    }

    /// Stage decomposition of agent `u`'s run: `t_1 = 1`, one removal per
    /// boundary, final stage ends at `T+1`. Stages partition `[1, T]`.
    pub fn stages(&self, u: usize) -> Vec<Stage> {
        let mut stages = Vec::new();
        let mut active: Vec<u32> = (0..self.a_count as u32).collect();
        let mut start = 1u32;
        for (t, a) in self.removal_order(u) {
            stages.push(Stage {
                index: stages.len() + 1,
                start,
                end_excl: t,
                active: active.clone(),
            });
            active.retain(|&x| x != a);
            start = t;
        }
        stages.push(Stage {
            index: stages.len() + 1,
            start,
            end_excl: self.t_horizon + 1,
            active,
        });
        stages
    }
}

/// Unit-level provenance of a low-communication run: where every single
/// observation was produced and when each agent folded it in.
#[derive(Debug, Clone)]
pub struct ProvenanceLog {
    pub units: UnitStore,
    /// `incorporated[agent][unit]` = round at which the unit entered that
    /// agent's confidence state, if it ever did.
    pub incorporated: Vec<Vec<Option<u32>>>,
}

/// Scalar outcomes of one seeded simulation.
#[derive(Debug, Clone, Serialize)]
pub struct SeedMetrics {
    pub seed: u64,
    /// Final cumulative pseudo-regret per agent.
    pub per_agent_regret: Vec<f64>,
    pub max_regret: f64,
    pub total_msg_bits: u64,
    /// Largest single message, in bits.
    pub max_message_bits: u64,
    /// Largest per-round total over all agents.
    pub max_round_bits: u64,
    pub mean_round_bits: f64,
    /// Own elimination-step removals summed over agents.
    pub own_eliminations: u32,
    pub final_active_min: usize,
    pub final_active_max: usize,
    /// Times the never-empty failsafe refused a remote elimination.
    pub empty_active_skips: u64,
}

/// One seed's full output.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub metrics: SeedMetrics,
    pub trace: Option<RunTrace>,
    pub provenance: Option<ProvenanceLog>,
}

/// Seed-aggregated outcomes of a config.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub per_seed: Vec<SeedMetrics>,
    /// Mean over seeds of max-over-agents final regret.
    pub mean_max_regret: f64,
    /// Standard error (sample sd / sqrt(seeds)) of the same.
    pub stderr_max_regret: f64,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: Metrics,
    pub runs: Vec<SeedRun>,
}

/// Mean and standard error (ddof = 1) of a sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn aggregate(per_seed: Vec<SeedMetrics>) -> Metrics {
    let maxes: Vec<f64> = per_seed.iter().map(|s| s.max_regret).collect();
    let (mean, stderr) = mean_stderr(&maxes);
    Metrics { per_seed, mean_max_regret: mean, stderr_max_regret: stderr }
}

/// Environment shared by every seed of a config.
pub(crate) struct Prepared {
    pub graph: CommGraph,
    pub tree: Option<SpanningTree>,
    pub instance: BanditInstance,
    pub iota: f64,
    pub sus_act_delay: u32,
}

impl SimConfig {
    /// Validates the config and builds the seed-independent environment.
    pub(crate) fn prepare(&self) -> Result<Prepared, SimError> {
        if self.t_horizon == 0 {
            return Err(SimError::HorizonZero);
        }
        if self.seeds.is_empty() {
            return Err(SimError::NoSeeds);
        }
        if self.instance.means.len() > u16::MAX as usize {
            return Err(SimError::TooManyActions { a: self.instance.means.len() });
        }
        let instance = make_instance(self.instance.means.clone(), self.instance.kind)?;
        let mut graph_rng = graph_stream(self.topology.graph_seed);
        let graph = generate(self.topology.kind, self.topology.m, &mut graph_rng)?;
        if self.policy == PolicyKind::SingleSe && graph.m != 1 {
            return Err(SimError::SingleAgentOnly { m: graph.m });
        }
        if self.fast_path && self.policy != PolicyKind::CoopSe {
            return Err(SimError::FastPathOnlyCoopSe { policy: self.policy });
        }
        let sus_act_delay = graph.diameter().max(1);
        if self.policy == PolicyKind::SusAct && sus_act_delay > self.t_horizon {
            return Err(SimError::DelayExceedsHorizon {
                delay: sus_act_delay,
                t_horizon: self.t_horizon,
            });
        }
        let tree = match self.policy {
            PolicyKind::Restricted | PolicyKind::LowComm => {
                Some(build_spanning_tree(&graph, 0))
            }
            _ => None,
        };
        let iota =
            crate::bandit::iota(graph.m, self.t_horizon as usize, instance.num_actions());
        Ok(Prepared { graph, tree, instance, iota, sus_act_delay })
    }

    /// The graph this config runs on, and the spanning tree for the
    /// tree-based policies. Exactly what a run uses, so checkers that need
    /// distances can reconstruct them.
    pub fn graph_and_tree(&self) -> Result<(CommGraph, Option<SpanningTree>), SimError> {
        let env = self.prepare()?;
        Ok((env.graph, env.tree))
    }
}

fn run_seed(cfg: &SimConfig, env: &Prepared, seed: u64) -> SeedRun {
    match cfg.policy {
        PolicyKind::CoopSe if cfg.fast_path => fast::run_seed(cfg, env, seed),
        PolicyKind::CoopSe => engine::coop_se(cfg, env, seed),
        PolicyKind::SusAct => engine::sus_act(cfg, env, seed),
        PolicyKind::Restricted => engine::restricted(cfg, env, seed),
        PolicyKind::LowComm => engine::low_comm(cfg, env, seed),
        PolicyKind::SingleSe => engine::single_se(cfg, env, seed),
    }
}

/// Runs the config once per seed; deterministic given the config.
pub fn run(cfg: &SimConfig) -> Result<RunResult, SimError> {
    let env = cfg.prepare()?;
    let runs: Vec<SeedRun> = cfg.seeds.iter().map(|&s| run_seed(cfg, &env, s)).collect();
    let metrics = aggregate(runs.iter().map(|r| r.metrics.clone()).collect());
    Ok(RunResult { metrics, runs })
}

/// Runs the flooding policy through the message-free fast path regardless of
/// the config's `fast_path` flag. Identical output to [`run`] by the
/// information-propagation identity: agent `u` holds exactly the plays
/// `(w, k)` with `k + dist(w, u) <= t` (own plays one round after the fact).
pub fn run_fast_coop_se(cfg: &SimConfig) -> Result<RunResult, SimError> {
    if cfg.policy != PolicyKind::CoopSe {
        return Err(SimError::FastPathOnlyCoopSe { policy: cfg.policy });
    }
    let env = cfg.prepare()?;
    let runs: Vec<SeedRun> = cfg.seeds.iter().map(|&s| fast::run_seed(cfg, &env, s)).collect();
    let metrics = aggregate(runs.iter().map(|r| r.metrics.clone()).collect());
    Ok(RunResult { metrics, runs })
}

/// Outcome of one sweep cell: the config it ran and its result. Errors stay
/// in their cell; the rest of the sweep proceeds.
pub struct SweepCell {
    pub config: SimConfig,
    pub result: Result<Metrics, SimError>,
}

/// Runs each config over its seed list, in parallel across configs when
/// `jobs` allows. Cells come back in input order.
pub fn sweep(configs: &[SimConfig], jobs: Option<usize>) -> Vec<SweepCell> {
    let work = || {
        configs
            .par_iter()
            .map(|cfg| SweepCell {
                config: cfg.clone(),
                result: run(cfg).map(|r| r.metrics),
            })
            .collect()
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool construction")
            .install(work),
        None => work(),
    }
}
