//! Bandit instances, reward sampling, the confidence log-factor, and
//! per-agent pseudo-regret accounting.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("need at least 2 actions, got {0}")]
    TooFewActions(usize),
    #[error("mean {value} at action {action} is outside [0,1]")]
    MeanOutOfRange { action: usize, value: f64 },
}

/// How rewards are drawn from an action's mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardKind {
    /// 0/1 rewards with P(1) = mean. Keeps aggregated reward sums integral,
    /// which is what makes exact bit accounting possible.
    Bernoulli,
    /// The mean itself, every time.
    Deterministic,
}

/// A stochastic bandit instance: one mean per action, all supported in [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    pub means: Vec<f64>,
    pub kind: RewardKind,
}

impl BanditInstance {
    pub fn num_actions(&self) -> usize {
        self.means.len()
    }

    /// Highest mean reward over actions.
    pub fn optimal_mean(&self) -> f64 {
        self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of an optimal action (lowest index on ties).
    pub fn optimal_action(&self) -> usize {
        let best = self.optimal_mean();
        self.means.iter().position(|&x| x == best).unwrap()
    }

    /// Suboptimality gap of every action: optimal mean minus the action's mean.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.optimal_mean();
        self.means.iter().map(|m| best - m).collect()
    }
}

/// Validates means and builds an instance.
pub fn make_instance(means: Vec<f64>, kind: RewardKind) -> Result<BanditInstance, InstanceError> {
    if means.len() < 2 {
        return Err(InstanceError::TooFewActions(means.len()));
    }
    for (action, &value) in means.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(InstanceError::MeanOutOfRange { action, value });
        }
    }
    Ok(BanditInstance { means, kind })
}

/// Draws one reward for `action`. Bernoulli consumes exactly one uniform draw;
/// deterministic instances consume none.
pub fn sample_reward(instance: &BanditInstance, action: usize, rng: &mut impl Rng) -> f64 {
    let mean = instance.means[action];
    match instance.kind {
        RewardKind::Deterministic => mean,
        RewardKind::Bernoulli => {
            if rng.random::<f64>() < mean {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// The confidence-width log factor: natural log of `3·m·T·A`.
pub fn iota(m: usize, t_horizon: usize, a: usize) -> f64 {
    debug_assert!(m >= 1 && t_horizon >= 1 && a >= 1);
    ((3 * m * t_horizon * a) as f64).ln()
}

/// Shared confidence parameters for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceParams {
    pub iota: f64,
    pub m: usize,
    pub t_horizon: usize,
    pub a: usize,
}

impl ConfidenceParams {
    pub fn new(m: usize, t_horizon: usize, a: usize) -> Self {
        ConfidenceParams { iota: iota(m, t_horizon, a), m, t_horizon, a }
    }
}

/// Per-agent cumulative pseudo-regret. Increments are the true gap of the
/// played action, never the sampled reward, so the ledger is noise-free;
/// averaging over seeds estimates expected regret over algorithm randomness.
#[derive(Debug, Clone)]
pub struct RegretLedger {
    gaps: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RegretLedger {
    pub fn new(instance: &BanditInstance, num_agents: usize) -> Self {
        RegretLedger { gaps: instance.gaps(), cumulative: vec![0.0; num_agents] }
    }

    /// Record that `agent` played `action` this round.
    pub fn record(&mut self, agent: usize, action: usize) {
        self.cumulative[agent] += self.gaps[action];
    }

    pub fn cumulative(&self, agent: usize) -> f64 {
        self.cumulative[agent]
    }

    pub fn all(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn max_over_agents(&self) -> f64 {
        self.cumulative.iter().copied().fold(0.0, f64::max)
    }
}
