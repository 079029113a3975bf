//! The elimination policies and their shared building blocks: per-action
//! confidence state, the active-action set, the elimination rule, and the
//! uniform selection rule.
//!
//! All policies share the same structure per round: ingest events (applying
//! eliminations before rewards, and discarding rewards of actions already
//! eliminated), run the elimination step, play, then emit messages. An
//! agent's own reward becomes usable at the *next* round, passing through the
//! same guard as remote rewards.

pub mod coop_se;
pub mod low_comm;
pub mod restricted;
pub mod single_se;
pub mod sus_act;

pub use coop_se::{CoopSeAgent, CoopSeRound};
pub use low_comm::{LowCommAgent, LowCommRound, UnitStore};
pub use restricted::{RestrictedAgent, RestrictedRound};
pub use single_se::{SingleSeAgent, SingleSeRound};
pub use sus_act::{SusActAgent, SusActRound};

/// Per-action observation counts and reward sums, with the derived
/// confidence interval: width λ(a) = sqrt(2ι / (n(a) ∨ 1)).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceState {
    pub n: Vec<u64>,
    pub r: Vec<f64>,
}

impl ConfidenceState {
    pub fn new(num_actions: usize) -> Self {
        ConfidenceState { n: vec![0; num_actions], r: vec![0.0; num_actions] }
    }

    pub fn observe(&mut self, action: u32, reward: f64) {
        self.n[action as usize] += 1;
        self.r[action as usize] += reward;
    }

    pub fn observe_many(&mut self, action: u32, count: u64, reward_sum: f64) {
        self.n[action as usize] += count;
        self.r[action as usize] += reward_sum;
    }

    pub fn mu_hat(&self, action: u32) -> f64 {
        self.r[action as usize] / (self.n[action as usize].max(1)) as f64
    }

    pub fn width(&self, action: u32, iota: f64) -> f64 {
        (2.0 * iota / (self.n[action as usize].max(1)) as f64).sqrt()
    }

    pub fn ucb(&self, action: u32, iota: f64) -> f64 {
        self.mu_hat(action) + self.width(action, iota)
    }

    pub fn lcb(&self, action: u32, iota: f64) -> f64 {
        self.mu_hat(action) - self.width(action, iota)
    }
}

/// The set of not-yet-eliminated actions; only ever shrinks.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    alive: Vec<bool>,
    items: Vec<u32>, // ascending
}

impl ActiveSet {
    pub fn full(num_actions: usize) -> Self {
        ActiveSet { alive: vec![true; num_actions], items: (0..num_actions as u32).collect() }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, action: u32) -> bool {
        self.alive[action as usize]
    }

    /// k-th smallest active action.
    pub fn kth(&self, k: usize) -> u32 {
        self.items[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.items.iter().copied()
    }

    pub fn as_vec(&self) -> Vec<u32> {
        self.items.clone()
    }

    /// Removes `action`; returns false if it was already gone.
    pub fn remove(&mut self, action: u32) -> bool {
        if !self.alive[action as usize] {
            return false;
        }
        self.alive[action as usize] = false;
        let idx = self.items.binary_search(&action).expect("alive implies listed");
        self.items.remove(idx);
        true
    }

    /// Packed bitmask snapshot, one bit per action, word-aligned to 64.
    pub fn mask(&self) -> Vec<u64> {
        let words = self.alive.len().div_ceil(64);
        let mut mask = vec![0u64; words];
        for &a in &self.items {
            mask[(a / 64) as usize] |= 1u64 << (a % 64);
        }
        mask
    }
}

/// Outcome of applying a remote elimination with the never-empty failsafe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElimOutcome {
    Removed,
    AlreadyGone,
    /// Removal refused: it would have emptied the active set. Counted by the
    /// simulator as a statistical (good-event) violation.
    SkippedWouldEmpty,
}

/// Applies an elimination received from elsewhere. The agent's own
/// elimination step can never empty the set (the action with the highest LCB
/// never eliminates itself), so only remote eliminations need the failsafe.
pub fn apply_remote_elim(active: &mut ActiveSet, action: u32) -> ElimOutcome {
    if !active.contains(action) {
        ElimOutcome::AlreadyGone
    } else if active.len() == 1 {
        ElimOutcome::SkippedWouldEmpty
    } else {
        active.remove(action);
        ElimOutcome::Removed
    }
}

/// The elimination rule: drop every active action whose UCB lies strictly
/// below some active action's LCB. State is read as-is; no mid-step updates.
pub fn elim_step(active: &ActiveSet, conf: &ConfidenceState, iota: f64) -> Vec<u32> {
    let max_lcb = active.iter().map(|a| conf.lcb(a, iota)).fold(f64::NEG_INFINITY, f64::max);
    active.iter().filter(|&a| conf.ucb(a, iota) < max_lcb).collect()
}

/// Uniform selection: one pre-drawn uniform `u` in [0,1) indexes into the
/// ascending active set. The index is clamped because the f64 product can
/// round up to `len` when `u` is within one ulp of 1.
pub fn select_action(active: &ActiveSet, u: f64) -> u32 {
    assert!(!active.is_empty(), "cannot select from an empty active set");
    let len = active.len();
    let idx = ((u * len as f64).floor() as usize).min(len - 1);
    active.kth(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conf_with(n: &[u64], r: &[f64]) -> ConfidenceState {
        ConfidenceState { n: n.to_vec(), r: r.to_vec() }
    }

    #[test]
    fn confidence_bounds_use_n_or_one() {
        let conf = conf_with(&[0, 100], &[0.0, 90.0]);
        let iota = 4.787491742782046; // ln(120)
        assert_eq!(conf.mu_hat(0), 0.0);
        assert!((conf.width(0, iota) - 3.094347020869523).abs() < 1e-12);
        assert!((conf.width(1, iota) - 0.3094347020869523).abs() < 1e-12);
        assert!(conf.ucb(1, iota) > conf.lcb(1, iota));
    }

    #[test]
    fn elim_step_frozen_example() {
        // n=(100,100), mu_hat=(0.9,0.1), iota=ln(120): lambda ≈ 0.30943 each,
        // UCB(1) ≈ 0.40943 < LCB(0) ≈ 0.59057, so action 1 goes.
        let active = ActiveSet::full(2);
        let conf = conf_with(&[100, 100], &[90.0, 10.0]);
        let iota = 4.787491742782046;
        assert!((conf.ucb(1, iota) - 0.4094347020869523).abs() < 1e-12);
        assert!((conf.lcb(0, iota) - 0.5905652979130478).abs() < 1e-12);
        assert_eq!(elim_step(&active, &conf, iota), vec![1]);
    }

    #[test]
    fn elim_step_zero_samples_eliminates_nothing() {
        let active = ActiveSet::full(3);
        let conf = conf_with(&[0, 0, 0], &[0.0, 0.0, 0.0]);
        assert!(elim_step(&active, &conf, 4.787491742782046).is_empty());
    }

    #[test]
    fn elim_step_symmetric_stats_eliminate_nothing() {
        let active = ActiveSet::full(3);
        let conf = conf_with(&[50, 50, 50], &[25.0, 25.0, 25.0]);
        assert!(elim_step(&active, &conf, 10.0).is_empty());
    }

    #[test]
    fn elim_step_never_eliminates_the_max_lcb_action() {
        // Extreme separation: the winner must survive.
        let active = ActiveSet::full(2);
        let conf = conf_with(&[10_000, 10_000], &[10_000.0, 0.0]);
        let out = elim_step(&active, &conf, 2.0);
        assert_eq!(out, vec![1]);
    }

    #[test]
    fn elim_step_ignores_inactive_actions() {
        let mut active = ActiveSet::full(3);
        active.remove(0);
        // Action 0 has crushing stats but is inactive: no comparisons use it.
        let conf = conf_with(&[10_000, 5, 5], &[10_000.0, 2.0, 2.0]);
        assert!(elim_step(&active, &conf, 2.0).is_empty());
    }

    #[test]
    fn select_action_examples() {
        let single = {
            let mut s = ActiveSet::full(4);
            s.remove(0);
            s.remove(1);
            s.remove(2);
            s
        };
        assert_eq!(select_action(&single, 0.0), 3);
        assert_eq!(select_action(&single, 0.999), 3);

        let four = ActiveSet::full(4);
        assert_eq!(select_action(&four, 0.6), 2, "floor(0.6*4)=2");

        let mut two = ActiveSet::full(10);
        for a in [0, 1, 2, 3, 4, 6, 7, 8] {
            two.remove(a);
        }
        assert_eq!(two.as_vec(), vec![5, 9]);
        assert_eq!(select_action(&two, 0.49), 5, "floor(0.98)=0");
        assert_eq!(select_action(&two, 0.5), 9);
    }

    #[test]
    fn select_action_clamps_at_the_top() {
        let active = ActiveSet::full(441);
        let u = 1.0 - f64::EPSILON / 2.0; // largest f64 below 1
        let a = select_action(&active, u);
        assert_eq!(a, 440);
    }

    #[test]
    fn active_set_shrinks_and_reports_members() {
        let mut s = ActiveSet::full(5);
        assert_eq!(s.len(), 5);
        assert!(s.remove(2));
        assert!(!s.remove(2));
        assert!(!s.contains(2));
        assert_eq!(s.as_vec(), vec![0, 1, 3, 4]);
        assert_eq!(s.kth(2), 3);
        assert_eq!(s.mask(), vec![0b11011]);
    }

    #[test]
    fn remote_elim_failsafe_keeps_last_action() {
        let mut s = ActiveSet::full(2);
        assert_eq!(apply_remote_elim(&mut s, 0), ElimOutcome::Removed);
        assert_eq!(apply_remote_elim(&mut s, 0), ElimOutcome::AlreadyGone);
        assert_eq!(apply_remote_elim(&mut s, 1), ElimOutcome::SkippedWouldEmpty);
        assert_eq!(s.as_vec(), vec![1]);
    }
}
