//! Successive elimination for a lone agent: exactly the flooding policy with
//! nobody to talk to. Kept as its own policy so single-agent baselines are
//! explicit in configuration and output.

use crate::agents::coop_se::CoopSeAgent;
use crate::agents::{ActiveSet, ConfidenceState};

/// Output of one round.
#[derive(Debug, Clone)]
pub struct SingleSeRound {
    pub action: u32,
    pub reward: f64,
    pub eliminated: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct SingleSeAgent {
    inner: CoopSeAgent,
}

impl SingleSeAgent {
    pub fn new(num_actions: usize, iota: f64) -> Self {
        SingleSeAgent { inner: CoopSeAgent::new(0, num_actions, iota) }
    }

    pub fn active(&self) -> &ActiveSet {
        &self.inner.active
    }

    pub fn conf(&self) -> &ConfidenceState {
        &self.inner.conf
    }

    pub fn round(&mut self, t: u32, draw: f64, sample: impl FnOnce(u32) -> f64) -> SingleSeRound {
        let out = self.inner.round(t, &[], draw, sample);
        SingleSeRound { action: out.action, reward: out.reward, eliminated: out.eliminated }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_the_flooding_agent_with_an_empty_inbox() {
        let iota = 8.006367567650246; // ln(3*1*500*2)
        let mut single = SingleSeAgent::new(2, iota);
        let mut coop = CoopSeAgent::new(0, 2, iota);
        let means = [0.9, 0.1];
        for t in 1..=200 {
            let draw = ((t * 37) % 100) as f64 / 100.0;
            let s = single.round(t, draw, |a| means[a as usize]);
            let c = coop.round(t, &[], draw, |a| means[a as usize]);
            assert_eq!(s.action, c.action);
            assert_eq!(s.eliminated, c.eliminated);
        }
        assert_eq!(single.conf(), &coop.conf);
    }

    #[test]
    fn eventually_eliminates_a_clearly_worse_action() {
        let iota = 8.006367567650246; // ln(3000)
        let mut agent = SingleSeAgent::new(2, iota);
        let means = [0.9, 0.1];
        let mut elim_round = None;
        for t in 1..=500 {
            // Alternate deterministically while both actions are active.
            let draw = if t % 2 == 0 { 0.25 } else { 0.75 };
            let out = agent.round(t, draw, |a| means[a as usize]);
            if !out.eliminated.is_empty() {
                elim_round = Some((t, out.eliminated.clone()));
                break;
            }
        }
        let (t, gone) = elim_round.expect("a 0.8 gap must resolve within 500 rounds");
        assert_eq!(gone, vec![1]);
        // Needs width < gap/2 = 0.4: n > 2*iota/0.16 ≈ 100, i.e. ~100 plays
        // per action, reached near round 200.
        assert!(t > 100 && t < 300, "eliminated at {t}");
    }
}
