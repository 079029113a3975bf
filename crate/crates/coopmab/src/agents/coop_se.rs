//! Flooding successive elimination: every agent floods reward and
//! elimination events over the communication graph, deduplicates by event
//! key, and runs the shared elimination step on the pooled counts.

use std::collections::HashSet;

use crate::agents::{
    apply_remote_elim, elim_step, select_action, ActiveSet, ConfidenceState, ElimOutcome,
};
use crate::events::{Event, EventKey};

/// Output of one agent-round.
#[derive(Debug, Clone)]
pub struct CoopSeRound {
    pub action: u32,
    pub reward: f64,
    /// Fresh relayed events plus this round's own events; the same set goes
    /// to every neighbor.
    pub outbox: Vec<Event>,
    /// Actions this agent's own elimination step removed this round.
    pub eliminated: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct CoopSeAgent {
    pub id: u32,
    pub active: ActiveSet,
    pub conf: ConfidenceState,
    iota: f64,
    seen: HashSet<EventKey>,
    /// Own events from the previous round, ingested at the start of this one.
    carry: Vec<Event>,
    pub empty_active_skips: u64,
}

impl CoopSeAgent {
    pub fn new(id: u32, num_actions: usize, iota: f64) -> Self {
        CoopSeAgent {
            id,
            active: ActiveSet::full(num_actions),
            conf: ConfidenceState::new(num_actions),
            iota,
            seen: HashSet::new(),
            carry: Vec::new(),
            empty_active_skips: 0,
        }
    }

    /// Runs round `t`: ingest carried-over own events and the inbox, run the
    /// elimination step, play once, and build the outbox. `draw` is this
    /// round's uniform selection variate; `sample` produces the reward for
    /// the chosen action.
    pub fn round(
        &mut self,
        t: u32,
        inbox: &[Event],
        draw: f64,
        sample: impl FnOnce(u32) -> f64,
    ) -> CoopSeRound {
        // Partition the fresh events: eliminations apply before rewards so a
        // reward for a just-eliminated action is dropped no matter how the
        // two events happened to be ordered in transit.
        let mut fresh_elims: Vec<u32> = Vec::new();
        let mut fresh_rwds: Vec<(u32, f64)> = Vec::new();
        let mut relay: Vec<Event> = Vec::new();
        let carried = std::mem::take(&mut self.carry);
        for (from_inbox, &event) in carried
            .iter()
            .map(|e| (false, e))
            .chain(inbox.iter().map(|e| (true, e)))
        {
            if !self.seen.insert(event.key()) {
                continue;
            }
            match event {
                Event::Elim { a, .. } => fresh_elims.push(a),
                Event::Rwd { a, r, .. } => fresh_rwds.push((a, r)),
                Event::RwdMany { .. } => unreachable!("flooding uses single-reward events"),
            }
            if from_inbox {
                relay.push(event);
            }
        }
        for a in fresh_elims {
            if apply_remote_elim(&mut self.active, a) == ElimOutcome::SkippedWouldEmpty {
                self.empty_active_skips += 1;
            }
        }
        for (a, r) in fresh_rwds {
            if self.active.contains(a) {
                self.conf.observe(a, r);
            }
        }

        let eliminated = elim_step(&self.active, &self.conf, self.iota);
        for &a in &eliminated {
            self.active.remove(a);
        }

        let action = select_action(&self.active, draw);
        let reward = sample(action);

        let mut own = Vec::with_capacity(1 + eliminated.len());
        own.push(Event::Rwd { t, id: self.id, a: action, r: reward });
        own.extend(eliminated.iter().map(|&a| Event::Elim { t, id: self.id, a }));

        let mut outbox = own.clone();
        outbox.extend(relay);
        self.carry = own;

        CoopSeRound { action, reward, outbox, eliminated }
    }
}
