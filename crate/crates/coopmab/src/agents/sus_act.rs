//! Delayed-activation successive elimination: reward events flood the graph
//! as usual, but an observation only enters the confidence state once its
//! timestamp is at least `delay` rounds old. By then every agent has received
//! it, so all agents hold identical statistics and play in lockstep. No
//! elimination messages are sent; each agent eliminates locally. Selection is
//! round-robin over the active set rather than uniform.

use std::collections::HashSet;

use crate::agents::{elim_step, ActiveSet, ConfidenceState};
use crate::events::{Event, EventKey};

/// Output of one agent-round.
#[derive(Debug, Clone)]
pub struct SusActRound {
    pub action: u32,
    pub reward: f64,
    /// Fresh relayed events plus this round's own reward event.
    pub outbox: Vec<Event>,
    pub eliminated: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct SusActAgent {
    pub id: u32,
    pub active: ActiveSet,
    /// Suspended statistics: only observations at least `delay` rounds old.
    pub conf: ConfidenceState,
    iota: f64,
    delay: u32,
    seen: HashSet<EventKey>,
    /// Received-but-suspended observations, bucketed by timestamp.
    buckets: Vec<Vec<(u32, f64)>>,
    cursor: Option<u32>,
}

impl SusActAgent {
    /// `delay` is the graph diameter (floored at 1): old enough that every
    /// agent has seen the observation. Buckets are sized for `t_horizon`.
    pub fn new(id: u32, num_actions: usize, iota: f64, delay: u32, t_horizon: u32) -> Self {
        SusActAgent {
            id,
            active: ActiveSet::full(num_actions),
            conf: ConfidenceState::new(num_actions),
            iota,
            delay,
            seen: HashSet::new(),
            buckets: vec![Vec::new(); t_horizon as usize + 1],
            cursor: None,
        }
    }

    /// Next action in ascending cyclic order over the active set.
    fn round_robin(&mut self) -> u32 {
        let action = match self.cursor {
            None => self.active.kth(0),
            Some(prev) => {
                let items = self.active.as_vec();
                match items.iter().find(|&&a| a > prev) {
                    Some(&a) => a,
                    None => items[0],
                }
            }
        };
        self.cursor = Some(action);
        action
    }

    pub fn round(
        &mut self,
        t: u32,
        inbox: &[Event],
        sample: impl FnOnce(u32) -> f64,
    ) -> SusActRound {
        // Bucket fresh arrivals by their play round.
        let mut relay: Vec<Event> = Vec::new();
        for &event in inbox {
            if !self.seen.insert(event.key()) {
                continue;
            }
            match event {
                Event::Rwd { t: play_t, a, r, .. } => {
                    self.buckets[play_t as usize].push((a, r));
                }
                _ => unreachable!("this policy only emits single-reward events"),
            }
            relay.push(event);
        }

        // Activate the bucket that has just become `delay` rounds old. Every
        // agent's play from that round has arrived everywhere by now, so all
        // agents fold in the same multiset.
        if t > self.delay {
            for (a, r) in std::mem::take(&mut self.buckets[(t - self.delay) as usize]) {
                self.conf.observe(a, r);
            }
        }

        let eliminated = elim_step(&self.active, &self.conf, self.iota);
        for &a in &eliminated {
            self.active.remove(a);
        }

        let action = self.round_robin();
        let reward = sample(action);
        let own = Event::Rwd { t, id: self.id, a: action, r: reward };
        self.seen.insert(own.key());
        self.buckets[t as usize].push((action, reward));

        let mut outbox = vec![own];
        outbox.append(&mut relay);

        SusActRound { action, reward, outbox, eliminated }
    }
}
