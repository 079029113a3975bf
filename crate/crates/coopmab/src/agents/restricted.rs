//! Tree-restricted successive elimination with bounded message size: agents
//! communicate only along spanning-tree edges and send each neighbor one
//! aggregated reward event per active action per round, plus elimination
//! notices. Every message therefore fits in at most one event per action.
//!
//! Per-neighbor aggregates accumulate everything learned since the last send
//! to that neighbor, excluding what arrived *from* that neighbor, so no
//! observation is ever double-counted. On a tree this reproduces the
//! flooding protocol's statistics exactly, hop for hop.

use crate::agents::{
    apply_remote_elim, elim_step, select_action, ActiveSet, ConfidenceState, ElimOutcome,
};
use crate::events::Event;

/// Output of one agent-round.
#[derive(Debug, Clone)]
pub struct RestrictedRound {
    pub action: u32,
    pub reward: f64,
    /// One event list per tree neighbor, in `neighbors()` order.
    pub outboxes: Vec<(u32, Vec<Event>)>,
    pub eliminated: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct RestrictedAgent {
    pub id: u32,
    pub active: ActiveSet,
    pub conf: ConfidenceState,
    iota: f64,
    neighbors: Vec<u32>, // ascending tree neighbors
    /// Per-neighbor, per-action observation counts and reward sums pending
    /// for the next message to that neighbor.
    agg_n: Vec<Vec<u64>>,
    agg_r: Vec<Vec<f64>>,
    /// Per-action gate: an elimination is forwarded at most once.
    elim_known: Vec<bool>,
    /// Own play from the previous round, folded in at the next round.
    pending_own: Option<(u32, f64)>,
    pub empty_active_skips: u64,
}

impl RestrictedAgent {
    pub fn new(id: u32, num_actions: usize, iota: f64, mut neighbors: Vec<u32>) -> Self {
        neighbors.sort_unstable();
        let deg = neighbors.len();
        RestrictedAgent {
            id,
            active: ActiveSet::full(num_actions),
            conf: ConfidenceState::new(num_actions),
            iota,
            neighbors,
            agg_n: vec![vec![0; num_actions]; deg],
            agg_r: vec![vec![0.0; num_actions]; deg],
            elim_known: vec![false; num_actions],
            pending_own: None,
            empty_active_skips: 0,
        }
    }

    pub fn neighbors(&self) -> &[u32] {
        &self.neighbors
    }

    /// Runs round `t`. Inbox entries are tagged with the tree neighbor they
    /// came from, which is excluded when forwarding.
    pub fn round(
        &mut self,
        t: u32,
        inbox: &[(u32, Event)],
        draw: f64,
        sample: impl FnOnce(u32) -> f64,
    ) -> RestrictedRound {
        let deg = self.neighbors.len();
        let mut elim_queue: Vec<Vec<u32>> = vec![Vec::new(); deg];

        // 1. Eliminations first; a newly learned one is queued for every
        //    neighbor except its sender.
        for &(from, event) in inbox {
            if let Event::Elim { a, .. } = event {
                if !self.elim_known[a as usize] {
                    self.elim_known[a as usize] = true;
                    for (yi, &y) in self.neighbors.iter().enumerate() {
                        if y != from {
                            elim_queue[yi].push(a);
                        }
                    }
                }
                if apply_remote_elim(&mut self.active, a) == ElimOutcome::SkippedWouldEmpty {
                    self.empty_active_skips += 1;
                }
            }
        }

        // 2. Own play from the previous round.
        if let Some((a, r)) = self.pending_own.take() {
            if self.active.contains(a) {
                self.conf.observe(a, r);
            }
        }

        // 3. Aggregated rewards: count them and pass them on, except back
        //    toward their sender. Aggregates for eliminated actions drop.
        for &(from, event) in inbox {
            if let Event::RwdMany { a, r, n, .. } = event {
                if self.active.contains(a) {
                    self.conf.observe_many(a, n as u64, r);
                    for (yi, &y) in self.neighbors.iter().enumerate() {
                        if y != from {
                            self.agg_n[yi][a as usize] += n as u64;
                            self.agg_r[yi][a as usize] += r;
                        }
                    }
                }
            }
        }

        // 4. Own elimination step; announce to every neighbor.
        let eliminated = elim_step(&self.active, &self.conf, self.iota);
        for &a in &eliminated {
            self.active.remove(a);
            self.elim_known[a as usize] = true;
            for q in &mut elim_queue {
                q.push(a);
            }
        }

        // 5. Play. The reward feeds this agent's own state next round but
        //    enters outgoing aggregates immediately.
        let action = select_action(&self.active, draw);
        let reward = sample(action);
        self.pending_own = Some((action, reward));
        for yi in 0..deg {
            self.agg_n[yi][action as usize] += 1;
            self.agg_r[yi][action as usize] += reward;
        }

        // 6. Per-neighbor messages: queued eliminations, then one aggregate
        //    per active action (zero counts included), then reset.
        let mut outboxes = Vec::with_capacity(deg);
        for (yi, &y) in self.neighbors.iter().enumerate() {
            let mut events: Vec<Event> =
                elim_queue[yi].iter().map(|&a| Event::Elim { t, id: self.id, a }).collect();
            for a in self.active.iter() {
                events.push(Event::RwdMany {
                    t,
                    id: self.id,
                    a,
                    r: self.agg_r[yi][a as usize],
                    n: self.agg_n[yi][a as usize] as u32,
                });
            }
            self.agg_n[yi].fill(0);
            self.agg_r[yi].fill(0.0);
            outboxes.push((y, events));
        }

        RestrictedRound { action, reward, outboxes, eliminated }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IOTA: f64 = 8.0;

    #[test]
    fn first_round_sends_one_aggregate_per_action() {
        let mut agent = RestrictedAgent::new(1, 4, IOTA, vec![0, 2]);
        let out = agent.round(1, &[], 0.0, |_| 1.0);
        assert_eq!(out.action, 0);
        for (_, events) in &out.outboxes {
            assert_eq!(events.len(), 4);
            // The just-played action already appears with count 1.
            assert!(events.contains(&Event::RwdMany { t: 1, id: 1, a: 0, r: 1.0, n: 1 }));
            assert!(events.contains(&Event::RwdMany { t: 1, id: 1, a: 3, r: 0.0, n: 0 }));
        }
    }

    #[test]
    fn aggregates_reset_after_sending() {
        let mut agent = RestrictedAgent::new(0, 2, IOTA, vec![1]);
        agent.round(1, &[], 0.0, |_| 1.0);
        let out = agent.round(2, &[], 0.9, |_| 0.5);
        // Round 2 plays action 1; action 0's aggregate was flushed at round 1.
        let events = &out.outboxes[0].1;
        assert!(events.contains(&Event::RwdMany { t: 2, id: 0, a: 0, r: 0.0, n: 0 }));
        assert!(events.contains(&Event::RwdMany { t: 2, id: 0, a: 1, r: 0.5, n: 1 }));
    }

    #[test]
    fn incoming_aggregates_are_forwarded_except_to_their_sender() {
        let mut agent = RestrictedAgent::new(1, 2, IOTA, vec![0, 2]);
        let incoming = (0u32, Event::RwdMany { t: 1, id: 0, a: 1, r: 3.0, n: 4 });
        let out = agent.round(2, &[incoming], 0.0, |_| 0.0);
        assert_eq!(agent.conf.n[1], 4);
        let to_0 = &out.outboxes[0].1;
        let to_2 = &out.outboxes[1].1;
        assert!(to_0.contains(&Event::RwdMany { t: 2, id: 1, a: 1, r: 0.0, n: 0 }),
            "nothing echoes back to the sender");
        assert!(to_2.contains(&Event::RwdMany { t: 2, id: 1, a: 1, r: 3.0, n: 4 }));
    }

    #[test]
    fn own_play_counts_for_self_one_round_later() {
        let mut agent = RestrictedAgent::new(0, 2, IOTA, vec![]);
        agent.round(1, &[], 0.0, |_| 1.0);
        assert_eq!(agent.conf.n, vec![0, 0]);
        agent.round(2, &[], 0.9, |_| 0.0);
        assert_eq!(agent.conf.n, vec![1, 0]);
    }

    #[test]
    fn received_elimination_is_applied_and_forwarded_once() {
        let mut agent = RestrictedAgent::new(1, 3, IOTA, vec![0, 2]);
        let elim = (0u32, Event::Elim { t: 3, id: 0, a: 2 });
        let out = agent.round(4, &[elim], 0.0, |_| 0.0);
        assert!(!agent.active.contains(2));
        let to_0 = &out.outboxes[0].1;
        let to_2 = &out.outboxes[1].1;
        assert!(!to_0.iter().any(|e| matches!(e, Event::Elim { .. })));
        assert!(to_2.contains(&Event::Elim { t: 4, id: 1, a: 2 }));
        // No aggregate is sent for the eliminated action.
        assert_eq!(to_2.len(), 3, "one elim plus two active-action aggregates");

        // A duplicate arriving later (e.g. from the other side) is not
        // forwarded again.
        let dup = (2u32, Event::Elim { t: 4, id: 2, a: 2 });
        let out2 = agent.round(5, &[dup], 0.0, |_| 0.0);
        assert!(out2
            .outboxes
            .iter()
            .all(|(_, evs)| !evs.iter().any(|e| matches!(e, Event::Elim { .. }))));
    }

    #[test]
    fn elimination_applies_before_aggregates_in_the_same_inbox() {
        let mut agent = RestrictedAgent::new(1, 2, IOTA, vec![0, 2]);
        let inbox = [
            (0u32, Event::RwdMany { t: 2, id: 0, a: 1, r: 5.0, n: 5 }),
            (2u32, Event::Elim { t: 2, id: 2, a: 1 }),
        ];
        agent.round(3, &inbox, 0.0, |_| 0.0);
        assert_eq!(agent.conf.n[1], 0, "aggregate for the freshly eliminated action drops");
    }

    #[test]
    fn own_elimination_is_announced_to_all_neighbors() {
        let mut agent = RestrictedAgent::new(1, 2, IOTA, vec![0, 2]);
        let mut inbox = Vec::new();
        // Lopsided pooled stats so the elimination step fires.
        inbox.push((0u32, Event::RwdMany { t: 1, id: 0, a: 0, r: 400.0, n: 400 }));
        inbox.push((0u32, Event::RwdMany { t: 1, id: 0, a: 1, r: 0.0, n: 400 }));
        let out = agent.round(2, &inbox, 0.0, |_| 1.0);
        assert_eq!(out.eliminated, vec![1]);
        for (_, events) in &out.outboxes {
            assert!(events.contains(&Event::Elim { t: 2, id: 1, a: 1 }));
        }
    }
}
