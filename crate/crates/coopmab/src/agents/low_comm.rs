//! Clocked tree communication: one event per tree edge per direction per
//! round. A depth-`d` agent serves its children the action congruent to
//! `t - d` and its parent the action congruent to `t + d` (mod the number of
//! actions), so information for a fixed action moves one hop per round along
//! its direction of travel and waits at most one full clock cycle at its
//! source and at the turn-around ancestor.
//!
//! Reward aggregates here are per-neighbor *and per-action*, flushed only
//! when that action's slot comes up; unlike the every-round variant they
//! persist across rounds. A pending elimination notice for the slot's action
//! preempts the aggregate (which stays put for a later slot).
//!
//! Each single observation is tracked as a provenance *unit* (see
//! [`UnitStore`]) so a simulation can audit, per agent, when the observation
//! entered that agent's confidence state. Units are simulator metadata and
//! occupy no message bits.

use crate::agents::{
    apply_remote_elim, elim_step, select_action, ActiveSet, ConfidenceState, ElimOutcome,
};
use crate::events::Event;

/// Run-global registry of single observations: unit `u` was produced by
/// `creator[u]` playing `action[u]` at `round[u]`.
#[derive(Debug, Clone, Default)]
pub struct UnitStore {
    pub creator: Vec<u32>,
    pub round: Vec<u32>,
    pub action: Vec<u32>,
}

impl UnitStore {
    pub fn create(&mut self, creator: u32, round: u32, action: u32) -> u32 {
        let id = self.creator.len() as u32;
        self.creator.push(creator);
        self.round.push(round);
        self.action.push(action);
        id
    }

    pub fn len(&self) -> usize {
        self.creator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.creator.is_empty()
    }
}

/// Output of one agent-round.
#[derive(Debug, Clone)]
pub struct LowCommRound {
    pub action: u32,
    pub reward: f64,
    /// Exactly one event per scheduled neighbor: all children (if any), then
    /// the parent (unless root). Reward events carry their provenance units.
    pub outboxes: Vec<(u32, Event, Vec<u32>)>,
    pub eliminated: Vec<u32>,
    /// Units whose observation entered this agent's confidence state.
    pub incorporated: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct LowCommAgent {
    pub id: u32,
    pub active: ActiveSet,
    pub conf: ConfidenceState,
    iota: f64,
    num_actions: usize,
    depth: u32,
    parent: Option<u32>,
    children: Vec<u32>,
    neighbors: Vec<u32>, // ascending: children and parent together
    agg_n: Vec<Vec<u64>>,
    agg_r: Vec<Vec<f64>>,
    agg_units: Vec<Vec<Vec<u32>>>,
    pending_elim: Vec<Vec<bool>>,
    elim_known: Vec<bool>,
    pending_own: Option<(u32, f64, u32)>,
    pub empty_active_skips: u64,
}

impl LowCommAgent {
    pub fn new(
        id: u32,
        num_actions: usize,
        iota: f64,
        depth: u32,
        parent: Option<u32>,
        children: Vec<u32>,
    ) -> Self {
        let mut neighbors: Vec<u32> = children.iter().copied().chain(parent).collect();
        neighbors.sort_unstable();
        let deg = neighbors.len();
        LowCommAgent {
            id,
            active: ActiveSet::full(num_actions),
            conf: ConfidenceState::new(num_actions),
            iota,
            num_actions,
            depth,
            parent,
            children,
            neighbors,
            agg_n: vec![vec![0; num_actions]; deg],
            agg_r: vec![vec![0.0; num_actions]; deg],
            agg_units: vec![vec![Vec::new(); num_actions]; deg],
            pending_elim: vec![vec![false; num_actions]; deg],
            elim_known: vec![false; num_actions],
            pending_own: None,
            empty_active_skips: 0,
        }
    }

    pub fn neighbors(&self) -> &[u32] {
        &self.neighbors
    }

    /// Action slot served toward children at round `t`.
    pub fn child_slot(&self, t: u32) -> u32 {
        (t as i64 - self.depth as i64).rem_euclid(self.num_actions as i64) as u32
    }

    /// Action slot served toward the parent at round `t`.
    pub fn parent_slot(&self, t: u32) -> u32 {
        ((t as u64 + self.depth as u64) % self.num_actions as u64) as u32
    }

    fn neighbor_index(&self, y: u32) -> usize {
        self.neighbors.binary_search(&y).expect("scheduled neighbor is a tree neighbor")
    }

    /// Builds the single event owed to neighbor `y` for action slot `a`.
    fn send_one(&mut self, t: u32, y: u32, a: u32) -> (u32, Event, Vec<u32>) {
        let yi = self.neighbor_index(y);
        if self.pending_elim[yi][a as usize] {
            self.pending_elim[yi][a as usize] = false;
            // The reward aggregate for `a` stays buffered; a later slot may
            // still flush it.
            (y, Event::Elim { t, id: self.id, a }, Vec::new())
        } else {
            let n = self.agg_n[yi][a as usize];
            let r = self.agg_r[yi][a as usize];
            let units = std::mem::take(&mut self.agg_units[yi][a as usize]);
            self.agg_n[yi][a as usize] = 0;
            self.agg_r[yi][a as usize] = 0.0;
            (y, Event::RwdMany { t, id: self.id, a, r, n: n as u32 }, units)
        }
    }

    /// Runs round `t`. Inbox entries carry the sending neighbor and, for
    /// reward events, their provenance units.
    pub fn round(
        &mut self,
        t: u32,
        inbox: &[(u32, Event, Vec<u32>)],
        draw: f64,
        sample: impl FnOnce(u32) -> f64,
        units: &mut UnitStore,
    ) -> LowCommRound {
        let mut incorporated = Vec::new();

        // 1. Eliminations first; newly learned ones become pending notices
        //    for every neighbor except the sender.
        for (from, event, _) in inbox {
            if let Event::Elim { a, .. } = *event {
                if !self.elim_known[a as usize] {
                    self.elim_known[a as usize] = true;
                    for (yi, &y) in self.neighbors.iter().enumerate() {
                        if y != *from {
                            self.pending_elim[yi][a as usize] = true;
                        }
                    }
                }
                if apply_remote_elim(&mut self.active, a) == ElimOutcome::SkippedWouldEmpty {
                    self.empty_active_skips += 1;
                }
            }
        }

        // 2. Own play from the previous round.
        if let Some((a, r, unit)) = self.pending_own.take() {
            if self.active.contains(a) {
                self.conf.observe(a, r);
                incorporated.push(unit);
            }
        }

        // 3. Reward aggregates, buffered onward except toward their sender.
        for (from, event, event_units) in inbox {
            if let Event::RwdMany { a, r, n, .. } = *event {
                if self.active.contains(a) {
                    self.conf.observe_many(a, n as u64, r);
                    incorporated.extend_from_slice(event_units);
                    for (yi, &y) in self.neighbors.iter().enumerate() {
                        if y != *from {
                            self.agg_n[yi][a as usize] += n as u64;
                            self.agg_r[yi][a as usize] += r;
                            self.agg_units[yi][a as usize].extend_from_slice(event_units);
                        }
                    }
                }
            }
        }

        // 4. Own elimination step; notices pend for every neighbor.
        let eliminated = elim_step(&self.active, &self.conf, self.iota);
        for &a in &eliminated {
            self.active.remove(a);
            self.elim_known[a as usize] = true;
            for p in &mut self.pending_elim {
                p[a as usize] = true;
            }
        }

        // 5. Play; the new unit enters every neighbor aggregate immediately
        //    and this agent's own state next round.
        let action = select_action(&self.active, draw);
        let reward = sample(action);
        let unit = units.create(self.id, t, action);
        self.pending_own = Some((action, reward, unit));
        for yi in 0..self.neighbors.len() {
            self.agg_n[yi][action as usize] += 1;
            self.agg_r[yi][action as usize] += reward;
            self.agg_units[yi][action as usize].push(unit);
        }

        // 6. Clocked sends: one event per child on the child slot, one to the
        //    parent on the parent slot. The root only serves its children.
        let child_slot = self.child_slot(t);
        let parent_slot = self.parent_slot(t);
        let children = self.children.clone();
        let mut outboxes = Vec::with_capacity(children.len() + 1);
        for c in children {
            outboxes.push(self.send_one(t, c, child_slot));
        }
        if let Some(p) = self.parent {
            outboxes.push(self.send_one(t, p, parent_slot));
        }

        LowCommRound { action, reward, outboxes, eliminated, incorporated }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IOTA: f64 = 8.0;

    #[test]
    fn slot_formulas() {
        let agent = LowCommAgent::new(5, 3, IOTA, 2, Some(1), vec![7]);
        assert_eq!(agent.child_slot(7), 2, "(7-2) mod 3");
        assert_eq!(agent.parent_slot(7), 0, "(7+2) mod 3");
        // Rounds smaller than the depth wrap, they do not go negative.
        let deep = LowCommAgent::new(9, 3, IOTA, 5, Some(1), vec![]);
        assert_eq!(deep.child_slot(1), 2, "(1-5) mod 3");
    }

    #[test]
    fn root_slots_coincide_and_only_children_are_served() {
        let mut root = LowCommAgent::new(0, 4, IOTA, 0, None, vec![1, 2]);
        assert_eq!(root.child_slot(6), root.parent_slot(6));
        let mut units = UnitStore::default();
        let out = root.round(1, &[], 0.0, |_| 0.0, &mut units);
        assert_eq!(out.outboxes.len(), 2);
        let receivers: Vec<u32> = out.outboxes.iter().map(|(y, _, _)| *y).collect();
        assert_eq!(receivers, vec![1, 2]);
    }

    #[test]
    fn one_event_per_scheduled_neighbor_per_round() {
        let mut middle = LowCommAgent::new(1, 3, IOTA, 1, Some(0), vec![2]);
        let mut units = UnitStore::default();
        for t in 1..=9 {
            let out = middle.round(t, &[], 0.5, |_| 0.5, &mut units);
            assert_eq!(out.outboxes.len(), 2, "child and parent, every round");
        }
    }

    #[test]
    fn aggregates_wait_for_their_slot_and_then_flush() {
        // Depth-1 agent, A=3: the parent slot at round t serves (t+1) mod 3.
        let mut agent = LowCommAgent::new(1, 3, IOTA, 1, Some(0), vec![]);
        let mut units = UnitStore::default();
        // Round 1 plays action 0 (draw 0), parent slot (1+1)%3 = 2: action 0
        // stays buffered.
        let out1 = agent.round(1, &[], 0.0, |_| 1.0, &mut units);
        assert_eq!(out1.action, 0);
        assert_eq!(out1.outboxes[0].1, Event::RwdMany { t: 1, id: 1, a: 2, r: 0.0, n: 0 });
        // Round 2's parent slot is (2+1)%3 = 0: now the buffered unit goes.
        let out2 = agent.round(2, &[], 0.9, |_| 1.0, &mut units);
        let (to, event, sent_units) = &out2.outboxes[0];
        assert_eq!(*to, 0);
        assert_eq!(*event, Event::RwdMany { t: 2, id: 1, a: 0, r: 1.0, n: 1 });
        assert_eq!(sent_units.len(), 1);
        assert_eq!(units.creator[sent_units[0] as usize], 1);
        assert_eq!(units.round[sent_units[0] as usize], 1);
    }

    #[test]
    fn pending_elimination_preempts_the_slot_but_keeps_the_aggregate() {
        let mut agent = LowCommAgent::new(1, 2, IOTA, 1, Some(0), vec![]);
        let mut units = UnitStore::default();
        // Round 1: plays action 0, parent slot (1+1)%2 = 0 flushes it.
        agent.round(1, &[], 0.0, |_| 1.0, &mut units);
        // Round 2: plays 0 again (still both active, draw 0), slot is 1.
        agent.round(2, &[], 0.0, |_| 1.0, &mut units);
        // Learn an elimination of action 0 from the child side... there is no
        // child, so inject via inbox from the parent and check it is applied
        // but NOT echoed back to the parent.
        let elim = (0u32, Event::Elim { t: 2, id: 0, a: 1 }, Vec::new());
        let out3 = agent.round(3, &[elim], 0.0, |_| 1.0, &mut units);
        assert!(!agent.active.contains(1));
        // Parent slot at t=3 is (3+1)%2 = 0: a RwdMany for action 0, not an
        // echoed elimination.
        assert!(matches!(out3.outboxes[0].1, Event::RwdMany { a: 0, .. }));

        // Now an own elimination: make action 1 the loser is impossible (it
        // is gone); instead check the pending flag path directly on a fresh
        // agent with a child.
        let mut parent = LowCommAgent::new(0, 2, IOTA, 0, None, vec![1]);
        let mut units2 = UnitStore::default();
        parent.round(1, &[], 0.0, |_| 1.0, &mut units2); // plays 0, slot 1
        let elim_in = (1u32, Event::Elim { t: 1, id: 1, a: 1 }, Vec::new());
        // Round 2: child slot is 0; the elimination of 1 pends for... no one
        // (it came from the only neighbor). Feed one from nowhere instead:
        // use the own elimination step by loading lopsided stats.
        let big = (1u32, Event::RwdMany { t: 1, id: 1, a: 0, r: 400.0, n: 400 }, Vec::new());
        let small = (1u32, Event::RwdMany { t: 1, id: 1, a: 1, r: 0.0, n: 400 }, Vec::new());
        let out2 = parent.round(2, &[elim_in, big, small], 0.0, |_| 1.0, &mut units2);
        // The elimination was already known via the inbox before the elim
        // step ran, so no own announcement is pending toward the child and
        // the child slot (action 0) flushes its aggregate.
        match &out2.outboxes[0].1 {
            Event::RwdMany { a: 0, n, .. } => assert!(*n >= 1),
            other => panic!("expected a reward aggregate, got {other:?}"),
        }
    }

    #[test]
    fn own_elimination_pends_for_every_neighbor_and_sends_on_slot() {
        let mut agent = LowCommAgent::new(1, 2, IOTA, 1, Some(0), vec![2]);
        let mut units = UnitStore::default();
        let big = (0u32, Event::RwdMany { t: 1, id: 0, a: 0, r: 400.0, n: 400 }, Vec::new());
        let small = (0u32, Event::RwdMany { t: 1, id: 0, a: 1, r: 0.0, n: 400 }, Vec::new());
        let out2 = agent.round(2, &[big, small], 0.0, |_| 1.0, &mut units);
        assert_eq!(out2.eliminated, vec![1]);
        // t=2: child slot (2-1)%2 = 1 — the elimination notice goes to the
        // child right now; parent slot (2+1)%2 = 1 — and to the parent too.
        assert_eq!(out2.outboxes[0].1, Event::Elim { t: 2, id: 1, a: 1 });
        assert_eq!(out2.outboxes[1].1, Event::Elim { t: 2, id: 1, a: 1 });
        // t=3: slots are both 0; plain aggregates go out, no repeat notice.
        let out3 = agent.round(3, &[], 0.0, |_| 1.0, &mut units);
        assert!(matches!(out3.outboxes[0].1, Event::RwdMany { a: 0, .. }));
        assert!(matches!(out3.outboxes[1].1, Event::RwdMany { a: 0, .. }));
    }

    #[test]
    fn incorporation_is_reported_for_accepted_units_only() {
        let mut agent = LowCommAgent::new(1, 2, IOTA, 1, Some(0), vec![]);
        let mut units = UnitStore::default();
        let u_far = units.create(5, 1, 1);
        let rwd = (0u32, Event::RwdMany { t: 2, id: 0, a: 1, r: 1.0, n: 1 }, vec![u_far]);
        let elim = (0u32, Event::Elim { t: 2, id: 0, a: 1 }, Vec::new());
        // Elimination of action 1 lands first, so the unit is rejected.
        let out = agent.round(3, &[rwd, elim], 0.0, |_| 1.0, &mut units);
        assert!(out.incorporated.is_empty());
        // The agent's own unit from round 3 is incorporated at round 4.
        let out4 = agent.round(4, &[], 0.0, |_| 1.0, &mut units);
        assert_eq!(out4.incorporated.len(), 1);
        assert_eq!(units.creator[out4.incorporated[0] as usize], 1);
    }
}
