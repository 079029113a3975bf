//! Protocol events and messages, with the canonical bit-size accounting used
//! to verify the bounded-communication message budgets.
//!
//! The encoding is an accounting model only: the simulator always passes
//! structured values around and tallies what a canonical codec *would* cost.
//! Reward payloads are integral (single Bernoulli rewards are one bit;
//! aggregated sums over at most m·T unit rewards fit a fixed-width counter),
//! which is why the instance kinds are limited to Bernoulli and Deterministic.

use std::collections::HashSet;

/// One protocol event. `t` is the round the event was stamped, `id` the
/// stamping agent, `a` the action concerned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// A single observed reward.
    Rwd { t: u32, id: u32, a: u32, r: f64 },
    /// The stamping agent eliminated action `a`.
    Elim { t: u32, id: u32, a: u32 },
    /// Aggregate of `n` observations of action `a` summing to reward `r`.
    RwdMany { t: u32, id: u32, a: u32, r: f64, n: u32 },
}

/// Identity for deduplication: (tag, t, id, a). The reward value is excluded
/// because an agent emits at most one reward event per round, so the tuple is
/// already unique; the tag keeps Rwd/Elim with equal (t,id,a) distinct.
pub type EventKey = (u8, u32, u32, u32);

impl Event {
    pub fn tag(&self) -> u8 {
        match self {
            Event::Rwd { .. } => 0,
            Event::Elim { .. } => 1,
            Event::RwdMany { .. } => 2,
        }
    }

    pub fn key(&self) -> EventKey {
        match *self {
            Event::Rwd { t, id, a, .. } => (0, t, id, a),
            Event::Elim { t, id, a } => (1, t, id, a),
            Event::RwdMany { t, id, a, .. } => (2, t, id, a),
        }
    }

    pub fn action(&self) -> u32 {
        match *self {
            Event::Rwd { a, .. } | Event::Elim { a, .. } | Event::RwdMany { a, .. } => a,
        }
    }

    pub fn source(&self) -> u32 {
        match *self {
            Event::Rwd { id, .. } | Event::Elim { id, .. } | Event::RwdMany { id, .. } => id,
        }
    }
}

fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// Field widths of the canonical encoding for a run with `m` agents, horizon
/// `t_horizon`, and `a` actions. Every event starts with a 2-bit tag, the
/// round (values 0..=T), the agent id, and the action; Rwd adds a 1-bit
/// reward, RwdMany adds two counters wide enough for values 0..=m·T.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventWidths {
    pub elim: u64,
    pub rwd: u64,
    pub rwd_many: u64,
}

impl EventWidths {
    pub fn new(m: usize, t_horizon: usize, a: usize) -> Self {
        let header = 2 + ceil_log2(t_horizon as u64 + 1) + ceil_log2(m as u64) + ceil_log2(a as u64);
        let counter = ceil_log2((m * t_horizon) as u64 + 1);
        EventWidths { elim: header, rwd: header + 1, rwd_many: header + 2 * counter }
    }

    pub fn of(&self, e: &Event) -> u64 {
        match e {
            Event::Rwd { .. } => self.rwd,
            Event::Elim { .. } => self.elim,
            Event::RwdMany { .. } => self.rwd_many,
        }
    }

    /// Largest admissible message for the tree-aggregation policy: per
    /// neighbor, at most one event per action, each at most RwdMany-wide.
    pub fn restricted_message_budget(&self, a: usize) -> u64 {
        a as u64 * self.rwd_many
    }

    /// Largest admissible message for the one-event-per-message policy.
    pub fn single_event_budget(&self) -> u64 {
        self.rwd_many.max(self.rwd).max(self.elim)
    }
}

/// Bit size of one event under the canonical encoding.
pub fn encode_size_bits(e: &Event, m: usize, t_horizon: usize, a: usize) -> u64 {
    EventWidths::new(m, t_horizon, a).of(e)
}

/// Splits `events` into the ones whose key is unseen (in input order),
/// recording them in `seen`.
pub fn dedupe(events: impl IntoIterator<Item = Event>, seen: &mut HashSet<EventKey>) -> Vec<Event> {
    events.into_iter().filter(|e| seen.insert(e.key())).collect()
}

/// A batch of events in flight between two adjacent agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub events: Vec<Event>,
    pub sender: u32,
    pub receiver: u32,
    pub sent_at: u32,
}

impl Message {
    pub fn size_bits(&self, widths: &EventWidths) -> u64 {
        self.events.iter().map(|e| widths.of(e)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_match_frozen_values() {
        // m=16, T=1024, A=8: tag 2 + t ceil(log2 1025)=11 + id 4 + a 3.
        let w = EventWidths::new(16, 1024, 8);
        assert_eq!(w.elim, 20);
        assert_eq!(w.rwd, 21);
        // Counters hold 0..=16384, which needs 15 bits (2^14 = 16384 only
        // covers 0..=16383), so RwdMany = 20 + 2*15 = 50.
        assert_eq!(w.rwd_many, 50);

        let e = Event::Elim { t: 3, id: 1, a: 0 };
        assert_eq!(encode_size_bits(&e, 16, 1024, 8), 20);
        let r = Event::Rwd { t: 3, id: 1, a: 0, r: 1.0 };
        assert_eq!(encode_size_bits(&r, 16, 1024, 8), 21);
        let rm = Event::RwdMany { t: 3, id: 1, a: 0, r: 5.0, n: 9 };
        assert_eq!(encode_size_bits(&rm, 16, 1024, 8), 50);
    }

    #[test]
    fn widths_degenerate_cases() {
        // m=1 needs zero id bits; A=2 needs one action bit.
        let w = EventWidths::new(1, 1, 2);
        assert_eq!(w.elim, 2 + 1 + 0 + 1);
        assert_eq!(w.rwd_many, w.elim + 2 * ceil_log2(2));
    }

    #[test]
    fn ceil_log2_boundaries() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
        assert_eq!(ceil_log2(16384), 14);
        assert_eq!(ceil_log2(16385), 15);
    }

    #[test]
    fn restricted_budget_is_a_times_widest_event() {
        let w = EventWidths::new(5, 500, 4);
        assert_eq!(w.restricted_message_budget(4), 4 * w.rwd_many);
        assert_eq!(w.single_event_budget(), w.rwd_many);
    }

    #[test]
    fn dedupe_drops_repeats_keeps_distinct() {
        let mut seen = HashSet::new();
        let e1 = Event::Rwd { t: 1, id: 0, a: 2, r: 1.0 };
        let e2 = Event::Rwd { t: 2, id: 0, a: 2, r: 0.0 }; // differs in t
        let e3 = Event::Elim { t: 1, id: 0, a: 2 }; // same (t,id,a), other tag

        let fresh = dedupe([e1, e1, e2, e3], &mut seen);
        assert_eq!(fresh, vec![e1, e2, e3]);

        // A later arrival of an already-seen event is dropped.
        let fresh = dedupe([e2], &mut seen);
        assert!(fresh.is_empty());
    }

    #[test]
    fn message_size_sums_member_events() {
        let w = EventWidths::new(16, 1024, 8);
        let msg = Message {
            events: vec![
                Event::Elim { t: 1, id: 0, a: 1 },
                Event::Rwd { t: 1, id: 0, a: 0, r: 1.0 },
                Event::RwdMany { t: 1, id: 0, a: 2, r: 0.0, n: 0 },
            ],
            sender: 0,
            receiver: 1,
            sent_at: 1,
        };
        assert_eq!(msg.size_bits(&w), 20 + 21 + 50);
    }
}
