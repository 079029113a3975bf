//! Explicit message-passing engines, one per policy. Each executes the
//! two-phase round: all agents act against their current inboxes, then the
//! produced outboxes become the next round's inboxes, so nothing an agent
//! sends at round `t` can influence anyone else before round `t+1`.

use rand::Rng;

use crate::agents::{
    ActiveSet, ConfidenceState, CoopSeAgent, LowCommAgent, RestrictedAgent, SingleSeAgent,
    SusActAgent, UnitStore,
};
use crate::bandit::{sample_reward, RegretLedger};
use crate::events::{Event, EventWidths};
use crate::rng::{action_stream, reward_stream};

use super::{Elimination, Prepared, ProvenanceLog, RunTrace, SeedMetrics, SeedRun, SimConfig};

/// Streaming trace/metric collection shared by all engines.
pub(super) struct Recorder {
    m: usize,
    a_count: usize,
    t_horizon: u32,
    capture: bool,
    capture_conf: bool,
    actions: Vec<u16>,
    active_words: usize,
    active: Vec<u64>,
    msg_bits: Vec<u64>,
    eliminations: Vec<Elimination>,
    conf_n: Vec<u64>,
    conf_r: Vec<f64>,
    ledger: RegretLedger,
    total_bits: u64,
    max_message_bits: u64,
    round_bits: u64,
    max_round_bits: u64,
    own_elims: u32,
}

impl Recorder {
    pub fn new(cfg: &SimConfig, env: &Prepared) -> Self {
        let m = env.graph.m;
        let a_count = env.instance.num_actions();
        let cells = if cfg.capture_trace { m * cfg.t_horizon as usize } else { 0 };
        let active_words = a_count.div_ceil(64);
        let conf_cells = if cfg.capture_trace && cfg.capture_conf { cells * a_count } else { 0 };
        Recorder {
            m,
            a_count,
            t_horizon: cfg.t_horizon,
            capture: cfg.capture_trace,
            capture_conf: cfg.capture_conf,
            actions: vec![0; cells],
            active_words,
            active: vec![0; cells * active_words],
            msg_bits: vec![0; cells],
            eliminations: Vec::new(),
            conf_n: vec![0; conf_cells],
            conf_r: vec![0.0; conf_cells],
            ledger: RegretLedger::new(&env.instance, m),
            total_bits: 0,
            max_message_bits: 0,
            round_bits: 0,
            max_round_bits: 0,
            own_elims: 0,
        }
    }

    fn idx(&self, t: u32, u: usize) -> usize {
        (t as usize - 1) * self.m + u
    }

    /// Records one agent-round: the play plus the post-elimination-step
    /// snapshot of its active set and confidence state.
    pub fn record_round(
        &mut self,
        t: u32,
        u: usize,
        action: u32,
        active: &ActiveSet,
        conf: &ConfidenceState,
    ) {
        self.ledger.record(u, action as usize);
        if !self.capture {
            return;
        }
        let i = self.idx(t, u);
        self.actions[i] = action as u16;
        let mask = active.mask();
        self.active[i * self.active_words..(i + 1) * self.active_words].copy_from_slice(&mask);
        if self.capture_conf {
            self.conf_n[i * self.a_count..(i + 1) * self.a_count].copy_from_slice(&conf.n);
            self.conf_r[i * self.a_count..(i + 1) * self.a_count].copy_from_slice(&conf.r);
        }
    }

    pub fn record_elims(&mut self, t: u32, u: usize, eliminated: &[u32]) {
        self.own_elims += eliminated.len() as u32;
        if self.capture {
            for &a in eliminated {
                self.eliminations.push(Elimination { t, agent: u as u32, action: a });
            }
        }
    }

    /// Records one sent message of `bits` bits.
    pub fn record_message(&mut self, t: u32, u: usize, bits: u64) {
        self.total_bits += bits;
        self.round_bits += bits;
        self.max_message_bits = self.max_message_bits.max(bits);
        if self.capture {
            let i = self.idx(t, u);
            self.msg_bits[i] += bits;
        }
    }

    pub fn end_round(&mut self) {
        self.max_round_bits = self.max_round_bits.max(self.round_bits);
        self.round_bits = 0;
    }

    pub fn finish(
        self,
        seed: u64,
        final_active: impl Iterator<Item = usize>,
        empty_active_skips: u64,
    ) -> SeedRun {
        let (mut lo, mut hi) = (usize::MAX, 0);
        for s in final_active {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        let metrics = SeedMetrics {
            seed,
            per_agent_regret: self.ledger.all().to_vec(),
            max_regret: self.ledger.max_over_agents(),
            total_msg_bits: self.total_bits,
            max_message_bits: self.max_message_bits,
            max_round_bits: self.max_round_bits,
            mean_round_bits: self.total_bits as f64 / self.t_horizon as f64,
            own_eliminations: self.own_elims,
            final_active_min: lo,
            final_active_max: hi,
            empty_active_skips,
        };
        let trace = if self.capture {
            Some(RunTrace {
                m: self.m,
                t_horizon: self.t_horizon,
                a_count: self.a_count,
                actions: self.actions,
                active_words: self.active_words,
                active: self.active,
                msg_bits: self.msg_bits,
                eliminations: self.eliminations,
                conf_n: self.capture_conf.then_some(self.conf_n),
                conf_r: self.capture_conf.then_some(self.conf_r),
            })
        } else {
            None
        };
        SeedRun { metrics, trace, provenance: None }
    }
}

pub(super) fn coop_se(cfg: &SimConfig, env: &Prepared, seed: u64) -> SeedRun {
    let m = env.graph.m;
    let a_count = env.instance.num_actions();
    let widths = EventWidths::new(m, cfg.t_horizon as usize, a_count);
    let mut agents: Vec<CoopSeAgent> =
        (0..m).map(|v| CoopSeAgent::new(v as u32, a_count, env.iota)).collect();
    let mut act_rngs: Vec<_> = (0..m).map(|v| action_stream(seed, v)).collect();
    let mut rwd_rngs: Vec<_> = (0..m).map(|v| reward_stream(seed, v)).collect();
    let mut rec = Recorder::new(cfg, env);
    let mut inboxes: Vec<Vec<Event>> = vec![Vec::new(); m];
    for t in 1..=cfg.t_horizon {
        let mut next: Vec<Vec<Event>> = vec![Vec::new(); m];
        for v in 0..m {
            let draw = act_rngs[v].random::<f64>();
            let rng = &mut rwd_rngs[v];
            let out = agents[v].round(t, &inboxes[v], draw, |a| {
                sample_reward(&env.instance, a as usize, rng)
            });
            rec.record_round(t, v, out.action, &agents[v].active, &agents[v].conf);
            rec.record_elims(t, v, &out.eliminated);
            let bits: u64 = out.outbox.iter().map(|e| widths.of(e)).sum();
            for &y in &env.graph.adjacency[v] {
                rec.record_message(t, v, bits);
                next[y].extend_from_slice(&out.outbox);
            }
        }
        inboxes = next;
        rec.end_round();
    }
    rec.finish(
        seed,
        agents.iter().map(|a| a.active.len()),
        agents.iter().map(|a| a.empty_active_skips).sum(),
    )
}

pub(super) fn sus_act(cfg: &SimConfig, env: &Prepared, seed: u64) -> SeedRun {
    let m = env.graph.m;
    let a_count = env.instance.num_actions();
    let widths = EventWidths::new(m, cfg.t_horizon as usize, a_count);
    let mut agents: Vec<SusActAgent> = (0..m)
        .map(|v| SusActAgent::new(v as u32, a_count, env.iota, env.sus_act_delay, cfg.t_horizon))
        .collect();
    let mut rwd_rngs: Vec<_> = (0..m).map(|v| reward_stream(seed, v)).collect();
    let mut rec = Recorder::new(cfg, env);
    let mut inboxes: Vec<Vec<Event>> = vec![Vec::new(); m];
    for t in 1..=cfg.t_horizon {
        let mut next: Vec<Vec<Event>> = vec![Vec::new(); m];
        for v in 0..m {
            let rng = &mut rwd_rngs[v];
            let out = agents[v].round(t, &inboxes[v], |a| {
                sample_reward(&env.instance, a as usize, rng)
            });
            rec.record_round(t, v, out.action, &agents[v].active, &agents[v].conf);
            rec.record_elims(t, v, &out.eliminated);
            let bits: u64 = out.outbox.iter().map(|e| widths.of(e)).sum();
            for &y in &env.graph.adjacency[v] {
                rec.record_message(t, v, bits);
                next[y].extend_from_slice(&out.outbox);
            }
        }
        inboxes = next;
        rec.end_round();
    }
    rec.finish(seed, agents.iter().map(|a| a.active.len()), 0)
}

pub(super) fn restricted(cfg: &SimConfig, env: &Prepared, seed: u64) -> SeedRun {
    let m = env.graph.m;
    let a_count = env.instance.num_actions();
    let widths = EventWidths::new(m, cfg.t_horizon as usize, a_count);
    let tree = env.tree.as_ref().expect("restricted runs carry a spanning tree");
    let mut agents: Vec<RestrictedAgent> = (0..m)
        .map(|v| {
            let neighbors = tree.neighbors(v).iter().map(|&y| y as u32).collect();
            RestrictedAgent::new(v as u32, a_count, env.iota, neighbors)
        })
        .collect();
    let mut act_rngs: Vec<_> = (0..m).map(|v| action_stream(seed, v)).collect();
    let mut rwd_rngs: Vec<_> = (0..m).map(|v| reward_stream(seed, v)).collect();
    let mut rec = Recorder::new(cfg, env);
    let mut inboxes: Vec<Vec<(u32, Event)>> = vec![Vec::new(); m];
    for t in 1..=cfg.t_horizon {
        let mut next: Vec<Vec<(u32, Event)>> = vec![Vec::new(); m];
        for v in 0..m {
            let draw = act_rngs[v].random::<f64>();
            let rng = &mut rwd_rngs[v];
            let out = agents[v].round(t, &inboxes[v], draw, |a| {
                sample_reward(&env.instance, a as usize, rng)
            });
            rec.record_round(t, v, out.action, &agents[v].active, &agents[v].conf);
            rec.record_elims(t, v, &out.eliminated);
            for (y, events) in out.outboxes {
                let bits: u64 = events.iter().map(|e| widths.of(e)).sum();
                rec.record_message(t, v, bits);
                next[y as usize].extend(events.into_iter().map(|e| (v as u32, e)));
            }
        }
        inboxes = next;
        rec.end_round();
    }
    rec.finish(
        seed,
        agents.iter().map(|a| a.active.len()),
        agents.iter().map(|a| a.empty_active_skips).sum(),
    )
}

pub(super) fn low_comm(cfg: &SimConfig, env: &Prepared, seed: u64) -> SeedRun {
    let m = env.graph.m;
    let a_count = env.instance.num_actions();
    let widths = EventWidths::new(m, cfg.t_horizon as usize, a_count);
    let tree = env.tree.as_ref().expect("low-comm runs carry a spanning tree");
    let mut agents: Vec<LowCommAgent> = (0..m)
        .map(|v| {
            LowCommAgent::new(
                v as u32,
                a_count,
                env.iota,
                tree.depth[v],
                tree.parent[v].map(|p| p as u32),
                tree.children[v].iter().map(|&c| c as u32).collect(),
            )
        })
        .collect();
    let mut act_rngs: Vec<_> = (0..m).map(|v| action_stream(seed, v)).collect();
    let mut rwd_rngs: Vec<_> = (0..m).map(|v| reward_stream(seed, v)).collect();
    let mut rec = Recorder::new(cfg, env);
    let mut units = UnitStore::default();
    let mut incorporated: Vec<Vec<Option<u32>>> = vec![Vec::new(); m];
    let mut inboxes: Vec<Vec<(u32, Event, Vec<u32>)>> = vec![Vec::new(); m];
    for t in 1..=cfg.t_horizon {
        let mut next: Vec<Vec<(u32, Event, Vec<u32>)>> = vec![Vec::new(); m];
        for v in 0..m {
            let draw = act_rngs[v].random::<f64>();
            let rng = &mut rwd_rngs[v];
            let out = agents[v].round(
                t,
                &inboxes[v],
                draw,
                |a| sample_reward(&env.instance, a as usize, rng),
                &mut units,
            );
            rec.record_round(t, v, out.action, &agents[v].active, &agents[v].conf);
            rec.record_elims(t, v, &out.eliminated);
            if cfg.capture_trace {
                incorporated[v].resize(units.len(), None);
                for &unit in &out.incorporated {
                    incorporated[v][unit as usize] = Some(t);
                }
            }
            for (y, event, event_units) in out.outboxes {
                rec.record_message(t, v, widths.of(&event));
                next[y as usize].push((v as u32, event, event_units));
            }
        }
        inboxes = next;
        rec.end_round();
    }
    let mut run = rec.finish(
        seed,
        agents.iter().map(|a| a.active.len()),
        agents.iter().map(|a| a.empty_active_skips).sum(),
    );
    if cfg.capture_trace {
        for per_agent in &mut incorporated {
            per_agent.resize(units.len(), None);
        }
        run.provenance = Some(ProvenanceLog { units, incorporated });
    }
    run
}

pub(super) fn single_se(cfg: &SimConfig, env: &Prepared, seed: u64) -> SeedRun {
    let a_count = env.instance.num_actions();
    let mut agent = SingleSeAgent::new(a_count, env.iota);
    let mut act_rng = action_stream(seed, 0);
    let mut rwd_rng = reward_stream(seed, 0);
    let mut rec = Recorder::new(cfg, env);
    for t in 1..=cfg.t_horizon {
        let draw = act_rng.random::<f64>();
        let out = agent.round(t, draw, |a| sample_reward(&env.instance, a as usize, &mut rwd_rng));
        rec.record_round(t, 0, out.action, agent.active(), agent.conf());
        rec.record_elims(t, 0, &out.eliminated);
        rec.end_round();
    }
    rec.finish(seed, std::iter::once(agent.active().len()), 0)
}
