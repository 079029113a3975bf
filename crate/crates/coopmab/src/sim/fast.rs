//! Message-free fast path for the flooding policy.
//!
//! Flooding with per-key deduplication delivers the play `(w, k)` to agent
//! `u` exactly at round `k + dist(w, u)` (the agent's own play lands one
//! round after the fact), and an elimination notice spreads the same way. So
//! instead of simulating event objects, each agent ingests plays and
//! eliminations straight from a shared history by arrival round. Message
//! bits are still accounted exactly: an agent's round-`t` outbox consists of
//! its own fresh events plus the remote events that just arrived (later
//! copies of an event are never relayed, so the relay set equals the
//! first-arrival set).
//!
//! On complete graphs every agent has ingested precisely the full previous
//! round at all times, hence all agents share one confidence state and one
//! active set; that collapses the run to `O(T·(m + A))`.

use rand::Rng;

use crate::agents::{apply_remote_elim, elim_step, select_action, ActiveSet, ConfidenceState, ElimOutcome};
use crate::bandit::sample_reward;
use crate::events::EventWidths;
use crate::rng::{action_stream, reward_stream};

use super::engine::Recorder;
use super::{Prepared, SeedRun, SimConfig};

pub(super) fn run_seed(cfg: &SimConfig, env: &Prepared, seed: u64) -> SeedRun {
    let g = &env.graph;
    let complete = g.m >= 2 && g.adjacency.iter().all(|l| l.len() == g.m - 1);
    if complete {
        run_complete(cfg, env, seed)
    } else {
        run_generic(cfg, env, seed)
    }
}

fn run_generic(cfg: &SimConfig, env: &Prepared, seed: u64) -> SeedRun {
    let m = env.graph.m;
    let a_count = env.instance.num_actions();
    let t_max = cfg.t_horizon;
    let widths = EventWidths::new(m, t_max as usize, a_count);
    let mut active: Vec<ActiveSet> = (0..m).map(|_| ActiveSet::full(a_count)).collect();
    let mut conf: Vec<ConfidenceState> = (0..m).map(|_| ConfidenceState::new(a_count)).collect();
    let mut skips = vec![0u64; m];
    let mut act_rngs: Vec<_> = (0..m).map(|v| action_stream(seed, v)).collect();
    let mut rwd_rngs: Vec<_> = (0..m).map(|v| reward_stream(seed, v)).collect();
    let mut rec = Recorder::new(cfg, env);
    // Play history, row per round: (action, reward) at (t-1)*m + w.
    let mut plays: Vec<(u16, f64)> = Vec::with_capacity(m * t_max as usize);
    // Own elimination-step removals by round, as (agent, action).
    let mut elims_by_round: Vec<Vec<(u32, u32)>> = vec![Vec::new(); t_max as usize + 1];
    for t in 1..=t_max {
        for u in 0..m {
            let dist_u = &env.graph.dist[u];
            // Eliminations whose flood front reaches u this round.
            let mut arriving_elims = 0u64;
            for w in 0..m {
                if w == u {
                    continue;
                }
                let d = dist_u[w];
                if t > d {
                    for &(src, a) in &elims_by_round[(t - d) as usize] {
                        if src == w as u32 {
                            arriving_elims += 1;
                            if apply_remote_elim(&mut active[u], a)
                                == ElimOutcome::SkippedWouldEmpty
                            {
                                skips[u] += 1;
                            }
                        }
                    }
                }
            }
            // Plays whose flood front reaches u this round (own play counts
            // as distance 1: it becomes usable the round after it happened).
            let mut arriving_rwds = 0u64;
            for w in 0..m {
                let d = if w == u { 1 } else { dist_u[w] };
                if t > d {
                    let (a, r) = plays[(t - d - 1) as usize * m + w];
                    if w != u {
                        arriving_rwds += 1;
                    }
                    if active[u].contains(a as u32) {
                        conf[u].observe(a as u32, r);
                    }
                }
            }

            let eliminated = elim_step(&active[u], &conf[u], env.iota);
            for &a in &eliminated {
                active[u].remove(a);
                elims_by_round[t as usize].push((u as u32, a));
            }

            let draw = act_rngs[u].random::<f64>();
            let action = select_action(&active[u], draw);
            let reward = sample_reward(&env.instance, action as usize, &mut rwd_rngs[u]);
            plays.push((action as u16, reward));
            rec.record_round(t, u, action, &active[u], &conf[u]);
            rec.record_elims(t, u, &eliminated);

            // Outbox: own reward and eliminations plus everything that just
            // arrived, to every neighbor.
            let bits = widths.rwd * (1 + arriving_rwds)
                + widths.elim * (eliminated.len() as u64 + arriving_elims);
            for _ in 0..env.graph.adjacency[u].len() {
                rec.record_message(t, u, bits);
            }
        }
        rec.end_round();
    }
    rec.finish(seed, active.iter().map(|a| a.len()), skips.iter().sum())
}

fn run_complete(cfg: &SimConfig, env: &Prepared, seed: u64) -> SeedRun {
    let m = env.graph.m;
    let a_count = env.instance.num_actions();
    let widths = EventWidths::new(m, cfg.t_horizon as usize, a_count);
    let mut active = ActiveSet::full(a_count);
    let mut conf = ConfidenceState::new(a_count);
    let mut act_rngs: Vec<_> = (0..m).map(|v| action_stream(seed, v)).collect();
    let mut rwd_rngs: Vec<_> = (0..m).map(|v| reward_stream(seed, v)).collect();
    let mut rec = Recorder::new(cfg, env);
    let mut prev_plays: Vec<(u32, f64)> = Vec::new();
    let mut prev_elims = 0u64;
    for t in 1..=cfg.t_horizon {
        // Everyone ingests the full previous round, so the shared state
        // stays shared.
        for &(a, r) in &prev_plays {
            if active.contains(a) {
                conf.observe(a, r);
            }
        }
        let eliminated = elim_step(&active, &conf, env.iota);
        for &a in &eliminated {
            active.remove(a);
        }
        let e_now = eliminated.len() as u64;

        let mut cur_plays = Vec::with_capacity(m);
        let relayed_rwds = if t >= 2 { (m - 1) as u64 } else { 0 };
        let bits = widths.rwd * (1 + relayed_rwds)
            + widths.elim * (e_now + (m as u64 - 1) * prev_elims);
        for u in 0..m {
            let draw = act_rngs[u].random::<f64>();
            let action = select_action(&active, draw);
            let reward = sample_reward(&env.instance, action as usize, &mut rwd_rngs[u]);
            cur_plays.push((action, reward));
            rec.record_round(t, u, action, &active, &conf);
            rec.record_elims(t, u, &eliminated);
            for _ in 0..m - 1 {
                rec.record_message(t, u, bits);
            }
        }
        prev_plays = cur_plays;
        prev_elims = e_now;
        rec.end_round();
    }
    rec.finish(seed, std::iter::repeat_n(active.len(), m), 0)
}
