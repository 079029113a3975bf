//! Structural checks over executed traces.
//!
//! Each checker replays one recorded run against a property the protocols
//! are supposed to guarantee — synchronized active sets, minimum sample
//! counts, bounded low-communication delay, tree/flooding equivalence, and
//! the per-run concentration events — and reports every place the property
//! fails. Deterministic properties must come back empty; the concentration
//! events are allowed to fail with small probability and are therefore
//! counted rather than asserted.

use crate::bandit::BanditInstance;
use crate::graph::{CommGraph, SpanningTree};

use super::{ProvenanceLog, RunTrace, SimConfig, SimError};

/// One failed check at one point of a trace.
#[derive(Debug, Clone)]
pub struct Violation {
    pub check: &'static str,
    pub t: u32,
    pub agent: usize,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] t={} agent={}: {}", self.check, self.t, self.agent, self.detail)
    }
}

/// Active sets only shrink, and never to nothing.
pub fn check_active_monotone(trace: &RunTrace) -> Vec<Violation> {
    let mut out = Vec::new();
    for u in 0..trace.m {
        let mut prev: Vec<u32> = (0..trace.a_count as u32).collect();
        for t in 1..=trace.t_horizon {
            let cur = trace.active_vec(t, u);
            if cur.is_empty() {
                out.push(Violation {
                    check: "active-monotone",
                    t,
                    agent: u,
                    detail: "active set became empty".into(),
                });
            }
            if !cur.iter().all(|a| prev.contains(a)) {
                out.push(Violation {
                    check: "active-monotone",
                    t,
                    agent: u,
                    detail: format!("{cur:?} is not a subset of the previous round's {prev:?}"),
                });
            }
            prev = cur;
        }
    }
    out
}

/// Every agent plays the same action and holds the same active set each
/// round (the delayed-lockstep policy's defining property).
pub fn check_lockstep(trace: &RunTrace) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in 1..=trace.t_horizon {
        let action0 = trace.action_at(t, 0);
        let active0 = trace.active_vec(t, 0);
        for u in 1..trace.m {
            if trace.action_at(t, u) != action0 {
                out.push(Violation {
                    check: "lockstep",
                    t,
                    agent: u,
                    detail: format!("played {} while agent 0 played {}", trace.action_at(t, u), action0),
                });
            }
            if trace.active_vec(t, u) != active0 {
                out.push(Violation {
                    check: "lockstep",
                    t,
                    agent: u,
                    detail: format!("active {:?} differs from agent 0's {:?}", trace.active_vec(t, u), active0),
                });
            }
        }
    }
    out
}

/// During the middle half of every long stage of `ref_agent`, all agents
/// within a quarter-stage distance hold exactly the stage's active set.
///
/// Stage `j` runs `[t_j, t_{j+1})` with length `τ_j`; for `τ_j > 16`, every
/// agent `u` with `dist(u, ref) ≤ τ_j/4` must agree with the stage set at
/// every round in `[t_j + ⌈τ_j/4⌉, t_j + ⌊τ_j/2⌋]`.
pub fn check_sync(trace: &RunTrace, g: &CommGraph, ref_agent: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    for st in trace.stages(ref_agent) {
        let tau = st.len();
        if tau <= 16 {
            continue;
        }
        let lo = st.start + tau.div_ceil(4);
        let hi = st.start + tau / 2;
        for u in 0..trace.m {
            if g.dist[ref_agent][u] as f64 > tau as f64 / 4.0 {
                continue;
            }
            for t in lo..=hi {
                let got = trace.active_vec(t, u);
                if got != st.active {
                    out.push(Violation {
                        check: "sync",
                        t,
                        agent: u,
                        detail: format!(
                            "active {:?} != stage-{} set {:?} of agent {}",
                            got, st.index, st.active, ref_agent
                        ),
                    });
                }
            }
        }
    }
    out
}

/// By the end of stage `i`, `ref_agent` has gathered at least
/// `Σ_{j≤i, τ_j>16} τ_j/(16·A_j) · |N_{≤τ_j/4}(ref)| − 2ι` samples of every
/// action still active, where `N_{≤r}` is the closed `r`-ball around the
/// agent. Requires a confidence-captured trace.
pub fn check_sample_bound(
    trace: &RunTrace,
    g: &CommGraph,
    ref_agent: usize,
    iota: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut cum = 0.0;
    for st in trace.stages(ref_agent) {
        let tau = st.len();
        if tau > 16 {
            let ball = g.neighborhood_size(ref_agent, tau as f64 / 4.0) as f64;
            cum += tau as f64 / (16.0 * st.a_j() as f64) * ball;
        }
        if st.is_empty() {
            continue;
        }
        let t = st.end_excl - 1;
        let bound = cum - 2.0 * iota;
        for &a in &st.active {
            let n = trace.n_at(t, ref_agent, a) as f64;
            if n < bound - 1e-9 {
                out.push(Violation {
                    check: "sample-bound",
                    t,
                    agent: ref_agent,
                    detail: format!(
                        "action {a}: {n} samples at end of stage {} < bound {bound:.3}",
                        st.index
                    ),
                });
            }
        }
    }
    out
}

/// Stage bookkeeping: per agent, the stages partition `[1, T]` starting at
/// round 1, stage `j` holds `A − j + 1` actions, and the harmonic stage sum
/// `Σ_j 1/A_j` stays within `ln A + 1`.
pub fn check_stage_arithmetic(trace: &RunTrace) -> Vec<Violation> {
    let mut out = Vec::new();
    for u in 0..trace.m {
        let stages = trace.stages(u);
        let mut expected_start = 1u32;
        let mut covered = 0u32;
        let mut harmonic = 0.0;
        for st in &stages {
            if st.start != expected_start {
                out.push(Violation {
                    check: "stage-arithmetic",
                    t: st.start,
                    agent: u,
                    detail: format!("stage {} starts at {}, expected {expected_start}", st.index, st.start),
                });
            }
            if st.a_j() != trace.a_count - st.index + 1 {
                out.push(Violation {
                    check: "stage-arithmetic",
                    t: st.start,
                    agent: u,
                    detail: format!("stage {} holds {} actions, expected {}", st.index, st.a_j(), trace.a_count - st.index + 1),
                });
            }
            covered += st.len();
            harmonic += 1.0 / st.a_j() as f64;
            expected_start = st.end_excl;
        }
        if expected_start != trace.t_horizon + 1 || covered != trace.t_horizon {
            out.push(Violation {
                check: "stage-arithmetic",
                t: trace.t_horizon,
                agent: u,
                detail: format!(
                    "stages cover {covered} rounds ending at {expected_start}, horizon is {}",
                    trace.t_horizon
                ),
            });
        }
        let cap = (trace.a_count as f64).ln() + 1.0;
        if harmonic > cap + 1e-9 {
            out.push(Violation {
                check: "stage-arithmetic",
                t: trace.t_horizon,
                agent: u,
                detail: format!("harmonic stage sum {harmonic:.4} exceeds ln A + 1 = {cap:.4}"),
            });
        }
    }
    out
}

/// Earliest round `t ≥ k` whose slot for `depth` selects action `a`. Slots
/// advance one action per round, so the wait is the phase gap mod `A`.
fn first_slot(k: u32, depth: u32, a: u32, a_count: u32, parent_ward: bool) -> u32 {
    let phase = if parent_ward {
        (k + depth) % a_count
    } else {
        (k as i64 - depth as i64).rem_euclid(a_count as i64) as u32
    };
    k + (a + a_count - phase) % a_count
}

/// Every observation unit `(w, k)` of a clocked-tree run is reflected at
/// every agent `u` by round `k + dist_T(w, u) + 2A`: either folded into `u`'s
/// confidence state, or made moot because `u` dropped the unit's action by
/// then. Along pure ancestor/descendant paths an incorporated unit must
/// arrive at exactly the slot-aligned round.
pub fn check_delay_lowcomm(
    trace: &RunTrace,
    prov: &ProvenanceLog,
    tree: &SpanningTree,
) -> Vec<Violation> {
    let a_count = trace.a_count as u32;
    let mut out = Vec::new();
    for i in 0..prov.units.len() {
        let w = prov.units.creator[i] as usize;
        let k = prov.units.round[i];
        let a = prov.units.action[i];
        for u in 0..trace.m {
            let d = tree.tree_dist[w][u];
            let deadline = k + d + 2 * a_count;
            match prov.incorporated[u][i] {
                Some(s) => {
                    if s > deadline {
                        out.push(Violation {
                            check: "delay",
                            t: s,
                            agent: u,
                            detail: format!(
                                "unit ({w}, {k}, action {a}) folded at {s} > deadline {deadline}"
                            ),
                        });
                    }
                    let expected = if u == w {
                        // Own plays wait exactly one round.
                        Some(k + 1)
                    } else if tree.is_ancestor(u, w) {
                        Some(first_slot(k, tree.depth[w], a, a_count, true) + d)
                    } else if tree.is_ancestor(w, u) {
                        Some(first_slot(k, tree.depth[w], a, a_count, false) + d)
                    } else {
                        None
                    };
                    if let Some(exp) = expected {
                        if s != exp {
                            out.push(Violation {
                                check: "delay-exact",
                                t: s,
                                agent: u,
                                detail: format!(
                                    "unit ({w}, {k}, action {a}) folded at {s}, slot arithmetic says {exp}"
                                ),
                            });
                        }
                    }
                }
                None => {
                    if deadline <= trace.t_horizon {
                        let dropped =
                            (1..=deadline).any(|t| !trace.is_active(t, u, a));
                        if !dropped {
                            out.push(Violation {
                                check: "delay",
                                t: deadline,
                                agent: u,
                                detail: format!(
                                    "unit ({w}, {k}, action {a}) never folded, \
                                     action still active at deadline {deadline}"
                                ),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Pointwise comparison of two traces of identical shape: actions and active
/// sets always, per-round sent bits and confidence snapshots on request.
pub fn compare_traces(
    left: &RunTrace,
    right: &RunTrace,
    check_msg: bool,
    check_conf: bool,
) -> Vec<Violation> {
    if (left.m, left.t_horizon, left.a_count) != (right.m, right.t_horizon, right.a_count) {
        return vec![Violation {
            check: "compare",
            t: 0,
            agent: 0,
            detail: format!(
                "shape mismatch: ({}, {}, {}) vs ({}, {}, {})",
                left.m, left.t_horizon, left.a_count, right.m, right.t_horizon, right.a_count
            ),
        }];
    }
    let mut out = Vec::new();
    for t in 1..=left.t_horizon {
        for u in 0..left.m {
            if left.action_at(t, u) != right.action_at(t, u) {
                out.push(Violation {
                    check: "compare",
                    t,
                    agent: u,
                    detail: format!(
                        "action {} vs {}",
                        left.action_at(t, u),
                        right.action_at(t, u)
                    ),
                });
            }
            if left.active_vec(t, u) != right.active_vec(t, u) {
                out.push(Violation {
                    check: "compare",
                    t,
                    agent: u,
                    detail: format!(
                        "active {:?} vs {:?}",
                        left.active_vec(t, u),
                        right.active_vec(t, u)
                    ),
                });
            }
            if check_msg && left.msg_bits_at(t, u) != right.msg_bits_at(t, u) {
                out.push(Violation {
                    check: "compare",
                    t,
                    agent: u,
                    detail: format!(
                        "sent bits {} vs {}",
                        left.msg_bits_at(t, u),
                        right.msg_bits_at(t, u)
                    ),
                });
            }
            if check_conf {
                for a in 0..left.a_count as u32 {
                    if left.n_at(t, u, a) != right.n_at(t, u, a) {
                        out.push(Violation {
                            check: "compare",
                            t,
                            agent: u,
                            detail: format!(
                                "n[{a}] = {} vs {}",
                                left.n_at(t, u, a),
                                right.n_at(t, u, a)
                            ),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Runs the tree-aggregation policy and the flooding policy restricted to the
/// same spanning tree, seed by seed, and reports every divergence in played
/// actions, active sets, or observation counts. They implement the same
/// information flow, so any difference is a bug.
pub fn check_equivalence_restricted_detailed(
    cfg: &SimConfig,
) -> Result<Vec<Violation>, SimError> {
    let mut rcfg = cfg.clone();
    rcfg.policy = super::PolicyKind::Restricted;
    rcfg.fast_path = false;
    rcfg.capture_trace = true;
    rcfg.capture_conf = true;
    let env = rcfg.prepare()?;
    let tree = env.tree.as_ref().expect("restricted env carries a tree");
    let tree_graph = CommGraph::from_edges(env.graph.m, &tree.edges())?;
    let twin_env = super::Prepared {
        graph: tree_graph,
        tree: None,
        instance: env.instance.clone(),
        iota: env.iota,
        sus_act_delay: env.sus_act_delay,
    };
    let mut out = Vec::new();
    for &seed in &rcfg.seeds {
        let restricted = super::engine::restricted(&rcfg, &env, seed);
        let flooding = super::engine::coop_se(&rcfg, &twin_env, seed);
        out.extend(compare_traces(
            restricted.trace.as_ref().unwrap(),
            flooding.trace.as_ref().unwrap(),
            false,
            true,
        ));
    }
    Ok(out)
}

/// [`check_equivalence_restricted_detailed`] as a plain verdict.
pub fn check_equivalence_restricted(cfg: &SimConfig) -> Result<bool, SimError> {
    Ok(check_equivalence_restricted_detailed(cfg)?.is_empty())
}

/// Counts of failed concentration events in one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoodEventReport {
    /// (agent, action) pairs whose confidence interval ever missed the mean.
    pub g1: usize,
    /// (agent, action) pairs that ever fell below half their expected
    /// information.
    pub g2: usize,
    /// (agent, action) pairs ever played more than twice their expected
    /// count plus slack.
    pub g3: usize,
}

impl GoodEventReport {
    pub fn total(&self) -> usize {
        self.g1 + self.g2 + self.g3
    }
}

/// Confidence intervals cover the true means: for every round, agent, and
/// action, `μ ∈ [μ̂ − λ, μ̂ + λ]` with `λ = sqrt(2ι/(n∨1))`. Reports the first
/// offending round per (agent, action).
pub fn check_g1(trace: &RunTrace, instance: &BanditInstance, iota: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for u in 0..trace.m {
        'action: for a in 0..trace.a_count as u32 {
            let mu_true = instance.means[a as usize];
            for t in 1..=trace.t_horizon {
                let n = trace.n_at(t, u, a).max(1) as f64;
                let mu_hat = trace.r_at(t, u, a) / n;
                let lambda = (2.0 * iota / n).sqrt();
                if mu_true > mu_hat + lambda + 1e-12 || mu_true < mu_hat - lambda - 1e-12 {
                    out.push(Violation {
                        check: "g1",
                        t,
                        agent: u,
                        detail: format!(
                            "action {a}: mean {mu_true} outside [{:.4}, {:.4}]",
                            mu_hat - lambda,
                            mu_hat + lambda
                        ),
                    });
                    continue 'action;
                }
            }
        }
    }
    out
}

/// Information lower bound: an active action's sample count stays above half
/// the information collectible in principle, `n ≥ S/2 − 2ι`, where `S` sums
/// every agent's cumulative play probability for the action over the rounds
/// old enough to have arrived (`dist(u, w)` rounds ago, own plays one round).
/// Reports the first offending round per (agent, action).
pub fn check_g2(trace: &RunTrace, dist: &[Vec<u32>], iota: f64) -> Vec<Violation> {
    let m = trace.m;
    let a_count = trace.a_count;
    let t1 = trace.t_horizon as usize + 1;
    // prefix[w][a*t1 + k] = P_w(a, k) = Σ_{k'≤k} 1/|active_w(k')|·[a active].
    let mut prefix = vec![vec![0.0f64; a_count * t1]; m];
    for (w, pw) in prefix.iter_mut().enumerate() {
        for k in 1..=trace.t_horizon {
            let inv = 1.0 / trace.active_size(k, w) as f64;
            for a in 0..a_count {
                let p = if trace.is_active(k, w, a as u32) { inv } else { 0.0 };
                pw[a * t1 + k as usize] = pw[a * t1 + k as usize - 1] + p;
            }
        }
    }
    let mut out = Vec::new();
    for u in 0..m {
        'action: for a in 0..a_count {
            for t in 1..=trace.t_horizon {
                if !trace.is_active(t, u, a as u32) {
                    continue;
                }
                let mut s = 0.0;
                for (w, pw) in prefix.iter().enumerate() {
                    let d = dist[u][w].max(1);
                    if t > d {
                        s += pw[a * t1 + (t - d) as usize];
                    }
                }
                let bound = 0.5 * s - 2.0 * iota;
                if (trace.n_at(t, u, a as u32) as f64) < bound - 1e-9 {
                    out.push(Violation {
                        check: "g2",
                        t,
                        agent: u,
                        detail: format!(
                            "action {a}: n = {} < {bound:.3}",
                            trace.n_at(t, u, a as u32)
                        ),
                    });
                    continue 'action;
                }
            }
        }
    }
    out
}

/// Play-count upper bound: no agent plays an action more than twice its
/// cumulative play probability plus slack, `b ≤ 2·P + 12ι`. Reports the
/// first offending round per (agent, action).
pub fn check_g3(trace: &RunTrace, iota: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for u in 0..trace.m {
        let mut b = vec![0u64; trace.a_count];
        let mut p = vec![0.0f64; trace.a_count];
        let mut violated = vec![false; trace.a_count];
        for t in 1..=trace.t_horizon {
            let inv = 1.0 / trace.active_size(t, u) as f64;
            for a in 0..trace.a_count {
                if trace.is_active(t, u, a as u32) {
                    p[a] += inv;
                }
            }
            let played = trace.action_at(t, u) as usize;
            b[played] += 1;
            for a in 0..trace.a_count {
                if !violated[a] && b[a] as f64 > 2.0 * p[a] + 12.0 * iota + 1e-9 {
                    violated[a] = true;
                    out.push(Violation {
                        check: "g3",
                        t,
                        agent: u,
                        detail: format!("action {a}: played {} > {:.3}", b[a], 2.0 * p[a] + 12.0 * iota),
                    });
                }
            }
        }
    }
    out
}

/// Runs all three concentration checks and returns their violation counts.
pub fn check_good_events(
    trace: &RunTrace,
    instance: &BanditInstance,
    dist: &[Vec<u32>],
    iota: f64,
) -> GoodEventReport {
    GoodEventReport {
        g1: check_g1(trace, instance, iota).len(),
        g2: check_g2(trace, dist, iota).len(),
        g3: check_g3(trace, iota).len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_trace(m: usize, t_horizon: u32, a_count: usize) -> RunTrace {
        let cells = m * t_horizon as usize;
        RunTrace {
            m,
            t_horizon,
            a_count,
            actions: vec![0; cells],
            active_words: 1,
            active: vec![(1u64 << a_count) - 1; cells],
            msg_bits: vec![0; cells],
            eliminations: vec![],
            conf_n: None,
            conf_r: None,
        }
    }

    #[test]
    fn monotone_flags_regrowth_and_emptiness() {
        let mut trace = flat_trace(1, 3, 2);
        trace.active = vec![0b11, 0b01, 0b11]; // regrows at t=3
        let v = check_active_monotone(&trace);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].t, v[0].agent), (3, 0));

        trace.active = vec![0b11, 0b00, 0b00];
        let v = check_active_monotone(&trace);
        assert!(v.iter().any(|x| x.detail.contains("empty")));
    }

    #[test]
    fn lockstep_flags_divergence() {
        let mut trace = flat_trace(2, 2, 2);
        assert!(check_lockstep(&trace).is_empty());
        trace.actions[2] = 0; // t=2: agent 0
        trace.actions[3] = 1; // t=2: agent 1 differs
        let v = check_lockstep(&trace);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].t, v[0].agent), (2, 1));
    }

    #[test]
    fn first_slot_phase_arithmetic() {
        // depth 2, A = 3, parent-ward: phase(t) = (t+2) % 3 hits action 0 at
        // t = 1, 4, 7, ...
        assert_eq!(first_slot(1, 2, 0, 3, true), 1);
        assert_eq!(first_slot(2, 2, 0, 3, true), 4);
        // child-ward: phase(t) = (t-2) mod 3 hits action 1 at t = 3, 6, ...
        assert_eq!(first_slot(1, 2, 1, 3, false), 3);
        assert_eq!(first_slot(3, 2, 1, 3, false), 3);
        assert_eq!(first_slot(4, 2, 1, 3, false), 6);
    }

    #[test]
    fn compare_reports_shape_mismatch() {
        let a = flat_trace(1, 2, 2);
        let b = flat_trace(2, 2, 2);
        let v = compare_traces(&a, &b, false, false);
        assert_eq!(v.len(), 1);
        assert!(v[0].detail.contains("shape"));
    }
}
