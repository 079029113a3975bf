//! CSV and JSON artifact writers. Field names are shared between the two
//! formats, and both serializers are deterministic, so identical runs
//! produce byte-identical files.

use std::io::Write;

use serde::Serialize;

use crate::bandit::BanditInstance;

use super::{Metrics, RunTrace, SimConfig};

/// One (round, agent) record of a single seeded run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub round: u32,
    pub agent: u32,
    pub action: u32,
    /// Cumulative pseudo-regret of this agent through this round.
    pub regret_cum: f64,
    /// Cumulative bits this agent has sent through this round.
    pub msg_bits_total: u64,
}

/// Flattens a captured trace into output rows, round-major.
pub fn run_rows(trace: &RunTrace, instance: &BanditInstance) -> Vec<RunRow> {
    let gaps = instance.gaps();
    let mut regret = vec![0.0f64; trace.m];
    let mut bits = vec![0u64; trace.m];
    let mut rows = Vec::with_capacity(trace.m * trace.t_horizon as usize);
    for t in 1..=trace.t_horizon {
        for u in 0..trace.m {
            let a = trace.action_at(t, u);
            regret[u] += gaps[a as usize];
            bits[u] += trace.msg_bits_at(t, u);
            rows.push(RunRow {
                round: t,
                agent: u as u32,
                action: a,
                regret_cum: regret[u],
                msg_bits_total: bits[u],
            });
        }
    }
    rows
}

pub fn write_run_csv<W: Write>(
    w: W,
    trace: &RunTrace,
    instance: &BanditInstance,
) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in run_rows(trace, instance) {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_run_json<W: Write>(
    w: W,
    trace: &RunTrace,
    instance: &BanditInstance,
) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(w, &run_rows(trace, instance))
}

/// One sweep cell's aggregate record.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub policy: String,
    pub topology: String,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "T")]
    pub t: u32,
    pub seed_count: usize,
    pub mean_max_regret: f64,
    /// Standard error of the max-over-agents regret across seeds.
    pub stderr: f64,
    /// Largest single message observed over all seeds, in bits.
    pub max_msg_bits: u64,
    /// Checker violations when the cell was verified; 0 for plain sweeps.
    pub checker_violations: u64,
}

pub fn sweep_row(cfg: &SimConfig, metrics: &Metrics, checker_violations: u64) -> SweepRow {
    SweepRow {
        policy: cfg.policy.to_string(),
        topology: cfg.topology.kind.to_string(),
        m: cfg.topology.m,
        a: cfg.instance.means.len(),
        t: cfg.t_horizon,
        seed_count: cfg.seeds.len(),
        mean_max_regret: metrics.mean_max_regret,
        stderr: metrics.stderr_max_regret,
        max_msg_bits: metrics.per_seed.iter().map(|s| s.max_message_bits).max().unwrap_or(0),
        checker_violations,
    }
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_sweep_json<W: Write>(w: W, rows: &[SweepRow]) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(w, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::{make_instance, RewardKind};

    fn tiny_trace() -> RunTrace {
        RunTrace {
            m: 2,
            t_horizon: 2,
            a_count: 2,
            actions: vec![0, 1, 0, 0],
            active_words: 1,
            active: vec![0b11; 4],
            msg_bits: vec![10, 20, 30, 40],
            eliminations: vec![],
            conf_n: None,
            conf_r: None,
        }
    }

    #[test]
    fn run_csv_accumulates_per_agent() {
        let instance = make_instance(vec![0.75, 0.25], RewardKind::Deterministic).unwrap();
        let mut buf = Vec::new();
        write_run_csv(&mut buf, &tiny_trace(), &instance).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "round,agent,action,regret_cum,msg_bits_total");
        assert_eq!(lines[1], "1,0,0,0.0,10");
        assert_eq!(lines[2], "1,1,1,0.5,20");
        assert_eq!(lines[3], "2,0,0,0.0,40");
        assert_eq!(lines[4], "2,1,0,0.5,60");
    }

    #[test]
    fn sweep_csv_header_and_json_mirror_field_names() {
        use crate::graph::Topology;
        use crate::sim::{InstanceSpec, PolicyKind, SeedMetrics, TopologySpec};
        let cfg = SimConfig {
            policy: PolicyKind::CoopSe,
            topology: TopologySpec { kind: Topology::Complete, m: 4, graph_seed: 0 },
            instance: InstanceSpec { means: vec![0.6, 0.4], kind: RewardKind::Bernoulli },
            t_horizon: 100,
            seeds: vec![1, 2],
            fast_path: true,
            capture_trace: false,
            capture_conf: false,
        };
        let seed = |s: u64, bits: u64| SeedMetrics {
            seed: s,
            per_agent_regret: vec![1.0; 4],
            max_regret: 1.0,
            total_msg_bits: 100,
            max_message_bits: bits,
            max_round_bits: 50,
            mean_round_bits: 1.0,
            own_eliminations: 0,
            final_active_min: 2,
            final_active_max: 2,
            empty_active_skips: 0,
        };
        let metrics = Metrics {
            per_seed: vec![seed(1, 33), seed(2, 44)],
            mean_max_regret: 1.0,
            stderr_max_regret: 0.0,
        };
        let row = sweep_row(&cfg, &metrics, 0);
        assert_eq!(row.max_msg_bits, 44);

        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[row.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "policy,topology,m,A,T,seed_count,mean_max_regret,stderr,max_msg_bits,checker_violations"
        );
        assert!(text.lines().nth(1).unwrap().starts_with("coop-se,complete,4,2,100,2,"));

        let mut jbuf = Vec::new();
        write_sweep_json(&mut jbuf, &[row]).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&jbuf).unwrap();
        let obj = &parsed[0];
        for key in [
            "policy",
            "topology",
            "m",
            "A",
            "T",
            "seed_count",
            "mean_max_regret",
            "stderr",
            "max_msg_bits",
            "checker_violations",
        ] {
            assert!(obj.get(key).is_some(), "missing field {key}");
        }
    }
}
