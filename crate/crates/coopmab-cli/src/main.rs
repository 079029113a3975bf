//! Command-line front end for the simulator: single runs with CSV/JSON
//! artifacts, grid sweeps, the deterministic checker suite, and the
//! hard-instance floor experiment.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 when a checker or
//! experiment verdict fails.

use std::collections::HashMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use coopmab::bandit::{make_instance, RewardKind};
use coopmab::graph::Topology;
use coopmab::sim::checkers::{
    check_active_monotone, check_delay_lowcomm, check_equivalence_restricted_detailed,
    check_lockstep, check_stage_arithmetic, compare_traces,
};
use coopmab::sim::output::{sweep_row, write_run_csv, write_run_json, write_sweep_csv, write_sweep_json};
use coopmab::sim::{
    run, run_fast_coop_se, run_lower_bound, sweep, InstanceSpec, PolicyKind, RunTrace,
    SimConfig, TopologySpec,
};

#[derive(Parser)]
#[command(name = "coopmab", version, about = "Cooperative multi-armed bandits on communication graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration; with --out, write per-seed CSV/JSON files.
    Run(CommonArgs),
    /// Simulate a grid over comma-separated --topology and --m values and
    /// write an aggregate table (stdout, or sweep.csv/sweep.json in --out).
    Sweep(CommonArgs),
    /// Run every deterministic checker on the given graph and instance.
    Verify(CommonArgs),
    /// Hard-instance experiment: line with m = T agents, one hidden payoff-1
    /// action among A-1 zeros, middle-agent regret against the proven floor.
    LowerBound(LowerBoundArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Policy: coop-se, sus-act, restricted, low-comm, single-se.
    #[arg(long)]
    policy: Option<String>,
    /// Topology: line (alias: path), cycle, star, grid, complete,
    /// random-connected. Sweeps accept a comma-separated list.
    #[arg(long)]
    topology: Option<String>,
    /// Agent count. Sweeps accept a comma-separated list.
    #[arg(long)]
    m: Option<String>,
    /// Action count; means default to one action at 0.5+gap/2 and the rest
    /// at 0.5-gap/2.
    #[arg(long = "A")]
    a: Option<usize>,
    /// Horizon in rounds.
    #[arg(long = "T")]
    t: Option<u32>,
    /// Comma-separated Bernoulli means in [0,1]; conflicts with --gap.
    #[arg(long)]
    means: Option<String>,
    /// Uniform-gap shorthand (default 0.2 when --means is absent).
    #[arg(long)]
    gap: Option<f64>,
    /// Seed count; the masters are master-seed..master-seed+N.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Seed for randomized graph families.
    #[arg(long)]
    graph_seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Capture per-round traces (implied by --out on `run`).
    #[arg(long)]
    trace: bool,
    /// Use the message-free fast path (coop-se only).
    #[arg(long)]
    fast: bool,
    /// Sweep parallelism (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Flat key=value file supplying defaults for any of these flags, same
    /// key names; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct LowerBoundArgs {
    /// Action count; the floor 0.99*(sqrt(A)/20 - 1) needs sqrt(A) > 20.
    #[arg(long = "A", default_value_t = 441)]
    a: usize,
    /// Line length and horizon (m = T).
    #[arg(long, default_value_t = 60)]
    size: u32,
    /// Number of optimal-action draws.
    #[arg(long, default_value_t = 200)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
        Command::LowerBound(args) => cmd_lower_bound(args),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Fully resolved common options: config-file values merged under flags.
struct Resolved {
    policy: PolicyKind,
    topologies: Vec<Topology>,
    ms: Vec<usize>,
    means: Vec<f64>,
    t: u32,
    seeds: Vec<u64>,
    graph_seed: u64,
    out: Option<PathBuf>,
    trace: bool,
    fast: bool,
    jobs: Option<usize>,
}

fn read_config_file(path: &Path) -> Result<HashMap<String, String>, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key=value, got `{line}`", i + 1));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn fill<T: FromStr>(
    slot: &mut Option<T>,
    file: &HashMap<String, String>,
    key: &str,
) -> Result<(), String>
where
    T::Err: std::fmt::Display,
{
    if slot.is_none() {
        if let Some(raw) = file.get(key) {
            *slot = Some(raw.parse().map_err(|e| format!("config key {key}: {e}"))?);
        }
    }
    Ok(())
}

fn gap_means(a: usize, gap: f64) -> Vec<f64> {
    let mut v = vec![0.5 - gap / 2.0; a];
    v[0] = 0.5 + gap / 2.0;
    v
}

fn resolve(mut args: CommonArgs) -> Result<Resolved, String> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => HashMap::new(),
    };
    fill(&mut args.policy, &file, "policy")?;
    fill(&mut args.topology, &file, "topology")?;
    fill(&mut args.m, &file, "m")?;
    fill(&mut args.a, &file, "A")?;
    fill(&mut args.t, &file, "T")?;
    fill(&mut args.means, &file, "means")?;
    fill(&mut args.gap, &file, "gap")?;
    fill(&mut args.seeds, &file, "seeds")?;
    fill(&mut args.master_seed, &file, "master-seed")?;
    fill(&mut args.graph_seed, &file, "graph-seed")?;
    fill(&mut args.jobs, &file, "jobs")?;
    if args.out.is_none() {
        args.out = file.get("out").map(PathBuf::from);
    }
    let file_bool = |key: &str| -> Result<bool, String> {
        match file.get(key) {
            Some(raw) => raw.parse().map_err(|_| format!("config key {key}: expected true/false")),
            None => Ok(false),
        }
    };
    let trace = args.trace || file_bool("trace")?;
    let fast = args.fast || file_bool("fast")?;

    let policy: PolicyKind =
        args.policy.as_deref().unwrap_or("coop-se").parse().map_err(|e| format!("--policy: {e}"))?;
    let topologies = args
        .topology
        .ok_or("missing --topology")?
        .split(',')
        .map(|s| s.trim().parse::<Topology>().map_err(|e| format!("--topology: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let ms = args
        .m
        .ok_or("missing --m")?
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("--m: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let t = args.t.ok_or("missing --T")?;

    let means = match (&args.means, args.gap) {
        (Some(_), Some(_)) => return Err("--means conflicts with --gap".into()),
        (Some(list), None) => {
            let means = list
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| format!("--means: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(a) = args.a {
                if a != means.len() {
                    return Err(format!("--A {} does not match {} means", a, means.len()));
                }
            }
            means
        }
        (None, gap) => {
            let a = args.a.ok_or("need --A (or explicit --means)")?;
            let gap = gap.unwrap_or(0.2);
            if !(0.0..=1.0).contains(&gap) {
                return Err(format!("--gap must be in [0,1], got {gap}"));
            }
            gap_means(a, gap)
        }
    };

    let n = args.seeds.unwrap_or(1);
    if n == 0 {
        return Err("--seeds must be at least 1".into());
    }
    let master = args.master_seed.unwrap_or(0);
    let seeds = (master..master + n as u64).collect();

    Ok(Resolved {
        policy,
        topologies,
        ms,
        means,
        t,
        seeds,
        graph_seed: args.graph_seed.unwrap_or(0),
        out: args.out,
        trace,
        fast,
        jobs: args.jobs,
    })
}

impl Resolved {
    fn single(&self, verb: &str) -> Result<(Topology, usize), String> {
        if self.topologies.len() != 1 || self.ms.len() != 1 {
            return Err(format!("{verb} takes a single --topology and --m"));
        }
        Ok((self.topologies[0], self.ms[0]))
    }

    fn sim_config(&self, policy: PolicyKind, kind: Topology, m: usize, capture: bool) -> SimConfig {
        SimConfig {
            policy,
            topology: TopologySpec { kind, m, graph_seed: self.graph_seed },
            instance: InstanceSpec { means: self.means.clone(), kind: RewardKind::Bernoulli },
            t_horizon: self.t,
            seeds: self.seeds.clone(),
            fast_path: self.fast,
            capture_trace: capture,
            capture_conf: capture,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, String> {
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?,
    ))
}

fn cmd_run(args: CommonArgs) -> Result<ExitCode, String> {
    let r = resolve(args)?;
    let (kind, m) = r.single("run")?;
    let capture = r.trace || r.out.is_some();
    let cfg = r.sim_config(r.policy, kind, m, capture);
    let result = run(&cfg).map_err(|e| e.to_string())?;
    for s in &result.metrics.per_seed {
        println!(
            "seed {}: max regret {:.4}, total msg bits {}, eliminations {}",
            s.seed, s.max_regret, s.total_msg_bits, s.own_eliminations
        );
    }
    println!(
        "mean max regret {:.4} (stderr {:.4}) over {} seeds",
        result.metrics.mean_max_regret,
        result.metrics.stderr_max_regret,
        cfg.seeds.len()
    );
    if let Some(dir) = &r.out {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let instance =
            make_instance(cfg.instance.means.clone(), cfg.instance.kind).map_err(|e| e.to_string())?;
        for sr in &result.runs {
            let trace = sr.trace.as_ref().expect("trace captured for --out");
            let base = dir.join(format!("run-seed{}", sr.metrics.seed));
            write_run_csv(create(&base.with_extension("csv"))?, trace, &instance)
                .map_err(|e| e.to_string())?;
            write_run_json(create(&base.with_extension("json"))?, trace, &instance)
                .map_err(|e| e.to_string())?;
        }
        println!("wrote {} seed file pairs to {}", result.runs.len(), dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: CommonArgs) -> Result<ExitCode, String> {
    let r = resolve(args)?;
    let mut configs = Vec::new();
    for &kind in &r.topologies {
        for &m in &r.ms {
            configs.push(r.sim_config(r.policy, kind, m, false));
        }
    }
    let cells = sweep(&configs, r.jobs);
    let mut rows = Vec::new();
    let mut failures = 0;
    for cell in &cells {
        match &cell.result {
            Ok(metrics) => rows.push(sweep_row(&cell.config, metrics, 0)),
            Err(e) => {
                failures += 1;
                eprintln!(
                    "cell {} m={} failed: {e}",
                    cell.config.topology.kind, cell.config.topology.m
                );
            }
        }
    }
    match &r.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
            write_sweep_csv(create(&dir.join("sweep.csv"))?, &rows).map_err(|e| e.to_string())?;
            write_sweep_json(create(&dir.join("sweep.json"))?, &rows).map_err(|e| e.to_string())?;
            println!("wrote {} rows to {}", rows.len(), dir.display());
        }
        None => {
            write_sweep_csv(std::io::stdout().lock(), &rows).map_err(|e| e.to_string())?;
        }
    }
    Ok(if failures > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_verify(args: CommonArgs) -> Result<ExitCode, String> {
    let r = resolve(args)?;
    let (kind, m) = r.single("verify")?;
    let mut total = 0usize;
    let mut structural: Vec<RunTrace> = Vec::new();
    let report = |name: &str, violations: usize, total: &mut usize| {
        println!("checker {name}: {violations} violations");
        *total += violations;
    };

    // Flooding fast path against explicit message passing.
    let coop = r.sim_config(PolicyKind::CoopSe, kind, m, true);
    let explicit = run(&coop).map_err(|e| e.to_string())?;
    let fast = run_fast_coop_se(&coop).map_err(|e| e.to_string())?;
    let mut v = 0;
    for (e, f) in explicit.runs.iter().zip(&fast.runs) {
        v += compare_traces(e.trace.as_ref().unwrap(), f.trace.as_ref().unwrap(), true, true).len();
    }
    report("fast-path equivalence", v, &mut total);
    structural.extend(explicit.runs.into_iter().filter_map(|sr| sr.trace));

    // Tree aggregation against flooding on the same tree.
    let restricted = r.sim_config(PolicyKind::Restricted, kind, m, true);
    let v = check_equivalence_restricted_detailed(&restricted)
        .map_err(|e| e.to_string())?
        .len();
    report("restricted equivalence", v, &mut total);

    // Delayed lockstep.
    let sus = r.sim_config(PolicyKind::SusAct, kind, m, true);
    let sus_result = run(&sus).map_err(|e| e.to_string())?;
    let mut v = 0;
    for sr in &sus_result.runs {
        v += check_lockstep(sr.trace.as_ref().unwrap()).len();
    }
    report("sus-act lockstep", v, &mut total);
    structural.extend(sus_result.runs.into_iter().filter_map(|sr| sr.trace));

    // Clocked-tree delay bound.
    let low = r.sim_config(PolicyKind::LowComm, kind, m, true);
    let (_, tree) = low.graph_and_tree().map_err(|e| e.to_string())?;
    let tree = tree.expect("low-comm always builds a tree");
    let low_result = run(&low).map_err(|e| e.to_string())?;
    let mut v = 0;
    for sr in &low_result.runs {
        v += check_delay_lowcomm(
            sr.trace.as_ref().unwrap(),
            sr.provenance.as_ref().unwrap(),
            &tree,
        )
        .len();
    }
    report("low-comm delay", v, &mut total);
    structural.extend(low_result.runs.into_iter().filter_map(|sr| sr.trace));

    // Elimination structure on everything captured above.
    let mut v = 0;
    for trace in &structural {
        v += check_active_monotone(trace).len() + check_stage_arithmetic(trace).len();
    }
    report("stage structure", v, &mut total);

    println!("verify: {}", if total == 0 { "PASS" } else { "FAIL" });
    Ok(if total == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_lower_bound(args: LowerBoundArgs) -> Result<ExitCode, String> {
    let seeds: Vec<u64> = (args.master_seed..args.master_seed + args.seeds as u64).collect();
    let report = run_lower_bound(args.a, args.size, &seeds).map_err(|e| e.to_string())?;
    println!(
        "hard instance: A={}, line m=T={}, {} optimal-action draws",
        report.a,
        report.size,
        report.per_seed.len()
    );
    println!(
        "floor {:.4}, observed middle-agent mean regret {:.4} (stderr {:.4})",
        report.floor, report.mean_middle_regret, report.stderr
    );
    let pass = report.mean_middle_regret >= 0.9 * report.floor;
    println!("lower-bound: {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
