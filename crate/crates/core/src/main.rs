use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use eonsim::config::{validate_config, Config, RawConfig};
use eonsim::modulation::ModulationFormat;
use eonsim::network::Network;
use eonsim::schemes::Scheme;
use eonsim::simulator::{self, RunConfig, WorkloadConfig};
use eonsim::topology::{parse_topology, PhysicalTopology};
use eonsim::SimError;

#[derive(Parser)]
#[command(name = "eonsim", version, about = "Elastic optical network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a load sweep for one or more schemes and write a results table.
    Simulate(SimulateArgs),
    /// Print a summary of a topology file.
    Inspect {
        #[arg(long)]
        topology: PathBuf,
    },
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Topology JSON file.
    #[arg(long)]
    topology: PathBuf,
    /// dmmas, dmmas-womhc, amms, madap, eems, a comma-separated list, or all.
    #[arg(long, default_value = "all")]
    scheme: String,
    /// Loads in Erlangs: start:end:step or a comma-separated list.
    #[arg(long)]
    loads: String,
    /// Replications per cell (default 5).
    #[arg(long)]
    reps: Option<usize>,
    /// CSV output file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the rows as JSON to this file.
    #[arg(long)]
    json: Option<PathBuf>,
    /// TOML configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Requests per replication.
    #[arg(long)]
    requests: Option<usize>,
    /// Seed of the first replication; replication i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Leading requests left out of blocking, hop and format statistics.
    #[arg(long)]
    warmup: Option<usize>,
    /// Write per-request decision traces of the first replication (JSON lines).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write per-lightpath energy rows of the first replication (CSV).
    #[arg(long)]
    ledger: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::InvalidRequest(_) | SimError::Topology(_) | SimError::Modulation(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Internal(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Row {
    scheme: String,
    load: f64,
    metric: String,
    mean: f64,
    ci_halfwidth: f64,
    reps: usize,
    seed_base: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Inspect { topology } => inspect(&topology),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load_topology(path: &Path) -> Result<PhysicalTopology, Failure> {
    parse_topology(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>, Failure> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(Scheme::ALL.to_vec());
    }
    let mut v = text
        .split(',')
        .map(|s| s.trim().parse::<Scheme>().map_err(Failure::Usage))
        .collect::<Result<Vec<_>, _>>()?;
    v.sort();
    v.dedup();
    Ok(v)
}

fn parse_loads(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("bad load specification '{text}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let loads = if text.contains(':') {
        let parts: Vec<_> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| a + i as f64 * step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if loads.is_empty() || loads.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Failure::Usage(format!("loads must be positive: '{text}'")));
    }
    Ok(loads)
}

fn settings(args: &SimulateArgs) -> Result<Config, Failure> {
    let mut raw = match &args.config {
        Some(p) => RawConfig::parse(&read(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => RawConfig::default(),
    };
    let to_i64 = |v: usize| i64::try_from(v).unwrap_or(i64::MAX);
    if let Some(r) = args.reps {
        raw.reps = Some(to_i64(r));
    }
    if let Some(r) = args.requests {
        raw.requests = Some(to_i64(r));
    }
    if let Some(w) = args.warmup {
        raw.warmup_requests = Some(to_i64(w));
    }
    if let Some(s) = args.seed {
        raw.seed = Some(s);
    }
    Ok(validate_config(&raw)?)
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let cfg = settings(args)?;
    let schemes = parse_schemes(&args.scheme)?;
    let loads = parse_loads(&args.loads)?;
    let topology = load_topology(&args.topology)?;
    let net = Network::new(topology, cfg.network.clone())?;

    let cells: Vec<(Scheme, f64)> = schemes
        .iter()
        .flat_map(|&s| loads.iter().map(move |&l| (s, l)))
        .collect();
    let run_cfg = |scheme: Scheme, load: f64| {
        let mut workload = WorkloadConfig::new(load, cfg.requests, cfg.seed);
        workload.mean_holding_s = cfg.mean_holding_s;
        RunConfig {
            scheme,
            params: cfg.params,
            workload,
            warmup_requests: cfg.warmup_requests,
            record_traces: false,
            record_log: false,
        }
    };
    let results = cells
        .par_iter()
        .map(|&(scheme, load)| {
            let r = simulator::replicate(&net, &run_cfg(scheme, load), cfg.reps)?;
            eprintln!(
                "{scheme} load {load}: bbr {:.6} hops {:.3}",
                r.get("bbr").map_or(0.0, |s| s.mean),
                r.get("avg_virtual_hops").map_or(0.0, |s| s.mean)
            );
            Ok::<_, SimError>((scheme, load, r))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for (scheme, load, r) in &results {
        for (metric, s) in &r.summary {
            rows.push((*scheme, *load, metric_rank(metric), Row {
                scheme: scheme.name().to_string(),
                load: *load,
                metric: metric.clone(),
                mean: s.mean,
                ci_halfwidth: s.ci_halfwidth,
                reps: s.n,
                seed_base: cfg.seed,
            }));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let rows: Vec<Row> = rows.into_iter().map(|r| r.3).collect();

    let mut csv = String::from("scheme,load,metric,mean,ci_halfwidth,reps,seed_base\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.scheme, r.load, r.metric, r.mean, r.ci_halfwidth, r.reps, r.seed_base
        );
    }
    write(&args.out, &csv)?;
    if let Some(p) = &args.json {
        let text = serde_json::to_string_pretty(&rows).map_err(|e| Failure::Internal(e.to_string()))?;
        write(p, &(text + "\n"))?;
    }

    if args.trace.is_some() || args.ledger.is_some() {
        let mut traces = String::new();
        let mut ledger = String::new();
        for &(scheme, load) in &cells {
            let mut c = run_cfg(scheme, load);
            c.record_traces = args.trace.is_some();
            let out = simulator::run(&net, &c)?;
            for t in &out.traces {
                let line = serde_json::json!({ "scheme": scheme.name(), "load": load, "trace": t });
                let _ = writeln!(traces, "{line}");
            }
            let table = out.ledger.to_csv();
            let mut lines = table.lines();
            let header = lines.next().unwrap_or_default();
            if ledger.is_empty() {
                let _ = writeln!(ledger, "scheme,load,{header}");
            }
            for l in lines {
                let _ = writeln!(ledger, "{},{load},{l}", scheme.name());
            }
        }
        if let Some(p) = &args.trace {
            write(p, &traces)?;
        }
        if let Some(p) = &args.ledger {
            write(p, &ledger)?;
        }
    }
    Ok(())
}

fn metric_rank(name: &str) -> usize {
    const FIXED: [&str; 5] = ["bbr", "avg_virtual_hops", "avg_f_ext", "en_eff", "eee"];
    FIXED
        .iter()
        .position(|&m| m == name)
        .or_else(|| {
            ModulationFormat::ALL
                .iter()
                .position(|m| name == format!("mod_usage_{m}"))
                .map(|i| FIXED.len() + i)
        })
        .unwrap_or(usize::MAX)
}

fn inspect(path: &Path) -> Result<(), Failure> {
    let topo = load_topology(path)?;
    let table = topo.all_pairs_shortest();
    println!("name: {}", topo.name());
    println!("nodes: {}", topo.node_count());
    println!("links: {}", topo.links().len());
    let lengths: Vec<f64> = topo.links().iter().map(|l| l.length_km).collect();
    let min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let max = lengths.iter().copied().fold(0.0, f64::max);
    println!("link km: min {min} max {max}");
    println!("diameter km: {}", table.diameter_km());
    for m in ModulationFormat::ALL {
        let mt = eonsim::topology::ModulationTopology::from_table(&table, m);
        println!("{m} reach {} km: {} directed edges", m.reach_km(), mt.edge_count());
    }
    Ok(())
}
