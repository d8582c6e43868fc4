//! Discrete-event engine, workload generation and replication statistics.

mod stats;
mod workload;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyLedger};
use crate::error::SimError;
use crate::modulation::ModulationFormat;
use crate::network::Network;
use crate::schemes::{self, DecisionTrace, Outcome, Request, Scheme, SchemeParams, SegmentRecord};
use crate::virtual_topology::{FlowId, LightpathId};

pub use stats::{t_interval, t_quantile_975, Summary};
pub use workload::{
    generate_workload, ArrivalEvent, WorkloadConfig, WorkloadGenerator, DEFAULT_BITRATES, DEFAULT_MEAN_HOLDING_S,
    DEFAULT_REQUESTS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub params: SchemeParams,
    pub workload: WorkloadConfig,
    /// Leading arrivals left out of blocking, hop and format statistics.
    pub warmup_requests: usize,
    pub record_traces: bool,
    pub record_log: bool,
}

impl RunConfig {
    pub fn new(scheme: Scheme, workload: WorkloadConfig) -> Self {
        Self {
            scheme,
            params: SchemeParams::default(),
            workload,
            warmup_requests: 0,
            record_traces: false,
            record_log: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub requests: usize,
    pub accepted: usize,
    pub offered_gbps: f64,
    pub blocked_gbps: f64,
    /// Blocked over offered bandwidth.
    pub bbr: f64,
    /// Lightpaths per accepted request.
    pub avg_virtual_hops: f64,
    /// Time-weighted mean of the network external fragmentation.
    pub avg_f_ext: f64,
    /// Share of newly established lightpaths per format, in percent.
    pub modulation_usage: BTreeMap<ModulationFormat, f64>,
    pub lightpaths_established: usize,
    pub total_energy_j: f64,
    pub total_data_bits: f64,
    /// Bits per joule.
    pub en_eff: f64,
    pub eee: f64,
    /// Wall-clock seconds spent in the run.
    pub runtime_s: f64,
}

impl RunMetrics {
    /// Metrics reported per replication, in output order.
    pub fn reported(&self) -> Vec<(String, f64)> {
        let mut v = vec![
            ("bbr".to_string(), self.bbr),
            ("avg_virtual_hops".to_string(), self.avg_virtual_hops),
            ("avg_f_ext".to_string(), self.avg_f_ext),
            ("en_eff".to_string(), self.en_eff),
            ("eee".to_string(), self.eee),
        ];
        for (m, share) in &self.modulation_usage {
            v.push((format!("mod_usage_{m}"), *share));
        }
        v
    }
}

/// What happened at one event, for offline checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LogEvent {
    Arrival {
        flow: FlowId,
        time: f64,
        holding_time: f64,
        request: Request,
        /// Segments of an accepted request.
        segments: Option<Vec<SegmentRecord>>,
    },
    Departure {
        flow: FlowId,
        time: f64,
        torn_down: Vec<LightpathId>,
    },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub traces: Vec<DecisionTrace>,
    pub log: Vec<LogEvent>,
    pub ledger: EnergyLedger,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Departure {
    time: f64,
    flow: FlowId,
}

impl Eq for Departure {}

impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.flow.cmp(&other.flow))
    }
}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time integral of a piecewise-constant signal.
#[derive(Debug, Default)]
struct TimeAverage {
    start: Option<f64>,
    last: f64,
    value: f64,
    integral: f64,
}

impl TimeAverage {
    fn advance(&mut self, t: f64) {
        if self.start.is_none() {
            self.start = Some(t);
        } else {
            self.integral += self.value * (t - self.last);
        }
        self.last = t;
    }

    fn mean(&self) -> f64 {
        match self.start {
            Some(s) if self.last > s => self.integral / (self.last - s),
            _ => 0.0,
        }
    }
}

/// Runs one replication with the workload drawn from `cfg`.
pub fn run(net: &Network, cfg: &RunConfig) -> Result<RunOutcome, SimError> {
    let arrivals = WorkloadGenerator::new(&cfg.workload, net.topology().node_count())?;
    run_arrivals(net, cfg, arrivals)
}

/// Runs one replication over the given arrivals, which must come in
/// non-decreasing time order. The workload section of `cfg` is ignored.
pub fn run_arrivals(
    net: &Network,
    cfg: &RunConfig,
    arrivals: impl IntoIterator<Item = ArrivalEvent>,
) -> Result<RunOutcome, SimError> {
    let started = Instant::now();
    let mut state = net.new_state();
    let mut pending: BinaryHeap<Reverse<Departure>> = BinaryHeap::new();
    let mut f_ext = TimeAverage::default();
    let mut traces = Vec::new();
    let mut log = Vec::new();

    let mut requests = 0usize;
    let mut counted = 0usize;
    let mut accepted = 0usize;
    let mut hops = 0usize;
    let mut offered = 0.0;
    let mut blocked = 0.0;
    let mut formats: BTreeMap<ModulationFormat, usize> = ModulationFormat::ALL.iter().map(|&m| (m, 0)).collect();
    let mut last_arrival = f64::NEG_INFINITY;

    let depart = |state: &mut crate::network::NetworkState,
                      d: Departure,
                      f_ext: &mut TimeAverage,
                      log: &mut Vec<LogEvent>|
     -> Result<(), SimError> {
        f_ext.advance(d.time);
        let flow = state.depart(d.flow, d.time)?;
        if cfg.record_log {
            let torn_down = flow
                .chain
                .iter()
                .copied()
                .filter(|id| state.virtual_topology.get(*id).is_none())
                .collect();
            log.push(LogEvent::Departure {
                flow: d.flow,
                time: d.time,
                torn_down,
            });
        }
        f_ext.value = state.spectrum.network_f_ext();
        Ok(())
    };

    for a in arrivals {
        if a.time < last_arrival {
            return Err(SimError::InvalidRequest(format!("arrival of {:?} goes back in time", a.flow)));
        }
        last_arrival = a.time;
        // departures due at the same instant go first
        while let Some(&Reverse(d)) = pending.peek() {
            if d.time > a.time {
                break;
            }
            pending.pop();
            depart(&mut state, d, &mut f_ext, &mut log)?;
        }
        f_ext.advance(a.time);
        let decision = schemes::serve(
            cfg.scheme,
            &cfg.params,
            net,
            &mut state,
            a.request,
            a.flow,
            a.time,
            a.holding_time,
        )?;
        f_ext.value = state.spectrum.network_f_ext();
        let in_window = requests >= cfg.warmup_requests;
        requests += 1;
        if in_window {
            counted += 1;
            offered += a.request.bitrate_gbps;
        }
        match &decision.outcome {
            Outcome::Accepted(segments) => {
                pending.push(Reverse(Departure {
                    time: a.time + a.holding_time,
                    flow: a.flow,
                }));
                if in_window {
                    accepted += 1;
                    hops += segments.len();
                    for s in segments.iter().filter(|s| !s.groomed) {
                        *formats.entry(s.modulation).or_default() += 1;
                    }
                }
            }
            Outcome::Blocked => {
                if in_window {
                    blocked += a.request.bitrate_gbps;
                }
            }
        }
        if cfg.record_log {
            log.push(LogEvent::Arrival {
                flow: a.flow,
                time: a.time,
                holding_time: a.holding_time,
                request: a.request,
                segments: match decision.outcome {
                    Outcome::Accepted(s) => Some(s),
                    Outcome::Blocked => None,
                },
            });
        }
        if cfg.record_traces {
            traces.push(decision.trace);
        }
    }
    while let Some(Reverse(d)) = pending.pop() {
        depart(&mut state, d, &mut f_ext, &mut log)?;
    }

    if !state.spectrum.is_all_free() || !state.virtual_topology.is_empty() || state.ledger.open_count() != 0 {
        return Err(SimError::Invariant("resources still held after the last departure".into()));
    }

    let established: usize = formats.values().sum();
    let modulation_usage = formats
        .into_iter()
        .map(|(m, c)| {
            let share = if established == 0 {
                0.0
            } else {
                100.0 * c as f64 / established as f64
            };
            (m, share)
        })
        .collect();
    let bbr = if offered > 0.0 { blocked / offered } else { 0.0 };
    let en_eff = energy::energy_efficiency(&state.ledger);
    let metrics = RunMetrics {
        requests: counted,
        accepted,
        offered_gbps: offered,
        blocked_gbps: blocked,
        bbr,
        avg_virtual_hops: if accepted > 0 { hops as f64 / accepted as f64 } else { 0.0 },
        avg_f_ext: f_ext.mean(),
        modulation_usage,
        lightpaths_established: established,
        total_energy_j: state.ledger.total_energy_j(),
        total_data_bits: state.ledger.total_data_bits(),
        en_eff,
        eee: energy::effective_energy_efficiency(en_eff, bbr),
        runtime_s: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome {
        metrics,
        traces,
        log,
        ledger: state.ledger,
    })
}

/// Independent replications of one configuration.
#[derive(Debug, Clone)]
pub struct Replicated {
    pub runs: Vec<RunMetrics>,
    /// Mean and 95% half-width per reported metric, in output order.
    pub summary: Vec<(String, Summary)>,
}

impl Replicated {
    pub fn get(&self, metric: &str) -> Option<&Summary> {
        self.summary.iter().find(|(m, _)| m == metric).map(|(_, s)| s)
    }
}

/// Runs `reps` replications seeded `seed, seed + 1, ...` and summarizes
/// them with Student-t intervals.
pub fn replicate(net: &Network, cfg: &RunConfig, reps: usize) -> Result<Replicated, SimError> {
    if reps < 2 {
        return Err(SimError::Config(format!("at least 2 replications are needed, got {reps}")));
    }
    let runs = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.workload.seed = cfg.workload.seed.wrapping_add(i);
            c.record_log = false;
            c.record_traces = false;
            run(net, &c).map(|o| o.metrics)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let names: Vec<String> = runs[0].reported().into_iter().map(|(n, _)| n).collect();
    let mut summary = Vec::with_capacity(names.len());
    for (i, name) in names.into_iter().enumerate() {
        let values: Vec<f64> = runs.iter().map(|r| r.reported()[i].1).collect();
        summary.push((name, t_interval(&values)?));
    }
    Ok(Replicated { runs, summary })
}
