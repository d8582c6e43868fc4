use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::schemes::Request;
use crate::topology::NodeId;
use crate::virtual_topology::FlowId;

/// Requested bitrates in Gb/s with their relative weights.
pub const DEFAULT_BITRATES: [(f64, u32); 6] = [(25.0, 6), (50.0, 5), (100.0, 4), (200.0, 3), (300.0, 2), (400.0, 1)];
pub const DEFAULT_MEAN_HOLDING_S: f64 = 600.0;
pub const DEFAULT_REQUESTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub request_count: usize,
    /// Offered load in Erlangs.
    pub load_erlangs: f64,
    pub mean_holding_s: f64,
    pub bitrates: Vec<(f64, u32)>,
    pub seed: u64,
}

impl WorkloadConfig {
    pub fn new(load_erlangs: f64, request_count: usize, seed: u64) -> Self {
        Self {
            request_count,
            load_erlangs,
            mean_holding_s: DEFAULT_MEAN_HOLDING_S,
            bitrates: DEFAULT_BITRATES.to_vec(),
            seed,
        }
    }

    /// Poisson arrival rate, requests per second.
    pub fn arrival_rate(&self) -> f64 {
        self.load_erlangs / self.mean_holding_s
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.load_erlangs > 0.0 && self.load_erlangs.is_finite()) {
            return Err(SimError::Config(format!("load must be positive, got {}", self.load_erlangs)));
        }
        if !(self.mean_holding_s > 0.0 && self.mean_holding_s.is_finite()) {
            return Err(SimError::Config(format!(
                "mean holding time must be positive, got {}",
                self.mean_holding_s
            )));
        }
        if self.bitrates.is_empty() {
            return Err(SimError::Config("no bitrates configured".into()));
        }
        for &(b, w) in &self.bitrates {
            if !(b > 0.0 && b.is_finite()) || w == 0 {
                return Err(SimError::Config(format!("bad bitrate entry {b} Gb/s weight {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalEvent {
    pub flow: FlowId,
    pub time: f64,
    pub holding_time: f64,
    pub request: Request,
}

/// Lazily draws the arrivals of one run.
#[derive(Debug, Clone)]
pub struct WorkloadGenerator {
    rng: ChaCha8Rng,
    interarrival: Exp<f64>,
    holding: Exp<f64>,
    bitrate: WeightedIndex<u32>,
    bitrates: Vec<f64>,
    nodes: usize,
    now: f64,
    next: u64,
    remaining: usize,
}

impl WorkloadGenerator {
    pub fn new(cfg: &WorkloadConfig, nodes: usize) -> Result<Self, SimError> {
        cfg.validate()?;
        if nodes < 2 {
            return Err(SimError::Config("traffic needs at least two nodes".into()));
        }
        let exp = |rate: f64| Exp::new(rate).map_err(|e| SimError::Config(e.to_string()));
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            interarrival: exp(cfg.arrival_rate())?,
            holding: exp(1.0 / cfg.mean_holding_s)?,
            bitrate: WeightedIndex::new(cfg.bitrates.iter().map(|&(_, w)| w))
                .map_err(|e| SimError::Config(e.to_string()))?,
            bitrates: cfg.bitrates.iter().map(|&(b, _)| b).collect(),
            nodes,
            now: 0.0,
            next: 0,
            remaining: cfg.request_count,
        })
    }

    pub fn sample_bitrate(&mut self) -> f64 {
        self.bitrates[self.bitrate.sample(&mut self.rng)]
    }

    pub fn sample_holding(&mut self) -> f64 {
        self.holding.sample(&mut self.rng)
    }

    /// Uniform over ordered pairs of distinct nodes.
    pub fn sample_pair(&mut self) -> (NodeId, NodeId) {
        let s = self.rng.random_range(0..self.nodes);
        let mut d = self.rng.random_range(0..self.nodes - 1);
        if d >= s {
            d += 1;
        }
        (NodeId(s), NodeId(d))
    }
}

impl Iterator for WorkloadGenerator {
    type Item = ArrivalEvent;

    fn next(&mut self) -> Option<ArrivalEvent> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        self.now += self.interarrival.sample(&mut self.rng);
        let holding_time = self.sample_holding();
        let (source, destination) = self.sample_pair();
        let bitrate_gbps = self.sample_bitrate();
        let flow = FlowId(self.next);
        self.next += 1;
        Some(ArrivalEvent {
            flow,
            time: self.now,
            holding_time,
            request: Request {
                source,
                destination,
                bitrate_gbps,
            },
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

pub fn generate_workload(cfg: &WorkloadConfig, nodes: usize) -> Result<Vec<ArrivalEvent>, SimError> {
    Ok(WorkloadGenerator::new(cfg, nodes)?.collect())
}
