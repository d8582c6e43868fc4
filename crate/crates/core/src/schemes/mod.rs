//! Modulation-scheme engines: DMMAS, DMMAS without the hop bound, AMMS,
//! mAdap and EEMS.
//!
//! Every engine turns a request into one or more segment RSA calls. The
//! multi-hop engines pick a route through a per-format reachability graph
//! and split it into one lightpath per traversed edge.

mod engine;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::modulation::{reach_ok, ModulationFormat, ModulationSet};
use crate::topology::{ModulationTopology, NodeId, PhysicalPath, ShortestPathTable};

pub use engine::{serve, Attempt, AttemptResult, Decision, DecisionTrace, Outcome, SegmentRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub source: NodeId,
    pub destination: NodeId,
    pub bitrate_gbps: f64,
}

/// One leg of a multi-hop route: a lightpath candidate between two
/// articulation nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubPath {
    pub source: NodeId,
    pub destination: NodeId,
    pub path: PhysicalPath,
    pub modulation: ModulationFormat,
}

/// Ordered sub-paths chaining a request's source to its destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubPathSet(pub Vec<SubPath>);

impl SubPathSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SubPath> {
        self.0.iter()
    }

    /// Source, articulation nodes and destination in order.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.0.iter().map(|p| p.source).collect();
        if let Some(last) = self.0.last() {
            v.push(last.destination);
        }
        v
    }

    pub fn modulations(&self) -> Vec<ModulationFormat> {
        self.0.iter().map(|p| p.modulation).collect()
    }
}

/// Reachability graphs and their ranked routes for every available format,
/// built once per network.
#[derive(Debug, Clone)]
pub struct PrecomputedRoutes {
    n: usize,
    max_k: usize,
    by_format: Vec<(ModulationTopology, Vec<Vec<Vec<NodeId>>>)>,
}

impl PrecomputedRoutes {
    pub fn build(shortest: &ShortestPathTable, formats: &ModulationSet, max_k: usize) -> Self {
        let n = shortest.node_count();
        let by_format = formats
            .iter()
            .map(|m| {
                let mt = ModulationTopology::from_table(shortest, m);
                let mut ranked = vec![Vec::new(); n * n];
                for s in 0..n {
                    for d in (0..n).filter(|&d| d != s) {
                        ranked[s * n + d] = mt
                            .k_shortest(NodeId(s), NodeId(d), max_k)
                            .into_iter()
                            .map(|(nodes, _)| nodes)
                            .collect();
                    }
                }
                (mt, ranked)
            })
            .collect();
        Self { n, max_k, by_format }
    }

    pub fn max_k(&self) -> usize {
        self.max_k
    }

    pub fn modulation_topology(&self, m: ModulationFormat) -> Option<&ModulationTopology> {
        self.entry(m).map(|(mt, _)| mt)
    }

    /// Ranked node sequences from `s` to `d` in the graph of `m`.
    pub fn ranked(&self, m: ModulationFormat, s: NodeId, d: NodeId) -> &[Vec<NodeId>] {
        match self.entry(m) {
            Some((_, r)) if s.0 < self.n && d.0 < self.n => &r[s.0 * self.n + d.0],
            _ => &[],
        }
    }

    fn entry(&self, m: ModulationFormat) -> Option<&(ModulationTopology, Vec<Vec<Vec<NodeId>>>)> {
        self.by_format.iter().find(|(mt, _)| mt.modulation() == m)
    }
}

/// The `k`-th (1-based) route from `s` to `d` in the reachability graph of
/// `m`, split into one sub-path per edge, all tagged `m`.
pub fn omega(routes: &PrecomputedRoutes, s: NodeId, d: NodeId, k: usize, m: ModulationFormat) -> Option<SubPathSet> {
    let nodes = routes.ranked(m, s, d).get(k.checked_sub(1)?)?;
    let mt = routes.modulation_topology(m)?;
    let subs = nodes
        .windows(2)
        .map(|w| SubPath {
            source: w[0],
            destination: w[1],
            path: mt.edge(w[0], w[1]).expect("ranked routes follow graph edges").clone(),
            modulation: m,
        })
        .collect();
    Some(SubPathSet(subs))
}

/// Hop bound from the network diameter, the normalized entropy
/// fragmentation and the reach of the best format; never below 1.
pub fn compute_mhc(diameter_km: f64, f_ent_normalized: f64, best_reach_km: f64) -> usize {
    let raw = (diameter_km * f_ent_normalized / best_reach_km).ceil();
    if raw.is_finite() && raw >= 1.0 {
        raw as usize
    } else {
        1
    }
}

/// Gives each sub-path the most efficient format whose reach covers it,
/// never going below `floor`.
pub fn spec_eff(p: &SubPathSet, floor: ModulationFormat, formats: &ModulationSet) -> SubPathSet {
    SubPathSet(
        p.iter()
            .map(|sp| {
                let mut m = formats.max();
                while m > floor && !reach_ok(sp.path.total_km, m) {
                    m = match formats.next_lower(m) {
                        Some(l) if l >= floor => l,
                        _ => floor,
                    };
                }
                SubPath {
                    modulation: m.max(floor),
                    ..sp.clone()
                }
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "mAdap")]
    Madap,
    #[serde(rename = "AMMS")]
    Amms,
    #[serde(rename = "EEMS")]
    Eems,
    #[serde(rename = "DMMAS")]
    Dmmas,
    #[serde(rename = "DMMASwoMHC")]
    DmmasWoMhc,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Madap, Scheme::Amms, Scheme::Eems, Scheme::Dmmas, Scheme::DmmasWoMhc];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Madap => "mAdap",
            Scheme::Amms => "AMMS",
            Scheme::Eems => "EEMS",
            Scheme::Dmmas => "DMMAS",
            Scheme::DmmasWoMhc => "DMMASwoMHC",
        }
    }

    /// Whether requests are always carried by a single lightpath.
    pub fn single_hop(self) -> bool {
        matches!(self, Scheme::Madap | Scheme::Eems)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "madap" => Ok(Scheme::Madap),
            "amms" => Ok(Scheme::Amms),
            "eems" => Ok(Scheme::Eems),
            "dmmas" => Ok(Scheme::Dmmas),
            "dmmaswomhc" => Ok(Scheme::DmmasWoMhc),
            _ => Err(format!("unknown scheme '{s}'")),
        }
    }
}

/// Tunables of the engines that are not part of the network itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Fixed hop bound used by AMMS.
    pub amms_mhc: usize,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self { amms_mhc: 3 }
    }
}
