//! Energy accounting for transponders, cross-connects and amplifiers.
//!
//! A lightpath pays a one-off setup energy in every cross-connect it
//! traverses and, while it is up, the operating power of its transponder,
//! of those cross-connects and of the in-line amplifiers on its fibers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modulation::ModulationFormat;
use crate::topology::{NodeId, PhysicalPath, PhysicalTopology};
use crate::virtual_topology::LightpathId;

/// Transponder power slope, W per Gb/s.
pub const BVT_SLOPE_W_PER_GBPS: f64 = 1.683;
/// Transponder idle power, W.
pub const BVT_IDLE_W: f64 = 91.333;
/// Cross-connect setup energy per attached fiber, J.
pub const OXC_SETUP_J_PER_FIBER: f64 = 85.0;
/// Cross-connect setup energy per added or dropped channel, J.
pub const OXC_SETUP_J_PER_ADD_DROP: f64 = 100.0;
/// Cross-connect operating power, W.
pub const OXC_OPERATING_W: f64 = 150.0;
/// Power of one in-line amplifier, W.
pub const OLA_W: f64 = 100.0;
/// Fiber span covered by one amplifier, km.
pub const OLA_SPAN_KM: f64 = 80.0;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("holding time must be non-negative, got {0}")]
    NegativeHolding(f64),
    #[error("lightpath {0:?} is not open in the ledger")]
    NotOpen(LightpathId),
    #[error("lightpath {0:?} is already open in the ledger")]
    AlreadyOpen(LightpathId),
    #[error("lightpath {id:?} closed at {at} before it opened at {opened}")]
    ClosedBeforeOpen { id: LightpathId, opened: f64, at: f64 },
}

/// Transponder power at transmission rate `tr_gbps`, W.
pub fn pc_bvt(tr_gbps: f64) -> f64 {
    BVT_SLOPE_W_PER_GBPS * tr_gbps + BVT_IDLE_W
}

/// Setup energy of one cross-connect with `node_degree` fibers and
/// `add_drop_degree` locally terminated channels, J.
pub fn ec_oxc_setup(node_degree: usize, add_drop_degree: usize) -> f64 {
    node_degree as f64 * OXC_SETUP_J_PER_FIBER + add_drop_degree as f64 * OXC_SETUP_J_PER_ADD_DROP
}

/// Amplifiers along a route: one per full 80 km span of each fiber.
pub fn ola_count(topo: &PhysicalTopology, route: &PhysicalPath) -> usize {
    route
        .links
        .iter()
        .map(|l| (topo.link(l.link()).length_km / OLA_SPAN_KM).floor() as usize)
        .sum()
}

/// Setup energy of every cross-connect on the route; the two end nodes
/// each add or drop one channel.
pub fn lightpath_setup_j(topo: &PhysicalTopology, route: &PhysicalPath) -> f64 {
    let last = route.nodes.len() - 1;
    route
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &n)| ec_oxc_setup(topo.degree(n), usize::from(i == 0 || i == last)))
        .sum()
}

/// Operating power of a lightpath carrying a channel of `tr_gbps`, W.
pub fn lightpath_power_w(topo: &PhysicalTopology, route: &PhysicalPath, tr_gbps: f64) -> f64 {
    pc_bvt(tr_gbps)
        + route.nodes.len() as f64 * OXC_OPERATING_W
        + ola_count(topo, route) as f64 * OLA_W
}

/// Energy of a lightpath held for `holding_s` seconds, J.
pub fn ec_lightpath(
    topo: &PhysicalTopology,
    route: &PhysicalPath,
    tr_gbps: f64,
    holding_s: f64,
) -> Result<f64, EnergyError> {
    if holding_s < 0.0 || holding_s.is_nan() {
        return Err(EnergyError::NegativeHolding(holding_s));
    }
    Ok(lightpath_setup_j(topo, route) + lightpath_power_w(topo, route, tr_gbps) * holding_s)
}

/// Bits carried by a flow of `tr_gbps` during `holding_s`.
pub fn dt_flow(tr_gbps: f64, holding_s: f64) -> f64 {
    tr_gbps * 1e9 * holding_s
}

/// Bits per joule; 0 for a ledger that consumed nothing.
pub fn energy_efficiency(ledger: &EnergyLedger) -> f64 {
    let ec = ledger.total_energy_j();
    if ec == 0.0 {
        0.0
    } else {
        ledger.total_data_bits() / ec
    }
}

/// Energy efficiency discounted by the blocked share of bandwidth.
pub fn effective_energy_efficiency(en_eff: f64, bbr: f64) -> f64 {
    en_eff * (1.0 - bbr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightpathEnergyRecord {
    pub lightpath: LightpathId,
    pub source: NodeId,
    pub destination: NodeId,
    pub route_nodes: usize,
    pub ola_count: usize,
    pub modulation: ModulationFormat,
    pub capacity_gbps: f64,
    pub setup_j: f64,
    pub power_w: f64,
    pub established_at: f64,
    pub torn_down_at: Option<f64>,
}

impl LightpathEnergyRecord {
    pub fn operating_j(&self) -> Option<f64> {
        self.torn_down_at.map(|end| self.power_w * (end - self.established_at))
    }
}

/// Running energy and data totals of one simulation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    records: Vec<LightpathEnergyRecord>,
    open: BTreeMap<LightpathId, usize>,
    setup_j: f64,
    operating_j: f64,
    data_bits: f64,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Charges the setup energy of a new lightpath and starts its clock.
    pub fn open_lightpath(&mut self, record: LightpathEnergyRecord) -> Result<(), EnergyError> {
        if self.open.contains_key(&record.lightpath) {
            return Err(EnergyError::AlreadyOpen(record.lightpath));
        }
        self.setup_j += record.setup_j;
        self.open.insert(record.lightpath, self.records.len());
        self.records.push(LightpathEnergyRecord {
            torn_down_at: None,
            ..record
        });
        Ok(())
    }

    /// Stops a lightpath's clock and charges its operating energy.
    pub fn close_lightpath(&mut self, id: LightpathId, at: f64) -> Result<(), EnergyError> {
        let &idx = self.open.get(&id).ok_or(EnergyError::NotOpen(id))?;
        let rec = &mut self.records[idx];
        if at < rec.established_at {
            return Err(EnergyError::ClosedBeforeOpen {
                id,
                opened: rec.established_at,
                at,
            });
        }
        rec.torn_down_at = Some(at);
        self.operating_j += rec.power_w * (at - rec.established_at);
        self.open.remove(&id);
        Ok(())
    }

    pub fn add_data_bits(&mut self, bits: f64) {
        self.data_bits += bits;
    }

    pub fn setup_energy_j(&self) -> f64 {
        self.setup_j
    }

    pub fn operating_energy_j(&self) -> f64 {
        self.operating_j
    }

    pub fn total_energy_j(&self) -> f64 {
        self.setup_j + self.operating_j
    }

    pub fn total_data_bits(&self) -> f64 {
        self.data_bits
    }

    pub fn records(&self) -> &[LightpathEnergyRecord] {
        &self.records
    }

    pub fn open_count(&self) -> usize {
        self.open.len()
    }

    /// One comma-separated row per lightpath, with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "lightpath,source,destination,route_nodes,ola_count,modulation,capacity_gbps,setup_j,power_w,established_at,torn_down_at,operating_j\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.lightpath.0,
                r.source,
                r.destination,
                r.route_nodes,
                r.ola_count,
                r.modulation,
                r.capacity_gbps,
                r.setup_j,
                r.power_w,
                r.established_at,
                r.torn_down_at.map(|t| t.to_string()).unwrap_or_default(),
                r.operating_j().map(|e| e.to_string()).unwrap_or_default(),
            );
        }
        out
    }
}
