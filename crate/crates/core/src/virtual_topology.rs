//! Established lightpaths and the flows groomed onto them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modulation::ModulationFormat;
use crate::spectrum::SpectrumBlock;
use crate::topology::{NodeId, PhysicalPath};

/// Largest number of data slots one transponder can drive.
pub const MAX_BVT_SLOTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LightpathId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowId(pub u64);

#[derive(Debug, Error, PartialEq)]
pub enum VirtualTopologyError {
    #[error("{slots} data slots exceed the transponder limit of {max}")]
    CapacityExceeded { slots: usize, max: usize },
    #[error("lightpath {0:?} does not exist")]
    UnknownLightpath(LightpathId),
    #[error("flow {flow:?} needs {need} Gb/s but lightpath {lightpath:?} has {residual} Gb/s left")]
    OverCapacity {
        lightpath: LightpathId,
        flow: FlowId,
        need: f64,
        residual: f64,
    },
    #[error("flow {flow:?} is already on lightpath {lightpath:?}")]
    DuplicateFlow { lightpath: LightpathId, flow: FlowId },
    #[error("flow {flow:?} is not on lightpath {lightpath:?}")]
    MissingFlow { lightpath: LightpathId, flow: FlowId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lightpath {
    pub id: LightpathId,
    pub route: PhysicalPath,
    pub block: SpectrumBlock,
    pub modulation: ModulationFormat,
    pub capacity_gbps: f64,
    pub used_gbps: f64,
    /// Flows carried, with their bitrates.
    pub flows: BTreeMap<FlowId, f64>,
    pub established_at: f64,
    pub torn_down_at: Option<f64>,
}

impl Lightpath {
    pub fn source(&self) -> NodeId {
        self.route.source()
    }

    pub fn destination(&self) -> NodeId {
        self.route.destination()
    }

    pub fn residual_gbps(&self) -> f64 {
        self.capacity_gbps - self.used_gbps
    }

    pub fn utilization(&self) -> f64 {
        self.used_gbps / self.capacity_gbps
    }
}

/// A connection request once it has been admitted or refused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub id: FlowId,
    pub source: NodeId,
    pub destination: NodeId,
    pub bitrate_gbps: f64,
    pub arrival_time: f64,
    pub holding_time: f64,
    /// Lightpaths carrying the flow, from source to destination.
    pub chain: Vec<LightpathId>,
}

impl Flow {
    pub fn virtual_hops(&self) -> usize {
        self.chain.len()
    }

    pub fn departure_time(&self) -> f64 {
        self.arrival_time + self.holding_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualTopology {
    lightpaths: BTreeMap<LightpathId, Lightpath>,
    by_pair: BTreeMap<(NodeId, NodeId), BTreeSet<LightpathId>>,
    next_id: usize,
    max_slots: usize,
}

impl Default for VirtualTopology {
    fn default() -> Self {
        Self::with_max_slots(MAX_BVT_SLOTS)
    }
}

impl VirtualTopology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_max_slots(max_slots: usize) -> Self {
        Self {
            lightpaths: BTreeMap::new(),
            by_pair: BTreeMap::new(),
            next_id: 0,
            max_slots,
        }
    }

    /// Registers a lightpath whose spectrum has already been reserved.
    pub fn establish(
        &mut self,
        route: PhysicalPath,
        block: SpectrumBlock,
        modulation: ModulationFormat,
        now: f64,
    ) -> Result<LightpathId, VirtualTopologyError> {
        if block.data_len > self.max_slots {
            return Err(VirtualTopologyError::CapacityExceeded {
                slots: block.data_len,
                max: self.max_slots,
            });
        }
        let id = LightpathId(self.next_id);
        self.next_id += 1;
        let key = (route.source(), route.destination());
        self.lightpaths.insert(
            id,
            Lightpath {
                id,
                capacity_gbps: block.data_len as f64 * modulation.subcarrier_gbps(),
                route,
                block,
                modulation,
                used_gbps: 0.0,
                flows: BTreeMap::new(),
                established_at: now,
                torn_down_at: None,
            },
        );
        self.by_pair.entry(key).or_default().insert(id);
        Ok(id)
    }

    /// Least utilized lightpath from `s` to `d` with room for `bitrate_gbps`;
    /// ties go to the lower id.
    pub fn groom(&self, s: NodeId, d: NodeId, bitrate_gbps: f64) -> Option<LightpathId> {
        let ids = self.by_pair.get(&(s, d))?;
        ids.iter()
            .map(|id| &self.lightpaths[id])
            .filter(|lp| lp.residual_gbps() >= bitrate_gbps)
            .min_by(|a, b| a.utilization().total_cmp(&b.utilization()).then(a.id.cmp(&b.id)))
            .map(|lp| lp.id)
    }

    pub fn add_flow(&mut self, id: LightpathId, flow: FlowId, bitrate_gbps: f64) -> Result<(), VirtualTopologyError> {
        let lp = self
            .lightpaths
            .get_mut(&id)
            .ok_or(VirtualTopologyError::UnknownLightpath(id))?;
        if lp.flows.contains_key(&flow) {
            return Err(VirtualTopologyError::DuplicateFlow { lightpath: id, flow });
        }
        if lp.residual_gbps() < bitrate_gbps {
            return Err(VirtualTopologyError::OverCapacity {
                lightpath: id,
                flow,
                need: bitrate_gbps,
                residual: lp.residual_gbps(),
            });
        }
        lp.flows.insert(flow, bitrate_gbps);
        lp.used_gbps = lp.flows.values().sum();
        Ok(())
    }

    /// Removes a flow. A lightpath left empty is torn down and returned so
    /// the caller can release its spectrum.
    pub fn remove_flow(
        &mut self,
        id: LightpathId,
        flow: FlowId,
        now: f64,
    ) -> Result<Option<Lightpath>, VirtualTopologyError> {
        let lp = self
            .lightpaths
            .get_mut(&id)
            .ok_or(VirtualTopologyError::UnknownLightpath(id))?;
        if lp.flows.remove(&flow).is_none() {
            return Err(VirtualTopologyError::MissingFlow { lightpath: id, flow });
        }
        lp.used_gbps = lp.flows.values().sum();
        if !lp.flows.is_empty() {
            return Ok(None);
        }
        let mut lp = self.lightpaths.remove(&id).expect("present");
        let key = (lp.source(), lp.destination());
        if let Some(set) = self.by_pair.get_mut(&key) {
            set.remove(&id);
            if set.is_empty() {
                self.by_pair.remove(&key);
            }
        }
        lp.torn_down_at = Some(now);
        Ok(Some(lp))
    }

    pub fn get(&self, id: LightpathId) -> Option<&Lightpath> {
        self.lightpaths.get(&id)
    }

    pub fn lightpaths(&self) -> impl Iterator<Item = &Lightpath> {
        self.lightpaths.values()
    }

    pub fn len(&self) -> usize {
        self.lightpaths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lightpaths.is_empty()
    }

    /// Id the next established lightpath will get.
    pub fn next_id(&self) -> LightpathId {
        LightpathId(self.next_id)
    }
}
