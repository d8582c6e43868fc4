//! Two-step KSP first-fit RSA for one segment of a request.
//!
//! A segment first tries to groom onto an existing lightpath between its
//! end nodes. Otherwise the `k` shortest physical routes are tried in
//! order and the first one with a first-fit spectrum block wins. Routes
//! beyond the reach of the segment's format, or needing more slots than a
//! transponder drives, are skipped.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::modulation::{reach_ok, slots_needed, ModulationFormat};
use crate::network::{Network, NetworkState};
use crate::spectrum::SpectrumBlock;
use crate::topology::{NodeId, PhysicalPath};
use crate::virtual_topology::{Flow, FlowId, LightpathId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SegmentPlan {
    Groomed(LightpathId),
    New {
        route: PhysicalPath,
        block: SpectrumBlock,
        modulation: ModulationFormat,
    },
}

/// Plans one segment against the current state without changing it.
pub fn serve_segment(
    net: &Network,
    state: &NetworkState,
    s: NodeId,
    d: NodeId,
    bitrate_gbps: f64,
    m: ModulationFormat,
    k: usize,
) -> Result<Option<SegmentPlan>, SimError> {
    if s == d {
        return Err(SimError::InvalidRequest(format!("segment endpoints are both {s}")));
    }
    if let Some(lp) = state.virtual_topology.groom(s, d, bitrate_gbps) {
        return Ok(Some(SegmentPlan::Groomed(lp)));
    }
    let cfg = net.config();
    let data_len = slots_needed(bitrate_gbps, m)?;
    if data_len > cfg.max_bvt_slots {
        return Ok(None);
    }
    for route in net.physical_routes(s, d).iter().take(k) {
        if !reach_ok(route.total_km, m) {
            continue;
        }
        if let Some(block) = state.spectrum.first_fit(&route.links, data_len, cfg.guard_slots) {
            return Ok(Some(SegmentPlan::New {
                route: route.clone(),
                block,
                modulation: m,
            }));
        }
    }
    Ok(None)
}

/// Segments planned for one request. New lightpaths hold their spectrum
/// while later segments are planned; the whole set is then either
/// committed or rolled back.
#[derive(Debug, Default)]
pub struct Reservation {
    plans: Vec<SegmentPlan>,
}

impl Reservation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plans(&self) -> &[SegmentPlan] {
        &self.plans
    }

    /// Plans a segment and holds its spectrum. Returns `false` when the
    /// segment cannot be served.
    pub fn plan_segment(
        &mut self,
        net: &Network,
        state: &mut NetworkState,
        s: NodeId,
        d: NodeId,
        bitrate_gbps: f64,
        m: ModulationFormat,
    ) -> Result<bool, SimError> {
        match serve_segment(net, state, s, d, bitrate_gbps, m, net.config().rsa_k)? {
            Some(plan) => {
                self.hold(state, plan)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Adds an already computed plan, reserving its spectrum if it is new.
    pub fn hold(&mut self, state: &mut NetworkState, plan: SegmentPlan) -> Result<(), SimError> {
        if let SegmentPlan::New { route, block, .. } = &plan {
            state.spectrum.allocate(&route.links, block)?;
        }
        self.plans.push(plan);
        Ok(())
    }

    /// Releases every held block, leaving the state as it was.
    pub fn rollback(self, state: &mut NetworkState) -> Result<(), SimError> {
        for plan in self.plans.iter().rev() {
            if let SegmentPlan::New { route, block, .. } = plan {
                state.spectrum.release(&route.links, block)?;
            }
        }
        Ok(())
    }

    /// Establishes the new lightpaths and attaches the flow to the chain.
    pub fn commit(
        self,
        net: &Network,
        state: &mut NetworkState,
        flow: FlowId,
        source: NodeId,
        destination: NodeId,
        bitrate_gbps: f64,
        now: f64,
        holding_time: f64,
    ) -> Result<Vec<LightpathId>, SimError> {
        let mut chain = Vec::with_capacity(self.plans.len());
        for plan in self.plans {
            let id = match plan {
                SegmentPlan::Groomed(id) => id,
                SegmentPlan::New {
                    route,
                    block,
                    modulation,
                } => state.establish(net, route, block, modulation, now)?,
            };
            chain.push(id);
        }
        state.attach_flow(Flow {
            id: flow,
            source,
            destination,
            bitrate_gbps,
            arrival_time: now,
            holding_time,
            chain: chain.clone(),
        })?;
        Ok(chain)
    }
}
