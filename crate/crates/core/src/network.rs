//! Precomputed routing context and the mutable state of one run.

use std::collections::BTreeMap;

use crate::energy::{self, EnergyLedger, LightpathEnergyRecord};
use crate::error::SimError;
use crate::modulation::ModulationSet;
use crate::schemes::PrecomputedRoutes;
use crate::spectrum::{SpectrumBlock, SpectrumState};
use crate::topology::{NodeId, PhysicalPath, PhysicalTopology, ShortestPathTable};
use crate::virtual_topology::{Flow, FlowId, LightpathId, VirtualTopology};

/// Physical-layer and routing parameters of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub slots_per_link: usize,
    pub guard_slots: usize,
    /// Candidate physical routes tried per segment.
    pub rsa_k: usize,
    /// Routes ranked per node pair in each reachability graph.
    pub max_k: usize,
    pub max_bvt_slots: usize,
    pub modulations: ModulationSet,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            slots_per_link: 320,
            guard_slots: 2,
            rsa_k: 3,
            max_k: 3,
            max_bvt_slots: crate::virtual_topology::MAX_BVT_SLOTS,
            modulations: ModulationSet::all(),
        }
    }
}

/// Immutable data shared by every run on one topology.
#[derive(Debug, Clone)]
pub struct Network {
    topology: PhysicalTopology,
    config: NetworkConfig,
    shortest: ShortestPathTable,
    diameter_km: f64,
    physical_routes: Vec<Vec<PhysicalPath>>,
    routes: PrecomputedRoutes,
}

impl Network {
    pub fn new(topology: PhysicalTopology, config: NetworkConfig) -> Result<Self, SimError> {
        if config.rsa_k == 0 || config.max_k == 0 {
            return Err(SimError::Config("k values must be at least 1".into()));
        }
        if config.slots_per_link == 0 {
            return Err(SimError::Config("slots per link must be at least 1".into()));
        }
        let n = topology.node_count();
        let shortest = topology.all_pairs_shortest();
        let diameter_km = shortest.diameter_km();
        let mut physical_routes = vec![Vec::new(); n * n];
        for s in topology.nodes() {
            for d in topology.nodes().filter(|&d| d != s) {
                physical_routes[s.0 * n + d.0] = topology.k_shortest_paths(s, d, config.rsa_k)?;
            }
        }
        let routes = PrecomputedRoutes::build(&shortest, &config.modulations, config.max_k);
        Ok(Self {
            topology,
            config,
            shortest,
            diameter_km,
            physical_routes,
            routes,
        })
    }

    pub fn topology(&self) -> &PhysicalTopology {
        &self.topology
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn shortest(&self) -> &ShortestPathTable {
        &self.shortest
    }

    pub fn diameter_km(&self) -> f64 {
        self.diameter_km
    }

    /// The `rsa_k` shortest physical routes from `s` to `d`.
    pub fn physical_routes(&self, s: NodeId, d: NodeId) -> &[PhysicalPath] {
        &self.physical_routes[s.0 * self.topology.node_count() + d.0]
    }

    pub fn routes(&self) -> &PrecomputedRoutes {
        &self.routes
    }

    pub fn new_state(&self) -> NetworkState {
        NetworkState {
            spectrum: SpectrumState::for_topology(&self.topology, self.config.slots_per_link),
            virtual_topology: VirtualTopology::with_max_slots(self.config.max_bvt_slots),
            ledger: EnergyLedger::new(),
            flows: BTreeMap::new(),
        }
    }
}

/// Everything a run mutates.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub spectrum: SpectrumState,
    pub virtual_topology: VirtualTopology,
    pub ledger: EnergyLedger,
    pub flows: BTreeMap<FlowId, Flow>,
}

impl NetworkState {
    /// Registers a lightpath whose spectrum is already reserved and charges
    /// its setup energy.
    pub(crate) fn establish(
        &mut self,
        net: &Network,
        route: PhysicalPath,
        block: SpectrumBlock,
        modulation: crate::modulation::ModulationFormat,
        now: f64,
    ) -> Result<LightpathId, SimError> {
        let topo = &net.topology;
        let setup_j = energy::lightpath_setup_j(topo, &route);
        let ola = energy::ola_count(topo, &route);
        let (source, destination, route_nodes) = (route.source(), route.destination(), route.nodes.len());
        let capacity_gbps = block.data_len as f64 * modulation.subcarrier_gbps();
        let power_w = energy::lightpath_power_w(topo, &route, capacity_gbps);
        let id = self.virtual_topology.establish(route, block, modulation, now)?;
        self.ledger.open_lightpath(LightpathEnergyRecord {
            lightpath: id,
            source,
            destination,
            route_nodes,
            ola_count: ola,
            modulation,
            capacity_gbps,
            setup_j,
            power_w,
            established_at: now,
            torn_down_at: None,
        })?;
        Ok(id)
    }

    /// Admits a flow onto a chain of lightpaths.
    pub(crate) fn attach_flow(&mut self, flow: Flow) -> Result<(), SimError> {
        for &lp in &flow.chain {
            self.virtual_topology.add_flow(lp, flow.id, flow.bitrate_gbps)?;
        }
        self.ledger
            .add_data_bits(energy::dt_flow(flow.bitrate_gbps, flow.holding_time));
        self.flows.insert(flow.id, flow);
        Ok(())
    }

    /// Removes a departing flow, tearing down lightpaths it leaves empty.
    pub fn depart(&mut self, id: FlowId, now: f64) -> Result<Flow, SimError> {
        let flow = self.flows.remove(&id).ok_or(SimError::UnknownFlow(id))?;
        for &lp in &flow.chain {
            if let Some(gone) = self.virtual_topology.remove_flow(lp, id, now)? {
                self.spectrum.release(&gone.route.links, &gone.block)?;
                self.ledger.close_lightpath(gone.id, now)?;
            }
        }
        Ok(flow)
    }

    /// Cross-checks spectrum, lightpaths and flows against each other.
    pub fn check_invariants(&self, net: &Network) -> Result<(), String> {
        let s = net.config.slots_per_link;
        let mut expected = vec![vec![false; s]; net.topology.directed_link_count()];
        for lp in self.virtual_topology.lightpaths() {
            if lp.flows.is_empty() {
                return Err(format!("lightpath {:?} carries no flow", lp.id));
            }
            let sum: f64 = lp.flows.values().sum();
            if sum != lp.used_gbps || lp.used_gbps > lp.capacity_gbps {
                return Err(format!("lightpath {:?} load mismatch", lp.id));
            }
            if lp.route.total_km > lp.modulation.reach_km() {
                return Err(format!("lightpath {:?} exceeds reach", lp.id));
            }
            for l in &lp.route.links {
                for slot in lp.block.start..lp.block.end() {
                    if std::mem::replace(&mut expected[l.0][slot], true) {
                        return Err(format!("slot {slot} on link {} used twice", l.0));
                    }
                }
            }
        }
        for (i, want) in expected.iter().enumerate() {
            if self.spectrum.grids()[i].occupancy() != *want {
                return Err(format!("grid {i} does not match active lightpaths"));
            }
        }
        for flow in self.flows.values() {
            let mut at = flow.source;
            for id in &flow.chain {
                let lp = self
                    .virtual_topology
                    .get(*id)
                    .ok_or_else(|| format!("flow {:?} uses missing lightpath", flow.id))?;
                if lp.source() != at || !lp.flows.contains_key(&flow.id) {
                    return Err(format!("flow {:?} chain is broken", flow.id));
                }
                at = lp.destination();
            }
            if at != flow.destination {
                return Err(format!("flow {:?} chain ends at {at}", flow.id));
            }
        }
        Ok(())
    }
}
