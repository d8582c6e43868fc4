use std::collections::BTreeMap;

use super::graph::{self, Digraph};
use super::{NodeId, PhysicalPath, PhysicalTopology, ShortestPathTable};
use crate::modulation::{reach_ok, ModulationFormat};

/// Reachability graph of one modulation format.
///
/// `u -> v` is an edge iff the shortest physical path from `u` to `v` fits
/// in the format's reach. The edge stores that path and weighs its length.
#[derive(Debug, Clone)]
pub struct ModulationTopology {
    modulation: ModulationFormat,
    edges: BTreeMap<(NodeId, NodeId), PhysicalPath>,
    graph: Digraph,
}

impl ModulationTopology {
    pub fn from_table(table: &ShortestPathTable, modulation: ModulationFormat) -> Self {
        let n = table.node_count();
        let mut edges = BTreeMap::new();
        let mut graph = Digraph::new(n);
        for u in (0..n).map(NodeId) {
            for v in (0..n).map(NodeId).filter(|&v| v != u) {
                if let Some(p) = table.get(u, v) {
                    if reach_ok(p.total_km, modulation) {
                        graph.set_arc(u.0, v.0, p.total_km);
                        edges.insert((u, v), p.clone());
                    }
                }
            }
        }
        Self {
            modulation,
            edges,
            graph,
        }
    }

    pub fn modulation(&self) -> ModulationFormat {
        self.modulation
    }

    pub fn edge(&self, u: NodeId, v: NodeId) -> Option<&PhysicalPath> {
        self.edges.get(&(u, v))
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains_key(&(u, v))
    }

    /// Directed edges in `(u, v)` order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, &PhysicalPath)> {
        self.edges.iter().map(|(&(u, v), p)| (u, v, p))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Up to `k` loopless routes through this graph, as node sequences with
    /// their total km, best first.
    pub fn k_shortest(&self, s: NodeId, d: NodeId, k: usize) -> Vec<(Vec<NodeId>, f64)> {
        graph::yen(&self.graph, s.0, d.0, k)
            .into_iter()
            .map(|p| (p.nodes.into_iter().map(NodeId).collect(), p.cost))
            .collect()
    }
}

pub fn build_modulation_topology(topo: &PhysicalTopology, m: ModulationFormat) -> ModulationTopology {
    ModulationTopology::from_table(&topo.all_pairs_shortest(), m)
}
