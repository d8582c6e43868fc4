//! Physical fiber topology, shortest paths and per-format reachability graphs.

mod file;
pub(crate) mod graph;
mod modulation_topology;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use file::{parse_topology, TopologyDocument};
pub use modulation_topology::{build_modulation_topology, ModulationTopology};

use graph::Digraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(pub usize);

/// One direction of a bidirectional fiber link. Each direction owns its
/// own slot grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedLink(pub usize);

impl DirectedLink {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn link(self) -> LinkId {
        LinkId(self.0 / 2)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("topology has no nodes")]
    Empty,
    #[error("node list entry {position}: expected id {expected}, got {found} (ids must be 0..n-1 in order)")]
    NodeOrder {
        position: usize,
        expected: usize,
        found: usize,
    },
    #[error("link #{link} ({a}-{b}): endpoint not in node list")]
    UnknownEndpoint { link: usize, a: usize, b: usize },
    #[error("link #{link}: self-loop on node {node}")]
    SelfLoop { link: usize, node: usize },
    #[error("link #{link} ({a}-{b}): duplicates link #{first}")]
    DuplicateLink {
        link: usize,
        first: usize,
        a: usize,
        b: usize,
    },
    #[error("link #{link} ({a}-{b}): length_km must be positive and finite, got {length}")]
    BadLength {
        link: usize,
        a: usize,
        b: usize,
        length: f64,
    },
    #[error("topology is disconnected: node {node} unreachable from node 0")]
    Disconnected { node: usize },
    #[error("node {0} is not in the topology")]
    UnknownNode(NodeId),
    #[error("source and destination are both {0}")]
    SameEndpoints(NodeId),
    #[error("no path from {0} to {1}")]
    NoPath(NodeId, NodeId),
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberLink {
    pub id: LinkId,
    pub a: NodeId,
    pub b: NodeId,
    pub length_km: f64,
}

/// Node and link sequence of a simple route through the physical topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPath {
    pub nodes: Vec<NodeId>,
    pub links: Vec<DirectedLink>,
    pub total_km: f64,
}

impl PhysicalPath {
    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.nodes.last().expect("paths have at least two nodes")
    }

    pub fn hops(&self) -> usize {
        self.links.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalTopology {
    name: String,
    labels: Vec<Option<String>>,
    links: Vec<FiberLink>,
    graph: Digraph,
    by_pair: HashMap<(usize, usize), LinkId>,
}

impl PhysicalTopology {
    /// Builds and validates a topology on nodes `0..labels.len()`.
    ///
    /// Links are `(a, b, length_km)`; the link id is the position in the list.
    pub fn new(
        name: impl Into<String>,
        labels: Vec<Option<String>>,
        links: &[(usize, usize, f64)],
    ) -> Result<Self, TopologyError> {
        let n = labels.len();
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        let mut graph = Digraph::new(n);
        let mut by_pair = HashMap::new();
        let mut fibers = Vec::with_capacity(links.len());
        for (i, &(a, b, length)) in links.iter().enumerate() {
            if a >= n || b >= n {
                return Err(TopologyError::UnknownEndpoint { link: i, a, b });
            }
            if a == b {
                return Err(TopologyError::SelfLoop { link: i, node: a });
            }
            if !(length > 0.0 && length.is_finite()) {
                return Err(TopologyError::BadLength {
                    link: i,
                    a,
                    b,
                    length,
                });
            }
            let key = (a.min(b), a.max(b));
            if let Some(first) = by_pair.insert(key, LinkId(i)) {
                return Err(TopologyError::DuplicateLink {
                    link: i,
                    first: first.0,
                    a,
                    b,
                });
            }
            graph.set_arc(a, b, length);
            graph.set_arc(b, a, length);
            fibers.push(FiberLink {
                id: LinkId(i),
                a: NodeId(a),
                b: NodeId(b),
                length_km: length,
            });
        }

        let tree = graph::search(&graph, 0, None, |_| true, |_, _| true);
        if let Some(node) = (0..n).find(|&v| tree.path_to(v).is_none()) {
            return Err(TopologyError::Disconnected { node });
        }

        Ok(Self {
            name: name.into(),
            labels,
            links: fibers,
            graph,
            by_pair,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }

    pub fn label(&self, n: NodeId) -> Option<&str> {
        self.labels.get(n.0).and_then(|l| l.as_deref())
    }

    pub fn links(&self) -> &[FiberLink] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &FiberLink {
        &self.links[id.0]
    }

    pub fn directed_link_count(&self) -> usize {
        2 * self.links.len()
    }

    /// Number of fibers attached to `n`.
    pub fn degree(&self, n: NodeId) -> usize {
        self.graph.neighbours(n.0).len()
    }

    pub fn directed_link(&self, from: NodeId, to: NodeId) -> Option<DirectedLink> {
        let id = *self.by_pair.get(&(from.0.min(to.0), from.0.max(to.0)))?;
        let forward = self.links[id.0].a == from;
        Some(DirectedLink(2 * id.0 + usize::from(!forward)))
    }

    /// Endpoints `(from, to)` of a directed link.
    pub fn endpoints(&self, dl: DirectedLink) -> (NodeId, NodeId) {
        let l = &self.links[dl.link().0];
        if dl.0 % 2 == 0 {
            (l.a, l.b)
        } else {
            (l.b, l.a)
        }
    }

    fn check(&self, n: NodeId) -> Result<(), TopologyError> {
        if n.0 < self.node_count() {
            Ok(())
        } else {
            Err(TopologyError::UnknownNode(n))
        }
    }

    pub(crate) fn path_from_nodes(&self, nodes: &[usize], total_km: f64) -> PhysicalPath {
        let nodes: Vec<NodeId> = nodes.iter().copied().map(NodeId).collect();
        let links = nodes
            .windows(2)
            .map(|w| self.directed_link(w[0], w[1]).expect("consecutive nodes are adjacent"))
            .collect();
        PhysicalPath {
            nodes,
            links,
            total_km,
        }
    }

    pub fn shortest_path(&self, s: NodeId, d: NodeId) -> Result<PhysicalPath, TopologyError> {
        self.check(s)?;
        self.check(d)?;
        if s == d {
            return Err(TopologyError::SameEndpoints(s));
        }
        let p = graph::shortest(&self.graph, s.0, d.0).ok_or(TopologyError::NoPath(s, d))?;
        Ok(self.path_from_nodes(&p.nodes, p.cost))
    }

    /// Up to `k` loopless routes in nondecreasing length.
    pub fn k_shortest_paths(
        &self,
        s: NodeId,
        d: NodeId,
        k: usize,
    ) -> Result<Vec<PhysicalPath>, TopologyError> {
        self.check(s)?;
        self.check(d)?;
        if s == d {
            return Err(TopologyError::SameEndpoints(s));
        }
        if k == 0 {
            return Err(TopologyError::ZeroK);
        }
        let paths = graph::yen(&self.graph, s.0, d.0, k);
        if paths.is_empty() {
            return Err(TopologyError::NoPath(s, d));
        }
        Ok(paths
            .into_iter()
            .map(|p| self.path_from_nodes(&p.nodes, p.cost))
            .collect())
    }

    /// Shortest path between every ordered pair of distinct nodes.
    pub fn all_pairs_shortest(&self) -> ShortestPathTable {
        let n = self.node_count();
        let mut paths = vec![None; n * n];
        for s in 0..n {
            let tree = graph::search(&self.graph, s, None, |_| true, |_, _| true);
            for d in (0..n).filter(|&d| d != s) {
                paths[s * n + d] = tree
                    .path_to(d)
                    .map(|p| self.path_from_nodes(&p.nodes, p.cost));
            }
        }
        ShortestPathTable { n, paths }
    }

    /// Largest shortest-path length over all node pairs.
    pub fn diameter_km(&self) -> f64 {
        self.all_pairs_shortest().diameter_km()
    }
}

#[derive(Debug, Clone)]
pub struct ShortestPathTable {
    n: usize,
    paths: Vec<Option<PhysicalPath>>,
}

impl ShortestPathTable {
    pub fn get(&self, s: NodeId, d: NodeId) -> Option<&PhysicalPath> {
        self.paths.get(s.0 * self.n + d.0)?.as_ref()
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn diameter_km(&self) -> f64 {
        self.paths
            .iter()
            .flatten()
            .map(|p| p.total_km)
            .fold(0.0, f64::max)
    }
}
