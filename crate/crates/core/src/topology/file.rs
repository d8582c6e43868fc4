//! JSON topology documents.
//!
//! ```json
//! {
//!   "name": "triangle",
//!   "description": "free text, ignored",
//!   "nodes": [ { "id": 0, "label": "A" }, { "id": 1 }, { "id": 2 } ],
//!   "links": [
//!     { "a": 0, "b": 1, "length_km": 100 },
//!     { "a": 1, "b": 2, "length_km": 100 },
//!     { "a": 0, "b": 2, "length_km": 100 }
//!   ]
//! }
//! ```
//!
//! Node ids must be `0..n-1` in order. Every link is bidirectional and
//! must carry a positive length in km.

use serde::{Deserialize, Serialize};

use super::{PhysicalTopology, TopologyError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDocument {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub nodes: Vec<NodeEntry>,
    pub links: Vec<LinkEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub a: usize,
    pub b: usize,
    pub length_km: f64,
}

impl TopologyDocument {
    pub fn into_topology(self) -> Result<PhysicalTopology, TopologyError> {
        for (position, node) in self.nodes.iter().enumerate() {
            if node.id != position {
                return Err(TopologyError::NodeOrder {
                    position,
                    expected: position,
                    found: node.id,
                });
            }
        }
        let labels = self.nodes.into_iter().map(|n| n.label).collect();
        let links: Vec<_> = self.links.iter().map(|l| (l.a, l.b, l.length_km)).collect();
        PhysicalTopology::new(self.name, labels, &links)
    }

    pub fn from_topology(t: &PhysicalTopology) -> Self {
        Self {
            name: t.name().to_string(),
            description: None,
            nodes: t
                .nodes()
                .map(|n| NodeEntry {
                    id: n.0,
                    label: t.label(n).map(str::to_string),
                })
                .collect(),
            links: t
                .links()
                .iter()
                .map(|l| LinkEntry {
                    a: l.a.0,
                    b: l.b.0,
                    length_km: l.length_km,
                })
                .collect(),
        }
    }
}

pub fn parse_topology(content: &str) -> Result<PhysicalTopology, TopologyError> {
    let doc: TopologyDocument = serde_json::from_str(content).map_err(|e| TopologyError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.into_topology()
}
