//! Weighted digraph search shared by the physical and modulation topologies.
//!
//! Paths are ranked by total weight, then by hop count, then by the
//! lexicographic order of their node sequence. Both Dijkstra and Yen use
//! that ranking, so every query has exactly one answer.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Digraph {
    /// Out-neighbours of every node, sorted by neighbour index.
    adj: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RankedPath {
    pub nodes: Vec<usize>,
    pub cost: f64,
}

pub(crate) fn rank(a_cost: f64, a: &[usize], b_cost: f64, b: &[usize]) -> Ordering {
    a_cost
        .total_cmp(&b_cost)
        .then(a.len().cmp(&b.len()))
        .then_with(|| a.cmp(b))
}

impl RankedPath {
    fn rank(&self, other: &Self) -> Ordering {
        rank(self.cost, &self.nodes, other.cost, &other.nodes)
    }
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n] }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Inserts or overwrites the arc `u -> v`.
    pub fn set_arc(&mut self, u: usize, v: usize, w: f64) {
        let row = &mut self.adj[u];
        match row.binary_search_by_key(&v, |&(n, _)| n) {
            Ok(i) => row[i].1 = w,
            Err(i) => row.insert(i, (v, w)),
        }
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let row = &self.adj[u];
        row.binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| row[i].1)
    }

    pub fn neighbours(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    /// Weight of a node sequence, summed from the first arc onward.
    pub fn path_cost(&self, nodes: &[usize]) -> Option<f64> {
        nodes
            .windows(2)
            .try_fold(0.0, |acc, w| self.weight(w[0], w[1]).map(|x| acc + x))
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    hops: usize,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.hops.cmp(&self.hops))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest-path tree under the path ranking.
#[derive(Debug, Clone)]
pub(crate) struct SearchTree {
    source: usize,
    cost: Vec<f64>,
    pred: Vec<Option<usize>>,
    reached: Vec<bool>,
}

impl SearchTree {
    pub fn path_to(&self, target: usize) -> Option<RankedPath> {
        if !self.reached[target] {
            return None;
        }
        let nodes = chain(&self.pred, self.source, target);
        Some(RankedPath {
            nodes,
            cost: self.cost[target],
        })
    }
}

fn chain(pred: &[Option<usize>], source: usize, target: usize) -> Vec<usize> {
    let mut nodes = vec![target];
    let mut cur = target;
    while cur != source {
        cur = pred[cur].expect("broken predecessor chain");
        nodes.push(cur);
    }
    nodes.reverse();
    nodes
}

/// Dijkstra from `source`, restricted to nodes and arcs accepted by the
/// filters. Stops early once `target` is settled.
pub(crate) fn search(
    g: &Digraph,
    source: usize,
    target: Option<usize>,
    node_ok: impl Fn(usize) -> bool,
    arc_ok: impl Fn(usize, usize) -> bool,
) -> SearchTree {
    let n = g.node_count();
    let mut cost = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut reached = vec![false; n];
    let mut heap = BinaryHeap::new();

    cost[source] = 0.0;
    hops[source] = 0;
    reached[source] = true;
    heap.push(HeapEntry {
        cost: 0.0,
        hops: 0,
        node: source,
    });

    while let Some(HeapEntry { node: u, .. }) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if Some(u) == target {
            break;
        }
        for &(v, w) in g.neighbours(u) {
            if settled[v] || !node_ok(v) || !arc_ok(u, v) {
                continue;
            }
            let c = cost[u] + w;
            let h = hops[u] + 1;
            let better = match c.total_cmp(&cost[v]).then(h.cmp(&hops[v])) {
                Ordering::Less => true,
                Ordering::Greater => false,
                // equal weight and hops: keep the lexicographically smaller
                // node sequence; both prefixes have the same length here
                Ordering::Equal => {
                    let via_u = chain(&pred, source, u);
                    let current = chain(&pred, source, pred[v].expect("reached node has pred"));
                    via_u < current
                }
            };
            if better {
                let improves_key = c.total_cmp(&cost[v]).then(h.cmp(&hops[v])) != Ordering::Equal;
                cost[v] = c;
                hops[v] = h;
                pred[v] = Some(u);
                reached[v] = true;
                if improves_key {
                    heap.push(HeapEntry {
                        cost: c,
                        hops: h,
                        node: v,
                    });
                }
            }
        }
    }

    SearchTree {
        source,
        cost,
        pred,
        reached,
    }
}

pub(crate) fn shortest(g: &Digraph, s: usize, d: usize) -> Option<RankedPath> {
    search(g, s, Some(d), |_| true, |_, _| true).path_to(d)
}

/// Yen's loopless k-shortest paths, best first.
pub(crate) fn yen(g: &Digraph, s: usize, d: usize, k: usize) -> Vec<RankedPath> {
    let mut accepted: Vec<RankedPath> = Vec::with_capacity(k);
    if k == 0 || s == d {
        return accepted;
    }
    match shortest(g, s, d) {
        Some(p) => accepted.push(p),
        None => return accepted,
    }
    let mut candidates: Vec<RankedPath> = Vec::new();

    while accepted.len() < k {
        let prev = accepted.last().expect("at least one path").nodes.clone();
        for j in 0..prev.len() - 1 {
            let spur = prev[j];
            let root = &prev[..=j];

            let mut banned_arcs: Vec<(usize, usize)> = accepted
                .iter()
                .filter(|p| p.nodes.len() > j + 1 && &p.nodes[..=j] == root)
                .map(|p| (p.nodes[j], p.nodes[j + 1]))
                .collect();
            banned_arcs.sort_unstable();
            banned_arcs.dedup();
            let banned_nodes = &root[..j];

            let tree = search(
                g,
                spur,
                Some(d),
                |v| !banned_nodes.contains(&v),
                |u, v| banned_arcs.binary_search(&(u, v)).is_err(),
            );
            let Some(spur_path) = tree.path_to(d) else {
                continue;
            };
            let mut nodes = root[..j].to_vec();
            nodes.extend_from_slice(&spur_path.nodes);
            let cost = g.path_cost(&nodes).expect("arcs exist");
            let cand = RankedPath { nodes, cost };
            if !candidates.contains(&cand) && !accepted.iter().any(|p| p.nodes == cand.nodes) {
                candidates.push(cand);
            }
        }
        let Some(best) = candidates
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.rank(b.1))
            .map(|(i, _)| i)
        else {
            break;
        };
        accepted.push(candidates.swap_remove(best));
    }
    accepted
}
