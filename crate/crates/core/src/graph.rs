//! Labeled directed graphs and weak connectivity.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Graph-local node identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} declared twice")]
    DuplicateNode(NodeId),
    #[error("edge {src}->{dst} references undeclared node")]
    MissingEndpoint { src: NodeId, dst: NodeId },
    #[error("self-loop on node {0} is not supported")]
    SelfLoop(NodeId),
    #[error("edge {src}->{dst} with label {label} declared twice")]
    DuplicateEdge { src: NodeId, dst: NodeId, label: String },
    #[error("graph is empty")]
    Empty,
    #[error("graph is not connected")]
    NotConnected,
}

/// Directed graph with string labels on nodes and edges.
///
/// At most one edge per `(src, dst, label)`; several differently labeled
/// edges between the same ordered pair are allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledGraph {
    nodes: BTreeMap<NodeId, String>,
    edges: BTreeSet<Edge>,
}

impl LabeledGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<NodeId>, label: impl Into<String>) -> Result<(), GraphError> {
        let id = id.into();
        if self.nodes.contains_key(&id) {
            return Err(GraphError::DuplicateNode(id));
        }
        self.nodes.insert(id, label.into());
        Ok(())
    }

    pub fn add_edge(
        &mut self,
        src: impl Into<NodeId>,
        dst: impl Into<NodeId>,
        label: impl Into<String>,
    ) -> Result<(), GraphError> {
        let (src, dst) = (src.into(), dst.into());
        if !self.nodes.contains_key(&src) || !self.nodes.contains_key(&dst) {
            return Err(GraphError::MissingEndpoint { src, dst });
        }
        if src == dst {
            return Err(GraphError::SelfLoop(src));
        }
        let edge = Edge { src, dst, label: label.into() };
        if self.edges.contains(&edge) {
            return Err(GraphError::DuplicateEdge { src, dst, label: edge.label });
        }
        self.edges.insert(edge);
        Ok(())
    }

    /// Builds a graph from node and edge lists, failing on the first invalid item.
    pub fn from_parts<N, E>(nodes: N, edges: E) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = (u64, String)>,
        E: IntoIterator<Item = (u64, u64, String)>,
    {
        let mut g = Self::new();
        for (id, label) in nodes {
            g.add_node(id, label)?;
        }
        for (s, d, l) in edges {
            g.add_edge(s, d, l)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes plus edges.
    pub fn size(&self) -> usize {
        self.nodes.len() + self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &str)> + '_ {
        self.nodes.iter().map(|(id, l)| (*id, l.as_str()))
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter()
    }

    pub fn label(&self, id: NodeId) -> Option<&str> {
        self.nodes.get(&id).map(String::as_str)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn contains_edge(&self, src: NodeId, dst: NodeId, label: &str) -> bool {
        self.edges.contains(&Edge { src, dst, label: String::from(label) })
    }

    /// Subgraph induced by `ids`; unknown ids are ignored.
    pub fn induced_subgraph(&self, ids: &BTreeSet<NodeId>) -> LabeledGraph {
        let nodes = self.nodes.iter().filter(|(id, _)| ids.contains(id)).map(|(id, l)| (*id, l.clone())).collect();
        let edges =
            self.edges.iter().filter(|e| ids.contains(&e.src) && ids.contains(&e.dst)).cloned().collect();
        LabeledGraph { nodes, edges }
    }

    /// Copy with node ids renumbered `0..n` in ascending id order.
    pub fn compacted(&self) -> LabeledGraph {
        let remap: BTreeMap<NodeId, NodeId> =
            self.nodes.keys().enumerate().map(|(i, id)| (*id, NodeId(i as u64))).collect();
        self.relabeled(&remap)
    }

    /// Copy with node ids replaced through `remap`, which must be injective and
    /// cover every node.
    pub fn relabeled(&self, remap: &BTreeMap<NodeId, NodeId>) -> LabeledGraph {
        let nodes = self.nodes.iter().map(|(id, l)| (remap[id], l.clone())).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { src: remap[&e.src], dst: remap[&e.dst], label: e.label.clone() })
            .collect();
        LabeledGraph { nodes, edges }
    }

    /// Undirected neighbour lists keyed by node id.
    pub fn undirected_adjacency(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = self.nodes.keys().map(|id| (*id, Vec::new())).collect();
        for e in &self.edges {
            adj.get_mut(&e.src).unwrap().push(e.dst);
            adj.get_mut(&e.dst).unwrap().push(e.src);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        !self.nodes.is_empty() && connected_components(self).len() == 1
    }
}

/// Weakly connected components, each as an induced subgraph keeping the
/// original node ids. Components are ordered by their smallest node id.
pub fn connected_components(g: &LabeledGraph) -> Vec<LabeledGraph> {
    let adj = g.undirected_adjacency();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut members = BTreeSet::new();
        members.insert(start);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[&v] {
                if seen.insert(w) {
                    members.insert(w);
                    queue.push_back(w);
                }
            }
        }
        out.push(g.induced_subgraph(&members));
    }
    out
}
