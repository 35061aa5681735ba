//! Difference graphs and simple change graphs between model versions.
//!
//! Elements correspond when uid and type agree in both versions; a
//! reference corresponds when both endpoints correspond and the type
//! agrees. Corresponding items appear once as `preserved_<Type>`, the rest
//! as `delete_<Type>` (old only) or `create_<Type>` (new only).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::{connected_components, LabeledGraph, NodeId};
use crate::model::{ModelVersion, Reference};

pub const PRESERVED: &str = "preserved_";
pub const CREATE: &str = "create_";
pub const DELETE: &str = "delete_";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Preserved,
    Create,
    Delete,
}

impl ChangeKind {
    pub fn prefix(self) -> &'static str {
        match self {
            ChangeKind::Preserved => PRESERVED,
            ChangeKind::Create => CREATE,
            ChangeKind::Delete => DELETE,
        }
    }

    /// Splits a change label into its kind and the bare type name.
    pub fn parse(label: &str) -> Option<(ChangeKind, &str)> {
        [ChangeKind::Preserved, ChangeKind::Create, ChangeKind::Delete]
            .into_iter()
            .find_map(|k| label.strip_prefix(k.prefix()).filter(|t| !t.is_empty()).map(|t| (k, t)))
    }

    pub fn label(self, ty: &str) -> String {
        format!("{}{}", self.prefix(), ty)
    }
}

/// Which version a change-graph node came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Old,
    New,
    Both,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub uid: String,
    pub origin: Origin,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Correspondence {
    /// Uids present in both versions with the same type.
    pub elements: BTreeSet<String>,
    pub references: BTreeSet<Reference>,
}

/// Difference graph or simple change graph, with the uid behind each node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChangeGraph {
    pub graph: LabeledGraph,
    pub provenance: BTreeMap<NodeId, Provenance>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChangeCounts {
    pub created_nodes: usize,
    pub deleted_nodes: usize,
    pub preserved_nodes: usize,
    pub created_edges: usize,
    pub deleted_edges: usize,
    pub preserved_edges: usize,
}

impl ChangeCounts {
    /// Created and deleted nodes and edges.
    pub fn changed(&self) -> usize {
        self.created_nodes + self.deleted_nodes + self.created_edges + self.deleted_edges
    }
}

impl ChangeGraph {
    pub fn counts(&self) -> ChangeCounts {
        let mut c = ChangeCounts::default();
        for (_, l) in self.graph.nodes() {
            match ChangeKind::parse(l).map(|x| x.0) {
                Some(ChangeKind::Create) => c.created_nodes += 1,
                Some(ChangeKind::Delete) => c.deleted_nodes += 1,
                _ => c.preserved_nodes += 1,
            }
        }
        for e in self.graph.edges() {
            match ChangeKind::parse(&e.label).map(|x| x.0) {
                Some(ChangeKind::Create) => c.created_edges += 1,
                Some(ChangeKind::Delete) => c.deleted_edges += 1,
                _ => c.preserved_edges += 1,
            }
        }
        c
    }

    fn restricted(&self, graph: LabeledGraph) -> ChangeGraph {
        let provenance = graph.nodes().map(|(id, _)| (id, self.provenance[&id].clone())).collect();
        ChangeGraph { graph, provenance }
    }

    /// Connected components ordered by their smallest provenance uid.
    pub fn components(&self) -> Vec<ChangeGraph> {
        let mut comps: Vec<ChangeGraph> =
            connected_components(&self.graph).into_iter().map(|g| self.restricted(g)).collect();
        comps.sort_by_cached_key(|c| c.provenance.values().map(|p| p.uid.clone()).min());
        comps
    }
}

/// Element and reference correspondences by uid and type equality.
pub fn match_versions(old: &ModelVersion, new: &ModelVersion) -> Correspondence {
    let elements: BTreeSet<String> = old
        .elements()
        .filter(|(uid, ty)| new.type_of(uid) == Some(*ty))
        .map(|(uid, _)| String::from(uid))
        .collect();
    let references = old
        .references()
        .filter(|r| elements.contains(&r.src) && elements.contains(&r.tgt) && new.has_reference(r))
        .cloned()
        .collect();
    Correspondence { elements, references }
}

/// Unified graph over both versions. Node ids follow uid order; an element
/// whose type changed yields a deleted and a created node.
pub fn difference_graph(old: &ModelVersion, new: &ModelVersion) -> ChangeGraph {
    let corr = match_versions(old, new);
    let mut uids: BTreeSet<&str> = old.elements().map(|(u, _)| u).collect();
    uids.extend(new.elements().map(|(u, _)| u));

    let mut cg = ChangeGraph::default();
    let mut old_node: BTreeMap<&str, NodeId> = BTreeMap::new();
    let mut new_node: BTreeMap<&str, NodeId> = BTreeMap::new();
    let mut next = 0u64;
    let mut add = |cg: &mut ChangeGraph, uid: &str, label: String, origin: Origin| {
        let id = NodeId(next);
        next += 1;
        cg.graph.add_node(id, label).expect("fresh id");
        cg.provenance.insert(id, Provenance { uid: uid.into(), origin });
        id
    };
    for uid in uids {
        if corr.elements.contains(uid) {
            let id = add(&mut cg, uid, ChangeKind::Preserved.label(old.type_of(uid).unwrap()), Origin::Both);
            old_node.insert(uid, id);
            new_node.insert(uid, id);
            continue;
        }
        if let Some(ty) = old.type_of(uid) {
            old_node.insert(uid, add(&mut cg, uid, ChangeKind::Delete.label(ty), Origin::Old));
        }
        if let Some(ty) = new.type_of(uid) {
            new_node.insert(uid, add(&mut cg, uid, ChangeKind::Create.label(ty), Origin::New));
        }
    }
    for r in old.references() {
        let kind = if corr.references.contains(r) { ChangeKind::Preserved } else { ChangeKind::Delete };
        cg.graph
            .add_edge(old_node[r.src.as_str()], old_node[r.tgt.as_str()], kind.label(&r.ty))
            .expect("old reference endpoints exist");
    }
    for r in new.references().filter(|r| !corr.references.contains(*r)) {
        cg.graph
            .add_edge(new_node[r.src.as_str()], new_node[r.tgt.as_str()], ChangeKind::Create.label(&r.ty))
            .expect("new reference endpoints exist");
    }
    cg
}

fn is_change(label: &str) -> bool {
    matches!(ChangeKind::parse(label), Some((ChangeKind::Create | ChangeKind::Delete, _)))
}

/// Boundary graph of the changed fragment: every created or deleted node
/// and edge, plus the preserved endpoints of changed edges. Preserved edges
/// are dropped.
pub fn simple_change_graph(dg: &ChangeGraph) -> ChangeGraph {
    let g = &dg.graph;
    let mut keep: BTreeSet<NodeId> = g.nodes().filter(|(_, l)| is_change(l)).map(|(id, _)| id).collect();
    let changed_edges: Vec<_> = g.edges().filter(|e| is_change(&e.label)).collect();
    for e in &changed_edges {
        keep.insert(e.src);
        keep.insert(e.dst);
    }
    let mut out = LabeledGraph::new();
    for id in &keep {
        out.add_node(*id, g.label(*id).unwrap()).expect("unique");
    }
    for e in changed_edges {
        out.add_edge(e.src, e.dst, e.label.as_str()).expect("endpoints kept");
    }
    dg.restricted(out)
}
