//! Typed model snapshots and the meta-models they conform to.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{LabeledGraph, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("element uid {0:?} declared twice")]
    DuplicateUid(String),
    #[error("reference {src:?} -{ty}-> {tgt:?} points at an unknown element")]
    DanglingReference { src: String, tgt: String, ty: String },
    #[error("element {uid:?} has unknown type {ty:?}")]
    UnknownNodeType { uid: String, ty: String },
    #[error("reference {src:?} -{ty}-> {tgt:?} is not allowed between {src_ty} and {tgt_ty}")]
    IllegalReference { src: String, tgt: String, ty: String, src_ty: String, tgt_ty: String },
    #[error("self-reference on {0:?} is not supported")]
    SelfReference(String),
    #[error("element {0:?} has more than one container")]
    MultipleContainers(String),
    #[error("containment cycle through {0:?}")]
    ContainmentCycle(String),
    #[error("edge type {name} references undeclared node type {ty}")]
    UndeclaredEndpoint { name: String, ty: String },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeType {
    pub name: String,
    pub src: String,
    pub tgt: String,
    #[serde(default)]
    pub containment: bool,
}

/// Type vocabulary. An edge type name may be declared for several
/// `(src, tgt)` pairs; conformance looks up the full triple.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetaModel {
    pub node_types: Vec<String>,
    pub edge_types: Vec<EdgeType>,
}

impl MetaModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let nodes: BTreeSet<&str> = self.node_types.iter().map(String::as_str).collect();
        for et in &self.edge_types {
            for ty in [&et.src, &et.tgt] {
                if !nodes.contains(ty.as_str()) {
                    return Err(ModelError::UndeclaredEndpoint { name: et.name.clone(), ty: ty.clone() });
                }
            }
        }
        Ok(())
    }

    pub fn has_node_type(&self, ty: &str) -> bool {
        self.node_types.iter().any(|t| t == ty)
    }

    pub fn edge_type(&self, name: &str, src: &str, tgt: &str) -> Option<&EdgeType> {
        self.edge_types.iter().find(|e| e.name == name && e.src == src && e.tgt == tgt)
    }

    /// Checks element types, reference typing and that containment
    /// references form a forest.
    pub fn check(&self, m: &ModelVersion) -> Result<(), ModelError> {
        for (uid, ty) in m.elements() {
            if !self.has_node_type(ty) {
                return Err(ModelError::UnknownNodeType { uid: uid.into(), ty: ty.into() });
            }
        }
        let mut container: BTreeMap<&str, &str> = BTreeMap::new();
        for r in m.references() {
            let (st, tt) = (m.type_of(&r.src).unwrap(), m.type_of(&r.tgt).unwrap());
            let et = self.edge_type(&r.ty, st, tt).ok_or_else(|| ModelError::IllegalReference {
                src: r.src.clone(),
                tgt: r.tgt.clone(),
                ty: r.ty.clone(),
                src_ty: st.into(),
                tgt_ty: tt.into(),
            })?;
            if et.containment && container.insert(&r.tgt, &r.src).is_some() {
                return Err(ModelError::MultipleContainers(r.tgt.clone()));
            }
        }
        for start in container.keys() {
            let mut cur = *start;
            let mut steps = 0;
            while let Some(&up) = container.get(cur) {
                steps += 1;
                if up == *start || steps > container.len() {
                    return Err(ModelError::ContainmentCycle((*start).into()));
                }
                cur = up;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Reference {
    pub src: String,
    pub tgt: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl Reference {
    pub fn new(src: impl Into<String>, tgt: impl Into<String>, ty: impl Into<String>) -> Self {
        Reference { src: src.into(), tgt: tgt.into(), ty: ty.into() }
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    uid: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    elements: Vec<ElementRepr>,
    #[serde(default)]
    references: Vec<Reference>,
}

/// A model snapshot: typed elements with stable uids and typed references.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct ModelVersion {
    elements: BTreeMap<String, String>,
    references: BTreeSet<Reference>,
}

impl TryFrom<ModelRepr> for ModelVersion {
    type Error = ModelError;

    fn try_from(r: ModelRepr) -> Result<Self, ModelError> {
        let mut m = ModelVersion::new();
        for e in r.elements {
            m.add_element(e.uid, e.ty)?;
        }
        for rf in r.references {
            m.add_reference(rf)?;
        }
        Ok(m)
    }
}

impl From<ModelVersion> for ModelRepr {
    fn from(m: ModelVersion) -> Self {
        ModelRepr {
            elements: m.elements.into_iter().map(|(uid, ty)| ElementRepr { uid, ty }).collect(),
            references: m.references.into_iter().collect(),
        }
    }
}

impl ModelVersion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_element(&mut self, uid: impl Into<String>, ty: impl Into<String>) -> Result<(), ModelError> {
        let uid = uid.into();
        if self.elements.contains_key(&uid) {
            return Err(ModelError::DuplicateUid(uid));
        }
        self.elements.insert(uid, ty.into());
        Ok(())
    }

    /// Adds a reference; a duplicate of an existing one is a no-op.
    pub fn add_reference(&mut self, r: Reference) -> Result<(), ModelError> {
        if !self.elements.contains_key(&r.src) || !self.elements.contains_key(&r.tgt) {
            return Err(ModelError::DanglingReference { src: r.src, tgt: r.tgt, ty: r.ty });
        }
        if r.src == r.tgt {
            return Err(ModelError::SelfReference(r.src));
        }
        self.references.insert(r);
        Ok(())
    }

    /// Removes an element together with every reference touching it.
    pub fn remove_element(&mut self, uid: &str) -> bool {
        if self.elements.remove(uid).is_none() {
            return false;
        }
        self.references.retain(|r| r.src != uid && r.tgt != uid);
        true
    }

    pub fn remove_reference(&mut self, r: &Reference) -> bool {
        self.references.remove(r)
    }

    pub fn elements(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.elements.iter().map(|(u, t)| (u.as_str(), t.as_str()))
    }

    pub fn references(&self) -> impl Iterator<Item = &Reference> + '_ {
        self.references.iter()
    }

    pub fn type_of(&self, uid: &str) -> Option<&str> {
        self.elements.get(uid).map(String::as_str)
    }

    pub fn contains(&self, uid: &str) -> bool {
        self.elements.contains_key(uid)
    }

    pub fn has_reference(&self, r: &Reference) -> bool {
        self.references.contains(r)
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn reference_count(&self) -> usize {
        self.references.len()
    }

    pub fn count_of_type(&self, ty: &str) -> usize {
        self.elements.values().filter(|t| *t == ty).count()
    }

    /// Plain typed graph view: nodes in uid order, labels are type names.
    /// Returns the uid of each node id.
    pub fn to_graph(&self) -> (LabeledGraph, Vec<&str>) {
        let uids: Vec<&str> = self.elements.keys().map(String::as_str).collect();
        let index: BTreeMap<&str, u64> = uids.iter().enumerate().map(|(i, u)| (*u, i as u64)).collect();
        let mut g = LabeledGraph::new();
        for (i, ty) in self.elements.values().enumerate() {
            g.add_node(i as u64, ty.as_str()).expect("fresh id");
        }
        for r in &self.references {
            g.add_edge(NodeId(index[r.src.as_str()]), NodeId(index[r.tgt.as_str()]), r.ty.as_str())
                .expect("set semantics, no self-references");
        }
        (g, uids)
    }
}
