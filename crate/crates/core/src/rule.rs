//! Declarative edit rules: conversion from and to change patterns, and
//! application to model versions.
//!
//! The left-hand side of a rule is its context and deleted parts, the
//! right-hand side its context and created parts. Application follows the
//! double-pushout convention: a deleted element may only lose references the
//! rule deletes as well.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compact::{Compact, Interner};
use crate::diff::ChangeKind;
use crate::graph::{GraphError, LabeledGraph, NodeId};
use crate::iso::for_each_embedding_pinned;
use crate::miner::Pattern;
use crate::model::{MetaModel, ModelError, ModelVersion, Reference};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RuleNode {
    pub id: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl RuleNode {
    pub fn new(id: impl Into<String>, ty: impl Into<String>) -> Self {
        RuleNode { id: id.into(), ty: ty.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RuleEdge {
    pub src: String,
    pub tgt: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl RuleEdge {
    pub fn new(src: impl Into<String>, tgt: impl Into<String>, ty: impl Into<String>) -> Self {
        RuleEdge { src: src.into(), tgt: tgt.into(), ty: ty.into() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EditRule {
    pub name: String,
    /// Canonical code of the originating pattern, or `authored`.
    #[serde(default)]
    pub provenance: String,
    #[serde(default)]
    pub context_nodes: Vec<RuleNode>,
    #[serde(default)]
    pub created_nodes: Vec<RuleNode>,
    #[serde(default)]
    pub deleted_nodes: Vec<RuleNode>,
    /// Preserved references the left-hand side requires.
    #[serde(default)]
    pub context_edges: Vec<RuleEdge>,
    #[serde(default)]
    pub created_edges: Vec<RuleEdge>,
    #[serde(default)]
    pub deleted_edges: Vec<RuleEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("{element} has label {label:?} without a change prefix")]
    MalformedLabel { element: String, label: String },
    #[error("rule node id {0:?} used twice")]
    DuplicateNode(String),
    #[error("{part} edge {src} -{ty}-> {tgt} has an endpoint outside its allowed parts")]
    BadEndpoint { part: &'static str, src: String, tgt: String, ty: String },
    #[error("rule {0:?} has no valid binding in the model")]
    NoMatch(String),
    #[error("binding is invalid: {0}")]
    InvalidBinding(String),
    #[error("result does not conform to the meta-model: {0}")]
    Conformance(ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Part {
    Context,
    Created,
    Deleted,
}

impl EditRule {
    pub fn node_count(&self) -> usize {
        self.context_nodes.len() + self.created_nodes.len() + self.deleted_nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.context_edges.len() + self.created_edges.len() + self.deleted_edges.len()
    }

    fn parts(&self) -> Result<BTreeMap<&str, (Part, &str)>, RuleError> {
        let mut parts = BTreeMap::new();
        for (part, nodes) in
            [(Part::Context, &self.context_nodes), (Part::Created, &self.created_nodes), (Part::Deleted, &self.deleted_nodes)]
        {
            for n in nodes {
                if parts.insert(n.id.as_str(), (part, n.ty.as_str())).is_some() {
                    return Err(RuleError::DuplicateNode(n.id.clone()));
                }
            }
        }
        Ok(parts)
    }

    /// Checks node id uniqueness and that every edge only touches the node
    /// parts it may touch.
    pub fn validate(&self) -> Result<(), RuleError> {
        let parts = self.parts()?;
        let groups: [(&'static str, &Vec<RuleEdge>, Part); 3] = [
            ("context", &self.context_edges, Part::Context),
            ("created", &self.created_edges, Part::Created),
            ("deleted", &self.deleted_edges, Part::Deleted),
        ];
        for (name, edges, own) in groups {
            for e in edges {
                let ok = [&e.src, &e.tgt].iter().all(|id| {
                    parts.get(id.as_str()).is_some_and(|(p, _)| *p == Part::Context || *p == own)
                });
                if !ok || e.src == e.tgt {
                    return Err(RuleError::BadEndpoint {
                        part: name,
                        src: e.src.clone(),
                        tgt: e.tgt.clone(),
                        ty: e.ty.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Change-labelled graph of a rule. Node ids follow the order context,
/// created, deleted.
pub fn rule_to_pattern(rule: &EditRule) -> Result<LabeledGraph, RuleError> {
    rule.validate()?;
    let mut g = LabeledGraph::new();
    let mut ids = BTreeMap::new();
    let nodes = [
        (ChangeKind::Preserved, &rule.context_nodes),
        (ChangeKind::Create, &rule.created_nodes),
        (ChangeKind::Delete, &rule.deleted_nodes),
    ];
    for (kind, list) in nodes {
        for n in list {
            let id = ids.len() as u64;
            ids.insert(n.id.as_str(), id);
            g.add_node(id, kind.label(&n.ty))?;
        }
    }
    let edges = [
        (ChangeKind::Preserved, &rule.context_edges),
        (ChangeKind::Create, &rule.created_edges),
        (ChangeKind::Delete, &rule.deleted_edges),
    ];
    for (kind, list) in edges {
        for e in list {
            g.add_edge(ids[e.src.as_str()], ids[e.tgt.as_str()], kind.label(&e.ty))?;
        }
    }
    Ok(g)
}

/// Splits a change-labelled graph into rule parts; node `v` becomes rule
/// node `n<v>`.
pub fn graph_to_rule(g: &LabeledGraph, name: &str, provenance: &str) -> Result<EditRule, RuleError> {
    let mut rule = EditRule { name: name.into(), provenance: provenance.into(), ..EditRule::default() };
    let node_id = |v: NodeId| format!("n{v}");
    for (v, label) in g.nodes() {
        let (kind, ty) = ChangeKind::parse(label)
            .ok_or_else(|| RuleError::MalformedLabel { element: format!("node {v}"), label: label.into() })?;
        let node = RuleNode::new(node_id(v), ty);
        match kind {
            ChangeKind::Preserved => rule.context_nodes.push(node),
            ChangeKind::Create => rule.created_nodes.push(node),
            ChangeKind::Delete => rule.deleted_nodes.push(node),
        }
    }
    for e in g.edges() {
        let (kind, ty) = ChangeKind::parse(&e.label).ok_or_else(|| RuleError::MalformedLabel {
            element: format!("edge {} -> {}", e.src, e.dst),
            label: e.label.clone(),
        })?;
        let edge = RuleEdge::new(node_id(e.src), node_id(e.dst), ty);
        match kind {
            ChangeKind::Preserved => rule.context_edges.push(edge),
            ChangeKind::Create => rule.created_edges.push(edge),
            ChangeKind::Delete => rule.deleted_edges.push(edge),
        }
    }
    rule.validate()?;
    Ok(rule)
}

pub fn pattern_to_rule(p: &Pattern, name: &str) -> Result<EditRule, RuleError> {
    graph_to_rule(&p.graph, name, &p.code.to_string())
}

/// Where to apply a rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    /// Uniform over all valid bindings.
    Random,
    /// Uniform over the valid bindings that only use these uids.
    Within(BTreeSet<String>),
    /// Uniform over the valid bindings that use at least one uid of `pool`
    /// and, when given, nothing outside `within`.
    Overlapping { pool: BTreeSet<String>, within: Option<BTreeSet<String>> },
    /// Exactly this binding of context and deleted rule nodes.
    Fixed(BTreeMap<String, String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Application {
    pub model: ModelVersion,
    /// Context and deleted rule node id to model uid.
    pub binding: BTreeMap<String, String>,
    /// Created rule node id to fresh uid.
    pub created: BTreeMap<String, String>,
}

struct Lhs<'r> {
    nodes: Vec<&'r RuleNode>,
    // deleted-edge count per LHS node, for the dangling check
    deleted_degree: Vec<usize>,
    deleted: Vec<bool>,
    graph: Compact,
}

const REJECTION_TRIES: usize = 32;

/// Applies `rule` to `m` at `site`. The seed drives both site choice and
/// fresh uids (`<rule>-<counter>-<seed>`).
pub fn apply(rule: &EditRule, m: &ModelVersion, mm: &MetaModel, site: &Site, seed: u64) -> Result<Application, RuleError> {
    rule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (model_graph, uids) = m.to_graph();
    let lhs_nodes: Vec<&RuleNode> = rule.context_nodes.iter().chain(rule.deleted_nodes.iter()).collect();
    let index: BTreeMap<&str, u32> = lhs_nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i as u32)).collect();

    let mut lhs_graph = LabeledGraph::new();
    for (i, n) in lhs_nodes.iter().enumerate() {
        lhs_graph.add_node(i as u64, n.ty.as_str())?;
    }
    for e in rule.context_edges.iter().chain(rule.deleted_edges.iter()) {
        lhs_graph.add_edge(index[e.src.as_str()] as u64, index[e.tgt.as_str()] as u64, e.ty.as_str())?;
    }
    let interner = Interner::from_graphs([&lhs_graph, &model_graph]);
    let (hay, _) = Compact::from_graph(&model_graph, &interner);
    let mut deleted_degree = alloc::vec![0usize; lhs_nodes.len()];
    for e in &rule.deleted_edges {
        deleted_degree[index[e.src.as_str()] as usize] += 1;
        deleted_degree[index[e.tgt.as_str()] as usize] += 1;
    }
    let deleted = (0..lhs_nodes.len()).map(|i| i >= rule.context_nodes.len()).collect();
    let lhs = Lhs { nodes: lhs_nodes, deleted_degree, deleted, graph: Compact::from_graph(&lhs_graph, &interner).0 };

    let chosen: Vec<u32> = match site {
        Site::Fixed(b) => fixed_binding(&lhs, &hay, &uids, b)?,
        Site::Random => {
            random_binding(&lhs, &hay, None, &mut rng).ok_or_else(|| RuleError::NoMatch(rule.name.clone()))?
        }
        Site::Within(allowed) => {
            let mask: Vec<bool> = uids.iter().map(|u| allowed.contains(*u)).collect();
            random_binding(&lhs, &hay, Some(&mask), &mut rng).ok_or_else(|| RuleError::NoMatch(rule.name.clone()))?
        }
        Site::Overlapping { pool, within } => {
            let mask: Option<Vec<bool>> = within.as_ref().map(|w| uids.iter().map(|u| w.contains(*u)).collect());
            overlapping_binding(&lhs, &hay, &uids, pool, mask.as_deref(), &mut rng)
                .ok_or_else(|| RuleError::NoMatch(rule.name.clone()))?
        }
    };
    let binding: BTreeMap<String, String> =
        lhs.nodes.iter().zip(&chosen).map(|(n, &h)| (n.id.clone(), uids[h as usize].into())).collect();

    let mut out = m.clone();
    for e in &rule.deleted_edges {
        out.remove_reference(&Reference::new(&binding[&e.src], &binding[&e.tgt], &e.ty));
    }
    for n in &rule.deleted_nodes {
        out.remove_element(&binding[&n.id]);
    }
    let mut created = BTreeMap::new();
    let mut counter = 0u64;
    for n in &rule.created_nodes {
        let uid = loop {
            let candidate = format!("{}-{}-{}", rule.name, counter, seed);
            counter += 1;
            if !out.contains(&candidate) {
                break candidate;
            }
        };
        out.add_element(uid.clone(), n.ty.clone()).map_err(RuleError::Conformance)?;
        created.insert(n.id.clone(), uid);
    }
    let resolve = |id: &str| binding.get(id).or_else(|| created.get(id)).cloned().expect("validated endpoint");
    for e in &rule.created_edges {
        out.add_reference(Reference::new(resolve(&e.src), resolve(&e.tgt), e.ty.clone()))
            .map_err(RuleError::Conformance)?;
    }
    mm.check(&out).map_err(RuleError::Conformance)?;
    Ok(Application { model: out, binding, created })
}

fn valid(lhs: &Lhs<'_>, hay: &Compact, emb: &[u32]) -> bool {
    lhs.nodes.iter().enumerate().all(|(i, _)| !lhs.deleted[i] || hay.degree(emb[i]) == lhs.deleted_degree[i])
}

fn fixed_binding(lhs: &Lhs<'_>, hay: &Compact, uids: &[&str], b: &BTreeMap<String, String>) -> Result<Vec<u32>, RuleError> {
    let pos: BTreeMap<&str, u32> = uids.iter().enumerate().map(|(i, u)| (*u, i as u32)).collect();
    let mut emb = Vec::with_capacity(lhs.nodes.len());
    for (i, n) in lhs.nodes.iter().enumerate() {
        let uid = b.get(&n.id).ok_or_else(|| RuleError::InvalidBinding(format!("rule node {} unbound", n.id)))?;
        let h = *pos.get(uid.as_str()).ok_or_else(|| RuleError::InvalidBinding(format!("no element {uid}")))?;
        if hay.labels[h as usize] != lhs.graph.labels[i] {
            return Err(RuleError::InvalidBinding(format!("{uid} is not a {}", n.ty)));
        }
        emb.push(h);
    }
    let distinct: BTreeSet<u32> = emb.iter().copied().collect();
    if distinct.len() != emb.len() {
        return Err(RuleError::InvalidBinding("binding is not injective".into()));
    }
    for &(s, d, l) in &lhs.graph.edges {
        if !hay.has_edge(emb[s as usize], emb[d as usize], l) {
            return Err(RuleError::InvalidBinding(format!(
                "missing reference between {} and {}",
                lhs.nodes[s as usize].id, lhs.nodes[d as usize].id
            )));
        }
    }
    if !valid(lhs, hay, &emb) {
        return Err(RuleError::InvalidBinding("deleting would leave dangling references".into()));
    }
    Ok(emb)
}

fn random_binding(lhs: &Lhs<'_>, hay: &Compact, mask: Option<&[bool]>, rng: &mut ChaCha8Rng) -> Option<Vec<u32>> {
    let n = lhs.nodes.len();
    let allowed = |h: u32| mask.is_none_or(|m| m[h as usize]);
    let mut by_label: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (h, &l) in hay.labels.iter().enumerate() {
        if allowed(h as u32) {
            by_label.entry(l).or_default().push(h as u32);
        }
    }
    let cands: Vec<&[u32]> =
        (0..n).map(|i| by_label.get(&lhs.graph.labels[i]).map(Vec::as_slice).unwrap_or(&[])).collect();
    if cands.iter().any(|c| c.is_empty()) {
        return None;
    }
    // Every full assignment is equally likely, so accepted draws are uniform
    // over valid bindings.
    for _ in 0..REJECTION_TRIES {
        let emb: Vec<u32> = cands.iter().map(|c| c[rng.gen_range(0..c.len())]).collect();
        let distinct: BTreeSet<u32> = emb.iter().copied().collect();
        let edges_ok = lhs.graph.edges.iter().all(|&(s, d, l)| hay.has_edge(emb[s as usize], emb[d as usize], l));
        if distinct.len() == n && edges_ok && valid(lhs, hay, &emb) {
            return Some(emb);
        }
    }
    let mut all = Vec::new();
    for_each_embedding_pinned(&lhs.graph, hay, None, |emb| {
        if emb.iter().all(|&h| allowed(h)) && valid(lhs, hay, emb) {
            all.push(emb.to_vec());
        }
        ControlFlow::Continue(())
    });
    pick(all, rng)
}

fn overlapping_binding(
    lhs: &Lhs<'_>,
    hay: &Compact,
    uids: &[&str],
    pool: &BTreeSet<String>,
    mask: Option<&[bool]>,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<u32>> {
    let allowed = |h: u32| mask.is_none_or(|m| m[h as usize]);
    let mut all = BTreeSet::new();
    for (h, uid) in uids.iter().enumerate() {
        if !pool.contains(*uid) {
            continue;
        }
        for i in 0..lhs.nodes.len() as u32 {
            if lhs.graph.labels[i as usize] != hay.labels[h] {
                continue;
            }
            for_each_embedding_pinned(&lhs.graph, hay, Some((i, h as u32)), |emb| {
                if emb.iter().all(|&h| allowed(h)) && valid(lhs, hay, emb) {
                    all.insert(emb.to_vec());
                }
                ControlFlow::Continue(())
            });
        }
    }
    pick(all.into_iter().collect(), rng)
}

fn pick(mut all: Vec<Vec<u32>>, rng: &mut ChaCha8Rng) -> Option<Vec<u32>> {
    if all.is_empty() {
        return None;
    }
    let i = rng.gen_range(0..all.len());
    Some(all.swap_remove(i))
}
