//! Canonical codes for connected labeled digraphs.
//!
//! A code is the lexicographically smallest edge sequence over all
//! traversal orders in which every prefix stays connected. Nodes are
//! numbered in order of discovery; each entry records both endpoint
//! positions and labels, the edge label and whether the stored edge points
//! from `from` to `to`. Two graphs share a code iff they are isomorphic.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::compact::{Compact, Interner};
use crate::graph::{GraphError, LabeledGraph};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CodeEntry {
    pub from: u32,
    pub to: u32,
    pub from_label: String,
    /// `true` when the edge runs `from -> to`.
    pub forward: bool,
    pub edge_label: String,
    pub to_label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalCode {
    pub root: String,
    pub entries: Vec<CodeEntry>,
}

impl CanonicalCode {
    pub fn node_count(&self) -> usize {
        1 + self.entries.iter().map(|e| e.from.max(e.to) as usize).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.entries.len()
    }

    /// Rebuilds the graph the code describes, with node ids equal to
    /// discovery positions.
    pub fn to_graph(&self) -> LabeledGraph {
        let mut labels: BTreeMap<u32, &str> = BTreeMap::new();
        labels.insert(0, &self.root);
        for e in &self.entries {
            labels.insert(e.from, &e.from_label);
            labels.insert(e.to, &e.to_label);
        }
        let mut g = LabeledGraph::new();
        for (i, l) in labels {
            g.add_node(i as u64, l).expect("positions unique");
        }
        for e in &self.entries {
            let (s, d) = if e.forward { (e.from, e.to) } else { (e.to, e.from) };
            g.add_edge(s as u64, d as u64, e.edge_label.as_str()).expect("code edges valid");
        }
        g
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.root)?;
        for e in &self.entries {
            let dir = if e.forward { '>' } else { '<' };
            write!(f, "[{} {} {} {} {} {}]", e.from, e.to, e.from_label, dir, e.edge_label, e.to_label)?;
        }
        Ok(())
    }
}

/// Canonical code of a connected graph.
pub fn canonical_code(g: &LabeledGraph) -> Result<CanonicalCode, GraphError> {
    let interner = Interner::from_graphs([g]);
    let (c, _) = Compact::from_graph(g, &interner);
    let (raw, _) = min_code(&c)?;
    Ok(raw.resolve(&interner))
}

/// `(from, to, from_label, forward, edge_label, to_label)` over interned labels.
pub(crate) type RawEntry = (u32, u32, u32, bool, u32, u32);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct RawCode {
    pub root: u32,
    pub entries: Vec<RawEntry>,
}

impl RawCode {
    pub(crate) fn resolve(&self, interner: &Interner) -> CanonicalCode {
        CanonicalCode {
            root: interner.name(self.root).into(),
            entries: self
                .entries
                .iter()
                .map(|&(from, to, fl, forward, el, tl)| CodeEntry {
                    from,
                    to,
                    from_label: interner.name(fl).into(),
                    forward,
                    edge_label: interner.name(el).into(),
                    to_label: interner.name(tl).into(),
                })
                .collect(),
        }
    }
}

const UNSEEN: u32 = u32::MAX;

#[derive(Clone)]
struct State {
    order: Vec<u32>,
    pos: Vec<u32>,
    used: Vec<u64>,
}

impl State {
    fn is_used(&self, eid: usize) -> bool {
        self.used[eid / 64] >> (eid % 64) & 1 == 1
    }

    fn mark(&mut self, eid: usize) {
        self.used[eid / 64] |= 1 << (eid % 64);
    }
}

struct Incidence {
    // (neighbour, edge label, edge leaves this node, edge id)
    adj: Vec<Vec<(u32, u32, bool, usize)>>,
    twin: Vec<usize>,
}

fn incidence(g: &Compact) -> Incidence {
    let n = g.len();
    let mut adj = alloc::vec![Vec::new(); n];
    for (eid, &(s, d, l)) in g.edges.iter().enumerate() {
        adj[s as usize].push((d, l, true, eid));
        adj[d as usize].push((s, l, false, eid));
    }
    // Non-adjacent nodes with equal label and equal labeled neighbourhood are
    // exchangeable by an automorphism; the search only needs one of them.
    type Signature = (u32, Vec<(u32, u32, bool)>);
    let mut sig_ids: BTreeMap<Signature, usize> = BTreeMap::new();
    let mut twin = Vec::with_capacity(n);
    for (v, nbrs) in adj.iter().enumerate() {
        let mut sig: Vec<_> = nbrs.iter().map(|&(w, l, o, _)| (w, l, o)).collect();
        sig.sort_unstable();
        let next = sig_ids.len();
        twin.push(*sig_ids.entry((g.labels[v], sig)).or_insert(next));
    }
    Incidence { adj, twin }
}

/// Minimal code plus the node order realising it (`order[k]` is the node at
/// position `k`).
pub(crate) fn min_code(g: &Compact) -> Result<(RawCode, Vec<u32>), GraphError> {
    let n = g.len();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if !g.is_connected() {
        return Err(GraphError::NotConnected);
    }
    let root = *g.labels.iter().min().unwrap();
    let inc = incidence(g);
    let words = g.edges.len().div_ceil(64).max(1);

    let mut states: Vec<State> = Vec::new();
    let mut seen_twins = Vec::new();
    for v in 0..n as u32 {
        if g.labels[v as usize] != root || seen_twins.contains(&inc.twin[v as usize]) {
            continue;
        }
        seen_twins.push(inc.twin[v as usize]);
        let mut pos = alloc::vec![UNSEEN; n];
        pos[v as usize] = 0;
        states.push(State { order: alloc::vec![v], pos, used: alloc::vec![0; words] });
    }

    let mut entries = Vec::with_capacity(g.edges.len());
    for _ in 0..g.edges.len() {
        let mut best: Option<RawEntry> = None;
        let mut cands: Vec<(usize, RawEntry, u32, usize)> = Vec::new();
        for (si, st) in states.iter().enumerate() {
            let next = st.order.len() as u32;
            for (i, &v) in st.order.iter().enumerate() {
                for &(w, l, out, eid) in &inc.adj[v as usize] {
                    if st.is_used(eid) {
                        continue;
                    }
                    let j = st.pos[w as usize];
                    let entry = if j == UNSEEN {
                        (i as u32, next, g.labels[v as usize], out, l, g.labels[w as usize])
                    } else if (i as u32) > j {
                        (i as u32, j, g.labels[v as usize], out, l, g.labels[w as usize])
                    } else {
                        // seen again from the later endpoint
                        continue;
                    };
                    match best {
                        Some(b) if entry > b => continue,
                        Some(b) if entry < b => cands.clear(),
                        _ => {}
                    }
                    best = Some(entry);
                    cands.push((si, entry, w, eid));
                }
            }
        }
        let best = best.expect("connected graph has a next edge");
        entries.push(best);

        let mut next_states = Vec::with_capacity(cands.len());
        let mut last_state = usize::MAX;
        let mut twins_here: Vec<usize> = Vec::new();
        for (si, _, w, eid) in cands {
            if si != last_state {
                last_state = si;
                twins_here.clear();
            }
            let mut ns = states[si].clone();
            if ns.pos[w as usize] == UNSEEN {
                let t = inc.twin[w as usize];
                if twins_here.contains(&t) {
                    continue;
                }
                twins_here.push(t);
                ns.pos[w as usize] = ns.order.len() as u32;
                ns.order.push(w);
            }
            ns.mark(eid);
            next_states.push(ns);
        }
        states = next_states;
    }
    let order = states.swap_remove(0).order;
    Ok((RawCode { root, entries }, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn g(nodes: &[(u64, &str)], edges: &[(u64, u64, &str)]) -> LabeledGraph {
        LabeledGraph::from_parts(
            nodes.iter().map(|(i, l)| (*i, l.to_string())),
            edges.iter().map(|(s, d, l)| (*s, *d, l.to_string())),
        )
        .unwrap()
    }

    #[test]
    fn single_node() {
        let code = canonical_code(&g(&[(7, "A")], &[])).unwrap();
        assert_eq!(code.root, "A");
        assert!(code.entries.is_empty());
        assert_eq!(code.node_count(), 1);
    }

    #[test]
    fn relabeled_ids_same_code() {
        let a = g(&[(0, "A"), (1, "B")], &[(0, 1, "x")]);
        let b = g(&[(5, "B"), (9, "A")], &[(9, 5, "x")]);
        assert_eq!(canonical_code(&a).unwrap(), canonical_code(&b).unwrap());
    }

    #[test]
    fn direction_matters() {
        let a = g(&[(0, "A"), (1, "B")], &[(0, 1, "x")]);
        let b = g(&[(0, "A"), (1, "B")], &[(1, 0, "x")]);
        assert_ne!(canonical_code(&a).unwrap(), canonical_code(&b).unwrap());
    }

    #[test]
    fn disconnected_rejected() {
        let a = g(&[(0, "A"), (1, "B")], &[]);
        assert_eq!(canonical_code(&a), Err(GraphError::NotConnected));
        assert_eq!(canonical_code(&LabeledGraph::new()), Err(GraphError::Empty));
    }

    #[test]
    fn code_rebuilds_isomorphic_graph() {
        let a = g(
            &[(0, "P"), (1, "C"), (2, "C"), (3, "X")],
            &[(0, 1, "has"), (0, 2, "has"), (1, 3, "ref"), (2, 3, "ref"), (3, 0, "up")],
        );
        let code = canonical_code(&a).unwrap();
        assert_eq!(canonical_code(&code.to_graph()).unwrap(), code);
        assert_eq!(code.node_count(), 4);
        assert_eq!(code.edge_count(), 5);
    }

    #[test]
    fn star_with_many_twins_is_fast() {
        let mut nodes = alloc::vec![(0u64, "Hub")];
        let mut edges = alloc::vec::Vec::new();
        for i in 1..=40u64 {
            nodes.push((i, "Leaf"));
            edges.push((0, i, "e"));
        }
        let code = canonical_code(&g(&nodes, &edges)).unwrap();
        assert_eq!(code.edge_count(), 40);
    }
}
