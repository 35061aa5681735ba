// Dense integer view of labeled graphs shared by canonicalisation, matching
// and mining. Label ids are assigned in string order so that comparisons on
// ids agree with comparisons on the labels themselves.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::{LabeledGraph, NodeId};

#[derive(Clone, Debug, Default)]
pub(crate) struct Interner {
    ids: BTreeMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    /// Builds an order-preserving interner over every label in `graphs`.
    pub(crate) fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a LabeledGraph>) -> Self {
        let mut all = BTreeSet::new();
        for g in graphs {
            for (_, l) in g.nodes() {
                all.insert(l);
            }
            for e in g.edges() {
                all.insert(e.label.as_str());
            }
        }
        let names: Vec<String> = all.into_iter().map(String::from).collect();
        let ids = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        Interner { ids, names }
    }

    pub(crate) fn get(&self, label: &str) -> Option<u32> {
        self.ids.get(label).copied()
    }

    pub(crate) fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Compact {
    pub labels: Vec<u32>,
    /// `(src, dst, label)` over dense indices.
    pub edges: Vec<(u32, u32, u32)>,
    /// Outgoing `(dst, label)` per node, sorted.
    pub out: Vec<Vec<(u32, u32)>>,
    /// Incoming `(src, label)` per node, sorted.
    pub inn: Vec<Vec<(u32, u32)>>,
}

impl Compact {
    pub(crate) fn new(labels: Vec<u32>, edges: Vec<(u32, u32, u32)>) -> Self {
        let n = labels.len();
        let mut out = alloc::vec![Vec::new(); n];
        let mut inn = alloc::vec![Vec::new(); n];
        for &(s, d, l) in &edges {
            out[s as usize].push((d, l));
            inn[d as usize].push((s, l));
        }
        for v in out.iter_mut().chain(inn.iter_mut()) {
            v.sort_unstable();
        }
        Compact { labels, edges, out, inn }
    }

    /// Converts `g`; returns the dense view and the original id of each index.
    /// Every label of `g` must be known to `interner`.
    pub(crate) fn from_graph(g: &LabeledGraph, interner: &Interner) -> (Self, Vec<NodeId>) {
        let ids: Vec<NodeId> = g.nodes().map(|(id, _)| id).collect();
        let index: BTreeMap<NodeId, u32> = ids.iter().enumerate().map(|(i, id)| (*id, i as u32)).collect();
        let labels = g.nodes().map(|(_, l)| interner.get(l).expect("label interned")).collect();
        let edges = g
            .edges()
            .map(|e| (index[&e.src], index[&e.dst], interner.get(&e.label).expect("label interned")))
            .collect();
        (Compact::new(labels, edges), ids)
    }

    pub(crate) fn len(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn has_edge(&self, s: u32, d: u32, l: u32) -> bool {
        self.out[s as usize].binary_search(&(d, l)).is_ok()
    }

    pub(crate) fn degree(&self, v: u32) -> usize {
        self.out[v as usize].len() + self.inn[v as usize].len()
    }

    pub(crate) fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return false;
        }
        let mut seen = alloc::vec![false; n];
        let mut stack = alloc::vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in self.out[v as usize].iter().chain(self.inn[v as usize].iter()) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Back to a labeled graph with ids `0..n`.
    pub(crate) fn to_graph(&self, interner: &Interner) -> LabeledGraph {
        let mut g = LabeledGraph::new();
        for (i, &l) in self.labels.iter().enumerate() {
            g.add_node(i as u64, interner.name(l)).expect("fresh id");
        }
        for &(s, d, l) in &self.edges {
            g.add_edge(s as u64, d as u64, interner.name(l)).expect("valid edge");
        }
        g
    }

    /// Relabels nodes so that new index `k` is old index `order[k]`.
    pub(crate) fn permuted(&self, order: &[u32]) -> Compact {
        let mut pos = alloc::vec![0u32; order.len()];
        for (k, &v) in order.iter().enumerate() {
            pos[v as usize] = k as u32;
        }
        let labels = order.iter().map(|&v| self.labels[v as usize]).collect();
        let mut edges: Vec<_> =
            self.edges.iter().map(|&(s, d, l)| (pos[s as usize], pos[d as usize], l)).collect();
        edges.sort_unstable();
        Compact::new(labels, edges)
    }
}
