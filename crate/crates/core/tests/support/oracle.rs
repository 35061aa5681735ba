// Brute-force references for tests: permutation canonical forms,
// exhaustive connected-subgraph enumeration, backtracking subgraph tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use opminer_core::LabeledGraph;
use rand::seq::SliceRandom;
use rand::Rng;

/// Node labels by position and sorted edges, minimised over all node
/// permutations.
pub type Form = (Vec<String>, Vec<(usize, usize, String)>);

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn form(g: &LabeledGraph) -> Form {
    let nodes: Vec<(u64, String)> = g.nodes().map(|(id, l)| (id.0, l.to_string())).collect();
    let n = nodes.len();
    let pos: BTreeMap<u64, usize> = nodes.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
    let edges: Vec<(usize, usize, String)> = g.edges().map(|e| (pos[&e.src.0], pos[&e.dst.0], e.label.clone())).collect();
    let mut sorted_labels: Vec<String> = nodes.iter().map(|(_, l)| l.clone()).collect();
    sorted_labels.sort();
    let mut best: Option<Form> = None;
    for perm in permutations(n) {
        // perm[i] = new position of node i
        let mut labels = vec![String::new(); n];
        for (i, (_, l)) in nodes.iter().enumerate() {
            labels[perm[i]] = l.clone();
        }
        if labels != sorted_labels {
            continue;
        }
        let mut es: Vec<(usize, usize, String)> = edges.iter().map(|(a, b, l)| (perm[*a], perm[*b], l.clone())).collect();
        es.sort();
        let f = (labels, es);
        if best.as_ref().is_none_or(|b| f < *b) {
            best = Some(f);
        }
    }
    best.unwrap_or_default()
}

pub fn isomorphic(a: &LabeledGraph, b: &LabeledGraph) -> bool {
    a.node_count() == b.node_count() && a.edge_count() == b.edge_count() && form(a) == form(b)
}

fn weakly_connected(nodes: &BTreeSet<u64>, edges: &[(u64, u64)]) -> bool {
    let Some(&start) = nodes.iter().next() else { return false };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            for (x, y) in [(a, b), (b, a)] {
                if x == v && seen.insert(y) {
                    stack.push(y);
                }
            }
        }
    }
    seen.len() == nodes.len()
}

/// Every connected subgraph (single nodes and connected edge subsets with
/// their endpoints), up to isomorphism.
pub fn connected_subgraph_forms(g: &LabeledGraph) -> BTreeSet<Form> {
    let mut out = BTreeSet::new();
    for (id, l) in g.nodes() {
        out.insert(form(&LabeledGraph::from_parts([(id.0, l.to_string())], []).unwrap()));
    }
    let edges: Vec<_> = g.edges().cloned().collect();
    assert!(edges.len() <= 16, "too many edges for exhaustive enumeration");
    for mask in 1u32..(1 << edges.len()) {
        let sel: Vec<_> = edges.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| e).collect();
        let nodes: BTreeSet<u64> = sel.iter().flat_map(|e| [e.src.0, e.dst.0]).collect();
        let pairs: Vec<(u64, u64)> = sel.iter().map(|e| (e.src.0, e.dst.0)).collect();
        if !weakly_connected(&nodes, &pairs) {
            continue;
        }
        let sub = LabeledGraph::from_parts(
            nodes.iter().map(|&n| (n, g.label(n.into()).unwrap().to_string())),
            sel.iter().map(|e| (e.src.0, e.dst.0, e.label.clone())),
        )
        .unwrap();
        out.insert(form(&sub));
    }
    out
}

/// Support of every connected subgraph occurring in at least `threshold`
/// transactions.
pub fn mine(db: &[LabeledGraph], threshold: usize) -> BTreeMap<Form, usize> {
    let mut support: BTreeMap<Form, usize> = BTreeMap::new();
    for g in db {
        for f in connected_subgraph_forms(g) {
            *support.entry(f).or_default() += 1;
        }
    }
    support.retain(|_, s| *s >= threshold);
    support
}

/// Non-induced subgraph test by exhaustive injective assignment.
pub fn contains(hay: &LabeledGraph, needle: &LabeledGraph) -> bool {
    let ns: Vec<(u64, String)> = needle.nodes().map(|(i, l)| (i.0, l.to_string())).collect();
    let hs: Vec<(u64, String)> = hay.nodes().map(|(i, l)| (i.0, l.to_string())).collect();
    fn go(k: usize, ns: &[(u64, String)], hs: &[(u64, String)], map: &mut BTreeMap<u64, u64>, needle: &LabeledGraph, hay: &LabeledGraph) -> bool {
        if k == ns.len() {
            return needle.edges().all(|e| hay.contains_edge(map[&e.src.0].into(), map[&e.dst.0].into(), &e.label));
        }
        for (h, hl) in hs {
            if *hl != ns[k].1 || map.values().any(|v| v == h) {
                continue;
            }
            map.insert(ns[k].0, *h);
            if go(k + 1, ns, hs, map, needle, hay) {
                return true;
            }
            map.remove(&ns[k].0);
        }
        false
    }
    go(0, &ns, &hs, &mut BTreeMap::new(), needle, hay)
}

pub fn label_set(n: usize) -> Vec<String> {
    ["A", "B", "C", "D", "E", "F"][..n].iter().map(|s| s.to_string()).collect()
}

/// Random weakly connected graph: a random spanning tree plus up to
/// `extra` more edges, random directions and labels.
pub fn random_connected<R: Rng>(rng: &mut R, nodes: usize, extra: usize, nlabels: &[String], elabels: &[String]) -> LabeledGraph {
    let mut g = LabeledGraph::new();
    for i in 0..nodes as u64 {
        g.add_node(i, nlabels.choose(rng).unwrap().as_str()).unwrap();
    }
    let add = |g: &mut LabeledGraph, a: u64, b: u64, rng: &mut R| {
        let (s, d) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        let l = elabels.choose(rng).unwrap();
        g.add_edge(s, d, l.as_str()).is_ok()
    };
    for i in 1..nodes as u64 {
        let j = rng.gen_range(0..i);
        add(&mut g, i, j, rng);
    }
    if nodes >= 2 {
        for _ in 0..extra {
            let a = rng.gen_range(0..nodes as u64);
            let b = rng.gen_range(0..nodes as u64);
            if a != b {
                add(&mut g, a, b, rng);
            }
        }
    }
    g
}

/// Quadratic SG⁻ scan: drop a pattern when a strictly larger pattern with
/// equal support and at least its compression contains it.
pub fn prune(patterns: &[(LabeledGraph, usize)]) -> Vec<usize> {
    let compr = |g: &LabeledGraph, s: usize| (s as u64 - 1) * (g.node_count() + g.edge_count()) as u64;
    (0..patterns.len())
        .filter(|&i| {
            let (g, s) = &patterns[i];
            !patterns.iter().enumerate().any(|(j, (h, t))| {
                j != i
                    && t == s
                    && h.node_count() + h.edge_count() > g.node_count() + g.edge_count()
                    && compr(h, *t) >= compr(g, *s)
                    && contains(h, g)
            })
        })
        .collect()
}
