//! Label- and direction-preserving subgraph matching.
//!
//! Matching is non-induced: every needle edge must exist in the haystack
//! between the images of its endpoints, extra haystack edges are fine.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::canon::canonical_code;
use crate::compact::{Compact, Interner};
use crate::graph::{LabeledGraph, NodeId};

/// Returns one injective embedding of `needle` into `hay` if any exists.
pub fn is_subgraph_isomorphic(needle: &LabeledGraph, hay: &LabeledGraph) -> Option<BTreeMap<NodeId, NodeId>> {
    let interner = Interner::from_graphs([needle, hay]);
    let (n, n_ids) = Compact::from_graph(needle, &interner);
    let (h, h_ids) = Compact::from_graph(hay, &interner);
    let mut found = None;
    for_each_embedding(&n, &h, |emb| {
        found = Some(emb.iter().enumerate().map(|(i, &t)| (n_ids[i], h_ids[t as usize])).collect());
        ControlFlow::Break(())
    });
    found
}

/// Isomorphism test through canonical codes. Disconnected graphs are
/// compared by mutual embedding with equal sizes.
pub fn are_isomorphic(a: &LabeledGraph, b: &LabeledGraph) -> bool {
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    match (canonical_code(a), canonical_code(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => is_subgraph_isomorphic(a, b).is_some(),
    }
}

struct Plan {
    order: Vec<u32>,
    // per position: an already placed neighbour to draw candidates from,
    // as (position of neighbour, edge label, edge leaves the neighbour)
    anchor: Vec<Option<(usize, u32, bool)>>,
    // per position: edges to earlier positions that must be present,
    // as (earlier position, edge label, edge leaves the current node)
    checks: Vec<Vec<(usize, u32, bool)>>,
}

fn plan(needle: &Compact, hay: &Compact, first: Option<u32>) -> Plan {
    let n = needle.len();
    let mut freq = BTreeMap::new();
    for &l in &hay.labels {
        *freq.entry(l).or_insert(0usize) += 1;
    }
    let rarity = |v: u32| freq.get(&needle.labels[v as usize]).copied().unwrap_or(0);
    let mut pos = alloc::vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    if let Some(v) = first {
        pos[v as usize] = 0;
        order.push(v);
    }
    while order.len() < n {
        let mut best: Option<(usize, usize, usize, u32)> = None;
        for v in 0..n as u32 {
            if pos[v as usize] != usize::MAX {
                continue;
            }
            let links = needle.out[v as usize]
                .iter()
                .chain(needle.inn[v as usize].iter())
                .filter(|(w, _)| pos[*w as usize] != usize::MAX)
                .count();
            if !order.is_empty() && links == 0 {
                continue;
            }
            // more links to placed nodes, then rarer label, then higher degree
            let key = (usize::MAX - links, rarity(v), usize::MAX - needle.degree(v), v);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        // disconnected needles restart from the rarest remaining node
        let v = match best {
            Some(b) => b.3,
            None => (0..n as u32)
                .filter(|v| pos[*v as usize] == usize::MAX)
                .min_by_key(|&v| (rarity(v), usize::MAX - needle.degree(v), v))
                .unwrap(),
        };
        pos[v as usize] = order.len();
        order.push(v);
    }
    let mut anchor = Vec::with_capacity(n);
    let mut checks = Vec::with_capacity(n);
    for (k, &v) in order.iter().enumerate() {
        let mut cs = Vec::new();
        for &(w, l) in &needle.out[v as usize] {
            if pos[w as usize] < k {
                cs.push((pos[w as usize], l, true));
            }
        }
        for &(w, l) in &needle.inn[v as usize] {
            if pos[w as usize] < k {
                cs.push((pos[w as usize], l, false));
            }
        }
        cs.sort_unstable();
        // anchor edge seen from the neighbour's side
        anchor.push(cs.first().map(|&(p, l, out)| (p, l, !out)));
        checks.push(cs);
    }
    Plan { order, anchor, checks }
}

fn feasible(needle: &Compact, hay: &Compact) -> bool {
    if needle.len() > hay.len() || needle.edges.len() > hay.edges.len() {
        return false;
    }
    let mut counts: BTreeMap<u32, isize> = BTreeMap::new();
    for &l in &hay.labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    for &l in &needle.labels {
        let c = counts.entry(l).or_insert(0);
        *c -= 1;
        if *c < 0 {
            return false;
        }
    }
    let mut triples: BTreeMap<(u32, u32, u32), isize> = BTreeMap::new();
    for &(s, d, l) in &hay.edges {
        *triples.entry((hay.labels[s as usize], l, hay.labels[d as usize])).or_insert(0) += 1;
    }
    for &(s, d, l) in &needle.edges {
        let c = triples.entry((needle.labels[s as usize], l, needle.labels[d as usize])).or_insert(0);
        *c -= 1;
        if *c < 0 {
            return false;
        }
    }
    true
}

/// Calls `f` with every embedding (indexed by needle node) until it breaks.
/// Returns `true` when `f` broke early.
pub(crate) fn for_each_embedding<F>(needle: &Compact, hay: &Compact, f: F) -> bool
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    for_each_embedding_pinned(needle, hay, None, f)
}

/// As [`for_each_embedding`], restricted to embeddings sending needle node
/// `pin.0` to haystack node `pin.1`.
pub(crate) fn for_each_embedding_pinned<F>(needle: &Compact, hay: &Compact, pin: Option<(u32, u32)>, mut f: F) -> bool
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    if needle.len() == 0 {
        return f(&[]).is_break();
    }
    if !feasible(needle, hay) {
        return false;
    }
    let plan = plan(needle, hay, pin.map(|p| p.0));
    let n = needle.len();
    let mut image = alloc::vec![0u32; n];
    let mut used = alloc::vec![false; hay.len()];
    let mut emb = alloc::vec![0u32; n];
    let ctx = Ctx { needle, hay, plan: &plan, pin: pin.map(|p| p.1) };
    search(&ctx, 0, &mut image, &mut used, &mut emb, &mut f).is_break()
}

struct Ctx<'a> {
    needle: &'a Compact,
    hay: &'a Compact,
    plan: &'a Plan,
    pin: Option<u32>,
}

fn search<F>(ctx: &Ctx<'_>, k: usize, image: &mut [u32], used: &mut [bool], emb: &mut [u32], f: &mut F) -> ControlFlow<()>
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    let (needle, hay, plan) = (ctx.needle, ctx.hay, ctx.plan);
    if k == plan.order.len() {
        for (p, &v) in plan.order.iter().enumerate() {
            emb[v as usize] = image[p];
        }
        return f(emb);
    }
    let v = plan.order[k] as usize;
    let label = needle.labels[v];
    let (od, id) = (needle.out[v].len(), needle.inn[v].len());
    let mut try_one = |h: u32, image: &mut [u32], used: &mut [bool], emb: &mut [u32]| -> ControlFlow<()> {
        let hu = h as usize;
        if used[hu] || hay.labels[hu] != label || hay.out[hu].len() < od || hay.inn[hu].len() < id {
            return ControlFlow::Continue(());
        }
        for &(p, l, out) in &plan.checks[k] {
            let w = image[p];
            let ok = if out { hay.has_edge(h, w, l) } else { hay.has_edge(w, h, l) };
            if !ok {
                return ControlFlow::Continue(());
            }
        }
        used[hu] = true;
        image[k] = h;
        let r = search(ctx, k + 1, image, used, emb, f);
        used[hu] = false;
        r
    };
    match plan.anchor[k] {
        Some((p, l, out)) => {
            let a = image[p] as usize;
            let list = if out { &hay.out[a] } else { &hay.inn[a] };
            for &(h, el) in list {
                if el == l {
                    try_one(h, image, used, emb)?;
                }
            }
        }
        None if k == 0 && ctx.pin.is_some() => try_one(ctx.pin.unwrap(), image, used, emb)?,
        None => {
            for h in 0..hay.len() as u32 {
                try_one(h, image, used, emb)?;
            }
        }
    }
    ControlFlow::Continue(())
}
