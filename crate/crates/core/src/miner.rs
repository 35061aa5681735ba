//! Transaction-based frequent connected subgraph mining.
//!
//! Patterns grow one edge at a time, either towards a new node or between
//! two existing ones, driven by embedding lists kept per transaction.
//! Children are deduplicated by canonical code; every (parent, child)
//! generation pair becomes a lattice link, which yields exactly the
//! direct-subgraph relation among frequent patterns. Support counts
//! transactions, not embeddings.
//!
//! Embedding lists are capped per transaction. Past the cap a transaction is
//! marked as overflowing and children are re-derived there with the
//! subgraph matcher, so the result stays exact.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::{min_code, CanonicalCode, RawCode};
use crate::compact::{Compact, Interner};
use crate::graph::{GraphError, LabeledGraph};
use crate::iso::for_each_embedding;

/// Connected graphs over which support is counted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransactionDb {
    transactions: Vec<LabeledGraph>,
    sources: Vec<String>,
}

impl TransactionDb {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a transaction; it must be connected.
    pub fn push(&mut self, graph: LabeledGraph, source: impl Into<String>) -> Result<(), GraphError> {
        if graph.is_empty() {
            return Err(GraphError::Empty);
        }
        if !graph.is_connected() {
            return Err(GraphError::NotConnected);
        }
        self.transactions.push(graph);
        self.sources.push(source.into());
        Ok(())
    }

    pub fn from_graphs(graphs: impl IntoIterator<Item = LabeledGraph>) -> Result<Self, GraphError> {
        let mut db = Self::new();
        for (i, g) in graphs.into_iter().enumerate() {
            db.push(g, alloc::format!("{i}"))?;
        }
        Ok(db)
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[LabeledGraph] {
        &self.transactions
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn average_node_count(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.transactions.iter().map(|g| g.node_count()).sum::<usize>() as f64 / self.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    /// Node ids are positions in the canonical code.
    pub graph: LabeledGraph,
    pub code: CanonicalCode,
    pub support: usize,
    /// Indices of direct supergraphs (one edge larger).
    pub parents: Vec<usize>,
    /// Indices of direct subgraphs (one edge smaller).
    pub children: Vec<usize>,
    /// Supporting transaction indices, ascending.
    pub transactions: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    /// Ordered by edge count, then canonical code.
    pub patterns: Vec<Pattern>,
    pub threshold: usize,
    /// Set when mining stopped early; the lattice is then a prefix of the
    /// full result by edge count.
    pub partial: bool,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn find(&self, code: &CanonicalCode) -> Option<usize> {
        self.patterns.iter().position(|p| &p.code == code)
    }

    /// Sub-lattice over `keep` (ascending indices) with the links among them.
    pub fn restrict(&self, keep: &[usize]) -> Lattice {
        let mut new_index = BTreeMap::new();
        for (n, &o) in keep.iter().enumerate() {
            new_index.insert(o, n);
        }
        let remap = |v: &[usize]| v.iter().filter_map(|i| new_index.get(i).copied()).collect();
        let patterns = keep
            .iter()
            .map(|&o| {
                let p = &self.patterns[o];
                Pattern { parents: remap(&p.parents), children: remap(&p.children), ..p.clone() }
            })
            .collect();
        Lattice { patterns, threshold: self.threshold, partial: self.partial }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineConfig {
    pub threshold: usize,
    /// Reject thresholds above the transaction count instead of returning
    /// an empty lattice.
    pub strict: bool,
    pub max_nodes: Option<usize>,
    pub max_edges: Option<usize>,
    /// Embeddings kept per pattern and transaction before falling back to
    /// the matcher.
    pub embedding_cap: usize,
    pub parallel: bool,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig { threshold: 2, strict: false, max_nodes: None, max_edges: None, embedding_cap: 4096, parallel: true }
    }
}

impl MineConfig {
    pub fn with_threshold(threshold: usize) -> Self {
        MineConfig { threshold, ..Self::default() }
    }
}

/// Wall-clock or other external stop signal, polled between work items.
pub trait Budget: Sync {
    fn expired(&self) -> bool;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoBudget;

impl Budget for NoBudget {
    fn expired(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MineError {
    #[error("threshold must be at least 1")]
    ZeroThreshold,
    #[error("threshold {threshold} exceeds the {transactions} transactions")]
    ThresholdTooHigh { threshold: usize, transactions: usize },
    #[error("threshold {threshold} outside 1..={transactions}")]
    ThresholdOutOfRange { threshold: usize, transactions: usize },
    #[error("mining budget exceeded after {} patterns", .0.len())]
    BudgetExceeded(Box<Lattice>),
}

/// Absolute threshold for a ratio of the transaction count, rounded up and
/// at least 1.
pub fn relative_threshold(ratio: f64, transactions: usize) -> usize {
    let x = ratio * transactions as f64;
    let mut t = x as usize;
    if (t as f64) < x {
        t += 1;
    }
    t.max(1)
}

/// Node count of the `threshold`-th largest transaction.
pub fn size_at_threshold(db: &TransactionDb, threshold: usize) -> Result<usize, MineError> {
    if threshold == 0 || threshold > db.len() {
        return Err(MineError::ThresholdOutOfRange { threshold, transactions: db.len() });
    }
    let mut sizes: Vec<usize> = db.transactions.iter().map(|g| g.node_count()).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(sizes[threshold - 1])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub t_min: usize,
    /// Defaults to the transaction count.
    pub t_max: Option<usize>,
    /// Node-count range of the subtrees that are counted.
    pub s_lo: usize,
    pub s_hi: usize,
    /// Largest acceptable number of frequent subtrees in range.
    pub tree_budget: usize,
    pub parallel: bool,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { t_min: 2, t_max: None, s_lo: 3, s_hi: 8, tree_budget: 100, parallel: true }
    }
}

/// Smallest threshold in `[t_min, t_max]` whose frequent subtrees with
/// `s_lo..=s_hi` nodes number at most `tree_budget`; `t_max` if none does.
pub fn calibrate_threshold(db: &TransactionDb, cfg: &CalibrationConfig, budget: &dyn Budget) -> usize {
    let t_max = cfg.t_max.unwrap_or(db.len());
    if t_max <= cfg.t_min {
        return cfg.t_min.max(1);
    }
    let prepared = Prepared::new(db);
    let within = |t: usize| {
        let mcfg = MineConfig {
            threshold: t,
            strict: false,
            max_nodes: Some(cfg.s_hi),
            max_edges: None,
            embedding_cap: MineConfig::default().embedding_cap,
            parallel: cfg.parallel,
        };
        let limit = CountLimit { lo: cfg.s_lo, hi: cfg.s_hi, limit: cfg.tree_budget };
        let run = run(&prepared, &mcfg, budget, true, Some(limit));
        run.stop != Stop::CountLimit
    };
    let (mut lo, mut hi) = (cfg.t_min.max(1), t_max);
    if !within(hi) {
        return t_max;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if within(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Mines every connected subgraph contained in at least `cfg.threshold`
/// transactions.
pub fn mine(db: &TransactionDb, cfg: &MineConfig, budget: &dyn Budget) -> Result<Lattice, MineError> {
    if cfg.threshold == 0 {
        return Err(MineError::ZeroThreshold);
    }
    if cfg.threshold > db.len() {
        if cfg.strict {
            return Err(MineError::ThresholdTooHigh { threshold: cfg.threshold, transactions: db.len() });
        }
        return Ok(Lattice { patterns: Vec::new(), threshold: cfg.threshold, partial: false });
    }
    let prepared = Prepared::new(db);
    let run = run(&prepared, cfg, budget, false, None);
    let lattice = run.into_lattice(&prepared.interner, cfg.threshold);
    if lattice.partial {
        return Err(MineError::BudgetExceeded(Box::new(lattice)));
    }
    Ok(lattice)
}

// ---------------------------------------------------------------------------

struct Prepared {
    interner: Interner,
    graphs: Vec<Compact>,
    // (node label, edge leaves node, edge label, neighbour label) per transaction
    vocab: Vec<BTreeSet<(u32, bool, u32, u32)>>,
}

impl Prepared {
    fn new(db: &TransactionDb) -> Self {
        let interner = Interner::from_graphs(db.transactions.iter());
        let graphs: Vec<Compact> = db.transactions.iter().map(|g| Compact::from_graph(g, &interner).0).collect();
        let vocab = graphs
            .iter()
            .map(|c| {
                let mut v = BTreeSet::new();
                for &(s, d, l) in &c.edges {
                    let (ls, ld) = (c.labels[s as usize], c.labels[d as usize]);
                    v.insert((ls, true, l, ld));
                    v.insert((ld, false, l, ls));
                }
                v
            })
            .collect();
        Prepared { interner, graphs, vocab }
    }
}

#[derive(Clone, Debug)]
enum Occ {
    /// Flat embeddings, stride = pattern node count.
    List(Vec<u32>),
    Overflow,
}

#[derive(Clone, Debug)]
struct Mined {
    g: Compact,
    code: RawCode,
    occ: Vec<(u32, Occ)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ext {
    Fwd { from: u32, out: bool, elabel: u32, nlabel: u32 },
    Bwd { from: u32, to: u32, elabel: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stop {
    Done,
    Budget,
    CountLimit,
}

#[derive(Clone, Copy)]
struct CountLimit {
    lo: usize,
    hi: usize,
    limit: usize,
}

struct Run {
    patterns: Vec<Mined>,
    // (grown, base) index pairs into `patterns`
    links: Vec<(usize, usize)>,
    stop: Stop,
}

impl Run {
    fn into_lattice(self, interner: &Interner, threshold: usize) -> Lattice {
        let Run { patterns, links, stop } = self;
        let mut order: Vec<usize> = (0..patterns.len()).collect();
        order.sort_by(|&a, &b| {
            (patterns[a].g.edges.len(), &patterns[a].code).cmp(&(patterns[b].g.edges.len(), &patterns[b].code))
        });
        let mut rank = alloc::vec![0usize; patterns.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let mut out: Vec<Pattern> = order
            .iter()
            .map(|&i| {
                let m = &patterns[i];
                Pattern {
                    graph: m.g.to_graph(interner),
                    code: m.code.resolve(interner),
                    support: m.occ.len(),
                    parents: Vec::new(),
                    children: Vec::new(),
                    transactions: m.occ.iter().map(|(t, _)| *t as usize).collect(),
                }
            })
            .collect();
        // generation runs from subgraph to supergraph
        for (grown, base) in links {
            let (sup, sub) = (rank[grown], rank[base]);
            out[sub].parents.push(sup);
            out[sup].children.push(sub);
        }
        for p in &mut out {
            p.parents.sort_unstable();
            p.parents.dedup();
            p.children.sort_unstable();
            p.children.dedup();
        }
        Lattice { patterns: out, threshold, partial: stop == Stop::Budget }
    }
}

fn par_map<T: Sync, R: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "std")]
    if parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

fn single_nodes(p: &Prepared, cfg: &MineConfig) -> Vec<Mined> {
    let mut by_label: BTreeMap<u32, Vec<(u32, Occ)>> = BTreeMap::new();
    for (tid, g) in p.graphs.iter().enumerate() {
        let mut per: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (v, &l) in g.labels.iter().enumerate() {
            per.entry(l).or_default().push(v as u32);
        }
        for (l, nodes) in per {
            let occ = if nodes.len() > cfg.embedding_cap { Occ::Overflow } else { Occ::List(nodes) };
            by_label.entry(l).or_default().push((tid as u32, occ));
        }
    }
    by_label
        .into_iter()
        .filter(|(_, occ)| occ.len() >= cfg.threshold)
        .map(|(l, occ)| Mined {
            g: Compact::new(alloc::vec![l], Vec::new()),
            code: RawCode { root: l, entries: Vec::new() },
            occ,
        })
        .collect()
}

fn allowed(ext: &Ext, n: usize, cfg: &MineConfig, trees_only: bool, edges: usize) -> bool {
    if cfg.max_edges.is_some_and(|m| edges + 1 > m) {
        return false;
    }
    match ext {
        Ext::Fwd { .. } => cfg.max_nodes.is_none_or(|m| n < m),
        Ext::Bwd { .. } => !trees_only,
    }
}

fn child_graph(g: &Compact, ext: &Ext) -> Compact {
    let mut labels = g.labels.clone();
    let mut edges = g.edges.clone();
    match *ext {
        Ext::Fwd { from, out, elabel, nlabel } => {
            let new = labels.len() as u32;
            labels.push(nlabel);
            edges.push(if out { (from, new, elabel) } else { (new, from, elabel) });
        }
        Ext::Bwd { from, to, elabel } => edges.push((from, to, elabel)),
    }
    Compact::new(labels, edges)
}

/// Extensions seen from one embedding, appended to `out`.
fn extensions(pat: &Compact, t: &Compact, emb: &[u32], slot: &mut [u32], trees_only: bool, out: &mut Vec<Ext>) {
    const FREE: u32 = u32::MAX;
    for (i, &g) in emb.iter().enumerate() {
        slot[g as usize] = i as u32;
    }
    for (i, &g) in emb.iter().enumerate() {
        for &(h, l) in &t.out[g as usize] {
            let j = slot[h as usize];
            if j == FREE {
                out.push(Ext::Fwd { from: i as u32, out: true, elabel: l, nlabel: t.labels[h as usize] });
            } else if !trees_only && !pat.has_edge(i as u32, j, l) {
                out.push(Ext::Bwd { from: i as u32, to: j, elabel: l });
            }
        }
        for &(h, l) in &t.inn[g as usize] {
            if slot[h as usize] == FREE {
                out.push(Ext::Fwd { from: i as u32, out: false, elabel: l, nlabel: t.labels[h as usize] });
            }
        }
    }
    for &g in emb {
        slot[g as usize] = FREE;
    }
}

/// Every extension the transaction's label vocabulary admits; used where
/// embeddings overflowed.
fn vocab_extensions(pat: &Compact, vocab: &BTreeSet<(u32, bool, u32, u32)>, trees_only: bool, out: &mut Vec<Ext>) {
    let n = pat.len() as u32;
    for i in 0..n {
        let li = pat.labels[i as usize];
        for &(_, o, el, nl) in vocab.range((li, false, 0, 0)..=(li, true, u32::MAX, u32::MAX)) {
            out.push(Ext::Fwd { from: i, out: o, elabel: el, nlabel: nl });
            if trees_only {
                continue;
            }
            if o {
                for j in 0..n {
                    if j != i && pat.labels[j as usize] == nl && !pat.has_edge(i, j, el) {
                        out.push(Ext::Bwd { from: i, to: j, elabel: el });
                    }
                }
            }
        }
    }
}

struct Candidate {
    code: RawCode,
    order: Vec<u32>,
    child: Compact,
    parent: usize,
    ext: Ext,
}

fn expand(p: &Prepared, parent_idx: usize, m: &Mined, cfg: &MineConfig, trees_only: bool) -> Vec<Candidate> {
    let n = m.g.len();
    let edges = m.g.edges.len();
    let mut counts: BTreeMap<Ext, usize> = BTreeMap::new();
    let mut buf = Vec::new();
    for (tid, occ) in &m.occ {
        let t = &p.graphs[*tid as usize];
        buf.clear();
        match occ {
            Occ::List(flat) => {
                let mut slot = alloc::vec![u32::MAX; t.len()];
                for emb in flat.chunks_exact(n) {
                    extensions(&m.g, t, emb, &mut slot, trees_only, &mut buf);
                }
            }
            Occ::Overflow => vocab_extensions(&m.g, &p.vocab[*tid as usize], trees_only, &mut buf),
        }
        buf.sort_unstable();
        buf.dedup();
        for ext in buf.iter().filter(|e| allowed(e, n, cfg, trees_only, edges)) {
            *counts.entry(*ext).or_insert(0) += 1;
        }
    }
    let mut seen: BTreeSet<RawCode> = BTreeSet::new();
    let mut out = Vec::new();
    for (ext, c) in counts {
        if c < cfg.threshold {
            continue;
        }
        let child = child_graph(&m.g, &ext);
        let (code, order) = min_code(&child).expect("extension keeps the pattern connected");
        if seen.insert(code.clone()) {
            out.push(Candidate { code, order, child, parent: parent_idx, ext });
        }
    }
    out
}

fn materialize(p: &Prepared, parent: &Mined, cand: &Candidate, cfg: &MineConfig) -> Option<Mined> {
    let n = parent.g.len();
    let canon = cand.child.permuted(&cand.order);
    let cn = canon.len();
    let mut occ = Vec::new();
    let mut scratch = Vec::new();
    for (tid, pocc) in &parent.occ {
        let t = &p.graphs[*tid as usize];
        scratch.clear();
        let mut overflow = false;
        match pocc {
            Occ::List(flat) => {
                let push = |child_emb: &[u32], scratch: &mut Vec<u32>| {
                    for &k in &cand.order {
                        scratch.push(child_emb[k as usize]);
                    }
                };
                let mut tmp: Vec<u32> = Vec::with_capacity(n + 1);
                for emb in flat.chunks_exact(n) {
                    match cand.ext {
                        Ext::Fwd { from, out, elabel, nlabel } => {
                            let g = emb[from as usize] as usize;
                            let list = if out { &t.out[g] } else { &t.inn[g] };
                            for &(h, l) in list {
                                if l == elabel && t.labels[h as usize] == nlabel && !emb.contains(&h) {
                                    tmp.clear();
                                    tmp.extend_from_slice(emb);
                                    tmp.push(h);
                                    push(&tmp, &mut scratch);
                                }
                            }
                        }
                        Ext::Bwd { from, to, elabel } => {
                            if t.has_edge(emb[from as usize], emb[to as usize], elabel) {
                                push(emb, &mut scratch);
                            }
                        }
                    }
                    if scratch.len() / cn > cfg.embedding_cap {
                        overflow = true;
                        break;
                    }
                }
            }
            Occ::Overflow => {
                let mut count = 0usize;
                for_each_embedding(&canon, t, |emb| {
                    count += 1;
                    if count > cfg.embedding_cap {
                        overflow = true;
                        return ControlFlow::Break(());
                    }
                    scratch.extend_from_slice(emb);
                    ControlFlow::Continue(())
                });
            }
        }
        if overflow {
            occ.push((*tid, Occ::Overflow));
        } else if !scratch.is_empty() {
            occ.push((*tid, Occ::List(core::mem::take(&mut scratch))));
        }
    }
    (occ.len() >= cfg.threshold).then(|| Mined { g: canon, code: cand.code.clone(), occ })
}

fn run(p: &Prepared, cfg: &MineConfig, budget: &dyn Budget, trees_only: bool, limit: Option<CountLimit>) -> Run {
    let mut patterns = single_nodes(p, cfg);
    let mut links = Vec::new();
    let counted = |m: &Mined| limit.is_some_and(|l| (l.lo..=l.hi).contains(&m.g.len()));
    let mut count = patterns.iter().filter(|m| counted(m)).count();
    if limit.is_some_and(|l| count > l.limit) {
        return Run { patterns, links, stop: Stop::CountLimit };
    }
    let mut level: Vec<usize> = (0..patterns.len()).collect();
    while !level.is_empty() {
        if budget.expired() {
            return Run { patterns, links, stop: Stop::Budget };
        }
        let level_refs: Vec<(usize, &Mined)> = level.iter().map(|&i| (i, &patterns[i])).collect();
        let expanded: Vec<Option<Vec<Candidate>>> = par_map(&level_refs, cfg.parallel, |(i, m)| {
            if budget.expired() {
                return None;
            }
            Some(expand(p, *i, m, cfg, trees_only))
        });
        if expanded.iter().any(Option::is_none) {
            return Run { patterns, links, stop: Stop::Budget };
        }
        let mut by_code: BTreeMap<RawCode, (Candidate, Vec<usize>)> = BTreeMap::new();
        for cand in expanded.into_iter().flatten().flatten() {
            match by_code.get_mut(&cand.code) {
                Some((rep, parents)) => {
                    parents.push(cand.parent);
                    if (cand.parent, cand.ext) < (rep.parent, rep.ext) {
                        *rep = cand;
                    }
                }
                None => {
                    let parent = cand.parent;
                    by_code.insert(cand.code.clone(), (cand, alloc::vec![parent]));
                }
            }
        }
        let groups: Vec<(Candidate, Vec<usize>)> = by_code.into_values().collect();
        let built: Vec<Option<Mined>> = par_map(&groups, cfg.parallel, |(cand, _)| {
            if budget.expired() {
                return None;
            }
            materialize(p, &patterns[cand.parent], cand, cfg)
        });
        if budget.expired() {
            return Run { patterns, links, stop: Stop::Budget };
        }
        let mut next = Vec::new();
        for ((_, parents), mined) in groups.into_iter().zip(built) {
            let Some(mined) = mined else { continue };
            let idx = patterns.len();
            if counted(&mined) {
                count += 1;
            }
            patterns.push(mined);
            for par in parents {
                links.push((idx, par));
            }
            next.push(idx);
            if limit.is_some_and(|l| count > l.limit) {
                return Run { patterns, links, stop: Stop::CountLimit };
            }
        }
        level = next;
    }
    Run { patterns, links, stop: Stop::Done }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn g(nodes: &[(u64, &str)], edges: &[(u64, u64, &str)]) -> LabeledGraph {
        LabeledGraph::from_parts(
            nodes.iter().map(|(i, l)| (*i, l.to_string())),
            edges.iter().map(|(s, d, l)| (*s, *d, l.to_string())),
        )
        .unwrap()
    }

    fn seq() -> MineConfig {
        MineConfig { parallel: false, ..MineConfig::with_threshold(2) }
    }

    #[test]
    fn three_copies_of_an_edge() {
        let t = g(&[(0, "A"), (1, "B")], &[(0, 1, "x")]);
        let db = TransactionDb::from_graphs(vec![t.clone(), t.clone(), t]).unwrap();
        let lat = mine(&db, &seq(), &NoBudget).unwrap();
        assert_eq!(lat.len(), 3);
        assert!(lat.patterns.iter().all(|p| p.support == 3));
        let edge = &lat.patterns[2];
        assert_eq!(edge.graph.edge_count(), 1);
        assert_eq!(edge.children, vec![0, 1]);
        assert_eq!(lat.patterns[0].parents, vec![2]);
    }

    #[test]
    fn threshold_above_db() {
        let t = g(&[(0, "A")], &[]);
        let db = TransactionDb::from_graphs(vec![t]).unwrap();
        assert!(mine(&db, &seq(), &NoBudget).unwrap().is_empty());
        let strict = MineConfig { strict: true, ..seq() };
        assert!(matches!(mine(&db, &strict, &NoBudget), Err(MineError::ThresholdTooHigh { .. })));
        assert_eq!(mine(&db, &MineConfig::with_threshold(0), &NoBudget), Err(MineError::ZeroThreshold));
    }

    #[test]
    fn multiple_embeddings_count_once() {
        // one transaction holds the pattern three times
        let many = g(
            &[(0, "A"), (1, "B"), (2, "B"), (3, "B")],
            &[(0, 1, "x"), (0, 2, "x"), (0, 3, "x")],
        );
        let one = g(&[(0, "A"), (1, "B")], &[(0, 1, "x")]);
        let db = TransactionDb::from_graphs(vec![many, one]).unwrap();
        let lat = mine(&db, &MineConfig { threshold: 1, ..seq() }, &NoBudget).unwrap();
        let edge = lat.patterns.iter().find(|p| p.graph.edge_count() == 1).unwrap();
        assert_eq!(edge.support, 2);
    }

    #[test]
    fn overflow_path_matches_lists() {
        let mut nodes = vec![(0u64, "Hub")];
        let mut edges = vec![];
        for i in 1..=6u64 {
            nodes.push((i, "Leaf"));
            edges.push((0, i, "e"));
        }
        let star = g(&nodes, &edges);
        let db = TransactionDb::from_graphs(vec![star.clone(), star]).unwrap();
        let full = mine(&db, &seq(), &NoBudget).unwrap();
        let capped = mine(&db, &MineConfig { embedding_cap: 3, ..seq() }, &NoBudget).unwrap();
        assert_eq!(full, capped);
        // stars with 0..=6 leaves plus the lone leaf
        assert_eq!(full.len(), 8);
    }

    #[test]
    fn size_at_threshold_order_statistic() {
        let sized = |n: u64| {
            let nodes: Vec<(u64, &str)> = (0..n).map(|i| (i, "A")).collect();
            let edges: Vec<(u64, u64, &str)> = (1..n).map(|i| (0, i, "x")).collect();
            g(&nodes, &edges)
        };
        let db = TransactionDb::from_graphs(vec![sized(10), sized(8), sized(3)]).unwrap();
        assert_eq!(size_at_threshold(&db, 2), Ok(8));
        assert!(size_at_threshold(&db, 4).is_err());
        assert!(size_at_threshold(&db, 0).is_err());
        let db = TransactionDb::from_graphs(vec![sized(5), sized(5), sized(5)]).unwrap();
        assert_eq!(size_at_threshold(&db, 3), Ok(5));
    }

    #[test]
    fn relative_threshold_rounds_up() {
        assert_eq!(relative_threshold(0.4, 10), 4);
        assert_eq!(relative_threshold(0.4, 11), 5);
        assert_eq!(relative_threshold(0.4, 1), 1);
        assert_eq!(relative_threshold(0.0, 10), 1);
    }

    #[test]
    fn calibration_single_transaction() {
        let t = g(&[(0, "A"), (1, "B")], &[(0, 1, "x")]);
        let db = TransactionDb::from_graphs(vec![t]).unwrap();
        assert_eq!(calibrate_threshold(&db, &CalibrationConfig::default(), &NoBudget), 2);
    }

    #[test]
    fn rejects_disconnected_transactions() {
        let mut db = TransactionDb::new();
        assert_eq!(db.push(g(&[(0, "A"), (1, "B")], &[]), "x"), Err(GraphError::NotConnected));
        assert_eq!(db.push(LabeledGraph::new(), "x"), Err(GraphError::Empty));
    }

    struct Expired;
    impl Budget for Expired {
        fn expired(&self) -> bool {
            true
        }
    }

    #[test]
    fn expired_budget_reports_partial() {
        let t = g(&[(0, "A"), (1, "B")], &[(0, 1, "x")]);
        let db = TransactionDb::from_graphs(vec![t.clone(), t]).unwrap();
        match mine(&db, &seq(), &Expired) {
            Err(MineError::BudgetExceeded(l)) => {
                assert!(l.partial);
                assert_eq!(l.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
