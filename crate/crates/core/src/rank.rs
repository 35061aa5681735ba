//! Compression scoring, redundancy pruning and the ranked recommendation list.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::canon::CanonicalCode;
use crate::iso::is_subgraph_isomorphic;
use crate::miner::{Lattice, Pattern};

/// `(support - 1) * (nodes + edges)`: what replacing every occurrence but
/// one by a reference would save.
pub fn compression_of(support: usize, nodes: usize, edges: usize) -> u64 {
    support.saturating_sub(1) as u64 * (nodes + edges) as u64
}

pub fn compression(p: &Pattern) -> u64 {
    compression_of(p.support, p.graph.node_count(), p.graph.edge_count())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    #[default]
    Compression,
    Frequency,
}

impl core::str::FromStr for RankMode {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "compression" => Ok(RankMode::Compression),
            "frequency" => Ok(RankMode::Frequency),
            _ => Err(alloc::format!("unknown ranking mode {s:?}")),
        }
    }
}

impl core::fmt::Display for RankMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            RankMode::Compression => "compression",
            RankMode::Frequency => "frequency",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntry {
    /// 1-based.
    pub rank: usize,
    /// Position of the pattern in the lattice it was ranked from.
    pub index: usize,
    pub support: usize,
    pub compression: u64,
    pub nodes: usize,
    pub edges: usize,
    pub code: CanonicalCode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    pub mode: RankMode,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Drops every pattern that has a strict supergraph, reachable over parent
/// links, with equal support and at least its compression. Returns the
/// surviving indices in ascending order.
pub fn prune(lattice: &Lattice) -> Vec<usize> {
    let pats = &lattice.patterns;
    let comp: Vec<u64> = pats.iter().map(compression).collect();
    (0..pats.len())
        .filter(|&g| {
            // Support never grows along parent links, so only equal-support
            // ancestors can qualify and only through equal-support paths.
            let mut stack: Vec<usize> = pats[g].parents.clone();
            let mut seen = BTreeSet::new();
            while let Some(h) = stack.pop() {
                if !seen.insert(h) || pats[h].support != pats[g].support {
                    continue;
                }
                if comp[h] >= comp[g] {
                    return false;
                }
                stack.extend_from_slice(&pats[h].parents);
            }
            true
        })
        .collect()
}

/// Same rule as [`prune`] for pattern sets without lattice links, using
/// subgraph matching to find supergraphs.
pub fn prune_by_isomorphism(patterns: &[Pattern]) -> Vec<usize> {
    let comp: Vec<u64> = patterns.iter().map(compression).collect();
    (0..patterns.len())
        .filter(|&g| {
            let pg = &patterns[g];
            !patterns.iter().enumerate().any(|(h, ph)| {
                h != g
                    && ph.support == pg.support
                    && comp[h] >= comp[g]
                    && ph.graph.size() > pg.graph.size()
                    && is_subgraph_isomorphic(&pg.graph, &ph.graph).is_some()
            })
        })
        .collect()
}

/// Sorts `selection` (lattice indices) by compression or support,
/// descending; ties go to the larger pattern, then the smaller code.
pub fn rank(lattice: &Lattice, selection: &[usize], mode: RankMode) -> RankedList {
    let mut entries: Vec<RankedEntry> = selection
        .iter()
        .map(|&i| {
            let p = &lattice.patterns[i];
            RankedEntry {
                rank: 0,
                index: i,
                support: p.support,
                compression: compression(p),
                nodes: p.graph.node_count(),
                edges: p.graph.edge_count(),
                code: p.code.clone(),
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        let key = |e: &RankedEntry| match mode {
            RankMode::Compression => e.compression,
            RankMode::Frequency => e.support as u64,
        };
        key(b).cmp(&key(a)).then((b.nodes + b.edges).cmp(&(a.nodes + a.edges))).then_with(|| a.code.cmp(&b.code))
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    RankedList { mode, entries }
}
