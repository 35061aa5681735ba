//! On-disk formats: line-based graph transactions, JSON documents for
//! models, meta-models, rules, lattices and ranked lists, DOT dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use opminer_core::{
    canonical_code, prune, prune_by_isomorphism, rank, CanonicalCode, EditRule, GraphError, LabeledGraph, Lattice,
    MetaModel, ModelVersion, Pattern, RankMode, RankedList,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: pattern {index}: {msg}")]
    Pattern { path: String, index: usize, msg: String },
}

/// One graph of a line-format file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub id: String,
    pub graph: LabeledGraph,
}

/// Parses `t # <id>` / `v <id> <label>` / `e <src> <dst> <label>` lines.
/// Blank lines are skipped.
pub fn parse_lines(text: &str) -> Result<Vec<Transaction>, FormatError> {
    let mut out: Vec<Transaction> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let syntax = |msg: &str| FormatError::Syntax { line, msg: msg.to_string() };
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let Some(&tag) = fields.first() else { continue };
        let id = |s: &str| s.parse::<u64>().map_err(|_| syntax(&format!("bad node id {s:?}")));
        match tag {
            "t" => {
                if fields.len() != 3 || fields[1] != "#" {
                    return Err(syntax("expected `t # <id>`"));
                }
                out.push(Transaction { id: fields[2].to_string(), graph: LabeledGraph::new() });
            }
            "v" | "e" => {
                let Some(cur) = out.last_mut() else {
                    return Err(syntax("declaration before the first `t` line"));
                };
                let res = if tag == "v" {
                    if fields.len() != 3 {
                        return Err(syntax("expected `v <id> <label>`"));
                    }
                    cur.graph.add_node(id(fields[1])?, fields[2])
                } else {
                    if fields.len() != 4 {
                        return Err(syntax("expected `e <src> <dst> <label>`"));
                    }
                    cur.graph.add_edge(id(fields[1])?, id(fields[2])?, fields[3])
                };
                res.map_err(|source| FormatError::Graph { line, source })?;
            }
            other => return Err(syntax(&format!("unknown record type {other:?}"))),
        }
    }
    Ok(out)
}

pub fn write_graph(out: &mut String, id: &str, g: &LabeledGraph) {
    writeln!(out, "t # {id}").unwrap();
    for (n, l) in g.nodes() {
        writeln!(out, "v {n} {l}").unwrap();
    }
    for e in g.edges() {
        writeln!(out, "e {} {} {}", e.src, e.dst, e.label).unwrap();
    }
}

pub fn write_lines<'a>(items: impl IntoIterator<Item = (&'a str, &'a LabeledGraph)>) -> String {
    let mut out = String::new();
    for (id, g) in items {
        write_graph(&mut out, id, g);
    }
    out
}

/// A single graph in line format without the `t` header.
pub fn graph_to_lines(g: &LabeledGraph) -> String {
    let mut s = String::new();
    write_graph(&mut s, "0", g);
    s.split_once('\n').map(|(_, rest)| rest.to_string()).unwrap_or_default()
}

pub fn graph_from_lines(text: &str) -> Result<LabeledGraph, FormatError> {
    let full = format!("t # 0\n{text}");
    let mut ts = parse_lines(&full).map_err(|e| match e {
        FormatError::Syntax { line, msg } => FormatError::Syntax { line: line - 1, msg },
        FormatError::Graph { line, source } => FormatError::Graph { line: line - 1, source },
        other => other,
    })?;
    Ok(ts.pop().map(|t| t.graph).unwrap_or_default())
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json { path: path.display().to_string(), source })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    write_text(path, &to_json(value))
}

pub fn read_transactions(path: &Path) -> Result<Vec<Transaction>, FormatError> {
    parse_lines(&read_text(path)?)
}

pub fn read_model(path: &Path) -> Result<ModelVersion, FormatError> {
    read_json(path)
}

pub fn read_metamodel(path: &Path) -> Result<MetaModel, FormatError> {
    read_json(path)
}

pub fn read_rule(path: &Path) -> Result<EditRule, FormatError> {
    read_json(path)
}

/// One mined pattern as stored in a lattice document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternDoc {
    pub code: String,
    pub support: usize,
    /// Indices of direct supergraphs. Absent for pattern sets without
    /// lattice links, which are then pruned by subgraph matching.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parents: Option<Vec<usize>>,
    pub graph: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDoc {
    pub threshold: usize,
    pub partial: bool,
    pub patterns: Vec<PatternDoc>,
}

impl LatticeDoc {
    pub fn from_lattice(l: &Lattice) -> Self {
        LatticeDoc {
            threshold: l.threshold,
            partial: l.partial,
            patterns: l
                .patterns
                .iter()
                .map(|p| PatternDoc {
                    code: p.code.to_string(),
                    support: p.support,
                    parents: Some(p.parents.clone()),
                    graph: graph_to_lines(&p.graph),
                })
                .collect(),
        }
    }

    /// Rebuilds the patterns. Codes are recomputed from the graphs; child
    /// links are derived from parent links. Returns whether links were
    /// present.
    pub fn to_lattice(&self, path: &str) -> Result<(Lattice, bool), FormatError> {
        let linked = self.patterns.iter().all(|p| p.parents.is_some());
        let n = self.patterns.len();
        let mut patterns = Vec::with_capacity(n);
        for (index, d) in self.patterns.iter().enumerate() {
            let err = |msg: String| FormatError::Pattern { path: path.to_string(), index, msg };
            let graph = graph_from_lines(&d.graph).map_err(|e| err(e.to_string()))?;
            let code: CanonicalCode = canonical_code(&graph).map_err(|e| err(e.to_string()))?;
            if d.support == 0 {
                return Err(err("support must be at least 1".into()));
            }
            let parents = if linked { d.parents.clone().unwrap_or_default() } else { Vec::new() };
            if let Some(bad) = parents.iter().find(|&&q| q >= n || q == index) {
                return Err(err(format!("parent index {bad} out of range")));
            }
            patterns.push(Pattern { graph, code, support: d.support, parents, children: Vec::new(), transactions: Vec::new() });
        }
        for i in 0..n {
            for q in patterns[i].parents.clone() {
                patterns[q].children.push(i);
            }
        }
        Ok((Lattice { patterns, threshold: self.threshold, partial: self.partial }, linked))
    }
}

/// Prunes and ranks a lattice, using subgraph matching when it carries no
/// links.
pub fn rank_lattice(lattice: &Lattice, linked: bool, mode: RankMode) -> RankedList {
    let keep = if linked { prune(lattice) } else { prune_by_isomorphism(&lattice.patterns) };
    rank(lattice, &keep, mode)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedPatternDoc {
    pub rank: usize,
    pub support: usize,
    pub compression: u64,
    pub nodes: usize,
    pub edges: usize,
    pub code: String,
    pub graph: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub mode: RankMode,
    pub threshold: usize,
    pub partial: bool,
    pub patterns: Vec<RankedPatternDoc>,
}

impl RankedDoc {
    pub fn new(list: &RankedList, lattice: &Lattice) -> Self {
        RankedDoc {
            mode: list.mode,
            threshold: lattice.threshold,
            partial: lattice.partial,
            patterns: list
                .entries
                .iter()
                .map(|e| RankedPatternDoc {
                    rank: e.rank,
                    support: e.support,
                    compression: e.compression,
                    nodes: e.nodes,
                    edges: e.edges,
                    code: e.code.to_string(),
                    graph: graph_to_lines(&lattice.patterns[e.index].graph),
                })
                .collect(),
        }
    }
}

/// Graphviz rendering of a rule: context elements black, created green,
/// deleted red.
pub fn rule_to_dot(rule: &EditRule) -> String {
    let mut s = String::new();
    writeln!(s, "digraph {:?} {{", rule.name).unwrap();
    let parts = [
        ("black", &rule.context_nodes, &rule.context_edges),
        ("green", &rule.created_nodes, &rule.created_edges),
        ("red", &rule.deleted_nodes, &rule.deleted_edges),
    ];
    for (color, nodes, _) in parts {
        for n in nodes {
            writeln!(s, "  {:?} [label={:?}, color={color}];", n.id, format!("{}: {}", n.id, n.ty)).unwrap();
        }
    }
    for (color, _, edges) in parts {
        for e in edges {
            writeln!(s, "  {:?} -> {:?} [label={:?}, color={color}];", e.src, e.tgt, e.ty).unwrap();
        }
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "t # a\nv 0 A\nv 1 B\ne 0 1 x\ne 1 0 y\nt # b\nv 3 C\n";

    #[test]
    fn lines_round_trip_bit_exact() {
        let ts = parse_lines(SAMPLE).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].graph.edge_count(), 2);
        let back = write_lines(ts.iter().map(|t| (t.id.as_str(), &t.graph)));
        assert_eq!(back, SAMPLE);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_lines("t # a\nv 0 A\ne 0 9 x\n").unwrap_err();
        assert!(matches!(err, FormatError::Graph { line: 3, .. }), "{err}");
        let err = parse_lines("t # a\nv zero A\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2:"), "{err}");
        let err = parse_lines("v 0 A\n").unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 1, .. }));
        let err = parse_lines("t # a\n\nq 1\n").unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 3, .. }));
    }

    #[test]
    fn bare_graph_round_trip() {
        let g = parse_lines(SAMPLE).unwrap().remove(0).graph;
        assert_eq!(graph_from_lines(&graph_to_lines(&g)).unwrap(), g);
    }
}
