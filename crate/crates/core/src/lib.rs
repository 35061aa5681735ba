//! Learning edit operations from model histories.
//!
//! The pipeline turns successive model versions into difference graphs,
//! reduces those to simple change graphs, mines frequent connected subgraphs
//! over the change-graph components and ranks the survivors by how much they
//! compress the history. Everything here is pure computation over in-memory
//! values; file formats, timing and the command line live in the `opminer`
//! crate.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature turns on
//! parallel mining through rayon.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

mod compact;

pub mod canon;
pub mod diff;
pub mod eval;
pub mod graph;
pub mod iso;
pub mod miner;
pub mod model;
pub mod pipeline;
pub mod rank;
pub mod rule;
pub mod sim;

pub use canon::{canonical_code, CanonicalCode, CodeEntry};
pub use diff::{
    difference_graph, match_versions, simple_change_graph, ChangeCounts, ChangeGraph, ChangeKind, Correspondence,
    Origin, Provenance,
};
pub use eval::{ap_at_k, locate_truth, mean_average_precision, Cutoff, EvalError};
pub use graph::{connected_components, Edge, GraphError, LabeledGraph, NodeId};
pub use iso::{are_isomorphic, is_subgraph_isomorphic};
pub use miner::{
    calibrate_threshold, mine, relative_threshold, size_at_threshold, Budget, CalibrationConfig, Lattice, MineConfig,
    MineError, NoBudget, Pattern, TransactionDb,
};
pub use model::{EdgeType, MetaModel, ModelError, ModelVersion, Reference};
pub use pipeline::{Outcome, Rankings, Score, ThresholdMode};
pub use rank::{compression, compression_of, prune, prune_by_isomorphism, rank, RankMode, RankedEntry, RankedList};
pub use rule::{
    apply, graph_to_rule, pattern_to_rule, rule_to_pattern, Application, EditRule, RuleEdge, RuleError, RuleNode, Site,
};
pub use sim::{
    build_initial, default_catalogs, default_metamodel, replay, simulate, ApplicationKind, Catalogs, InitialSpec,
    LogEntry, OverlapMode, RepoBundle, SimConfig, SimError, SiteScope, Skip, TruthPattern, WeightedRule,
};
