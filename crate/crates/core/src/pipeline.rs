//! The mining pipeline as composable stages: history to transactions,
//! threshold choice, mining, pruning and ranking, scoring.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::diff::{difference_graph, simple_change_graph};
use crate::eval::{ap_at_k, locate_truth, Cutoff};
use crate::graph::LabeledGraph;
use crate::miner::{
    calibrate_threshold, mine, relative_threshold, Budget, CalibrationConfig, Lattice, MineConfig, MineError,
    TransactionDb,
};
use crate::model::ModelVersion;
use crate::rank::{prune, rank, RankMode, RankedList};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Fixed(usize),
    /// Share of the transaction count, rounded up.
    Relative(f64),
    Calibrate(CalibrationConfig),
}

impl Default for ThresholdMode {
    fn default() -> Self {
        ThresholdMode::Calibrate(CalibrationConfig::default())
    }
}

/// Simple change graph components of every consecutive version pair, in
/// revision order. Sources read `<revision>:<component>`.
pub fn transactions(versions: &[ModelVersion]) -> TransactionDb {
    let mut db = TransactionDb::new();
    for (i, w) in versions.windows(2).enumerate() {
        let scg = simple_change_graph(&difference_graph(&w[0], &w[1]));
        for (j, comp) in scg.components().into_iter().enumerate() {
            db.push(comp.graph, format!("{}:{}", i + 1, j)).expect("components are connected and non-empty");
        }
    }
    db
}

pub fn choose_threshold(db: &TransactionDb, mode: &ThresholdMode, budget: &dyn Budget) -> usize {
    match mode {
        ThresholdMode::Fixed(t) => *t,
        ThresholdMode::Relative(r) => relative_threshold(*r, db.len()),
        ThresholdMode::Calibrate(c) => calibrate_threshold(db, c, budget),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rankings {
    pub compression: RankedList,
    pub frequency: RankedList,
}

/// Prunes once and ranks the survivors both ways.
pub fn rank_both(lattice: &Lattice) -> Rankings {
    let keep = prune(lattice);
    Rankings {
        compression: rank(lattice, &keep, RankMode::Compression),
        frequency: rank(lattice, &keep, RankMode::Frequency),
    }
}

/// Truth ranks and AP@k per cutoff for one ranked list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub ranks: Vec<Option<usize>>,
    pub ap: Vec<(Cutoff, f64)>,
}

pub fn score(list: &RankedList, truth: &[LabeledGraph], cutoffs: &[Cutoff]) -> Score {
    let ranks = locate_truth(list, truth);
    let ap = cutoffs.iter().map(|&k| (k, ap_at_k(&ranks, k, truth.len().max(1)).expect("total >= 1"))).collect();
    Score { ranks, ap }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub threshold: usize,
    pub transactions: usize,
    pub lattice: Lattice,
    pub rankings: Rankings,
}

/// Threshold choice, mining and ranking over a transaction database.
pub fn run(db: &TransactionDb, mode: &ThresholdMode, mine_cfg: &MineConfig, budget: &dyn Budget) -> Result<Outcome, MineError> {
    let threshold = choose_threshold(db, mode, budget);
    let cfg = MineConfig { threshold, ..mine_cfg.clone() };
    let lattice = mine(db, &cfg, budget)?;
    let rankings = rank_both(&lattice);
    Ok(Outcome { threshold, transactions: db.len(), lattice, rankings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::NoBudget;
    use crate::sim::{simulate, SimConfig};

    #[test]
    fn noiseless_history_ranks_truth_first() {
        let b = simulate(&SimConfig::standard(&["add_interface"], 4, 1, 0.0, 3)).unwrap();
        let db = transactions(&b.versions);
        assert_eq!(db.len(), 4);
        let out = run(&db, &ThresholdMode::Fixed(2), &MineConfig::default(), &NoBudget).unwrap();
        let truth: Vec<LabeledGraph> = b.truth.iter().map(|t| t.graph.clone()).collect();
        let s = score(&out.rankings.compression, &truth, &[Cutoff::At(1), Cutoff::Inf]);
        assert_eq!(s.ranks, [Some(1)]);
        assert_eq!(s.ap, [(Cutoff::At(1), 1.0), (Cutoff::Inf, 1.0)]);
    }
}
