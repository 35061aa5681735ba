//! Average precision of ranked recommendations against known operations.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::canonical_code;
use crate::graph::LabeledGraph;
use crate::rank::RankedList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("average precision needs at least one relevant item")]
    NoRelevant,
}

/// List depth considered by AP@k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cutoff {
    At(usize),
    Inf,
}

impl Cutoff {
    pub fn admits(self, rank: usize) -> bool {
        match self {
            Cutoff::At(k) => rank <= k,
            Cutoff::Inf => true,
        }
    }
}

impl core::fmt::Display for Cutoff {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Cutoff::At(k) => write!(f, "{k}"),
            Cutoff::Inf => f.write_str("inf"),
        }
    }
}

impl core::str::FromStr for Cutoff {
    type Err = core::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "∞" => Ok(Cutoff::Inf),
            _ => s.parse().map(Cutoff::At),
        }
    }
}

/// Rank of the first entry isomorphic to each truth graph. Truth graphs
/// that are empty or disconnected are never found.
pub fn locate_truth(list: &RankedList, truth: &[LabeledGraph]) -> Vec<Option<usize>> {
    truth
        .iter()
        .map(|t| {
            let code = canonical_code(t).ok()?;
            list.entries.iter().find(|e| e.code == code).map(|e| e.rank)
        })
        .collect()
}

/// `sum over relevant ranks i <= k of P(i)` divided by `total`, where P(i)
/// is the share of relevant items among the first i entries. Absent items
/// contribute nothing.
pub fn ap_at_k(ranks: &[Option<usize>], k: Cutoff, total: usize) -> Result<f64, EvalError> {
    if total == 0 {
        return Err(EvalError::NoRelevant);
    }
    let mut found: Vec<usize> = ranks.iter().flatten().copied().filter(|&r| r >= 1).collect();
    found.sort_unstable();
    found.dedup();
    let sum: f64 = found
        .iter()
        .enumerate()
        .filter(|(_, &r)| k.admits(r))
        .map(|(i, &r)| (i + 1) as f64 / r as f64)
        .sum();
    Ok(sum / total as f64)
}

/// Arithmetic mean; 0 for an empty slice.
pub fn mean_average_precision(aps: &[f64]) -> f64 {
    if aps.is_empty() {
        return 0.0;
    }
    aps.iter().sum::<f64>() / aps.len() as f64
}
