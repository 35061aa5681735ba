//! Experiment grids: simulate, mine and score every (d, e, p, seed) cell,
//! persist per-dataset rows and aggregate MAP@k tables.

use std::path::Path;
use std::time::Instant;

use opminer_core::pipeline::{choose_threshold, rank_both, score, transactions, ThresholdMode};
use opminer_core::{
    ap_at_k, mean_average_precision, mine, simulate, size_at_threshold, Cutoff, LabeledGraph, MineConfig, OverlapMode,
    RankMode, SimConfig, SiteScope,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::from_seconds;
use crate::stats::spearman;

/// Cutoffs persisted per dataset.
pub const ROW_CUTOFFS: [Cutoff; 4] = [Cutoff::At(1), Cutoff::At(5), Cutoff::At(10), Cutoff::Inf];
/// Cutoffs of the aggregate tables.
pub const TABLE_CUTOFFS: [Cutoff; 5] = [Cutoff::At(1), Cutoff::At(2), Cutoff::At(5), Cutoff::At(10), Cutoff::Inf];

#[derive(Debug, Error)]
pub enum GridError {
    #[error("unknown grid preset {0:?}")]
    UnknownPreset(String),
    #[error("grid has no cells")]
    Empty,
    #[error("{path}: {msg}")]
    Report { path: String, msg: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: Vec<usize>,
    pub e: Vec<usize>,
    pub p: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Core rule names from the default catalog.
    #[serde(default = "default_core")]
    pub core: Vec<String>,
    #[serde(default)]
    pub threshold: ThresholdMode,
    #[serde(default)]
    pub scope: SiteScope,
    #[serde(default)]
    pub overlap: OverlapMode,
    /// Per-cell mining budget in seconds.
    #[serde(default)]
    pub time_budget_s: Option<f64>,
}

fn default_core() -> Vec<String> {
    vec!["add_interface".into()]
}

impl GridSpec {
    fn reduced(core: &[&str]) -> Self {
        GridSpec {
            d: vec![10],
            e: vec![5, 10, 20],
            p: vec![0.1, 0.2],
            seeds: (0..5).collect(),
            core: core.iter().map(|s| s.to_string()).collect(),
            threshold: ThresholdMode::default(),
            scope: SiteScope::default(),
            overlap: OverlapMode::default(),
            time_budget_s: None,
        }
    }

    fn full(core: &[&str]) -> Self {
        GridSpec {
            d: vec![10, 20],
            e: (1..=100).collect(),
            p: (1..=10).map(|i| i as f64 / 10.0).collect(),
            seeds: vec![0],
            ..Self::reduced(core)
        }
    }

    /// `exp1`, `exp2` (reduced grids) and `exp1-full`, `exp2-full` (d in {10, 20},
    /// e in 1..=100, p in 0.1..=1.0, one seed).
    pub fn preset(name: &str) -> Result<Self, GridError> {
        let one = ["add_interface"];
        let two = ["add_interface", "add_component"];
        Ok(match name {
            "exp1" => Self::reduced(&one),
            "exp2" => Self::reduced(&two),
            "exp1-full" => Self::full(&one),
            "exp2-full" => Self::full(&two),
            _ => return Err(GridError::UnknownPreset(name.into())),
        })
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &d in &self.d {
            for &e in &self.e {
                for &p in &self.p {
                    for &seed in &self.seeds {
                        out.push(Cell { d, e, p, seed });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub d: usize,
    pub e: usize,
    pub p: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeScore {
    pub mode: RankMode,
    pub ranks: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub cell: Cell,
    pub transactions: usize,
    pub threshold: usize,
    pub mining_ms: u64,
    pub avg_nodes_per_component: f64,
    pub size_at_threshold: Option<usize>,
    pub scores: Vec<ModeScore>,
}

impl DatasetRecord {
    pub fn ranks(&self, mode: RankMode) -> &[Option<usize>] {
        self.scores.iter().find(|s| s.mode == mode).map(|s| s.ranks.as_slice()).unwrap_or(&[])
    }

    pub fn ap(&self, mode: RankMode, k: Cutoff) -> f64 {
        let r = self.ranks(mode);
        ap_at_k(r, k, r.len().max(1)).expect("total >= 1")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub cell: Cell,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub records: Vec<DatasetRecord>,
    pub failures: Vec<Failure>,
}

/// Simulates, mines and scores one cell.
pub fn run_cell(spec: &GridSpec, cell: Cell) -> Result<DatasetRecord, String> {
    let names: Vec<&str> = spec.core.iter().map(String::as_str).collect();
    let mut cfg = SimConfig::standard(&names, cell.d, cell.e, cell.p, cell.seed);
    if cfg.core.len() != names.len() {
        return Err(format!("unknown core rule in {names:?}"));
    }
    cfg.scope = spec.scope;
    cfg.overlap = spec.overlap;
    let bundle = simulate(&cfg).map_err(|e| e.to_string())?;
    let truth: Vec<LabeledGraph> = bundle.truth.iter().map(|t| t.graph.clone()).collect();
    score_history(&bundle.versions, &truth, &spec.threshold, spec.time_budget_s, cell)
}

/// Mines a version history and ranks the ground truth both ways.
pub fn score_history(
    versions: &[opminer_core::ModelVersion],
    truth: &[LabeledGraph],
    mode: &ThresholdMode,
    budget_s: Option<f64>,
    cell: Cell,
) -> Result<DatasetRecord, String> {
    let budget = from_seconds(budget_s);
    let db = transactions(versions);
    let threshold = choose_threshold(&db, mode, &budget);
    let start = Instant::now();
    let lattice = mine(&db, &MineConfig::with_threshold(threshold), &budget).map_err(|e| e.to_string())?;
    let mining_ms = start.elapsed().as_millis() as u64;
    let rankings = rank_both(&lattice);
    let scores = [(RankMode::Compression, &rankings.compression), (RankMode::Frequency, &rankings.frequency)]
        .into_iter()
        .map(|(mode, list)| ModeScore { mode, ranks: score(list, truth, &[]).ranks })
        .collect();
    Ok(DatasetRecord {
        cell,
        transactions: db.len(),
        threshold,
        mining_ms,
        avg_nodes_per_component: db.average_node_count(),
        size_at_threshold: size_at_threshold(&db, threshold).ok(),
        scores,
    })
}

/// Runs every cell in parallel. Failures are recorded per cell; records
/// and failures keep the grid's cell order.
pub fn run_grid(spec: &GridSpec) -> GridReport {
    let results: Vec<(Cell, Result<DatasetRecord, String>)> =
        spec.cells().into_par_iter().map(|cell| (cell, run_cell(spec, cell))).collect();
    let mut report = GridReport::default();
    for (cell, r) in results {
        match r {
            Ok(rec) => report.records.push(rec),
            Err(error) => report.failures.push(Failure { cell, error }),
        }
    }
    report
}

// ---------------------------------------------------------------------------
// CSV rows

/// One CSV row: a dataset scored under one ranking mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub d: usize,
    pub e: usize,
    pub p: f64,
    pub seed: u64,
    pub threshold: usize,
    pub mining_ms: u64,
    pub avg_nodes_per_component: f64,
    pub size_at_threshold: Option<usize>,
    /// Rank, `absent` when not located, empty when the dataset has no
    /// such truth pattern.
    pub rank_truth_1: String,
    pub rank_truth_2: String,
    #[serde(rename = "ap@1")]
    pub ap_1: f64,
    #[serde(rename = "ap@5")]
    pub ap_5: f64,
    #[serde(rename = "ap@10")]
    pub ap_10: f64,
    #[serde(rename = "ap@inf")]
    pub ap_inf: f64,
    pub mode: RankMode,
}

fn rank_cell(ranks: &[Option<usize>], i: usize) -> String {
    match ranks.get(i) {
        None => String::new(),
        Some(None) => "absent".into(),
        Some(Some(r)) => r.to_string(),
    }
}

impl Row {
    pub fn from_record(rec: &DatasetRecord, mode: RankMode) -> Self {
        let ranks = rec.ranks(mode);
        let ap = |k| rec.ap(mode, k);
        Row {
            d: rec.cell.d,
            e: rec.cell.e,
            p: rec.cell.p,
            seed: rec.cell.seed,
            threshold: rec.threshold,
            mining_ms: rec.mining_ms,
            avg_nodes_per_component: rec.avg_nodes_per_component,
            size_at_threshold: rec.size_at_threshold,
            rank_truth_1: rank_cell(ranks, 0),
            rank_truth_2: rank_cell(ranks, 1),
            ap_1: ap(ROW_CUTOFFS[0]),
            ap_5: ap(ROW_CUTOFFS[1]),
            ap_10: ap(ROW_CUTOFFS[2]),
            ap_inf: ap(ROW_CUTOFFS[3]),
            mode,
        }
    }

    /// Truth ranks as recorded; `None` entries were not located.
    pub fn ranks(&self) -> Result<Vec<Option<usize>>, String> {
        [&self.rank_truth_1, &self.rank_truth_2]
            .into_iter()
            .filter(|s| !s.is_empty())
            .map(|s| match s.as_str() {
                "absent" => Ok(None),
                _ => s.parse().map(Some).map_err(|_| format!("bad rank {s:?}")),
            })
            .collect()
    }

    pub fn ap(&self, k: Cutoff) -> Result<f64, String> {
        let r = self.ranks()?;
        ap_at_k(&r, k, r.len().max(1)).map_err(|e| e.to_string())
    }
}

pub fn rows(report: &GridReport) -> Vec<Row> {
    let mut out = Vec::new();
    for rec in &report.records {
        for mode in [RankMode::Compression, RankMode::Frequency] {
            out.push(Row::from_record(rec, mode));
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct FailureRow {
    d: usize,
    e: usize,
    p: f64,
    seed: u64,
    error: String,
}

/// Writes `report.csv` and `failures.csv` into `dir`.
pub fn write_report(dir: &Path, report: &GridReport) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
    for r in rows(report) {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(dir.join("failures.csv"))?;
    w.write_record(["d", "e", "p", "seed", "error"])?;
    for f in &report.failures {
        w.serialize(FailureRow { d: f.cell.d, e: f.cell.e, p: f.cell.p, seed: f.cell.seed, error: f.error.clone() })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> anyhow::Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let row: Row = row.map_err(|e| GridError::Report { path: path.display().to_string(), msg: format!("row {}: {e}", i + 1) })?;
        out.push(row);
    }
    Ok(out)
}

pub fn read_failures(path: &Path) -> anyhow::Result<usize> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.records().count())
}

// ---------------------------------------------------------------------------
// Aggregates

#[derive(Clone, Debug, PartialEq)]
pub struct MapRow {
    pub mode: RankMode,
    pub datasets: usize,
    pub map: Vec<(Cutoff, f64)>,
}

/// MAP@k per ranking mode over rows, modes in first-seen order.
pub fn map_table(rows: &[Row], cutoffs: &[Cutoff]) -> Result<Vec<MapRow>, String> {
    let mut modes: Vec<RankMode> = Vec::new();
    for r in rows {
        if !modes.contains(&r.mode) {
            modes.push(r.mode);
        }
    }
    modes
        .into_iter()
        .map(|mode| {
            let sel: Vec<&Row> = rows.iter().filter(|r| r.mode == mode).collect();
            let map = cutoffs
                .iter()
                .map(|&k| {
                    let aps = sel.iter().map(|r| r.ap(k)).collect::<Result<Vec<f64>, String>>()?;
                    Ok((k, mean_average_precision(&aps)))
                })
                .collect::<Result<Vec<_>, String>>()?;
            Ok(MapRow { mode, datasets: sel.len(), map })
        })
        .collect()
}

/// Spearman correlation of AP@inf with each driver column, per mode.
pub fn driver_correlations(rows: &[Row], mode: RankMode) -> Vec<(&'static str, Option<f64>)> {
    let sel: Vec<&Row> = rows.iter().filter(|r| r.mode == mode).collect();
    let ap: Vec<f64> = sel.iter().map(|r| r.ap_inf).collect();
    let col = |f: &dyn Fn(&Row) -> f64| sel.iter().map(|r| f(r)).collect::<Vec<f64>>();
    vec![
        ("p", spearman(&ap, &col(&|r| r.p))),
        ("e", spearman(&ap, &col(&|r| r.e as f64))),
        ("d", spearman(&ap, &col(&|r| r.d as f64))),
        ("mining_ms", spearman(&ap, &col(&|r| r.mining_ms as f64))),
        ("avg_nodes_per_component", spearman(&ap, &col(&|r| r.avg_nodes_per_component))),
        ("size_at_threshold", spearman(&ap, &col(&|r| r.size_at_threshold.map_or(f64::NAN, |s| s as f64)))),
    ]
}

pub fn format_tables(rows: &[Row], failures: usize) -> Result<String, String> {
    use std::fmt::Write as _;
    let mut s = String::new();
    let table = map_table(rows, &TABLE_CUTOFFS)?;
    write!(s, "{:<12} {:>8}", "mode", "datasets").unwrap();
    for k in TABLE_CUTOFFS {
        write!(s, " {:>8}", format!("MAP@{k}")).unwrap();
    }
    s.push('\n');
    for r in &table {
        write!(s, "{:<12} {:>8}", r.mode.to_string(), r.datasets).unwrap();
        for (_, v) in &r.map {
            write!(s, " {v:>8.3}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "failures: {failures}").unwrap();
    for r in &table {
        writeln!(s, "spearman(AP@inf, driver), {}:", r.mode).unwrap();
        for (name, rho) in driver_correlations(rows, r.mode) {
            match rho {
                Some(v) if v.is_finite() => writeln!(s, "  {name:<24} {v:>7.3}").unwrap(),
                _ => writeln!(s, "  {name:<24} {:>7}", "n/a").unwrap(),
            }
        }
    }
    Ok(s)
}
