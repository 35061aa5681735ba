//! Simulation bundles on disk: `m0.json .. m<d>.json`, `log.json`,
//! `truth/` in line format and `config.json`.

use std::fs;
use std::path::Path;

use opminer_core::{LabeledGraph, LogEntry, RepoBundle, SimConfig, Skip, TruthPattern};
use serde::{Deserialize, Serialize};

use crate::formats::{parse_lines, read_json, read_text, write_json, write_lines, FormatError};

#[derive(Serialize, Deserialize)]
struct LogDoc {
    entries: Vec<LogEntry>,
    #[serde(default)]
    skips: Vec<Skip>,
}

fn io_err(path: &Path, source: std::io::Error) -> FormatError {
    FormatError::Io { path: path.display().to_string(), source }
}

pub fn write_bundle(dir: &Path, b: &RepoBundle) -> Result<(), FormatError> {
    let truth_dir = dir.join("truth");
    fs::create_dir_all(&truth_dir).map_err(|e| io_err(&truth_dir, e))?;
    for (i, m) in b.versions.iter().enumerate() {
        write_json(&dir.join(format!("m{i}.json")), m)?;
    }
    write_json(&dir.join("log.json"), &LogDoc { entries: b.log.clone(), skips: b.skips.clone() })?;
    write_json(&dir.join("config.json"), &b.config)?;
    for (i, t) in b.truth.iter().enumerate() {
        let path = truth_dir.join(format!("{i}-{}.lg", t.rule));
        crate::formats::write_text(&path, &write_lines([(t.rule.as_str(), &t.graph)]))?;
    }
    Ok(())
}

/// Ground-truth graphs of a bundle directory, ordered by file name.
pub fn read_truth(dir: &Path) -> Result<Vec<TruthPattern>, FormatError> {
    let truth_dir = dir.join("truth");
    let mut files: Vec<_> = fs::read_dir(&truth_dir)
        .map_err(|e| io_err(&truth_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "lg"))
        .collect();
    files.sort_by_key(|p| {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let num = stem.split_once('-').and_then(|(n, _)| n.parse::<usize>().ok()).unwrap_or(usize::MAX);
        (num, stem)
    });
    let mut out = Vec::new();
    for f in files {
        for t in parse_lines(&read_text(&f)?)? {
            out.push(TruthPattern { rule: t.id, graph: t.graph });
        }
    }
    Ok(out)
}

pub fn read_bundle(dir: &Path) -> Result<RepoBundle, FormatError> {
    let config: SimConfig = read_json(&dir.join("config.json"))?;
    let versions = (0..=config.d).map(|i| read_json(&dir.join(format!("m{i}.json")))).collect::<Result<Vec<_>, _>>()?;
    let log: LogDoc = read_json(&dir.join("log.json"))?;
    let truth = read_truth(dir)?;
    Ok(RepoBundle { config, versions, log: log.entries, skips: log.skips, truth })
}

pub fn truth_graphs(b: &RepoBundle) -> Vec<LabeledGraph> {
    b.truth.iter().map(|t| t.graph.clone()).collect()
}
