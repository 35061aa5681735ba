use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use opminer::formats::{read_json, RankedDoc};
use opminer::grid::{run_cell, Cell, GridSpec};
use opminer_core::pipeline::ThresholdMode;
use opminer_core::{default_metamodel, EditRule, MetaModel, RankMode};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_opminer"));
    cmd.args(args).env_remove("OPMINER_TIME_BUDGET_S");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn metamodel_fixture_is_the_builtin_one() {
    let mm: MetaModel = read_json(&fixture("metamodel.json")).unwrap();
    assert_eq!(mm, default_metamodel());
}

#[test]
fn diff_identical_models() {
    let old = fixture("fig2_old.json");
    let o = run(&["diff", p(&old), p(&old)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");
    assert!(stderr(&o).contains("components: 0"));
}

#[test]
fn diff_fig2_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scg.lg");
    let mm = fixture("metamodel.json");
    let o = run(&["diff", p(&fixture("fig2_old.json")), p(&fixture("fig2_new.json")), "--metamodel", p(&mm), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("components: 1"), "{s}");
    assert!(s.contains("changed: 11 (created nodes 4, deleted nodes 0, created edges 7, deleted edges 0)"), "{s}");
    assert!(s.contains("boundary nodes: 2"), "{s}");
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 6);
    assert_eq!(text.lines().filter(|l| l.starts_with("e ")).count(), 7);
    assert!(text.lines().all(|l| !l.starts_with("e ") || l.ends_with(" create_ports")
        || l.ends_with(" create_connectorEnd") || l.ends_with(" create_traces")));
}

#[test]
fn malformed_inputs_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"elements\": [\n    { \"uid\": 3 }\n  ]\n}\n").unwrap();
    let o = run(&["diff", p(&bad), p(&fixture("fig2_old.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let lines = dir.path().join("bad.lg");
    fs::write(&lines, "t # 0\nv 0 A\nv 1 B\ne 0 7 x\n").unwrap();
    let o = run(&["mine", p(&lines)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn mine_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.lg");
    fs::write(&empty, "").unwrap();
    let out = dir.path().join("ranked.json");
    let o = run(&["mine", p(&empty), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: RankedDoc = read_json(&out).unwrap();
    assert!(doc.patterns.is_empty());
}

fn fig2_twice(dir: &Path) -> PathBuf {
    let scg = dir.join("scg.lg");
    let o = run(&["diff", p(&fixture("fig2_old.json")), p(&fixture("fig2_new.json")), "-o", p(&scg)]);
    assert_eq!(o.status.code(), Some(0));
    let one = fs::read_to_string(&scg).unwrap();
    let db = dir.join("db.lg");
    let mut text = one.clone();
    text.push_str(&one.replacen("t # 0", "t # 1", 1));
    text.push_str("t # 2\nv 0 preserved_Component\nv 1 create_Port\ne 0 1 create_ports\n");
    fs::write(&db, text).unwrap();
    db
}

#[test]
fn relative_threshold_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let db = fig2_twice(dir.path());
    let out = dir.path().join("r.json");
    let o = run(&["mine", p(&db), "--threshold", "0.4", "--relative", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // ceil(0.4 * 3) = 2
    assert!(stdout(&o).contains("threshold: 2 (relative 0.4 of 3 transactions)"), "{}", stdout(&o));
    let doc: RankedDoc = read_json(&out).unwrap();
    assert_eq!(doc.threshold, 2);
    assert_eq!((doc.patterns[0].nodes, doc.patterns[0].edges, doc.patterns[0].support), (6, 7, 2));
    assert_eq!(doc.patterns[0].compression, 13);
}

#[test]
fn rules_from_ranked_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let db = fig2_twice(dir.path());
    let ranked = dir.path().join("r.json");
    assert_eq!(run(&["mine", p(&db), "--threshold", "2", "-o", p(&ranked)]).status.code(), Some(0));
    let rules = dir.path().join("rules");
    let o = run(&["rules", p(&ranked), "--top", "1", "--dot", "-o", p(&rules)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rule: EditRule = read_json(&rules.join("rule-001.json")).unwrap();
    assert_eq!((rule.context_nodes.len(), rule.created_nodes.len(), rule.created_edges.len()), (2, 4, 7));
    assert!(rules.join("rule-001.dot").exists());
    assert!(!rules.join("rule-002.json").exists());

    // one broken pattern: skipped with exit 1, the rest still written
    let mut doc: RankedDoc = read_json(&ranked).unwrap();
    let n = doc.patterns.len();
    doc.patterns[0].graph = doc.patterns[0].graph.replace("create_Port", "Port");
    let broken = dir.path().join("broken.json");
    fs::write(&broken, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = dir.path().join("rules2");
    let o = run(&["rules", p(&broken), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pattern rank 1"), "{}", stderr(&o));
    assert_eq!(fs::read_dir(&out).unwrap().count(), n - 1);

    let empty = dir.path().join("empty.json");
    doc.patterns.clear();
    fs::write(&empty, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = dir.path().join("rules3");
    assert_eq!(run(&["rules", p(&empty), "-o", p(&out)]).status.code(), Some(0));
    assert_eq!(fs::read_dir(&out).unwrap().count(), 0);
}

#[test]
fn rank_rereads_lattice_both_ways() {
    let dir = tempfile::tempdir().unwrap();
    let db = fig2_twice(dir.path());
    let (ranked, lattice) = (dir.path().join("r.json"), dir.path().join("l.json"));
    let o = run(&["mine", p(&db), "--threshold", "2", "-o", p(&ranked), "--lattice", p(&lattice)]);
    assert_eq!(o.status.code(), Some(0));
    let again = dir.path().join("r2.json");
    assert_eq!(run(&["rank", p(&lattice), "--by", "compression", "-o", p(&again)]).status.code(), Some(0));
    assert_eq!(fs::read(&ranked).unwrap(), fs::read(&again).unwrap());
    let freq = dir.path().join("f.json");
    assert_eq!(run(&["rank", p(&lattice), "--by", "frequency", "-o", p(&freq)]).status.code(), Some(0));
    let f: RankedDoc = read_json(&freq).unwrap();
    assert_eq!(f.mode, RankMode::Frequency);
    assert!(f.patterns.windows(2).all(|w| w[0].support >= w[1].support));
    assert_eq!(f.patterns[0].support, 3);

    // without links the same survivors come out through subgraph matching
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&lattice).unwrap()).unwrap();
    for pat in v["patterns"].as_array_mut().unwrap() {
        pat.as_object_mut().unwrap().remove("parents");
    }
    let unlinked = dir.path().join("u.json");
    fs::write(&unlinked, v.to_string()).unwrap();
    let u = dir.path().join("u-ranked.json");
    assert_eq!(run(&["rank", p(&unlinked), "-o", p(&u)]).status.code(), Some(0));
    assert_eq!(fs::read(&ranked).unwrap(), fs::read(&u).unwrap());
}

#[test]
fn exhausted_budget_exits_3_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let db = fig2_twice(dir.path());
    let out = dir.path().join("r.json");
    let o = run_env(&["mine", p(&db), "--threshold", "2", "-o", p(&out)], &[("OPMINER_TIME_BUDGET_S", "0")]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let doc: RankedDoc = read_json(&out).unwrap();
    assert!(doc.partial);
}

#[test]
fn noiseless_bundle_ranks_truth_first() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("b");
    let o = run(&["simulate", "--d", "3", "--e", "1", "--p", "0", "--seed", "4", "-o", p(&bundle)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["m0.json", "m3.json", "log.json", "config.json", "truth/0-add_interface.lg"] {
        assert!(bundle.join(f).exists(), "{f}");
    }
    let ranked = dir.path().join("r.json");
    let o = run(&["mine", p(&bundle), "--threshold", "2", "-o", p(&ranked)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["eval", "--bundle", p(&bundle), "--ranked", p(&ranked)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("add_interface: rank 1"), "{}", stdout(&o));
}

#[test]
fn outputs_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["simulate", "--d", "3", "--e", "4", "--p", "0.5", "--seed", "8", "--core", "add_interface,add_component", "-o", p(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["m0.json", "m3.json", "log.json", "config.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let mut outs = Vec::new();
    for name in ["x", "y"] {
        let (scg, ranked, rules) = (dir.path().join(format!("{name}.lg")), dir.path().join(format!("{name}.json")), dir.path().join(format!("{name}-rules")));
        assert_eq!(run(&["diff", "--bundle", p(&a), "-o", p(&scg)]).status.code(), Some(0));
        assert_eq!(run(&["mine", p(&scg), "-o", p(&ranked)]).status.code(), Some(0));
        assert_eq!(run(&["rules", p(&ranked), "--top", "3", "-o", p(&rules)]).status.code(), Some(0));
        outs.push((fs::read(&scg).unwrap(), fs::read(&ranked).unwrap(), fs::read(rules.join("rule-001.json")).unwrap()));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn file_chain_matches_grid_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cell = Cell { d: 4, e: 5, p: 0.3, seed: 2 };
    let spec = GridSpec { threshold: ThresholdMode::default(), ..GridSpec::preset("exp2").unwrap() };
    let rec = run_cell(&spec, cell).unwrap();

    let bundle = dir.path().join("b");
    let o = run(&["simulate", "--d", "4", "--e", "5", "--p", "0.3", "--seed", "2", "--core", "add_interface,add_component", "-o", p(&bundle)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let scg = dir.path().join("scg.lg");
    assert_eq!(run(&["diff", "--bundle", p(&bundle), "-o", p(&scg)]).status.code(), Some(0));
    let ranked = dir.path().join("r.json");
    let o = run(&["mine", p(&scg), "-o", p(&ranked)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains(&format!("threshold: {} (calibrated)", rec.threshold)), "{}", stdout(&o));
    let o = run(&["eval", "--bundle", p(&bundle), "--ranked", p(&ranked)]);
    let text = stdout(&o);
    for (rule, r) in ["add_interface", "add_component"].iter().zip(rec.ranks(RankMode::Compression)) {
        let want = match r {
            Some(r) => format!("{rule}: rank {r}"),
            None => format!("{rule}: absent"),
        };
        assert!(text.contains(&want), "{want} not in {text}");
    }
}

#[test]
fn eval_grid_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("grid.json");
    fs::write(&spec, r#"{ "d": [2], "e": [1, 2], "p": [0.0], "seeds": [0, 1], "threshold": { "fixed": 2 } }"#).unwrap();
    let out = dir.path().join("eval");
    let o = run(&["--jobs", "2", "eval", "--grid", p(&spec), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("report.csv").exists() && out.join("failures.csv").exists());
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 2);
    let o = run(&["report", "--in", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("MAP@inf"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("compression") && l.contains("1.000")), "{text}");

    let o = run(&["eval", "--grid", "nope", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
