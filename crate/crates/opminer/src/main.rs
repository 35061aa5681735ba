use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use opminer::budget::{budget_seconds, from_seconds};
use opminer::bundle::{read_bundle, truth_graphs, write_bundle};
use opminer::formats::{
    graph_from_lines, read_json, read_metamodel, read_model, read_rule, read_transactions, rank_lattice, rule_to_dot,
    write_json, write_lines, write_text, LatticeDoc, RankedDoc,
};
use opminer::grid::{format_tables, read_failures, read_rows, run_grid, write_report, GridSpec, TABLE_CUTOFFS};
use opminer_core::pipeline::{choose_threshold, ThresholdMode};
use opminer_core::{
    ap_at_k, canonical_code, default_catalogs, default_metamodel, difference_graph, graph_to_rule, mine,
    simple_change_graph, simulate, CalibrationConfig, ChangeCounts, ChangeGraph, LabeledGraph, MineConfig,
    MineError, ModelVersion, OverlapMode, RankMode, SimConfig, SiteScope, TransactionDb, WeightedRule,
};

#[derive(Parser)]
#[command(name = "opminer", version, about = "Learn edit operations from model histories")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simple change graph components of two versions or of a whole bundle.
    Diff(DiffArgs),
    /// Mine, prune and rank frequent change patterns.
    Mine(MineArgs),
    /// Re-rank a stored lattice.
    Rank(RankArgs),
    /// Turn ranked patterns into edit rules.
    Rules(RulesArgs),
    /// Generate a synthetic model history.
    Simulate(SimulateArgs),
    /// Run an experiment grid, or score one ranked list against a bundle.
    Eval(EvalArgs),
    /// Print MAP tables of an evaluation directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct DiffArgs {
    /// Old and new model files.
    #[arg(num_args = 0..=2)]
    models: Vec<PathBuf>,
    /// Diff every consecutive version pair of a bundle instead.
    #[arg(long, conflicts_with = "models")]
    bundle: Option<PathBuf>,
    /// Check both models against this meta-model.
    #[arg(long)]
    metamodel: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Absolute support threshold, or a ratio with --relative. Calibrated
    /// when omitted.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, requires = "threshold")]
    relative: bool,
    #[arg(long, default_value_t = 2)]
    t_min: usize,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long, default_value_t = 3)]
    s_lo: usize,
    #[arg(long, default_value_t = 8)]
    s_hi: usize,
    #[arg(long, default_value_t = 100)]
    tree_budget: usize,
}

impl ThresholdArgs {
    fn mode(&self) -> Result<ThresholdMode> {
        Ok(match (self.threshold, self.relative) {
            (None, _) => ThresholdMode::Calibrate(CalibrationConfig {
                t_min: self.t_min,
                t_max: self.t_max,
                s_lo: self.s_lo,
                s_hi: self.s_hi,
                tree_budget: self.tree_budget,
                parallel: true,
            }),
            (Some(r), true) => {
                if !(r > 0.0 && r <= 1.0) {
                    bail!("relative threshold must lie in (0, 1], got {r}");
                }
                ThresholdMode::Relative(r)
            }
            (Some(t), false) => {
                if t < 1.0 || t.fract() != 0.0 {
                    bail!("absolute threshold must be a positive integer, got {t}");
                }
                ThresholdMode::Fixed(t as usize)
            }
        })
    }
}

#[derive(Args)]
struct MineArgs {
    /// Line-format transaction files or bundle directories.
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[arg(long, default_value_t = RankMode::Compression)]
    by: RankMode,
    /// Ranked list output; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the full pattern lattice.
    #[arg(long)]
    lattice: Option<PathBuf>,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Mining time budget in seconds; OPMINER_TIME_BUDGET_S takes precedence.
    #[arg(long)]
    time_budget: Option<f64>,
}

#[derive(Args)]
struct RankArgs {
    lattice: PathBuf,
    #[arg(long, default_value_t = RankMode::Compression)]
    by: RankMode,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RulesArgs {
    /// Ranked list from `mine` or `rank`.
    patterns: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Only the first k patterns.
    #[arg(long)]
    top: Option<usize>,
    /// Also write a Graphviz file per rule.
    #[arg(long)]
    dot: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Defaults to the built-in component meta-model.
    #[arg(long)]
    metamodel: Option<PathBuf>,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    e: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
    /// Core rules from the built-in catalog.
    #[arg(long, value_delimiter = ',', default_value = "add_interface")]
    core: Vec<String>,
    /// Core rule files; replace --core when given.
    #[arg(long)]
    core_rule: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScopeArg::Revision)]
    scope: ScopeArg,
    #[arg(long, value_enum, default_value_t = OverlapArg::Context)]
    overlap: OverlapArg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ScopeArg {
    Revision,
    Current,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum OverlapArg {
    Context,
    Footprint,
}

#[derive(Args)]
struct EvalArgs {
    /// Grid preset (exp1, exp2, exp1-full, exp2-full) or JSON spec file.
    #[arg(long, requires = "out", conflicts_with_all = ["bundle", "ranked"])]
    grid: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, requires = "ranked")]
    bundle: Option<PathBuf>,
    #[arg(long, requires = "bundle")]
    ranked: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

enum Status {
    Ok,
    Partial,
    Budget,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match cli.cmd {
        Cmd::Diff(a) => cmd_diff(a),
        Cmd::Mine(a) => cmd_mine(a),
        Cmd::Rank(a) => cmd_rank(a),
        Cmd::Rules(a) => cmd_rules(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Report(a) => cmd_report(a),
    };
    match res {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(1),
        Ok(Status::Budget) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn add_counts(a: &mut ChangeCounts, b: ChangeCounts) {
    a.created_nodes += b.created_nodes;
    a.deleted_nodes += b.deleted_nodes;
    a.preserved_nodes += b.preserved_nodes;
    a.created_edges += b.created_edges;
    a.deleted_edges += b.deleted_edges;
    a.preserved_edges += b.preserved_edges;
}

fn cmd_diff(a: DiffArgs) -> Result<Status> {
    let (pairs, ids): (Vec<(ModelVersion, ModelVersion)>, bool) = if let Some(dir) = &a.bundle {
        let b = read_bundle(dir)?;
        (b.versions.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect(), true)
    } else {
        let [old, new] = a.models.as_slice() else { bail!("diff needs two model files or --bundle") };
        (vec![(read_model(old)?, read_model(new)?)], false)
    };
    if let Some(mm) = &a.metamodel {
        let mm = read_metamodel(mm)?;
        for (o, n) in &pairs {
            mm.check(o).context("old model")?;
            mm.check(n).context("new model")?;
        }
    }
    let mut comps: Vec<(String, ChangeGraph)> = Vec::new();
    let mut counts = ChangeCounts::default();
    for (i, (o, n)) in pairs.iter().enumerate() {
        let scg = simple_change_graph(&difference_graph(o, n));
        add_counts(&mut counts, scg.counts());
        for (j, c) in scg.components().into_iter().enumerate() {
            let id = if ids { format!("{}:{}", i + 1, j) } else { j.to_string() };
            comps.push((id, c));
        }
    }
    let text = write_lines(comps.iter().map(|(id, c)| (id.as_str(), &c.graph)));
    emit(a.out.as_deref(), &text)?;
    let summary = format!(
        "components: {}\nchanged: {} (created nodes {}, deleted nodes {}, created edges {}, deleted edges {})\nboundary nodes: {}\n",
        comps.len(),
        counts.changed(),
        counts.created_nodes,
        counts.deleted_nodes,
        counts.created_edges,
        counts.deleted_edges,
        counts.preserved_nodes,
    );
    if a.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(Status::Ok)
}

fn load_db(inputs: &[PathBuf]) -> Result<TransactionDb> {
    let mut db = TransactionDb::new();
    for path in inputs {
        if path.is_dir() {
            let b = read_bundle(path)?;
            for (i, w) in b.versions.windows(2).enumerate() {
                let scg = simple_change_graph(&difference_graph(&w[0], &w[1]));
                for (j, c) in scg.components().into_iter().enumerate() {
                    db.push(c.graph, format!("{}:{}", i + 1, j))?;
                }
            }
        } else {
            for t in read_transactions(path)? {
                db.push(t.graph, t.id.clone()).with_context(|| format!("{}: transaction {}", path.display(), t.id))?;
            }
        }
    }
    Ok(db)
}

fn cmd_mine(a: MineArgs) -> Result<Status> {
    let mode = a.threshold.mode()?;
    let db = load_db(&a.inputs)?;
    let secs = budget_seconds(a.time_budget).map_err(anyhow::Error::msg)?;
    let budget = from_seconds(secs);
    let start = Instant::now();
    let threshold = choose_threshold(&db, &mode, &budget);
    let cfg = MineConfig { max_nodes: a.max_nodes, ..MineConfig::with_threshold(threshold) };
    let (lattice, status) = match mine(&db, &cfg, &budget) {
        Ok(l) => (l, Status::Ok),
        Err(MineError::BudgetExceeded(l)) => (*l, Status::Budget),
        Err(e) => return Err(e.into()),
    };
    let list = rank_lattice(&lattice, true, a.by);
    let doc = RankedDoc::new(&list, &lattice);
    let how = match &mode {
        ThresholdMode::Fixed(_) => "fixed".to_string(),
        ThresholdMode::Relative(r) => format!("relative {r} of {} transactions", db.len()),
        ThresholdMode::Calibrate(_) => "calibrated".to_string(),
    };
    emit(a.out.as_deref(), &opminer::formats::to_json(&doc))?;
    if let Some(p) = &a.lattice {
        write_json(p, &LatticeDoc::from_lattice(&lattice))?;
    }
    let summary = format!(
        "threshold: {threshold} ({how})\ntransactions: {}\npatterns: {} mined, {} ranked\nwall time: {} ms{}\n",
        db.len(),
        lattice.len(),
        list.len(),
        start.elapsed().as_millis(),
        if lattice.partial { "\npartial: time budget exceeded" } else { "" },
    );
    if a.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(status)
}

fn cmd_rank(a: RankArgs) -> Result<Status> {
    let doc: LatticeDoc = read_json(&a.lattice)?;
    let (lattice, linked) = doc.to_lattice(&a.lattice.display().to_string())?;
    let list = rank_lattice(&lattice, linked, a.by);
    emit(a.out.as_deref(), &opminer::formats::to_json(&RankedDoc::new(&list, &lattice)))?;
    Ok(Status::Ok)
}

fn cmd_rules(a: RulesArgs) -> Result<Status> {
    let doc: RankedDoc = read_json(&a.patterns)?;
    fs::create_dir_all(&a.out).with_context(|| a.out.display().to_string())?;
    let mut failed = 0;
    let take = a.top.unwrap_or(usize::MAX);
    for p in doc.patterns.iter().take(take) {
        let name = format!("rule-{:03}", p.rank);
        let made = graph_from_lines(&p.graph)
            .map_err(anyhow::Error::from)
            .and_then(|g| graph_to_rule(&g, &name, &p.code).map_err(anyhow::Error::from));
        match made {
            Ok(rule) => {
                write_json(&a.out.join(format!("{name}.json")), &rule)?;
                if a.dot {
                    write_text(&a.out.join(format!("{name}.dot")), &rule_to_dot(&rule))?;
                }
            }
            Err(e) => {
                failed += 1;
                eprintln!("pattern rank {}: {e:#}", p.rank);
            }
        }
    }
    Ok(if failed > 0 { Status::Partial } else { Status::Ok })
}

fn cmd_simulate(a: SimulateArgs) -> Result<Status> {
    let names: Vec<&str> = a.core.iter().map(String::as_str).collect();
    let mut cfg = SimConfig::standard(&names, a.d, a.e, a.p, a.seed);
    if a.core_rule.is_empty() {
        let known: Vec<String> = default_catalogs().core.into_iter().map(|w| w.rule.name).collect();
        if let Some(bad) = a.core.iter().find(|n| !known.contains(n)) {
            bail!("unknown core rule {bad:?}; known: {}", known.join(", "));
        }
    } else {
        cfg.core = a
            .core_rule
            .iter()
            .map(|p| Ok(WeightedRule { rule: read_rule(p)?, weight: 1.0 }))
            .collect::<Result<Vec<_>>>()?;
    }
    cfg.metamodel = match &a.metamodel {
        Some(p) => read_metamodel(p)?,
        None => default_metamodel(),
    };
    cfg.scope = match a.scope {
        ScopeArg::Revision => SiteScope::Revision,
        ScopeArg::Current => SiteScope::Current,
    };
    cfg.overlap = match a.overlap {
        OverlapArg::Context => OverlapMode::Context,
        OverlapArg::Footprint => OverlapMode::Footprint,
    };
    let b = simulate(&cfg)?;
    write_bundle(&a.out, &b)?;
    for s in &b.skips {
        eprintln!("warning: revision {} skipped a {:?} application: {}", s.revision, s.kind, s.reason);
    }
    println!(
        "versions: {}\napplications: {} ({} perturbations)\nskips: {}",
        b.versions.len(),
        b.log.len(),
        b.perturbation_count(),
        b.skips.len()
    );
    Ok(Status::Ok)
}

fn cmd_eval(a: EvalArgs) -> Result<Status> {
    if let (Some(bundle), Some(ranked)) = (&a.bundle, &a.ranked) {
        let b = read_bundle(bundle)?;
        let doc: RankedDoc = read_json(ranked)?;
        let mut codes = Vec::with_capacity(doc.patterns.len());
        for p in &doc.patterns {
            codes.push(canonical_code(&graph_from_lines(&p.graph)?)?);
        }
        let truth: Vec<LabeledGraph> = truth_graphs(&b);
        let ranks: Vec<Option<usize>> = truth
            .iter()
            .map(|t| {
                let code = canonical_code(t).ok()?;
                codes.iter().position(|c| *c == code).map(|i| doc.patterns[i].rank)
            })
            .collect();
        for (t, r) in b.truth.iter().zip(&ranks) {
            match r {
                Some(r) => println!("{}: rank {r}", t.rule),
                None => println!("{}: absent", t.rule),
            }
        }
        for k in TABLE_CUTOFFS {
            println!("ap@{k}: {:.4}", ap_at_k(&ranks, k, ranks.len().max(1))?);
        }
        return Ok(Status::Ok);
    }
    let (Some(grid), Some(out)) = (&a.grid, &a.out) else { bail!("eval needs --grid and --out, or --bundle and --ranked") };
    let mut spec = match GridSpec::preset(grid) {
        Ok(s) => s,
        Err(_) if Path::new(grid).exists() => read_json(Path::new(grid))?,
        Err(e) => return Err(e.into()),
    };
    if let Some(s) = budget_seconds(spec.time_budget_s).map_err(anyhow::Error::msg)? {
        spec.time_budget_s = Some(s);
    }
    let start = Instant::now();
    let report = run_grid(&spec);
    write_report(out, &report)?;
    let rows = opminer::grid::rows(&report);
    print!("{}", format_tables(&rows, report.failures.len()).map_err(anyhow::Error::msg)?);
    println!("wall time: {:.1} s", start.elapsed().as_secs_f64());
    Ok(if report.failures.is_empty() { Status::Ok } else { Status::Partial })
}

fn cmd_report(a: ReportArgs) -> Result<Status> {
    let rows = read_rows(&a.input.join("report.csv"))?;
    let failures_path = a.input.join("failures.csv");
    let failures = if failures_path.exists() { read_failures(&failures_path)? } else { 0 };
    print!("{}", format_tables(&rows, failures).map_err(anyhow::Error::msg)?);
    Ok(Status::Ok)
}
