//! Synthetic model histories: a seeded initial instance evolved by repeated
//! rule applications, some followed by an overlapping perturbation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::LabeledGraph;
use crate::model::{EdgeType, MetaModel, ModelError, ModelVersion, Reference};
use crate::rule::{apply, rule_to_pattern, EditRule, RuleEdge, RuleError, RuleNode, Site};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("initial instance spec cannot be satisfied: {0}")]
    Unsatisfiable(String),
    #[error("unknown rule {0:?} in log")]
    UnknownRule(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Component meta-model the default rules are written against.
pub fn default_metamodel() -> MetaModel {
    let et = |name: &str, src: &str, tgt: &str, containment: bool| EdgeType {
        name: name.into(),
        src: src.into(),
        tgt: tgt.into(),
        containment,
    };
    MetaModel {
        node_types: ["Package", "Component", "SwImplementation", "Port", "Connector", "Requirement"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        edge_types: alloc::vec![
            et("subpackages", "Package", "Package", true),
            et("components", "Package", "Component", true),
            et("swImplementations", "Package", "SwImplementation", true),
            et("connectors", "Package", "Connector", true),
            et("requirements", "Package", "Requirement", true),
            et("ports", "Component", "Port", true),
            et("implementedBy", "Component", "SwImplementation", false),
            et("connectorEnd", "Connector", "Port", false),
            et("traces", "Requirement", "Component", false),
            et("traces", "Requirement", "Connector", false),
        ],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedRule {
    pub rule: EditRule,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalogs {
    pub core: Vec<WeightedRule>,
    pub perturbations: Vec<EditRule>,
}

fn rule(
    name: &str,
    context: &[(&str, &str)],
    created: &[(&str, &str)],
    deleted: &[(&str, &str)],
    context_edges: &[(&str, &str, &str)],
    created_edges: &[(&str, &str, &str)],
    deleted_edges: &[(&str, &str, &str)],
) -> EditRule {
    let nodes = |v: &[(&str, &str)]| v.iter().map(|(id, ty)| RuleNode::new(*id, *ty)).collect();
    let edges = |v: &[(&str, &str, &str)]| v.iter().map(|(s, t, ty)| RuleEdge::new(*s, *t, *ty)).collect();
    EditRule {
        name: name.into(),
        provenance: "authored".into(),
        context_nodes: nodes(context),
        created_nodes: nodes(created),
        deleted_nodes: nodes(deleted),
        context_edges: edges(context_edges),
        created_edges: edges(created_edges),
        deleted_edges: edges(deleted_edges),
    }
}

/// Connects two components through new ports and a connector, with a
/// requirement tracing the connector. 7 nodes, 7 edges.
pub fn add_interface() -> EditRule {
    rule(
        "add_interface",
        &[("pkg", "Package"), ("c1", "Component"), ("c2", "Component")],
        &[("p1", "Port"), ("p2", "Port"), ("con", "Connector"), ("req", "Requirement")],
        &[],
        &[],
        &[
            ("c1", "p1", "ports"),
            ("c2", "p2", "ports"),
            ("con", "p1", "connectorEnd"),
            ("con", "p2", "connectorEnd"),
            ("pkg", "con", "connectors"),
            ("pkg", "req", "requirements"),
            ("req", "con", "traces"),
        ],
        &[],
    )
}

/// New component with its implementation and a requirement tracing it.
/// 4 nodes, 5 edges.
pub fn add_component() -> EditRule {
    rule(
        "add_component",
        &[("pkg", "Package")],
        &[("comp", "Component"), ("impl", "SwImplementation"), ("req", "Requirement")],
        &[],
        &[],
        &[
            ("pkg", "comp", "components"),
            ("pkg", "impl", "swImplementations"),
            ("comp", "impl", "implementedBy"),
            ("pkg", "req", "requirements"),
            ("req", "comp", "traces"),
        ],
        &[],
    )
}

/// The two core operations (equal weight) and four perturbations.
pub fn default_catalogs() -> Catalogs {
    let perturbations = alloc::vec![
        rule(
            "add_connector_requirement",
            &[("pkg", "Package"), ("con", "Connector")],
            &[("req", "Requirement")],
            &[],
            &[("pkg", "con", "connectors")],
            &[("pkg", "req", "requirements"), ("req", "con", "traces")],
            &[],
        ),
        rule("add_port", &[("comp", "Component")], &[("port", "Port")], &[], &[], &[("comp", "port", "ports")], &[]),
        rule(
            "delete_requirement",
            &[("pkg", "Package"), ("con", "Connector")],
            &[],
            &[("req", "Requirement")],
            &[],
            &[],
            &[("pkg", "req", "requirements"), ("req", "con", "traces")],
        ),
        rule(
            "add_swimplementation",
            &[("pkg", "Package"), ("comp", "Component")],
            &[("impl", "SwImplementation")],
            &[],
            &[("pkg", "comp", "components")],
            &[("pkg", "impl", "swImplementations"), ("comp", "impl", "implementedBy")],
            &[],
        ),
    ];
    Catalogs {
        core: alloc::vec![
            WeightedRule { rule: add_interface(), weight: 1.0 },
            WeightedRule { rule: add_component(), weight: 1.0 },
        ],
        perturbations,
    }
}

/// Per-type element counts and per-source fan-out of non-containment
/// references.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub counts: BTreeMap<String, usize>,
    pub fanout: BTreeMap<String, usize>,
    /// Percent chance that a package sits inside an earlier package rather
    /// than at top level.
    #[serde(default = "default_nesting")]
    pub nesting_percent: u32,
}

fn default_nesting() -> u32 {
    50
}

impl InitialSpec {
    /// Instance sizes of the component model used in the experiments.
    pub fn standard() -> Self {
        let counts = [
            ("Package", 87),
            ("Component", 85),
            ("SwImplementation", 85),
            ("Port", 172),
            ("Connector", 86),
            ("Requirement", 171),
        ]
        .iter()
        .map(|(t, n)| (t.to_string(), *n))
        .collect();
        let fanout = [("implementedBy", 1), ("connectorEnd", 2), ("traces", 1)]
            .iter()
            .map(|(t, n)| (t.to_string(), *n))
            .collect();
        InitialSpec { counts, fanout, nesting_percent: default_nesting() }
    }
}

/// Seeded instance with exactly the requested counts. Every element that
/// can only live inside another gets one random container; elements whose
/// type may contain itself nest into an earlier element or stay top level.
pub fn build_initial(mm: &MetaModel, spec: &InitialSpec, seed: u64) -> Result<ModelVersion, SimError> {
    mm.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = ModelVersion::new();
    let mut by_type: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for ty in &mm.node_types {
        let n = spec.counts.get(ty).copied().unwrap_or(0);
        let uids: Vec<String> = (0..n).map(|i| format!("{ty}-{i}")).collect();
        for u in &uids {
            m.add_element(u.clone(), ty.clone())?;
        }
        by_type.insert(ty.as_str(), uids);
    }
    for ty in spec.counts.keys() {
        if !mm.has_node_type(ty) {
            return Err(SimError::Unsatisfiable(format!("unknown type {ty}")));
        }
    }

    for ty in &mm.node_types {
        let holders: Vec<&EdgeType> = mm.edge_types.iter().filter(|e| e.containment && e.tgt == *ty).collect();
        if holders.is_empty() {
            continue;
        }
        let nests = holders.iter().any(|e| e.src == *ty);
        for (i, uid) in by_type[ty.as_str()].iter().enumerate() {
            let mut options: Vec<(&str, &str)> = Vec::new();
            for e in &holders {
                let pool = &by_type[e.src.as_str()];
                let pool = if e.src == *ty { &pool[..i] } else { &pool[..] };
                options.extend(pool.iter().map(|p| (e.name.as_str(), p.as_str())));
            }
            if nests {
                if options.is_empty() || rng.gen_range(0..100) >= spec.nesting_percent {
                    continue;
                }
            } else if options.is_empty() {
                return Err(SimError::Unsatisfiable(format!("no container for {uid}")));
            }
            let (name, holder) = options[rng.gen_range(0..options.len())];
            m.add_reference(Reference::new(holder, uid.as_str(), name))?;
        }
    }

    for (name, &k) in &spec.fanout {
        let variants: Vec<&EdgeType> = mm.edge_types.iter().filter(|e| &e.name == name && !e.containment).collect();
        if variants.is_empty() {
            return Err(SimError::Unsatisfiable(format!("no reference type {name}")));
        }
        let sources: BTreeSet<&str> = variants.iter().map(|e| e.src.as_str()).collect();
        for src_ty in sources {
            let targets: Vec<&str> = variants.iter().filter(|e| e.src == src_ty).map(|e| e.tgt.as_str()).collect();
            for uid in &by_type[src_ty] {
                let mut chosen: BTreeSet<&str> = BTreeSet::new();
                while chosen.len() < k {
                    let open: Vec<&str> = targets
                        .iter()
                        .copied()
                        .filter(|t| by_type[t].iter().any(|c| c != uid && !chosen.contains(c.as_str())))
                        .collect();
                    let Some(&ty) = open.choose(&mut rng) else {
                        return Err(SimError::Unsatisfiable(format!("{uid} needs {k} {name} targets")));
                    };
                    let pool: Vec<&str> = by_type[ty]
                        .iter()
                        .map(String::as_str)
                        .filter(|c| *c != uid && !chosen.contains(c))
                        .collect();
                    chosen.insert(pool[rng.gen_range(0..pool.len())]);
                }
                for t in chosen {
                    m.add_reference(Reference::new(uid.as_str(), t, name.as_str()))?;
                }
            }
        }
    }
    mm.check(&m)?;
    Ok(m)
}

/// Which elements of a core application a perturbation must touch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    /// The bound context elements.
    #[default]
    Context,
    /// Bound context plus the elements the application created.
    Footprint,
}

/// Elements an application may bind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteScope {
    /// Elements of the version the revision starts from.
    #[default]
    Revision,
    /// Anything in the model at application time, including elements
    /// created earlier in the same revision.
    Current,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub d: usize,
    pub e: usize,
    pub p: f64,
    pub seed: u64,
    pub core: Vec<WeightedRule>,
    pub perturbations: Vec<EditRule>,
    pub metamodel: MetaModel,
    pub initial: InitialSpec,
    #[serde(default)]
    pub overlap: OverlapMode,
    #[serde(default)]
    pub scope: SiteScope,
    /// Rule draws per perturbation before it is skipped.
    #[serde(default = "default_attempts")]
    pub attempts: usize,
}

fn default_attempts() -> usize {
    8
}

impl SimConfig {
    /// Standard setup with the given core rules, by name from the default
    /// catalog, all with equal weight.
    pub fn standard(core: &[&str], d: usize, e: usize, p: f64, seed: u64) -> Self {
        let cat = default_catalogs();
        SimConfig {
            d,
            e,
            p,
            seed,
            core: cat.core.into_iter().filter(|w| core.contains(&w.rule.name.as_str())).collect(),
            perturbations: cat.perturbations,
            metamodel: default_metamodel(),
            initial: InitialSpec::standard(),
            overlap: OverlapMode::default(),
            scope: SiteScope::default(),
            attempts: default_attempts(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.into()));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if self.e == 0 {
            return bad("e must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad("p must lie in [0, 1]");
        }
        if self.core.is_empty() || self.core.iter().all(|w| w.weight <= 0.0) {
            return bad("core catalog is empty");
        }
        if self.core.iter().any(|w| w.weight.is_nan() || w.weight < 0.0) {
            return bad("rule weights must be non-negative");
        }
        if self.p > 0.0 && self.perturbations.is_empty() {
            return bad("perturbation catalog is empty");
        }
        let mut names = BTreeSet::new();
        for r in self.core.iter().map(|w| &w.rule).chain(self.perturbations.iter()) {
            r.validate()?;
            if !names.insert(r.name.as_str()) {
                return Err(SimError::InvalidConfig(format!("rule name {} used twice", r.name)));
            }
        }
        self.metamodel.validate()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApplicationKind {
    Core,
    Perturbation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    /// 1-based: the entry turns version `revision - 1` into `revision`.
    pub revision: usize,
    pub rule: String,
    pub kind: ApplicationKind,
    pub seed: u64,
    pub binding: BTreeMap<String, String>,
    pub created: BTreeMap<String, String>,
    /// Log index of the core application this perturbation overlaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbs: Option<usize>,
    /// Elements shared with the perturbed application.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overlap: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub revision: usize,
    pub kind: ApplicationKind,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthPattern {
    pub rule: String,
    pub graph: LabeledGraph,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepoBundle {
    pub config: SimConfig,
    /// `m0 ..= md`.
    pub versions: Vec<ModelVersion>,
    pub log: Vec<LogEntry>,
    pub skips: Vec<Skip>,
    pub truth: Vec<TruthPattern>,
}

impl RepoBundle {
    pub fn perturbation_count(&self) -> usize {
        self.log.iter().filter(|l| l.kind == ApplicationKind::Perturbation).count()
    }
}

fn pick_weighted<'a>(core: &'a [WeightedRule], rng: &mut ChaCha8Rng) -> &'a EditRule {
    let total: f64 = core.iter().map(|w| w.weight).sum();
    let mut x = rng.gen::<f64>() * total;
    for w in core {
        if x < w.weight {
            return &w.rule;
        }
        x -= w.weight;
    }
    &core.iter().rev().find(|w| w.weight > 0.0).expect("validated").rule
}

/// Runs the simulation protocol: `d` revisions of `e` core applications,
/// each followed with probability `p` by one overlapping perturbation.
pub fn simulate(cfg: &SimConfig) -> Result<RepoBundle, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m0 = build_initial(&cfg.metamodel, &cfg.initial, rng.gen())?;
    let mut versions = alloc::vec![m0];
    let mut log = Vec::new();
    let mut skips = Vec::new();
    for revision in 1..=cfg.d {
        let mut cur = versions.last().unwrap().clone();
        let base: Option<BTreeSet<String>> = match cfg.scope {
            SiteScope::Revision => Some(cur.elements().map(|(u, _)| String::from(u)).collect()),
            SiteScope::Current => None,
        };
        let site = base.clone().map_or(Site::Random, Site::Within);
        for _ in 0..cfg.e {
            let core = pick_weighted(&cfg.core, &mut rng);
            let seed: u64 = rng.gen();
            let app = match apply(core, &cur, &cfg.metamodel, &site, seed) {
                Ok(app) => app,
                Err(err) => {
                    skips.push(Skip { revision, kind: ApplicationKind::Core, reason: format!("{}: {err}", core.name) });
                    continue;
                }
            };
            let core_idx = log.len();
            log.push(LogEntry {
                revision,
                rule: core.name.clone(),
                kind: ApplicationKind::Core,
                seed,
                binding: app.binding.clone(),
                created: app.created.clone(),
                perturbs: None,
                overlap: Vec::new(),
            });
            cur = app.model;
            if cfg.p <= 0.0 || !rng.gen_bool(cfg.p) {
                continue;
            }
            let mut pool: BTreeSet<String> = app.binding.values().cloned().collect();
            if cfg.overlap == OverlapMode::Footprint {
                pool.extend(app.created.values().cloned());
            }
            let mut done = false;
            let mut last_err = String::new();
            for _ in 0..cfg.attempts.max(1) {
                let pert = cfg.perturbations.choose(&mut rng).expect("validated");
                let seed: u64 = rng.gen();
                match apply(pert, &cur, &cfg.metamodel, &Site::Overlapping { pool: pool.clone(), within: base.clone() }, seed) {
                    Ok(papp) => {
                        let overlap = papp.binding.values().filter(|u| pool.contains(*u)).cloned().collect();
                        log.push(LogEntry {
                            revision,
                            rule: pert.name.clone(),
                            kind: ApplicationKind::Perturbation,
                            seed,
                            binding: papp.binding,
                            created: papp.created,
                            perturbs: Some(core_idx),
                            overlap,
                        });
                        cur = papp.model;
                        done = true;
                        break;
                    }
                    Err(err) => last_err = format!("{}: {err}", pert.name),
                }
            }
            if !done {
                skips.push(Skip { revision, kind: ApplicationKind::Perturbation, reason: last_err });
            }
        }
        versions.push(cur);
    }
    let truth = cfg
        .core
        .iter()
        .map(|w| Ok(TruthPattern { rule: w.rule.name.clone(), graph: rule_to_pattern(&w.rule)? }))
        .collect::<Result<Vec<_>, RuleError>>()?;
    Ok(RepoBundle { config: cfg.clone(), versions, log, skips, truth })
}

/// Re-applies `log` to `m0` with the logged bindings and seeds, returning
/// every version from `m0` on.
pub fn replay(
    m0: &ModelVersion,
    log: &[LogEntry],
    rules: &[EditRule],
    mm: &MetaModel,
    revisions: usize,
) -> Result<Vec<ModelVersion>, SimError> {
    let by_name: BTreeMap<&str, &EditRule> = rules.iter().map(|r| (r.name.as_str(), r)).collect();
    let mut versions = alloc::vec![m0.clone()];
    let mut cur = m0.clone();
    let mut entries = log.iter().peekable();
    for revision in 1..=revisions {
        while let Some(entry) = entries.next_if(|e| e.revision == revision) {
            let rule = by_name.get(entry.rule.as_str()).ok_or_else(|| SimError::UnknownRule(entry.rule.clone()))?;
            cur = apply(rule, &cur, mm, &Site::Fixed(entry.binding.clone()), entry.seed)?.model;
        }
        versions.push(cur.clone());
    }
    Ok(versions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{difference_graph, simple_change_graph};
    use crate::iso::are_isomorphic;

    #[test]
    fn catalog_sizes() {
        let cat = default_catalogs();
        let g1 = rule_to_pattern(&cat.core[0].rule).unwrap();
        assert_eq!((g1.node_count(), g1.edge_count()), (7, 7));
        let g2 = rule_to_pattern(&cat.core[1].rule).unwrap();
        assert_eq!((g2.node_count(), g2.edge_count()), (4, 5));
        assert_eq!(cat.perturbations.len(), 4);
        let mm = default_metamodel();
        mm.validate().unwrap();
        for r in cat.core.iter().map(|w| &w.rule).chain(&cat.perturbations) {
            r.validate().unwrap();
            for n in r.context_nodes.iter().chain(&r.created_nodes).chain(&r.deleted_nodes) {
                assert!(mm.has_node_type(&n.ty));
            }
        }
    }

    #[test]
    fn initial_counts_and_determinism() {
        let mm = default_metamodel();
        let spec = InitialSpec::standard();
        let a = build_initial(&mm, &spec, 1).unwrap();
        for (ty, n) in &spec.counts {
            assert_eq!(a.count_of_type(ty), *n, "{ty}");
        }
        assert_eq!(a, build_initial(&mm, &spec, 1).unwrap());
        let b = build_initial(&mm, &spec, 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.element_count(), b.element_count());
    }

    #[test]
    fn empty_spec_gives_empty_model() {
        let spec = InitialSpec { fanout: BTreeMap::new(), ..InitialSpec::default() };
        assert_eq!(build_initial(&default_metamodel(), &spec, 0).unwrap().element_count(), 0);
    }

    #[test]
    fn unsatisfiable_spec() {
        let mut spec = InitialSpec::standard();
        spec.counts.insert("Package".into(), 0);
        assert!(matches!(build_initial(&default_metamodel(), &spec, 0), Err(SimError::Unsatisfiable(_))));
    }

    #[test]
    fn noiseless_revisions_yield_rule_pattern() {
        let cfg = SimConfig::standard(&["add_interface"], 2, 1, 0.0, 5);
        let b = simulate(&cfg).unwrap();
        assert_eq!(b.versions.len(), 3);
        for w in b.versions.windows(2) {
            let comps = simple_change_graph(&difference_graph(&w[0], &w[1])).components();
            assert_eq!(comps.len(), 1);
            assert!(are_isomorphic(&comps[0].graph, &b.truth[0].graph));
        }
    }

    #[test]
    fn every_core_application_perturbed_at_p1() {
        let cfg = SimConfig::standard(&["add_interface"], 2, 3, 1.0, 9);
        let b = simulate(&cfg).unwrap();
        let cores = b.log.iter().filter(|l| l.kind == ApplicationKind::Core).count();
        let perturbation_skips = b.skips.iter().filter(|s| s.kind == ApplicationKind::Perturbation).count();
        assert_eq!(cores, 6);
        assert_eq!(b.perturbation_count() + perturbation_skips, 6);
        for l in b.log.iter().filter(|l| l.kind == ApplicationKind::Perturbation) {
            assert!(!l.overlap.is_empty());
        }
    }

    #[test]
    fn replay_reproduces_versions() {
        let cfg = SimConfig::standard(&["add_interface", "add_component"], 3, 4, 0.5, 11);
        let b = simulate(&cfg).unwrap();
        let rules: Vec<EditRule> =
            cfg.core.iter().map(|w| w.rule.clone()).chain(cfg.perturbations.iter().cloned()).collect();
        let again = replay(&b.versions[0], &b.log, &rules, &cfg.metamodel, cfg.d).unwrap();
        assert_eq!(again, b.versions);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::standard(&["add_interface"], 1, 1, 0.0, 0);
        cfg.e = 0;
        assert!(matches!(simulate(&cfg), Err(SimError::InvalidConfig(_))));
        cfg.e = 1;
        cfg.p = 1.5;
        assert!(matches!(simulate(&cfg), Err(SimError::InvalidConfig(_))));
    }
}
