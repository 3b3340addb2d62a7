use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use causal_survey::baselines::{correlation_screen, neutral_tests, NeutralTest};
use causal_survey::effects::{hierarchy, partition_variables, rank_interventions, EffectConfig, EffectReport};
use causal_survey::ges::{run_ges, GesOptions, Phase};
use causal_survey::graph::{cpdag_from_dag, to_dot, GraphDump, Pdag};
use causal_survey::ingest::{
    apply_schema, complete_cases, load_schema, load_table, render_schema, standardize, Dataset, VariableKind,
};
use causal_survey::par::Parallelism;
use causal_survey::synth::{default_names, likertize, random_dag, recovery_metrics, sample, Scm, DEFAULT_CUTPOINTS};
use serde::{Deserialize, Serialize};

use crate::artifact::{self, DirLock};
use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// Search hit its iteration cap; artifacts were still written.
    Truncated,
}

pub const CONFIG_FILE: &str = "config.toml";
pub const GRAPH_FILE: &str = "graph.json";
pub const DOT_FILE: &str = "graph.dot";
pub const TRACE_FILE: &str = "trace.txt";
pub const PARTITION_FILE: &str = "partition.txt";
pub const EFFECTS_FILE: &str = "effects.json";
pub const HIERARCHY_FILE: &str = "hierarchy.json";
pub const RANKING_FILE: &str = "ranking.tsv";
pub const PAIRS_FILE: &str = "strong_pairs.tsv";
pub const NEUTRAL_FILE: &str = "neutral_tests.tsv";
pub const REPORT_FILE: &str = "report.md";

const REPORT_INPUTS: [&str; 10] = [
    CONFIG_FILE,
    GRAPH_FILE,
    DOT_FILE,
    TRACE_FILE,
    PARTITION_FILE,
    EFFECTS_FILE,
    HIERARCHY_FILE,
    RANKING_FILE,
    PAIRS_FILE,
    NEUTRAL_FILE,
];

struct Run<'a> {
    cfg: &'a RunConfig,
    hash: String,
    _lock: DirLock,
}

impl<'a> Run<'a> {
    fn start(cfg: &'a RunConfig) -> Result<Self> {
        let hash = cfg.hash()?;
        let lock = DirLock::acquire(&cfg.out)?;
        let run = Run { cfg, hash, _lock: lock };
        run.write(CONFIG_FILE, &config_toml(cfg))?;
        Ok(run)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn write(&self, name: &str, body: &str) -> Result<()> {
        artifact::write(&self.path(name), &self.hash, body)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        artifact::write_json(&self.path(name), &self.hash, value)
    }
}

fn config_toml(cfg: &RunConfig) -> String {
    let mut out = String::new();
    if let Some(p) = &cfg.input {
        let _ = writeln!(out, "input = {}", toml_string(&p.display().to_string()));
    }
    if let Some(p) = &cfg.schema {
        let _ = writeln!(out, "schema = {}", toml_string(&p.display().to_string()));
    }
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "high = {:?}", cfg.high);
    let _ = writeln!(out, "low = {:?}", cfg.low);
    let _ = writeln!(out, "resamples = {}", cfg.resamples);
    let _ = writeln!(out, "corr-method = \"{}\"", cfg.corr_method.as_str());
    let _ = writeln!(out, "corr-threshold = {:?}", cfg.corr_threshold);
    let _ = writeln!(out, "penalty = {:?}", cfg.penalty);
    let _ = writeln!(out, "max-missing = {:?}", cfg.max_missing);
    let _ = writeln!(out, "neutral = {:?}", cfg.neutral);
    let _ = writeln!(out, "nodes = {}", cfg.nodes);
    let _ = writeln!(out, "samples = {}", cfg.samples);
    let _ = writeln!(out, "degree = {:?}", cfg.degree);
    let _ = writeln!(out, "likert = {}", cfg.likert);
    out
}

fn toml_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

/// Loads, validates and cleans the survey table: schema applied, sparse
/// columns and incomplete rows dropped, constant columns removed.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let schema_path = cfg.schema()?;
    let input_path = cfg.input()?;
    let specs = load_schema(schema_path).with_context(|| format!("schema file {}", schema_path.display()))?;
    let table = load_table(input_path).with_context(|| format!("input file {}", input_path.display()))?;
    let data = apply_schema(&table, &specs).with_context(|| format!("applying {}", schema_path.display()))?;
    let clean = complete_cases(&data, cfg.max_missing)?.drop_constant_columns();
    for line in clean.provenance() {
        log::info!("{line}");
    }
    Ok(clean)
}

fn timed<T>(label: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    log::info!("{label} took {:.3}s", start.elapsed().as_secs_f64());
    out
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<Status> {
    let run = Run::start(cfg)?;
    let data = timed("ingest", || load_dataset(cfg))?;
    run.write("dataset.csv", &data.to_csv())?;
    run.write("dataset.schema", &render_schema(data.specs()))?;
    run.write("provenance.txt", &lines(data.provenance()))?;
    eprintln!("ingested {} rows x {} variables", data.n(), data.p());
    Ok(Status::Done)
}

fn lines(items: &[String]) -> String {
    items.iter().map(|l| format!("{l}\n")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSummary {
    pub initial_score: f64,
    pub final_score: f64,
    pub forward_moves: usize,
    pub backward_moves: usize,
    pub cap_hits: usize,
    pub truncated: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Discovery {
    pub graph: GraphDump,
    pub provenance: Vec<String>,
    pub search: SearchSummary,
}

pub fn cmd_discover(cfg: &RunConfig) -> Result<Status> {
    let run = Run::start(cfg)?;
    let data = load_dataset(cfg)?;
    let z = standardize(&data)?;
    let opts = GesOptions {
        penalty_multiplier: cfg.penalty,
        verify: false,
        ..GesOptions::default()
    };
    let result = timed("search", || Ok(run_ges(&z, &opts)?))?;
    let names = z.names();
    let moves = |phase| result.trace.entries.iter().filter(|e| e.phase == phase).count();
    let doc = Discovery {
        graph: GraphDump::new(&result.graph, &names)?,
        provenance: z.provenance().to_vec(),
        search: SearchSummary {
            initial_score: result.trace.initial_score,
            final_score: result.score,
            forward_moves: moves(Phase::Forward),
            backward_moves: moves(Phase::Backward),
            cap_hits: result.trace.cap_hits,
            truncated: result.truncated,
            degenerate: result.degenerate,
        },
    };
    run.write_json(GRAPH_FILE, &doc)?;
    run.write(DOT_FILE, &to_dot(&result.graph, &names)?)?;
    run.write(TRACE_FILE, &result.trace.render(&names))?;
    let part = partition_variables(&result.graph);
    let mut body = String::new();
    for &v in &part.associated {
        let _ = writeln!(body, "associated\t{}", names[v]);
    }
    for &v in &part.independent {
        let _ = writeln!(body, "independent\t{}", names[v]);
    }
    run.write(PARTITION_FILE, &body)?;
    eprintln!(
        "graph: {} directed, {} undirected edges; {} associated, {} independent",
        result.graph.directed_edges().len(),
        result.graph.undirected_edges().len(),
        part.associated.len(),
        part.independent.len()
    );
    if result.truncated {
        log::warn!("search stopped at the iteration cap; the graph may not be a local optimum");
        return Ok(Status::Truncated);
    }
    Ok(Status::Done)
}

fn name_mismatch(graph: &[String], data: &[String]) -> Option<String> {
    if graph == data {
        return None;
    }
    let only_graph: Vec<&str> = graph.iter().filter(|n| !data.contains(n)).map(String::as_str).collect();
    let only_data: Vec<&str> = data.iter().filter(|n| !graph.contains(n)).map(String::as_str).collect();
    if only_graph.is_empty() && only_data.is_empty() {
        return Some("same variables in a different order".into());
    }
    Some(format!(
        "only in graph: [{}]; only in data: [{}]",
        only_graph.join(", "),
        only_data.join(", ")
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectEntry {
    pub rank: Option<usize>,
    pub target: String,
    pub mean_abs_effect: Option<f64>,
    /// Outcome variable name to `[effect, ci_low, ci_high]`.
    pub effects: BTreeMap<String, [f64; 3]>,
    pub n_high: usize,
    pub n_low: usize,
    pub subsample_size: usize,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyDoc {
    pub definition: String,
    pub variables: Vec<HierarchyRow>,
    pub most_ancestor: Option<String>,
    pub most_descendant: Option<String>,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyRow {
    pub name: String,
    pub depth: usize,
    pub ancestry_score: i64,
}

fn effect_entry(rank: usize, names: &[String], r: &EffectReport) -> EffectEntry {
    let effects = (0..names.len())
        .filter(|&j| j != r.target)
        .map(|j| (names[j].clone(), [r.per_variable_effect[j], r.ci_low[j], r.ci_high[j]]))
        .collect();
    EffectEntry {
        rank: Some(rank),
        target: names[r.target].clone(),
        mean_abs_effect: Some(r.mean_abs_effect),
        effects,
        n_high: r.n_high,
        n_low: r.n_low,
        subsample_size: r.subsample_size,
        skipped: None,
    }
}

pub fn cmd_effects(cfg: &RunConfig, graph_path: Option<&Path>) -> Result<Status> {
    let default_graph = cfg.out.join(GRAPH_FILE);
    let graph_path = graph_path.unwrap_or(&default_graph);
    let doc: Discovery = artifact::read_json(graph_path)?;
    let run = Run::start(cfg)?;
    let data = load_dataset(cfg)?;
    let names = data.names();
    if let Some(diff) = name_mismatch(&doc.graph.nodes, &names) {
        bail!("graph {} does not match the dataset variables: {diff}", graph_path.display());
    }
    let g: Pdag = doc.graph.to_pdag()?;
    let ecfg = EffectConfig {
        high_threshold: cfg.high,
        low_threshold: cfg.low,
        resamples: cfg.resamples,
        seed: cfg.seed,
        ..EffectConfig::default()
    };
    let ranking = timed("effects", || Ok(rank_interventions(&data, &g, &ecfg)?))?;

    let mut entries = Vec::new();
    let mut table = String::from("rank\ttarget\tmean_abs_effect\tn_high\tn_low\n");
    let mut rank = 0;
    for e in &ranking.entries {
        match &e.outcome {
            Ok(r) => {
                rank += 1;
                let _ = writeln!(table, "{rank}\t{}\t{}\t{}\t{}", names[r.target], r.mean_abs_effect, r.n_high, r.n_low);
                entries.push(effect_entry(rank, &names, r));
            }
            Err(err) => entries.push(EffectEntry {
                rank: None,
                target: names[e.target].clone(),
                mean_abs_effect: None,
                effects: BTreeMap::new(),
                n_high: 0,
                n_low: 0,
                subsample_size: 0,
                skipped: Some(err.to_string()),
            }),
        }
    }
    run.write_json(EFFECTS_FILE, &entries)?;
    run.write(RANKING_FILE, &table)?;

    let h = hierarchy(&g)?;
    let hdoc = HierarchyDoc {
        definition: "ancestry_score = |descendants| - |ancestors| in the consistent extension".into(),
        variables: (0..names.len())
            .map(|v| HierarchyRow {
                name: names[v].clone(),
                depth: h.depth[v],
                ancestry_score: h.ancestry_score[v],
            })
            .collect(),
        most_ancestor: h.most_ancestor.map(|v| names[v].clone()),
        most_descendant: h.most_descendant.map(|v| names[v].clone()),
        ambiguous: h.ambiguous,
    };
    run.write_json(HIERARCHY_FILE, &hdoc)?;
    eprintln!("ranked {rank} targets, skipped {}", ranking.entries.len() - rank);
    Ok(Status::Done)
}

pub fn cmd_baselines(cfg: &RunConfig) -> Result<Status> {
    let run = Run::start(cfg)?;
    let data = load_dataset(cfg)?;
    let cols: Vec<usize> = (0..data.p())
        .filter(|&j| data.specs()[j].kind != VariableKind::Categorical)
        .collect();
    let screened = data.select_columns(&cols);
    let names = screened.names();
    let screen = timed("correlation screen", || {
        Ok(correlation_screen(&screened, cfg.corr_method, cfg.corr_threshold, Parallelism::default())?)
    })?;
    let mut pairs = format!("variable_a\tvariable_b\tr_{}\n", cfg.corr_method.as_str());
    for p in &screen.strong_pairs {
        let _ = writeln!(pairs, "{}\t{}\t{}", names[p.i], names[p.j], p.r);
    }
    run.write(PAIRS_FILE, &pairs)?;

    let tests = neutral_tests(&data, cfg.neutral, false, Parallelism::default())?;
    run.write(NEUTRAL_FILE, &neutral_table(&data.names(), &tests, cfg.neutral))?;
    eprintln!("{} strong pairs, {} neutral tests", screen.strong_pairs.len(), tests.len());
    Ok(Status::Done)
}

fn neutral_table(names: &[String], tests: &[NeutralTest], neutral: f64) -> String {
    let mut out = format!("variable\tmean_minus_{neutral}\tt\tp\tstars\n");
    for t in tests {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            names[t.variable],
            t.effect_size,
            t.t_statistic,
            t.p_value,
            t.stars.as_str()
        );
    }
    out
}

#[derive(Serialize)]
struct Truth {
    graph: GraphDump,
    weights: Vec<(String, String, f64)>,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Status> {
    if cfg.nodes < 2 || cfg.samples < 10 {
        bail!("simulate needs at least 2 nodes and 10 samples");
    }
    let run = Run::start(cfg)?;
    let dag = random_dag(cfg.nodes, cfg.degree, cfg.seed);
    let scm = Scm::with_random_weights(dag.clone(), 0.5, 1.0, cfg.seed);
    let names = default_names(cfg.nodes);
    let raw = sample(&scm, cfg.samples, cfg.seed);
    let data = if cfg.likert {
        likertize(&standardize(&raw)?, &DEFAULT_CUTPOINTS)?
    } else {
        raw
    };
    let truth = Truth {
        graph: GraphDump::new(&Pdag::from_dag(&dag), &names)?,
        weights: dag.edges().into_iter().map(|(u, v)| (names[u].clone(), names[v].clone(), scm.weight(u, v))).collect(),
    };
    run.write_json("truth.json", &truth)?;
    run.write("sample.csv", &data.to_csv())?;
    run.write("sample.schema", &render_schema(data.specs()))?;

    let z = standardize(&data)?;
    if z.p() != cfg.nodes {
        bail!("simulated sample has constant columns; increase --samples");
    }
    let opts = GesOptions {
        penalty_multiplier: cfg.penalty,
        verify: false,
        ..GesOptions::default()
    };
    let est = timed("search", || Ok(run_ges(&z, &opts)?))?.graph;
    let m = recovery_metrics(&dag, &est)?;
    let truth_cpdag = cpdag_from_dag(&dag);
    let body = format!(
        "metric\tvalue\nshd\t{}\nskeleton_precision\t{}\nskeleton_recall\t{}\norientation_accuracy\t{}\ntrue_edges\t{}\nestimated_edges\t{}\n",
        m.shd,
        m.skeleton_precision,
        m.skeleton_recall,
        m.orientation_accuracy,
        truth_cpdag.n_edges(),
        est.n_edges()
    );
    run.write("metrics.tsv", &body)?;
    eprintln!("shd {} precision {:.3} recall {:.3}", m.shd, m.skeleton_precision, m.skeleton_recall);
    Ok(Status::Done)
}

fn tsv_rows(body: &str) -> Vec<Vec<String>> {
    body.lines().skip(1).filter(|l| !l.is_empty()).map(|l| l.split('\t').map(str::to_string).collect()).collect()
}

fn parse_f64(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<Status> {
    let dir = &cfg.out;
    let missing: Vec<&str> = REPORT_INPUTS.iter().copied().filter(|f| !dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        bail!("missing artifacts in {}: {}", dir.display(), missing.join(", "));
    }
    let mut hashes = BTreeMap::new();
    for f in REPORT_INPUTS {
        hashes.entry(artifact::read_hash(&dir.join(f))?).or_insert_with(Vec::new).push(f);
    }
    if hashes.len() > 1 {
        let groups: Vec<String> = hashes.iter().map(|(h, fs)| format!("{h}: {}", fs.join(", "))).collect();
        bail!("artifacts come from different runs (config hash differs): {}", groups.join("; "));
    }
    let hash = hashes.into_keys().next().expect("at least one artifact");
    if cfg.input.is_some() {
        let expected = cfg.hash()?;
        if expected != hash {
            bail!("artifacts in {} have config hash {hash}, but this config hashes to {expected}", dir.display());
        }
    }
    let _lock = DirLock::acquire(dir)?;
    let report = render_report(dir, &hash)?;
    artifact::write(&dir.join(REPORT_FILE), &hash, &report)?;
    eprintln!("wrote {}", dir.join(REPORT_FILE).display());
    Ok(Status::Done)
}

fn md_table(out: &mut String, head: &[&str], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", head.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn render_report(dir: &Path, hash: &str) -> Result<String> {
    let config = artifact::read_body(&dir.join(CONFIG_FILE))?;
    let disc: Discovery = artifact::read_json(&dir.join(GRAPH_FILE))?;
    let dot = artifact::read_body(&dir.join(DOT_FILE))?;
    let partition = artifact::read_body(&dir.join(PARTITION_FILE))?;
    let effects: Vec<EffectEntry> = artifact::read_json(&dir.join(EFFECTS_FILE))?;
    let hier: HierarchyDoc = artifact::read_json(&dir.join(HIERARCHY_FILE))?;
    let pairs_body = artifact::read_body(&dir.join(PAIRS_FILE))?;
    let neutral_body = artifact::read_body(&dir.join(NEUTRAL_FILE))?;

    let mut out = String::from("# Causal survey report\n\n");
    let _ = writeln!(out, "Generated by causal-survey {} from configuration `{hash}`.\n", artifact::VERSION);

    out.push_str("## Run configuration\n\n```toml\n");
    out.push_str(&config);
    out.push_str("```\n\n");

    out.push_str("## Data provenance\n\n");
    if disc.provenance.is_empty() {
        out.push_str("No variables or rows were dropped.\n\n");
    } else {
        for line in &disc.provenance {
            let _ = writeln!(out, "- {line}");
        }
        out.push('\n');
    }

    let s = &disc.search;
    out.push_str("## Structure search\n\n");
    let _ = writeln!(
        out,
        "{} forward and {} backward moves; BIC {:.3} -> {:.3}.",
        s.forward_moves, s.backward_moves, s.initial_score, s.final_score
    );
    if s.truncated {
        out.push_str("The search stopped at its iteration cap.\n");
    }
    if s.cap_hits > 0 {
        let _ = writeln!(out, "Neighbor subsets were capped in {} operator evaluations.", s.cap_hits);
    }
    if s.degenerate {
        out.push_str("Some local scores needed regularization (near-collinear variables).\n");
    }
    out.push('\n');

    let associated: Vec<&str> = partition.lines().filter_map(|l| l.strip_prefix("associated\t")).collect();
    let independent: Vec<&str> = partition.lines().filter_map(|l| l.strip_prefix("independent\t")).collect();
    out.push_str("## Causal graph\n\n");
    let _ = writeln!(
        out,
        "{} associated and {} independent variables. The graph is in `{DOT_FILE}` (render with `dot -Tsvg {DOT_FILE}`).\n",
        associated.len(),
        independent.len()
    );
    out.push_str("```dot\n");
    out.push_str(&dot);
    out.push_str("```\n\n");
    if !independent.is_empty() {
        let _ = writeln!(out, "Independent variables: {}.\n", independent.join(", "));
    }

    out.push_str("## Hierarchy\n\n");
    let _ = writeln!(out, "{}.", hier.definition);
    if let (Some(a), Some(d)) = (&hier.most_ancestor, &hier.most_descendant) {
        let _ = writeln!(out, "Most ancestral: {a}. Most descendant: {d}.");
    }
    if hier.ambiguous {
        out.push_str("The graph has undirected edges, so these values come from one member of its equivalence class.\n");
    }
    out.push('\n');
    let mut rows: Vec<&HierarchyRow> = hier.variables.iter().filter(|r| associated.contains(&r.name.as_str())).collect();
    rows.sort_by(|a, b| b.ancestry_score.cmp(&a.ancestry_score).then(a.name.cmp(&b.name)));
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.name.clone(), r.depth.to_string(), r.ancestry_score.to_string()])
        .collect();
    md_table(&mut out, &["variable", "depth", "ancestry score"], &rows);

    out.push_str("## What-is: baseline rankings\n\n");
    let mut neutral = tsv_rows(&neutral_body);
    neutral.sort_by(|a, b| parse_f64(&b[1]).abs().total_cmp(&parse_f64(&a[1]).abs()).then(a[0].cmp(&b[0])));
    out.push_str("Variables ranked by distance of the mean response from the neutral point.\n\n");
    let neutral_rows: Vec<Vec<String>> = neutral
        .iter()
        .enumerate()
        .map(|(i, r)| vec![(i + 1).to_string(), r[0].clone(), format!("{:.3}", parse_f64(&r[1])), format!("{:.3e}", parse_f64(&r[3])), r[4].clone()])
        .collect();
    md_table(&mut out, &["rank", "variable", "mean - neutral", "p", "sig."], &neutral_rows);
    let method = pairs_body.lines().next().and_then(|l| l.split('\t').nth(2)).unwrap_or("r").to_string();
    let pairs = tsv_rows(&pairs_body);
    let _ = writeln!(out, "{} strongly correlated pairs (`{method}`).\n", pairs.len());
    if !pairs.is_empty() {
        let pair_rows: Vec<Vec<String>> = pairs
            .iter()
            .map(|r| vec![r[0].clone(), r[1].clone(), format!("{:.3}", parse_f64(&r[2]))])
            .collect();
        md_table(&mut out, &["variable", "variable", "r"], &pair_rows);
    }

    out.push_str("## What-if: causal rankings\n\n");
    out.push_str("Targets ranked by the mean absolute change in other responses between high and low target groups.\n\n");
    let ranked: Vec<&EffectEntry> = effects.iter().filter(|e| e.rank.is_some()).collect();
    let effect_rows: Vec<Vec<String>> = ranked
        .iter()
        .map(|e| {
            vec![
                e.rank.unwrap_or_default().to_string(),
                e.target.clone(),
                format!("{:.3}", e.mean_abs_effect.unwrap_or(f64::NAN)),
                e.n_high.to_string(),
                e.n_low.to_string(),
            ]
        })
        .collect();
    md_table(&mut out, &["rank", "target", "mean abs. effect", "n high", "n low"], &effect_rows);
    for e in effects.iter().filter(|e| e.skipped.is_some()) {
        let _ = writeln!(out, "- skipped {}: {}", e.target, e.skipped.as_deref().unwrap_or_default());
    }
    if effects.iter().any(|e| e.skipped.is_some()) {
        out.push('\n');
    }

    out.push_str("## Contrast\n\n");
    let k = 5.min(neutral.len().max(ranked.len()));
    let contrast: Vec<Vec<String>> = (0..k)
        .map(|i| {
            vec![
                (i + 1).to_string(),
                neutral.get(i).map(|r| r[0].clone()).unwrap_or_default(),
                ranked.get(i).map(|e| e.target.clone()).unwrap_or_default(),
            ]
        })
        .collect();
    md_table(&mut out, &["rank", "what-is", "what-if"], &contrast);
    Ok(out)
}
