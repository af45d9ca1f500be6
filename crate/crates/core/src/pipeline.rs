//! Config-driven commands that read and write artifact directories.
//!
//! A generated (or imported) split directory holds
//!
//! | file | content |
//! |------|---------|
//! | `graph.tsv` | full closed graph, one `head<TAB>relation<TAB>tail` per line |
//! | `train.tsv` | training triples |
//! | `heldout.tsv` | held-out triples |
//! | `rules.jsonl` | one rule per line (generated only) |
//! | `node_types.json` | type catalog and every entity's type (generated only) |
//! | `witnesses.jsonl` | a training-side witness per held-out triple (generated only) |
//! | `manifest.json` | config hash, counts, achieved balance, file digests |
//!
//! Emission adds `corpus.txt`, `eval.jsonl`, `vocab.txt`, `ids.json` and
//! `eval_report.json`. No file carries timestamps, so reruns of the same
//! config are byte-identical.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    assign_ids, build_eval_set, build_vocab, corpus_lines, validate_eval_set, write_eval_jsonl, CorpusMode,
    DistractorMode, SkippedQuestion, TemplateTable,
};
use crate::entropy::{graph_search_entropy, EntropyMode, EntropyReport, LogBase};
use crate::error::{Error, Result};
use crate::graph::{graph_stats, write_tsv, GraphStats, KnowledgeGraph, Label, Triple, TsvReader};
use crate::graphgen::{generate, GammaMode, GraphConfig, DEFAULT_CLOSURE_INTERVAL, DEFAULT_HELDOUT,
    DEFAULT_MAX_NEW_EDGES, DEFAULT_MAX_RELATIONS_PER_NODE};
use crate::scaling::{
    fit_scaling_law, locate_optimal, predict_optimal_size, OptimalPoint, Prediction, RunResult, ScalingFit,
};

/// Flat experiment configuration, read from TOML. Only `seed` and the four
/// size fields plus `gamma` are required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,

    pub n_triples: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_rules: usize,
    pub gamma: f64,
    #[serde(default)]
    pub gamma_mode: GammaMode,
    #[serde(default = "defaults::min_rule_len")]
    pub min_rule_len: usize,
    #[serde(default = "defaults::max_rule_len")]
    pub max_rule_len: usize,
    #[serde(default = "defaults::max_relations_per_node")]
    pub max_relations_per_node: usize,
    #[serde(default = "defaults::closure_interval")]
    pub closure_interval: usize,
    #[serde(default = "defaults::max_new_edges")]
    pub max_new_edges: usize,
    /// Held-out triples kept for evaluation.
    #[serde(default = "defaults::heldout")]
    pub heldout: usize,

    #[serde(default)]
    pub corpus_mode: CorpusMode,
    #[serde(default)]
    pub template_file: Option<PathBuf>,
    #[serde(default)]
    pub distractor_mode: DistractorMode,
    /// Evaluation questions `M`.
    #[serde(default = "defaults::eval_questions")]
    pub eval_questions: usize,

    #[serde(default = "defaults::yes")]
    pub symmetrized: bool,
    #[serde(default = "defaults::yes")]
    pub inverse_relations: bool,
    #[serde(default)]
    pub log_base: LogBase,

    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

mod defaults {
    pub fn min_rule_len() -> usize {
        2
    }
    pub fn max_rule_len() -> usize {
        4
    }
    pub fn max_relations_per_node() -> usize {
        super::DEFAULT_MAX_RELATIONS_PER_NODE
    }
    pub fn closure_interval() -> usize {
        super::DEFAULT_CLOSURE_INTERVAL
    }
    pub fn max_new_edges() -> usize {
        super::DEFAULT_MAX_NEW_EDGES
    }
    pub fn heldout() -> usize {
        super::DEFAULT_HELDOUT
    }
    pub fn eval_questions() -> usize {
        1000
    }
    pub fn yes() -> bool {
        true
    }
}

impl ExperimentConfig {
    /// Config with every optional field at its default.
    pub fn from_graph_config(g: &GraphConfig) -> Self {
        ExperimentConfig {
            seed: g.seed,
            n_triples: g.n_triples,
            n_entities: g.n_entities,
            n_relations: g.n_relations,
            n_rules: g.n_rules,
            gamma: g.gamma,
            gamma_mode: g.gamma_mode,
            min_rule_len: g.min_rule_len,
            max_rule_len: g.max_rule_len,
            max_relations_per_node: g.max_relations_per_node,
            closure_interval: g.closure_interval,
            max_new_edges: g.max_new_edges,
            heldout: g.heldout,
            corpus_mode: CorpusMode::default(),
            template_file: None,
            distractor_mode: DistractorMode::default(),
            eval_questions: defaults::eval_questions(),
            symmetrized: true,
            inverse_relations: true,
            log_base: LogBase::default(),
            output_dir: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            n_triples: self.n_triples,
            n_entities: self.n_entities,
            n_relations: self.n_relations,
            n_rules: self.n_rules,
            gamma: self.gamma,
            gamma_mode: self.gamma_mode,
            min_rule_len: self.min_rule_len,
            max_rule_len: self.max_rule_len,
            max_relations_per_node: self.max_relations_per_node,
            closure_interval: self.closure_interval,
            max_new_edges: self.max_new_edges,
            heldout: self.heldout,
            seed: self.seed,
        }
    }

    pub fn entropy_mode(&self) -> EntropyMode {
        EntropyMode {
            symmetrized: self.symmetrized,
            inverse_relations: self.inverse_relations,
            log_base: self.log_base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.graph_config().validate()?;
        if self.eval_questions == 0 {
            return Err(Error::Config("eval_questions must be positive".into()));
        }
        if self.eval_questions > self.heldout {
            return Err(Error::Config(format!(
                "eval_questions ({}) exceeds heldout ({})",
                self.eval_questions, self.heldout
            )));
        }
        if self.corpus_mode == CorpusMode::TemplateSentence && self.template_file.is_none() {
            return Err(Error::Config("template-sentence mode needs template_file".into()));
        }
        Ok(())
    }

    pub fn emit_settings(&self) -> EmitSettings {
        EmitSettings {
            seed: self.seed,
            corpus_mode: self.corpus_mode,
            template_file: self.template_file.clone(),
            distractor_mode: self.distractor_mode,
            eval_questions: self.eval_questions,
        }
    }

    /// SHA-256 of the canonical JSON form; independent of TOML formatting.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_rules: usize,
    pub n_triples: usize,
    pub n_atomic: usize,
    pub n_deducible: usize,
    pub n_train: usize,
    pub n_train_atomic: usize,
    pub n_train_deducible: usize,
    pub n_heldout: usize,
    pub requested_gamma: f64,
    pub achieved_gamma: f64,
    pub gamma_mode: GammaMode,
    pub closure_runs: usize,
    pub files: Vec<FileDigest>,
}

/// Collects artifact files and their digests.
struct ArtifactDir {
    dir: PathBuf,
    files: Vec<FileDigest>,
}

impl ArtifactDir {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(ArtifactDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileDigest {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("record serializes");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn write_jsonl<T: Serialize>(&mut self, name: &str, values: impl IntoIterator<Item = T>) -> Result<()> {
        let mut bytes = Vec::new();
        for v in values {
            serde_json::to_writer(&mut bytes, &v).expect("record serializes");
            bytes.push(b'\n');
        }
        self.write(name, &bytes)
    }

    fn write_tsv<'a>(&mut self, name: &str, g: &KnowledgeGraph, triples: impl IntoIterator<Item = &'a Triple>) -> Result<()> {
        let mut bytes = Vec::new();
        write_tsv(g, triples, &mut bytes).expect("in-memory write");
        self.write(name, &bytes)
    }
}

#[derive(Serialize)]
struct NodeTypesFile<'a> {
    types: &'a crate::rules::NodeTypeCatalog,
    entity_types: &'a [usize],
}

/// Generates rules, grows and closes the graph, subsamples the split and
/// writes every artifact to `out`.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let generated = generate(&cfg.graph_config()).map_err(|e| e.in_stage("generate"))?;
    let full = &generated.grown.graph;
    let split = &generated.split;

    let mut dir = ArtifactDir::create(out).map_err(|e| e.in_stage("write"))?;
    let write = |r: Result<()>| r.map_err(|e| e.in_stage("write"));
    write(dir.write("config.toml", cfg.to_toml().as_bytes()))?;
    write(dir.write_jsonl("rules.jsonl", generated.rules.rules()))?;
    write(dir.write_json(
        "node_types.json",
        &NodeTypesFile {
            types: &generated.catalog,
            entity_types: &generated.grown.entity_types,
        },
    ))?;
    write(dir.write_tsv("graph.tsv", full, full.triples()))?;
    write(dir.write_tsv("train.tsv", full, split.train.triples()))?;
    write(dir.write_tsv("heldout.tsv", full, &split.heldout))?;
    write(dir.write_jsonl("witnesses.jsonl", &split.witnesses))?;

    let (n_atomic, n_deducible, _) = full.label_counts();
    let (n_train_atomic, n_train_deducible, _) = split.train.label_counts();
    let manifest = Manifest {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        n_entities: full.n_entities(),
        n_relations: full.n_relations(),
        n_rules: generated.rules.len(),
        n_triples: full.len(),
        n_atomic,
        n_deducible,
        n_train: split.train.len(),
        n_train_atomic,
        n_train_deducible,
        n_heldout: split.heldout.len(),
        requested_gamma: cfg.gamma,
        achieved_gamma: split.achieved_gamma,
        gamma_mode: split.gamma_mode,
        closure_runs: generated.grown.closure_runs,
        files: dir.files.clone(),
    };
    write(dir.write_json("manifest.json", &manifest))?;
    Ok(manifest)
}

/// The three graphs of a split directory over one shared id space.
pub struct SplitDir {
    pub full: KnowledgeGraph,
    pub train: KnowledgeGraph,
    pub heldout: Vec<Triple>,
}

pub fn load_split(dir: &Path) -> Result<SplitDir> {
    let mut reader = TsvReader::new();
    let full = reader.read_path(&dir.join("graph.tsv"))?;
    let train = reader.read_path(&dir.join("train.tsv"))?;
    let heldout = reader.read_path(&dir.join("heldout.tsv"))?;
    let (full_graph, _) = reader.build(full.iter().chain(&train).chain(&heldout), Label::Unlabeled);
    let (train_graph, _) = reader.build(&train, Label::Unlabeled);
    Ok(SplitDir {
        full: full_graph,
        train: train_graph,
        heldout,
    })
}

/// What [`cmd_emit`] needs from a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitSettings {
    pub seed: u64,
    pub corpus_mode: CorpusMode,
    pub template_file: Option<PathBuf>,
    pub distractor_mode: DistractorMode,
    pub eval_questions: usize,
}

impl EmitSettings {
    pub fn new(seed: u64) -> Self {
        EmitSettings {
            seed,
            corpus_mode: CorpusMode::default(),
            template_file: None,
            distractor_mode: DistractorMode::default(),
            eval_questions: defaults::eval_questions(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitReport {
    pub corpus_lines: usize,
    pub corpus_mode: CorpusMode,
    pub questions: usize,
    pub skipped: Vec<SkippedQuestion>,
    pub vocab_size: usize,
    pub files: Vec<FileDigest>,
}

/// Writes corpus, eval set, vocabulary and id map for the split in `split`.
/// Every question is checked by the single-answer validator before writing.
pub fn cmd_emit(cfg: &EmitSettings, split: &Path, out: &Path) -> Result<EmitReport> {
    let sd = load_split(split).map_err(|e| e.in_stage("load"))?;
    let ids = assign_ids(&sd.full, cfg.seed).map_err(|e| e.in_stage("ids"))?;
    let templates = match (&cfg.corpus_mode, &cfg.template_file) {
        (CorpusMode::TemplateSentence, Some(path)) => {
            Some(TemplateTable::read_path(path).map_err(|e| e.in_stage("templates"))?)
        }
        (CorpusMode::TemplateSentence, None) => {
            return Err(Error::Config("template-sentence mode needs template_file".into()).in_stage("templates"))
        }
        _ => None,
    };
    let lines = corpus_lines(&sd.train, &ids, cfg.corpus_mode, templates.as_ref(), cfg.seed)
        .map_err(|e| e.in_stage("corpus"))?;
    let mut corpus = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in &lines {
        corpus.push_str(l);
        corpus.push('\n');
    }

    let set = build_eval_set(&sd.heldout, &sd.full, cfg.eval_questions, cfg.distractor_mode, cfg.seed)
        .map_err(|e| e.in_stage("eval"))?;
    validate_eval_set(&set.questions, &sd.full).map_err(|e| e.in_stage("eval"))?;
    if !set.skipped.is_empty() {
        log::warn!("{} held-out triples skipped while building questions", set.skipped.len());
    }
    if set.questions.len() < cfg.eval_questions {
        log::warn!(
            "only {} of {} requested questions could be built",
            set.questions.len(),
            cfg.eval_questions
        );
    }

    let vocab = build_vocab(&corpus);
    let mut dir = ArtifactDir::create(out).map_err(|e| e.in_stage("write"))?;
    let write = |r: Result<()>| r.map_err(|e| e.in_stage("write"));
    write(dir.write("corpus.txt", corpus.as_bytes()))?;
    let mut eval = Vec::new();
    write_eval_jsonl(&set.questions, &ids, &mut eval).map_err(|e| e.in_stage("write"))?;
    write(dir.write("eval.jsonl", &eval))?;
    let mut vocab_bytes = Vec::new();
    vocab.write(&mut vocab_bytes).expect("in-memory write");
    write(dir.write("vocab.txt", &vocab_bytes))?;
    write(dir.write_json("ids.json", &ids))?;

    let report = EmitReport {
        corpus_lines: lines.len(),
        corpus_mode: cfg.corpus_mode,
        questions: set.questions.len(),
        skipped: set.skipped,
        vocab_size: vocab.len(),
        files: dir.files.clone(),
    };
    write(dir.write_json("eval_report.json", &report))?;
    Ok(report)
}

/// Entropy report tagged with the graph it describes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    pub graph_id: String,
    pub graph_sha256: String,
    #[serde(flatten)]
    pub report: EntropyReport,
}

pub fn load_graph(path: &Path) -> Result<KnowledgeGraph> {
    let mut reader = TsvReader::new();
    let triples = reader.read_path(path)?;
    if triples.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    Ok(reader.build(&triples, Label::Unlabeled).0)
}

/// Default graph id: the name of the directory holding the file.
pub fn default_graph_id(path: &Path) -> String {
    path.canonicalize()
        .ok()
        .and_then(|p| p.parent().and_then(|d| d.file_name()).map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| path.display().to_string())
}

pub fn cmd_entropy(graph: &Path, mode: EntropyMode, graph_id: Option<&str>) -> Result<EntropyRecord> {
    let bytes = std::fs::read(graph).map_err(|e| Error::io(graph, e).in_stage("load"))?;
    let g = load_graph(graph).map_err(|e| e.in_stage("load"))?;
    let report = graph_search_entropy(&g, mode).map_err(|e| e.in_stage("entropy"))?;
    Ok(EntropyRecord {
        graph_id: graph_id.map_or_else(|| default_graph_id(graph), str::to_string),
        graph_sha256: sha256_hex(&bytes),
        report,
    })
}

pub fn cmd_stats(graph: &Path) -> Result<GraphStats> {
    let g = load_graph(graph).map_err(|e| e.in_stage("load"))?;
    Ok(graph_stats(&g))
}

/// Which source files become the held-out set of an imported split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeldoutFrom {
    /// Train on train + valid, hold out test.
    #[default]
    Test,
    /// Train on train only, hold out valid + test.
    ValidAndTest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportManifest {
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_triples: usize,
    pub n_train: usize,
    pub n_heldout: usize,
    pub duplicate_lines: usize,
    pub heldout_from: HeldoutFrom,
    pub sources: Vec<FileDigest>,
    pub files: Vec<FileDigest>,
}

/// Merges train/valid/test triple files into one graph and writes it as a
/// split directory that [`cmd_emit`] and [`cmd_entropy`] accept.
pub fn cmd_import(train: &Path, valid: &Path, test: &Path, heldout_from: HeldoutFrom, out: &Path) -> Result<ImportManifest> {
    let mut reader = TsvReader::new();
    let mut sources = Vec::new();
    let mut parts = Vec::new();
    for path in [train, valid, test] {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e).in_stage("import"))?;
        sources.push(FileDigest {
            name: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        parts.push(reader.read_path(path).map_err(|e| e.in_stage("import"))?);
    }
    let all: Vec<Triple> = parts.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(Error::EmptyInput(train.to_path_buf()).in_stage("import"));
    }
    let (full, duplicate_lines) = reader.build(&all, Label::Unlabeled);
    let (train_part, heldout): (Vec<Triple>, Vec<Triple>) = match heldout_from {
        HeldoutFrom::Test => (parts[0].iter().chain(&parts[1]).copied().collect(), parts[2].clone()),
        HeldoutFrom::ValidAndTest => (parts[0].clone(), parts[1].iter().chain(&parts[2]).copied().collect()),
    };
    let (train_g, _) = reader.build(&train_part, Label::Unlabeled);
    let mut seen = std::collections::HashSet::new();
    let heldout: Vec<Triple> = heldout
        .into_iter()
        .filter(|t| !train_g.contains(t) && seen.insert(*t))
        .collect();

    let mut dir = ArtifactDir::create(out).map_err(|e| e.in_stage("write"))?;
    let write = |r: Result<()>| r.map_err(|e| e.in_stage("write"));
    write(dir.write_tsv("graph.tsv", &full, full.triples()))?;
    write(dir.write_tsv("train.tsv", &full, train_g.triples()))?;
    write(dir.write_tsv("heldout.tsv", &full, &heldout))?;
    let manifest = ImportManifest {
        n_entities: full.n_entities(),
        n_relations: full.n_relations(),
        n_triples: full.len(),
        n_train: train_g.len(),
        n_heldout: heldout.len(),
        duplicate_lines,
        heldout_from,
        sources,
        files: dir.files.clone(),
    };
    write(dir.write_json("manifest.json", &manifest))?;
    Ok(manifest)
}

pub fn read_entropy_records(path: &Path) -> Result<Vec<EntropyRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let trimmed = text.trim_start();
    let schema = |e: serde_json::Error| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    // a single pretty-printed report or one record per line
    if trimmed.starts_with('{') && serde_json::from_str::<serde_json::Value>(trimmed).is_ok() {
        return Ok(vec![serde_json::from_str(trimmed).map_err(schema)?]);
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(schema))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossCurvePoint {
    pub graph_id: String,
    pub entropy_bits: f64,
    pub train_steps: u64,
    pub model_params: u64,
    pub eval_loss: f64,
    pub eval_acc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOutput {
    pub fit: ScalingFit,
    pub points: Vec<OptimalPoint>,
    pub curves: Vec<LossCurvePoint>,
}

/// Locates each graph's optimum (at its largest step count, unless `steps`
/// is given) and fits the law. Graphs without an entropy record are an error.
pub fn fit_results(results: &[RunResult], entropies: &[EntropyRecord], steps: Option<u64>) -> Result<FitOutput> {
    if results.is_empty() {
        return Err(Error::Fit("no run results".into()));
    }
    let entropy: BTreeMap<&str, f64> = entropies
        .iter()
        .map(|r| (r.graph_id.as_str(), r.report.entropy_bits))
        .collect();
    let mut by_graph: BTreeMap<&str, Vec<&RunResult>> = BTreeMap::new();
    for r in results {
        by_graph.entry(r.graph_id.as_str()).or_default().push(r);
    }
    let mut points = Vec::new();
    let mut curves = Vec::new();
    for (graph_id, runs) in by_graph {
        let h = *entropy
            .get(graph_id)
            .ok_or_else(|| Error::Fit(format!("no entropy record for graph `{graph_id}`")))?;
        let at = steps.unwrap_or_else(|| runs.iter().map(|r| r.train_steps).max().unwrap());
        let mut sweep: Vec<RunResult> = runs.iter().filter(|r| r.train_steps == at).map(|r| (*r).clone()).collect();
        sweep.sort_by_key(|r| r.model_params);
        for r in &sweep {
            curves.push(LossCurvePoint {
                graph_id: graph_id.to_string(),
                entropy_bits: h,
                train_steps: r.train_steps,
                model_params: r.model_params,
                eval_loss: r.eval_loss,
                eval_acc: r.eval_acc,
            });
        }
        points.push(locate_optimal(&sweep, h)?);
    }
    let fit = fit_scaling_law(&points)?;
    Ok(FitOutput { fit, points, curves })
}

/// Reads run results and entropy records, fits, and writes `fit.json`,
/// `optimal_points.jsonl` and `loss_curves.jsonl` into `out`.
pub fn cmd_fit(results: &[PathBuf], entropies: &[PathBuf], steps: Option<u64>, out: &Path) -> Result<FitOutput> {
    let mut runs = Vec::new();
    for p in results {
        runs.extend(crate::scaling::read_run_results(p).map_err(|e| e.in_stage("load"))?);
    }
    let mut records = Vec::new();
    for p in entropies {
        records.extend(read_entropy_records(p).map_err(|e| e.in_stage("load"))?);
    }
    let output = fit_results(&runs, &records, steps).map_err(|e| e.in_stage("fit"))?;
    let mut dir = ArtifactDir::create(out).map_err(|e| e.in_stage("write"))?;
    let write = |r: Result<()>| r.map_err(|e| e.in_stage("write"));
    write(dir.write_json("fit.json", &output.fit))?;
    write(dir.write_jsonl("optimal_points.jsonl", &output.points))?;
    write(dir.write_jsonl("loss_curves.jsonl", &output.curves))?;
    Ok(output)
}

pub fn cmd_predict(fit: &Path, entropy: &Path) -> Result<Vec<(String, Prediction)>> {
    let text = std::fs::read_to_string(fit).map_err(|e| Error::io(fit, e).in_stage("load"))?;
    let fit_record: ScalingFit = serde_json::from_str(&text)
        .map_err(|e| {
            Error::Schema {
                path: fit.to_path_buf(),
                message: e.to_string(),
            }
        })
        .map_err(|e| e.in_stage("load"))?;
    let records = read_entropy_records(entropy).map_err(|e| e.in_stage("load"))?;
    Ok(records
        .into_iter()
        .map(|r| (r.graph_id, predict_optimal_size(&fit_record, r.report.entropy_bits)))
        .collect())
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
