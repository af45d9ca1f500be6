//! Pretraining corpora and multiple-choice evaluation sets.
//!
//! Entities and relations are renamed to random fixed-width identifiers
//! (`e` + 5 and `r` + 3 base-36 characters) so that a character-level model
//! sees no lexical hints. The training corpus holds one train triple per
//! line, either as `head relation tail` identifiers or as a sentence built
//! from a per-relation template. Each evaluation question asks for the tail
//! of a held-out triple among ten options, exactly one of which completes a
//! triple of the full closed graph.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::graphgen::rng_stream;

pub const N_OPTIONS: usize = 10;
pub const ENTITY_ID_WIDTH: u32 = 5;
pub const RELATION_ID_WIDTH: u32 = 3;
pub const BOUNDARY_SYMBOLS: [&str; 3] = ["<pad>", "<bos>", "<eos>"];

const ALPHABET: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";
const STREAM_IDS: u64 = 4;
const STREAM_CORPUS: u64 = 5;
// question k draws from stream STREAM_EVAL_BASE + k
const STREAM_EVAL_BASE: u64 = 1 << 32;
const DISTRACTOR_DRAWS: usize = 1000;

/// Random identifier for every entity and relation, indexed by id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMap {
    pub scheme: String,
    pub seed: u64,
    pub entities: Vec<String>,
    pub relations: Vec<String>,
}

impl IdMap {
    pub fn entity(&self, e: EntityId) -> &str {
        &self.entities[e.index()]
    }

    pub fn relation(&self, r: RelationId) -> &str {
        &self.relations[r.index()]
    }

    /// `<head-id> <rel-id> <tail-id>`
    pub fn triple_line(&self, t: &Triple) -> String {
        format!(
            "{} {} {}",
            self.entity(t.head),
            self.relation(t.relation),
            self.entity(t.tail)
        )
    }
}

pub fn assign_ids(g: &KnowledgeGraph, seed: u64) -> Result<IdMap> {
    let mut rng = rng_stream(seed, STREAM_IDS);
    let entities = sample_ids(&mut rng, 'e', ENTITY_ID_WIDTH, g.n_entities(), "entity")?;
    let relations = sample_ids(&mut rng, 'r', RELATION_ID_WIDTH, g.n_relations(), "relation")?;
    Ok(IdMap {
        scheme: format!("e+{ENTITY_ID_WIDTH}/r+{RELATION_ID_WIDTH} base36"),
        seed,
        entities,
        relations,
    })
}

fn sample_ids<R: Rng>(
    rng: &mut R,
    prefix: char,
    width: u32,
    n: usize,
    kind: &'static str,
) -> Result<Vec<String>> {
    let space = 36u64.pow(width);
    if n as u64 > space {
        return Err(Error::IdSpaceExhausted {
            kind,
            needed: n,
            available: space,
        });
    }
    let codes = rand::seq::index::sample(rng, space as usize, n);
    Ok(codes
        .iter()
        .map(|mut c| {
            let mut digits = vec![b'0'; width as usize];
            for d in digits.iter_mut().rev() {
                *d = ALPHABET[c % 36];
                c /= 36;
            }
            let mut s = String::with_capacity(width as usize + 1);
            s.push(prefix);
            s.push_str(std::str::from_utf8(&digits).unwrap());
            s
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusMode {
    #[default]
    TripleId,
    TemplateSentence,
}

/// Relation name -> sentence template with whole-word `X` (head) and `Y`
/// (tail) placeholders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TemplateTable {
    templates: HashMap<String, String>,
}

impl TemplateTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, relation: impl Into<String>, template: impl Into<String>) -> Result<()> {
        let relation = relation.into();
        let template = template.into();
        let words: Vec<&str> = words(&template).collect();
        if !words.contains(&"X") || !words.contains(&"Y") {
            return Err(Error::Config(format!(
                "template for `{relation}` must contain the words X and Y: {template:?}"
            )));
        }
        self.templates.insert(relation, template);
        Ok(())
    }

    pub fn get(&self, relation: &str) -> Option<&str> {
        self.templates.get(relation).map(String::as_str)
    }

    /// Reads `relation<TAB>template` lines.
    pub fn read_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table = TemplateTable::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let parse = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (rel, template) = line
                .split_once('\t')
                .ok_or_else(|| parse("expected `relation<TAB>template`".into()))?;
            table
                .insert(rel, template)
                .map_err(|e| parse(e.to_string()))?;
        }
        Ok(table)
    }

    /// Replaces whole-word `X` and `Y`; `X` inside `XY` or `taX` is kept.
    pub fn render(&self, relation: &str, head: &str, tail: &str) -> Result<String> {
        let template = self
            .get(relation)
            .ok_or_else(|| Error::MissingTemplate(relation.to_string()))?;
        let mut out = String::with_capacity(template.len() + head.len() + tail.len());
        let mut word = String::new();
        let flush = |word: &mut String, out: &mut String| {
            match word.as_str() {
                "X" => out.push_str(head),
                "Y" => out.push_str(tail),
                w => out.push_str(w),
            }
            word.clear();
        };
        for c in template.chars() {
            if c.is_alphanumeric() || c == '_' {
                word.push(c);
            } else {
                flush(&mut word, &mut out);
                out.push(c);
            }
        }
        flush(&mut word, &mut out);
        Ok(out)
    }
}

fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
}

/// Corpus lines for every triple of `train`, shuffled by `seed`.
pub fn corpus_lines(
    train: &KnowledgeGraph,
    ids: &IdMap,
    mode: CorpusMode,
    templates: Option<&TemplateTable>,
    seed: u64,
) -> Result<Vec<String>> {
    let mut lines = match mode {
        CorpusMode::TripleId => train.triples().iter().map(|t| ids.triple_line(t)).collect(),
        CorpusMode::TemplateSentence => {
            let templates = templates.ok_or_else(|| {
                Error::Config("template-sentence mode needs a template table".into())
            })?;
            train
                .triples()
                .iter()
                .map(|t| {
                    templates.render(
                        &train.relation_name(t.relation),
                        ids.entity(t.head),
                        ids.entity(t.tail),
                    )
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    lines.shuffle(&mut rng_stream(seed, STREAM_CORPUS));
    Ok(lines)
}

/// Writes the corpus, one example per line; returns the line count.
pub fn emit_training_corpus<W: Write>(
    train: &KnowledgeGraph,
    ids: &IdMap,
    mode: CorpusMode,
    templates: Option<&TemplateTable>,
    seed: u64,
    mut out: W,
) -> Result<usize> {
    let lines = corpus_lines(train, ids, mode, templates, seed)?;
    let io = |e| Error::io("<corpus>", e);
    for line in &lines {
        out.write_all(line.as_bytes()).map_err(io)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)?;
    Ok(lines.len())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalQuestion {
    pub head: EntityId,
    pub relation: RelationId,
    pub options: Vec<EntityId>,
    pub answer_index: usize,
}

impl EvalQuestion {
    pub fn answer(&self) -> EntityId {
        self.options[self.answer_index]
    }
}

/// Where distractors are drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistractorMode {
    #[default]
    AllEntities,
    /// Only entities that occur as a tail of the question's relation, which
    /// makes the wrong options harder to rule out.
    RelationTails,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedQuestion {
    pub triple: Triple,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalSet {
    pub questions: Vec<EvalQuestion>,
    pub skipped: Vec<SkippedQuestion>,
}

/// Builds up to `m` questions from the held-out triples in order. A triple
/// without 9 valid distractors is skipped and reported; the next one takes
/// its place.
pub fn build_eval_set(
    heldout: &[Triple],
    full_closure: &KnowledgeGraph,
    m: usize,
    mode: DistractorMode,
    seed: u64,
) -> Result<EvalSet> {
    if heldout.len() < m {
        return Err(Error::Config(format!(
            "{} held-out triples cannot supply {m} questions",
            heldout.len()
        )));
    }
    let relation_tails: Vec<Vec<EntityId>> = match mode {
        DistractorMode::AllEntities => Vec::new(),
        DistractorMode::RelationTails => {
            let mut tails = vec![HashSet::new(); full_closure.n_relations()];
            for t in full_closure.triples() {
                tails[t.relation.index()].insert(t.tail);
            }
            tails
                .into_iter()
                .map(|s| {
                    let mut v: Vec<EntityId> = s.into_iter().collect();
                    v.sort_unstable();
                    v
                })
                .collect()
        }
    };

    let mut set = EvalSet::default();
    for (k, t) in heldout.iter().enumerate() {
        if set.questions.len() == m {
            break;
        }
        if !full_closure.contains(t) {
            set.skipped.push(SkippedQuestion {
                triple: *t,
                reason: "triple is not in the full closure".into(),
            });
            continue;
        }
        let mut rng = rng_stream(seed, STREAM_EVAL_BASE + k as u64);
        let pool = match mode {
            DistractorMode::AllEntities => None,
            DistractorMode::RelationTails => Some(relation_tails[t.relation.index()].as_slice()),
        };
        match sample_distractors(t, full_closure, pool, &mut rng) {
            Some(mut options) => {
                let answer_index = rng.random_range(0..N_OPTIONS);
                options.insert(answer_index, t.tail);
                set.questions.push(EvalQuestion {
                    head: t.head,
                    relation: t.relation,
                    options,
                    answer_index,
                });
            }
            None => {
                log::warn!("skipping question for {t:?}: fewer than {} valid distractors", N_OPTIONS - 1);
                set.skipped.push(SkippedQuestion {
                    triple: *t,
                    reason: format!("fewer than {} valid distractors", N_OPTIONS - 1),
                });
            }
        }
    }
    Ok(set)
}

/// Nine distinct entities `d` with `(head, relation, d)` outside the
/// closure, uniformly without replacement. Rejection sampling first; an
/// exact scan when rejection keeps failing.
fn sample_distractors<R: Rng>(
    t: &Triple,
    full: &KnowledgeGraph,
    pool: Option<&[EntityId]>,
    rng: &mut R,
) -> Option<Vec<EntityId>> {
    let need = N_OPTIONS - 1;
    let valid = |d: EntityId| !full.contains(&Triple { tail: d, ..*t });
    let draw = |rng: &mut R| match pool {
        Some(p) => *p.choose(rng).unwrap(),
        None => EntityId(rng.random_range(0..full.n_entities() as u32)),
    };
    if pool.is_some_and(|p| p.is_empty()) || full.n_entities() == 0 {
        return None;
    }

    let mut picked = Vec::with_capacity(need);
    for _ in 0..DISTRACTOR_DRAWS {
        let d = draw(rng);
        if valid(d) && !picked.contains(&d) {
            picked.push(d);
            if picked.len() == need {
                return Some(picked);
            }
        }
    }

    let candidates: Vec<EntityId> = match pool {
        Some(p) => p.iter().copied().filter(|&d| valid(d)).collect(),
        None => (0..full.n_entities() as u32)
            .map(EntityId)
            .filter(|&d| valid(d))
            .collect(),
    };
    if candidates.len() < need {
        return None;
    }
    Some(candidates.choose_multiple(rng, need).copied().collect())
}

/// Ten distinct options, exactly one of which completes a triple of the
/// closure, sitting at `answer_index`.
pub fn validate_question(q: &EvalQuestion, full_closure: &KnowledgeGraph) -> std::result::Result<(), String> {
    if q.options.len() != N_OPTIONS {
        return Err(format!("{} options instead of {N_OPTIONS}", q.options.len()));
    }
    if q.answer_index >= N_OPTIONS {
        return Err(format!("answer index {} out of range", q.answer_index));
    }
    let distinct: HashSet<_> = q.options.iter().collect();
    if distinct.len() != N_OPTIONS {
        return Err("options are not distinct".into());
    }
    let hits: Vec<usize> = q
        .options
        .iter()
        .enumerate()
        .filter(|(_, &o)| full_closure.contains(&Triple::new(q.head.0, q.relation.0, o.0)))
        .map(|(i, _)| i)
        .collect();
    match hits.as_slice() {
        [i] if *i == q.answer_index => Ok(()),
        [i] => Err(format!("correct option at {i}, answer index says {}", q.answer_index)),
        _ => Err(format!("{} options are correct", hits.len())),
    }
}

pub fn validate_eval_set(questions: &[EvalQuestion], full_closure: &KnowledgeGraph) -> Result<()> {
    for (index, q) in questions.iter().enumerate() {
        validate_question(q, full_closure).map_err(|reason| Error::InvalidQuestion { index, reason })?;
    }
    Ok(())
}

/// Eval file record; the trainer reads exactly these fields.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRecord {
    pub head_id: String,
    pub relation_id: String,
    pub options: Vec<String>,
    pub answer_index: usize,
}

impl EvalRecord {
    pub fn new(q: &EvalQuestion, ids: &IdMap) -> Self {
        EvalRecord {
            head_id: ids.entity(q.head).to_string(),
            relation_id: ids.relation(q.relation).to_string(),
            options: q.options.iter().map(|&o| ids.entity(o).to_string()).collect(),
            answer_index: q.answer_index,
        }
    }
}

pub fn write_eval_jsonl<W: Write>(questions: &[EvalQuestion], ids: &IdMap, mut out: W) -> Result<()> {
    let io = |e| Error::io("<eval>", e);
    for q in questions {
        serde_json::to_writer(&mut out, &EvalRecord::new(q, ids)).map_err(std::io::Error::from).map_err(io)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_eval_jsonl(path: &Path) -> Result<Vec<EvalRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let r: EvalRecord = serde_json::from_str(l).map_err(|e| Error::Schema {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })?;
            if r.options.len() != N_OPTIONS || r.answer_index >= N_OPTIONS {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    message: format!("line {}: need {N_OPTIONS} options and an index below it", i + 1),
                });
            }
            Ok(r)
        })
        .collect()
}

/// Character vocabulary: boundary symbols, then the corpus's distinct
/// characters in code point order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    pub symbols: Vec<String>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    /// One JSON string literal per line, so space and newline stay visible;
    /// a symbol's index is its line number.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in &self.symbols {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let symbols = text
            .lines()
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str::<String>(l).map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Vocab { symbols })
    }
}

pub fn build_vocab(corpus: &str) -> Vocab {
    let mut chars: Vec<char> = corpus.chars().collect::<HashSet<_>>().into_iter().collect();
    chars.sort_unstable();
    let symbols = BOUNDARY_SYMBOLS
        .iter()
        .map(|s| s.to_string())
        .chain(chars.into_iter().map(String::from))
        .collect();
    Vocab { symbols }
}
