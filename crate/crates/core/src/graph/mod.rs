//! Relation-typed directed multigraph of `(head, relation, tail)` triples.
//!
//! Entities and relations are dense 0-based indices. External names, when the
//! graph came from a file, live in a side table so synthetic graphs (ids only)
//! and imported graphs share one model. Duplicate triples are rejected: a
//! knowledge graph is a set.

mod io;
pub(crate) mod stats;

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use io::{export_tsv, import_tsv, import_tsv_files, write_tsv, TsvImport, TsvReader};
pub use stats::{ccdf, graph_stats, GraphStats};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: u32, relation: u32, tail: u32) -> Self {
        Triple {
            head: EntityId(head),
            relation: RelationId(relation),
            tail: EntityId(tail),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.head, self.relation, self.tail)
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Atomic,
    Deducible,
    #[default]
    Unlabeled,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// String interner mapping external names to dense indices in
/// first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NameTable {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl NameTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Clone, Debug, Default)]
pub struct KnowledgeGraph {
    triples: Vec<Triple>,
    labels: Vec<Label>,
    position: HashMap<Triple, usize>,
    forward: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    reverse: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    // [relation][entity]
    out_degree: Vec<Vec<u32>>,
    in_degree: Vec<Vec<u32>>,
    n_entities: usize,
    entity_names: Option<NameTable>,
    relation_names: Option<NameTable>,
}

impl KnowledgeGraph {
    pub fn new(n_entities: usize, n_relations: usize) -> Self {
        KnowledgeGraph {
            out_degree: vec![vec![0; n_entities]; n_relations],
            in_degree: vec![vec![0; n_entities]; n_relations],
            n_entities,
            ..Default::default()
        }
    }

    /// Builds a graph from labeled triples, silently skipping duplicates.
    pub fn from_triples<I>(n_entities: usize, n_relations: usize, triples: I) -> Self
    where
        I: IntoIterator<Item = (Triple, Label)>,
    {
        let mut g = Self::new(n_entities, n_relations);
        for (t, label) in triples {
            g.insert(t, label);
        }
        g
    }

    pub fn with_names(mut self, entities: NameTable, relations: NameTable) -> Self {
        assert!(entities.len() <= self.n_entities && relations.len() <= self.n_relations());
        self.entity_names = Some(entities);
        self.relation_names = Some(relations);
        self
    }

    pub fn n_entities(&self) -> usize {
        self.n_entities
    }

    pub fn n_relations(&self) -> usize {
        self.out_degree.len()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn add_entity(&mut self) -> EntityId {
        let id = EntityId(self.n_entities as u32);
        self.n_entities += 1;
        for row in self.out_degree.iter_mut().chain(self.in_degree.iter_mut()) {
            row.push(0);
        }
        id
    }

    /// Inserts a triple; returns `false` (and leaves the graph untouched) if
    /// it is already present.
    pub fn insert(&mut self, t: Triple, label: Label) -> bool {
        assert!(
            t.head.index() < self.n_entities
                && t.tail.index() < self.n_entities
                && t.relation.index() < self.n_relations(),
            "triple {t} out of range for graph with {} entities / {} relations",
            self.n_entities,
            self.n_relations()
        );
        if self.position.contains_key(&t) {
            return false;
        }
        self.position.insert(t, self.triples.len());
        self.triples.push(t);
        self.labels.push(label);
        insert_sorted(self.forward.entry((t.head, t.relation)).or_default(), t.tail);
        insert_sorted(self.reverse.entry((t.tail, t.relation)).or_default(), t.head);
        self.out_degree[t.relation.index()][t.head.index()] += 1;
        self.in_degree[t.relation.index()][t.tail.index()] += 1;
        true
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.position.contains_key(t)
    }

    pub fn label(&self, t: &Triple) -> Option<Label> {
        self.position.get(t).map(|&i| self.labels[i])
    }

    pub fn set_label(&mut self, t: &Triple, label: Label) -> bool {
        match self.position.get(t) {
            Some(&i) => {
                self.labels[i] = label;
                true
            }
            None => false,
        }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn labeled(&self) -> impl Iterator<Item = (Triple, Label)> + '_ {
        self.triples.iter().copied().zip(self.labels.iter().copied())
    }

    /// Returns `(atomic, deducible, unlabeled)` counts.
    pub fn label_counts(&self) -> (usize, usize, usize) {
        self.labels.iter().fold((0, 0, 0), |(a, d, u), l| match l {
            Label::Atomic => (a + 1, d, u),
            Label::Deducible => (a, d + 1, u),
            Label::Unlabeled => (a, d, u + 1),
        })
    }

    /// Tails reachable from `head` via `relation`, in ascending id order.
    pub fn tails(&self, head: EntityId, relation: RelationId) -> &[EntityId] {
        self.forward
            .get(&(head, relation))
            .map_or(&[][..], Vec::as_slice)
    }

    /// Heads pointing at `tail` via `relation`, in ascending id order.
    pub fn heads(&self, tail: EntityId, relation: RelationId) -> &[EntityId] {
        self.reverse
            .get(&(tail, relation))
            .map_or(&[][..], Vec::as_slice)
    }

    pub fn relation_degree(&self, relation: RelationId, direction: Direction) -> &[u32] {
        match direction {
            Direction::Outgoing => &self.out_degree[relation.index()],
            Direction::Incoming => &self.in_degree[relation.index()],
        }
    }

    pub fn degree(&self, entity: EntityId, relation: RelationId, direction: Direction) -> u32 {
        self.relation_degree(relation, direction)[entity.index()]
    }

    /// In-degree plus out-degree over all relations.
    pub fn total_degree(&self, entity: EntityId) -> u64 {
        let e = entity.index();
        self.out_degree
            .iter()
            .zip(&self.in_degree)
            .map(|(o, i)| u64::from(o[e]) + u64::from(i[e]))
            .sum()
    }

    pub fn entity_names(&self) -> Option<&NameTable> {
        self.entity_names.as_ref()
    }

    pub fn relation_names(&self) -> Option<&NameTable> {
        self.relation_names.as_ref()
    }

    pub fn entity_name(&self, e: EntityId) -> Cow<'_, str> {
        match self.entity_names.as_ref().and_then(|n| n.name(e.0)) {
            Some(name) => Cow::Borrowed(name),
            None => Cow::Owned(e.to_string()),
        }
    }

    pub fn relation_name(&self, r: RelationId) -> Cow<'_, str> {
        match self.relation_names.as_ref().and_then(|n| n.name(r.0)) {
            Some(name) => Cow::Borrowed(name),
            None => Cow::Owned(r.to_string()),
        }
    }

    /// Same entity/relation universe and names, keeping only the triples
    /// accepted by `keep`.
    pub fn filtered<F>(&self, mut keep: F) -> KnowledgeGraph
    where
        F: FnMut(&Triple, Label) -> bool,
    {
        let mut g = KnowledgeGraph::new(self.n_entities, self.n_relations());
        g.entity_names = self.entity_names.clone();
        g.relation_names = self.relation_names.clone();
        for (t, l) in self.labeled() {
            if keep(&t, l) {
                g.insert(t, l);
            }
        }
        g
    }

    /// Empty graph sharing this graph's universe and names.
    pub fn empty_like(&self) -> KnowledgeGraph {
        self.filtered(|_, _| false)
    }

    /// Recomputes every index from the triple list and reports the first
    /// disagreement.
    pub fn check_consistency(&self) -> Result<(), String> {
        let mut out = vec![vec![0u32; self.n_entities]; self.n_relations()];
        let mut inc = vec![vec![0u32; self.n_entities]; self.n_relations()];
        for (i, t) in self.triples.iter().enumerate() {
            if self.position.get(t) != Some(&i) {
                return Err(format!("position index broken for {t}"));
            }
            if self.tails(t.head, t.relation).binary_search(&t.tail).is_err() {
                return Err(format!("forward index misses {t}"));
            }
            if self.heads(t.tail, t.relation).binary_search(&t.head).is_err() {
                return Err(format!("reverse index misses {t}"));
            }
            out[t.relation.index()][t.head.index()] += 1;
            inc[t.relation.index()][t.tail.index()] += 1;
        }
        let fwd: usize = self.forward.values().map(Vec::len).sum();
        let rev: usize = self.reverse.values().map(Vec::len).sum();
        if fwd != self.len() || rev != self.len() || self.position.len() != self.len() {
            return Err(format!(
                "index sizes {fwd}/{rev}/{} disagree with {} triples",
                self.position.len(),
                self.len()
            ));
        }
        if out != self.out_degree || inc != self.in_degree {
            return Err("degree tallies disagree with recount".into());
        }
        Ok(())
    }
}

fn insert_sorted(v: &mut Vec<EntityId>, e: EntityId) {
    if let Err(pos) = v.binary_search(&e) {
        v.insert(pos, e);
    }
}
