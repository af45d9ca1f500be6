//! Forward chaining of conjunctive rules over a knowledge graph.
//!
//! Path search walks a rule body layer by layer from a start entity. Each
//! layer keeps, for every entity it reaches, the lexicographically smallest
//! path prefix that reaches it, so reachability costs one pass over the
//! touched edges instead of enumerating every path, and witnesses come out
//! canonical (smallest entity sequence).
//!
//! Closure is semi-naive: after the first round only start entities that can
//! reach a triple derived in the previous round are searched again.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{Direction, EntityId, KnowledgeGraph, Label, RelationId, Triple};
use crate::rules::{Rule, RuleSet};

/// A body path certifying a rule conclusion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub rule: Rule,
    pub path: Vec<EntityId>,
}

impl Witness {
    pub fn conclusion(&self) -> Triple {
        Triple {
            head: self.path[0],
            relation: self.rule.head,
            tail: *self.path.last().unwrap(),
        }
    }

    pub fn body_triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.rule.body.iter().enumerate().map(|(i, &r)| Triple {
            head: self.path[i],
            relation: r,
            tail: self.path[i + 1],
        })
    }

    /// Replays the body triples against `g`.
    pub fn verify(&self, g: &KnowledgeGraph) -> bool {
        self.path.len() == self.rule.body.len() + 1 && self.body_triples().all(|t| g.contains(&t))
    }
}

/// Reusable per-layer visited marks, indexed by entity.
struct Scratch {
    stamp: Vec<u32>,
    epoch: u32,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            stamp: vec![0; n],
            epoch: 0,
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }

    /// Marks `e`; returns `true` if it was not yet marked this epoch.
    fn visit(&mut self, e: EntityId) -> bool {
        let slot = &mut self.stamp[e.index()];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}

/// Layers of `(entity, index of parent in previous layer)`, each layer in
/// lexicographic order of its best path.
struct Layers(Vec<Vec<(EntityId, usize)>>);

impl Layers {
    fn search(g: &KnowledgeGraph, start: EntityId, body: &[RelationId], scratch: &mut Scratch) -> Self {
        let mut layers = Vec::with_capacity(body.len() + 1);
        layers.push(vec![(start, usize::MAX)]);
        for &r in body {
            scratch.next_epoch();
            let prev: &Vec<(EntityId, usize)> = layers.last().unwrap();
            let mut next = Vec::new();
            for (pi, &(u, _)) in prev.iter().enumerate() {
                for &v in g.tails(u, r) {
                    if scratch.visit(v) {
                        next.push((v, pi));
                    }
                }
            }
            let empty = next.is_empty();
            layers.push(next);
            if empty {
                break;
            }
        }
        Layers(layers)
    }

    fn complete(&self, body_len: usize) -> bool {
        self.0.len() == body_len + 1
    }

    fn ends(&self) -> impl Iterator<Item = (usize, EntityId)> + '_ {
        self.0.last().into_iter().flatten().enumerate().map(|(i, &(e, _))| (i, e))
    }

    fn path(&self, mut index: usize) -> Vec<EntityId> {
        let mut path = vec![EntityId(0); self.0.len()];
        for depth in (0..self.0.len()).rev() {
            let (e, parent) = self.0[depth][index];
            path[depth] = e;
            index = parent;
        }
        path
    }
}

/// Every conclusion of `rule` on `g` that `g` does not already contain,
/// each with its lexicographically smallest witness, sorted by triple.
pub fn apply_rule_once(g: &KnowledgeGraph, rule: &Rule) -> Vec<(Triple, Witness)> {
    let mut scratch = Scratch::new(g.n_entities());
    let mut out = Vec::new();
    for e0 in starts_with_out_edge(g, rule.body[0]) {
        let layers = Layers::search(g, e0, &rule.body, &mut scratch);
        if !layers.complete(rule.body.len()) {
            continue;
        }
        for (i, end) in layers.ends() {
            let t = Triple {
                head: e0,
                relation: rule.head,
                tail: end,
            };
            if !g.contains(&t) {
                out.push((
                    t,
                    Witness {
                        rule: rule.clone(),
                        path: layers.path(i),
                    },
                ));
            }
        }
    }
    out.sort_by_key(|(t, _)| *t);
    out
}

fn starts_with_out_edge(g: &KnowledgeGraph, r: RelationId) -> impl Iterator<Item = EntityId> + '_ {
    g.relation_degree(r, Direction::Outgoing)
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0)
        .map(|(e, _)| EntityId(e as u32))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureReport {
    /// Rounds that added at least one triple.
    pub rounds: usize,
    pub added: usize,
}

/// Fixpoint of all rules over `g`; added triples are labeled deducible.
pub fn closure(g: &KnowledgeGraph, rs: &RuleSet) -> KnowledgeGraph {
    closure_with_report(g, rs).0
}

pub fn closure_with_report(g: &KnowledgeGraph, rs: &RuleSet) -> (KnowledgeGraph, ClosureReport) {
    let mut out = g.clone();
    let report = extend_closure(&mut out, rs, None);
    (out, report)
}

/// Runs closure in place. `delta` lists triples added since `g` was last
/// closed; `None` means "treat every triple as new".
pub(crate) fn extend_closure(
    g: &mut KnowledgeGraph,
    rs: &RuleSet,
    delta: Option<Vec<Triple>>,
) -> ClosureReport {
    let mut report = ClosureReport::default();
    if rs.is_empty() {
        return report;
    }
    let mut scratch = Scratch::new(g.n_entities());
    let mut delta = delta;
    loop {
        let mut found: BTreeSet<Triple> = BTreeSet::new();
        for rule in rs.rules() {
            let starts: Vec<EntityId> = match &delta {
                None => starts_with_out_edge(g, rule.body[0]).collect(),
                Some(d) => affected_starts(g, rule, d, &mut scratch),
            };
            for e0 in starts {
                let layers = Layers::search(g, e0, &rule.body, &mut scratch);
                if !layers.complete(rule.body.len()) {
                    continue;
                }
                for (_, end) in layers.ends() {
                    let t = Triple {
                        head: e0,
                        relation: rule.head,
                        tail: end,
                    };
                    if !g.contains(&t) {
                        found.insert(t);
                    }
                }
            }
        }
        if found.is_empty() {
            break;
        }
        report.rounds += 1;
        report.added += found.len();
        for t in &found {
            g.insert(*t, Label::Deducible);
        }
        delta = Some(found.into_iter().collect());
    }
    report
}

/// Start entities whose `rule` paths can pass through a triple in `delta`.
fn affected_starts(g: &KnowledgeGraph, rule: &Rule, delta: &[Triple], scratch: &mut Scratch) -> Vec<EntityId> {
    let mut starts = BTreeSet::new();
    for (j, &r) in rule.body.iter().enumerate() {
        let mut frontier: Vec<EntityId> = delta
            .iter()
            .filter(|t| t.relation == r)
            .map(|t| t.head)
            .collect();
        frontier.sort_unstable();
        frontier.dedup();
        for &back in rule.body[..j].iter().rev() {
            scratch.next_epoch();
            let mut prev = Vec::new();
            for &v in &frontier {
                for &u in g.heads(v, back) {
                    if scratch.visit(u) {
                        prev.push(u);
                    }
                }
            }
            frontier = prev;
            if frontier.is_empty() {
                break;
            }
        }
        starts.extend(frontier);
    }
    starts.into_iter().collect()
}

/// Certifies triples against the closure of a fixed training graph.
pub struct Deducer<'a> {
    closure: KnowledgeGraph,
    rules: &'a RuleSet,
    scratch: Scratch,
}

impl<'a> Deducer<'a> {
    pub fn new(train: &KnowledgeGraph, rules: &'a RuleSet) -> Self {
        Self::from_closure(closure(train, rules), rules)
    }

    /// Uses `closed` as-is; the caller guarantees it is already a fixpoint.
    pub fn from_closure(closed: KnowledgeGraph, rules: &'a RuleSet) -> Self {
        let scratch = Scratch::new(closed.n_entities());
        Deducer {
            closure: closed,
            rules,
            scratch,
        }
    }

    pub fn closure(&self) -> &KnowledgeGraph {
        &self.closure
    }

    /// Smallest witness for `t` whose body lies in the closure, if any.
    pub fn witness(&mut self, t: &Triple) -> Option<Witness> {
        let rule = self.rules.rule_for(t.relation)?;
        let layers = Layers::search(&self.closure, t.head, &rule.body, &mut self.scratch);
        if !layers.complete(rule.body.len()) {
            return None;
        }
        let found = layers.ends().find(|&(_, e)| e == t.tail).map(|(i, _)| i);
        found.map(|i| Witness {
            rule: rule.clone(),
            path: layers.path(i),
        })
    }
}

/// One-shot deducibility check; prefer [`Deducer`] for many queries against
/// the same training graph.
pub fn is_deducible(t: &Triple, train: &KnowledgeGraph, rs: &RuleSet) -> Option<Witness> {
    Deducer::new(train, rs).witness(t)
}

/// Labels every triple deducible iff some rule derives it from the rest of
/// the graph, atomic otherwise.
///
/// A rule's body relations all lie in its head's dependency closure, which
/// never contains the head itself. Removing `t` therefore cannot change the
/// part of the closure a witness for `t` may use, so one closure of the whole
/// graph answers every per-triple question.
pub fn label_triples(g: &KnowledgeGraph, rs: &RuleSet) -> KnowledgeGraph {
    let closed = closure(g, rs);
    let mut scratch = Scratch::new(g.n_entities());
    let mut by_start: BTreeMap<(EntityId, RelationId), Vec<EntityId>> = BTreeMap::new();
    for t in g.triples() {
        if rs.rule_for(t.relation).is_some() {
            by_start.entry((t.head, t.relation)).or_default().push(t.tail);
        }
    }
    let mut deducible = std::collections::HashSet::new();
    for ((head, relation), tails) in by_start {
        let rule = rs.rule_for(relation).unwrap();
        let layers = Layers::search(&closed, head, &rule.body, &mut scratch);
        if !layers.complete(rule.body.len()) {
            continue;
        }
        let ends: std::collections::HashSet<EntityId> = layers.ends().map(|(_, e)| e).collect();
        for tail in tails {
            if ends.contains(&tail) {
                deducible.insert(Triple { head, relation, tail });
            }
        }
    }
    let mut out = g.clone();
    for t in g.triples() {
        let label = if deducible.contains(t) {
            Label::Deducible
        } else {
            Label::Atomic
        };
        out.set_label(t, label);
    }
    out
}
