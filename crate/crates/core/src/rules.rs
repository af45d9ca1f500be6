//! Conjunctive Horn rules `h(r) = [r1, ..., rn]` and the node-type catalog
//! they induce.
//!
//! A rule states that `(e0, r, en)` holds whenever a path
//! `e0 -r1-> e1 -r2-> ... -rn-> en` exists. Rule sets are generated acyclic
//! by construction: relations are placed in a random order and every rule's
//! head precedes all of its body relations in that order, so the dependency
//! graph (head -> body relation) only ever points forward.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Direction, RelationId};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub head: RelationId,
    pub body: Vec<RelationId>,
}

impl Rule {
    pub fn new(head: u32, body: &[u32]) -> Self {
        Rule {
            head: RelationId(head),
            body: body.iter().map(|&r| RelationId(r)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    /// `(relation, source position, target position)` for every edge of the
    /// rule's instantiation: body edges first, then the head edge `e0 -> en`.
    fn edges(&self) -> impl Iterator<Item = (RelationId, usize, usize)> + '_ {
        self.body
            .iter()
            .enumerate()
            .map(|(i, &r)| (r, i, i + 1))
            .chain(std::iter::once((self.head, 0, self.body.len())))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Self {
        RuleSet { rules }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule_for(&self, head: RelationId) -> Option<&Rule> {
        self.rules.iter().find(|r| r.head == head)
    }

    /// Every relation mentioned by some rule, head or body.
    pub fn relations(&self) -> BTreeSet<RelationId> {
        self.rules
            .iter()
            .flat_map(|r| std::iter::once(r.head).chain(r.body.iter().copied()))
            .collect()
    }

    /// Dependency adjacency: head -> distinct body relations, ascending.
    pub fn dependencies(&self) -> BTreeMap<RelationId, BTreeSet<RelationId>> {
        let mut deps: BTreeMap<RelationId, BTreeSet<RelationId>> = BTreeMap::new();
        for rule in &self.rules {
            deps.entry(rule.head)
                .or_default()
                .extend(rule.body.iter().copied());
        }
        deps
    }

    /// Longest head-to-head chain in the dependency DAG (1 for independent
    /// rules, 0 for the empty set). Bounds the number of productive closure
    /// rounds.
    pub fn depth(&self) -> usize {
        let deps = self.dependencies();
        let mut memo: BTreeMap<RelationId, usize> = BTreeMap::new();
        fn visit(
            r: RelationId,
            deps: &BTreeMap<RelationId, BTreeSet<RelationId>>,
            memo: &mut BTreeMap<RelationId, usize>,
        ) -> usize {
            if let Some(&d) = memo.get(&r) {
                return d;
            }
            let d = match deps.get(&r) {
                None => 0,
                Some(body) => 1 + body.iter().map(|&b| visit(b, deps, memo)).max().unwrap_or(0),
            };
            memo.insert(r, d);
            d
        }
        deps.keys().map(|&h| visit(h, &deps, &mut memo)).max().unwrap_or(0)
    }

    /// Checks the structural invariants: acyclic dependencies, one rule per
    /// head, body lengths of at least two.
    pub fn validate(&self) -> Result<()> {
        if let Err(cycles) = check_acyclic(self) {
            return Err(Error::CyclicRules(cycles));
        }
        let mut heads = BTreeSet::new();
        for rule in &self.rules {
            if !heads.insert(rule.head) {
                return Err(Error::Config(format!(
                    "relation {} is the head of more than one rule",
                    rule.head
                )));
            }
            if rule.body.len() < 2 {
                return Err(Error::Config(format!(
                    "rule for {} has a body of length {}",
                    rule.head,
                    rule.body.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub n_rules: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub n_relations: usize,
    pub max_relations_per_node: usize,
    pub seed: u64,
}

impl RuleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_len < 2 || self.min_len > self.max_len {
            return Err(Error::Config(format!(
                "rule lengths must satisfy 2 <= min ({}) <= max ({})",
                self.min_len, self.max_len
            )));
        }
        if self.n_relations < self.max_len + 1 {
            return Err(Error::Config(format!(
                "{} relations cannot host a rule of length {} plus its head",
                self.n_relations, self.max_len
            )));
        }
        if self.max_relations_per_node < 2 {
            return Err(Error::Config(
                "max_relations_per_node must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

pub fn generate_rules(cfg: &RuleConfig) -> Result<RuleSet> {
    cfg.validate()?;
    if cfg.n_rules == 0 {
        return Ok(RuleSet::default());
    }
    // A head needs at least two distinct relations after it so that a body
    // without immediate repetition exists.
    let head_slots = cfg.n_relations.saturating_sub(2);
    if cfg.n_rules > head_slots {
        return Err(Error::InfeasibleRules {
            requested: cfg.n_rules,
            relations: cfg.n_relations,
            reason: format!("only {head_slots} relations can act as rule heads"),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<RelationId> = (0..cfg.n_relations as u32).map(RelationId).collect();
    order.shuffle(&mut rng);

    let mut head_positions = rand::seq::index::sample(&mut rng, head_slots, cfg.n_rules).into_vec();
    head_positions.sort_unstable();

    let rules = head_positions
        .into_iter()
        .map(|p| {
            let later = &order[p + 1..];
            let len = rng.random_range(cfg.min_len..=cfg.max_len);
            let mut body: Vec<RelationId> = Vec::with_capacity(len);
            while body.len() < len {
                let r = *later.choose(&mut rng).expect("at least two later relations");
                if body.last() != Some(&r) {
                    body.push(r);
                }
            }
            Rule {
                head: order[p],
                body,
            }
        })
        .collect();
    Ok(RuleSet::new(rules))
}

/// `Ok(())` when the dependency graph is a DAG, otherwise one relation
/// sequence per back edge found by a depth-first search in ascending id order.
pub fn check_acyclic(rs: &RuleSet) -> std::result::Result<(), Vec<Vec<RelationId>>> {
    #[derive(Copy, Clone, PartialEq)]
    enum Mark {
        Fresh,
        OnStack,
        Done,
    }

    let deps = rs.dependencies();
    let mut mark: BTreeMap<RelationId, Mark> = BTreeMap::new();
    let mut cycles = Vec::new();

    for &start in deps.keys() {
        if mark.get(&start).copied().unwrap_or(Mark::Fresh) != Mark::Fresh {
            continue;
        }
        // (node, next child index); iterative to survive deep chains
        let mut stack: Vec<(RelationId, Vec<RelationId>, usize)> = Vec::new();
        let children = |r: RelationId| -> Vec<RelationId> {
            deps.get(&r).map(|s| s.iter().copied().collect()).unwrap_or_default()
        };
        mark.insert(start, Mark::OnStack);
        stack.push((start, children(start), 0));
        while let Some((node, kids, next)) = stack.last_mut() {
            if *next == kids.len() {
                mark.insert(*node, Mark::Done);
                stack.pop();
                continue;
            }
            let child = kids[*next];
            *next += 1;
            match mark.get(&child).copied().unwrap_or(Mark::Fresh) {
                Mark::OnStack => {
                    let from = stack.iter().position(|(n, _, _)| *n == child).unwrap();
                    cycles.push(stack[from..].iter().map(|(n, _, _)| *n).collect());
                }
                Mark::Fresh => {
                    mark.insert(child, Mark::OnStack);
                    let grandkids = children(child);
                    stack.push((child, grandkids, 0));
                }
                Mark::Done => {}
            }
        }
    }
    if cycles.is_empty() {
        Ok(())
    } else {
        Err(cycles)
    }
}

/// Which rule position (or junction) a node type was derived from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeOrigin {
    /// Entity position `position` (0..=n) of rule `rule`.
    Position { rule: usize, position: usize },
    /// Junction created by `relation` being shared between two rules. The
    /// source junction merges the two positions the relation leaves from, the
    /// target junction the two positions it enters.
    Shared {
        rules: (usize, usize),
        relation: RelationId,
        target: bool,
    },
    /// A relation no rule mentions.
    Free { relation: RelationId },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeType {
    /// Relations a new edge may enter this type with.
    pub incoming: BTreeSet<RelationId>,
    /// Relations a new edge may leave this type with.
    pub outgoing: BTreeSet<RelationId>,
    /// Rule heads that deduction can attach on the incoming side.
    pub derived_incoming: BTreeSet<RelationId>,
    /// Rule heads that deduction can attach on the outgoing side.
    pub derived_outgoing: BTreeSet<RelationId>,
    pub origin: TypeOrigin,
}

impl NodeType {
    fn new(incoming: BTreeSet<RelationId>, outgoing: BTreeSet<RelationId>, origin: TypeOrigin) -> Self {
        NodeType {
            incoming,
            outgoing,
            derived_incoming: BTreeSet::new(),
            derived_outgoing: BTreeSet::new(),
            origin,
        }
    }

    /// Whether an edge with `relation` may touch this type on `side`.
    pub fn allows(&self, relation: RelationId, side: Direction) -> bool {
        match side {
            Direction::Outgoing => {
                self.outgoing.contains(&relation) || self.derived_outgoing.contains(&relation)
            }
            Direction::Incoming => {
                self.incoming.contains(&relation) || self.derived_incoming.contains(&relation)
            }
        }
    }

    pub fn relation_count(&self) -> usize {
        self.incoming.len() + self.outgoing.len()
    }

    /// Adds rule heads reachable by deduction: an entity that may start a
    /// body path can receive the head edge, and likewise at the path's end.
    fn close_under(&mut self, rs: &RuleSet) {
        loop {
            let mut changed = false;
            for rule in rs.rules() {
                let first = rule.body[0];
                let last = *rule.body.last().unwrap();
                if self.allows(first, Direction::Outgoing)
                    && !self.allows(rule.head, Direction::Outgoing)
                {
                    self.derived_outgoing.insert(rule.head);
                    changed = true;
                }
                if self.allows(last, Direction::Incoming)
                    && !self.allows(rule.head, Direction::Incoming)
                {
                    self.derived_incoming.insert(rule.head);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeTypeCatalog {
    types: Vec<NodeType>,
}

impl NodeTypeCatalog {
    pub fn types(&self) -> &[NodeType] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, index: usize) -> &NodeType {
        &self.types[index]
    }

    /// Index of the type derived from `position` of `rule`.
    pub fn position_type(&self, rule: usize, position: usize) -> Option<usize> {
        self.types
            .iter()
            .position(|t| t.origin == TypeOrigin::Position { rule, position })
    }

    /// Adds one self-compatible type per relation in `0..n_relations` that no
    /// rule mentions, so relations outside the rule set still appear in
    /// grown graphs.
    pub fn add_free_relation_types(&mut self, rs: &RuleSet, n_relations: usize) {
        let used = rs.relations();
        for r in (0..n_relations as u32).map(RelationId) {
            if !used.contains(&r) {
                let set = BTreeSet::from([r]);
                self.types
                    .push(NodeType::new(set.clone(), set, TypeOrigin::Free { relation: r }));
            }
        }
    }
}

/// Builds the node-type catalog: one type per entity position per rule, plus
/// a source and a target junction type for every relation shared by a pair
/// of rules. Types holding more than `max_relations` relations are truncated
/// by seeded sampling.
pub fn derive_node_types(rs: &RuleSet, max_relations: usize, seed: u64) -> NodeTypeCatalog {
    let rules = rs.rules();
    let mut types: Vec<NodeType> = Vec::new();

    let position_sets = |rule: &Rule, pos: usize| -> (BTreeSet<RelationId>, BTreeSet<RelationId>) {
        let mut incoming = BTreeSet::new();
        let mut outgoing = BTreeSet::new();
        for (r, src, dst) in rule.edges() {
            if src == pos {
                outgoing.insert(r);
            }
            if dst == pos {
                incoming.insert(r);
            }
        }
        (incoming, outgoing)
    };

    for (k, rule) in rules.iter().enumerate() {
        for pos in 0..=rule.len() {
            let (incoming, outgoing) = position_sets(rule, pos);
            types.push(NodeType::new(
                incoming,
                outgoing,
                TypeOrigin::Position { rule: k, position: pos },
            ));
        }
    }

    for a in 0..rules.len() {
        for b in a + 1..rules.len() {
            let first_edge = |rule: &Rule| -> BTreeMap<RelationId, (usize, usize)> {
                let mut m = BTreeMap::new();
                for (r, src, dst) in rule.edges() {
                    m.entry(r).or_insert((src, dst));
                }
                m
            };
            let ea = first_edge(&rules[a]);
            let eb = first_edge(&rules[b]);
            for (&rel, &(sa, da)) in &ea {
                let Some(&(sb, db)) = eb.get(&rel) else { continue };
                for (target, pa, pb) in [(false, sa, sb), (true, da, db)] {
                    let (mut inc, mut out) = position_sets(&rules[a], pa);
                    let (inc_b, out_b) = position_sets(&rules[b], pb);
                    inc.extend(inc_b);
                    out.extend(out_b);
                    types.push(NodeType::new(
                        inc,
                        out,
                        TypeOrigin::Shared {
                            rules: (a, b),
                            relation: rel,
                            target,
                        },
                    ));
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in &mut types {
        if t.relation_count() > max_relations {
            let items: Vec<(Direction, RelationId)> = t
                .incoming
                .iter()
                .map(|&r| (Direction::Incoming, r))
                .chain(t.outgoing.iter().map(|&r| (Direction::Outgoing, r)))
                .collect();
            let keep: Vec<_> = items.choose_multiple(&mut rng, max_relations).copied().collect();
            t.incoming = keep
                .iter()
                .filter(|(d, _)| *d == Direction::Incoming)
                .map(|&(_, r)| r)
                .collect();
            t.outgoing = keep
                .iter()
                .filter(|(d, _)| *d == Direction::Outgoing)
                .map(|&(_, r)| r)
                .collect();
        }
        t.close_under(rs);
    }

    NodeTypeCatalog { types }
}
