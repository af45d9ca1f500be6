//! Rule-governed synthetic graph generation.
//!
//! The pipeline seeds the graph with one fresh instantiation per rule, grows
//! it one entity at a time by per-relation preferential attachment under the
//! node-type constraints, closes it under the rules every `K` entities, and
//! finally subsamples a training graph of `N` triples at the requested
//! deducible/atomic balance together with a held-out set whose every triple
//! is certified deducible from the training triples.

use std::collections::HashSet;

use log::debug;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deduction::{extend_closure, label_triples, Deducer, Witness};
use crate::error::{Error, Result};
use crate::graph::{Direction, EntityId, KnowledgeGraph, Label, RelationId, Triple};
use crate::rules::{derive_node_types, generate_rules, NodeTypeCatalog, RuleConfig, RuleSet};

/// How the requested `gamma` relates deducible (`d`) and atomic (`a`)
/// training triples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    /// `gamma = d / a`
    #[default]
    Ratio,
    /// `gamma = d / (a + d)`
    Fraction,
}

impl GammaMode {
    /// `(atomic, deducible)` training counts for `n` triples.
    pub fn split(self, n: usize, gamma: f64) -> (usize, usize) {
        let d = match self {
            GammaMode::Ratio => (n as f64 * gamma / (1.0 + gamma)).round() as usize,
            GammaMode::Fraction => (n as f64 * gamma).round() as usize,
        };
        let d = d.min(n);
        (n - d, d)
    }

    pub fn achieved(self, atomic: usize, deducible: usize) -> f64 {
        match self {
            GammaMode::Ratio => deducible as f64 / atomic as f64,
            GammaMode::Fraction => deducible as f64 / (atomic + deducible) as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Training triples `N`.
    pub n_triples: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_rules: usize,
    pub gamma: f64,
    #[serde(default)]
    pub gamma_mode: GammaMode,
    pub min_rule_len: usize,
    pub max_rule_len: usize,
    /// `M_r`
    pub max_relations_per_node: usize,
    /// Closure runs after every `closure_interval` new entities.
    pub closure_interval: usize,
    /// New edges per entity are uniform in `1..=max_new_edges`.
    pub max_new_edges: usize,
    /// Held-out questions `M`.
    pub heldout: usize,
    pub seed: u64,
}

pub const DEFAULT_MAX_RELATIONS_PER_NODE: usize = 4;
pub const DEFAULT_CLOSURE_INTERVAL: usize = 100;
pub const DEFAULT_MAX_NEW_EDGES: usize = 20;
pub const DEFAULT_HELDOUT: usize = 1000;

impl GraphConfig {
    /// Rule lengths 2..=4 and default generation knobs around the given sizes.
    pub fn with_sizes(n_triples: usize, n_entities: usize, n_relations: usize, n_rules: usize, gamma: f64) -> Self {
        GraphConfig {
            n_triples,
            n_entities,
            n_relations,
            n_rules,
            gamma,
            gamma_mode: GammaMode::Ratio,
            min_rule_len: 2,
            max_rule_len: 4,
            max_relations_per_node: DEFAULT_MAX_RELATIONS_PER_NODE,
            closure_interval: DEFAULT_CLOSURE_INTERVAL,
            max_new_edges: DEFAULT_MAX_NEW_EDGES,
            heldout: DEFAULT_HELDOUT,
            seed: 0,
        }
    }

    /// N=100k, N_e=10k, N_r=100, N_h=50, gamma=0.5.
    pub fn standard() -> Self {
        Self::with_sizes(100_000, 10_000, 100, 50, 0.5)
    }

    /// N=10k, N_e=1k, N_r=10, N_h=5, gamma=0.5. Generates in about a second.
    pub fn small() -> Self {
        Self::with_sizes(10_000, 1_000, 10, 5, 0.5)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn rule_config(&self) -> RuleConfig {
        RuleConfig {
            n_rules: self.n_rules,
            min_len: self.min_rule_len,
            max_len: self.max_rule_len,
            n_relations: self.n_relations,
            max_relations_per_node: self.max_relations_per_node,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_triples", self.n_triples),
            ("n_entities", self.n_entities),
            ("n_relations", self.n_relations),
            ("n_rules", self.n_rules),
            ("closure_interval", self.closure_interval),
            ("max_new_edges", self.max_new_edges),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.gamma_mode == GammaMode::Fraction && self.gamma >= 1.0 {
            return Err(Error::Config("gamma as a fraction must be below 1".into()));
        }
        self.rule_config().validate()
    }
}

/// Independent per-purpose RNG stream derived from one seed.
pub(crate) fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_TYPES: u64 = 1;
const STREAM_GROWTH: u64 = 2;
const STREAM_SUBSAMPLE: u64 = 3;

/// Highest relation id any rule mentions, plus one.
fn relation_span(rs: &RuleSet) -> usize {
    rs.relations().iter().next_back().map_or(0, |r| r.index() + 1)
}

/// One fresh instantiation per rule: entities `e0..en`, the body triples
/// (atomic) and the head triple (deducible).
pub fn build_seed_graph(rs: &RuleSet) -> Result<KnowledgeGraph> {
    if rs.is_empty() {
        return Err(Error::Config("cannot seed a graph from an empty rule set".into()));
    }
    Ok(seed_graph(rs, relation_span(rs)).0)
}

/// Seed graph plus `(rule, position)` of every entity.
fn seed_graph(rs: &RuleSet, n_relations: usize) -> (KnowledgeGraph, Vec<(usize, usize)>) {
    let mut g = KnowledgeGraph::new(0, n_relations);
    let mut positions = Vec::new();
    for (k, rule) in rs.rules().iter().enumerate() {
        let ents: Vec<EntityId> = (0..=rule.len())
            .map(|p| {
                positions.push((k, p));
                g.add_entity()
            })
            .collect();
        for (i, &r) in rule.body.iter().enumerate() {
            g.insert(
                Triple {
                    head: ents[i],
                    relation: r,
                    tail: ents[i + 1],
                },
                Label::Atomic,
            );
        }
        g.insert(
            Triple {
                head: ents[0],
                relation: rule.head,
                tail: ents[rule.len()],
            },
            Label::Deducible,
        );
    }
    (g, positions)
}

/// Draws one candidate with probability proportional to `degree + 1`, where
/// `degrees` is a per-entity tally for one relation and direction.
pub fn preferential_target<R: Rng + ?Sized>(degrees: &[u32], candidates: &[EntityId], rng: &mut R) -> EntityId {
    assert!(!candidates.is_empty(), "preferential_target needs candidates");
    let total: u64 = candidates
        .iter()
        .map(|e| u64::from(degrees[e.index()]) + 1)
        .sum();
    let mut pick = rng.random_range(0..total);
    for &e in candidates {
        let w = u64::from(degrees[e.index()]) + 1;
        if pick < w {
            return e;
        }
        pick -= w;
    }
    unreachable!("weights sum to total")
}

#[derive(Clone, Debug)]
pub struct GrownGraph {
    /// Closed under the rules and labeled.
    pub graph: KnowledgeGraph,
    /// Catalog index of every entity's node type.
    pub entity_types: Vec<usize>,
    pub closure_runs: usize,
}

impl GrownGraph {
    /// Edges whose relation is not allowed by an endpoint's node type.
    pub fn type_violations<'a>(&'a self, catalog: &'a NodeTypeCatalog) -> impl Iterator<Item = &'a Triple> + 'a {
        self.graph.triples().iter().filter(move |t| {
            let h = catalog.get(self.entity_types[t.head.index()]);
            let tl = catalog.get(self.entity_types[t.tail.index()]);
            !(h.allows(t.relation, Direction::Outgoing) && tl.allows(t.relation, Direction::Incoming))
        })
    }
}

pub fn grow_graph(cfg: &GraphConfig, rs: &RuleSet, types: &NodeTypeCatalog) -> Result<GrownGraph> {
    cfg.validate()?;
    if types.is_empty() {
        return Err(Error::Config("node type catalog is empty".into()));
    }
    if let Some(i) = types.types().iter().position(|t| t.relation_count() == 0) {
        return Err(Error::Config(format!("node type {i} allows no relations")));
    }
    if relation_span(rs) > cfg.n_relations {
        return Err(Error::Config("rules mention relations beyond n_relations".into()));
    }

    let (mut g, positions) = seed_graph(rs, cfg.n_relations);
    if g.n_entities() > cfg.n_entities {
        return Err(Error::Config(format!(
            "seed graph already has {} entities, more than the requested {}",
            g.n_entities(),
            cfg.n_entities
        )));
    }
    let mut entity_types = Vec::with_capacity(cfg.n_entities);
    for &(rule, position) in &positions {
        let ty = types
            .position_type(rule, position)
            .ok_or_else(|| Error::Config(format!("catalog lacks a type for rule {rule} position {position}")))?;
        entity_types.push(ty);
    }

    // entities whose type accepts an edge with relation r on each side
    let mut accept_in: Vec<Vec<EntityId>> = vec![Vec::new(); cfg.n_relations];
    let mut accept_out: Vec<Vec<EntityId>> = vec![Vec::new(); cfg.n_relations];
    let register = |e: EntityId, ty: usize, accept_in: &mut Vec<Vec<EntityId>>, accept_out: &mut Vec<Vec<EntityId>>| {
        let t = types.get(ty);
        for r in 0..cfg.n_relations {
            let rel = RelationId(r as u32);
            if t.allows(rel, Direction::Incoming) {
                accept_in[r].push(e);
            }
            if t.allows(rel, Direction::Outgoing) {
                accept_out[r].push(e);
            }
        }
    };
    for (e, &ty) in entity_types.iter().enumerate() {
        register(EntityId(e as u32), ty, &mut accept_in, &mut accept_out);
    }

    let slots: Vec<Vec<(Direction, RelationId)>> = types
        .types()
        .iter()
        .map(|t| {
            t.outgoing
                .iter()
                .map(|&r| (Direction::Outgoing, r))
                .chain(t.incoming.iter().map(|&r| (Direction::Incoming, r)))
                .collect()
        })
        .collect();

    let mut rng = rng_stream(cfg.seed, STREAM_GROWTH);
    let mut closure_runs = 1;
    extend_closure(&mut g, rs, None);
    let mut pending: Vec<Triple> = Vec::new();
    let mut since_closure = 0;

    while g.n_entities() < cfg.n_entities {
        let ty = rng.random_range(0..types.len());
        let e = g.add_entity();
        let m = rng.random_range(1..=cfg.max_new_edges);
        for _ in 0..m {
            let &(side, r) = slots[ty].choose(&mut rng).unwrap();
            let (candidates, degrees) = match side {
                Direction::Outgoing => (&accept_in[r.index()], g.relation_degree(r, Direction::Incoming)),
                Direction::Incoming => (&accept_out[r.index()], g.relation_degree(r, Direction::Outgoing)),
            };
            if candidates.is_empty() {
                continue;
            }
            let other = preferential_target(degrees, candidates, &mut rng);
            let t = match side {
                Direction::Outgoing => Triple { head: e, relation: r, tail: other },
                Direction::Incoming => Triple { head: other, relation: r, tail: e },
            };
            if g.insert(t, Label::Atomic) {
                pending.push(t);
            }
        }
        entity_types.push(ty);
        register(e, ty, &mut accept_in, &mut accept_out);

        since_closure += 1;
        if since_closure == cfg.closure_interval {
            extend_closure(&mut g, rs, Some(std::mem::take(&mut pending)));
            closure_runs += 1;
            since_closure = 0;
        }
    }
    if !pending.is_empty() || since_closure > 0 {
        extend_closure(&mut g, rs, Some(pending));
        closure_runs += 1;
    }
    debug!(
        "grew {} entities, {} triples, {} closure runs",
        g.n_entities(),
        g.len(),
        closure_runs
    );

    Ok(GrownGraph {
        graph: label_triples(&g, rs),
        entity_types,
        closure_runs,
    })
}

#[derive(Clone, Debug)]
pub struct SplitGraph {
    pub train: KnowledgeGraph,
    pub heldout: Vec<Triple>,
    /// Certificate for each held-out triple against the training closure.
    pub witnesses: Vec<Witness>,
    pub achieved_gamma: f64,
    pub gamma_mode: GammaMode,
}

/// Selects `n` training triples at the requested deducible balance and `m`
/// held-out deducible triples from a closed, labeled graph.
///
/// Held-out triples are picked first; the body triples of each one's witness
/// are protected into the training set, so every held-out triple stays
/// deducible from the training triples alone.
pub fn subsample<R: Rng + ?Sized>(
    g: &KnowledgeGraph,
    rs: &RuleSet,
    n: usize,
    gamma: f64,
    mode: GammaMode,
    m: usize,
    rng: &mut R,
) -> Result<SplitGraph> {
    let (a_target, d_target) = mode.split(n, gamma);
    let mut atomic: Vec<Triple> = Vec::new();
    let mut deducible: Vec<Triple> = Vec::new();
    for (t, l) in g.labeled() {
        match l {
            Label::Atomic => atomic.push(t),
            Label::Deducible => deducible.push(t),
            Label::Unlabeled => {
                return Err(Error::InfeasibleSubsample(format!("triple {t} is unlabeled")));
            }
        }
    }
    if atomic.len() < a_target {
        return Err(Error::InfeasibleSubsample(format!(
            "need {a_target} atomic triples, graph has {} (short by {})",
            atomic.len(),
            a_target - atomic.len()
        )));
    }
    if deducible.len() < d_target + m {
        return Err(Error::InfeasibleSubsample(format!(
            "need {d_target} deducible training triples plus {m} held out, graph has {} (short by {})",
            deducible.len(),
            d_target + m - deducible.len()
        )));
    }
    atomic.shuffle(rng);
    deducible.shuffle(rng);

    let mut deducer = Deducer::from_closure(g.clone(), rs);
    let mut protected: HashSet<Triple> = HashSet::new();
    let (mut prot_a, mut prot_d) = (0usize, 0usize);
    let mut heldout = Vec::with_capacity(m);
    let mut heldout_set = HashSet::new();
    for &h in &deducible {
        if heldout.len() == m {
            break;
        }
        if protected.contains(&h) {
            continue;
        }
        let Some(w) = deducer.witness(&h) else { continue };
        let body: Vec<Triple> = w.body_triples().collect();
        if body.iter().any(|b| heldout_set.contains(b)) {
            continue;
        }
        let fresh: Vec<&Triple> = body.iter().filter(|b| !protected.contains(*b)).collect();
        let new_a = fresh.iter().filter(|b| g.label(b) == Some(Label::Atomic)).count();
        let new_d = fresh.len() - new_a;
        if prot_a + new_a > a_target || prot_d + new_d > d_target {
            continue;
        }
        prot_a += new_a;
        prot_d += new_d;
        protected.extend(fresh.into_iter().copied());
        heldout.push(h);
        heldout_set.insert(h);
    }
    if heldout.len() < m {
        return Err(Error::InfeasibleSubsample(format!(
            "only {} of {m} held-out triples could be supported within the training budget",
            heldout.len()
        )));
    }

    let mut train_set = protected.clone();
    train_set.extend(
        atomic
            .iter()
            .filter(|t| !protected.contains(t))
            .take(a_target - prot_a),
    );
    train_set.extend(
        deducible
            .iter()
            .filter(|t| !protected.contains(t) && !heldout_set.contains(t))
            .take(d_target - prot_d),
    );
    let train = g.filtered(|t, _| train_set.contains(t));

    let mut certifier = Deducer::new(&train, rs);
    let mut witnesses = Vec::with_capacity(m);
    for h in &heldout {
        match certifier.witness(h) {
            Some(w) => witnesses.push(w),
            None => {
                return Err(Error::InfeasibleSubsample(format!(
                    "held-out triple {h} is not deducible from the training graph"
                )))
            }
        }
    }
    let (a, d, _) = train.label_counts();
    Ok(SplitGraph {
        achieved_gamma: mode.achieved(a, d),
        train,
        heldout,
        witnesses,
        gamma_mode: mode,
    })
}

/// Everything produced by one generation run.
#[derive(Clone, Debug)]
pub struct Generated {
    pub rules: RuleSet,
    pub catalog: NodeTypeCatalog,
    pub grown: GrownGraph,
    pub split: SplitGraph,
}

/// Full pipeline: rules, node types, growth, subsampling.
pub fn generate(cfg: &GraphConfig) -> Result<Generated> {
    cfg.validate()?;
    let rules = generate_rules(&cfg.rule_config()).map_err(|e| e.in_stage("rules"))?;
    let mut catalog = derive_node_types(
        &rules,
        cfg.max_relations_per_node,
        rng_stream(cfg.seed, STREAM_TYPES).random(),
    );
    catalog.add_free_relation_types(&rules, cfg.n_relations);
    let grown = grow_graph(cfg, &rules, &catalog).map_err(|e| e.in_stage("growth"))?;
    let mut rng = rng_stream(cfg.seed, STREAM_SUBSAMPLE);
    let split = subsample(
        &grown.graph,
        &rules,
        cfg.n_triples,
        cfg.gamma,
        cfg.gamma_mode,
        cfg.heldout,
        &mut rng,
    )
    .map_err(|e| e.in_stage("subsample"))?;
    Ok(Generated {
        rules,
        catalog,
        grown,
        split,
    })
}
