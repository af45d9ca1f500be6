use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EntityId, KnowledgeGraph, RelationId};

/// Structural summary used to compare synthetic graphs with real ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_triples: usize,
    /// total degree (in + out) -> number of entities
    pub degree_histogram: BTreeMap<u64, usize>,
    /// number of distinct outgoing relations -> number of entities
    pub outgoing_relation_histogram: BTreeMap<usize, usize>,
    pub relation_edge_counts: Vec<usize>,
    /// Connected components of the undirected skeleton, largest first.
    pub component_sizes: Vec<usize>,
}

pub fn graph_stats(g: &KnowledgeGraph) -> GraphStats {
    let n = g.n_entities();
    let mut degree_histogram = BTreeMap::new();
    let mut outgoing_relation_histogram = BTreeMap::new();
    let mut distinct_out = vec![0usize; n];
    for r in 0..g.n_relations() {
        let out = g.relation_degree(RelationId(r as u32), super::Direction::Outgoing);
        for (e, &d) in out.iter().enumerate() {
            if d > 0 {
                distinct_out[e] += 1;
            }
        }
    }
    for e in 0..n {
        *degree_histogram
            .entry(g.total_degree(EntityId(e as u32)))
            .or_insert(0) += 1;
        *outgoing_relation_histogram
            .entry(distinct_out[e])
            .or_insert(0) += 1;
    }

    let mut relation_edge_counts = vec![0usize; g.n_relations()];
    let mut uf = UnionFind::new(n);
    for t in g.triples() {
        relation_edge_counts[t.relation.index()] += 1;
        uf.union(t.head.index(), t.tail.index());
    }
    let mut sizes = BTreeMap::new();
    for e in 0..n {
        *sizes.entry(uf.find(e)).or_insert(0usize) += 1;
    }
    let mut component_sizes: Vec<usize> = sizes.into_values().collect();
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));

    GraphStats {
        n_entities: n,
        n_relations: g.n_relations(),
        n_triples: g.len(),
        degree_histogram,
        outgoing_relation_histogram,
        relation_edge_counts,
        component_sizes,
    }
}

/// Complementary CDF `P(D >= d)` for every degree present in `histogram`.
pub fn ccdf(histogram: &BTreeMap<u64, usize>) -> Vec<(u64, f64)> {
    let total: usize = histogram.values().sum();
    let mut remaining = total;
    let mut out = Vec::with_capacity(histogram.len());
    for (&d, &c) in histogram {
        out.push((d, remaining as f64 / total as f64));
        remaining -= c;
    }
    out
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
