//! Graph search entropy via the maximal-entropy random walk (MERW).
//!
//! For an adjacency matrix `A` with Perron pair `(λ, ψ)` the MERW moves from
//! `i` to `j` with probability
//!
//! > `S_ij = (A_ij / λ) · (ψ_j / ψ_i)`
//!
//! and its entity entropy rate is `log λ`. Merging the transition mass of
//! every edge by its relation label gives the entity-to-relation matrix `Sʳ`,
//! and with the walk's stationary distribution `ρ` the relation entropy rate
//! is
//!
//! > `Hʳ = −Σ_i ρ_i Σ_j Sʳ_ij log Sʳ_ij`.
//!
//! The graph search entropy is `H = N_e · (log λ + Hʳ)` where `N_e` counts
//! the entities of the analyzed component.
//!
//! # Modes
//!
//! By default the walk runs on the symmetrized adjacency `A + Aᵀ` restricted
//! to the largest connected component, and every edge traversed backwards
//! carries an inverse relation label `r⁻¹`, so the relation choice stays a
//! proper distribution. The directed mode walks `A` itself on the largest
//! strongly connected component.
//!
//! Parallel edges with different relations contribute one unit of `A` each,
//! so `S_ij` is split evenly between their relations in `Sʳ`.
//!
//! The stationary distribution is always solved numerically as the left
//! fixed point `ρS = ρ`; the closed form `ψ_i² / ‖ψ‖²` (symmetric case) or
//! `φ_i ψ_i` with the left Perron vector `φ` (directed case) only seeds the
//! iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::stats::UnionFind;
use crate::graph::{EntityId, KnowledgeGraph};

pub const EIGEN_TOLERANCE: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 10_000;
const STATIONARY_TOLERANCE: f64 = 1e-13;
const STATIONARY_MAX_ITER: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Bits => x.log2(),
            LogBase::Nats => x.ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntropyMode {
    pub symmetrized: bool,
    /// Label reversed edges with a distinct inverse relation (symmetrized
    /// mode only).
    pub inverse_relations: bool,
    pub log_base: LogBase,
}

impl Default for EntropyMode {
    fn default() -> Self {
        EntropyMode {
            symmetrized: true,
            inverse_relations: true,
            log_base: LogBase::Bits,
        }
    }
}

impl EntropyMode {
    pub fn directed() -> Self {
        EntropyMode {
            symmetrized: false,
            inverse_relations: false,
            log_base: LogBase::Bits,
        }
    }
}

/// Sparse adjacency of one component in CSR form. Every triple contributes
/// one entry per direction it is walked in, so `A_ij` is the number of
/// entries in row `i` with column `j`.
#[derive(Clone, Debug)]
pub struct Adjacency {
    /// Local index -> entity id in the source graph.
    pub entities: Vec<EntityId>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    labels: Vec<u32>,
    /// Number of distinct relation labels (doubled with inverse relations).
    pub n_labels: usize,
    pub coverage: f64,
}

impl Adjacency {
    pub fn n(&self) -> usize {
        self.entities.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Columns and relation labels of row `i`'s entries, sorted by column.
    pub fn row(&self, i: usize) -> (&[u32], &[u32]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[range.clone()], &self.labels[range])
    }

    fn entries(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// `y = A x`
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.entries(i).map(|k| x[self.cols[k] as usize]).sum();
        }
    }

    /// `y = Aᵀ x`
    pub fn mul_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            for k in self.entries(i) {
                y[self.cols[k] as usize] += xi;
            }
        }
    }

    /// Dense `A_ij` counts; for tests and small graphs.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for k in self.entries(i) {
                row[self.cols[k] as usize] += 1.0;
            }
        }
        m
    }
}

/// Builds the adjacency of `g` restricted to its largest (strongly)
/// connected component. Ties between equally large components go to the one
/// holding the smallest entity id.
pub fn adjacency(g: &KnowledgeGraph, mode: EntropyMode) -> Result<Adjacency> {
    let n_total = g.n_entities();
    if g.is_empty() {
        return Err(Error::EmptyComponent);
    }
    let component: Vec<bool> = if mode.symmetrized {
        let mut uf = UnionFind::new(n_total);
        for t in g.triples() {
            uf.union(t.head.index(), t.tail.index());
        }
        let roots: Vec<usize> = (0..n_total).map(|e| uf.find(e)).collect();
        largest_class(&roots)
    } else {
        largest_class(&strong_components(g))
    };

    let mut local = vec![u32::MAX; n_total];
    let mut entities = Vec::new();
    for (e, &inside) in component.iter().enumerate() {
        if inside {
            local[e] = entities.len() as u32;
            entities.push(EntityId(e as u32));
        }
    }

    let n_rel = g.n_relations() as u32;
    let mut rows: Vec<Vec<(u32, u32)>> = vec![Vec::new(); entities.len()];
    for t in g.triples() {
        let (h, tl) = (local[t.head.index()], local[t.tail.index()]);
        if h == u32::MAX || tl == u32::MAX {
            continue;
        }
        rows[h as usize].push((tl, t.relation.0));
        if mode.symmetrized {
            let back = if mode.inverse_relations {
                t.relation.0 + n_rel
            } else {
                t.relation.0
            };
            rows[tl as usize].push((h, back));
        }
    }

    let mut row_ptr = Vec::with_capacity(entities.len() + 1);
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    row_ptr.push(0);
    for mut row in rows {
        row.sort_unstable();
        for (c, l) in row {
            cols.push(c);
            labels.push(l);
        }
        row_ptr.push(cols.len());
    }
    if cols.is_empty() {
        return Err(Error::EmptyComponent);
    }
    let n_labels = if mode.symmetrized && mode.inverse_relations {
        2 * g.n_relations()
    } else {
        g.n_relations()
    };
    Ok(Adjacency {
        coverage: entities.len() as f64 / n_total as f64,
        entities,
        row_ptr,
        cols,
        labels,
        n_labels,
    })
}

fn largest_class(class: &[usize]) -> Vec<bool> {
    let mut size = std::collections::HashMap::new();
    let mut first = std::collections::HashMap::new();
    for (e, &c) in class.iter().enumerate() {
        *size.entry(c).or_insert(0usize) += 1;
        first.entry(c).or_insert(e);
    }
    let best = size
        .iter()
        .max_by(|(ca, sa), (cb, sb)| sa.cmp(sb).then(first[cb].cmp(&first[ca])))
        .map(|(&c, _)| c)
        .unwrap();
    class.iter().map(|&c| c == best).collect()
}

/// Tarjan's algorithm, iterative. Returns a component id per entity.
fn strong_components(g: &KnowledgeGraph) -> Vec<usize> {
    let n = g.n_entities();
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    for t in g.triples() {
        succ[t.head.index()].push(t.tail.0);
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }

    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if *child < succ[v].len() {
                let w = succ[v][*child] as usize;
                *child += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Strictly positive, unit 2-norm.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `‖Aψ − λψ‖₂`
    pub residual: f64,
}

/// Perron pair of `A` by shifted power iteration. The positive shift keeps
/// the iteration convergent on periodic components (bipartite graphs,
/// directed cycles) without changing the eigenvector.
pub fn dominant_eig(a: &Adjacency, tol: f64, max_iter: usize) -> Result<Eigenpair> {
    power_iteration(a.n(), |x, y| a.mul(x, y), tol, max_iter)
}

/// Left Perron pair, i.e. the Perron pair of `Aᵀ`.
pub fn dominant_left_eig(a: &Adjacency, tol: f64, max_iter: usize) -> Result<Eigenpair> {
    power_iteration(a.n(), |x, y| a.mul_transpose(x, y), tol, max_iter)
}

fn power_iteration<F>(n: usize, mut mul: F, tol: f64, max_iter: usize) -> Result<Eigenpair>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        mul(&x, &mut ax);
        // ratio of sums: exact on regular components, equal to the Rayleigh
        // quotient at the fixed point
        let lambda = ax.iter().sum::<f64>() / x.iter().sum::<f64>();
        residual = x
            .iter()
            .zip(&ax)
            .map(|(xi, yi)| (yi - lambda * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        // Collatz-Wielandt: min_i (Ax)_i/x_i <= λ <= max_i (Ax)_i/x_i, and the
        // spread bounds every row's relative defect
        let (lo, hi) = x.iter().zip(&ax).fold((f64::INFINITY, 0.0f64), |(lo, hi), (xi, yi)| {
            let r = if *xi > 0.0 { yi / xi } else { f64::INFINITY };
            (lo.min(r), hi.max(r))
        });
        if lambda > 0.0 && hi - lo <= tol * lambda {
            return Ok(Eigenpair {
                lambda,
                vector: x,
                iterations: it,
                residual,
            });
        }
        // x <- (A + cI) x with c = max(1, λ/2): maps the spectrum's far negative
        // side (bipartite, periodic) well inside the dominant circle
        let shift = (0.5 * lambda).max(1.0);
        for (xi, yi) in x.iter_mut().zip(&ax) {
            *xi = yi + shift * *xi;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Per-entry MERW transition probabilities, aligned with the adjacency's
/// entries.
#[derive(Clone, Debug)]
pub struct Transition {
    pub values: Vec<f64>,
    /// Largest `|Σ_j S_ij − 1|` before rows were renormalized; measures how
    /// far the eigenpair is from exact.
    pub max_row_defect: f64,
}

impl Transition {
    /// Dense `S`; for tests and small graphs.
    pub fn to_dense(&self, a: &Adjacency) -> Vec<Vec<f64>> {
        let n = a.n();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for k in a.entries(i) {
                row[a.cols[k] as usize] += self.values[k];
            }
        }
        m
    }
}

/// `S_ij = (A_ij / λ)(ψ_j / ψ_i)`, split evenly over the entries of `(i, j)`.
pub fn merw_transition(a: &Adjacency, lambda: f64, psi: &[f64]) -> Transition {
    let mut values = vec![0.0; a.nnz()];
    let mut max_row_defect: f64 = 0.0;
    for i in 0..a.n() {
        assert!(psi[i] > 0.0, "Perron vector must be positive");
        let range = a.entries(i);
        let mut sum = 0.0;
        for k in range.clone() {
            let v = psi[a.cols[k] as usize] / (lambda * psi[i]);
            values[k] = v;
            sum += v;
        }
        max_row_defect = max_row_defect.max((sum - 1.0).abs());
        for v in &mut values[range] {
            *v /= sum;
        }
    }
    Transition {
        values,
        max_row_defect,
    }
}

/// Left fixed point of `S` from a uniform start.
pub fn stationary(a: &Adjacency, s: &Transition) -> Result<Vec<f64>> {
    stationary_from(a, s, vec![1.0; a.n()])
}

/// Left fixed point of `S` by the lazy iteration `ρ ← (ρ + ρS) / 2`, which
/// shares `S`'s fixed point and converges on periodic chains too.
pub fn stationary_from(a: &Adjacency, s: &Transition, init: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.n();
    let mut rho = init;
    normalize_l1(&mut rho);
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..STATIONARY_MAX_ITER {
        next.fill(0.0);
        for (i, &ri) in rho.iter().enumerate() {
            for k in a.entries(i) {
                next[a.cols[k] as usize] += ri * s.values[k];
            }
        }
        residual = rho.iter().zip(&next).map(|(x, y)| (x - y).abs()).sum();
        if residual <= STATIONARY_TOLERANCE {
            normalize_l1(&mut next);
            return Ok(next);
        }
        for (r, y) in rho.iter_mut().zip(&next) {
            *r = 0.5 * (*r + y);
        }
        normalize_l1(&mut rho);
    }
    Err(Error::NoConvergence {
        iterations: STATIONARY_MAX_ITER,
        residual,
    })
}

fn normalize_l1(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= sum);
}

/// Entity-to-relation transition rows: `(label, probability)` pairs sorted
/// by label.
#[derive(Clone, Debug)]
pub struct RelationTransition {
    pub rows: Vec<Vec<(u32, f64)>>,
}

pub fn relation_transition(a: &Adjacency, s: &Transition) -> RelationTransition {
    let rows = (0..a.n())
        .map(|i| {
            let mut pairs: Vec<(u32, f64)> = a.entries(i).map(|k| (a.labels[k], s.values[k])).collect();
            pairs.sort_by_key(|&(l, _)| l);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
            for (l, p) in pairs {
                match merged.last_mut() {
                    Some((last, acc)) if *last == l => *acc += p,
                    _ => merged.push((l, p)),
                }
            }
            merged
        })
        .collect();
    RelationTransition { rows }
}

/// `Hʳ = −Σ_i ρ_i Σ_j Sʳ_ij log Sʳ_ij`, with `0 log 0 = 0`.
pub fn relation_entropy_rate(rho: &[f64], sr: &RelationTransition, base: LogBase) -> f64 {
    let h: f64 = rho
        .iter()
        .zip(&sr.rows)
        .map(|(&r, row)| {
            r * row
                .iter()
                .filter(|&&(_, p)| p > 0.0)
                .map(|&(_, p)| -p * base.log(p))
                .sum::<f64>()
        })
        .sum();
    h.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub n_entities_used: usize,
    pub n_entities_total: usize,
    pub coverage: f64,
    pub lambda: f64,
    pub log2_lambda: f64,
    pub relation_entropy_rate_bits: f64,
    pub entropy_bits: f64,
    pub symmetrized: bool,
    pub inverse_relations: bool,
    pub log_base: LogBase,
    /// `log λ`, `Hʳ` and `H` in the unit selected by `log_base`.
    pub log_lambda_in_base: f64,
    pub relation_entropy_rate_in_base: f64,
    pub entropy_in_base: f64,
    pub eigen_iterations: usize,
    pub eigen_residual: f64,
    pub max_row_defect: f64,
    /// `Σ_i ψ_i / ‖ψ‖²`, the mass of the unnormalized variant `ρ_i = ψ_i / ‖ψ‖²`.
    pub literal_rho_mass: f64,
    /// `Hʳ` in bits weighted by that unnormalized variant.
    pub literal_relation_entropy_rate_bits: f64,
}

pub fn graph_search_entropy(g: &KnowledgeGraph, mode: EntropyMode) -> Result<EntropyReport> {
    let a = adjacency(g, mode)?;
    let eig = dominant_eig(&a, EIGEN_TOLERANCE, EIGEN_MAX_ITER)?;
    let s = merw_transition(&a, eig.lambda, &eig.vector);
    let seed: Vec<f64> = if mode.symmetrized {
        eig.vector.iter().map(|v| v * v).collect()
    } else {
        let left = dominant_left_eig(&a, EIGEN_TOLERANCE, EIGEN_MAX_ITER)?;
        left.vector.iter().zip(&eig.vector).map(|(l, r)| l * r).collect()
    };
    let rho = stationary_from(&a, &s, seed)?;
    let sr = relation_transition(&a, &s);

    let hr_bits = relation_entropy_rate(&rho, &sr, LogBase::Bits);
    let log2_lambda = eig.lambda.log2();
    let n_used = a.n();

    let norm_sq: f64 = eig.vector.iter().map(|v| v * v).sum();
    let literal: Vec<f64> = eig.vector.iter().map(|v| v / norm_sq).collect();

    let (log_lambda_in_base, hr_in_base) = match mode.log_base {
        LogBase::Bits => (log2_lambda, hr_bits),
        LogBase::Nats => (eig.lambda.ln(), relation_entropy_rate(&rho, &sr, LogBase::Nats)),
    };

    Ok(EntropyReport {
        n_entities_used: n_used,
        n_entities_total: g.n_entities(),
        coverage: a.coverage,
        lambda: eig.lambda,
        log2_lambda,
        relation_entropy_rate_bits: hr_bits,
        entropy_bits: n_used as f64 * (log2_lambda + hr_bits),
        symmetrized: mode.symmetrized,
        inverse_relations: mode.symmetrized && mode.inverse_relations,
        log_base: mode.log_base,
        log_lambda_in_base,
        relation_entropy_rate_in_base: hr_in_base,
        entropy_in_base: n_used as f64 * (log_lambda_in_base + hr_in_base),
        eigen_iterations: eig.iterations,
        eigen_residual: eig.residual,
        max_row_defect: s.max_row_defect,
        literal_rho_mass: literal.iter().sum(),
        literal_relation_entropy_rate_bits: relation_entropy_rate(&literal, &sr, LogBase::Bits),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Label, Triple};

    fn graph(n: usize, nr: usize, ts: &[(u32, u32, u32)]) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(
            n,
            nr,
            ts.iter().map(|&(h, r, t)| (Triple::new(h, r, t), Label::Atomic)),
        )
    }

    fn ring3() -> KnowledgeGraph {
        graph(3, 1, &[(0, 0, 1), (1, 0, 2), (2, 0, 0)])
    }

    fn complete5() -> KnowledgeGraph {
        let mut ts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    ts.push((i, 0, j));
                }
            }
        }
        graph(5, 1, &ts)
    }

    fn path3_undirected() -> Adjacency {
        adjacency(&graph(3, 1, &[(0, 0, 1), (1, 0, 2)]), EntropyMode::default()).unwrap()
    }

    #[test]
    fn ring_adjacency() {
        let a = adjacency(&ring3(), EntropyMode::directed()).unwrap();
        assert_eq!(a.coverage, 1.0);
        assert_eq!(
            a.to_dense(),
            vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]
        );
    }

    #[test]
    fn parallel_edges_add_multiplicity() {
        let a = adjacency(&graph(2, 2, &[(0, 0, 1), (0, 1, 1), (1, 0, 0)]), EntropyMode::directed()).unwrap();
        assert_eq!(a.to_dense()[0][1], 2.0);
    }

    #[test]
    fn restriction_to_largest_component() {
        let g = graph(6, 1, &[(0, 0, 1), (1, 0, 2), (3, 0, 4)]);
        let a = adjacency(&g, EntropyMode::default()).unwrap();
        assert_eq!(a.n(), 3);
        assert!((a.coverage - 0.5).abs() < 1e-15);
        // directed: a chain has only trivial strongly connected components
        assert!(matches!(adjacency(&g, EntropyMode::directed()), Err(Error::EmptyComponent)));
    }

    #[test]
    fn single_edge_eigenpair() {
        let a = adjacency(&graph(2, 1, &[(0, 0, 1)]), EntropyMode::default()).unwrap();
        let e = dominant_eig(&a, EIGEN_TOLERANCE, EIGEN_MAX_ITER).unwrap();
        assert!((e.lambda - 1.0).abs() < 1e-10);
        for v in &e.vector {
            assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        }
    }

    #[test]
    fn complete_graph_eigenvalue() {
        let a = adjacency(&complete5(), EntropyMode::directed()).unwrap();
        let e = dominant_eig(&a, EIGEN_TOLERANCE, EIGEN_MAX_ITER).unwrap();
        assert!((e.lambda - 4.0).abs() < 1e-9);
    }

    #[test]
    fn path3_eigenpair_transition_and_stationary() {
        let a = path3_undirected();
        let e = dominant_eig(&a, EIGEN_TOLERANCE, EIGEN_MAX_ITER).unwrap();
        assert!((e.lambda - 2f64.sqrt()).abs() < 1e-9);
        let r = e.vector[1] / e.vector[0];
        assert!((r - 2f64.sqrt()).abs() < 1e-8);
        assert!((e.vector[0] - e.vector[2]).abs() < 1e-9);

        let s = merw_transition(&a, e.lambda, &e.vector).to_dense(&a);
        assert!((s[1][0] - 0.5).abs() < 1e-9 && (s[1][2] - 0.5).abs() < 1e-9);
        assert!((s[0][1] - 1.0).abs() < 1e-12 && (s[2][1] - 1.0).abs() < 1e-12);

        let t = merw_transition(&a, e.lambda, &e.vector);
        let rho = stationary(&a, &t).unwrap();
        for (got, want) in rho.iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-9);
        }
        let closed: Vec<f64> = e.vector.iter().map(|v| v * v).collect();
        for (got, want) in rho.iter().zip(closed) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn ring_walk_is_deterministic() {
        let a = adjacency(&ring3(), EntropyMode::directed()).unwrap();
        let e = dominant_eig(&a, EIGEN_TOLERANCE, EIGEN_MAX_ITER).unwrap();
        let t = merw_transition(&a, e.lambda, &e.vector);
        let s = t.to_dense(&a);
        for i in 0..3 {
            assert!((s[i][(i + 1) % 3] - 1.0).abs() < 1e-12);
        }
        let rho = stationary(&a, &t).unwrap();
        assert!(rho.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn complete_graph_transition_is_uniform() {
        let a = adjacency(&complete5(), EntropyMode::directed()).unwrap();
        let e = dominant_eig(&a, EIGEN_TOLERANCE, EIGEN_MAX_ITER).unwrap();
        let t = merw_transition(&a, e.lambda, &e.vector);
        for (i, row) in t.to_dense(&a).iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                let want = if i == j { 0.0 } else { 0.25 };
                assert!((p - want).abs() < 1e-10);
            }
        }
        let rho = stationary(&a, &t).unwrap();
        assert!(rho.iter().all(|p| (p - 0.2).abs() < 1e-12));
    }

    #[test]
    fn relation_rows() {
        // node 0 with two out-edges of different relations, directed ring-ish
        let g = graph(3, 2, &[(0, 0, 1), (0, 1, 2), (1, 0, 0), (2, 0, 0)]);
        let a = adjacency(&g, EntropyMode::directed()).unwrap();
        let e = dominant_eig(&a, EIGEN_TOLERANCE, EIGEN_MAX_ITER).unwrap();
        let t = merw_transition(&a, e.lambda, &e.vector);
        let sr = relation_transition(&a, &t);
        assert_eq!(sr.rows[0].len(), 2);
        assert!((sr.rows[0][0].1 - 0.5).abs() < 1e-9);
        for row in &sr.rows {
            assert!((row.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-9);
        }

        // parallel edges: the pair's mass is split between both relations
        let g = graph(2, 2, &[(0, 0, 1), (0, 1, 1), (1, 0, 0)]);
        let a = adjacency(&g, EntropyMode::directed()).unwrap();
        let e = dominant_eig(&a, EIGEN_TOLERANCE, EIGEN_MAX_ITER).unwrap();
        let t = merw_transition(&a, e.lambda, &e.vector);
        let sr = relation_transition(&a, &t);
        assert_eq!(sr.rows[0], vec![(0, 0.5), (1, 0.5)]);
    }

    #[test]
    fn relation_entropy_examples() {
        let single = RelationTransition {
            rows: vec![vec![(0, 1.0)]; 3],
        };
        assert_eq!(relation_entropy_rate(&[0.2, 0.3, 0.5], &single, LogBase::Bits), 0.0);
        let coin = RelationTransition {
            rows: vec![vec![(0, 0.5), (1, 0.5)]; 2],
        };
        assert!((relation_entropy_rate(&[0.5, 0.5], &coin, LogBase::Bits) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn analytic_entropies() {
        let r = graph_search_entropy(&ring3(), EntropyMode::directed()).unwrap();
        assert_eq!(r.lambda, 1.0);
        assert_eq!(r.entropy_bits, 0.0);

        let r = graph_search_entropy(&complete5(), EntropyMode::directed()).unwrap();
        assert!((r.entropy_bits - 10.0).abs() < 1e-9);

        let r = graph_search_entropy(&ring3(), EntropyMode::default()).unwrap();
        assert!((r.log2_lambda - 1.0).abs() < 1e-9);
        assert!((r.relation_entropy_rate_bits - 1.0).abs() < 1e-9);
        assert!((r.entropy_bits - 6.0).abs() < 1e-9);
    }

    #[test]
    fn nats_mode_rescales() {
        let mode = EntropyMode {
            log_base: LogBase::Nats,
            ..EntropyMode::default()
        };
        let r = graph_search_entropy(&ring3(), mode).unwrap();
        assert!((r.entropy_in_base - 6.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!((r.entropy_bits - 6.0).abs() < 1e-9);
    }

    #[test]
    fn literal_rho_mass_is_reported() {
        let r = graph_search_entropy(&ring3(), EntropyMode::default()).unwrap();
        // ψ = (1,1,1)/√3 -> Σψ/‖ψ‖² = √3
        assert!((r.literal_rho_mass - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn empty_graph_is_an_error() {
        assert!(matches!(
            graph_search_entropy(&KnowledgeGraph::new(3, 1), EntropyMode::default()),
            Err(Error::EmptyComponent)
        ));
    }
}
