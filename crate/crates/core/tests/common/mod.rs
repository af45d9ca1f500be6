//! Reference implementations used by several test targets. Each one is
//! written from the definitions alone and shares no code with the crate
//! beyond the graph container.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use kgscale::rules::{Rule, RuleSet};
use kgscale::{KnowledgeGraph, Label, Triple};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random relation-typed multigraph with self-loops and parallel edges.
pub fn random_multigraph(seed: u64, max_nodes: usize, max_relations: u32) -> KnowledgeGraph {
    let mut r = rng(seed);
    let n = r.random_range(2..=max_nodes);
    let nr = r.random_range(1..=max_relations);
    let m = r.random_range(1..=3 * n);
    let mut g = KnowledgeGraph::new(n, nr as usize);
    // a cycle through a few nodes keeps a nontrivial strongly connected part
    let k = r.random_range(2..=n) as u32;
    for i in 0..k {
        g.insert(Triple::new(i, r.random_range(0..nr), (i + 1) % k), Label::Atomic);
    }
    for _ in 0..m {
        let t = Triple::new(
            r.random_range(0..n as u32),
            r.random_range(0..nr),
            r.random_range(0..n as u32),
        );
        g.insert(t, Label::Atomic);
    }
    g
}

// ---------------------------------------------------------------- entropy

#[derive(Clone, Debug)]
pub struct DenseEntropy {
    pub n_used: usize,
    pub lambda: f64,
    pub relation_rate_bits: f64,
    pub entropy_bits: f64,
}

/// Dense reference: component by BFS / reachability, Perron pair by full
/// eigendecomposition (symmetric) or Schur eigenvalues plus an SVD null
/// vector (directed), stationary distribution by a linear solve.
pub fn dense_entropy(g: &KnowledgeGraph, symmetrized: bool, inverse: bool) -> Option<DenseEntropy> {
    let n = g.n_entities();
    let nr = g.n_relations();
    let edges: Vec<(usize, usize, usize)> = g
        .triples()
        .iter()
        .flat_map(|t| {
            let (h, r, tl) = (t.head.index(), t.relation.index(), t.tail.index());
            let mut v = vec![(h, tl, r)];
            if symmetrized {
                v.push((tl, h, if inverse { r + nr } else { r }));
            }
            v
        })
        .collect();

    let members = if symmetrized {
        largest_connected(n, &edges)
    } else {
        largest_strong(n, &edges)
    };
    let index: Vec<Option<usize>> = {
        let mut idx = vec![None; n];
        for (k, &e) in members.iter().enumerate() {
            idx[e] = Some(k);
        }
        idx
    };
    let k = members.len();
    let n_labels = if symmetrized && inverse { 2 * nr } else { nr };
    let mut a = DMatrix::<f64>::zeros(k, k);
    // label counts per (i, j)
    let mut lab = vec![vec![vec![0.0; n_labels]; k]; k];
    for &(u, v, l) in &edges {
        if let (Some(i), Some(j)) = (index[u], index[v]) {
            a[(i, j)] += 1.0;
            lab[i][j][l] += 1.0;
        }
    }
    if a.iter().all(|&x| x == 0.0) {
        return None;
    }

    let (lambda, psi) = if symmetrized {
        let eig = a.clone().symmetric_eigen();
        let (imax, &lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .unwrap();
        let v: DVector<f64> = eig.eigenvectors.column(imax).map(f64::abs);
        (lambda, v)
    } else {
        let lambda = spectral_radius(&a);
        (lambda, null_vector(&(a.clone() - DMatrix::identity(k, k) * lambda)))
    };

    let mut s = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            s[(i, j)] = a[(i, j)] * psi[j] / (lambda * psi[i]);
        }
    }
    // (Sᵀ - I) ρ = 0 with Σρ = 1 replacing the last equation
    let mut m = s.transpose() - DMatrix::identity(k, k);
    let mut rhs = DVector::zeros(k);
    for j in 0..k {
        m[(k - 1, j)] = 1.0;
    }
    rhs[k - 1] = 1.0;
    let rho = m.lu().solve(&rhs).expect("stationary system is regular");

    let mut hr = 0.0;
    for i in 0..k {
        for l in 0..n_labels {
            let p: f64 = (0..k)
                .filter(|&j| a[(i, j)] > 0.0)
                .map(|j| s[(i, j)] * lab[i][j][l] / a[(i, j)])
                .sum();
            if p > 0.0 {
                hr -= rho[i] * p * p.log2();
            }
        }
    }
    Some(DenseEntropy {
        n_used: k,
        lambda,
        relation_rate_bits: hr,
        entropy_bits: k as f64 * (lambda.log2() + hr),
    })
}

/// Largest eigenvalue modulus from a real Schur form. Unbounded QR sweeps
/// can stall on some matrices, so the decomposition is capped and retried on
/// shifted or transposed copies, which have the same spectrum up to the shift.
fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    let k = a.nrows();
    for (shift, transpose) in [(0.0, false), (0.0, true), (0.375, false), (1.25, true)] {
        let m = if transpose { a.transpose() } else { a.clone() } + DMatrix::identity(k, k) * shift;
        if let Some(schur) = nalgebra::Schur::try_new(m, f64::EPSILON, 10_000) {
            return schur
                .complex_eigenvalues()
                .iter()
                .map(|z| (z - shift).norm())
                .fold(0.0, f64::max);
        }
    }
    panic!("Schur decomposition did not converge");
}

/// Right singular vector of the smallest singular value, made positive.
fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.unwrap();
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .unwrap();
    let v: DVector<f64> = v_t.row(imin).transpose();
    let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
    v * sign
}

/// Ties between equal sizes go to the class holding the smallest entity.
fn pick_largest(classes: Vec<Vec<usize>>) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    for mut c in classes {
        c.sort_unstable();
        if c.len() > best.len() || (c.len() == best.len() && c[0] < best[0]) {
            best = c;
        }
    }
    best
}

fn largest_connected(n: usize, edges: &[(usize, usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, _) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut classes = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut class = vec![s];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    class.push(v);
                    q.push_back(v);
                }
            }
        }
        classes.push(class);
    }
    pick_largest(classes)
}

fn largest_strong(n: usize, edges: &[(usize, usize, usize)]) -> Vec<usize> {
    // reflexive-transitive reachability, Floyd–Warshall style
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(u, v, _) in edges {
        reach[u][v] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &class {
            assigned[j] = true;
        }
        classes.push(class);
    }
    pick_largest(classes)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

// -------------------------------------------------------------- deduction

/// All entity paths `e0 -b1-> e1 ... -bn-> en` in `g`, by plain recursion.
pub fn enumerate_paths(g: &KnowledgeGraph, body: &[kgscale::RelationId]) -> Vec<Vec<u32>> {
    fn walk(g: &KnowledgeGraph, body: &[kgscale::RelationId], path: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let depth = path.len() - 1;
        if depth == body.len() {
            out.push(path.clone());
            return;
        }
        let here = *path.last().unwrap();
        for t in g.triples() {
            if t.head.0 == here && t.relation == body[depth] {
                path.push(t.tail.0);
                walk(g, body, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for e in 0..g.n_entities() as u32 {
        walk(g, body, &mut vec![e], &mut out);
    }
    out
}

/// Fixpoint by rescanning every rule over the whole graph until nothing new
/// appears.
pub fn naive_closure(g: &KnowledgeGraph, rs: &RuleSet) -> BTreeSet<Triple> {
    let mut cur = g.clone();
    loop {
        let mut new = Vec::new();
        for rule in rs.rules() {
            for p in enumerate_paths(&cur, &rule.body) {
                let t = Triple::new(p[0], rule.head.0, *p.last().unwrap());
                if !cur.contains(&t) {
                    new.push(t);
                }
            }
        }
        if new.is_empty() {
            return cur.triples().iter().copied().collect();
        }
        for t in new {
            cur.insert(t, Label::Deducible);
        }
    }
}

/// `t` follows from the closure `closed` by one application of its rule.
pub fn naive_deducible(t: &Triple, closed: &KnowledgeGraph, rule: &Rule) -> bool {
    enumerate_paths(closed, &rule.body)
        .iter()
        .any(|p| p[0] == t.head.0 && *p.last().unwrap() == t.tail.0)
}

/// Random acyclic rule set over `nr` relations by a random topological
/// order, independent of the crate's generator.
pub fn random_rules(r: &mut ChaCha8Rng, nr: u32, n_rules: usize) -> RuleSet {
    let mut order: Vec<u32> = (0..nr).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, r.random_range(0..=i));
    }
    let mut heads = HashSet::new();
    let mut rules = Vec::new();
    for _ in 0..n_rules {
        let pos = r.random_range(0..nr as usize - 1);
        let head = order[pos];
        if !heads.insert(head) {
            continue;
        }
        let later = &order[pos + 1..];
        let len = r.random_range(1..=3);
        let mut body: Vec<u32> = Vec::new();
        for _ in 0..len {
            body.push(later[r.random_range(0..later.len())]);
        }
        rules.push(Rule::new(head, &body));
    }
    RuleSet::new(rules)
}

// ------------------------------------------------------------------- OLS

/// Normal-equations solution `β = (XᵀX)⁻¹ Xᵀ y` with `X = [1, x]`; returns
/// `(intercept, slope, slope standard error)`.
pub fn normal_equations(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
    let y = DVector::from_column_slice(ys);
    let xtx_inv = (x.transpose() * &x).try_inverse().expect("regular design");
    let beta = &xtx_inv * x.transpose() * &y;
    let resid = &y - &x * &beta;
    let sigma2 = resid.norm_squared() / (n as f64 - 2.0);
    (beta[0], beta[1], (sigma2 * xtx_inv[(1, 1)]).sqrt())
}

/// 97.5% quantile of Student's t with 18 degrees of freedom, from tables.
pub const T_975_DF18: f64 = 2.100_922_040_240_96;

pub const FB15K237_ENTITIES: usize = 14_505;
pub const FB15K237_RELATIONS: usize = 237;
pub const FB15K237_TRIPLES: usize = 310_116;
/// train / valid / test line counts of the public release
pub const FB15K237_SPLIT: [usize; 3] = [272_115, 17_535, 20_466];

/// `KGSCALE_FB15K237_DIR`, else `data/fb15k-237` at the workspace root,
/// when it holds `train.txt`, `valid.txt` and `test.txt`.
pub fn fb15k237_dir() -> Option<std::path::PathBuf> {
    let dir = match std::env::var_os("KGSCALE_FB15K237_DIR") {
        Some(d) => std::path::PathBuf::from(d),
        None => std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fb15k-237"),
    };
    ["train.txt", "valid.txt", "test.txt"]
        .iter()
        .all(|f| dir.join(f).is_file())
        .then_some(dir)
}

/// Random graph with the FB15K-237 entity, relation and triple counts and a
/// skewed degree profile. A path through every entity keeps them all
/// present.
pub fn fb15k237_sized(seed: u64) -> KnowledgeGraph {
    let mut r = rng(seed);
    let n = FB15K237_ENTITIES as u32;
    let nr = FB15K237_RELATIONS as u32;
    let mut g = KnowledgeGraph::new(n as usize, nr as usize);
    for i in 0..n - 1 {
        g.insert(Triple::new(i, i % nr, i + 1), Label::Atomic);
    }
    let skewed = |r: &mut ChaCha8Rng| (n as f64 * r.random::<f64>().powi(3)) as u32;
    while g.len() < FB15K237_TRIPLES {
        let t = Triple::new(skewed(&mut r), r.random_range(0..nr), skewed(&mut r));
        g.insert(t, Label::Atomic);
    }
    g
}

/// Writes `g` as three named TSV files split like the public release.
pub fn write_fb15k237_like(g: &KnowledgeGraph, dir: &std::path::Path) {
    use std::io::Write;
    let mut triples = g.triples().iter();
    for (name, count) in ["train.txt", "valid.txt", "test.txt"].iter().zip(FB15K237_SPLIT) {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name)).unwrap());
        for t in triples.by_ref().take(count) {
            writeln!(f, "/m/{:x}\t/rel/{}\t/m/{:x}", t.head.0, t.relation.0, t.tail.0).unwrap();
        }
    }
}

/// Sparse random graph over few relations, with rules, so that rule bodies
/// actually fire.
pub fn random_rule_case(seed: u64) -> (KnowledgeGraph, RuleSet) {
    let mut r = rng(seed);
    let n = r.random_range(2..=50);
    let nr = r.random_range(2..=6u32);
    let n_rules = r.random_range(1..=nr as usize - 1);
    let rs = random_rules(&mut r, nr, n_rules);
    let m = r.random_range(1..=2 * n);
    let mut g = KnowledgeGraph::new(n, nr as usize);
    for _ in 0..m {
        let t = Triple::new(r.random_range(0..n as u32), r.random_range(0..nr), r.random_range(0..n as u32));
        g.insert(t, Label::Atomic);
    }
    (g, rs)
}
