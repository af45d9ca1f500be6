use std::collections::BTreeSet;

use kgscale::corpus::{build_eval_set, DistractorMode};
use kgscale::deduction::Deducer;
use kgscale::graph::{ccdf, graph_stats};
use kgscale::graphgen::{generate, GraphConfig};
use kgscale::{Label, Triple};

/// Independent single-answer check: ten distinct options, exactly one of
/// which completes the question inside the full closed graph.
fn single_answer(q: &kgscale::corpus::EvalQuestion, full: &kgscale::KnowledgeGraph) -> bool {
    let distinct: BTreeSet<_> = q.options.iter().collect();
    let correct: Vec<usize> = (0..q.options.len())
        .filter(|&i| full.contains(&Triple::new(q.head.0, q.relation.0, q.options[i].0)))
        .collect();
    q.options.len() == 10 && distinct.len() == 10 && correct == [q.answer_index]
}

#[test]
fn small_preset_contract() {
    let cfg = GraphConfig::small().with_seed(0);
    let g = generate(&cfg).unwrap();
    let full = &g.grown.graph;
    let split = &g.split;

    assert_eq!(full.n_entities(), 1000);
    assert_eq!(g.grown.type_violations(&g.catalog).count(), 0);
    assert!(full.check_consistency().is_ok());

    assert_eq!(split.train.len(), 10_000);
    let (a, d, u) = split.train.label_counts();
    assert_eq!(u, 0);
    let gamma = d as f64 / a as f64;
    assert!((gamma - 0.5).abs() <= 0.05, "gamma {gamma}");
    assert!((split.achieved_gamma - gamma).abs() < 1e-12);
    for t in split.train.triples() {
        assert!(full.contains(t));
        assert_eq!(split.train.label(t), full.label(t));
    }

    // held out: deducible, unseen, certified by a path of training triples
    assert_eq!(split.heldout.len(), 1000);
    let mut deducer = Deducer::new(&split.train, &g.rules);
    for (t, w) in split.heldout.iter().zip(&split.witnesses) {
        assert_eq!(full.label(t), Some(Label::Deducible));
        assert!(!split.train.contains(t));
        assert_eq!(w.conclusion(), *t);
        assert_eq!(g.rules.rule_for(t.relation), Some(&w.rule));
        for b in w.body_triples() {
            assert!(split.train.contains(&b), "{t}: body {b} not in train");
        }
        assert!(deducer.witness(t).is_some());
    }

    let eval = build_eval_set(&split.heldout, full, 1000, DistractorMode::AllEntities, 0).unwrap();
    assert_eq!(eval.questions.len(), 1000);
    assert!(eval.skipped.is_empty());
    for q in &eval.questions {
        assert!(single_answer(q, full), "{q:?}");
    }
}

#[test]
fn degree_distribution_is_heavy_tailed() {
    for seed in [0, 1] {
        let g = generate(&GraphConfig::small().with_seed(seed)).unwrap();
        let stats = graph_stats(&g.grown.graph);
        let c = ccdf(&stats.degree_histogram);
        assert_eq!(c[0].1, 1.0);
        for w in c.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        let (lo, hi) = (c.first().unwrap().0, c.last().unwrap().0);
        assert!(hi >= 100 * lo.max(1), "seed {seed}: degrees {lo}..{hi}");
    }
}

#[test]
fn same_seed_same_graph() {
    let cfg = GraphConfig::with_sizes(2_000, 300, 8, 3, 0.5).with_seed(7);
    let mut small = cfg.clone();
    small.heldout = 100;
    let a = generate(&small).unwrap();
    let b = generate(&small).unwrap();
    assert_eq!(a.rules, b.rules);
    assert_eq!(a.grown.graph.triples(), b.grown.graph.triples());
    assert_eq!(a.split.train.triples(), b.split.train.triples());
    assert_eq!(a.split.heldout, b.split.heldout);

    let c = generate(&small.clone().with_seed(8)).unwrap();
    assert_ne!(a.grown.graph.triples(), c.grown.graph.triples());
}
