mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{fb15k237_dir, fb15k237_sized, write_fb15k237_like, FB15K237_ENTITIES, FB15K237_RELATIONS, FB15K237_TRIPLES};
use kgscale::entropy::EntropyMode;
use kgscale::pipeline::{cmd_entropy, cmd_import, EntropyRecord, HeldoutFrom};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

/// With `KGSCALE_BLESS` set, `record` replaces the fixture first.
fn pinned(name: &str, record: &EntropyRecord) -> Option<EntropyRecord> {
    let path = Path::new(FIXTURES).join(name);
    if std::env::var_os("KGSCALE_BLESS").is_some() {
        let mut text = serde_json::to_string_pretty(record).unwrap();
        text.push('\n');
        std::fs::write(&path, text).unwrap();
    }
    let text = std::fs::read_to_string(path).ok()?;
    Some(serde_json::from_str(&text).expect("fixture parses"))
}

fn check_against(got: &EntropyRecord, want: &EntropyRecord) {
    let (g, w) = (&got.report, &want.report);
    assert_eq!(got.graph_sha256, want.graph_sha256, "fixture is for a different graph");
    assert_eq!(
        (g.symmetrized, g.inverse_relations, g.log_base),
        (w.symmetrized, w.inverse_relations, w.log_base)
    );
    assert_eq!(g.n_entities_used, w.n_entities_used);
    assert!(common::rel_close(g.entropy_bits, w.entropy_bits, 1e-9), "{} vs {}", g.entropy_bits, w.entropy_bits);
    assert!(common::rel_close(g.lambda, w.lambda, 1e-9));
}

#[test]
fn release_counts_and_pinned_entropy() {
    let Some(dir) = fb15k237_dir() else {
        eprintln!("FB15K-237 not found (set KGSCALE_FB15K237_DIR); skipping");
        return;
    };
    let out = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let m = cmd_import(
        &dir.join("train.txt"),
        &dir.join("valid.txt"),
        &dir.join("test.txt"),
        HeldoutFrom::Test,
        out.path(),
    )
    .unwrap();
    assert!(t.elapsed() < Duration::from_secs(30));
    assert_eq!((m.n_entities, m.n_relations, m.n_triples), (14_505, 237, 310_116));

    let r = cmd_entropy(&out.path().join("graph.tsv"), EntropyMode::default(), Some("fb15k-237")).unwrap();
    match pinned("fb15k237_entropy.json", &r) {
        Some(want) => check_against(&r, &want),
        None => eprintln!("no pinned value yet: {}", serde_json::to_string_pretty(&r).unwrap()),
    }
}

#[test]
fn release_sized_graph_imports_and_measures_quickly() {
    let tmp = tempfile::tempdir().unwrap();
    let g = fb15k237_sized(7);
    write_fb15k237_like(&g, tmp.path());

    let out = tmp.path().join("split");
    let t = Instant::now();
    let m = cmd_import(
        &tmp.path().join("train.txt"),
        &tmp.path().join("valid.txt"),
        &tmp.path().join("test.txt"),
        HeldoutFrom::Test,
        &out,
    )
    .unwrap();
    let import_time = t.elapsed();
    assert_eq!(
        (m.n_entities, m.n_relations, m.n_triples),
        (FB15K237_ENTITIES, FB15K237_RELATIONS, FB15K237_TRIPLES)
    );
    assert_eq!(m.duplicate_lines, 0);
    assert!(import_time < Duration::from_secs(30), "import took {import_time:?}");

    let t = Instant::now();
    let r = cmd_entropy(&out.join("graph.tsv"), EntropyMode::default(), Some("fb15k237-sized")).unwrap();
    let entropy_time = t.elapsed();
    assert!(entropy_time < Duration::from_secs(300), "entropy took {entropy_time:?}");
    assert!(r.report.max_row_defect < 1e-8);
    assert!(r.report.eigen_iterations < 10_000);
    check_against(&r, &pinned("fb15k237_sized_seed7.json", &r).expect("proxy fixture is checked in"));

    let d = cmd_entropy(&out.join("graph.tsv"), EntropyMode::directed(), None).unwrap();
    assert!(d.report.n_entities_used <= r.report.n_entities_used);
}
