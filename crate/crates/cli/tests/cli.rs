use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kgscale(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgscale"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL: &str = "\
seed = 3
n_triples = 2000
n_entities = 300
n_relations = 8
n_rules = 3
gamma = 0.5
heldout = 100
eval_questions = 100
";

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn generate_and_emit_twice_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    fs::write(p.join("small.toml"), SMALL).unwrap();
    for run in ["a", "b"] {
        ok(kgscale(&["generate", "--config", "small.toml", "--out", run], p));
        ok(kgscale(&["emit", "--config", "small.toml", "--split", run], p));
    }
    let (a, b) = (files(&p.join("a")), files(&p.join("b")));
    assert_eq!(a, b);
    let names: Vec<_> = a.iter().map(|f| f.0.as_str()).collect();
    for want in ["config.toml", "corpus.txt", "eval.jsonl", "manifest.json", "vocab.txt", "witnesses.jsonl"] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }

    // --seed overrides the config
    ok(kgscale(&["generate", "--config", "small.toml", "--seed", "4", "--out", "c"], p));
    assert_ne!(fs::read(p.join("a/graph.tsv")).unwrap(), fs::read(p.join("c/graph.tsv")).unwrap());
}

#[test]
fn config_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    let no_seed: String = SMALL.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(p.join("no_seed.toml"), no_seed).unwrap();
    let out = kgscale(&["generate", "--config", "no_seed.toml", "--out", "x"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("seed"), "{}", stderr(&out));

    fs::write(p.join("typo.toml"), format!("{SMALL}gamma_mod = \"ratio\"\n")).unwrap();
    let out = kgscale(&["generate", "--config", "typo.toml", "--out", "x"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("gamma_mod"));

    let out = kgscale(&["generate", "--out", "x"], p);
    assert_eq!(out.status.code(), Some(1));

    let out = kgscale(&["emit", "--split", "missing"], p);
    assert_eq!(out.status.code(), Some(1));

    // clap usage errors
    assert_eq!(kgscale(&["frobnicate"], p).status.code(), Some(2));
}

fn ring(n: usize) -> String {
    (0..n).map(|i| format!("n{i}\tnext\tn{}\n", (i + 1) % n)).collect()
}

#[test]
fn entropy_of_rings() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    fs::write(p.join("ring.tsv"), ring(3)).unwrap();

    let out = ok(kgscale(&["entropy", "ring.tsv", "--mode", "directed"], p));
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["entropy_bits"], 0.0);
    assert_eq!(rec["symmetrized"], false);

    let out = ok(kgscale(&["entropy", "ring.tsv", "--graph-id", "r3", "--out", "r3.json"], p));
    assert!(out.stdout.is_empty());
    let rec: serde_json::Value = serde_json::from_slice(&fs::read(p.join("r3.json")).unwrap()).unwrap();
    assert_eq!(rec["graph_id"], "r3");
    assert!((rec["entropy_bits"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    assert_eq!(rec["log_base"], "bits");

    let out = ok(kgscale(&["entropy", "ring.tsv", "--unit", "nats"], p));
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let nats = rec["entropy_in_base"].as_f64().unwrap();
    assert!((nats - 6.0 * std::f64::consts::LN_2).abs() < 1e-9);

    assert_eq!(kgscale(&["entropy", "ring.tsv", "--mode", "sideways"], p).status.code(), Some(1));
    fs::write(p.join("bad.tsv"), "a\tb\n").unwrap();
    let out = kgscale(&["entropy", "bad.tsv"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.tsv:1:"), "{}", stderr(&out));
}

#[test]
fn fit_and_predict_over_three_sweeps() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    let mut results = String::new();
    let mut entropies = Vec::new();
    for n in [50usize, 100, 200] {
        let id = format!("ring{n}");
        fs::write(p.join(format!("{id}.tsv")), ring(n)).unwrap();
        let h_file = format!("{id}.json");
        ok(kgscale(&["entropy", &format!("{id}.tsv"), "--graph-id", &id, "--out", &h_file], p));
        entropies.push(h_file);
        // symmetrized ring: H = 2n, so the optimum sits on 124 H + 10000
        let best = 124 * 2 * n as u64 + 10_000;
        for (size, loss) in [(best / 2, 2.0), (best, 1.0), (best * 2, 1.5)] {
            for steps in [500, 1000] {
                let loss = if steps == 500 { loss + 1.0 } else { loss };
                results.push_str(&format!(
                    "{{\"model_params\":{size},\"train_steps\":{steps},\"train_loss\":{loss},\"eval_loss\":{loss},\"eval_acc\":0.2,\"graph_id\":\"{id}\"}}\n"
                ));
            }
        }
    }
    fs::write(p.join("runs.jsonl"), results).unwrap();

    let mut args = vec!["fit", "--results", "runs.jsonl", "--entropy"];
    args.extend(entropies.iter().map(String::as_str));
    args.extend(["--out", "fit"]);
    let out = ok(kgscale(&args, p));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bits per parameter"));
    let fit: serde_json::Value = serde_json::from_slice(&fs::read(p.join("fit/fit.json")).unwrap()).unwrap();
    assert!((fit["slope_params_per_bit"].as_f64().unwrap() - 124.0).abs() < 1e-6);
    assert!((fit["r2"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(fit["n_points"], 3);
    let curves = fs::read_to_string(p.join("fit/loss_curves.jsonl")).unwrap();
    assert_eq!(curves.lines().count(), 9);

    let out = ok(kgscale(&["predict", "--fit", "fit/fit.json", "--entropy", "ring100.json"], p));
    let preds: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(preds[0]["prediction"]["predicted_params"], 34_800);
}

#[test]
fn empty_or_malformed_results_are_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    fs::write(p.join("ring.tsv"), ring(3)).unwrap();
    ok(kgscale(&["entropy", "ring.tsv", "--graph-id", "g", "--out", "h.json"], p));

    fs::write(p.join("empty.jsonl"), "").unwrap();
    let out = kgscale(&["fit", "--results", "empty.jsonl", "--entropy", "h.json", "--out", "f"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no records"), "{}", stderr(&out));

    fs::write(p.join("extra.jsonl"), "{\"model_params\":1,\"train_steps\":1,\"train_loss\":1,\"eval_loss\":1,\"eval_acc\":0.1,\"graph_id\":\"g\",\"flops\":3}\n").unwrap();
    let out = kgscale(&["fit", "--results", "extra.jsonl", "--entropy", "h.json", "--out", "f"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn stats_and_import() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    fs::write(p.join("train.txt"), "a\tr\tb\nb\tr\tc\na\tr\tb\n").unwrap();
    fs::write(p.join("valid.txt"), "c\ts\ta\n").unwrap();
    fs::write(p.join("test.txt"), "a\ts\tc\nb\tr\tc\n").unwrap();
    let out = ok(kgscale(
        &["import", "--train", "train.txt", "--valid", "valid.txt", "--test", "test.txt", "--out", "imp"],
        p,
    ));
    assert!(stderr(&out).contains("N_e = 3, N_r = 2, N = 4"), "{}", stderr(&out));
    // valid joins the training triples; test minus train is held out
    let train = fs::read_to_string(p.join("imp/train.tsv")).unwrap();
    assert_eq!(train, "a\tr\tb\nb\tr\tc\nc\ts\ta\n");
    let heldout = fs::read_to_string(p.join("imp/heldout.tsv")).unwrap();
    assert_eq!(heldout, "a\ts\tc\n");

    ok(kgscale(
        &[
            "import", "--train", "train.txt", "--valid", "valid.txt", "--test", "test.txt", "--heldout-from",
            "valid-and-test", "--out", "imp2",
        ],
        p,
    ));
    assert_eq!(fs::read_to_string(p.join("imp2/train.tsv")).unwrap(), "a\tr\tb\nb\tr\tc\n");
    assert_eq!(fs::read_to_string(p.join("imp2/heldout.tsv")).unwrap(), "c\ts\ta\na\ts\tc\n");

    let out = ok(kgscale(&["stats", "imp/graph.tsv"], p));
    let s: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["n_triples"], 4);
    assert_eq!(s["component_sizes"], serde_json::json!([3]));
}
