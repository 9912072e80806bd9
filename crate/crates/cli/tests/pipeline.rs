use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use xref_core::synthetic::{planted_corpus, PlantedConfig};

fn xref(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xref"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("xref runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = xref(out, args);
    assert!(o.status.success(), "xref {args:?} failed:\n{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn err(out: &Path, args: &[&str]) -> String {
    let o = xref(out, args);
    assert!(!o.status.success(), "xref {args:?} unexpectedly succeeded");
    String::from_utf8(o.stderr).unwrap()
}

/// A planted corpus written as TSV, plus ground truth linking passages
/// that share a dominant topic.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let cfg = PlantedConfig { docs: 120, vocab: 150, topics: 6, min_len: 20, max_len: 40, ..Default::default() };
    let planted = planted_corpus(&cfg).unwrap();
    let corpus = planted.corpus();
    let tsv = dir.join("corpus.tsv");
    let mut text = String::new();
    for p in corpus.passages() {
        text.push_str(&format!("{}\t{}\n", p.id, p.text));
    }
    std::fs::write(&tsv, text).unwrap();

    let top: Vec<usize> = planted.theta.iter().map(|t| xref_core::inference::argmax_topic(t)).collect();
    let mut gt = String::from("from\tto\n");
    for a in 0..top.len() {
        for b in 0..top.len() {
            if a != b && top[a] == top[b] && (a + b) % 3 == 0 {
                gt.push_str(&format!("{}\t{}\n", corpus.id(a), corpus.id(b)));
            }
        }
    }
    let gt_path = dir.join("gt.tsv");
    std::fs::write(&gt_path, gt).unwrap();
    (tsv, gt_path)
}

fn run_all(out: &Path, corpus: &Path) {
    ok(out, &["ingest", "--corpus", corpus.to_str().unwrap(), "--min-doc-freq", "1"]);
    ok(out, &["cooc"]);
    ok(out, &["anchors", "--method", "tandem", "--k", "6", "--seed", "7"]);
    ok(out, &["topics"]);
    ok(out, &["infer"]);
    ok(out, &["candidates", "--metric", "cosine", "--top-n", "500"]);
}

#[test]
fn stages_run_in_order_and_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, gt) = fixture(dir.path());
    let out = dir.path().join("out");
    run_all(&out, &corpus);

    let csv = std::fs::read_to_string(out.join("candidates-cosine.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "rank,from,to,score,method");
    assert_eq!(lines.len(), 501);
    assert!(lines[1].starts_with("1,Gen."));
    assert!(out.join("config.resolved.toml").exists());
    for stage in ["ingest", "cooc", "anchors", "topics", "infer", "candidates-cosine"] {
        assert!(out.join("manifests").join(format!("{stage}.json")).exists(), "{stage}");
    }

    let show = ok(&out, &["topics", "show", "--topic", "0", "--top", "5"]);
    assert_eq!(show.lines().count(), 5);

    let report = ok(&out, &["eval", "--gt", gt.to_str().unwrap(), "--method", "cosine"]);
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["predictions"], 500);
    assert_eq!(report["universe"], 120 * 119);
    assert!(report["pr_auc"].as_f64().unwrap() > 0.0);
    let curve = std::fs::read_to_string(out.join("curve-cosine.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "k,tp,fp,fn,tn,precision,recall,fpr");
    assert_eq!(curve.lines().count(), 501);

    let baseline = ok(&out, &["eval", "--gt", gt.to_str().unwrap(), "--method", "word-match"]);
    let baseline: serde_json::Value = serde_json::from_str(&baseline).unwrap();
    assert_eq!(baseline["ranked"], false);
    assert!(baseline["pr_auc"].is_null());

    ok(&out, &["baseline", "--method", "topic-match"]);
    let b = std::fs::read_to_string(out.join("baseline-topic-match.csv")).unwrap();
    assert!(b.lines().skip(1).all(|l| l.ends_with(",0,topic-match")));

    let tp = report["tp"].as_u64().unwrap();
    let cost = ok(&out, &["cost", "--curve", out.join("curve-cosine.csv").to_str().unwrap(), "--target-tp", &tp.to_string()]);
    let cost: serde_json::Value = serde_json::from_str(&cost).unwrap();
    let k = cost["k_needed"].as_u64().unwrap();
    assert!(k <= 500);
    assert!((cost["dollars"].as_f64().unwrap() - k as f64 * 0.05).abs() < 1e-9);
}

#[test]
fn rerun_is_byte_identical_and_skips_fresh_stages() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = fixture(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_all(&a, &corpus);
    run_all(&b, &corpus);
    for f in ["index.art", "cooc.art", "anchors.art", "topics.art", "theta.art", "candidates-cosine.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = xref(&a, &["anchors"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("up to date"));
    let before = std::fs::read(a.join("anchors.art")).unwrap();
    ok(&a, &["--force", "anchors"]);
    assert_eq!(std::fs::read(a.join("anchors.art")).unwrap(), before);
}

#[test]
fn missing_and_stale_stages_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = fixture(dir.path());
    let out = dir.path().join("out");
    let msg = err(&out, &["--config", "/dev/null", "cooc"]);
    assert!(msg.contains("no corpus"), "{msg}");

    ok(&out, &["ingest", "--corpus", corpus.to_str().unwrap(), "--min-doc-freq", "1"]);
    let msg = err(&out, &["anchors", "--k", "6"]);
    assert!(msg.contains("missing stage `cooc`"), "{msg}");

    ok(&out, &["cooc"]);
    ok(&out, &["anchors", "--k", "6"]);
    // A different seed changes the tandem anchors, so topics built on the
    // old anchors are stale.
    ok(&out, &["topics"]);
    let msg = err(&out, &["--seed", "99", "infer"]);
    assert!(msg.contains("stage `anchors` is stale"), "{msg}");

    std::fs::write(out.join("cooc.art"), b"tampered").unwrap();
    let msg = err(&out, &["anchors"]);
    assert!(msg.contains("cooc.art") && msg.contains("changed"), "{msg}");
}

#[test]
fn failed_stage_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = fixture(dir.path());
    let out = dir.path().join("out");
    ok(&out, &["ingest", "--corpus", corpus.to_str().unwrap(), "--min-doc-freq", "1"]);
    ok(&out, &["cooc"]);
    // More anchors than passages cannot be drawn.
    err(&out, &["anchors", "--k", "100000"]);
    let names: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(!names.iter().any(|n| n.contains("anchors") || n.contains(".tmp")), "{names:?}");
    assert!(!out.join("manifests/anchors.json").exists());
}

#[test]
fn check_reproduces_reported_false_positives() {
    let dir = tempfile::tempdir().unwrap();
    let report = ok(dir.path(), &["check"]);
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(v["relative_error"].as_f64().unwrap() < 0.005);
    assert_eq!(v["pass"], true);
    let o = xref(dir.path(), &["check", "--fpr", "0.25"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_roundtrips_through_resolved_output() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = fixture(dir.path());
    let cfg = dir.path().join("x.toml");
    std::fs::write(
        &cfg,
        "corpus = \"corpus.tsv\"\nseed = 5\n[vocab]\nmin_doc_freq = 1\n[anchors]\nmethod = \"gram-schmidt\"\nk = 6\ncandidate_min_df = 1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&out, &["--config", cfg.to_str().unwrap(), "ingest"]);
    let resolved = std::fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 5"));
    assert!(resolved.contains(corpus.to_str().unwrap()));
    // Later runs pick the resolved config up from the output directory.
    ok(&out, &["cooc"]);
    ok(&out, &["anchors"]);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifests/anchors.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["method"], "gram-schmidt");
    assert_eq!(m["info"]["k"], 6);
}
