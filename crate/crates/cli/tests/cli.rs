use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use screenkit::corpus::{write_jsonl, Citation, Corpus};
use screenkit::synth::{review_corpus, TextModel};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_screenkit"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).env_remove("SCREENKIT_WORKERS").output().expect("spawn");
    if !out.status.success() {
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}");
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_review(dir: &Path, name: &str, total: usize, relevant: usize, review: usize) -> PathBuf {
    let c = review_corpus(name, total, relevant, review, &TextModel::default(), review as u64 + 10);
    let path = dir.join(format!("{name}.jsonl"));
    write_jsonl(&c, &path).unwrap();
    path
}

/// The first `keep` citations keep their labels; the rest are unlabeled.
fn write_partly_labeled(dir: &Path, keep: usize) -> PathBuf {
    let c = review_corpus("part", 260, 30, 3, &TextModel::default(), 5);
    let cites: Vec<Citation> = c
        .citations()
        .iter()
        .enumerate()
        .map(|(i, x)| Citation::new(x.id.clone(), x.title.clone(), x.abstract_text.clone(), (i < keep).then_some(x.label.unwrap())))
        .collect();
    let path = dir.join("part.jsonl");
    write_jsonl(&Corpus::new("part", cites).unwrap(), &path).unwrap();
    path
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["evaluate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let d = tempfile::tempdir().unwrap();
    let c = write_review(d.path(), "a", 120, 12, 0);
    let out = run(&["evaluate", "--corpus", p(&c), "--methods", "99", "--out", p(&d.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_corpus_exit_2_names_path() {
    let d = tempfile::tempdir().unwrap();
    let missing = d.path().join("absent.jsonl");
    let out = run(&["evaluate", "--corpus", p(&missing), "--out", p(&d.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.jsonl"));
}

#[test]
fn ingest_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let c = write_review(d.path(), "a", 100, 10, 0);
    let out = d.path().join("x/clean.jsonl");
    let summary = ok(&["ingest", "--corpus", p(&c), "--out", p(&out)]);
    assert!(summary.contains("\"relevant\":10"));
    assert_eq!(fs::read_to_string(&c).unwrap(), fs::read_to_string(&out).unwrap());
    assert!(d.path().join("x/clean.jsonl.manifest.json").exists());
}

#[test]
fn train_then_score() {
    let d = tempfile::tempdir().unwrap();
    let c = write_review(d.path(), "a", 200, 20, 1);
    let model = d.path().join("m.json");
    ok(&["train", "--corpus", p(&c), "--method", "7", "--out", p(&model)]);
    assert!(d.path().join("m.json.vocab.tsv").exists());
    let scores = d.path().join("s.csv");
    ok(&["score", "--corpus", p(&c), "--model", p(&model), "--out", p(&scores)]);
    let text = fs::read_to_string(&scores).unwrap();
    assert!(text.starts_with("id,score,predicted,label\n"));
    assert_eq!(text.lines().count(), 201);
}

#[test]
fn featurize_and_embed() {
    let d = tempfile::tempdir().unwrap();
    let c = write_review(d.path(), "a", 150, 15, 2);
    let emb = d.path().join("e.tsv");
    ok(&["embed", "--corpus", p(&c), "--dim", "16", "--out", p(&emb)]);
    ok(&["featurize", "--corpus", p(&c), "--kind", "w2v-row", "--embeddings", p(&emb), "--out", p(&d.path().join("f"))]);
    let f = fs::read_to_string(d.path().join("f/features.csv")).unwrap();
    assert!(f.starts_with("row,id,col,value\n"));
    ok(&["featurize", "--corpus", p(&c), "--out", p(&d.path().join("g"))]);
    assert!(d.path().join("g/vocab.tsv").exists());
}

#[test]
fn rate_writes_sorted_ratings() {
    let d = tempfile::tempdir().unwrap();
    let c = write_partly_labeled(d.path(), 180);
    let out = d.path().join("ratings.csv");
    ok(&["rate", "--corpus", p(&c), "--labeled-field", "label", "--dim", "16", "--out", p(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,score,nv,fv,rs,ns,stars"));
    let scores: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(scores.len(), 80);
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    assert!(d.path().join("ratings.csv.manifest.json").exists());
}

#[test]
fn evaluate_rankgroups_report_and_replay() {
    let d = tempfile::tempdir().unwrap();
    let a = write_review(d.path(), "a", 160, 8, 0);
    let b = write_review(d.path(), "b", 160, 9, 1);
    let c = write_review(d.path(), "c", 160, 10, 2);
    let list = format!("{},{},{}", p(&a), p(&b), p(&c));
    let res = d.path().join("res");
    ok(&["evaluate", "--corpus", &list, "--methods", "2,5,7", "--reps", "2", "--folds", "2", "--out", p(&res)]);
    for f in ["grid.csv", "evaluations.csv", "datasets.csv", "manifest.json"] {
        assert!(res.join(f).exists(), "{f}");
    }
    let groups = d.path().join("groups.csv");
    ok(&["rankgroups", "--grid", p(&res.join("grid.csv")), "--metric", "auc", "--group", "low", "--out", p(&groups)]);
    let text = fs::read_to_string(&groups).unwrap();
    assert!(text.starts_with("metric,group,rank_group,method_ids,representative_value\n"));
    let covered: usize = text.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().split(' ').count()).sum();
    assert_eq!(covered, 3);
    let rep = d.path().join("rep");
    ok(&["report", "--kind", "metric-table", "--input", p(&res.join("grid.csv")), "--out", p(&rep)]);
    assert!(rep.join("metric_table.csv").exists());

    let again = d.path().join("again");
    ok(&["replay", "--manifest", p(&res.join("manifest.json")), "--out", p(&again)]);
    for f in ["grid.csv", "evaluations.csv", "datasets.csv"] {
        assert_eq!(fs::read(res.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_al_outputs() {
    let d = tempfile::tempdir().unwrap();
    let a = write_review(d.path(), "a", 300, 15, 0);
    let out = d.path().join("al");
    ok(&["simulate-al", "--corpus", p(&a), "--feature", "uni-bi", "--repeats", "3", "--out", p(&out)]);
    for f in ["traces_a.csv", "inclusion_a.svg", "aggregate.csv", "fractions.csv", "histogram.csv", "histogram.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let rep = d.path().join("rep");
    ok(&["report", "--kind", "inclusion-curve", "--input", p(&out.join("traces_a.csv")), "--out", p(&rep)]);
    let curve = fs::read_to_string(rep.join("inclusion.csv")).unwrap();
    let remaining: Vec<usize> = curve.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(remaining.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(remaining.last(), Some(&0));
    ok(&["report", "--kind", "al-histogram", "--input", p(&out.join("aggregate.csv")), "--out", p(&rep)]);
    let hist = fs::read_to_string(rep.join("histogram.csv")).unwrap();
    let total: usize = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 1);
}

#[test]
fn config_file_and_workers_do_not_change_results() {
    let d = tempfile::tempdir().unwrap();
    let a = write_review(d.path(), "a", 160, 12, 4);
    let cfg = d.path().join("c.toml");
    fs::write(&cfg, "[stats]\nreps = 2\nfolds = 2\n").unwrap();
    let one = d.path().join("one");
    let four = d.path().join("four");
    ok(&["evaluate", "--corpus", p(&a), "--methods", "5,7", "--config", p(&cfg), "--workers", "1", "--out", p(&one)]);
    ok(&["evaluate", "--corpus", p(&a), "--methods", "5,7", "--config", p(&cfg), "--workers", "4", "--out", p(&four)]);
    assert_eq!(fs::read(one.join("evaluations.csv")).unwrap(), fs::read(four.join("evaluations.csv")).unwrap());
    let ev = fs::read_to_string(one.join("evaluations.csv")).unwrap();
    assert_eq!(ev.lines().count(), 1 + 2 * 2 * 2 * 11);
    fs::write(&cfg, "[stats]\nrepetitions = 2\n").unwrap();
    let out = run(&["evaluate", "--corpus", p(&a), "--config", p(&cfg), "--out", p(&one)]);
    assert_eq!(out.status.code(), Some(1));
}
