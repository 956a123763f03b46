mod common;

use std::path::Path;
use std::process::{Command, Output};

use dimminer::session::{FeedbackSession, SessionOverrides, SessionStore};
use dimminer::store::{write_jsonl, Store};
use dimminer_core::selection::{PolarityMap, SelectionSource};
use serde_json::Value;
use tempfile::TempDir;

fn dimminer(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimminer"))
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .env_remove("DIMMINER_DATA_DIR")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Writes the planted corpus and its lexicon, and ingests it.
fn ingested() -> (TempDir, std::path::PathBuf) {
    let dir = TempDir::new().unwrap();
    let planted = common::planted("x", 7);
    let docs = dir.path().join("docs.jsonl");
    write_jsonl(&docs, &planted.docs).unwrap();
    let mut lex = String::new();
    for w in &planted.positive_words {
        lex.push_str(&format!("{w}\tpositive\n"));
    }
    for w in &planted.negative_words {
        lex.push_str(&format!("{w}\tnegative\n"));
    }
    let lexicon = dir.path().join("lexicon.tsv");
    std::fs::write(&lexicon, lex).unwrap();
    let data = dir.path().join("data");
    ok(&dimminer(&data, &["ingest", "--input", docs.to_str().unwrap()]));
    (dir, lexicon)
}

#[test]
fn pipeline_end_to_end() {
    let (dir, lexicon) = ingested();
    let data = dir.path().join("data");

    let first: Value = serde_json::from_str(&ok(&dimminer(&data, &["decompose"]))).unwrap();
    assert_eq!(first["cached"], false);
    let second: Value = serde_json::from_str(&ok(&dimminer(&data, &["decompose"]))).unwrap();
    assert_eq!(second["cached"], true);

    ok(&dimminer(&data, &["profiles"]));
    for i in 2..=5 {
        assert!(data.join("profiles").join(format!("e{i}.json")).is_file());
    }

    let baselines: Value =
        serde_json::from_str(&ok(&dimminer(&data, &["baselines", "--format", "json"]))).unwrap();
    assert_eq!(baselines.as_array().unwrap().len(), 3);
    let table = ok(&dimminer(&data, &["baselines", "--which", "top-m"]));
    assert!(table.lines().next().unwrap().starts_with("baseline"));
    let sweep: Value =
        serde_json::from_str(&ok(&dimminer(&data, &["baselines", "--irm-sweep", "5,20", "--format", "json"]))).unwrap();
    let ks: Vec<u64> = sweep.as_array().unwrap().iter().map(|r| r["irm_k"].as_u64().unwrap()).collect();
    assert_eq!(ks, vec![5, 20]);

    ok(&dimminer(&data, &["select", "--eig", "3", "--positive-list", "c2", "--session", "demo"]));
    let eval: Value =
        serde_json::from_str(&ok(&dimminer(&data, &["eval", "--session", "demo", "--format", "json"]))).unwrap();
    assert!(eval["accuracy_percent"].as_f64().unwrap() >= 90.0);

    ok(&dimminer(&data, &["lexicon-select", "--lexicon", lexicon.to_str().unwrap(), "--session", "demo"]));
    let sessions = SessionStore::new(&Store::new(&data));
    let session = sessions.load("demo").unwrap();
    assert_eq!(session.history.len(), 2);
    assert_eq!(session.selection.unwrap().source, SelectionSource::Lexicon);

    let cv: Value = serde_json::from_str(&ok(&dimminer(&data, &["eval", "--cv", "5", "--format", "json"]))).unwrap();
    assert_eq!(cv["folds"], 5);
}

#[test]
fn errors_are_one_json_line() {
    let (dir, _) = ingested();
    let data = dir.path().join("data");
    let out = dimminer(&data, &["select", "--eig", "9", "--session", "bad"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let last = stderr.lines().last().unwrap();
    let err: Value = serde_json::from_str(last).unwrap();
    assert_eq!(err["code"], "invalid_index");
    // the failed selection must not leave a session behind
    assert!(!SessionStore::new(&Store::new(&data)).exists("bad"));

    let out = dimminer(&dir.path().join("empty"), &["decompose"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().lines().last().unwrap()).unwrap();
    assert!(err["code"].is_string() && err["message"].is_string());
}

#[test]
fn config_file_and_flags() {
    let (dir, _) = ingested();
    let data = dir.path().join("data");
    let cfg = dir.path().join("dimminer.toml");
    std::fs::write(&cfg, "m = 6\nkmeans_runs = 3\n").unwrap();
    ok(&dimminer(&data, &["--config", cfg.to_str().unwrap(), "profiles"]));
    assert!(data.join("profiles").join("e6.json").is_file());

    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = dimminer(&data, &["--config", cfg.to_str().unwrap(), "decompose"]);
    assert!(!out.status.success());

    let out = dimminer(&data, &["--laplacian-kind", "irm", "decompose"]);
    assert!(!out.status.success());
    ok(&dimminer(&data, &["--laplacian-kind", "irm", "--irm-k", "10", "decompose"]));
}

#[test]
fn session_survives_a_round_trip() {
    let ws = common::workspace(&common::planted("x", 7));
    let dir = TempDir::new().unwrap();
    let sessions = SessionStore::new(&Store::new(dir.path()));
    let mut session = FeedbackSession::new(&ws, "rt", &SessionOverrides::default()).unwrap();
    session
        .record_selection(&ws, &[2], None, SelectionSource::Human, None)
        .unwrap();
    session
        .record_selection(&ws, &[3], Some(PolarityMap::c2_positive()), SelectionSource::Human, None)
        .unwrap();
    sessions.create(&session).unwrap();
    assert!(dir.path().join("sessions").join("rt").is_file());

    let loaded = sessions.load("rt").unwrap();
    // the trained classifiers are not persisted; everything else is exact
    assert_eq!(serde_json::to_value(&loaded).unwrap(), serde_json::to_value(&session).unwrap());
    assert_eq!(loaded.result, session.result);
    assert_eq!(loaded.replay(&ws).unwrap().as_ref(), loaded.result.as_ref());
    assert_eq!(loaded.history.len(), 2);
    assert_ne!(loaded.history[0].result.partition, loaded.history[1].result.partition);

    let (updated, ()) = sessions
        .update("rt", Some(2), |s| {
            s.record_selection(&ws, &[4], None, SelectionSource::Human, None).map(|_| ())
        })
        .unwrap();
    assert_eq!(updated.revision, 3);
    assert!(sessions.update("rt", Some(2), |_| Ok(())).is_err());
    assert_eq!(sessions.list().unwrap(), vec!["rt".to_string()]);
}
