//! End-to-end runs of the compiled binary: golden lines, exit codes,
//! format variants, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dpos-gov"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn fixture() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/events_1k.jsonl").to_string()
}

/// Ingest the bundled fixture into `dir` and return the dataset path.
fn ingest_fixture(dir: &Path) -> String {
    let out_dir = dir.join("ds");
    let out = run(&[
        "ingest",
        "--input",
        &fixture(),
        "--preset",
        "eosio",
        "--chain",
        "fixture",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "ingest failed: {}", stderr(&out));
    out_dir.to_str().unwrap().to_string()
}

#[test]
fn game_prints_the_published_resistance_values() {
    let out = run(&["game", "--preset", "steem", "--v", "4", "--pr", "100"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("R_A = 425"), "{text}");
    assert!(text.contains("17/4 (4.25)"), "{text}");

    let out = run(&["game", "--preset", "eosio", "--pr", "100"]);
    let text = stdout(&out);
    assert!(text.contains("R_A = 100"), "{text}");
    assert!(text.contains("15/7 (2.14)"), "{text}");

    let out = run(&[
        "game", "--preset", "eosio", "--c2c", "--v", "7", "--pr", "100",
    ]);
    let text = stdout(&out);
    assert!(text.contains("R_A = 300"), "{text}");
    assert!(text.contains("calls to action: attacker 3, resister 1"), "{text}");
}

#[test]
fn game_oracle_reports_agreement() {
    let out = run(&[
        "game", "--rule", "av", "--v", "1", "--t", "2", "--n", "3", "--pr", "6", "--oracle",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("oracle: MATCH, R_A = 6"), "{}", stdout(&out));
}

#[test]
fn exit_codes_follow_the_contract() {
    // validation errors exit 2
    let out = run(&["game", "--preset", "nano", "--pr", "5"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = run(&["game", "--preset", "tron", "--c2c", "--pr", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["game", "--rule", "av", "--v", "0", "--pr", "5"]);
    assert_eq!(out.status.code(), Some(2));

    // blown enumeration budget exits 3
    let out = run(&[
        "game",
        "--rule",
        "av",
        "--v",
        "2",
        "--t",
        "3",
        "--n",
        "4",
        "--pr",
        "500",
        "--oracle",
        "--max-strategies",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn malformed_log_lines_are_reported_with_their_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(
        &path,
        "{\"ts\":\"2022-01-01T00:00:00Z\",\"voter\":\"a\",\"kind\":\"stake\",\"coins\":\"5\"}\n\
         {\"ts\":\"2022-01-01T01:00:00Z\",\"voter\":\"a\",\"kind\":\"vote\"}\n",
    )
    .unwrap();
    let out = run(&["elect", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn empty_log_elects_an_empty_committee() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    std::fs::write(&path, "").unwrap();
    let out = run(&["elect", "--input", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("total committee score: 0"), "{text}");
}

#[test]
fn out_of_order_logs_need_the_sort_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unsorted.jsonl");
    std::fs::write(
        &path,
        "{\"ts\":\"2022-01-02T00:00:00Z\",\"voter\":\"a\",\"kind\":\"stake\",\"coins\":\"5\"}\n\
         {\"ts\":\"2022-01-01T00:00:00Z\",\"voter\":\"b\",\"kind\":\"stake\",\"coins\":\"5\"}\n",
    )
    .unwrap();
    let out = run(&["elect", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["elect", "--input", path.to_str().unwrap(), "--sort"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn dataset_runs_are_deterministic_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let ds = ingest_fixture(dir.path());
    for args in [
        vec!["elect", "--input", ds.as_str(), "--date", "2022-03-10"],
        vec!["resist", "--input", ds.as_str()],
        vec!["resist", "--input", ds.as_str(), "--format", "csv"],
        vec![
            "decay",
            "--input",
            ds.as_str(),
            "--choices",
            "av:1,av:15,cv",
            "--format",
            "csv",
        ],
        vec![
            "classify",
            "--input",
            ds.as_str(),
            "--event-time",
            "2022-03-10T00:00:00Z",
            "--leader",
            "v03",
        ],
    ] {
        let first = run(&args);
        let second = run(&args);
        assert!(first.status.success(), "{args:?}: {}", stderr(&first));
        assert_eq!(first.stdout, second.stdout, "{args:?}");
        assert_eq!(first.stderr, second.stderr, "{args:?}");
    }
}

#[test]
fn dataset_dirs_carry_their_replay_config() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("steem-ds");
    let out = run(&[
        "ingest",
        "--input",
        &fixture(),
        "--preset",
        "steem",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    // no --preset here: the stored steem parameters apply
    let out = run(&["resist", "--input", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stdout(&out).starts_with("# rule=approval v=30 n=20 t=17 lambda=2000 delta=1"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn identity_design_choice_reproduces_the_resist_series() {
    let dir = tempfile::tempdir().unwrap();
    let ds = ingest_fixture(dir.path());
    let resist = run(&["resist", "--input", &ds, "--format", "csv"]);
    let decay = run(&[
        "decay", "--input", &ds, "--choices", "av:30", "--format", "csv",
    ]);
    assert!(resist.status.success() && decay.status.success());

    // date -> resistance from the resist series
    let resist_text = stdout(&resist);
    let mut expected = Vec::new();
    for line in resist_text.lines().skip(2) {
        let cells: Vec<&str> = line.split(',').collect();
        expected.push((cells[0].to_string(), cells[2].to_string()));
    }
    // the (AV,30) rows of the decay grid carry the same values
    let decay_text = stdout(&decay);
    let mut got = Vec::new();
    for line in decay_text.lines() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() == 4 && cells[0] == "av:30" && cells[2] == "resistance" {
            got.push((cells[1].to_string(), cells[3].to_string()));
        }
    }
    assert!(!expected.is_empty());
    assert_eq!(expected, got);
}

#[test]
fn json_output_parses_and_embeds_the_config() {
    let out = run(&[
        "game", "--preset", "steem", "--v", "4", "--pr", "100", "--format", "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["config"]["max_votes"], 4);
    assert_eq!(doc["config"]["lambda"], "2000");
    assert_eq!(doc["equilibrium"]["resistance"], 425);

    let dir = tempfile::tempdir().unwrap();
    let ds = ingest_fixture(dir.path());
    let out = run(&["elect", "--input", &ds, "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["date"], "2022-03-18");
    assert!(doc["committee"]["members"].as_array().unwrap().len() <= 21);
}

#[test]
fn resist_rejects_dates_outside_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let ds = ingest_fixture(dir.path());
    let out = run(&["resist", "--input", &ds, "--start", "2021-01-01"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn classify_rejects_unknown_leaders() {
    let dir = tempfile::tempdir().unwrap();
    let ds = ingest_fixture(dir.path());
    let out = run(&[
        "classify",
        "--input",
        &ds,
        "--event-time",
        "2022-03-10T00:00:00Z",
        "--leader",
        "nobody",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nobody"), "{}", stderr(&out));
}

#[test]
fn out_dir_collects_file_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let ds = ingest_fixture(dir.path());
    let art = dir.path().join("artifacts");
    let out = run(&[
        "resist",
        "--input",
        &ds,
        "--out",
        art.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(art.join("resist.csv")).unwrap();
    assert!(csv.starts_with("date,threshold,resistance,risk,reachable\n"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(art.join("resist.json")).unwrap()).unwrap();
    assert_eq!(json["days"].as_array().unwrap().len(), 18);
}
