use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn clustervote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clustervote"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn table2_has_fifteen_rows() {
    let o = clustervote(&["tables", "--which", "2", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sc,ao,p_cheat,display"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.contains(&"4,2,0.2500,0.25"));
}

#[test]
fn table5_csv_header_is_fixed() {
    let o = clustervote(&["tables", "--which", "5", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("ao,nt,cs,attackers,p_reveal,discovered"));
    assert_eq!(stdout(&o).lines().count(), 9);
}

#[test]
fn tables_json_parses() {
    for which in ["2", "3", "4", "5"] {
        let o = clustervote(&["tables", "--which", which, "--format", "json"]);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(v.as_array().is_some_and(|a| !a.is_empty()));
    }
}

#[test]
fn unknown_table_is_a_usage_error() {
    assert_eq!(clustervote(&["tables", "--which", "6"]).status.code(), Some(2));
    assert_eq!(clustervote(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn zero_trials_is_an_empty_report() {
    let o = clustervote(&["simulate", "--trials", "0"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["trials"], 0);
    assert_eq!(v["attempts"], 0);
}

#[test]
fn simulate_is_byte_identical_per_seed() {
    let args = ["simulate", "--sc", "8", "--ao", "2", "--dn", "1", "--trials", "300", "--seed", "5"];
    let a = clustervote(&args);
    let b = clustervote(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = clustervote(&["simulate", "--sc", "8", "--ao", "2", "--dn", "1", "--trials", "300", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("campaign.toml");
    fs::write(
        &cfg,
        "trials = 50\nseed = 3\n\n[cluster]\nsc = 6\nao = 2\n\n[mix]\ndn = 1\nattack = \"cheat2\"\n",
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let o = clustervote(&["simulate", "--config", path, "--trials", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["trials"], 40);
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["config"]["cluster"]["sc"], 6);
    assert_eq!(v["config"]["mix"]["attack"], "cheat2");

    fs::write(&cfg, "trials = 5\nbogus = 1\n").unwrap();
    assert_eq!(clustervote(&["simulate", "--config", path]).status.code(), Some(2));
    assert_eq!(clustervote(&["simulate", "--sc", "1"]).status.code(), Some(2));
}

#[test]
fn simulate_csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let o = clustervote(&[
        "simulate",
        "--sc",
        "5",
        "--ao",
        "2",
        "--trials",
        "20",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("metric,value\n"));
    assert!(text.contains("\ntrials,20\n"));
}

#[test]
fn scenario_arithmetic() {
    let o = clustervote(&["scenario", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("concurrent_voters,122222"));
    assert!(text.contains("required_concurrent_cheaters,488889"));
    let zero = stdout(&clustervote(&["scenario", "--dn", "0", "--format", "csv"]));
    assert!(zero.contains("required_concurrent_cheaters,0"));
    assert_eq!(clustervote(&["scenario", "--dn", "25"]).status.code(), Some(2));
}

#[test]
fn scenario_simulation_is_appended() {
    let o = clustervote(&["scenario", "--simulate", "--slots", "40", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["simulation"]["slots"], 40);
    assert!(v["simulation"]["altered_votes_scaled"].is_array());
}

fn generate(dir: &Path) -> (String, String) {
    let board = dir.join("board.jsonl");
    let census = dir.join("census.json");
    let o = clustervote(&[
        "election",
        "--voters",
        "100",
        "--cs",
        "25",
        "--board",
        board.to_str().unwrap(),
        "--census",
        census.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("clusters_published"));
    (board.to_str().unwrap().into(), census.to_str().unwrap().into())
}

#[test]
fn clean_board_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let (board, census) = generate(dir.path());
    let o = clustervote(&["verify", &board, "--census", &census]);
    assert!(o.status.success(), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["findings"].as_array().unwrap().len(), 0);
    assert_eq!(v["voters_counted"], 100);
    assert!(clustervote(&["verify", &board]).status.success());
}

#[test]
fn tampered_tally_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let (board, census) = generate(dir.path());
    let text = fs::read_to_string(&board).unwrap();
    let mut lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    // Move one vote without touching the remaining list.
    let tally = lines[0]["tally"].as_array_mut().unwrap();
    let from = tally.iter().position(|t| t.as_u64() > Some(0)).unwrap();
    tally[from] = (tally[from].as_u64().unwrap() - 1).into();
    let to = (from + 1) % tally.len();
    tally[to] = (tally[to].as_u64().unwrap() + 1).into();
    let edited: String = lines.iter().map(|l| l.to_string() + "\n").collect();
    fs::write(&board, edited).unwrap();
    let o = clustervote(&["verify", &board, "--census", &census, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("TALLY_MISMATCH"));
}

#[test]
fn missing_board_is_a_usage_error() {
    let o = clustervote(&["verify", "/nonexistent/board.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
}
