use std::path::Path;
use std::process::{Command, Output};

use wstrank::sim::{run_study, Method, Scenario, SimConfig};
use wstrank::{MasterOptions, MatchRecord};

fn wstrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wstrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_matches(path: &Path, records: &[(&str, &str)]) {
    let records: Vec<MatchRecord> = records.iter().map(|&(w, l)| MatchRecord::new(w, l)).collect();
    wstrank::write_match_csv(std::fs::File::create(path).unwrap(), &records).unwrap();
}

#[test]
fn simulate_csv_matches_library_study() {
    let out = wstrank(&[
        "simulate", "--scenario", "uniform", "--n", "20", "--reps", "4", "--seed", "9", "--format", "csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = SimConfig::new(Scenario::Uniform, 20).with_replicates(4).with_seed(9);
    let res = run_study(&cfg, &Method::ALL, &MasterOptions::default()).unwrap().without_timings();
    let mut expected = Vec::new();
    res.write_csv(&mut expected, true).unwrap();
    assert_eq!(stdout(&out), String::from_utf8(expected).unwrap());
}

#[test]
fn simulate_is_byte_reproducible() {
    let args = [
        "simulate", "--scenario", "two_group,bt_latent", "--n", "16", "--reps", "3", "--seed", "4", "--format",
        "json",
    ];
    let a = wstrank(&args);
    let b = wstrank(&[&args[..], &["--threads", "1"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn odd_two_group_is_a_usage_error() {
    let out = wstrank(&["simulate", "--scenario", "two_group", "--n", "11", "--reps", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = wstrank(&["simulate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn two_player_master_ranks_winner_first() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    write_matches(&path, &[("A", "B"), ("A", "B"), ("A", "B")]);
    let out = wstrank(&["rank", "--input", path.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["players"][0]["player"], "A");
    assert_eq!(v["players"][1]["player"], "B");
    assert_eq!(v["method"], "master");
}

#[test]
fn bt_on_disconnected_data_suggests_filter() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    write_matches(&path, &[("A", "B"), ("B", "A"), ("C", "A"), ("D", "C")]);
    let p = path.to_str().unwrap();
    let out = wstrank(&["rank", "--input", p, "--method", "bt"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--filter bt-connected"));
    let out = wstrank(&["rank", "--input", p, "--method", "bt", "--filter", "bt-connected", "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn compare_rankings_and_head_to_head() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.csv");
    let mut recs = Vec::new();
    for (w, l) in [("A", "B"), ("B", "C"), ("C", "D"), ("A", "C"), ("B", "D"), ("A", "D")] {
        recs.push((w, l));
        recs.push((w, l));
    }
    recs.push(("D", "A"));
    write_matches(&input, &recs);
    let inp = input.to_str().unwrap();

    let rank_path = dir.path().join("r.json");
    let out = wstrank(&["rank", "--input", inp, "--format", "json", "--out", rank_path.to_str().unwrap()]);
    assert!(out.status.success());

    let both = format!("{},{}", rank_path.display(), rank_path.display());
    let out = wstrank(&["compare", "--rankings", &both, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kendall_tau"], 1.0);
    assert_eq!(v["spearman_rho"], 1.0);

    let out = wstrank(&[
        "compare", "--input", inp, "--methods", "counting,master", "--h2h", "A,D", "--format", "json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kendall_tau"], 1.0);
    assert_eq!(v["h2h"][0]["a_wins"], 2);
    assert_eq!(v["h2h"][0]["b_wins"], 1);
}

#[test]
fn compare_reversed_ranking_is_minus_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "rank,player,score\n1,x,3\n2,y,2\n3,z,1\n").unwrap();
    std::fs::write(&b, "rank,player,score\n1,z,3\n2,y,2\n3,x,1\n").unwrap();
    let both = format!("{},{}", a.display(), b.display());
    let out = wstrank(&["compare", "--rankings", &both, "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kendall_tau"], -1.0);
    assert_eq!(v["spearman_rho"], -1.0);
    assert_eq!(v["kendall_distance"], 3);
}

#[test]
fn synth_then_rank_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = wstrank(&[
        "synth", "--n", "30", "--density", "0.5", "--seed", "3", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let again = wstrank(&["synth", "--n", "30", "--density", "0.5", "--seed", "3"]);
    assert_eq!(std::fs::read(&path).unwrap(), again.stdout);
    for method in ["counting", "bt", "usvt", "master"] {
        let out = wstrank(&[
            "rank", "--input", path.to_str().unwrap(), "--method", method, "--filter", "bt-connected", "--top",
            "5", "--format", "csv",
        ]);
        assert!(out.status.success(), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout(&out).lines().count(), 6);
    }
}
