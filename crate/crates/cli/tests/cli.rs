//! End-to-end tests of the `bnsl` binary: exit codes, output formats, and
//! determinism of the exported artifacts.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const EXAMPLE_CSV: &str = "X,Y\n0,0\n1,0\n0,1\n1,1\n1,1\n";

fn bnsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnsl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_example(dir: &Path) -> String {
    let path = dir.join("example.csv");
    std::fs::write(&path, EXAMPLE_CSV).unwrap();
    path.display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn score_prints_the_worked_example_values() {
    let dir = TempDir::new().unwrap();
    let data = write_example(dir.path());

    let out = bnsl(&["score", "--data", &data, "--subset", "X"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value: f64 = text.rsplit('=').next().unwrap().trim().parse().unwrap();
    assert!((value - (-4.446565155811)).abs() < 1e-9, "{text}");

    let out = bnsl(&["score", "--data", &data, "--subset", "X", "--given", "Y"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value: f64 = text.rsplit('=').next().unwrap().trim().parse().unwrap();
    assert!((value - (-4.499809670330)).abs() < 1e-9, "{text}");
}

#[test]
fn score_with_empty_given_equals_unconditional() {
    let dir = TempDir::new().unwrap();
    let data = write_example(dir.path());
    let a = stdout(&bnsl(&["score", "--data", &data, "--subset", "X"]));
    let b = stdout(&bnsl(&["score", "--data", &data, "--subset", "X", "--given", ""]));
    let tail = |s: &str| s.rsplit('=').next().unwrap().trim().to_string();
    assert_eq!(tail(&a), tail(&b));
}

#[test]
fn score_rejects_unknown_and_overlapping_names() {
    let dir = TempDir::new().unwrap();
    let data = write_example(dir.path());
    let out = bnsl(&["score", "--data", &data, "--subset", "Q"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown variable"));
    let out = bnsl(&["score", "--data", &data, "--subset", "X", "--given", "X"]);
    assert!(!out.status.success());
}

#[test]
fn learn_writes_json_and_dot_deterministically() {
    let dir = TempDir::new().unwrap();
    let data = write_example(dir.path());
    let json1 = dir.path().join("a.json");
    let dot1 = dir.path().join("a.dot");
    let json2 = dir.path().join("b.json");
    let dot2 = dir.path().join("b.dot");

    for (json, dot) in [(&json1, &dot1), (&json2, &dot2)] {
        let out = bnsl(&[
            "learn",
            "--data",
            &data,
            "--out",
            &json.display().to_string(),
            "--dot",
            &dot.display().to_string(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(&dot1).unwrap(),
        std::fs::read(&dot2).unwrap(),
        "DOT export must be byte-identical across runs"
    );

    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json1).unwrap()).unwrap();
    assert_eq!(parsed["version"], 1);
    assert_eq!(parsed["p"], 2);
    assert_eq!(parsed["n"], 5);
    let total = parsed["network"]["total_log_score"].as_f64().unwrap();
    assert!((total - 2.0 * (-4.446565155811453f64)).abs() < 1e-12);
    for entry in parsed["network"]["parents"].as_array().unwrap() {
        assert!(entry["parents"].as_array().unwrap().is_empty());
    }
    // Empty graph: node statements only.
    let dot_text = std::fs::read_to_string(&dot1).unwrap();
    assert!(dot_text.contains("\"X\";"));
    assert!(!dot_text.contains("->"));
}

#[test]
fn learn_network_sections_are_byte_identical_across_algorithms() {
    let dir = TempDir::new().unwrap();
    let data = write_example(dir.path());
    let mut sections = Vec::new();
    for algo in ["levelwise", "baseline"] {
        let json = dir.path().join(format!("{algo}.json"));
        let out = bnsl(&[
            "learn",
            "--data",
            &data,
            "--algo",
            algo,
            "--out",
            &json.display().to_string(),
        ]);
        assert!(out.status.success());
        let text = std::fs::read_to_string(&json).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        sections.push(serde_json::to_string(&parsed["network"]).unwrap());
    }
    assert_eq!(sections[0], sections[1]);
}

#[test]
fn learn_respects_variable_selection_and_caps() {
    let dir = TempDir::new().unwrap();
    let data = write_example(dir.path());

    let out = bnsl(&["learn", "--data", &data, "--vars", "Y"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("p=1"));

    let out = bnsl(&["learn", "--data", &data, "--first-p", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("p=1"));

    let out = bnsl(&["learn", "--data", &data, "--vars", "NOPE"]);
    assert!(!out.status.success());

    let out = bnsl(&["learn", "--data", &data, "--first-p", "7"]);
    assert!(!out.status.success());
}

#[test]
fn learn_refuses_when_budget_is_too_small() {
    let dir = TempDir::new().unwrap();
    let data = write_example(dir.path());
    let out = bnsl(&["learn", "--data", &data, "--memory-budget", "16"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("exceeds budget"), "{err}");

    // The environment variable provides the same gate.
    let out = Command::new(env!("CARGO_BIN_EXE_bnsl"))
        .args(["learn", "--data", &data])
        .env("BNSL_MEMORY_BUDGET", "16")
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn learn_reads_the_arity_sidecar() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("coded.csv");
    std::fs::write(&csv, "A,B\n0,0\n2,1\n0,0\n").unwrap();
    std::fs::write(dir.path().join("coded.meta.json"), r#"{"A": 4}"#).unwrap();
    let json = dir.path().join("out.json");
    let out = bnsl(&[
        "learn",
        "--data",
        &csv.display().to_string(),
        "--out",
        &json.display().to_string(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(parsed["p"], 2);
}

#[test]
fn bad_flags_exit_with_usage_error() {
    let out = bnsl(&["learn", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_rows_roundtrip_and_agree_across_algorithms() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = bnsl(&[
        "bench",
        "--p-min",
        "6",
        "--p-max",
        "7",
        "--n",
        "40",
        "--reps",
        "2",
        "--measure-execs",
        "1",
        "--out",
        &csv.display().to_string(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let rows: Vec<bnsl_cli::bench::BenchRow> =
        reader.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0].p, pair[1].p);
        assert_eq!(pair[0].rep, pair[1].rep);
        assert_ne!(pair[0].algo, pair[1].algo);
        assert!(
            (pair[0].total_log_score - pair[1].total_log_score).abs() < 1e-12,
            "rows for the same dataset must agree on the total"
        );
        assert_eq!(pair[0].status, "ok");
    }
    // Per-level profile CSV is written next to the output.
    let levels = dir.path().join("bench_levels.csv");
    let mut level_reader = csv::Reader::from_path(&levels).unwrap();
    let level_rows: Vec<bnsl_cli::bench::LevelRow> =
        level_reader.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(level_rows.len(), 6 + 7);
}

#[test]
fn bench_csvs_are_deterministic_apart_from_wall_times() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = bnsl(&[
            "bench",
            "--p-min",
            "6",
            "--p-max",
            "6",
            "--reps",
            "1",
            "--measure-execs",
            "1",
            "--seed",
            "9",
            "--out",
            &path.display().to_string(),
        ]);
        assert!(out.status.success());
    }
    let strip = |path: &Path| -> Vec<Vec<String>> {
        let mut reader = csv::Reader::from_path(path).unwrap();
        reader
            .records()
            .map(|r| {
                r.unwrap()
                    .iter()
                    .enumerate()
                    // Column 4 is wall_seconds, the only nondeterministic field.
                    .filter(|(i, _)| *i != 4)
                    .map(|(_, v)| v.to_string())
                    .collect()
            })
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn bench_profile_only_reaches_past_the_run_caps() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("profile.csv");
    let levels = dir.path().join("levels.csv");
    let out = bnsl(&[
        "bench",
        "--p-min",
        "29",
        "--p-max",
        "29",
        "--profile-only",
        "--out",
        &csv.display().to_string(),
        "--levels-out",
        &levels.display().to_string(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&levels).unwrap();
    let rows: Vec<bnsl_cli::bench::LevelRow> =
        reader.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 29);
    // Combination counts peak mid-lattice (levels 14 and 15 tie at p = 29).
    let peak = rows.iter().max_by_key(|r| r.subsets).unwrap();
    assert!(peak.k == 14 || peak.k == 15);
}

#[test]
fn oracle_check_passes_clean_and_catches_corruption() {
    let out = bnsl(&[
        "oracle-check",
        "--trials",
        "4",
        "--p",
        "4",
        "--n",
        "60",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("oracle-check passed"));

    let out = bnsl(&["oracle-check", "--trials", "1", "--p", "1"]);
    assert!(out.status.success());

    let out = bnsl(&["oracle-check", "--trials", "7", "--p", "9"]);
    assert!(!out.status.success());

    // The hidden fault hook must be caught within a few trials.
    let out = bnsl(&[
        "oracle-check",
        "--trials",
        "20",
        "--p",
        "5",
        "--n",
        "150",
        "--seed",
        "11",
        "--corrupt-comparator",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mismatch"), "{err}");
}
