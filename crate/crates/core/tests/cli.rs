use std::process::{Command, Output};

use serde_json::Value;

fn rsbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsbc")).args(args).env_remove("RSBC_THREADS").output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn generated_channel_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let path_s = path.to_str().unwrap();
    let gen = rsbc(&["channel", "gen", "--k", "3", "--m", "3", "--seed", "4", "--format", "csv", "--out", path_s]);
    assert!(gen.status.success());
    assert!(gen.stdout.is_empty());

    let from_file = json(&rsbc(&["sumrate", "--channel", "file", "--file", path_s, "--p-db", "20"]));
    let direct = json(&rsbc(&["sumrate", "--k", "3", "--m", "3", "--seed", "4", "--p-db", "20"]));
    assert_eq!(from_file["records"][0]["channel_digest"], direct["records"][0]["channel_digest"]);
    assert_eq!(from_file["records"][0]["values"], direct["records"][0]["values"]);
}

#[test]
fn malformed_channel_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "2,2,1,1\n1:0,0:0\nnot-a-number,0:0\n").unwrap();
    let out = rsbc(&["channel", "show", "--channel", "file", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(rsbc(&["sumrate", "--k", "3"]).status.code(), Some(2));
    assert_eq!(rsbc(&["fig-gap", "--k", "6"]).status.code(), Some(2));
    assert_eq!(rsbc(&["streams", "eliminate", "--k", "3"]).status.code(), Some(2));
    assert_eq!(rsbc(&["nonsense"]).status.code(), Some(2));
    let threads = Command::new(env!("CARGO_BIN_EXE_rsbc"))
        .args(["gdof"])
        .env("RSBC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn region_dump_counts() {
    let v = json(&rsbc(&["region", "--k", "3", "--p-db", "10,20"]));
    assert_eq!(v["schema"], 1);
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["constraints"].as_array().unwrap().len(), 15);
    let exact = json(&rsbc(&["region", "--k", "3", "--p-db", "20", "--exact"]));
    assert_eq!(exact["records"][0]["constraints"].as_array().unwrap().len(), 3 * 15);
}

#[test]
fn fig_gap_bound_dominates() {
    let v = json(&rsbc(&["fig-gap", "--trials", "5"]));
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 8);
    for model in ["rayleigh", "onering"] {
        let rs: Vec<f64> =
            records.iter().filter(|r| r["model"] == model).map(|r| r["mean_rs"].as_f64().unwrap()).collect();
        assert!(rs.windows(2).all(|w| w[1] >= w[0]), "{model}: {rs:?}");
    }
    assert!(records.iter().all(|r| r["min_gap"].as_f64().unwrap() >= -1e-8));
}

#[test]
fn fig_ordering_curve() {
    let v = json(&rsbc(&["fig-ordering", "--trials", "6"]));
    let curve: Vec<f64> = v["records"].as_array().unwrap().iter().map(|r| r["mean_sum_rate"].as_f64().unwrap()).collect();
    assert_eq!(curve.len(), 12);
    assert!(curve.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    assert!(v["one_layer_mean"].as_f64().unwrap() <= curve[curve.len() - 1] + 1e-9);
}

#[test]
fn gdof_degenerate_family_has_equal_slopes() {
    for args in [vec!["gdof", "--alpha", "0"], vec!["gdof", "--family", "triangular", "--alpha-f", "0", "--alpha-g", "0"]] {
        let v = json(&rsbc(&args));
        let (a, b) = (v["capacity_slope"].as_f64().unwrap(), v["scheme_slope"].as_f64().unwrap());
        assert!((a - b).abs() < 0.05, "{args:?}: {a} vs {b}");
    }
}

#[test]
fn stream_commands() {
    let order = json(&rsbc(&["streams", "order", "--k", "3", "--channel", "onering", "--m", "4", "--trials", "2"]));
    let entries = order["records"][1]["ordering"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    let elim = json(&rsbc(&["streams", "eliminate", "--k", "3", "--threshold", "0"]));
    assert_eq!(elim["records"][0]["surviving"].as_array().unwrap().len(), 7);
}
