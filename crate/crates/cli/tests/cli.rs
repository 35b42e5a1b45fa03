use serde_json::Value;
use std::process::{Command, Output};

fn deffusion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deffusion"))
        .args(args)
        .env_remove("DEFF_WORKERS")
        .output()
        .unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn free_particle_deff() {
    let out = deffusion(&["deff", "--potential", "zero", "--beta", "1", "--gamma", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let d = doc["result"]["D"].as_f64().unwrap();
    assert!((d - 0.5).abs() < 1e-10, "{d}");
    assert_eq!(doc["command"], "deff");
    assert_eq!(doc["config"]["gamma"][0], 2.0);
}

#[test]
fn pendulum_bounds_hold() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bounds.csv");
    let out = deffusion(&[
        "bounds-check", "--potential", "pendulum", "--beta", "1", "--gamma", "0.1,0.5,1,5,10",
        "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_of(&out);
    assert_eq!(doc["result"]["all_ok"], true);
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["gamma", "beta", "dstar_over_gamma", "D", "dbar_over_gamma", "eps", "ok"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let (lo, d, hi): (f64, f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!(lo <= d && d <= hi);
    }
}

#[test]
fn pendulum_graph_quantities() {
    let out = deffusion(&["fw", "--potential", "pendulum", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json_of(&out)["result"];
    assert!((r["T0"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((r["S_E0"].as_f64().unwrap() - 4.0 / std::f64::consts::PI).abs() < 1e-8);
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(deffusion(&["nonsense"]).status.code(), Some(2));
    assert_eq!(deffusion(&["deff", "--gamma", "0"]).status.code(), Some(2));
    assert_eq!(deffusion(&["deff", "--potential", "unknown"]).status.code(), Some(2));
    assert_eq!(deffusion(&["mc", "--gamma", "1,2"]).status.code(), Some(2));
    assert_eq!(deffusion(&["deff", "--nh", "8"]).status.code(), Some(2));
    // basis too small for the potential
    assert_eq!(deffusion(&["deff", "--potential", r#"{"cos":[1,0,0.5]}"#, "--nh", "8", "--nk", "2"]).status.code(), Some(2));
    // numerical failure: formulas disagree on a crude basis
    let out = deffusion(&["deff", "--potential", "pendulum", "--gamma", "0.05", "--nh", "8", "--nk", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stderr.is_empty());
    assert_eq!(deffusion(&["--help"]).status.code(), Some(0));
    assert_eq!(deffusion(&["--version"]).status.code(), Some(0));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"potential": "zero", "beta": 2.0, "gamma": [1, 4], "seed": 9}"#).unwrap();
    let out = deffusion(&["deff", "--config", cfg.to_str().unwrap(), "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert_eq!(doc["seed"], 9);
    assert_eq!(doc["config"]["beta"], 0.5);
    let rows = doc["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[1]["D"].as_f64().unwrap() - 0.5).abs() < 1e-10);

    std::fs::write(&cfg, r#"{"subcommand": "mc"}"#).unwrap();
    assert_eq!(deffusion(&["deff", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(deffusion(&["deff", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn monte_carlo_csv_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for workers in ["1", "4"] {
        let path = dir.path().join(format!("mc{workers}.csv"));
        let json = dir.path().join(format!("mc{workers}.json"));
        let out = Command::new(env!("CARGO_BIN_EXE_deffusion"))
            .args(["mc", "--potential", "pendulum", "--gamma", "1", "--n-paths", "300", "--t-end", "30", "--seed", "7"])
            .args(["--csv", path.to_str().unwrap(), "--json", json.to_str().unwrap()])
            .env("DEFF_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
        assert_eq!(doc["config"]["workers"].as_u64().unwrap().to_string(), workers);
        csvs.push(std::fs::read(&path).unwrap());
    }
    assert!(!csvs[0].is_empty());
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn csv_to_stdout() {
    let out = deffusion(&["fw", "--points", "3", "--csv", "-", "--json", "/dev/null"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z,edge_id,T,S"));
    assert_eq!(lines.count(), 9);
}
