use deffusion_cli::{envelope, execute_with_workers, resolve_args};
use serde_json::Value;
use std::path::PathBuf;

fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/schema")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn run_json(args: &[&str]) -> Value {
    let mut argv = vec!["deffusion"];
    argv.extend_from_slice(args);
    let r = resolve_args(argv).unwrap_or_else(|e| panic!("{args:?}: {e:?}"));
    let out = execute_with_workers(&r).unwrap();
    envelope(&r, &out)
}

fn assert_valid(schema: &str, doc: &Value) {
    let validator = jsonschema::validator_for(&load(schema)).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}\n{doc:#}");
}

#[test]
fn every_subcommand_output_matches_its_schema() {
    let cases: &[(&str, &[&str])] = &[
        ("deff", &["deff", "--potential", "zero", "--gamma", "2", "--gap", "--gap-nh", "8", "--gap-nk", "2"]),
        ("deff", &["deff", "--potential", "pendulum", "--gamma", "1,10", "--nh", "32", "--nk", "8"]),
        ("mc", &["mc", "--potential", "zero", "--gamma", "1", "--n-paths", "200", "--t-end", "20"]),
        ("fw", &["fw", "--potential", "pendulum", "--points", "5"]),
        ("fw", &["fw", "--potential", "zero", "--points", "5"]),
        ("smol", &["smol", "--potential", "pendulum"]),
        ("graph-sim", &["graph-sim", "--n-paths", "100", "--t-end", "2", "--dt", "0.01"]),
        ("bounds-check", &["bounds-check", "--gamma", "1,10"]),
        ("gap", &["gap", "--gamma", "1", "--nh", "8", "--nk", "4"]),
        ("sweep", &["sweep", "--potential", "zero", "--gamma", "0.5,1,2", "--mc-paths", "200"]),
    ];
    for (name, args) in cases {
        let doc = run_json(args);
        assert_eq!(doc["version"], deffusion_cli::VERSION);
        assert!(doc["seed"].is_u64());
        assert_valid(&format!("{name}.schema.json"), &doc);
        assert_valid("config.schema.json", &doc["config"]);
    }
}

#[test]
fn example_config_matches_schema() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/config.example.json");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_valid("config.schema.json", &doc);
}

#[test]
fn schemas_reject_malformed_documents() {
    let doc = run_json(&["smol", "--potential", "pendulum"]);
    let mut bad = doc.clone();
    bad["result"]["dbar"] = Value::String("x".into());
    let validator = jsonschema::validator_for(&load("smol.schema.json")).unwrap();
    assert!(validator.is_valid(&doc));
    assert!(!validator.is_valid(&bad));
    let mut missing = doc;
    missing.as_object_mut().unwrap().remove("seed");
    assert!(!validator.is_valid(&missing));
}
