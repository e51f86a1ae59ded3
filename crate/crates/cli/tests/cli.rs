use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn outfitter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_outfitter"))
        .args(args)
        .env_remove("OUTFITTER_LOG")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn recommend_args<'a>(catalog: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "recommend",
        "--catalog",
        catalog,
        "--gender",
        "female",
        "--occasion",
        "Party",
    ];
    args.extend_from_slice(extra);
    args
}

#[test]
fn validate_accepts_the_fixture() {
    let out = outfitter(&[
        "validate",
        "--catalog",
        &fixture("catalog.json"),
        "--preferences",
        &fixture("preferences.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["valid"], true);
}

#[test]
fn validate_reports_findings_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut doc: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("catalog.json")).unwrap()).unwrap();
    doc["records"][3]["occasion"] = "Funeral".into();
    doc["records"][7]["regions"][0]["region"] = "hat".into();
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = outfitter(&["validate", "--catalog", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let findings = json(&out)["findings"].as_array().unwrap().clone();
    assert_eq!(findings.len(), 2);
    assert_eq!(findings[0]["path"], "records[3].occasion");
    assert_eq!(findings[1]["path"], "records[7].regions[0].region");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("records[3].occasion"), "{stderr}");

    let out = outfitter(&["stats", "--catalog", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("records[3].occasion"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(outfitter(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(outfitter(&["stats"]).status.code(), Some(2));
    assert_eq!(
        outfitter(&["stats", "--catalog", "x", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    let catalog = fixture("catalog.json");
    let out = outfitter(&recommend_args(&catalog, &["--mode", "with_preference"]));
    assert_eq!(out.status.code(), Some(2));
    let out = outfitter(&[
        "cluster",
        "--catalog",
        &catalog,
        "--gender",
        "other",
        "--occasion",
        "Party",
        "--model",
        "m.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let out = outfitter(&["stats", "--catalog", "/nonexistent/catalog.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/catalog.json"));
    let catalog = fixture("catalog.json");
    let empty = outfitter(&[
        "recommend",
        "--catalog",
        &catalog,
        "--gender",
        "male",
        "--occasion",
        "Prom",
    ]);
    assert_eq!(empty.status.code(), Some(1));
    let unknown = outfitter(&[
        "recommend",
        "--catalog",
        &catalog,
        "--gender",
        "male",
        "--occasion",
        "Gala",
    ]);
    assert_eq!(unknown.status.code(), Some(1));
    assert_eq!(
        outfitter(&recommend_args(&catalog, &["--alpha=-1"]))
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        outfitter(&recommend_args(&catalog, &["--n", "0"]))
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn stats_match_manifest() {
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("manifest.json")).unwrap()).unwrap();
    let out = outfitter(&["stats", "--catalog", &fixture("catalog.json")]);
    assert_eq!(out.status.code(), Some(0));
    let stats = json(&out);
    assert_eq!(stats["records"], manifest["records"]);
    let mut got: Vec<(String, String, u64)> = stats["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["gender"].as_str().unwrap().into(),
                c["occasion"].as_str().unwrap().into(),
                c["count"].as_u64().unwrap(),
            )
        })
        .collect();
    let mut want: Vec<(String, String, u64)> = manifest["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["gender"].as_str().unwrap().into(),
                c["occasion"].as_str().unwrap().into(),
                c["count"].as_u64().unwrap(),
            )
        })
        .collect();
    got.sort();
    want.sort();
    assert_eq!(got, want);
}

#[test]
fn recommend_reuses_persisted_model() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = fixture("catalog.json");
    let model: PathBuf = dir.path().join("model.json");
    let model_s = model.to_str().unwrap();
    let out = outfitter(&[
        "cluster",
        "--catalog",
        &catalog,
        "--gender",
        "female",
        "--occasion",
        "Party",
        "--kmax",
        "2",
        "--model",
        model_s,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["k"], 2);

    // default k range would pick 4; the stored model keeps k = 2
    let out = outfitter(&recommend_args(&catalog, &["--model", model_s]));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["cluster_weights"].as_array().unwrap().len(), 2);

    let out = outfitter(&recommend_args(
        &catalog,
        &["--model", model_s, "--rebuild"],
    ));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["cluster_weights"].as_array().unwrap().len(), 4);
    let stored: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(stored["k"], 4);

    let other = outfitter(&[
        "recommend",
        "--catalog",
        &catalog,
        "--gender",
        "male",
        "--occasion",
        "Party",
        "--model",
        model_s,
    ]);
    assert_eq!(other.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&other.stderr).contains("--rebuild"));
}

#[test]
fn model_must_match_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let catalog = fixture("catalog.json");
    outfitter(&[
        "cluster",
        "--catalog",
        &catalog,
        "--gender",
        "female",
        "--occasion",
        "Party",
        "--model",
        model.to_str().unwrap(),
    ]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    let first = doc["assignments"]
        .as_object()
        .unwrap()
        .keys()
        .next()
        .unwrap()
        .clone();
    doc["assignments"][&first] = 9.into();
    std::fs::write(&model, doc.to_string()).unwrap();
    let out = outfitter(&recommend_args(
        &catalog,
        &["--model", model.to_str().unwrap()],
    ));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("assignments.{first}")));
}

#[test]
fn evaluate_reproduces_recommend_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("rec.json");
    let catalog = fixture("catalog.json");
    let prefs = fixture("preferences.json");
    let out = outfitter(&recommend_args(
        &catalog,
        &[
            "--preferences",
            &prefs,
            "--seed",
            "3",
            "--out",
            rec.to_str().unwrap(),
        ],
    ));
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&rec).unwrap()).unwrap();

    let out = outfitter(&[
        "evaluate",
        rec.to_str().unwrap(),
        "--catalog",
        &catalog,
        "--preferences",
        &prefs,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["items"], 10);
    assert_eq!(report["unique_items"], 10);
    assert_eq!(report["diversity"], doc["diversity"]);
    assert_eq!(report["relevance_proxy"], doc["relevance_proxy"]);
}

#[test]
fn without_preference_splits_evenly() {
    let catalog = fixture("catalog.json");
    let out = outfitter(&recommend_args(
        &catalog,
        &["--n", "10", "--sampling", "seeded_random", "--seed", "5"],
    ));
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["request"]["mode"], "without_preference");
    let alloc: Vec<u64> = doc["allocation"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(alloc.iter().sum::<u64>(), 10);
    assert!(alloc.iter().max().unwrap() - alloc.iter().min().unwrap() <= 1);
    assert!(doc.get("relevance_proxy").is_none());

    // small slice: everything it has
    let out = outfitter(&[
        "recommend",
        "--catalog",
        &catalog,
        "--gender",
        "female",
        "--occasion",
        "Office",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["items"].as_array().unwrap().len(), 4);
}

#[test]
fn custom_schema_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let schema = dir.path().join("schema.json");
    let mut doc: Value = serde_json::from_str(outfitter_core::Schema::default_document()).unwrap();
    doc["occasions"] = serde_json::json!(["Travel"]);
    std::fs::write(&schema, doc.to_string()).unwrap();
    let out = outfitter(&[
        "--schema",
        schema.to_str().unwrap(),
        "validate",
        "--catalog",
        &fixture("catalog.json"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["findings"].as_array().unwrap().len() > 40);
}
