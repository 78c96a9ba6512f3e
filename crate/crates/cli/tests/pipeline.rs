use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drm_judges::stub::{StubJudge, StubReply};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

const GOLDEN_SCORED_SHA256: &str =
    "21788b1371e6aafc95000bd43dac2606a9e57d563bd465804853d9ed3068ab46";
const GOLDEN_PAIRS_SHA256: &str =
    "9bfb217156f823494bad36880879f2f89bb8c866e32b8ca1eea371b17a076b79";
const GOLDEN_ADVANTAGES_SHA256: &str =
    "f652c6a12be5e1893b8fb7a7b3af3c3e884cf473cc923f6b2416a1bc981ae336";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn drm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Runs `drm <cmd> --input <input> --output <dir>/<out> [extra]` and asserts success.
fn run_ok(cmd: &str, input: &Path, dir: &TempDir, out: &str, extra: &[&str]) -> PathBuf {
    let output = dir.path().join(out);
    let mut args = vec![
        cmd,
        "--input",
        path_str(input),
        "--output",
        path_str(&output),
    ];
    args.extend_from_slice(extra);
    let result = drm(&args);
    assert_eq!(code(&result), 0, "{cmd} failed: {}", stderr(&result));
    output
}

fn scored(dir: &TempDir) -> PathBuf {
    run_ok(
        "score",
        &fixture("golden_input.jsonl"),
        dir,
        "scored.jsonl",
        &[],
    )
}

#[test]
fn score_golden_output_is_frozen() {
    let dir = TempDir::new().unwrap();
    let out = scored(&dir);
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(sha256_hex(&bytes), GOLDEN_SCORED_SHA256);
}

#[test]
fn score_output_is_sorted_by_instance_then_index() {
    let dir = TempDir::new().unwrap();
    let keys: Vec<(String, u64)> = jsonl(&scored(&dir))
        .iter()
        .map(|v| {
            (
                v["instance_id"].as_str().unwrap().to_owned(),
                v["index"].as_u64().unwrap(),
            )
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys.len(), 12);
}

#[test]
fn offline_scores_reproduce_inline_scores() {
    let dir = TempDir::new().unwrap();
    let inline = std::fs::read(scored(&dir)).unwrap();
    let offline = run_ok(
        "score",
        &fixture("unjudged_input.jsonl"),
        &dir,
        "offline.jsonl",
        &[
            "--offline-scores",
            path_str(&fixture("golden_scores.jsonl")),
        ],
    );
    assert_eq!(std::fs::read(offline).unwrap(), inline);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let input = fixture("golden_input.jsonl");
    let one = run_ok("score", &input, &dir, "w1.jsonl", &["--workers", "1"]);
    let four = run_ok("score", &input, &dir, "w4.jsonl", &["--workers", "4"]);
    assert_eq!(std::fs::read(one).unwrap(), std::fs::read(four).unwrap());
}

#[test]
fn scored_output_is_valid_input_everywhere() {
    let dir = TempDir::new().unwrap();
    let s = scored(&dir);
    let rescored = run_ok("score", &s, &dir, "rescored.jsonl", &[]);
    assert_eq!(std::fs::read(&s).unwrap(), std::fs::read(rescored).unwrap());
    run_ok("build-pairs", &s, &dir, "p.jsonl", &["--rule", "t+f"]);
    run_ok("advantages", &s, &dir, "a.jsonl", &[]);
    run_ok("grid-search", &s, &dir, "g.csv", &["--step", "0.5"]);
    run_ok("eval-select", &s, &dir, "e.json", &[]);
}

#[test]
fn build_pairs_drm_true_false() {
    let dir = TempDir::new().unwrap();
    let s = scored(&dir);
    let manifest = dir.path().join("manifest.json");
    let pairs = run_ok(
        "build-pairs",
        &s,
        &dir,
        "pairs.jsonl",
        &[
            "--rule",
            "t+f",
            "--method",
            "drm",
            "--manifest",
            path_str(&manifest),
        ],
    );
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["pairs"], 3);
    assert_eq!(m["name"], "DRM@T+F");
    assert_eq!(m["counts_by_rule"]["T+F"], 3);
    assert_eq!(
        sha256_hex(&std::fs::read(&pairs).unwrap()),
        GOLDEN_PAIRS_SHA256
    );

    // Every chosen output is labeled correct and every rejected one incorrect.
    let input = jsonl(&s);
    let label = |id: &str, index: u64| {
        input
            .iter()
            .find(|v| v["instance_id"] == id && v["index"] == index)
            .unwrap()["correct"]
            .as_bool()
            .unwrap()
    };
    for pair in jsonl(&pairs) {
        let meta = &pair["metadata"];
        let id = meta["instance_id"].as_str().unwrap();
        assert!(label(id, meta["pos_index"].as_u64().unwrap()));
        assert!(!label(id, meta["neg_index"].as_u64().unwrap()));
    }
}

#[test]
fn build_pairs_rlvr_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let input = fixture("golden_input.jsonl");
    let args = ["--rule", "any", "--method", "rlvr", "--seed", "11"];
    let a = run_ok("build-pairs", &input, &dir, "a.jsonl", &args);
    let b = run_ok("build-pairs", &input, &dir, "b.jsonl", &args);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn build_pairs_rlvr_needs_no_judge_scores() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(
        "build-pairs",
        &fixture("unjudged_input.jsonl"),
        &dir,
        "pairs.jsonl",
        &["--rule", "t+f", "--method", "rlvr"],
    );
    assert_eq!(jsonl(&out).len(), 3);
}

#[test]
fn false_false_on_all_correct_warns_and_succeeds() {
    let dir = TempDir::new().unwrap();
    let output = dir.path().join("pairs.jsonl");
    let manifest = dir.path().join("m.json");
    let result = drm(&[
        "build-pairs",
        "--input",
        path_str(&fixture("all_correct.jsonl")),
        "--output",
        path_str(&output),
        "--rule",
        "f+f",
        "--manifest",
        path_str(&manifest),
    ]);
    assert_eq!(code(&result), 0);
    assert!(stderr(&result).contains("warning"), "{}", stderr(&result));
    assert!(std::fs::read(&output).unwrap().is_empty());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["pairs"], 0);
    assert_eq!(m["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn advantages_combined_is_sum_of_parts() {
    let dir = TempDir::new().unwrap();
    let s = scored(&dir);
    let out = run_ok("advantages", &s, &dir, "adv.jsonl", &["--mode", "combined"]);
    let records = jsonl(&out);
    assert_eq!(records.len(), 12);
    for r in &records {
        let sum = r["rlvr_adv"].as_f64().unwrap() + r["drm_adv"].as_f64().unwrap();
        assert!((r["combined_adv"].as_f64().unwrap() - sum).abs() <= 1e-12);
    }
    assert_eq!(
        sha256_hex(&std::fs::read(&out).unwrap()),
        GOLDEN_ADVANTAGES_SHA256
    );
}

#[test]
fn grid_search_half_step_has_six_rows() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json");
    let out = run_ok(
        "grid-search",
        &fixture("golden_input.jsonl"),
        &dir,
        "grid.csv",
        &["--step", "0.5", "--report", path_str(&report)],
    );
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "w_conf,w_rel,w_coh,accuracy");
    assert_eq!(lines.len(), 7);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(r["table"].as_array().unwrap().len(), 6);
}

#[test]
fn grid_search_rejects_non_dividing_step() {
    let result = drm(&[
        "grid-search",
        "--input",
        path_str(&fixture("golden_input.jsonl")),
        "--step",
        "0.3",
    ]);
    assert_eq!(code(&result), 5);
}

#[test]
fn eval_select_coherence_oracle() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("row.csv");
    let out = run_ok(
        "eval-select",
        &fixture("coherence_oracle.jsonl"),
        &dir,
        "report.json",
        &["--weights", "0,0,1", "--csv", path_str(&csv)],
    );
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["accuracy"], 1.0);
    assert_eq!(r["n_instances"], 12);
    let row = std::fs::read_to_string(csv).unwrap();
    assert_eq!(row, "w_conf,w_rel,w_coh,accuracy\n0,0,1,1\n");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("drm.toml");
    std::fs::write(&config, "weights = [0.0, 0.0, 1.0]\n").unwrap();
    let input = fixture("coherence_oracle.jsonl");
    let from_file = run_ok(
        "eval-select",
        &input,
        &dir,
        "file.json",
        &["--config", path_str(&config)],
    );
    let r: Value = serde_json::from_str(&std::fs::read_to_string(from_file).unwrap()).unwrap();
    assert!(r["per_weighting"].get("0,0,1").is_some());
    let flagged = run_ok(
        "eval-select",
        &input,
        &dir,
        "flag.json",
        &["--config", path_str(&config), "--weights", "1,0,0"],
    );
    let r: Value = serde_json::from_str(&std::fs::read_to_string(flagged).unwrap()).unwrap();
    assert!(r["per_weighting"].get("1,0,0").is_some());
}

#[test]
fn weights_validation_exit_codes() {
    let input = fixture("golden_input.jsonl");
    let ok = drm(&[
        "score",
        "--input",
        path_str(&input),
        "--weights",
        "0.1,0.2,0.7",
    ]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let bad = drm(&[
        "score",
        "--input",
        path_str(&input),
        "--weights",
        "0.1,0.2,0.8",
    ]);
    assert_eq!(code(&bad), 5);
}

#[test]
fn unscored_input_without_judges_exits_4() {
    let result = drm(&[
        "score",
        "--input",
        path_str(&fixture("unjudged_input.jsonl")),
    ]);
    assert_eq!(code(&result), 4);
}

#[test]
fn unreachable_judge_exits_4() {
    let dir = TempDir::new().unwrap();
    let addr = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap();
    let config = dir.path().join("drm.toml");
    std::fs::write(
        &config,
        format!(
            "[judges.relevance]\nbase_url = \"http://{addr}\"\nmax_retries = 1\nbackoff_base = 0.001\n\
             [judges.coherence]\nbase_url = \"http://{addr}\"\nmax_retries = 1\nbackoff_base = 0.001\n"
        ),
    )
    .unwrap();
    let result = drm(&[
        "score",
        "--input",
        path_str(&fixture("unjudged_input.jsonl")),
        "--config",
        path_str(&config),
    ]);
    assert_eq!(code(&result), 4, "{}", stderr(&result));
}

#[test]
fn judge_endpoints_fill_missing_scores() {
    let rel = StubJudge::fixed_relevance(0.25, 1.5, 0.75).unwrap();
    let coh = StubJudge::fixed_coherence(2.0).unwrap();
    let dir = TempDir::new().unwrap();
    let out = run_ok(
        "score",
        &fixture("unjudged_input.jsonl"),
        &dir,
        "scored.jsonl",
        &[
            "--relevance-url",
            &rel.base_url(),
            "--coherence-url",
            &coh.base_url(),
        ],
    );
    for r in jsonl(&out) {
        assert_eq!(r["judge"]["d_relevance"], 1.5);
        assert_eq!(r["judge"]["coherence"], 2.0);
    }
    assert!(rel.call_count() >= 1);
}

#[test]
fn persistent_judge_failure_exits_4() {
    let rel = StubJudge::start(|_, _| StubReply::status(503)).unwrap();
    let coh = StubJudge::fixed_coherence(2.0).unwrap();
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("drm.toml");
    std::fs::write(
        &config,
        format!(
            "[judges.relevance]\nbase_url = \"{}\"\nmax_retries = 2\nbackoff_base = 0.001\n\
             [judges.coherence]\nbase_url = \"{}\"\n",
            rel.base_url(),
            coh.base_url()
        ),
    )
    .unwrap();
    let result = drm(&[
        "score",
        "--input",
        path_str(&fixture("unjudged_input.jsonl")),
        "--config",
        path_str(&config),
    ]);
    assert_eq!(code(&result), 4, "{}", stderr(&result));
    assert_eq!(rel.call_count(), 3);
}

#[test]
fn both_judge_sources_exit_5() {
    let result = drm(&[
        "score",
        "--input",
        path_str(&fixture("unjudged_input.jsonl")),
        "--offline-scores",
        path_str(&fixture("golden_scores.jsonl")),
        "--relevance-url",
        "http://127.0.0.1:9",
        "--coherence-url",
        "http://127.0.0.1:9",
    ]);
    assert_eq!(code(&result), 5);
}

#[test]
fn malformed_input_exits_3() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.jsonl");
    std::fs::write(&input, "{\"instance_id\": \"x\", \"question\": 5}\n").unwrap();
    let result = drm(&["score", "--input", path_str(&input)]);
    assert_eq!(code(&result), 3);
    assert!(stderr(&result).contains("line 1"), "{}", stderr(&result));
}

#[test]
fn missing_input_exits_2() {
    let result = drm(&["score", "--input", "/nonexistent/input.jsonl"]);
    assert_eq!(code(&result), 2);
}

#[test]
fn missing_labels_for_labeled_rule_exit_5() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("unlabeled.jsonl");
    let text: String = std::fs::read_to_string(fixture("golden_input.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            v["correct"] = Value::Null;
            format!("{v}\n")
        })
        .collect();
    std::fs::write(&input, text).unwrap();
    let bad = drm(&["build-pairs", "--input", path_str(&input), "--rule", "t+f"]);
    assert_eq!(code(&bad), 5);
    let ok = drm(&["build-pairs", "--input", path_str(&input), "--rule", "any"]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
}
