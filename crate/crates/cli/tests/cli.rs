use std::path::Path;
use std::process::Command as Process;

use atrium_cli::cli::run;
use atrium_cli::project::Project;
use atrium_core::sim::toy_project;
use serde_json::Value;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn atrium(project: &Path, args: &[&str]) -> Out {
    let mut argv = vec!["atrium".to_owned(), "--project".to_owned(), project.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    Out { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

/// Three elements, two modes each, as a saved project.
fn toy(dir: &Path) {
    Project::create(dir, toy_project(3, &["omission", "loss of power"])).unwrap();
}

#[test]
fn init_then_query() {
    let dir = tempfile::tempdir().unwrap();
    let r = atrium(dir.path(), &["init", "--logical-clock"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let r = atrium(dir.path(), &["--format", "structured", "element", "list"]);
    assert_eq!(r.code, 0);
    assert_eq!(serde_json::from_str::<Value>(&r.stdout).unwrap(), Value::Array(vec![]));
    assert_eq!(atrium(dir.path(), &["init"]).code, 1);
}

#[test]
fn mutation_without_rationale_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    let r = atrium(dir.path(), &["assumption", "add", "--text", "bus is redundant"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--rationale"), "{}", r.stderr);
    let r = atrium(dir.path(), &["--rationale", "  ", "assumption", "add", "--text", "bus is redundant"]);
    assert_eq!(r.code, 2);
    let r = atrium(dir.path(), &["--rationale", "from review", "assumption", "add", "--text", "bus is redundant"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn bad_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(atrium(dir.path(), &["cfa", "frobnicate"]).code, 2);
    assert_eq!(atrium(dir.path(), &["element", "add", "--name", "x", "--kind", "quantum"]).code, 2);
}

#[test]
fn missing_project_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = atrium(&dir.path().join("nowhere"), &["cfa", "list"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.starts_with("error: "), "{}", r.stderr);
}

#[test]
fn gated_close_lists_the_open_clarification() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    let p = dir.path();
    let rat = ["--rationale", "workshop"];
    let ok = |args: &[&str]| {
        let mut v = rat.to_vec();
        v.extend_from_slice(args);
        let r = atrium(p, &v);
        assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
        r
    };
    ok(&["clarification", "raise", "--question", "is power stable?", "--new-assumption", "power is stable"]);
    for c in 1..=6 {
        ok(&["cfa", "analyze", &format!("CFA-{c}"), "--effect", "degraded", "--baseline-fulfills-dg"]);
    }
    ok(&["selection", "make"]);
    let r = atrium(p, &["--rationale", "done", "iteration", "close"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("GateFailed") && r.stderr.contains("C-1"), "{}", r.stderr);

    let r = atrium(p, &["--format", "structured", "--rationale", "done", "iteration", "close"]);
    assert_eq!(r.code, 1);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["error"]["name"], "GateFailed");
    assert_eq!(v["error"]["offending_ids"], serde_json::json!(["C-1"]));
}

#[test]
fn invalidation_prints_reverted_cfas_and_impact_is_structured() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    let p = dir.path();
    for args in [
        vec!["--rationale", "r", "assumption", "add", "--text", "bus is redundant"],
        vec!["--rationale", "r", "cfa", "analyze", "CFA-1", "--effect", "e", "--baseline-fulfills-dg", "--cite", "A-1"],
        vec!["--rationale", "r", "cfa", "analyze", "CFA-4", "--effect", "e", "--da", "second bus", "--cite", "A-1"],
    ] {
        assert_eq!(atrium(p, &args).code, 0);
    }
    let r = atrium(p, &["--format", "structured", "trace", "impact", "A-1"]);
    assert_eq!(r.code, 0);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["affected_cfas"], serde_json::json!(["CFA-1", "CFA-4"]));
    assert_eq!(v["affected_das"], serde_json::json!(["DA-1"]));

    let r = atrium(p, &["--rationale", "supplier changed", "assumption", "invalidate", "A-1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("reverted CFA-1, CFA-4"), "{}", r.stdout);
    let r = atrium(p, &["--rationale", "again", "assumption", "invalidate", "A-1"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("AlreadyInvalid"), "{}", r.stderr);
}

#[test]
fn audit_filters_by_entity() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    let p = dir.path();
    atrium(p, &["--rationale", "r", "cfa", "analyze", "CFA-2", "--effect", "e", "--baseline-fulfills-dg"]);
    let r = atrium(p, &["--format", "structured", "audit", "--entity", "CFA-2"]);
    let hits: Vec<Value> = serde_json::from_str(&r.stdout).unwrap();
    assert!(hits.iter().any(|h| h["operation"] == "analyze_cfa"));
    assert!(hits.iter().all(|h| h["implemented_changes"].as_array().unwrap().iter().any(|c| c["entity"] == "CFA-2")));
}

#[test]
fn binary_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_atrium");
    let status = |args: &[&str]| {
        Process::new(bin).arg("--project").arg(dir.path()).args(args).output().unwrap().status.code().unwrap()
    };
    assert_eq!(status(&["init", "--logical-clock"]), 0);
    assert_eq!(status(&["assumption", "add", "--text", "x"]), 2);
    assert_eq!(status(&["--rationale", "r", "assumption", "invalidate", "A-9"]), 1);
    assert_eq!(status(&["--rationale", "r", "assumption", "add", "--text", "x"]), 1);
    assert_eq!(status(&["--rationale", "r", "iteration", "open"]), 0);
    assert_eq!(status(&["--rationale", "r", "assumption", "add", "--text", "x"]), 0);
}
