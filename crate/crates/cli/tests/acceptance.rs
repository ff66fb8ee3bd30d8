//! Acceptance gate. Runs every primary criterion, prints one PASS/FAIL line
//! each, and exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use atrium_cli::api::router;
use atrium_cli::cli::run as cli_run;
use atrium_cli::project::Project;
use atrium_core::scenario::{self, ScenarioConfig, ScenarioStats};
use atrium_core::sim::{actor, fuzz_config, random_project, toy_project, Driver};
use atrium_core::store::Store;
use atrium_core::*;
use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

const SCALE_BUDGET: Duration = Duration::from_secs(1);
const STATS_BUDGET: Duration = Duration::from_secs(5);
const SUITE_BUDGET: Duration = Duration::from_secs(60);
const CFA_RANGE: (usize, usize) = (75, 85);
const CORRECTION_RATE: f64 = 0.30;
const CORRECTION_TOLERANCE: f64 = 0.02;
const PROPAGATION_TRIALS: usize = 1_000;
const MAX_ENTITIES: usize = 200;
const FUZZ_OPERATIONS: usize = 10_000;
const SELECTION_TRIALS: usize = 1_000;
const MAX_BIPARTITE_NODES: usize = 50;
const PERSISTENCE_TRIALS: u64 = 100;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// --- scale -------------------------------------------------------------

/// Expected CFA count from segment and membership data alone.
fn counted_cfas(st: &ProjectState, config: &ScenarioConfig) -> usize {
    let in_scope: BTreeSet<&EntityId> =
        st.elements.values().filter(|e| e.considered && !e.retired).map(|e| &e.id).collect();
    let holds = |seg: &EntityId| {
        // walk the subtree under seg
        let mut q = VecDeque::from([seg]);
        while let Some(s) = q.pop_front() {
            if st.segments[s].member_elements.iter().any(|e| in_scope.contains(e)) {
                return true;
            }
            q.extend(st.segments.values().filter(|c| c.parent.as_ref() == Some(s)).map(|c| &c.id));
        }
        false
    };
    let segs = st.segments.keys().filter(|s| holds(s)).count();
    in_scope.len() * config.per_element_modes.len() + segs * config.per_segment_modes.len()
}

fn scale() -> Outcome {
    let config = ScenarioConfig::default();
    let t = Instant::now();
    let st = scenario::build_case_study(&config).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    let mains = st.segments.values().filter(|s| s.parent.is_none()).count();
    check(st.elements.len() == 25, || format!("{} elements", st.elements.len()))?;
    check(mains == 4, || format!("{mains} main segments"))?;
    let n = st.cfas.len();
    check((CFA_RANGE.0..=CFA_RANGE.1).contains(&n), || format!("{n} CFAs outside {CFA_RANGE:?}"))?;
    let oracle = counted_cfas(&st, &config);
    check(n == oracle, || format!("{n} CFAs but the counting formula gives {oracle}"))?;
    check(took < SCALE_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("25 elements, 4 main segments, {n} CFAs, {took:.0?}"))
}

// --- workflow statistics ---------------------------------------------

fn jsonl(dir: &Path, name: &str) -> Vec<Value> {
    fs::read_to_string(dir.join(format!("{name}.jsonl")))
        .unwrap_or_default()
        .lines()
        .map(|l| serde_json::from_str(l).expect("store line parses"))
        .collect()
}

/// Statistics recounted from the saved store files, without engine code.
fn recount(dir: &Path) -> ScenarioStats {
    let cfas = jsonl(dir, "cfas");
    let clar = jsonl(dir, "clarifications");
    let tasks = jsonl(dir, "tasks");
    let log = jsonl(dir, "changelog");
    let das = |c: &Value| c["analysis"]["design_alternatives"].as_array().map_or(0, Vec::len);
    let status = |v: &[Value], s: &str| v.iter().filter(|x| x["status"] == s).count();
    let changes = |e: &Value| e["implemented_changes"].as_array().cloned().unwrap_or_default();
    let corrections = log
        .iter()
        .filter(|e| e["operation"] == "resolve_clarification" || e["operation"] == "complete_task")
        .filter(|e| changes(e).iter().any(|c| c["field"] == "validity" && c["after"] == "invalid"))
        .count();
    let reverted = log
        .iter()
        .flat_map(changes)
        .filter(|c| c["entity"].as_str().is_some_and(|e| e.starts_with("CFA-")))
        .filter(|c| c["field"] == "state" && c["after"] == "unprocessed")
        .count();
    ScenarioStats {
        cfa_total: cfas.len(),
        cfas_with_das: cfas.iter().filter(|c| das(c) > 0).count(),
        cfas_with_multiple_das: cfas.iter().filter(|c| das(c) > 1).count(),
        clarifications_raised: clar.len(),
        resolved: status(&clar, "resolved"),
        converted: status(&clar, "converted_to_task"),
        tasks_completed: status(&tasks, "complete"),
        corrections,
        correction_rate: corrections as f64 / clar.len().max(1) as f64,
        reverted_cfa_count: reverted,
        risk_count: jsonl(dir, "risks").len(),
        open_tasks: status(&tasks, "open"),
        iteration_closed: jsonl(dir, "iterations").iter().all(|i| i["status"] == "closed"),
    }
}

fn statistics() -> Outcome {
    let t = Instant::now();
    let (engine, s) = scenario::run(&ScenarioConfig::default()).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    check(s.clarifications_raised == 40, || format!("raised {}", s.clarifications_raised))?;
    check(s.resolved == 30, || format!("resolved {}", s.resolved))?;
    check(s.converted == 10, || format!("converted {}", s.converted))?;
    check((s.correction_rate - CORRECTION_RATE).abs() <= CORRECTION_TOLERANCE, || {
        format!("correction rate {}", s.correction_rate)
    })?;
    check(s.cfas_with_das == 9, || format!("CFAs with DAs {}", s.cfas_with_das))?;
    check(s.cfas_with_multiple_das == 5, || format!("CFAs with several DAs {}", s.cfas_with_multiple_das))?;
    check(s.risk_count == s.open_tasks, || format!("{} risks, {} open tasks", s.risk_count, s.open_tasks))?;
    check(s.iteration_closed, || "iteration left open".into())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    Store::open(dir.path()).and_then(|st| st.save(engine.state())).map_err(|e| e.to_string())?;
    let recounted = recount(dir.path());
    check(recounted == s, || format!("recount {recounted:?} differs from {s:?}"))?;
    check(took < STATS_BUDGET, || format!("took {took:?}"))?;
    Ok(format!(
        "40 raised, 30 resolved, 10 converted, rate {:.2}, 9/5 CFAs with DAs, {} risks, {took:.0?}",
        s.correction_rate, s.risk_count
    ))
}

// --- propagation -------------------------------------------------------

/// Breadth-first walk over assumption-to-CFA links, keeping processed CFAs.
fn traversal_oracle(st: &ProjectState, a: &EntityId) -> BTreeSet<EntityId> {
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::from([a.clone()]);
    let mut q = VecDeque::from([a.clone()]);
    while let Some(n) = q.pop_front() {
        for l in st.links.values().filter(|l| l.from == n && l.kind == LinkKind::AssumptionToCfa) {
            if seen.insert(l.to.clone()) && st.cfas.get(&l.to).is_some_and(|c| c.state == CfaState::Processed) {
                out.insert(l.to.clone());
            }
        }
    }
    out
}

fn propagation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA7);
    let (mut trials, mut seed, mut reverted_total) = (0usize, 0u64, 0usize);
    while trials < PROPAGATION_TRIALS {
        seed += 1;
        let ops = rng.random_range(10..120);
        let mut engine = random_project(seed, ops);
        if engine.state().entities().len() > MAX_ENTITIES {
            continue;
        }
        let valid: Vec<EntityId> =
            engine.state().assumptions.values().filter(|a| a.validity == Validity::Valid).map(|a| a.id.clone()).collect();
        if valid.is_empty() {
            continue;
        }
        let a = valid[rng.random_range(0..valid.len())].clone();
        let oracle = traversal_oracle(engine.state(), &a);
        let before: BTreeMap<EntityId, CfaState> = engine.state().cfas.values().map(|c| (c.id.clone(), c.state)).collect();
        let cmd = Command::InvalidateAssumption { assumption: a.clone(), reason: "trial".into(), replacement: None };
        let applied = engine.apply(cmd, &actor()).map_err(|e| format!("seed {seed}: {e}"))?;
        let OpResult::AssumptionInvalidated { reverted_cfas, .. } = applied.result else {
            return Err(format!("seed {seed}: unexpected result"));
        };
        let flipped: BTreeSet<EntityId> =
            engine.state().cfas.values().filter(|c| before[&c.id] != c.state).map(|c| c.id.clone()).collect();
        let reported: BTreeSet<EntityId> = reverted_cfas.into_iter().collect();
        check(flipped == oracle && reported == oracle, || {
            format!("seed {seed}, {a}: oracle {oracle:?}, flipped {flipped:?}, reported {reported:?}")
        })?;
        reverted_total += oracle.len();
        trials += 1;
    }
    Ok(format!("{trials} projects, {reverted_total} reverted CFAs matched"))
}

// --- gate truth table --------------------------------------------------

fn gate_table() -> Outcome {
    for mask in 0..8u8 {
        let (clar_open, unprocessed, selected) = (mask & 1 != 0, mask & 2 != 0, mask & 4 != 0);
        let mut e = toy_project(2, &["omission"]);
        let ctx = actor();
        let apply = |e: &mut Engine, c: Command| e.apply(c, &ctx).map(|_| ()).map_err(|err| format!("fixture {mask}: {err}"));
        apply(&mut e, Command::AddAssumption { text: "sensor is redundant".into(), category: None, linked_cfas: BTreeSet::new() })?;
        let a1 = EntityId::parse("A-1");
        for (i, cfa) in e.state().cfas.keys().cloned().collect::<Vec<_>>().into_iter().enumerate() {
            let cited = if i == 0 { BTreeSet::from([a1.clone()]) } else { BTreeSet::new() };
            let cmd = Command::AnalyzeCfa {
                cfa,
                effect: "degraded".into(),
                baseline_fulfills_dg: true,
                design_alternatives: vec![],
                cited_assumptions: cited,
            };
            apply(&mut e, cmd)?;
        }
        if selected {
            let cmd = Command::MakeSelection {
                chosen_das: BTreeSet::new(),
                rationale: "nothing needed".into(),
                rejections: BTreeMap::new(),
                method_note: String::new(),
            };
            apply(&mut e, cmd)?;
        }
        if unprocessed {
            apply(&mut e, Command::InvalidateAssumption { assumption: a1.clone(), reason: "changed".into(), replacement: None })?;
        }
        if clar_open {
            let payload = AssumptionPayload::New { text: "bus is fast".into(), category: None, linked_cfas: BTreeSet::new() };
            apply(&mut e, Command::RaiseClarification { question: "is it?".into(), assumption: Some(payload) })?;
        }

        let expected = !clar_open && !unprocessed && selected;
        let gate = e.gate_status().ok_or("no open iteration")?;
        check(
            gate.open_clarifications.is_empty() != clar_open
                && gate.unprocessed_cfas.is_empty() != unprocessed
                && gate.selection_missing != selected,
            || format!("combination {mask}: gate reports {gate:?}"),
        )?;
        let closed = e.apply(Command::CloseIteration {}, &ctx);
        match (&closed, expected) {
            (Ok(_), true) => {}
            (Err(EngineError::GateFailed { open_clarifications, unprocessed_cfas, selection_missing }), false) => check(
                *open_clarifications == gate.open_clarifications
                    && *unprocessed_cfas == gate.unprocessed_cfas
                    && *selection_missing == gate.selection_missing,
                || format!("combination {mask}: error disagrees with gate"),
            )?,
            _ => return Err(format!("combination {mask}: expected pass={expected}, got {closed:?}")),
        }
    }
    Ok("8 of 8 combinations".into())
}

// --- append-only fuzz --------------------------------------------------

fn append_only() -> Outcome {
    let mut engine = Engine::new(fuzz_config());
    let mut driver = Driver::new(0x5EED);
    let (mut successes, mut steps) = (0usize, 0usize);
    let mut known_a: BTreeSet<EntityId> = BTreeSet::new();
    let mut known_c: BTreeSet<EntityId> = BTreeSet::new();
    let mut invalid: BTreeSet<EntityId> = BTreeSet::new();
    while successes < FUZZ_OPERATIONS {
        steps += 1;
        check(steps < FUZZ_OPERATIONS * 10, || format!("only {successes} operations succeeded"))?;
        let log_len = engine.state().changelog.len();
        let (cmd, res) = driver.step(&mut engine);
        let st = engine.state();
        if res.is_err() {
            check(st.changelog.len() == log_len, || format!("failed {} recorded a change", cmd.name()))?;
            continue;
        }
        successes += 1;
        check(st.assumptions.len() >= known_a.len() && st.clarifications.len() >= known_c.len(), || {
            format!("step {steps}: an entity disappeared")
        })?;
        // new ids only ever appear at the end of the id sequence, so a
        // length check plus the invalid set covers every known entity
        for a in &invalid {
            check(st.assumptions.get(a).is_some_and(|x| x.validity == Validity::Invalid), || {
                format!("step {steps}: {a} left the invalid state after {}", cmd.name())
            })?;
        }
        if matches!(cmd, Command::InvalidateAssumption { .. } | Command::ResolveClarification { .. } | Command::CompleteTask { .. }) {
            invalid.extend(st.assumptions.values().filter(|a| a.validity == Validity::Invalid).map(|a| a.id.clone()));
        }
        known_a.extend(st.assumptions.keys().skip(known_a.len()).cloned());
        known_c.extend(st.clarifications.keys().skip(known_c.len()).cloned());
    }
    let st = engine.state();
    check(known_a.iter().all(|a| st.assumptions.contains_key(a)), || "an assumption disappeared".into())?;
    check(known_c.iter().all(|c| st.clarifications.contains_key(c)), || "a clarification disappeared".into())?;
    let all_invalid = st.assumptions.values().filter(|a| a.validity == Validity::Invalid).count();
    check(all_invalid == invalid.len(), || format!("{all_invalid} invalid, tracked {}", invalid.len()))?;
    check(st.changelog.len() == successes, || format!("{} change entries for {successes} operations", st.changelog.len()))?;
    Ok(format!(
        "{successes} operations in {steps} attempts, {} assumptions ({} invalid), {} clarifications",
        st.assumptions.len(),
        all_invalid,
        st.clarifications.len()
    ))
}

// --- selection coverage ------------------------------------------------

fn selection_coverage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FE);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    for trial in 0..SELECTION_TRIALS {
        let n_cfa = rng.random_range(1..=30);
        let n_da = rng.random_range(1..=(MAX_BIPARTITE_NODES - n_cfa).min(25));
        let mut e = toy_project(n_cfa, &["omission"]);
        // what each CFA was analysed with, kept independently of the engine
        let mut plan: Vec<(EntityId, bool, BTreeSet<String>)> = Vec::new();
        for cfa in e.state().cfas.keys().cloned().collect::<Vec<_>>() {
            let das: BTreeSet<String> =
                (0..n_da).filter(|_| rng.random_bool(0.15)).map(|d| format!("alternative {d}")).collect();
            let baseline = das.is_empty() || rng.random_bool(0.3);
            let cmd = Command::AnalyzeCfa {
                cfa: cfa.clone(),
                effect: "degraded".into(),
                baseline_fulfills_dg: baseline,
                design_alternatives: das.iter().cloned().collect(),
                cited_assumptions: BTreeSet::new(),
            };
            e.apply(cmd, &actor()).map_err(|err| format!("trial {trial}: {err}"))?;
            plan.push((cfa, baseline, das));
        }
        let by_desc: BTreeMap<String, EntityId> =
            e.state().design_alternatives.values().map(|d| (d.description.clone(), d.id.clone())).collect();
        let chosen_desc: BTreeSet<String> = by_desc.keys().filter(|_| rng.random_bool(0.5)).cloned().collect();
        let chosen: BTreeSet<EntityId> = chosen_desc.iter().map(|d| by_desc[d].clone()).collect();
        let rejections: BTreeMap<EntityId, String> =
            by_desc.values().filter(|d| !chosen.contains(*d)).map(|d| (d.clone(), "not chosen".to_owned())).collect();

        let uncovered: Vec<EntityId> = plan
            .iter()
            .filter(|(_, baseline, das)| !baseline && das.is_disjoint(&chosen_desc))
            .map(|(c, ..)| c.clone())
            .collect();
        let cmd = Command::MakeSelection { chosen_das: chosen, rationale: "trial".into(), rejections, method_note: String::new() };
        match (e.apply(cmd, &actor()), uncovered.is_empty()) {
            (Ok(_), true) => accepted += 1,
            (Err(EngineError::CoverageGap(gap)), false) if gap == uncovered => rejected += 1,
            (got, _) => return Err(format!("trial {trial}: uncovered {uncovered:?}, engine {:?}", got.map(|a| a.result))),
        }
    }
    Ok(format!("{accepted} accepted and {rejected} rejected, all agreeing with brute force"))
}

// --- persistence -------------------------------------------------------

fn round_trip(state: &ProjectState) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
    store.save(state).map_err(|e| e.to_string())?;
    let loaded = store.load().map_err(|e| e.to_string())?;
    check(&loaded == state, || "loaded state differs".into())?;
    let replayed = Engine::replay(loaded.config.clone(), &loaded.oplog).map_err(|e| format!("{e:?}"))?;
    check(replayed.state().state_hash() == state.state_hash(), || "replay hash differs".into())
}

fn persistence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD15C);
    for seed in 0..PERSISTENCE_TRIALS {
        let engine = random_project(seed, rng.random_range(1..300));
        round_trip(engine.state()).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    let (engine, _) = scenario::run(&ScenarioConfig::default()).map_err(|e| e.to_string())?;
    round_trip(engine.state()).map_err(|e| format!("case study: {e}"))?;
    Ok(format!("{PERSISTENCE_TRIALS} fuzzed projects and the case study"))
}

// --- CLI/API parity ----------------------------------------------------

struct Step {
    cli: Vec<String>,
    op: &'static str,
    body: Value,
}

fn step(cli: &[&str], op: &'static str, body: Value) -> Step {
    Step { cli: cli.iter().map(|s| s.to_string()).collect(), op, body }
}

fn parity_steps(dir: &Path) -> Vec<Step> {
    let arch = json!({
        "segments": [{ "name": "sensing" }, { "name": "actuation" }],
        "elements": [
            { "name": "radar", "kind": "hardware", "segment": "sensing" },
            { "name": "camera", "kind": "hardware", "segment": "sensing" },
            { "name": "brake ecu", "kind": "software", "segment": "actuation" }
        ]
    });
    let params = json!({
        "elements_in_scope": ["E-1", "E-2", "E-3"],
        "failure_modes": [{ "name": "omission", "scope": "per_element" }],
        "design_goals": [{ "description": "reach a safe stop" }],
        "assignment": { "default": { "new": 0 } }
    });
    let arch_file = dir.join("arch.json");
    let params_file = dir.join("params.json");
    fs::write(&arch_file, arch.to_string()).unwrap();
    fs::write(&params_file, params.to_string()).unwrap();
    let (arch_path, params_path) = (arch_file.display().to_string(), params_file.display().to_string());
    vec![
        step(&["import", &arch_path], "import_architecture", json!({ "description": arch })),
        step(&["iteration", "open"], "open_iteration", json!({})),
        step(&["params", "define", &params_path], "define_process_parameters", params),
        step(&["assumption", "add", "--text", "radar covers 200 m"], "add_assumption", json!({ "text": "radar covers 200 m" })),
        step(
            &["cfa", "analyze", "CFA-1", "--effect", "no object list", "--da", "second radar", "--da", "camera fusion", "--cite", "A-1"],
            "analyze_cfa",
            json!({ "cfa": "CFA-1", "effect": "no object list", "baseline_fulfills_dg": false,
                    "design_alternatives": ["second radar", "camera fusion"], "cited_assumptions": ["A-1"] }),
        ),
        step(
            &["cfa", "analyze", "CFA-2", "--effect", "no images", "--baseline-fulfills-dg", "--cite", "A-1"],
            "analyze_cfa",
            json!({ "cfa": "CFA-2", "effect": "no images", "baseline_fulfills_dg": true, "design_alternatives": [], "cited_assumptions": ["A-1"] }),
        ),
        step(
            &["clarification", "raise", "--question", "what range?", "--assumption", "A-1"],
            "raise_clarification",
            json!({ "question": "what range?", "assumption": { "existing": "A-1" } }),
        ),
        step(&["iteration", "close"], "close_iteration", json!({})),
        step(
            &["clarification", "resolve", "C-1", "--expert", "supplier", "--notes", "only 150 m", "--corrected", "radar covers 150 m"],
            "resolve_clarification",
            json!({ "clarification": "C-1", "expert": "supplier", "notes": "only 150 m",
                    "outcome": { "corrected": { "new_text": "radar covers 150 m", "linked_cfas": [] } } }),
        ),
        step(
            &["cfa", "analyze", "CFA-1", "--effect", "no object list", "--da", "second radar", "--cite", "A-2"],
            "analyze_cfa",
            json!({ "cfa": "CFA-1", "effect": "no object list", "baseline_fulfills_dg": false,
                    "design_alternatives": ["second radar"], "cited_assumptions": ["A-2"] }),
        ),
        step(
            &["cfa", "analyze", "CFA-2", "--effect", "no images", "--baseline-fulfills-dg"],
            "analyze_cfa",
            json!({ "cfa": "CFA-2", "effect": "no images", "baseline_fulfills_dg": true, "design_alternatives": [], "cited_assumptions": [] }),
        ),
        step(
            &["cfa", "analyze", "CFA-3", "--effect", "no braking", "--da", "redundant ecu"],
            "analyze_cfa",
            json!({ "cfa": "CFA-3", "effect": "no braking", "baseline_fulfills_dg": false,
                    "design_alternatives": ["redundant ecu"], "cited_assumptions": [] }),
        ),
        step(
            &["clarification", "raise", "--question", "ecu budget?", "--new-assumption", "ecu budget allows two units"],
            "raise_clarification",
            json!({ "question": "ecu budget?", "assumption": { "new": { "text": "ecu budget allows two units", "linked_cfas": [] } } }),
        ),
        step(
            &["clarification", "convert", "C-2", "--expert", "purchasing", "--architect", "lead", "--due", "2026-09-01"],
            "convert_clarification_to_task",
            json!({ "clarification": "C-2", "expert": "purchasing", "responsible_architect": "lead", "due_date": "2026-09-01" }),
        ),
        step(
            &["selection", "make", "--choose", "DA-1", "--choose", "DA-3", "--reject", "DA-2=one radar is enough"],
            "make_selection",
            json!({ "chosen_das": ["DA-1", "DA-3"], "rationale": "step", "rejections": { "DA-2": "one radar is enough" } }),
        ),
        step(&["iteration", "close"], "close_iteration", json!({})),
    ]
}

fn via_cli(root: &Path, steps: &[Step]) -> Result<Vec<bool>, String> {
    let base = |extra: &[String]| {
        let mut v = vec!["atrium".to_owned(), "--project".into(), root.display().to_string(), "--actor".into(), "alice".into()];
        v.extend_from_slice(extra);
        v
    };
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let init = base(&["init".into(), "--logical-clock".into(), "--name".into(), "parity".into()]);
    check(cli_run(init, &mut out, &mut err) == 0, || String::from_utf8_lossy(&err).into_owned())?;
    let mut oks = Vec::new();
    for s in steps {
        let mut args = vec!["--rationale".to_owned(), "step".to_owned()];
        args.extend(s.cli.iter().cloned());
        let code = cli_run(base(&args), &mut out, &mut err);
        check(code != 2, || format!("{:?}: usage error {}", s.cli, String::from_utf8_lossy(&err)))?;
        oks.push(code == 0);
    }
    Ok(oks)
}

fn via_api(root: &Path, steps: &[Step]) -> Result<Vec<bool>, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let init = ["atrium", "--project", &root.display().to_string(), "init", "--logical-clock", "--name", "parity"];
    check(cli_run(init, &mut out, &mut err) == 0, || String::from_utf8_lossy(&err).into_owned())?;
    let app = router(Project::open(root).map_err(|e| e.to_string())?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let mut oks = Vec::new();
        for s in steps {
            let req = Request::post(format!("/v1/commands/{}", s.op))
                .header("x-atrium-actor", "alice")
                .header("x-atrium-rationale", "step")
                .body(Body::from(s.body.to_string()))
                .unwrap();
            let res = app.clone().oneshot(req).await.map_err(|e| e.to_string())?;
            let status = res.status();
            let body = res.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
            check(status.as_u16() != 400, || format!("{}: {}", s.op, String::from_utf8_lossy(&body)))?;
            oks.push(status.is_success());
        }
        Ok(oks)
    })
}

fn parity() -> Outcome {
    let files = tempfile::tempdir().map_err(|e| e.to_string())?;
    let steps = parity_steps(files.path());
    let (cli_dir, api_dir) = (files.path().join("cli"), files.path().join("api"));
    let cli_ok = via_cli(&cli_dir, &steps)?;
    let api_ok = via_api(&api_dir, &steps)?;
    check(cli_ok == api_ok, || format!("outcomes differ: cli {cli_ok:?}, api {api_ok:?}"))?;
    let cli_log = Store::open(&cli_dir).and_then(|s| s.load()).map_err(|e| e.to_string())?.changelog;
    let api_log = Store::open(&api_dir).and_then(|s| s.load()).map_err(|e| e.to_string())?.changelog;
    let (a, b) = (serde_json::to_value(&cli_log).unwrap(), serde_json::to_value(&api_log).unwrap());
    check(a == b, || {
        let at = cli_log.iter().zip(&api_log).position(|(x, y)| x != y).unwrap_or(cli_log.len().min(api_log.len()));
        format!("change logs diverge at entry {at}")
    })?;
    let failed = cli_ok.iter().filter(|ok| !**ok).count();
    check(failed == 1, || format!("expected exactly the gated close to fail, {failed} failed"))?;
    Ok(format!("{} steps ({failed} rejected), {} identical change entries", steps.len(), cli_log.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("scenario scale", scale),
        ("workflow statistics", statistics),
        ("propagation oracle", propagation),
        ("gate truth table", gate_table),
        ("append-only fuzz", append_only),
        ("selection coverage", selection_coverage),
        ("persistence round-trip", persistence),
        ("cli/api parity", parity),
    ];
    panic::set_hook(Box::new(|_| {}));
    let suite = Instant::now();
    let mut failures = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{:.2?}]", t.elapsed()),
            Err(why) => {
                failures += 1;
                println!("FAIL {name}: {why} [{:.2?}]", t.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    let total = suite.elapsed();
    let slow = total > SUITE_BUDGET;
    println!("{} suite runtime: {total:.2?} (budget {SUITE_BUDGET:?})", if slow { "FAIL" } else { "PASS" });
    if failures > 0 || slow {
        std::process::exit(1);
    }
}
