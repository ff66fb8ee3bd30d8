mod common;

use atrium_core::sim::{random_project, toy_project};
use atrium_core::trace::{back_trace, impact_of, integrity_check, to_dot};
use atrium_core::*;
use common::*;

/// A-2 is cited by CFA-3, which needs DA-1, which S-1 chose.
fn single_chain() -> Engine {
    let mut e = toy_project(3, &["omission"]);
    ok(&mut e, add_assumption("bus is redundant", &[]));
    ok(&mut e, add_assumption("sensor has a watchdog", &[]));
    ok(&mut e, analyze("CFA-3", false, &["add a second sensor"], &["A-2"]));
    process_all(&mut e);
    ok(&mut e, select(&["DA-1"], &[]));
    e
}

#[test]
fn back_trace_of_a_single_chain() {
    let e = single_chain();
    let found = back_trace(e.state(), &id("S-1")).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].path, vec![id("S-1"), id("DA-1"), id("CFA-3"), id("A-2")]);
    assert_eq!(found[0].path_count, 1);
}

#[test]
fn back_trace_through_uncited_cfa_is_empty() {
    let mut e = toy_project(2, &["omission"]);
    ok(&mut e, analyze("CFA-1", false, &["shield the harness"], &[]));
    process_all(&mut e);
    ok(&mut e, select(&["DA-1"], &[]));
    assert!(back_trace(e.state(), &id("S-1")).unwrap().is_empty());
}

#[test]
fn impact_of_a_single_chain() {
    let e = single_chain();
    let r = impact_of(e.state(), &id("A-2")).unwrap();
    assert_eq!(r.affected_cfas, ids(&["CFA-3"]));
    assert_eq!(r.affected_das, ids(&["DA-1"]));
    assert_eq!(r.affected_selections, ids(&["S-1"]));
    assert!(r.dependent_clarifications.is_empty() && r.dependent_tasks.is_empty());
    assert!(impact_of(e.state(), &id("A-1")).unwrap().is_empty());
}

#[test]
fn impact_lists_dependent_clarifications_and_tasks() {
    let mut e = toy_project(1, &["omission"]);
    ok(&mut e, raise_new("does it hold?", "power is stable", &["CFA-1"]));
    ok(&mut e, Command::RaiseClarification { question: "really?".into(), assumption: Some(AssumptionPayload::Existing(id("A-1"))) });
    ok(&mut e, convert("C-2"));
    let r = impact_of(e.state(), &id("A-1")).unwrap();
    assert_eq!(r.dependent_clarifications, ids(&["C-1", "C-2"]));
    assert_eq!(r.dependent_tasks, ids(&["T-1"]));
    // CFA-1 is still unprocessed, so nothing would revert
    assert!(r.affected_cfas.is_empty());
}

#[test]
fn unknown_ids_are_rejected() {
    let e = single_chain();
    assert_eq!(back_trace(e.state(), &id("S-9")).unwrap_err(), EngineError::UnknownSelection(id("S-9")));
    assert_eq!(impact_of(e.state(), &id("A-9")).unwrap_err(), EngineError::UnknownAssumption(id("A-9")));
}

#[test]
fn fresh_project_has_no_violations() {
    assert!(integrity_check(&ProjectState::new(atrium_core::sim::fuzz_config())).is_empty());
    assert!(integrity_check(single_chain().state()).is_empty());
}

#[test]
fn planted_dangling_link_is_reported_once() {
    let mut state = single_chain().into_state();
    let lid = EntityId::new(EntityKind::Link, 500);
    state.links.insert(lid.clone(), Link { id: lid.clone(), kind: LinkKind::CfaToDa, from: id("CFA-1"), to: id("DA-42") });
    let v = integrity_check(&state);
    assert_eq!(v, vec![Violation::new(&lid, Rule::DanglingLinkEndpoint(id("DA-42")))]);
}

#[test]
fn fuzzed_project_has_no_violations() {
    let e = random_project(2024, 500);
    let v = integrity_check(e.state());
    assert!(v.is_empty(), "{v:?}");
}

#[test]
fn dot_output_lists_every_link() {
    let e = single_chain();
    let dot = to_dot(e.state());
    assert!(dot.starts_with("digraph atrium {") && dot.trim_end().ends_with('}'));
    assert_eq!(dot.matches(" -> ").count(), e.state().links.len());
    assert!(dot.contains("\"S-1\" [shape=doubleoctagon"));
    assert!(dot.contains("\"A-2\" -> \"CFA-3\""));
}
