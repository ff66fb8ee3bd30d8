#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use atrium_core::sim::actor;
use atrium_core::*;

pub fn id(s: &str) -> EntityId {
    EntityId::parse(s)
}

pub fn ids(v: &[&str]) -> BTreeSet<EntityId> {
    v.iter().map(|s| id(s)).collect()
}

pub fn ok(engine: &mut Engine, cmd: Command) -> OpResult {
    let name = cmd.name();
    match engine.apply(cmd, &actor()) {
        Ok(a) => a.result,
        Err(e) => panic!("{name} failed: {e}"),
    }
}

pub fn err(engine: &mut Engine, cmd: Command) -> EngineError {
    let before = engine.state().clone();
    let e = engine.apply(cmd, &actor()).expect_err("command should fail");
    assert_eq!(&before, engine.state(), "a failed command changed the project");
    e
}

pub fn analyze(cfa: &str, baseline: bool, das: &[&str], cites: &[&str]) -> Command {
    Command::AnalyzeCfa {
        cfa: id(cfa),
        effect: format!("effect on {cfa}"),
        baseline_fulfills_dg: baseline,
        design_alternatives: das.iter().map(|d| d.to_string()).collect(),
        cited_assumptions: ids(cites),
    }
}

pub fn add_assumption(text: &str, cfas: &[&str]) -> Command {
    Command::AddAssumption { text: text.into(), category: None, linked_cfas: ids(cfas) }
}

pub fn invalidate(a: &str) -> Command {
    Command::InvalidateAssumption { assumption: id(a), reason: "no longer holds".into(), replacement: None }
}

pub fn raise_new(question: &str, text: &str, cfas: &[&str]) -> Command {
    Command::RaiseClarification {
        question: question.into(),
        assumption: Some(AssumptionPayload::New { text: text.into(), category: None, linked_cfas: ids(cfas) }),
    }
}

pub fn resolve(c: &str, outcome: Outcome) -> Command {
    Command::ResolveClarification {
        clarification: id(c),
        outcome,
        expert: ActorId::new("expert"),
        notes: "asked the expert".into(),
    }
}

pub fn corrected(text: &str, cfas: &[&str]) -> Outcome {
    Outcome::Corrected { new_text: text.into(), linked_cfas: ids(cfas) }
}

pub fn convert(c: &str) -> Command {
    Command::ConvertClarificationToTask {
        clarification: id(c),
        expert: Some(ActorId::new("expert")),
        responsible_architect: Some(ActorId::new("architect")),
        due_date: chrono::NaiveDate::from_ymd_opt(2026, 6, 30),
    }
}

pub fn select(chosen: &[&str], rejected: &[&str]) -> Command {
    Command::MakeSelection {
        chosen_das: ids(chosen),
        rationale: "covers every needy CFA".into(),
        rejections: rejected.iter().map(|d| (id(d), "not needed".to_owned())).collect::<BTreeMap<_, _>>(),
        method_note: String::new(),
    }
}

pub fn close() -> Command {
    Command::CloseIteration {}
}

pub fn cfa_state(engine: &Engine, cfa: &str) -> CfaState {
    engine.state().cfas[&id(cfa)].state
}

pub fn processed(engine: &Engine) -> BTreeSet<EntityId> {
    engine.state().cfas.values().filter(|c| c.state == CfaState::Processed).map(|c| c.id.clone()).collect()
}

/// Analyses every unprocessed CFA as fulfilling its design goal.
pub fn process_all(engine: &mut Engine) {
    let todo: Vec<EntityId> = engine
        .state()
        .cfas
        .values()
        .filter(|c| !c.archived && c.state == CfaState::Unprocessed)
        .map(|c| c.id.clone())
        .collect();
    for c in todo {
        ok(engine, analyze(c.as_str(), true, &[], &[]));
    }
}
