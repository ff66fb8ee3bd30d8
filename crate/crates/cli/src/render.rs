//! Human-readable rendering. Structured output is plain serde JSON and
//! does not go through here.

use atrium_core::trace::{ImpactReport, TracedAssumption};
use atrium_core::{Applied, EntityId, GateStatus, OpResult};

pub fn ids<'a>(ids: impl IntoIterator<Item = &'a EntityId>) -> String {
    let v: Vec<&str> = ids.into_iter().map(EntityId::as_str).collect();
    if v.is_empty() {
        "-".into()
    } else {
        v.join(", ")
    }
}

pub fn applied(a: &Applied) -> String {
    let body = match &a.result {
        OpResult::Imported { segments, elements, generated_cfas, warnings } => {
            let mut s = format!(
                "imported {} segments, {} elements; {} CFAs generated",
                segments.len(),
                elements.len(),
                generated_cfas.len()
            );
            for w in warnings {
                s.push_str(&format!("\nwarning: {w}"));
            }
            s
        }
        OpResult::IterationOpened { number, roadmap_elements, carried_tasks, reset_das, warnings } => {
            let mut s = format!(
                "iteration {number} open; roadmap elements {}; carried tasks {}; alternatives reset {}",
                ids(roadmap_elements),
                ids(carried_tasks),
                reset_das.len()
            );
            for w in warnings {
                s.push_str(&format!("\nwarning: {w}"));
            }
            s
        }
        OpResult::ParametersDefined { failure_modes, design_goals, created_cfas, existing_cfas, archived_cfas } => {
            format!(
                "failure modes {}; design goals {}; CFAs created {}, kept {}, archived {}",
                ids(failure_modes),
                ids(design_goals),
                created_cfas.len(),
                existing_cfas.len(),
                archived_cfas.len()
            )
        }
        OpResult::CfaAnalyzed { cfa, design_alternatives, created_das } => format!(
            "{cfa} processed; alternatives {} (new {})",
            ids(design_alternatives),
            ids(created_das)
        ),
        OpResult::ElementAdded { element, cfas, flagged_cfas, warnings } => {
            let mut s = format!("{element} added; CFAs {}; flagged for review {}", ids(cfas), ids(flagged_cfas));
            for w in warnings {
                s.push_str(&format!("\nwarning: {w}"));
            }
            s
        }
        OpResult::ElementRetired { element, archived_cfas, flagged_das } => {
            format!("{element} retired; archived {}; alternatives flagged {}", ids(archived_cfas), ids(flagged_das))
        }
        OpResult::AssumptionAdded { assumption, review_queue } => format!(
            "{assumption} added; review queue {} with {} CFAs",
            review_queue.id,
            review_queue.items.len()
        ),
        OpResult::CfaReviewed { queue, cfa, disposition, reverted } => {
            format!("{cfa} in {queue}: {disposition:?}{}", if *reverted { ", reverted to unprocessed" } else { "" })
        }
        OpResult::AssumptionInvalidated { invalidated, replacement, reverted_cfas } => format!(
            "{invalidated} invalid; replacement {}; reverted {}",
            replacement.as_ref().map_or("-", |r| r.as_str()),
            ids(reverted_cfas)
        ),
        OpResult::ClarificationRaised { clarification, assumption, created_assumption } => format!(
            "{clarification} open on {}assumption {assumption}",
            if *created_assumption { "new " } else { "" }
        ),
        OpResult::Resolved { clarification, task, corrected, invalidated, replacement, reverted_cfas } => {
            let subject = task.as_ref().unwrap_or(clarification);
            if *corrected {
                format!(
                    "{subject} resolved as corrected; {} invalid, replacement {}; reverted {}",
                    invalidated.as_ref().map_or("-", |r| r.as_str()),
                    replacement.as_ref().map_or("-", |r| r.as_str()),
                    ids(reverted_cfas)
                )
            } else {
                format!("{subject} resolved as confirmed")
            }
        }
        OpResult::TaskCreated { task, clarification } => format!("{clarification} converted to {task}"),
        OpResult::SelectionMade { selection, selected, rejected, supersedes } => format!(
            "{selection} chose {}; rejected {}{}",
            ids(selected),
            ids(rejected),
            supersedes.as_ref().map_or(String::new(), |s| format!("; supersedes {s}"))
        ),
        OpResult::IterationClosed { number, risks, .. } => {
            format!("iteration {number} closed; risks {}", ids(risks))
        }
    };
    format!("[{}] {body}", a.change)
}

pub fn gate(g: &GateStatus) -> String {
    let mark = |ok: bool| if ok { "ok  " } else { "FAIL" };
    format!(
        "{} open clarifications: {}\n{} unprocessed CFAs: {}\n{} selection: {}\ngate {}",
        mark(g.open_clarifications.is_empty()),
        ids(&g.open_clarifications),
        mark(g.unprocessed_cfas.is_empty()),
        ids(&g.unprocessed_cfas),
        mark(!g.selection_missing),
        if g.selection_missing { "missing" } else { "made" },
        if g.passes() { "passes" } else { "blocked" }
    )
}

pub fn impact(r: &ImpactReport) -> String {
    format!(
        "impact of {}\n  CFAs reverted: {}\n  alternatives: {}\n  selections: {}\n  clarifications: {}\n  tasks: {}",
        r.trigger,
        ids(&r.affected_cfas),
        ids(&r.affected_das),
        ids(&r.affected_selections),
        ids(&r.dependent_clarifications),
        ids(&r.dependent_tasks)
    )
}

pub fn back_trace(selection: &EntityId, found: &[TracedAssumption]) -> String {
    if found.is_empty() {
        return format!("{selection} rests on no assumptions");
    }
    let mut s = format!("{selection} rests on {} assumptions", found.len());
    for t in found {
        s.push_str(&format!("\n  {}  via {} ({} paths)", t.assumption, ids(&t.path), t.path_count));
    }
    s
}
