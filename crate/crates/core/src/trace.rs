//! Queries over the typed link graph: back-trace from selections,
//! what-if impact of an assumption change, and integrity checking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::ids::{EntityId, EntityKind};
use crate::model::*;
use crate::state::ProjectState;

/// An assumption a selection depends on, with one witness path
/// `[selection, da, cfa, assumption]` and the number of distinct paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracedAssumption {
    pub assumption: EntityId,
    pub path: Vec<EntityId>,
    pub path_count: usize,
}

pub fn back_trace(st: &ProjectState, selection: &EntityId) -> Result<Vec<TracedAssumption>, EngineError> {
    if !st.selections.contains_key(selection) {
        return Err(EngineError::UnknownSelection(selection.clone()));
    }
    let mut found: BTreeMap<EntityId, TracedAssumption> = BTreeMap::new();
    for das in st.links_to(LinkKind::DaToSelection, selection) {
        for cfas in st.links_to(LinkKind::CfaToDa, &das.from) {
            for a in st.links_to(LinkKind::AssumptionToCfa, &cfas.from) {
                found
                    .entry(a.from.clone())
                    .and_modify(|t| t.path_count += 1)
                    .or_insert_with(|| TracedAssumption {
                        assumption: a.from.clone(),
                        path: vec![selection.clone(), das.from.clone(), cfas.from.clone(), a.from.clone()],
                        path_count: 1,
                    });
            }
        }
    }
    Ok(found.into_values().collect())
}

/// What invalidating an assumption would touch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub trigger: EntityId,
    pub affected_cfas: BTreeSet<EntityId>,
    pub affected_das: BTreeSet<EntityId>,
    pub affected_selections: BTreeSet<EntityId>,
    pub dependent_clarifications: BTreeSet<EntityId>,
    pub dependent_tasks: BTreeSet<EntityId>,
}

impl ImpactReport {
    pub fn is_empty(&self) -> bool {
        self.affected_cfas.is_empty()
            && self.affected_das.is_empty()
            && self.affected_selections.is_empty()
            && self.dependent_clarifications.is_empty()
            && self.dependent_tasks.is_empty()
    }
}

/// Pure preview of [`Command::InvalidateAssumption`](crate::engine::Command).
/// `affected_cfas` is exactly the set the invalidation would revert.
pub fn impact_of(st: &ProjectState, assumption: &EntityId) -> Result<ImpactReport, EngineError> {
    if !st.assumptions.contains_key(assumption) {
        return Err(EngineError::UnknownAssumption(assumption.clone()));
    }
    let affected_cfas: BTreeSet<EntityId> = st
        .links_from(LinkKind::AssumptionToCfa, assumption)
        .map(|l| &l.to)
        .filter(|c| st.cfas.get(*c).is_some_and(|c| c.state == CfaState::Processed))
        .cloned()
        .collect();
    let affected_das: BTreeSet<EntityId> =
        affected_cfas.iter().flat_map(|c| st.links_from(LinkKind::CfaToDa, c)).map(|l| l.to.clone()).collect();
    let affected_selections =
        affected_das.iter().flat_map(|d| st.links_from(LinkKind::DaToSelection, d)).map(|l| l.to.clone()).collect();
    Ok(ImpactReport {
        trigger: assumption.clone(),
        affected_cfas,
        affected_das,
        affected_selections,
        dependent_clarifications: st
            .links_to(LinkKind::ClarificationToAssumption, assumption)
            .map(|l| l.from.clone())
            .collect(),
        dependent_tasks: st.links_to(LinkKind::TaskToAssumption, assumption).map(|l| l.from.clone()).collect(),
    })
}

/// Every structural and cross-entity rule the engine maintains. A state
/// built solely through engine operations yields an empty list.
pub fn integrity_check(st: &ProjectState) -> Vec<Violation> {
    let mut out: Vec<Violation> = st.entities().iter().flat_map(validate_entity).collect();
    let mut push = |id: &EntityId, rule| out.push(Violation::new(id, rule));

    let mut seen_links: BTreeMap<(LinkKind, &EntityId, &EntityId), &EntityId> = BTreeMap::new();
    for l in st.links.values() {
        for end in [&l.from, &l.to] {
            if !st.contains(end) {
                push(&l.id, Rule::DanglingLinkEndpoint(end.clone()));
            }
        }
        if let Some(first) = seen_links.insert((l.kind, &l.from, &l.to), &l.id) {
            push(&l.id, Rule::DuplicateLink(first.clone()));
        }
    }

    for c in st.clarifications.values() {
        if !st.has_link(LinkKind::ClarificationToAssumption, &c.id, &c.linked_assumption) {
            push(&c.id, Rule::ClarificationWithoutAssumptionLink);
        }
    }

    let mut pairs: BTreeMap<(&EntityId, &EntityId), &EntityId> = BTreeMap::new();
    for c in st.cfas.values() {
        if !st.design_goals.contains_key(&c.design_goal) {
            push(&c.id, Rule::UnknownDesignGoal(c.design_goal.clone()));
        }
        if !c.archived {
            if let Some(first) = pairs.insert((c.target.id(), &c.failure_mode), &c.id) {
                push(&c.id, Rule::DuplicateCfaPair(first.clone()));
            }
        }
    }

    for a in st.assumptions.values() {
        if let Some(next) = &a.superseded_by {
            let later = next.number() > a.id.number();
            if a.validity == Validity::Valid || !st.assumptions.contains_key(next) || !later {
                push(&a.id, Rule::SupersededByNotValid(next.clone()));
            }
        }
    }

    for s in st.segments.values() {
        let chain = st.segment_ancestry(&s.id);
        let top = chain.last().and_then(|t| st.segments.get(t));
        if top.is_some_and(|t| t.parent.is_some()) {
            push(&s.id, Rule::SegmentCycle);
        }
        for e in &s.member_elements {
            if st.elements.get(e).and_then(|e| e.segment.as_ref()) != Some(&s.id) {
                push(&s.id, Rule::MembershipMismatch(e.clone()));
            }
        }
    }
    for e in st.elements.values() {
        if let Some(seg) = &e.segment {
            if !st.segments.get(seg).is_some_and(|s| s.member_elements.contains(&e.id)) {
                push(&e.id, Rule::MembershipMismatch(seg.clone()));
            }
        }
    }

    let mut names = BTreeSet::new();
    for m in st.failure_modes.values() {
        if !names.insert(m.name.as_str()) {
            push(&m.id, Rule::DuplicateFailureModeName(m.name.clone()));
        }
    }

    for it in st.iterations.values() {
        for rule in it.classification.iter().flat_map(validate_classification) {
            push(&it.id, rule);
        }
    }

    if let Some(sel) = st.active_selection() {
        for d in &sel.chosen_das {
            if st.design_alternatives.get(d).is_none_or(|d| d.status != DaStatus::Selected) {
                push(&sel.id, Rule::ChosenDaNotSelected(d.clone()));
            }
        }
    }
    out
}

fn node_label(st: &ProjectState, id: &EntityId) -> String {
    let text = match st.entity(id) {
        Some(Entity::Assumption(a)) => a.text,
        Some(Entity::Cfa(c)) => {
            let mode = st.failure_modes.get(&c.failure_mode).map_or("?", |m| m.name.as_str());
            let target = match &c.target {
                CfaTarget::Element(e) => st.elements.get(e).map(|e| e.name.clone()),
                CfaTarget::Segment(s) => st.segments.get(s).map(|s| s.name.clone()),
            };
            format!("{mode} of {}", target.unwrap_or_else(|| c.target.id().to_string()))
        }
        Some(Entity::DesignAlternative(d)) => d.description,
        Some(Entity::Clarification(c)) => c.question,
        Some(Entity::Task(t)) => format!("task for {}", t.origin_clarification),
        _ => String::new(),
    };
    let mut short: String = text.chars().take(40).collect();
    if text.chars().count() > 40 {
        short.push_str("...");
    }
    format!("{id}\\n{}", short.replace('\\', "\\\\").replace('"', "\\\""))
}

/// The link graph as a Graphviz digraph.
pub fn to_dot(st: &ProjectState) -> String {
    let mut nodes = BTreeSet::new();
    for l in st.links.values() {
        nodes.insert(&l.from);
        nodes.insert(&l.to);
    }
    let mut out = String::from("digraph atrium {\n  rankdir=LR;\n");
    for id in nodes {
        let shape = match id.kind() {
            Some(EntityKind::Assumption) => "note",
            Some(EntityKind::Cfa) => "box",
            Some(EntityKind::DesignAlternative) => "ellipse",
            Some(EntityKind::Selection) => "doubleoctagon",
            _ => "diamond",
        };
        let _ = writeln!(out, "  \"{id}\" [shape={shape}, label=\"{}\"];", node_label(st, id));
    }
    for l in st.links.values() {
        let _ = writeln!(out, "  \"{}\" -> \"{}\" [label=\"{:?}\"];", l.from, l.to, l.kind);
    }
    out.push_str("}\n");
    out
}
