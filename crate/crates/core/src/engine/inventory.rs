//! Iteration lifecycle and the element inventory.

use std::collections::{BTreeMap, BTreeSet};

use super::*;

fn find_cfa(st: &ProjectState, target: &CfaTarget, mode: &EntityId) -> Option<EntityId> {
    st.cfas
        .values()
        .find(|c| !c.archived && &c.target == target && &c.failure_mode == mode)
        .map(|c| c.id.clone())
}

fn create_cfa(s: &mut Session<'_>, target: CfaTarget, mode: &EntityId, dg: &EntityId) -> EntityId {
    let id = s.alloc(EntityKind::Cfa);
    s.st.cfas.insert(
        id.clone(),
        Cfa {
            id: id.clone(),
            target,
            failure_mode: mode.clone(),
            state: CfaState::Unprocessed,
            design_goal: dg.clone(),
            analysis: None,
            archived: false,
            needs_review: false,
        },
    );
    id
}

fn archive_cfa(s: &mut Session<'_>, id: &EntityId) {
    s.cfa_mut(id).archived = true;
}

/// Segments (with ancestors) that hold at least one in-scope, non-retired
/// element.
pub(super) fn populated_segments(st: &ProjectState, scope: &BTreeSet<EntityId>) -> BTreeSet<EntityId> {
    let mut out = BTreeSet::new();
    for id in scope {
        let Some(e) = st.elements.get(id) else { continue };
        if e.retired {
            continue;
        }
        if let Some(seg) = &e.segment {
            out.extend(st.segment_ancestry(seg));
        }
    }
    out
}

fn element_from_spec(
    s: &mut Session<'_>,
    spec: &ElementSpec,
    state: ElementState,
    source: ElementSource,
) -> Result<EntityId, EngineError> {
    if let Some(seg) = &spec.segment {
        if !s.st.segments.contains_key(seg) {
            return Err(EngineError::UnknownSegment(seg.to_string()));
        }
    }
    require_text(&spec.name, "name")?;
    let id = s.alloc(EntityKind::Element);
    let element = Element {
        id: id.clone(),
        name: spec.name.clone(),
        kind: spec.kind,
        state,
        segment: spec.segment.clone(),
        variants: spec.variants.clone(),
        retired: false,
        source,
        considered: true,
    };
    let problems = validate_entity(&Entity::Element(element.clone()));
    if !problems.is_empty() {
        return Err(EngineError::InvalidEntity(problems));
    }
    s.st.elements.insert(id.clone(), element);
    if let Some(seg) = &spec.segment {
        s.segment_mut(seg).member_elements.insert(id.clone());
    }
    Ok(id)
}

struct Generated {
    created: Vec<EntityId>,
    flagged: Vec<EntityId>,
}

/// Applies the CFA generation rule to one newly added element using the open
/// iteration's parameters and default design goal.
fn generate_for_new_element(s: &mut Session<'_>, element: &EntityId) -> Result<Generated, EngineError> {
    let mut out = Generated { created: Vec::new(), flagged: Vec::new() };
    let Some(it) = s.st.current_iteration() else { return Ok(out) };
    if !it.parameters.defined {
        return Ok(out);
    }
    let params = it.parameters.clone();
    if params.failure_modes.is_empty() {
        s.current_iteration_mut().parameters.scope.insert(element.clone());
        return Ok(out);
    }
    let Some(dg) = params.default_design_goal.clone() else {
        let name = s.st.elements[element].name.clone();
        return Err(EngineError::UnassignedDG(vec![name]));
    };
    s.current_iteration_mut().parameters.scope.insert(element.clone());
    let ancestry = s.st.elements[element]
        .segment
        .as_ref()
        .map(|seg| s.st.segment_ancestry(seg))
        .unwrap_or_default();
    for mode_id in &params.failure_modes {
        let scope = s.st.failure_modes[mode_id].scope;
        match scope {
            FailureScope::PerElement => {
                let target = CfaTarget::Element(element.clone());
                if find_cfa(s.st, &target, mode_id).is_none() {
                    out.created.push(create_cfa(s, target, mode_id, &dg));
                }
            }
            FailureScope::PerSegment => {
                for seg in &ancestry {
                    let target = CfaTarget::Segment(seg.clone());
                    match find_cfa(s.st, &target, mode_id) {
                        Some(existing) => {
                            s.cfa_mut(&existing).needs_review = true;
                            out.flagged.push(existing);
                        }
                        None => out.created.push(create_cfa(s, target, mode_id, &dg)),
                    }
                }
            }
        }
    }
    Ok(out)
}

pub(super) fn import_architecture(
    s: &mut Session<'_>,
    desc: &ArchitectureDescription,
) -> Result<(OpResult, Narrative), EngineError> {
    let mut warnings = Vec::new();
    if desc.segments.is_empty() && desc.elements.is_empty() {
        warnings.push("architecture description is empty".to_owned());
    }
    let mut names: BTreeSet<&str> = s
        .st
        .elements
        .values()
        .filter(|e| !e.retired)
        .map(|e| e.name.as_str())
        .collect();
    for e in &desc.elements {
        if !names.insert(e.name.as_str()) {
            return Err(EngineError::DuplicateElementName(e.name.clone()));
        }
    }
    let before_first = s.st.iterations.is_empty();
    let (state, source) = if before_first {
        (ElementState::Legacy, ElementSource::Baseline)
    } else {
        (ElementState::New, ElementSource::AtriumAdded)
    };

    let mut by_name: BTreeMap<String, EntityId> =
        s.st.segments.values().map(|g| (g.name.clone(), g.id.clone())).collect();
    let mut segments = Vec::new();
    for decl in &desc.segments {
        require_text(&decl.name, "segment name")?;
        let parent = match &decl.parent {
            Some(p) => Some(by_name.get(p).cloned().ok_or_else(|| EngineError::UnknownSegment(p.clone()))?),
            None => None,
        };
        let id = s.alloc(EntityKind::Segment);
        s.st.segments.insert(
            id.clone(),
            Segment { id: id.clone(), name: decl.name.clone(), parent, member_elements: BTreeSet::new() },
        );
        by_name.insert(decl.name.clone(), id.clone());
        segments.push(id);
    }

    let mut elements = Vec::new();
    let mut generated = Vec::new();
    for decl in &desc.elements {
        let segment = match &decl.segment {
            Some(name) => {
                Some(by_name.get(name).cloned().ok_or_else(|| EngineError::UnknownSegment(name.clone()))?)
            }
            None => None,
        };
        let spec =
            ElementSpec { name: decl.name.clone(), kind: decl.kind, segment, variants: decl.variants.clone() };
        let id = element_from_spec(s, &spec, state, source)?;
        generated.extend(generate_for_new_element(s, &id)?.created);
        elements.push(id);
    }

    let narrative = Narrative {
        request: format!("import {} segment(s) and {} element(s)", segments.len(), elements.len()),
        analysis: format!("elements enter the inventory as {state:?}"),
        decision: format!("imported elements {}", join_ids(&elements)),
        rationale: None,
    };
    Ok((OpResult::Imported { segments, elements, generated_cfas: generated, warnings }, narrative))
}

pub(super) fn open_iteration(
    s: &mut Session<'_>,
    roadmap: &[ElementSpec],
    classification: Option<&FunctionClassification>,
) -> Result<(OpResult, Narrative), EngineError> {
    if s.st.current_iteration().is_some() {
        return Err(EngineError::IterationAlreadyOpen);
    }
    if let Some(c) = classification {
        let dups = c.duplicate_ids();
        if !dups.is_empty() {
            let it = s.st.ids.peek(EntityKind::Iteration);
            return Err(EngineError::InvalidEntity(
                dups.into_iter().map(|d| Violation::new(&it, Rule::DuplicateParameterId(d))).collect(),
            ));
        }
    }
    let previous = s.st.latest_iteration().cloned();
    let number = previous.as_ref().map_or(1, |p| p.number + 1);
    let first = previous.is_none();

    let carried_tasks: Vec<EntityId> =
        s.st.tasks.values().filter(|t| t.status == TaskStatus::Open).map(|t| t.id.clone()).collect();
    let previous_assumptions = previous
        .as_ref()
        .and_then(|p| p.deliverables.as_ref())
        .map(|d| d.assumptions.clone())
        .unwrap_or_default();
    let parameters = previous
        .as_ref()
        .map(|p| ProcessParameters { revision: 0, ..p.parameters.clone() })
        .unwrap_or_default();

    let id = s.alloc(EntityKind::Iteration);
    debug_assert_eq!(id.number(), Some(number as u64));
    s.st.iterations.insert(
        id.clone(),
        IterationRecord {
            id: id.clone(),
            number,
            status: IterationStatus::Open,
            opened_at: s.at,
            closed_at: None,
            inputs: IterationInputs {
                previous_iteration: previous.as_ref().map(|p| p.number),
                previous_assumptions,
                carried_tasks: carried_tasks.clone(),
                roadmap_elements: Vec::new(),
            },
            parameters,
            classification: classification.cloned(),
            deliverables: None,
            opened_seq: s.sequence,
            closed_seq: None,
        },
    );

    // Alternatives turned down earlier become choosable again.
    let mut reset_das = Vec::new();
    if !first {
        let ids: Vec<EntityId> = s
            .st
            .design_alternatives
            .values()
            .filter(|d| d.status != DaStatus::Candidate)
            .map(|d| d.id.clone())
            .collect();
        for da in ids {
            let d = s.da_mut(&da);
            d.status = DaStatus::Candidate;
            d.rejection_rationale = None;
            reset_das.push(da);
        }
    }

    let mut warnings = Vec::new();
    let mut roadmap_ids = Vec::new();
    let state = if first { ElementState::Legacy } else { ElementState::New };
    for spec in roadmap {
        let exists = s.st.elements.values().any(|e| !e.retired && e.name == spec.name);
        if exists {
            warnings.push(format!("roadmap element {:?} already in inventory", spec.name));
            continue;
        }
        let eid = element_from_spec(s, spec, state, ElementSource::Roadmap)?;
        generate_for_new_element(s, &eid)?;
        roadmap_ids.push(eid);
    }
    s.current_iteration_mut().inputs.roadmap_elements = roadmap_ids.clone();

    let narrative = Narrative {
        request: format!("open iteration {number}"),
        analysis: format!(
            "{} open task(s) carried forward; {} roadmap element(s) merged",
            carried_tasks.len(),
            roadmap_ids.len()
        ),
        decision: format!("iteration {number} opened; alternatives reset to candidate: {}", join_ids(&reset_das)),
        rationale: None,
    };
    Ok((
        OpResult::IterationOpened { number, roadmap_elements: roadmap_ids, carried_tasks, reset_das, warnings },
        narrative,
    ))
}

fn create_sub_goals(s: &mut Session<'_>, specs: &[SubDesignGoalSpec]) -> Vec<SubDesignGoal> {
    specs
        .iter()
        .map(|g| {
            let id = s.st.ids.allocate(EntityKind::SubDesignGoal);
            SubDesignGoal {
                id,
                description: g.description.clone(),
                activation_condition: g.activation_condition.clone(),
                children: create_sub_goals(s, &g.children),
            }
        })
        .collect()
}

pub(super) fn define_process_parameters(
    s: &mut Session<'_>,
    scope: &BTreeSet<EntityId>,
    modes: &[FailureModeSpec],
    goals: &[DesignGoalSpec],
    assignment: &DgAssignment,
) -> Result<(OpResult, Narrative), EngineError> {
    s.open_iteration_number()?;
    if scope.is_empty() {
        return Err(EngineError::EmptyScope);
    }
    for id in scope {
        match s.st.elements.get(id) {
            None => return Err(EngineError::UnknownElement(id.clone())),
            Some(e) if e.retired => return Err(EngineError::AlreadyRetired(id.clone())),
            Some(_) => {}
        }
    }

    let mut mode_ids = Vec::new();
    let mut seen_names = BTreeSet::new();
    for spec in modes {
        require_text(&spec.name, "failure mode name")?;
        if !seen_names.insert(spec.name.as_str()) {
            continue;
        }
        let existing = s.st.failure_modes.values().find(|m| m.name == spec.name).cloned();
        let id = match existing {
            Some(m) if m.scope == spec.scope => m.id,
            Some(_) => return Err(EngineError::FailureModeConflict(spec.name.clone())),
            None => {
                let id = s.alloc(EntityKind::FailureMode);
                s.st.failure_modes.insert(
                    id.clone(),
                    FailureMode {
                        id: id.clone(),
                        name: spec.name.clone(),
                        description: spec.description.clone(),
                        scope: spec.scope,
                    },
                );
                id
            }
        };
        mode_ids.push(id);
    }

    let mut goal_ids = Vec::new();
    for spec in goals {
        require_text(&spec.description, "design goal description")?;
        let id = s.alloc(EntityKind::DesignGoal);
        let sub_goals = create_sub_goals(s, &spec.sub_goals);
        let goal = DesignGoal {
            id: id.clone(),
            description: spec.description.clone(),
            sub_goals,
            composition: spec.composition,
            composition_notes: spec.composition_notes.clone(),
            fsr_ref: spec.fsr_ref.clone(),
        };
        let problems = validate_entity(&Entity::DesignGoal(goal.clone()));
        if !problems.is_empty() {
            return Err(EngineError::InvalidEntity(problems));
        }
        s.st.design_goals.insert(id.clone(), goal);
        goal_ids.push(id);
    }
    let resolve = |r: &DgRef, st: &ProjectState| -> Result<EntityId, EngineError> {
        match r {
            DgRef::New(i) => goal_ids.get(*i).cloned().ok_or_else(|| EngineError::UnknownDesignGoal(format!("new #{i}"))),
            DgRef::Existing(id) if st.design_goals.contains_key(id) => Ok(id.clone()),
            DgRef::Existing(id) => Err(EngineError::UnknownDesignGoal(id.to_string())),
        }
    };
    let default_dg = assignment.default.as_ref().map(|r| resolve(r, s.st)).transpose()?;
    let mut overrides: BTreeMap<(EntityId, String), EntityId> = BTreeMap::new();
    for o in &assignment.overrides {
        overrides.insert((o.target.clone(), o.failure_mode.clone()), resolve(&o.design_goal, s.st)?);
    }

    // Candidate (target, mode) pairs, in a stable order.
    let populated = populated_segments(s.st, scope);
    let mut wanted: Vec<(CfaTarget, EntityId)> = Vec::new();
    for mode_id in &mode_ids {
        match s.st.failure_modes[mode_id].scope {
            FailureScope::PerElement => {
                wanted.extend(scope.iter().map(|e| (CfaTarget::Element(e.clone()), mode_id.clone())));
            }
            FailureScope::PerSegment => {
                wanted.extend(populated.iter().map(|g| (CfaTarget::Segment(g.clone()), mode_id.clone())));
            }
        }
    }

    let mut created = Vec::new();
    let mut existing = Vec::new();
    let mut unassigned = Vec::new();
    for (target, mode_id) in &wanted {
        if let Some(id) = find_cfa(s.st, target, mode_id) {
            existing.push(id);
            continue;
        }
        let mode_name = s.st.failure_modes[mode_id].name.clone();
        let dg = overrides.get(&(target.id().clone(), mode_name.clone())).or(default_dg.as_ref()).cloned();
        match dg {
            Some(dg) => created.push(create_cfa(s, target.clone(), mode_id, &dg)),
            None => unassigned.push(format!("{} x {}", target.id(), mode_name)),
        }
    }
    if !unassigned.is_empty() {
        return Err(EngineError::UnassignedDG(unassigned));
    }

    // Everything outside scope or outside the active modes is archived.
    let wanted_set: BTreeSet<&(CfaTarget, EntityId)> = wanted.iter().collect();
    let stale: Vec<EntityId> = s
        .st
        .cfas
        .values()
        .filter(|c| !c.archived && !wanted_set.contains(&(c.target.clone(), c.failure_mode.clone())))
        .map(|c| c.id.clone())
        .collect();
    for id in &stale {
        archive_cfa(s, id);
    }
    let toggles: Vec<(EntityId, bool)> = s
        .st
        .elements
        .values()
        .filter(|e| !e.retired && e.considered != scope.contains(&e.id))
        .map(|e| (e.id.clone(), scope.contains(&e.id)))
        .collect();
    for (id, considered) in toggles {
        s.element_mut(&id).considered = considered;
    }

    let it = s.current_iteration_mut();
    it.parameters = ProcessParameters {
        scope: scope.clone(),
        failure_modes: mode_ids.clone(),
        default_design_goal: default_dg,
        defined: true,
        revision: it.parameters.revision + 1,
    };

    let narrative = Narrative {
        request: format!(
            "define parameters: {} element(s) in scope, {} failure mode(s), {} new design goal(s)",
            scope.len(),
            mode_ids.len(),
            goal_ids.len()
        ),
        analysis: format!("{} CFA(s) required, {} already present", wanted.len(), existing.len()),
        decision: format!("generated {} CFA(s); archived {}", created.len(), join_ids(&stale)),
        rationale: None,
    };
    Ok((
        OpResult::ParametersDefined {
            failure_modes: mode_ids,
            design_goals: goal_ids,
            created_cfas: created,
            existing_cfas: existing,
            archived_cfas: stale,
        },
        narrative,
    ))
}

pub(super) fn add_element(s: &mut Session<'_>, spec: &ElementSpec) -> Result<(OpResult, Narrative), EngineError> {
    s.open_iteration_number()?;
    let mut warnings = Vec::new();
    if s.st.elements.values().any(|e| !e.retired && e.name == spec.name) {
        warnings.push(format!("DuplicateName: an element named {:?} already exists", spec.name));
    }
    let id = element_from_spec(s, spec, ElementState::New, ElementSource::AtriumAdded)?;
    let generated = generate_for_new_element(s, &id)?;
    let params = &s.st.current_iteration().expect("open").parameters;
    if !params.defined || params.failure_modes.is_empty() {
        warnings.push("no failure modes defined; no CFAs generated".to_owned());
    }
    let narrative = Narrative {
        request: format!("add element {:?}", spec.name),
        analysis: format!("re-review needed for segment CFAs {}", join_ids(&generated.flagged)),
        decision: format!("element {id} added with CFAs {}", join_ids(&generated.created)),
        rationale: None,
    };
    Ok((
        OpResult::ElementAdded { element: id, cfas: generated.created, flagged_cfas: generated.flagged, warnings },
        narrative,
    ))
}

pub(super) fn retire_element(
    s: &mut Session<'_>,
    element: &EntityId,
    rationale: &str,
) -> Result<(OpResult, Narrative), EngineError> {
    let e = s.st.elements.get(element).ok_or_else(|| EngineError::UnknownElement(element.clone()))?;
    if e.retired {
        return Err(EngineError::AlreadyRetired(element.clone()));
    }
    require_text(rationale, "rationale")?;
    let own_cfas: Vec<EntityId> = s
        .st
        .cfas
        .values()
        .filter(|c| !c.archived && c.target == CfaTarget::Element(element.clone()))
        .map(|c| c.id.clone())
        .collect();

    if let Some(sel) = s.st.active_selection() {
        for da in &sel.chosen_das {
            let reaches = s.st.links_to(LinkKind::CfaToDa, da).any(|l| {
                s.st.cfas.get(&l.from).is_some_and(|c| c.target == CfaTarget::Element(element.clone()))
            });
            if reaches {
                return Err(EngineError::ElementReferencedBySelection {
                    element: element.clone(),
                    selection: sel.id.clone(),
                });
            }
        }
    }

    s.element_mut(element).retired = true;
    for id in &own_cfas {
        archive_cfa(s, id);
    }
    let affected: BTreeSet<EntityId> = s
        .st
        .design_alternatives
        .values()
        .filter(|d| d.satisfies_cfas.iter().any(|c| own_cfas.contains(c)))
        .map(|d| d.id.clone())
        .collect();
    let mut flagged = Vec::new();
    for da in affected {
        let all_archived = s.st.design_alternatives[&da]
            .satisfies_cfas
            .iter()
            .all(|c| s.st.cfas.get(c).is_none_or(|c| c.archived));
        if all_archived {
            s.da_mut(&da).needs_review = true;
            flagged.push(da);
        }
    }
    let narrative = Narrative {
        request: format!("retire element {element}"),
        analysis: format!("{} CFA(s) reference the element; alternatives left without live CFAs: {}", own_cfas.len(), join_ids(&flagged)),
        decision: format!("element retired; archived {}", join_ids(&own_cfas)),
        rationale: Some(rationale.to_owned()),
    };
    Ok((OpResult::ElementRetired { element: element.clone(), archived_cfas: own_cfas, flagged_das: flagged }, narrative))
}

pub(super) fn gate_status(st: &ProjectState) -> GateStatus {
    GateStatus {
        open_clarifications: st
            .clarifications
            .values()
            .filter(|c| c.status == ClarificationStatus::Open)
            .map(|c| c.id.clone())
            .collect(),
        unprocessed_cfas: st
            .cfas
            .values()
            .filter(|c| !c.archived && c.state == CfaState::Unprocessed)
            .map(|c| c.id.clone())
            .collect(),
        selection_missing: st.active_selection().is_none(),
    }
}

fn deliverables(st: &ProjectState, risks: &[Risk]) -> Deliverables {
    let snapshot_da = |d: &DesignAlternative| DaSnapshot {
        id: d.id.clone(),
        description: d.description.clone(),
        status: d.status,
        rejection_rationale: d.rejection_rationale.clone(),
    };
    Deliverables {
        refined_pa: RefinedPa {
            elements: st
                .elements
                .values()
                .filter(|e| !e.retired)
                .map(|e| ElementSnapshot {
                    id: e.id.clone(),
                    name: e.name.clone(),
                    kind: e.kind,
                    state: e.state,
                    segment: e.segment.clone(),
                })
                .collect(),
            selected_das: st
                .design_alternatives
                .values()
                .filter(|d| d.status == DaStatus::Selected)
                .map(snapshot_da)
                .collect(),
            rejected_das: st
                .design_alternatives
                .values()
                .filter(|d| d.status == DaStatus::Rejected)
                .map(snapshot_da)
                .collect(),
            selection: st.active_selection().map(|s| s.id.clone()),
        },
        assumptions: st
            .assumptions
            .values()
            .map(|a| AssumptionSnapshot {
                id: a.id.clone(),
                text: a.text.clone(),
                validity: a.validity,
                superseded_by: a.superseded_by.clone(),
            })
            .collect(),
        risks: risks
            .iter()
            .map(|r| {
                let t = &st.tasks[&r.source_task];
                RiskSnapshot {
                    id: r.id.clone(),
                    source_task: r.source_task.clone(),
                    description: r.description.clone(),
                    expert: t.expert.to_string(),
                    responsible_architect: t.responsible_architect.to_string(),
                    due_date: t.due_date,
                }
            })
            .collect(),
        interpretation: INTERPRETATION_NOTE.to_owned(),
    }
}

pub(super) fn close_iteration(s: &mut Session<'_>) -> Result<(OpResult, Narrative), EngineError> {
    let number = s.open_iteration_number()?;
    let gate = gate_status(s.st);
    if !gate.passes() {
        return Err(EngineError::GateFailed {
            open_clarifications: gate.open_clarifications,
            unprocessed_cfas: gate.unprocessed_cfas,
            selection_missing: gate.selection_missing,
        });
    }
    let open_tasks: Vec<Task> = s.st.tasks.values().filter(|t| t.status == TaskStatus::Open).cloned().collect();
    let mut risks = Vec::new();
    for t in &open_tasks {
        let id = s.alloc(EntityKind::Risk);
        let question = s.st.clarifications.get(&t.origin_clarification).map(|c| c.question.as_str()).unwrap_or("");
        let risk = Risk {
            id: id.clone(),
            source_task: t.id.clone(),
            iteration: number,
            description: format!(
                "unfinished task {} ({question}) rests on assumption {}; expert {}, due {}",
                t.id, t.linked_assumption, t.expert, t.due_date
            ),
        };
        s.st.risks.insert(id, risk.clone());
        risks.push(risk);
    }
    let deliverables = deliverables(s.st, &risks);
    let (at, seq) = (s.at, s.sequence);
    let it = s.current_iteration_mut();
    it.status = IterationStatus::Closed;
    it.closed_at = Some(at);
    it.closed_seq = Some(seq);
    it.deliverables = Some(deliverables.clone());
    let risk_ids: Vec<EntityId> = risks.iter().map(|r| r.id.clone()).collect();
    let narrative = Narrative {
        request: format!("close iteration {number}"),
        analysis: "no open clarifications, no unprocessed CFAs, selection present".to_owned(),
        decision: format!("iteration {number} closed with {} risk(s)", risk_ids.len()),
        rationale: None,
    };
    Ok((OpResult::IterationClosed { number, risks: risk_ids, deliverables }, narrative))
}
