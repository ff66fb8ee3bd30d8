//! Assumptions, clarifications, tasks and new-assumption review.

use std::collections::BTreeSet;

use chrono::NaiveDate;

use super::*;

fn check_cfas(st: &ProjectState, cfas: &BTreeSet<EntityId>) -> Result<(), EngineError> {
    match cfas.iter().find(|c| !st.cfas.contains_key(*c)) {
        Some(c) => Err(EngineError::UnknownCfa(c.clone())),
        None => Ok(()),
    }
}

fn create_assumption(
    s: &mut Session<'_>,
    text: &str,
    category: Option<UncertaintySource>,
    linked: &BTreeSet<EntityId>,
) -> EntityId {
    let id = s.alloc(EntityKind::Assumption);
    let iteration = s.st.iteration_number();
    s.st.assumptions.insert(
        id.clone(),
        Assumption {
            id: id.clone(),
            text: text.to_owned(),
            validity: Validity::Valid,
            category,
            created_in_iteration: iteration,
            superseded_by: None,
            linked_cfas: linked.clone(),
        },
    );
    for c in linked {
        s.link(LinkKind::AssumptionToCfa, &id, c);
    }
    id
}

pub(super) fn add_assumption(
    s: &mut Session<'_>,
    text: &str,
    category: Option<UncertaintySource>,
    linked: &BTreeSet<EntityId>,
) -> Result<(OpResult, Narrative), EngineError> {
    s.open_iteration_number()?;
    require_text(text, "text")?;
    check_cfas(s.st, linked)?;
    let id = create_assumption(s, text, category, linked);
    let items: Vec<ReviewItem> = s
        .st
        .cfas
        .values()
        .filter(|c| !c.archived && c.state == CfaState::Processed)
        .map(|c| ReviewItem { cfa: c.id.clone(), disposition: Disposition::PendingReview })
        .collect();
    let qid = s.alloc(EntityKind::ReviewQueue);
    let queue = ReviewQueue { id: qid.clone(), trigger_assumption: id.clone(), items };
    s.st.review_queues.insert(qid.clone(), queue.clone());
    let narrative = Narrative {
        request: format!("add assumption {text:?}"),
        analysis: format!("{} processed CFA(s) queued for review in {qid}", queue.items.len()),
        decision: format!("assumption {id} recorded as valid, linked to {}", join_ids(linked)),
        rationale: None,
    };
    Ok((OpResult::AssumptionAdded { assumption: id, review_queue: queue }, narrative))
}

pub(super) fn review_cfa(
    s: &mut Session<'_>,
    queue: &EntityId,
    cfa: &EntityId,
    disposition: Disposition,
) -> Result<(OpResult, Narrative), EngineError> {
    s.open_iteration_number()?;
    let q = s.st.review_queues.get(queue).ok_or_else(|| EngineError::UnknownReviewQueue(queue.clone()))?;
    let pos = q
        .items
        .iter()
        .position(|i| &i.cfa == cfa && i.disposition == Disposition::PendingReview)
        .ok_or_else(|| EngineError::NotPendingReview { queue: queue.clone(), cfa: cfa.clone() })?;
    if disposition == Disposition::PendingReview {
        return Err(EngineError::MissingField("disposition".into()));
    }
    s.queue_mut(queue).items[pos].disposition = disposition;
    let mut reverted = false;
    if disposition == Disposition::MarkUnprocessed {
        let c = &s.st.cfas[cfa];
        if !c.archived && c.state == CfaState::Processed {
            s.cfa_mut(cfa).state = CfaState::Unprocessed;
            reverted = true;
        }
    }
    let narrative = Narrative {
        request: format!("review {cfa} against new assumption (queue {queue})"),
        analysis: format!("architect judged the analysis {}", if reverted { "affected" } else { "unaffected" }),
        decision: format!("{cfa}: {disposition:?}"),
        rationale: None,
    };
    Ok((OpResult::CfaReviewed { queue: queue.clone(), cfa: cfa.clone(), disposition, reverted }, narrative))
}

pub(super) struct Invalidation {
    pub reverted: Vec<EntityId>,
    pub replacement: Option<EntityId>,
}

/// Marks the assumption invalid and reverts every Processed CFA it links to.
pub(super) fn invalidate(
    s: &mut Session<'_>,
    assumption: &EntityId,
    reason: &str,
    replacement: Option<&Replacement>,
) -> Result<Invalidation, EngineError> {
    let a = s.st.assumptions.get(assumption).ok_or_else(|| EngineError::UnknownAssumption(assumption.clone()))?;
    if a.validity == Validity::Invalid {
        return Err(EngineError::AlreadyInvalid(assumption.clone()));
    }
    require_text(reason, "reason")?;
    let category = a.category;
    let linked: BTreeSet<EntityId> =
        s.st.links_from(LinkKind::AssumptionToCfa, assumption).map(|l| l.to.clone()).collect();
    if let Some(r) = replacement {
        require_text(&r.text, "replacement text")?;
        check_cfas(s.st, &r.linked_cfas)?;
        if let Some(c) = &r.resolves_clarification {
            if !s.st.clarifications.contains_key(c) {
                return Err(EngineError::UnknownClarification(c.clone()));
            }
        }
    }

    let reverted: Vec<EntityId> =
        linked.iter().filter(|c| s.st.cfas.get(*c).is_some_and(|c| c.state == CfaState::Processed)).cloned().collect();
    for c in &reverted {
        s.cfa_mut(c).state = CfaState::Unprocessed;
    }
    let new_id = replacement.map(|r| {
        let cfas = if r.linked_cfas.is_empty() { linked.clone() } else { r.linked_cfas.clone() };
        let id = create_assumption(s, &r.text, category, &cfas);
        if let Some(c) = &r.resolves_clarification {
            s.link(LinkKind::ClarificationToAssumption, c, &id);
        }
        id
    });
    let a = s.assumption_mut(assumption);
    a.validity = Validity::Invalid;
    a.superseded_by = new_id.clone();
    Ok(Invalidation { reverted, replacement: new_id })
}

fn invalidation_narrative(st: &ProjectState, assumption: &EntityId, reason: &str, inv: &Invalidation) -> Narrative {
    let dependents: Vec<&EntityId> = st
        .links_to(LinkKind::ClarificationToAssumption, assumption)
        .chain(st.links_to(LinkKind::TaskToAssumption, assumption))
        .map(|l| &l.from)
        .collect();
    Narrative {
        request: format!("invalidate assumption {assumption}: {reason}"),
        analysis: format!(
            "linked processed CFAs {}; dependent clarifications/tasks {}",
            join_ids(&inv.reverted),
            join_ids(dependents)
        ),
        decision: format!(
            "{assumption} marked invalid; reverted {}; replacement {}",
            join_ids(&inv.reverted),
            inv.replacement.as_ref().map_or("none".to_owned(), |r| r.to_string())
        ),
        rationale: Some(reason.to_owned()),
    }
}

pub(super) fn invalidate_assumption(
    s: &mut Session<'_>,
    assumption: &EntityId,
    reason: &str,
    replacement: Option<&Replacement>,
) -> Result<(OpResult, Narrative), EngineError> {
    let inv = invalidate(s, assumption, reason, replacement)?;
    let narrative = invalidation_narrative(s.st, assumption, reason, &inv);
    Ok((
        OpResult::AssumptionInvalidated {
            invalidated: assumption.clone(),
            replacement: inv.replacement,
            reverted_cfas: inv.reverted,
        },
        narrative,
    ))
}

pub(super) fn raise_clarification(
    s: &mut Session<'_>,
    question: &str,
    payload: Option<&AssumptionPayload>,
) -> Result<(OpResult, Narrative), EngineError> {
    s.open_iteration_number()?;
    require_text(question, "question")?;
    let (assumption, created) = match payload {
        None => return Err(EngineError::AssumptionRequired),
        Some(AssumptionPayload::Existing(id)) => {
            let a = s.st.assumptions.get(id).ok_or_else(|| EngineError::UnknownAssumption(id.clone()))?;
            if a.validity == Validity::Invalid {
                return Err(EngineError::LinkedAssumptionInvalid(id.clone()));
            }
            (id.clone(), false)
        }
        Some(AssumptionPayload::New { text, category, linked_cfas }) => {
            if text.trim().is_empty() {
                return Err(EngineError::AssumptionRequired);
            }
            check_cfas(s.st, linked_cfas)?;
            (create_assumption(s, text, *category, linked_cfas), true)
        }
    };
    let id = s.alloc(EntityKind::Clarification);
    s.st.clarifications.insert(
        id.clone(),
        Clarification {
            id: id.clone(),
            question: question.to_owned(),
            status: ClarificationStatus::Open,
            linked_assumption: assumption.clone(),
            resolution_notes: None,
            resolved_by: None,
            task: None,
        },
    );
    s.link(LinkKind::ClarificationToAssumption, &id, &assumption);
    let narrative = Narrative {
        request: format!("raise clarification {question:?}"),
        analysis: format!("work proceeds on assumption {assumption}"),
        decision: format!("clarification {id} open"),
        rationale: None,
    };
    Ok((OpResult::ClarificationRaised { clarification: id, assumption, created_assumption: created }, narrative))
}

pub(super) fn resolve_clarification(
    s: &mut Session<'_>,
    clarification: &EntityId,
    outcome: &Outcome,
    expert: &ActorId,
    notes: &str,
) -> Result<(OpResult, Narrative), EngineError> {
    let c = s
        .st
        .clarifications
        .get(clarification)
        .ok_or_else(|| EngineError::UnknownClarification(clarification.clone()))?;
    if c.status != ClarificationStatus::Open {
        return Err(EngineError::NotOpen(clarification.clone()));
    }
    if expert.is_blank() {
        return Err(EngineError::MissingField("expert".into()));
    }
    require_text(notes, "notes")?;
    let assumption = c.linked_assumption.clone();
    let inv = match outcome {
        Outcome::Confirmed => None,
        Outcome::Corrected { new_text, linked_cfas } => {
            let r = Replacement {
                text: new_text.clone(),
                linked_cfas: linked_cfas.clone(),
                resolves_clarification: Some(clarification.clone()),
            };
            Some(invalidate(s, &assumption, notes, Some(&r))?)
        }
    };
    let cm = s.clarification_mut(clarification);
    cm.status = ClarificationStatus::Resolved;
    cm.resolution_notes = Some(notes.to_owned());
    cm.resolved_by = Some(expert.clone());
    Ok(resolution(s.st, clarification, None, &assumption, notes, inv))
}

fn resolution(
    st: &ProjectState,
    clarification: &EntityId,
    task: Option<EntityId>,
    assumption: &EntityId,
    notes: &str,
    inv: Option<Invalidation>,
) -> (OpResult, Narrative) {
    let subject = task.as_ref().unwrap_or(clarification).clone();
    let narrative = match &inv {
        Some(inv) => {
            let mut n = invalidation_narrative(st, assumption, notes, inv);
            n.request = format!("resolve {subject} as corrected: {notes}");
            n
        }
        None => Narrative {
            request: format!("resolve {subject} as confirmed"),
            analysis: format!("expert confirmed assumption {assumption}: {notes}"),
            decision: format!("{subject} resolved; no CFAs affected"),
            rationale: None,
        },
    };
    let result = OpResult::Resolved {
        clarification: clarification.clone(),
        task,
        corrected: inv.is_some(),
        invalidated: inv.as_ref().map(|_| assumption.clone()),
        replacement: inv.as_ref().and_then(|i| i.replacement.clone()),
        reverted_cfas: inv.map(|i| i.reverted).unwrap_or_default(),
    };
    (result, narrative)
}

pub(super) fn convert_clarification_to_task(
    s: &mut Session<'_>,
    clarification: &EntityId,
    expert: Option<&ActorId>,
    architect: Option<&ActorId>,
    due: Option<NaiveDate>,
) -> Result<(OpResult, Narrative), EngineError> {
    let c = s
        .st
        .clarifications
        .get(clarification)
        .ok_or_else(|| EngineError::UnknownClarification(clarification.clone()))?;
    if c.status != ClarificationStatus::Open {
        return Err(EngineError::NotOpen(clarification.clone()));
    }
    let expert = expert.filter(|a| !a.is_blank()).ok_or_else(|| EngineError::MissingField("expert".into()))?;
    let architect = architect
        .filter(|a| !a.is_blank())
        .ok_or_else(|| EngineError::MissingField("responsible_architect".into()))?;
    let due = due.ok_or_else(|| EngineError::MissingField("due_date".into()))?;
    let assumption = c.linked_assumption.clone();
    let iteration = s.st.iteration_number();
    let id = s.alloc(EntityKind::Task);
    s.st.tasks.insert(
        id.clone(),
        Task {
            id: id.clone(),
            origin_clarification: clarification.clone(),
            linked_assumption: assumption.clone(),
            expert: expert.clone(),
            responsible_architect: architect.clone(),
            due_date: due,
            status: TaskStatus::Open,
            outcome_notes: None,
            opened_in_iteration: iteration,
        },
    );
    let cm = s.clarification_mut(clarification);
    cm.status = ClarificationStatus::ConvertedToTask;
    cm.task = Some(id.clone());
    s.link(LinkKind::TaskToAssumption, &id, &assumption);
    let narrative = Narrative {
        request: format!("convert {clarification} to a task"),
        analysis: format!("expert {expert} cannot answer immediately; assumption {assumption} stands meanwhile"),
        decision: format!("task {id} owned by {expert}, architect {architect}, due {due}"),
        rationale: None,
    };
    Ok((OpResult::TaskCreated { task: id, clarification: clarification.clone() }, narrative))
}

pub(super) fn complete_task(
    s: &mut Session<'_>,
    task: &EntityId,
    outcome: &Outcome,
    notes: &str,
) -> Result<(OpResult, Narrative), EngineError> {
    let t = s.st.tasks.get(task).ok_or_else(|| EngineError::UnknownTask(task.clone()))?;
    if t.status != TaskStatus::Open {
        return Err(EngineError::TaskNotOpen(task.clone()));
    }
    require_text(notes, "notes")?;
    let (origin, assumption, expert) = (t.origin_clarification.clone(), t.linked_assumption.clone(), t.expert.clone());
    let inv = match outcome {
        Outcome::Confirmed => None,
        Outcome::Corrected { new_text, linked_cfas } => {
            let r = Replacement {
                text: new_text.clone(),
                linked_cfas: linked_cfas.clone(),
                resolves_clarification: Some(origin.clone()),
            };
            let inv = invalidate(s, &assumption, notes, Some(&r))?;
            if let Some(new) = &inv.replacement {
                s.link(LinkKind::TaskToAssumption, task, new);
            }
            Some(inv)
        }
    };
    let tm = s.task_mut(task);
    tm.status = TaskStatus::Complete;
    tm.outcome_notes = Some(notes.to_owned());
    if s.st.clarifications.contains_key(&origin) {
        let cm = s.clarification_mut(&origin);
        cm.resolution_notes = Some(notes.to_owned());
        cm.resolved_by = Some(expert);
    }
    Ok(resolution(s.st, &origin, Some(task.clone()), &assumption, notes, inv))
}
