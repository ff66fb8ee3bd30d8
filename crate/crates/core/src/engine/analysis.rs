//! Per-CFA analysis and the end-of-iteration selection.

use std::collections::{BTreeMap, BTreeSet};

use super::*;

pub(super) fn analyze_cfa(
    s: &mut Session<'_>,
    cfa: &EntityId,
    effect: &str,
    baseline_fulfills_dg: bool,
    descriptions: &[String],
    cited: &BTreeSet<EntityId>,
) -> Result<(OpResult, Narrative), EngineError> {
    s.open_iteration_number()?;
    let current = s.st.cfas.get(cfa).ok_or_else(|| EngineError::UnknownCfa(cfa.clone()))?;
    if current.archived {
        return Err(EngineError::CfaArchived(cfa.clone()));
    }
    require_text(effect, "effect")?;
    let mut wanted: Vec<&str> = Vec::new();
    for d in descriptions {
        let d = d.trim();
        if !d.is_empty() && !wanted.contains(&d) {
            wanted.push(d);
        }
    }
    if !baseline_fulfills_dg && wanted.is_empty() {
        return Err(EngineError::ZeroDaRuleViolation);
    }
    let mut invalid = Vec::new();
    for a in cited {
        match s.st.assumptions.get(a) {
            None => return Err(EngineError::UnknownAssumption(a.clone())),
            Some(a) if a.validity == Validity::Invalid => invalid.push(a.id.clone()),
            Some(_) => {}
        }
    }
    if !invalid.is_empty() {
        return Err(EngineError::InvalidAssumptionCited(invalid));
    }
    let previous: BTreeSet<EntityId> =
        current.analysis.as_ref().map(|a| a.design_alternatives.clone()).unwrap_or_default();

    // Alternatives are identified by description across the project, which
    // is how one alternative comes to satisfy several CFAs.
    let mut das = Vec::new();
    let mut created = Vec::new();
    for d in wanted {
        let found = s.st.design_alternatives.values().find(|x| x.description == d).map(|x| x.id.clone());
        let id = match found {
            Some(id) => id,
            None => {
                let id = s.alloc(EntityKind::DesignAlternative);
                s.st.design_alternatives.insert(
                    id.clone(),
                    DesignAlternative {
                        id: id.clone(),
                        description: d.to_owned(),
                        satisfies_cfas: BTreeSet::new(),
                        status: DaStatus::Candidate,
                        rejection_rationale: None,
                        needs_review: false,
                    },
                );
                created.push(id.clone());
                id
            }
        };
        let da = s.da_mut(&id);
        da.satisfies_cfas.insert(cfa.clone());
        da.needs_review = false;
        s.link(LinkKind::CfaToDa, cfa, &id);
        das.push(id);
    }
    let keep: BTreeSet<EntityId> = das.iter().cloned().collect();
    for stale in previous.difference(&keep) {
        if s.st.design_alternatives.contains_key(stale) {
            s.da_mut(stale).satisfies_cfas.remove(cfa);
        }
        s.unlink(LinkKind::CfaToDa, cfa, stale);
    }
    for a in cited {
        s.assumption_mut(a).linked_cfas.insert(cfa.clone());
        s.link(LinkKind::AssumptionToCfa, a, cfa);
    }

    let (at, actor) = (s.at, s.actor.clone());
    let c = s.cfa_mut(cfa);
    let was = c.state;
    c.analysis = Some(AnalysisRecord {
        functional_effect: effect.to_owned(),
        baseline_fulfills_dg,
        design_alternatives: keep,
        cited_assumptions: cited.clone(),
        analyst: actor,
        analyzed_at: at,
    });
    c.state = CfaState::Processed;
    c.needs_review = false;

    let narrative = Narrative {
        request: format!("analyse {cfa}"),
        analysis: format!(
            "functional effect: {effect}; baseline fulfils design goal: {baseline_fulfills_dg}; citing {}",
            join_ids(cited)
        ),
        decision: format!("{cfa} {was:?} -> Processed with alternatives {}", join_ids(&das)),
        rationale: None,
    };
    Ok((OpResult::CfaAnalyzed { cfa: cfa.clone(), design_alternatives: das, created_das: created }, narrative))
}

pub(super) fn make_selection(
    s: &mut Session<'_>,
    chosen: &BTreeSet<EntityId>,
    rationale: &str,
    rejections: &BTreeMap<EntityId, String>,
    method_note: &str,
    revise: bool,
) -> Result<(OpResult, Narrative), EngineError> {
    let number = s.open_iteration_number()?;
    require_text(rationale, "rationale")?;
    let prior = s.st.active_selection().map(|p| p.id.clone());
    match (&prior, revise) {
        (Some(p), false) => return Err(EngineError::SelectionAlreadyMade(p.clone())),
        (None, true) => return Err(EngineError::NoSelectionToRevise),
        _ => {}
    }
    let unprocessed: Vec<EntityId> = s
        .st
        .cfas
        .values()
        .filter(|c| !c.archived && c.state == CfaState::Unprocessed)
        .map(|c| c.id.clone())
        .collect();
    if !unprocessed.is_empty() {
        return Err(EngineError::UnprocessedCfasExist(unprocessed));
    }

    // A revision starts from a clean slate; rollback restores on failure.
    if prior.is_some() {
        let decided: Vec<EntityId> = s
            .st
            .design_alternatives
            .values()
            .filter(|d| d.status != DaStatus::Candidate)
            .map(|d| d.id.clone())
            .collect();
        for id in decided {
            let d = s.da_mut(&id);
            d.status = DaStatus::Candidate;
            d.rejection_rationale = None;
        }
    }

    let is_candidate =
        |st: &ProjectState, id: &EntityId| st.design_alternatives.get(id).is_some_and(|d| d.status == DaStatus::Candidate);
    let mut not_candidate: Vec<EntityId> =
        chosen.iter().chain(rejections.keys()).filter(|id| !is_candidate(s.st, id)).cloned().collect();
    not_candidate.extend(rejections.keys().filter(|id| chosen.contains(*id)).cloned());
    not_candidate.sort();
    not_candidate.dedup();
    if !not_candidate.is_empty() {
        return Err(EngineError::NotCandidate(not_candidate));
    }

    let uncovered: Vec<EntityId> = s
        .st
        .cfas
        .values()
        .filter(|c| c.is_needy())
        .filter(|c| !s.st.links_from(LinkKind::CfaToDa, &c.id).any(|l| chosen.contains(&l.to)))
        .map(|c| c.id.clone())
        .collect();
    if !uncovered.is_empty() {
        return Err(EngineError::CoverageGap(uncovered));
    }

    let live = |st: &ProjectState, d: &DesignAlternative| {
        d.satisfies_cfas.iter().any(|c| st.cfas.get(c).is_some_and(|c| !c.archived))
    };
    let missing: Vec<EntityId> = s
        .st
        .design_alternatives
        .values()
        .filter(|d| d.status == DaStatus::Candidate && live(s.st, d) && !chosen.contains(&d.id))
        .filter(|d| rejections.get(&d.id).is_none_or(|r| r.trim().is_empty()))
        .map(|d| d.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EngineError::MissingRejectionRationale(missing));
    }
    let blank: Vec<EntityId> =
        rejections.iter().filter(|(_, r)| r.trim().is_empty()).map(|(id, _)| id.clone()).collect();
    if !blank.is_empty() {
        return Err(EngineError::MissingRejectionRationale(blank));
    }

    let sel = s.alloc(EntityKind::Selection);
    s.st.selections.insert(
        sel.clone(),
        Selection {
            id: sel.clone(),
            iteration: number,
            chosen_das: chosen.clone(),
            rationale: rationale.to_owned(),
            method_note: method_note.to_owned(),
            supersedes: prior.clone(),
            superseded_by: None,
        },
    );
    if let Some(p) = &prior {
        s.selection_mut(p).superseded_by = Some(sel.clone());
    }
    for da in chosen {
        s.da_mut(da).status = DaStatus::Selected;
        s.link(LinkKind::DaToSelection, da, &sel);
    }
    for (da, why) in rejections {
        let d = s.da_mut(da);
        d.status = DaStatus::Rejected;
        d.rejection_rationale = Some(why.clone());
    }
    let selected: Vec<EntityId> = chosen.iter().cloned().collect();
    let rejected: Vec<EntityId> = rejections.keys().cloned().collect();
    let narrative = Narrative {
        request: format!(
            "{} selection for iteration {number}: choose {}",
            if revise { "revise" } else { "make" },
            join_ids(&selected)
        ),
        analysis: format!(
            "all needy CFAs covered; rejected alternatives: {}",
            rejections.iter().map(|(d, r)| format!("{d} ({r})")).collect::<Vec<_>>().join("; ")
        ),
        decision: format!("selection {sel} records {} chosen, {} rejected", selected.len(), rejected.len()),
        rationale: Some(rationale.to_owned()),
    };
    Ok((OpResult::SelectionMade { selection: sel, selected, rejected, supersedes: prior }, narrative))
}
