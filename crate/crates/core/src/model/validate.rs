//! Per-entity structural checks. Cross-entity rules live in
//! [`crate::trace::integrity_check`], which reuses [`Rule`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::*;
use crate::ids::{EntityId, EntityKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "detail", rename_all = "snake_case")]
pub enum Rule {
    ProcessedRequiresAnalysis,
    ZeroDaRequiresBaseline,
    MissingDesignGoal,
    UnknownDesignGoal(EntityId),
    EmptyFunctionalEffect,
    RejectionRequiresRationale,
    CompositionWithoutSubGoals,
    DuplicateVariantName(String),
    ResolvedRequiresNotes,
    MissingField(String),
    EmptyRationale,
    LinkEndpointMismatch,
    DuplicateParameterId(String),
    DuplicateCfaPair(EntityId),
    DanglingLinkEndpoint(EntityId),
    DuplicateLink(EntityId),
    ClarificationWithoutAssumptionLink,
    SupersededByNotValid(EntityId),
    SegmentCycle,
    MembershipMismatch(EntityId),
    DuplicateFailureModeName(String),
    ChosenDaNotSelected(EntityId),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::ProcessedRequiresAnalysis => write!(f, "Processed requires analysis"),
            Rule::ZeroDaRequiresBaseline => {
                write!(f, "zero design alternatives require the baseline to fulfil the design goal")
            }
            Rule::MissingDesignGoal => write!(f, "CFA requires a design goal"),
            Rule::UnknownDesignGoal(dg) => write!(f, "design goal {dg} does not exist"),
            Rule::EmptyFunctionalEffect => write!(f, "functional effect must not be empty"),
            Rule::RejectionRequiresRationale => write!(f, "rejection requires rationale"),
            Rule::CompositionWithoutSubGoals => write!(f, "declared composition requires a sub-goal"),
            Rule::DuplicateVariantName(n) => write!(f, "variant name {n:?} repeated"),
            Rule::ResolvedRequiresNotes => write!(f, "resolution requires notes and resolver"),
            Rule::MissingField(n) => write!(f, "missing {n}"),
            Rule::EmptyRationale => write!(f, "rationale must not be empty"),
            Rule::LinkEndpointMismatch => write!(f, "link endpoints do not match link kind"),
            Rule::DuplicateParameterId(p) => write!(f, "parameter id {p} repeated"),
            Rule::DuplicateCfaPair(other) => write!(f, "target and failure mode duplicate {other}"),
            Rule::DanglingLinkEndpoint(id) => write!(f, "link endpoint {id} does not exist"),
            Rule::DuplicateLink(other) => write!(f, "link duplicates {other}"),
            Rule::ClarificationWithoutAssumptionLink => write!(f, "clarification has no assumption link"),
            Rule::SupersededByNotValid(id) => write!(f, "successor {id} is not a later valid assumption"),
            Rule::SegmentCycle => write!(f, "segment hierarchy contains a cycle"),
            Rule::MembershipMismatch(id) => write!(f, "segment membership of {id} is inconsistent"),
            Rule::DuplicateFailureModeName(n) => write!(f, "failure mode name {n:?} repeated"),
            Rule::ChosenDaNotSelected(id) => write!(f, "chosen alternative {id} is not marked selected"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: EntityId,
    #[serde(flatten)]
    pub rule: Rule,
}

impl Violation {
    pub fn new(entity: &EntityId, rule: Rule) -> Self {
        Violation { entity: entity.clone(), rule }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

/// Checks the invariants that can be decided from the entity alone.
/// An empty result means the entity is structurally sound.
pub fn validate_entity(entity: &Entity) -> Vec<Violation> {
    let id = entity.id();
    let mut out = Vec::new();
    let mut push = |rule| out.push(Violation::new(id, rule));
    match entity {
        Entity::Element(e) => {
            let mut names = BTreeSet::new();
            for v in &e.variants {
                if !names.insert(v.variant_name.as_str()) {
                    push(Rule::DuplicateVariantName(v.variant_name.clone()));
                }
            }
        }
        Entity::Cfa(c) => {
            if !c.design_goal.is(EntityKind::DesignGoal) {
                push(Rule::MissingDesignGoal);
            }
            match (&c.state, &c.analysis) {
                (CfaState::Processed, None) => push(Rule::ProcessedRequiresAnalysis),
                (CfaState::Processed, Some(a)) => {
                    if a.design_alternatives.is_empty() && !a.baseline_fulfills_dg {
                        push(Rule::ZeroDaRequiresBaseline);
                    }
                }
                _ => {}
            }
            if let Some(a) = &c.analysis {
                if a.functional_effect.trim().is_empty() {
                    push(Rule::EmptyFunctionalEffect);
                }
            }
        }
        Entity::DesignGoal(g) => {
            if g.composition.is_some() && g.sub_goals.is_empty() {
                push(Rule::CompositionWithoutSubGoals);
            }
        }
        Entity::DesignAlternative(d) => {
            if d.status == DaStatus::Rejected
                && d.rejection_rationale.as_deref().is_none_or(|r| r.trim().is_empty())
            {
                push(Rule::RejectionRequiresRationale);
            }
        }
        Entity::Clarification(c) => {
            if !c.linked_assumption.is(EntityKind::Assumption) {
                push(Rule::MissingField("linked_assumption".into()));
            }
            if c.status == ClarificationStatus::Resolved
                && (c.resolution_notes.as_deref().is_none_or(|n| n.trim().is_empty())
                    || c.resolved_by.as_ref().is_none_or(|a| a.is_blank()))
            {
                push(Rule::ResolvedRequiresNotes);
            }
        }
        Entity::Task(t) => {
            if t.expert.is_blank() {
                push(Rule::MissingField("expert".into()));
            }
            if t.responsible_architect.is_blank() {
                push(Rule::MissingField("responsible_architect".into()));
            }
        }
        Entity::Selection(s) => {
            if s.rationale.trim().is_empty() {
                push(Rule::EmptyRationale);
            }
        }
        Entity::Link(l) => {
            if !l.endpoints_match_kind() {
                push(Rule::LinkEndpointMismatch);
            }
        }
        Entity::Segment(_)
        | Entity::FailureMode(_)
        | Entity::Assumption(_)
        | Entity::Risk(_)
        | Entity::Iteration(_)
        | Entity::ReviewQueue(_) => {}
    }
    out
}

/// Parameter-id uniqueness for a classification table.
pub fn validate_classification(c: &FunctionClassification) -> Vec<Rule> {
    c.duplicate_ids().into_iter().map(Rule::DuplicateParameterId).collect()
}

#[cfg(test)]
mod tests {
    use chrono::{TimeZone, Utc};

    use super::*;
    use crate::ids::ActorId;

    fn cfa(state: CfaState, analysis: Option<AnalysisRecord>) -> Entity {
        Entity::Cfa(Cfa {
            id: "CFA-1".into(),
            target: CfaTarget::Element("E-1".into()),
            failure_mode: "FM-1".into(),
            state,
            design_goal: "DG-1".into(),
            analysis,
            archived: false,
            needs_review: false,
        })
    }

    fn record(baseline: bool, das: &[&str]) -> AnalysisRecord {
        AnalysisRecord {
            functional_effect: "loss of braking request".into(),
            baseline_fulfills_dg: baseline,
            design_alternatives: das.iter().map(|d| EntityId::from(*d)).collect(),
            cited_assumptions: BTreeSet::new(),
            analyst: ActorId::new("arch"),
            analyzed_at: Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap(),
        }
    }

    fn messages(e: &Entity) -> Vec<String> {
        validate_entity(e).iter().map(|v| v.rule.to_string()).collect()
    }

    #[test]
    fn processed_with_baseline_and_no_das_is_clean() {
        assert!(validate_entity(&cfa(CfaState::Processed, Some(record(true, &[])))).is_empty());
    }

    #[test]
    fn processed_without_analysis() {
        assert_eq!(messages(&cfa(CfaState::Processed, None)), vec!["Processed requires analysis"]);
    }

    #[test]
    fn processed_zero_das_without_baseline() {
        let v = validate_entity(&cfa(CfaState::Processed, Some(record(false, &[]))));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::ZeroDaRequiresBaseline);
        assert_eq!(v[0].entity.as_str(), "CFA-1");
    }

    #[test]
    fn rejected_da_needs_rationale() {
        let mut da = DesignAlternative {
            id: "DA-1".into(),
            description: "redundant communication path".into(),
            satisfies_cfas: BTreeSet::new(),
            status: DaStatus::Rejected,
            rejection_rationale: Some("   ".into()),
            needs_review: false,
        };
        assert_eq!(messages(&Entity::DesignAlternative(da.clone())), vec!["rejection requires rationale"]);
        da.rejection_rationale = Some("too expensive".into());
        assert!(validate_entity(&Entity::DesignAlternative(da)).is_empty());
    }

    #[test]
    fn resolved_clarification_needs_notes_and_resolver() {
        let c = Clarification {
            id: "C-1".into(),
            question: "spare bandwidth?".into(),
            status: ClarificationStatus::Resolved,
            linked_assumption: "A-1".into(),
            resolution_notes: Some("yes".into()),
            resolved_by: None,
            task: None,
        };
        assert_eq!(validate_entity(&Entity::Clarification(c))[0].rule, Rule::ResolvedRequiresNotes);
    }

    #[test]
    fn link_kind_must_match_endpoints() {
        let l = Link { id: "L-1".into(), kind: LinkKind::CfaToDa, from: "A-1".into(), to: "DA-1".into() };
        assert_eq!(validate_entity(&Entity::Link(l))[0].rule, Rule::LinkEndpointMismatch);
    }

    #[test]
    fn duplicate_variants_flagged() {
        let e = Element {
            id: "E-1".into(),
            name: "GPS".into(),
            kind: ElementKind::Hardware,
            state: ElementState::Legacy,
            segment: None,
            variants: vec![
                VariantSpec { variant_name: "std".into(), qualification_notes: String::new(), meets_lower_limit: None },
                VariantSpec { variant_name: "std".into(), qualification_notes: String::new(), meets_lower_limit: Some(true) },
            ],
            retired: false,
            source: ElementSource::Baseline,
            considered: true,
        };
        assert_eq!(validate_entity(&Entity::Element(e))[0].rule, Rule::DuplicateVariantName("std".into()));
    }

    #[test]
    fn composition_requires_sub_goal() {
        let g = DesignGoal {
            id: "DG-1".into(),
            description: "reach minimal risk condition".into(),
            sub_goals: vec![],
            composition: Some(Composition::TimeBased),
            composition_notes: String::new(),
            fsr_ref: None,
        };
        assert_eq!(validate_entity(&Entity::DesignGoal(g))[0].rule, Rule::CompositionWithoutSubGoals);
    }
}
