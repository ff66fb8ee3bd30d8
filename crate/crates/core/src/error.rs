use serde::Serialize;
use thiserror::Error;

use crate::ids::EntityId;
use crate::model::Violation;

/// Errors returned by engine operations. A failed operation leaves the
/// project untouched and records nothing.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", content = "detail")]
pub enum EngineError {
    #[error("an iteration is already open")]
    IterationAlreadyOpen,
    #[error("no iteration is open")]
    NoOpenIteration,
    #[error("no elements in scope")]
    EmptyScope,
    #[error("no design goal assigned for {0:?}")]
    UnassignedDG(Vec<String>),
    #[error("failure mode {0:?} already exists with a different scope")]
    FailureModeConflict(String),
    #[error("baseline does not fulfil the design goal and no design alternatives were given")]
    ZeroDaRuleViolation,
    #[error("cited assumptions are not valid: {0:?}")]
    InvalidAssumptionCited(Vec<EntityId>),
    #[error("CFA {0} is archived")]
    CfaArchived(EntityId),
    #[error("unknown CFA {0}")]
    UnknownCfa(EntityId),
    #[error("unknown element {0}")]
    UnknownElement(EntityId),
    #[error("unknown segment {0}")]
    UnknownSegment(String),
    #[error("unknown design goal {0}")]
    UnknownDesignGoal(String),
    #[error("element name {0:?} used more than once")]
    DuplicateElementName(String),
    #[error("element {0} is already retired")]
    AlreadyRetired(EntityId),
    #[error("element {element} is referenced by selection {selection}")]
    ElementReferencedBySelection { element: EntityId, selection: EntityId },
    #[error("assumption {0} is already invalid")]
    AlreadyInvalid(EntityId),
    #[error("unknown assumption {0}")]
    UnknownAssumption(EntityId),
    #[error("a clarification needs an existing or new assumption")]
    AssumptionRequired,
    #[error("linked assumption {0} is invalid")]
    LinkedAssumptionInvalid(EntityId),
    #[error("{0} is not open")]
    NotOpen(EntityId),
    #[error("unknown clarification {0}")]
    UnknownClarification(EntityId),
    #[error("missing required field {0}")]
    MissingField(String),
    #[error("task {0} is not open")]
    TaskNotOpen(EntityId),
    #[error("unknown task {0}")]
    UnknownTask(EntityId),
    #[error("uncovered CFAs: {0:?}")]
    CoverageGap(Vec<EntityId>),
    #[error("design alternatives without rejection rationale: {0:?}")]
    MissingRejectionRationale(Vec<EntityId>),
    #[error("unprocessed CFAs remain: {0:?}")]
    UnprocessedCfasExist(Vec<EntityId>),
    #[error("design alternatives are not candidates: {0:?}")]
    NotCandidate(Vec<EntityId>),
    #[error("a selection already exists for this iteration: {0}")]
    SelectionAlreadyMade(EntityId),
    #[error("no selection to revise in this iteration")]
    NoSelectionToRevise,
    #[error("unknown selection {0}")]
    UnknownSelection(EntityId),
    #[error("unknown review queue {0}")]
    UnknownReviewQueue(EntityId),
    #[error("CFA {cfa} is not pending review in {queue}")]
    NotPendingReview { queue: EntityId, cfa: EntityId },
    #[error(
        "iteration gate failed: open clarifications {open_clarifications:?}, unprocessed CFAs \
         {unprocessed_cfas:?}, selection missing: {selection_missing}"
    )]
    GateFailed {
        open_clarifications: Vec<EntityId>,
        unprocessed_cfas: Vec<EntityId>,
        selection_missing: bool,
    },
    #[error("invalid entity: {0:?}")]
    InvalidEntity(Vec<Violation>),
}

impl EngineError {
    /// Stable error name, shared by the CLI and the HTTP API.
    pub fn name(&self) -> &'static str {
        match self {
            EngineError::IterationAlreadyOpen => "IterationAlreadyOpen",
            EngineError::NoOpenIteration => "NoOpenIteration",
            EngineError::EmptyScope => "EmptyScope",
            EngineError::UnassignedDG(_) => "UnassignedDG",
            EngineError::FailureModeConflict(_) => "FailureModeConflict",
            EngineError::ZeroDaRuleViolation => "ZeroDaRuleViolation",
            EngineError::InvalidAssumptionCited(_) => "InvalidAssumptionCited",
            EngineError::CfaArchived(_) => "CfaArchived",
            EngineError::UnknownCfa(_) => "UnknownCfa",
            EngineError::UnknownElement(_) => "UnknownElement",
            EngineError::UnknownSegment(_) => "UnknownSegment",
            EngineError::UnknownDesignGoal(_) => "UnknownDesignGoal",
            EngineError::DuplicateElementName(_) => "DuplicateElementName",
            EngineError::AlreadyRetired(_) => "AlreadyRetired",
            EngineError::ElementReferencedBySelection { .. } => "ElementReferencedBySelection",
            EngineError::AlreadyInvalid(_) => "AlreadyInvalid",
            EngineError::UnknownAssumption(_) => "UnknownAssumption",
            EngineError::AssumptionRequired => "AssumptionRequired",
            EngineError::LinkedAssumptionInvalid(_) => "LinkedAssumptionInvalid",
            EngineError::NotOpen(_) => "NotOpen",
            EngineError::UnknownClarification(_) => "UnknownClarification",
            EngineError::MissingField(_) => "MissingField",
            EngineError::TaskNotOpen(_) => "TaskNotOpen",
            EngineError::UnknownTask(_) => "UnknownTask",
            EngineError::CoverageGap(_) => "CoverageGap",
            EngineError::MissingRejectionRationale(_) => "MissingRejectionRationale",
            EngineError::UnprocessedCfasExist(_) => "UnprocessedCfasExist",
            EngineError::NotCandidate(_) => "NotCandidate",
            EngineError::SelectionAlreadyMade(_) => "SelectionAlreadyMade",
            EngineError::NoSelectionToRevise => "NoSelectionToRevise",
            EngineError::UnknownSelection(_) => "UnknownSelection",
            EngineError::UnknownReviewQueue(_) => "UnknownReviewQueue",
            EngineError::NotPendingReview { .. } => "NotPendingReview",
            EngineError::GateFailed { .. } => "GateFailed",
            EngineError::InvalidEntity(_) => "InvalidEntity",
        }
    }

    /// Ids the error is about, for highlighting in front ends.
    pub fn offending_ids(&self) -> Vec<EntityId> {
        match self {
            EngineError::InvalidAssumptionCited(ids)
            | EngineError::CoverageGap(ids)
            | EngineError::MissingRejectionRationale(ids)
            | EngineError::UnprocessedCfasExist(ids)
            | EngineError::NotCandidate(ids) => ids.clone(),
            EngineError::CfaArchived(id)
            | EngineError::UnknownCfa(id)
            | EngineError::UnknownElement(id)
            | EngineError::AlreadyRetired(id)
            | EngineError::AlreadyInvalid(id)
            | EngineError::UnknownAssumption(id)
            | EngineError::LinkedAssumptionInvalid(id)
            | EngineError::NotOpen(id)
            | EngineError::UnknownClarification(id)
            | EngineError::TaskNotOpen(id)
            | EngineError::UnknownTask(id)
            | EngineError::SelectionAlreadyMade(id)
            | EngineError::UnknownSelection(id)
            | EngineError::UnknownReviewQueue(id) => vec![id.clone()],
            EngineError::ElementReferencedBySelection { element, selection } => {
                vec![element.clone(), selection.clone()]
            }
            EngineError::NotPendingReview { queue, cfa } => vec![queue.clone(), cfa.clone()],
            EngineError::GateFailed { open_clarifications, unprocessed_cfas, .. } => {
                open_clarifications.iter().chain(unprocessed_cfas).cloned().collect()
            }
            EngineError::InvalidEntity(v) => v.iter().map(|v| v.entity.clone()).collect(),
            _ => Vec::new(),
        }
    }

    /// Coarse category used for exit codes and HTTP statuses.
    pub fn category(&self) -> ErrorCategory {
        match self {
            EngineError::UnknownCfa(_)
            | EngineError::UnknownElement(_)
            | EngineError::UnknownSegment(_)
            | EngineError::UnknownDesignGoal(_)
            | EngineError::UnknownAssumption(_)
            | EngineError::UnknownClarification(_)
            | EngineError::UnknownTask(_)
            | EngineError::UnknownSelection(_)
            | EngineError::UnknownReviewQueue(_) => ErrorCategory::NotFound,
            EngineError::EmptyScope
            | EngineError::UnassignedDG(_)
            | EngineError::ZeroDaRuleViolation
            | EngineError::AssumptionRequired
            | EngineError::MissingField(_)
            | EngineError::MissingRejectionRationale(_)
            | EngineError::DuplicateElementName(_)
            | EngineError::FailureModeConflict(_)
            | EngineError::InvalidEntity(_) => ErrorCategory::Invalid,
            _ => ErrorCategory::Conflict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    NotFound,
    Invalid,
    Conflict,
}
