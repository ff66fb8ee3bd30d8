//! The uncertain-domain ledger. Nothing in here is ever deleted.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ids::{ActorId, EntityId};

/// Where the uncertainty behind an assumption comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintySource {
    DynamicConstraints,
    FunctionalAllocation,
    TechnologyImmaturity,
    VariabilityMapping,
    InconsistentMetrics,
    PatternBasedDesign,
    StrategicRelationships,
    SupplierDependencies,
    RoadmapRelated,
    RationaleManagement,
    DistributedExpertise,
    FailureModesManagement,
    InsufficientChangeManagement,
    RequirementDetailGaps,
    ElementChangeManagement,
    IncompleteDefinitions,
}

impl UncertaintySource {
    pub const ALL: [UncertaintySource; 16] = [
        UncertaintySource::DynamicConstraints,
        UncertaintySource::FunctionalAllocation,
        UncertaintySource::TechnologyImmaturity,
        UncertaintySource::VariabilityMapping,
        UncertaintySource::InconsistentMetrics,
        UncertaintySource::PatternBasedDesign,
        UncertaintySource::StrategicRelationships,
        UncertaintySource::SupplierDependencies,
        UncertaintySource::RoadmapRelated,
        UncertaintySource::RationaleManagement,
        UncertaintySource::DistributedExpertise,
        UncertaintySource::FailureModesManagement,
        UncertaintySource::InsufficientChangeManagement,
        UncertaintySource::RequirementDetailGaps,
        UncertaintySource::ElementChangeManagement,
        UncertaintySource::IncompleteDefinitions,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumption {
    pub id: EntityId,
    pub text: String,
    pub validity: Validity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<UncertaintySource>,
    pub created_in_iteration: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superseded_by: Option<EntityId>,
    #[serde(default)]
    pub linked_cfas: BTreeSet<EntityId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClarificationStatus {
    Open,
    Resolved,
    ConvertedToTask,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clarification {
    pub id: EntityId,
    pub question: String,
    pub status: ClarificationStatus,
    pub linked_assumption: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution_notes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_by: Option<ActorId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<EntityId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Open,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: EntityId,
    pub origin_clarification: EntityId,
    pub linked_assumption: EntityId,
    pub expert: ActorId,
    pub responsible_architect: ActorId,
    pub due_date: NaiveDate,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_notes: Option<String>,
    pub opened_in_iteration: u32,
}

/// An unfinished task carried out of a closed iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Risk {
    pub id: EntityId,
    pub source_task: EntityId,
    pub iteration: u32,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    PendingReview,
    KeepProcessed,
    MarkUnprocessed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub cfa: EntityId,
    pub disposition: Disposition,
}

/// Processed CFAs an architect must look at after a new assumption lands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewQueue {
    pub id: EntityId,
    pub trigger_assumption: EntityId,
    pub items: Vec<ReviewItem>,
}

impl ReviewQueue {
    pub fn candidate_cfas(&self) -> impl Iterator<Item = &EntityId> {
        self.items.iter().map(|i| &i.cfa)
    }

    pub fn pending(&self) -> usize {
        self.items.iter().filter(|i| i.disposition == Disposition::PendingReview).count()
    }
}

/// The outcome an expert reports for a clarification or task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Confirmed,
    Corrected {
        new_text: String,
        #[serde(default)]
        linked_cfas: BTreeSet<EntityId>,
    },
}
