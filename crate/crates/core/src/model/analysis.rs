//! The perceived-certain side: CFAs, design goals, design alternatives and
//! selections.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{ActorId, EntityId};

/// What a CFA analyses: a single element, or a whole segment for failure
/// modes scoped per segment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfaTarget {
    Element(EntityId),
    Segment(EntityId),
}

impl CfaTarget {
    pub fn id(&self) -> &EntityId {
        match self {
            CfaTarget::Element(id) | CfaTarget::Segment(id) => id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfaState {
    Processed,
    Unprocessed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub functional_effect: String,
    pub baseline_fulfills_dg: bool,
    #[serde(default)]
    pub design_alternatives: BTreeSet<EntityId>,
    #[serde(default)]
    pub cited_assumptions: BTreeSet<EntityId>,
    pub analyst: ActorId,
    pub analyzed_at: DateTime<Utc>,
}

/// Component failure alternative: one failure mode applied to one target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cfa {
    pub id: EntityId,
    pub target: CfaTarget,
    pub failure_mode: EntityId,
    pub state: CfaState,
    pub design_goal: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisRecord>,
    pub archived: bool,
    /// Set when a change elsewhere (new segment member) may have affected a
    /// processed analysis. Cleared by the next analysis.
    #[serde(default)]
    pub needs_review: bool,
}

impl Cfa {
    /// Processed, and the baseline alone does not meet the design goal.
    pub fn is_needy(&self) -> bool {
        !self.archived
            && self.state == CfaState::Processed
            && self.analysis.as_ref().is_some_and(|a| !a.baseline_fulfills_dg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    TimeBased,
    StateBased,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubDesignGoal {
    pub id: EntityId,
    pub description: String,
    #[serde(default)]
    pub activation_condition: String,
    #[serde(default)]
    pub children: Vec<SubDesignGoal>,
}

impl SubDesignGoal {
    pub fn walk<'a>(&'a self, out: &mut Vec<&'a SubDesignGoal>) {
        out.push(self);
        for c in &self.children {
            c.walk(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignGoal {
    pub id: EntityId,
    pub description: String,
    #[serde(default)]
    pub sub_goals: Vec<SubDesignGoal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composition: Option<Composition>,
    #[serde(default)]
    pub composition_notes: String,
    /// Opaque reference to an external functional safety requirement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fsr_ref: Option<String>,
}

impl DesignGoal {
    pub fn all_sub_goals(&self) -> Vec<&SubDesignGoal> {
        let mut out = Vec::new();
        for g in &self.sub_goals {
            g.walk(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubDesignGoalSpec {
    pub description: String,
    #[serde(default)]
    pub activation_condition: String,
    #[serde(default)]
    pub children: Vec<SubDesignGoalSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignGoalSpec {
    pub description: String,
    #[serde(default)]
    pub sub_goals: Vec<SubDesignGoalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composition: Option<Composition>,
    #[serde(default)]
    pub composition_notes: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fsr_ref: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DaStatus {
    Candidate,
    Selected,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignAlternative {
    pub id: EntityId,
    pub description: String,
    #[serde(default)]
    pub satisfies_cfas: BTreeSet<EntityId>,
    pub status: DaStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_rationale: Option<String>,
    /// Raised when every CFA the alternative satisfies has been archived.
    #[serde(default)]
    pub needs_review: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub id: EntityId,
    pub iteration: u32,
    pub chosen_das: BTreeSet<EntityId>,
    pub rationale: String,
    #[serde(default)]
    pub method_note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersedes: Option<EntityId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superseded_by: Option<EntityId>,
}
