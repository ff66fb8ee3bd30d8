use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::analysis::DaStatus;
use super::inventory::{ElementKind, ElementState};
use super::ledger::Validity;
use crate::ids::EntityId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationStatus {
    Open,
    Closed,
}

/// How the refined architecture should be read.
pub const INTERPRETATION_NOTE: &str = "This refined preliminary architecture holds only while every \
assumption in the accompanying assumption list remains valid, and it carries the open risks in the \
accompanying risk list.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementSnapshot {
    pub id: EntityId,
    pub name: String,
    pub kind: ElementKind,
    pub state: ElementState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaSnapshot {
    pub id: EntityId,
    pub description: String,
    pub status: DaStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_rationale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionSnapshot {
    pub id: EntityId,
    pub text: String,
    pub validity: Validity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superseded_by: Option<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskSnapshot {
    pub id: EntityId,
    pub source_task: EntityId,
    pub description: String,
    pub expert: String,
    pub responsible_architect: String,
    pub due_date: chrono::NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedPa {
    pub elements: Vec<ElementSnapshot>,
    pub selected_das: Vec<DaSnapshot>,
    pub rejected_das: Vec<DaSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<EntityId>,
}

/// What a closed iteration hands to the next one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deliverables {
    pub refined_pa: RefinedPa,
    pub assumptions: Vec<AssumptionSnapshot>,
    pub risks: Vec<RiskSnapshot>,
    pub interpretation: String,
}

/// Read-only inputs gathered when an iteration opens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationInputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous_iteration: Option<u32>,
    #[serde(default)]
    pub previous_assumptions: Vec<AssumptionSnapshot>,
    #[serde(default)]
    pub carried_tasks: Vec<EntityId>,
    #[serde(default)]
    pub roadmap_elements: Vec<EntityId>,
}

/// Scope, active failure modes and default design goal decided for an
/// iteration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessParameters {
    #[serde(default)]
    pub scope: BTreeSet<EntityId>,
    #[serde(default)]
    pub failure_modes: Vec<EntityId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_design_goal: Option<EntityId>,
    #[serde(default)]
    pub defined: bool,
    /// How many times the parameters were defined in this iteration.
    #[serde(default)]
    pub revision: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub id: EntityId,
    pub number: u32,
    pub status: IterationStatus,
    pub opened_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub inputs: IterationInputs,
    #[serde(default)]
    pub parameters: ProcessParameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<super::FunctionClassification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deliverables: Option<Deliverables>,
    /// Change-log sequence numbers bracketing the iteration.
    pub opened_seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_seq: Option<u64>,
}
