use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{ActorId, EntityId};
use crate::model::*;

/// A design goal reference inside a parameter definition: either one of the
/// goals defined in the same call (by position) or an existing goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgRef {
    New(usize),
    Existing(EntityId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DgOverride {
    pub target: EntityId,
    pub failure_mode: String,
    pub design_goal: DgRef,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DgAssignment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<DgRef>,
    #[serde(default)]
    pub overrides: Vec<DgOverride>,
}

impl DgAssignment {
    pub fn default_to(dg: DgRef) -> Self {
        DgAssignment { default: Some(dg), overrides: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDecl {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementDecl {
    pub name: String,
    pub kind: ElementKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<String>,
    #[serde(default)]
    pub variants: Vec<VariantSpec>,
}

/// Architecture description as imported from a file; segments and elements
/// refer to segments by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureDescription {
    #[serde(default)]
    pub segments: Vec<SegmentDecl>,
    #[serde(default)]
    pub elements: Vec<ElementDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionPayload {
    Existing(EntityId),
    New {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        category: Option<UncertaintySource>,
        #[serde(default)]
        linked_cfas: BTreeSet<EntityId>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub text: String,
    /// Empty means: inherit the CFA links of the invalidated assumption.
    #[serde(default)]
    pub linked_cfas: BTreeSet<EntityId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolves_clarification: Option<EntityId>,
}

/// Every state-changing operation the engine accepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    ImportArchitecture {
        description: ArchitectureDescription,
    },
    OpenIteration {
        #[serde(default)]
        roadmap_elements: Vec<ElementSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        classification: Option<FunctionClassification>,
    },
    DefineProcessParameters {
        elements_in_scope: BTreeSet<EntityId>,
        #[serde(default)]
        failure_modes: Vec<FailureModeSpec>,
        #[serde(default)]
        design_goals: Vec<DesignGoalSpec>,
        #[serde(default)]
        assignment: DgAssignment,
    },
    AnalyzeCfa {
        cfa: EntityId,
        effect: String,
        baseline_fulfills_dg: bool,
        #[serde(default)]
        design_alternatives: Vec<String>,
        #[serde(default)]
        cited_assumptions: BTreeSet<EntityId>,
    },
    AddElement {
        element: ElementSpec,
    },
    RetireElement {
        element: EntityId,
        rationale: String,
    },
    AddAssumption {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        category: Option<UncertaintySource>,
        #[serde(default)]
        linked_cfas: BTreeSet<EntityId>,
    },
    ReviewCfa {
        queue: EntityId,
        cfa: EntityId,
        disposition: Disposition,
    },
    InvalidateAssumption {
        assumption: EntityId,
        reason: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replacement: Option<Replacement>,
    },
    RaiseClarification {
        question: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        assumption: Option<AssumptionPayload>,
    },
    ResolveClarification {
        clarification: EntityId,
        outcome: Outcome,
        expert: ActorId,
        notes: String,
    },
    ConvertClarificationToTask {
        clarification: EntityId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expert: Option<ActorId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        responsible_architect: Option<ActorId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        due_date: Option<NaiveDate>,
    },
    CompleteTask {
        task: EntityId,
        outcome: Outcome,
        notes: String,
    },
    MakeSelection {
        chosen_das: BTreeSet<EntityId>,
        rationale: String,
        #[serde(default)]
        rejections: BTreeMap<EntityId, String>,
        #[serde(default)]
        method_note: String,
    },
    ReviseSelection {
        chosen_das: BTreeSet<EntityId>,
        rationale: String,
        #[serde(default)]
        rejections: BTreeMap<EntityId, String>,
        #[serde(default)]
        method_note: String,
    },
    CloseIteration {},
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ImportArchitecture { .. } => "import_architecture",
            Command::OpenIteration { .. } => "open_iteration",
            Command::DefineProcessParameters { .. } => "define_process_parameters",
            Command::AnalyzeCfa { .. } => "analyze_cfa",
            Command::AddElement { .. } => "add_element",
            Command::RetireElement { .. } => "retire_element",
            Command::AddAssumption { .. } => "add_assumption",
            Command::ReviewCfa { .. } => "review_cfa",
            Command::InvalidateAssumption { .. } => "invalidate_assumption",
            Command::RaiseClarification { .. } => "raise_clarification",
            Command::ResolveClarification { .. } => "resolve_clarification",
            Command::ConvertClarificationToTask { .. } => "convert_clarification_to_task",
            Command::CompleteTask { .. } => "complete_task",
            Command::MakeSelection { .. } => "make_selection",
            Command::ReviseSelection { .. } => "revise_selection",
            Command::CloseIteration {} => "close_iteration",
        }
    }

    pub const NAMES: [&'static str; 16] = [
        "import_architecture",
        "open_iteration",
        "define_process_parameters",
        "analyze_cfa",
        "add_element",
        "retire_element",
        "add_assumption",
        "review_cfa",
        "invalidate_assumption",
        "raise_clarification",
        "resolve_clarification",
        "convert_clarification_to_task",
        "complete_task",
        "make_selection",
        "revise_selection",
        "close_iteration",
    ];
}

/// What an operation did, returned to the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum OpResult {
    Imported {
        segments: Vec<EntityId>,
        elements: Vec<EntityId>,
        #[serde(default)]
        generated_cfas: Vec<EntityId>,
        warnings: Vec<String>,
    },
    IterationOpened {
        number: u32,
        roadmap_elements: Vec<EntityId>,
        carried_tasks: Vec<EntityId>,
        reset_das: Vec<EntityId>,
        warnings: Vec<String>,
    },
    ParametersDefined {
        failure_modes: Vec<EntityId>,
        design_goals: Vec<EntityId>,
        created_cfas: Vec<EntityId>,
        existing_cfas: Vec<EntityId>,
        archived_cfas: Vec<EntityId>,
    },
    CfaAnalyzed {
        cfa: EntityId,
        design_alternatives: Vec<EntityId>,
        created_das: Vec<EntityId>,
    },
    ElementAdded {
        element: EntityId,
        cfas: Vec<EntityId>,
        flagged_cfas: Vec<EntityId>,
        warnings: Vec<String>,
    },
    ElementRetired {
        element: EntityId,
        archived_cfas: Vec<EntityId>,
        flagged_das: Vec<EntityId>,
    },
    AssumptionAdded {
        assumption: EntityId,
        review_queue: ReviewQueue,
    },
    CfaReviewed {
        queue: EntityId,
        cfa: EntityId,
        disposition: Disposition,
        reverted: bool,
    },
    AssumptionInvalidated {
        invalidated: EntityId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replacement: Option<EntityId>,
        reverted_cfas: Vec<EntityId>,
    },
    ClarificationRaised {
        clarification: EntityId,
        assumption: EntityId,
        created_assumption: bool,
    },
    Resolved {
        clarification: EntityId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        task: Option<EntityId>,
        corrected: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        invalidated: Option<EntityId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replacement: Option<EntityId>,
        reverted_cfas: Vec<EntityId>,
    },
    TaskCreated {
        task: EntityId,
        clarification: EntityId,
    },
    SelectionMade {
        selection: EntityId,
        selected: Vec<EntityId>,
        rejected: Vec<EntityId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        supersedes: Option<EntityId>,
    },
    IterationClosed {
        number: u32,
        risks: Vec<EntityId>,
        deliverables: Deliverables,
    },
}

/// Result of a successful command together with its change entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Applied {
    pub sequence: u64,
    pub change: EntityId,
    #[serde(flatten)]
    pub result: OpResult,
}

/// One operation-log record; replaying these reproduces the project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub sequence: u64,
    pub command: Command,
    pub actor: ActorId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub at: DateTime<Utc>,
    pub change: EntityId,
}
