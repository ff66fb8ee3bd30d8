//! Architecture inventory: elements, segments, failure modes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ids::EntityId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Hardware,
    Software,
    Functional,
}

/// Whether an element predates the first iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementState {
    Legacy,
    New,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementSource {
    Baseline,
    Roadmap,
    AtriumAdded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub variant_name: String,
    #[serde(default)]
    pub qualification_notes: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meets_lower_limit: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub id: EntityId,
    pub name: String,
    pub kind: ElementKind,
    pub state: ElementState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<EntityId>,
    #[serde(default)]
    pub variants: Vec<VariantSpec>,
    pub retired: bool,
    pub source: ElementSource,
    /// False when the current process parameters put the element out of
    /// scope. Unlike `retired` this is recomputed every time parameters are
    /// defined.
    pub considered: bool,
}

/// Caller-supplied description of an element; the engine assigns id,
/// state and source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub name: String,
    pub kind: ElementKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<EntityId>,
    #[serde(default)]
    pub variants: Vec<VariantSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: EntityId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<EntityId>,
    #[serde(default)]
    pub member_elements: BTreeSet<EntityId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureScope {
    PerElement,
    PerSegment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureMode {
    pub id: EntityId,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub scope: FailureScope,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureModeSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub scope: FailureScope,
}

impl FailureModeSpec {
    pub fn new(name: &str, scope: FailureScope) -> Self {
        FailureModeSpec { name: name.to_owned(), description: String::new(), scope }
    }
}
