//! Domain entities shared by every other module.

mod analysis;
mod classification;
mod inventory;
mod iteration;
mod ledger;
mod link;
mod validate;

pub use analysis::*;
pub use classification::*;
pub use inventory::*;
pub use iteration::*;
pub use ledger::*;
pub use link::*;
pub use validate::{validate_classification, validate_entity, Rule, Violation};

use serde::{Deserialize, Serialize};

use crate::ids::EntityId;

/// Any stored entity, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entity", rename_all = "snake_case")]
pub enum Entity {
    Element(Element),
    Segment(Segment),
    FailureMode(FailureMode),
    Cfa(Cfa),
    DesignGoal(DesignGoal),
    DesignAlternative(DesignAlternative),
    Assumption(Assumption),
    Clarification(Clarification),
    Task(Task),
    Risk(Risk),
    Selection(Selection),
    Link(Link),
    Iteration(IterationRecord),
    ReviewQueue(ReviewQueue),
}

impl Entity {
    pub fn id(&self) -> &EntityId {
        match self {
            Entity::Element(e) => &e.id,
            Entity::Segment(e) => &e.id,
            Entity::FailureMode(e) => &e.id,
            Entity::Cfa(e) => &e.id,
            Entity::DesignGoal(e) => &e.id,
            Entity::DesignAlternative(e) => &e.id,
            Entity::Assumption(e) => &e.id,
            Entity::Clarification(e) => &e.id,
            Entity::Task(e) => &e.id,
            Entity::Risk(e) => &e.id,
            Entity::Selection(e) => &e.id,
            Entity::Link(e) => &e.id,
            Entity::Iteration(e) => &e.id,
            Entity::ReviewQueue(e) => &e.id,
        }
    }
}
