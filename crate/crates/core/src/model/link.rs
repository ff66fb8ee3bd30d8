use serde::{Deserialize, Serialize};

use crate::ids::{EntityId, EntityKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    AssumptionToCfa,
    CfaToDa,
    DaToSelection,
    ClarificationToAssumption,
    TaskToAssumption,
}

impl LinkKind {
    pub fn endpoints(self) -> (EntityKind, EntityKind) {
        match self {
            LinkKind::AssumptionToCfa => (EntityKind::Assumption, EntityKind::Cfa),
            LinkKind::CfaToDa => (EntityKind::Cfa, EntityKind::DesignAlternative),
            LinkKind::DaToSelection => (EntityKind::DesignAlternative, EntityKind::Selection),
            LinkKind::ClarificationToAssumption => (EntityKind::Clarification, EntityKind::Assumption),
            LinkKind::TaskToAssumption => (EntityKind::Task, EntityKind::Assumption),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: EntityId,
    pub kind: LinkKind,
    pub from: EntityId,
    pub to: EntityId,
}

impl Link {
    pub fn endpoints_match_kind(&self) -> bool {
        let (f, t) = self.kind.endpoints();
        self.from.is(f) && self.to.is(t)
    }
}
