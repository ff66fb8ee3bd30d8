//! The complete project: every entity collection plus the change and
//! operation logs.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::changelog::ChangeEntry;
use crate::engine::LogEntry;
use crate::ids::{EntityId, EntityKind, IdAllocator};
use crate::model::*;

/// Source of engine timestamps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ClockMode {
    /// Real time, truncated to milliseconds.
    Wall,
    /// Deterministic: the first change is stamped `epoch`, each later one
    /// `step_seconds` after its predecessor. Used for generated scenarios
    /// and golden-log comparisons.
    Logical { epoch: DateTime<Utc>, step_seconds: i64 },
}

impl ClockMode {
    pub fn logical() -> Self {
        ClockMode::Logical { epoch: Utc.with_ymd_and_hms(2026, 1, 5, 8, 0, 0).unwrap(), step_seconds: 60 }
    }

    pub fn next_timestamp(&self, last: Option<DateTime<Utc>>) -> DateTime<Utc> {
        match self {
            ClockMode::Wall => {
                let now = Utc::now();
                let ms = now.timestamp_millis();
                Utc.timestamp_millis_opt(ms).single().unwrap_or(now)
            }
            ClockMode::Logical { epoch, step_seconds } => match last {
                Some(t) => t + Duration::seconds(*step_seconds),
                None => *epoch,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectConfig {
    pub name: String,
    /// Only single-point failures are analysed; combined failure modes are
    /// not generated.
    pub single_point_failures: bool,
    pub clock: ClockMode,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig { name: "atrium project".into(), single_point_failures: true, clock: ClockMode::Wall }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectState {
    pub config: ProjectConfig,
    pub ids: IdAllocator,
    pub elements: BTreeMap<EntityId, Element>,
    pub segments: BTreeMap<EntityId, Segment>,
    pub failure_modes: BTreeMap<EntityId, FailureMode>,
    pub cfas: BTreeMap<EntityId, Cfa>,
    pub design_goals: BTreeMap<EntityId, DesignGoal>,
    pub design_alternatives: BTreeMap<EntityId, DesignAlternative>,
    pub assumptions: BTreeMap<EntityId, Assumption>,
    pub clarifications: BTreeMap<EntityId, Clarification>,
    pub tasks: BTreeMap<EntityId, Task>,
    pub risks: BTreeMap<EntityId, Risk>,
    pub selections: BTreeMap<EntityId, Selection>,
    pub links: BTreeMap<EntityId, Link>,
    pub iterations: BTreeMap<EntityId, IterationRecord>,
    pub review_queues: BTreeMap<EntityId, ReviewQueue>,
    pub changelog: Vec<ChangeEntry>,
    pub oplog: Vec<LogEntry>,
    /// Fields found in store files that this version does not model, kept so
    /// that rewriting the store preserves them.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extensions: BTreeMap<EntityId, Map<String, Value>>,
}

macro_rules! collections {
    ($m:ident) => {
        $m! {
            Element => elements,
            Segment => segments,
            FailureMode => failure_modes,
            Cfa => cfas,
            DesignGoal => design_goals,
            DesignAlternative => design_alternatives,
            Assumption => assumptions,
            Clarification => clarifications,
            Task => tasks,
            Risk => risks,
            Selection => selections,
            Link => links,
            Iteration => iterations,
            ReviewQueue => review_queues,
        }
    };
}

macro_rules! impl_lookup {
    ($($kind:ident => $field:ident),* $(,)?) => {
        impl ProjectState {
            /// Clone of the entity with this id, if stored.
            pub fn entity(&self, id: &EntityId) -> Option<Entity> {
                match id.kind()? {
                    $(EntityKind::$kind => self.$field.get(id).cloned().map(Entity::$kind),)*
                    _ => None,
                }
            }

            /// Untagged JSON document of one entity.
            pub fn entity_json(&self, id: &EntityId) -> Option<Value> {
                match id.kind()? {
                    $(EntityKind::$kind => self.$field.get(id).map(|e| serde_json::to_value(e).expect("entity serializes")),)*
                    _ => None,
                }
            }

            pub fn contains(&self, id: &EntityId) -> bool {
                match id.kind() {
                    $(Some(EntityKind::$kind) => self.$field.contains_key(id),)*
                    _ => false,
                }
            }

            /// Puts an entity back to a previous document, or removes it.
            pub(crate) fn restore(&mut self, id: &EntityId, doc: Option<Value>) {
                match id.kind() {
                    $(Some(EntityKind::$kind) => {
                        match doc {
                            Some(v) => {
                                let e = serde_json::from_value(v).expect("snapshot deserializes");
                                self.$field.insert(id.clone(), e);
                            }
                            None => {
                                self.$field.remove(id);
                            }
                        }
                    })*
                    _ => {}
                }
            }

            /// Every entity as an untagged document, keyed by id.
            pub fn entity_documents(&self) -> BTreeMap<EntityId, Value> {
                let mut out = BTreeMap::new();
                $(for (id, e) in &self.$field {
                    out.insert(id.clone(), serde_json::to_value(e).expect("entity serializes"));
                })*
                out
            }

            pub fn entities(&self) -> Vec<Entity> {
                let mut out = Vec::new();
                $(out.extend(self.$field.values().cloned().map(Entity::$kind));)*
                out
            }
        }
    };
}

collections!(impl_lookup);

impl ProjectState {
    pub fn new(config: ProjectConfig) -> Self {
        ProjectState { config, ..Default::default() }
    }

    pub fn current_iteration(&self) -> Option<&IterationRecord> {
        self.iterations.values().next_back().filter(|i| i.status == IterationStatus::Open)
    }

    pub fn latest_iteration(&self) -> Option<&IterationRecord> {
        self.iterations.values().next_back()
    }

    /// Number of the open iteration, or of the last one, or 0.
    pub fn iteration_number(&self) -> u32 {
        self.latest_iteration().map_or(0, |i| i.number)
    }

    pub fn iteration(&self, number: u32) -> Option<&IterationRecord> {
        self.iterations.get(&EntityId::new(EntityKind::Iteration, number as u64))
    }

    pub fn links_from<'a>(&'a self, kind: LinkKind, from: &'a EntityId) -> impl Iterator<Item = &'a Link> + 'a {
        self.links.values().filter(move |l| l.kind == kind && &l.from == from)
    }

    pub fn links_to<'a>(&'a self, kind: LinkKind, to: &'a EntityId) -> impl Iterator<Item = &'a Link> + 'a {
        self.links.values().filter(move |l| l.kind == kind && &l.to == to)
    }

    pub fn has_link(&self, kind: LinkKind, from: &EntityId, to: &EntityId) -> bool {
        self.links.values().any(|l| l.kind == kind && &l.from == from && &l.to == to)
    }

    /// Segment and all its ancestors, innermost first. Stops on a cycle.
    pub fn segment_ancestry(&self, segment: &EntityId) -> Vec<EntityId> {
        let mut out = Vec::new();
        let mut cur = Some(segment.clone());
        while let Some(id) = cur {
            if out.contains(&id) {
                break;
            }
            cur = self.segments.get(&id).and_then(|s| s.parent.clone());
            out.push(id);
        }
        out
    }

    /// The selection currently in force for the open (or latest) iteration.
    pub fn active_selection(&self) -> Option<&Selection> {
        let n = self.iteration_number();
        self.selections.values().rev().find(|s| s.iteration == n && s.superseded_by.is_none())
    }

    /// Canonical serialization; map keys sorted, no whitespace.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn state_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
