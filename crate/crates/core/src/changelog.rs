//! One change entry per engine mutation: request, analysis, decision,
//! rationale and the field-level changes that were implemented.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ids::{ActorId, EntityId};

/// Field name used when a whole entity appears or disappears.
pub const WHOLE_ENTITY: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldChange {
    pub entity: EntityId,
    pub field: String,
    pub before: Value,
    pub after: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeEntry {
    pub id: EntityId,
    pub sequence: u64,
    pub operation: String,
    pub request: String,
    pub analysis: String,
    pub decision: String,
    pub rationale: String,
    pub implemented_changes: Vec<FieldChange>,
    pub actor: ActorId,
    pub at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<u32>,
}

impl ChangeEntry {
    pub fn touches(&self, id: &EntityId) -> bool {
        self.implemented_changes.iter().any(|c| &c.entity == id)
    }
}

/// Conjunctive filter over the change log. Empty filter matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<EntityId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<ActorId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<u32>,
}

impl AuditFilter {
    pub fn matches(&self, e: &ChangeEntry) -> bool {
        self.entity.as_ref().is_none_or(|id| e.touches(id))
            && self.actor.as_ref().is_none_or(|a| &e.actor == a)
            && self.from.is_none_or(|t| e.at >= t)
            && self.until.is_none_or(|t| e.at <= t)
            && self.iteration.is_none_or(|n| e.iteration == Some(n))
    }
}

pub fn audit<'a>(log: &'a [ChangeEntry], filter: &AuditFilter) -> Vec<&'a ChangeEntry> {
    log.iter().filter(|e| filter.matches(e)).collect()
}

/// One JSON object per line, keys in sorted order.
pub fn export_jsonl<'a>(entries: impl IntoIterator<Item = &'a ChangeEntry>) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("change entries serialize"));
        out.push('\n');
    }
    out
}

/// Rebuilds entity documents purely from implemented changes.
pub fn replay_changes(log: &[ChangeEntry]) -> BTreeMap<EntityId, Value> {
    let mut docs: BTreeMap<EntityId, Value> = BTreeMap::new();
    for entry in log {
        for c in &entry.implemented_changes {
            if c.field == WHOLE_ENTITY {
                if c.after.is_null() {
                    docs.remove(&c.entity);
                } else {
                    docs.insert(c.entity.clone(), c.after.clone());
                }
                continue;
            }
            let doc = docs
                .entry(c.entity.clone())
                .or_insert_with(|| Value::Object(Default::default()));
            if let Value::Object(map) = doc {
                if c.after.is_null() {
                    map.remove(&c.field);
                } else {
                    map.insert(c.field.clone(), c.after.clone());
                }
            }
        }
    }
    docs
}

/// Top-level field diff between two versions of one entity document.
pub fn diff_documents(id: &EntityId, before: Option<&Value>, after: Option<&Value>) -> Vec<FieldChange> {
    match (before, after) {
        (None, None) => Vec::new(),
        (None, Some(a)) => vec![FieldChange {
            entity: id.clone(),
            field: WHOLE_ENTITY.into(),
            before: Value::Null,
            after: a.clone(),
        }],
        (Some(b), None) => vec![FieldChange {
            entity: id.clone(),
            field: WHOLE_ENTITY.into(),
            before: b.clone(),
            after: Value::Null,
        }],
        (Some(Value::Object(b)), Some(Value::Object(a))) => {
            let mut keys: Vec<&String> = b.keys().chain(a.keys()).collect();
            keys.sort();
            keys.dedup();
            keys.into_iter()
                .filter_map(|k| {
                    let bv = b.get(k).cloned().unwrap_or(Value::Null);
                    let av = a.get(k).cloned().unwrap_or(Value::Null);
                    (bv != av).then(|| FieldChange { entity: id.clone(), field: k.clone(), before: bv, after: av })
                })
                .collect()
        }
        (Some(b), Some(a)) if b == a => Vec::new(),
        (Some(b), Some(a)) => vec![FieldChange {
            entity: id.clone(),
            field: WHOLE_ENTITY.into(),
            before: b.clone(),
            after: a.clone(),
        }],
    }
}
