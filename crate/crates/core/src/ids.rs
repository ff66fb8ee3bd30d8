//! Identifiers for every entity kind the engine stores.
//!
//! Ids are opaque, type-prefixed strings (`CFA-42`, `A-17`) assigned from a
//! per-prefix monotone counter. Ordering is numeric within a prefix so that
//! `CFA-2` sorts before `CFA-10`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Element,
    Segment,
    FailureMode,
    Cfa,
    DesignGoal,
    SubDesignGoal,
    DesignAlternative,
    Assumption,
    Clarification,
    Task,
    Risk,
    Selection,
    Link,
    Iteration,
    ReviewQueue,
    ChangeEntry,
}

impl EntityKind {
    pub const ALL: [EntityKind; 16] = [
        EntityKind::Element,
        EntityKind::Segment,
        EntityKind::FailureMode,
        EntityKind::Cfa,
        EntityKind::DesignGoal,
        EntityKind::SubDesignGoal,
        EntityKind::DesignAlternative,
        EntityKind::Assumption,
        EntityKind::Clarification,
        EntityKind::Task,
        EntityKind::Risk,
        EntityKind::Selection,
        EntityKind::Link,
        EntityKind::Iteration,
        EntityKind::ReviewQueue,
        EntityKind::ChangeEntry,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            EntityKind::Element => "E",
            EntityKind::Segment => "SEG",
            EntityKind::FailureMode => "FM",
            EntityKind::Cfa => "CFA",
            EntityKind::DesignGoal => "DG",
            EntityKind::SubDesignGoal => "SDG",
            EntityKind::DesignAlternative => "DA",
            EntityKind::Assumption => "A",
            EntityKind::Clarification => "C",
            EntityKind::Task => "T",
            EntityKind::Risk => "R",
            EntityKind::Selection => "S",
            EntityKind::Link => "L",
            EntityKind::Iteration => "IT",
            EntityKind::ReviewQueue => "RQ",
            EntityKind::ChangeEntry => "CE",
        }
    }

    pub fn from_prefix(prefix: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.prefix() == prefix)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        f.write_str(&s)
    }
}

/// Opaque entity identifier such as `CFA-42`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(kind: EntityKind, n: u64) -> Self {
        EntityId(format!("{}-{}", kind.prefix(), n))
    }

    /// Wraps a raw string without checking its shape. Lookups with a
    /// malformed id simply miss.
    pub fn parse(raw: impl Into<String>) -> Self {
        EntityId(raw.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn split(&self) -> (&str, Option<u64>) {
        match self.0.rsplit_once('-') {
            Some((p, n)) => (p, n.parse().ok()),
            None => (self.0.as_str(), None),
        }
    }

    pub fn kind(&self) -> Option<EntityKind> {
        match self.split() {
            (p, Some(_)) => EntityKind::from_prefix(p),
            _ => None,
        }
    }

    pub fn is(&self, kind: EntityKind) -> bool {
        self.kind() == Some(kind)
    }

    pub fn number(&self) -> Option<u64> {
        self.split().1
    }
}

impl Ord for EntityId {
    fn cmp(&self, other: &Self) -> Ordering {
        let (pa, na) = self.split();
        let (pb, nb) = other.split();
        pa.cmp(pb)
            .then_with(|| na.cmp(&nb))
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for EntityId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId::parse(s)
    }
}

/// Person or system performing an operation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActorId(String);

impl ActorId {
    pub fn new(s: impl Into<String>) -> Self {
        ActorId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_blank(&self) -> bool {
        self.0.trim().is_empty()
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActorId {
    fn from(s: &str) -> Self {
        ActorId(s.to_owned())
    }
}

/// Monotone per-kind counters. Ids are never reused, even for entities
/// created by an operation that was later superseded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdAllocator {
    next: BTreeMap<EntityKind, u64>,
}

impl IdAllocator {
    pub fn allocate(&mut self, kind: EntityKind) -> EntityId {
        let slot = self.next.entry(kind).or_insert(1);
        let id = EntityId::new(kind, *slot);
        *slot += 1;
        id
    }

    pub fn peek(&self, kind: EntityKind) -> EntityId {
        EntityId::new(kind, self.next.get(&kind).copied().unwrap_or(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_ordering_within_prefix() {
        let mut ids = vec![EntityId::parse("CFA-10"), EntityId::parse("CFA-2"), EntityId::parse("A-3")];
        ids.sort();
        assert_eq!(ids, vec![EntityId::parse("A-3"), EntityId::parse("CFA-2"), EntityId::parse("CFA-10")]);
    }

    #[test]
    fn kind_from_prefix() {
        assert_eq!(EntityId::parse("SEG-4").kind(), Some(EntityKind::Segment));
        assert_eq!(EntityId::parse("SDG-1").kind(), Some(EntityKind::SubDesignGoal));
        assert_eq!(EntityId::parse("nonsense").kind(), None);
        assert_eq!(EntityId::parse("X-1").kind(), None);
    }

    #[test]
    fn allocator_is_monotone_per_kind() {
        let mut ids = IdAllocator::default();
        assert_eq!(ids.allocate(EntityKind::Cfa).as_str(), "CFA-1");
        assert_eq!(ids.allocate(EntityKind::Cfa).as_str(), "CFA-2");
        assert_eq!(ids.allocate(EntityKind::Assumption).as_str(), "A-1");
        assert_eq!(ids.peek(EntityKind::Cfa).as_str(), "CFA-3");
    }
}
