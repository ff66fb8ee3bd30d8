//! The process engine. Every mutation goes through [`Engine::apply`], which
//! runs the operation inside a session that snapshots each entity before it
//! is first modified. A failed operation is rolled back from those
//! snapshots; a successful one turns them into the change entry's
//! field-level diff and appends exactly one change entry and one log entry.

mod analysis;
mod command;
mod inventory;
mod ledger;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde_json::Value;

pub use command::*;

use crate::changelog::{diff_documents, ChangeEntry};
use crate::error::EngineError;
use crate::ids::{ActorId, EntityId, EntityKind};
use crate::model::*;
use crate::state::{ProjectConfig, ProjectState};

/// Who is acting, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ctx {
    pub actor: ActorId,
    pub rationale: Option<String>,
}

impl Ctx {
    pub fn new(actor: impl Into<String>) -> Self {
        Ctx { actor: ActorId::new(actor), rationale: None }
    }

    pub fn with_rationale(mut self, rationale: impl Into<String>) -> Self {
        self.rationale = Some(rationale.into());
        self
    }
}

/// Human-readable parts of a change entry.
#[derive(Debug, Default)]
pub(crate) struct Narrative {
    pub request: String,
    pub analysis: String,
    pub decision: String,
    /// Set by operations that carry their own mandatory rationale.
    pub rationale: Option<String>,
}

pub(crate) struct Session<'a> {
    pub st: &'a mut ProjectState,
    touched: Vec<(EntityId, Option<Value>)>,
    seen: BTreeSet<EntityId>,
    pub at: DateTime<Utc>,
    pub actor: ActorId,
    pub sequence: u64,
}

impl<'a> Session<'a> {
    fn new(st: &'a mut ProjectState, at: DateTime<Utc>, actor: ActorId) -> Self {
        let sequence = st.changelog.len() as u64 + 1;
        Session { st, touched: Vec::new(), seen: BTreeSet::new(), at, actor, sequence }
    }

    /// Records the pre-image of an entity. Must precede any mutation of it.
    pub fn touch(&mut self, id: &EntityId) {
        if self.seen.insert(id.clone()) {
            let before = self.st.entity_json(id);
            self.touched.push((id.clone(), before));
        }
    }

    pub fn alloc(&mut self, kind: EntityKind) -> EntityId {
        let id = self.st.ids.allocate(kind);
        self.touch(&id);
        id
    }

    pub fn cfa_mut(&mut self, id: &EntityId) -> &mut Cfa {
        self.touch(id);
        self.st.cfas.get_mut(id).expect("cfa checked by caller")
    }

    pub fn da_mut(&mut self, id: &EntityId) -> &mut DesignAlternative {
        self.touch(id);
        self.st.design_alternatives.get_mut(id).expect("da checked by caller")
    }

    pub fn assumption_mut(&mut self, id: &EntityId) -> &mut Assumption {
        self.touch(id);
        self.st.assumptions.get_mut(id).expect("assumption checked by caller")
    }

    pub fn clarification_mut(&mut self, id: &EntityId) -> &mut Clarification {
        self.touch(id);
        self.st.clarifications.get_mut(id).expect("clarification checked by caller")
    }

    pub fn task_mut(&mut self, id: &EntityId) -> &mut Task {
        self.touch(id);
        self.st.tasks.get_mut(id).expect("task checked by caller")
    }

    pub fn element_mut(&mut self, id: &EntityId) -> &mut Element {
        self.touch(id);
        self.st.elements.get_mut(id).expect("element checked by caller")
    }

    pub fn segment_mut(&mut self, id: &EntityId) -> &mut Segment {
        self.touch(id);
        self.st.segments.get_mut(id).expect("segment checked by caller")
    }

    pub fn selection_mut(&mut self, id: &EntityId) -> &mut Selection {
        self.touch(id);
        self.st.selections.get_mut(id).expect("selection checked by caller")
    }

    pub fn queue_mut(&mut self, id: &EntityId) -> &mut ReviewQueue {
        self.touch(id);
        self.st.review_queues.get_mut(id).expect("queue checked by caller")
    }

    pub fn current_iteration_mut(&mut self) -> &mut IterationRecord {
        let id = self.st.current_iteration().expect("open iteration checked by caller").id.clone();
        self.touch(&id);
        self.st.iterations.get_mut(&id).expect("iteration exists")
    }

    pub fn open_iteration_number(&self) -> Result<u32, EngineError> {
        self.st.current_iteration().map(|i| i.number).ok_or(EngineError::NoOpenIteration)
    }

    /// Creates the link unless an identical one exists.
    pub fn link(&mut self, kind: LinkKind, from: &EntityId, to: &EntityId) -> Option<EntityId> {
        if self.st.has_link(kind, from, to) {
            return None;
        }
        let id = self.alloc(EntityKind::Link);
        self.st.links.insert(id.clone(), Link { id: id.clone(), kind, from: from.clone(), to: to.clone() });
        Some(id)
    }

    pub fn unlink(&mut self, kind: LinkKind, from: &EntityId, to: &EntityId) {
        let ids: Vec<EntityId> = self
            .st
            .links
            .values()
            .filter(|l| l.kind == kind && &l.from == from && &l.to == to)
            .map(|l| l.id.clone())
            .collect();
        for id in ids {
            self.touch(&id);
            self.st.links.remove(&id);
        }
    }

    fn rollback(self) {
        for (id, before) in self.touched.into_iter().rev() {
            self.st.restore(&id, before);
        }
    }

    fn finish(self) -> Vec<crate::changelog::FieldChange> {
        let mut out = Vec::new();
        for (id, before) in &self.touched {
            let after = self.st.entity_json(id);
            out.extend(diff_documents(id, before.as_ref(), after.as_ref()));
        }
        out
    }
}

pub(crate) fn require_text(value: &str, field: &str) -> Result<(), EngineError> {
    if value.trim().is_empty() {
        Err(EngineError::MissingField(field.to_owned()))
    } else {
        Ok(())
    }
}

pub(crate) fn join_ids<'a>(ids: impl IntoIterator<Item = &'a EntityId>) -> String {
    let v: Vec<&str> = ids.into_iter().map(EntityId::as_str).collect();
    if v.is_empty() {
        "none".to_owned()
    } else {
        v.join(", ")
    }
}

/// Single logical writer over one project.
#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    state: ProjectState,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("replay failed at log entry {sequence}: {error}")]
pub struct ReplayError {
    pub sequence: u64,
    pub error: EngineError,
}

impl Engine {
    pub fn new(config: ProjectConfig) -> Self {
        Engine { state: ProjectState::new(config) }
    }

    pub fn from_state(state: ProjectState) -> Self {
        Engine { state }
    }

    pub fn state(&self) -> &ProjectState {
        &self.state
    }

    pub fn into_state(self) -> ProjectState {
        self.state
    }

    /// Applies one command, stamping it with the project clock.
    pub fn apply(&mut self, command: Command, ctx: &Ctx) -> Result<Applied, EngineError> {
        let last = self.state.changelog.last().map(|e| e.at);
        let at = self.state.config.clock.next_timestamp(last);
        self.apply_at(command, ctx, at)
    }

    fn apply_at(&mut self, command: Command, ctx: &Ctx, at: DateTime<Utc>) -> Result<Applied, EngineError> {
        let ids_before = self.state.ids.clone();
        let mut session = Session::new(&mut self.state, at, ctx.actor.clone());
        let outcome = dispatch(&mut session, &command);
        let (result, narrative) = match outcome {
            Ok(v) => v,
            Err(e) => {
                session.rollback();
                self.state.ids = ids_before;
                return Err(e);
            }
        };
        let sequence = session.sequence;
        let changes = session.finish();
        let change_id = EntityId::new(EntityKind::ChangeEntry, sequence);
        let iteration = match (&result, self.state.current_iteration()) {
            (OpResult::IterationClosed { number, .. }, _) => Some(*number),
            (_, Some(it)) => Some(it.number),
            (_, None) => None,
        };
        let rationale = narrative
            .rationale
            .or_else(|| ctx.rationale.clone().filter(|r| !r.trim().is_empty()))
            .unwrap_or_else(|| format!("routine {}", command.name()));
        self.state.changelog.push(ChangeEntry {
            id: change_id.clone(),
            sequence,
            operation: command.name().to_owned(),
            request: narrative.request,
            analysis: narrative.analysis,
            decision: narrative.decision,
            rationale,
            implemented_changes: changes,
            actor: ctx.actor.clone(),
            at,
            iteration,
        });
        self.state.oplog.push(LogEntry {
            sequence,
            command,
            actor: ctx.actor.clone(),
            rationale: ctx.rationale.clone(),
            at,
            change: change_id.clone(),
        });
        Ok(Applied { sequence, change: change_id, result })
    }

    /// Rebuilds a project from its operation log.
    pub fn replay(config: ProjectConfig, log: &[LogEntry]) -> Result<Engine, ReplayError> {
        let mut engine = Engine::new(config);
        for entry in log {
            let ctx = Ctx { actor: entry.actor.clone(), rationale: entry.rationale.clone() };
            engine
                .apply_at(entry.command.clone(), &ctx, entry.at)
                .map_err(|error| ReplayError { sequence: entry.sequence, error })?;
        }
        Ok(engine)
    }

    /// Gate status for the open iteration without attempting to close it.
    pub fn gate_status(&self) -> Option<GateStatus> {
        self.state.current_iteration()?;
        Some(inventory::gate_status(&self.state))
    }
}

/// The three closure conditions, with offending ids.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GateStatus {
    pub open_clarifications: Vec<EntityId>,
    pub unprocessed_cfas: Vec<EntityId>,
    pub selection_missing: bool,
}

impl GateStatus {
    pub fn passes(&self) -> bool {
        self.open_clarifications.is_empty() && self.unprocessed_cfas.is_empty() && !self.selection_missing
    }
}

fn dispatch(s: &mut Session<'_>, command: &Command) -> Result<(OpResult, Narrative), EngineError> {
    match command {
        Command::ImportArchitecture { description } => inventory::import_architecture(s, description),
        Command::OpenIteration { roadmap_elements, classification } => {
            inventory::open_iteration(s, roadmap_elements, classification.as_ref())
        }
        Command::DefineProcessParameters { elements_in_scope, failure_modes, design_goals, assignment } => {
            inventory::define_process_parameters(s, elements_in_scope, failure_modes, design_goals, assignment)
        }
        Command::AnalyzeCfa { cfa, effect, baseline_fulfills_dg, design_alternatives, cited_assumptions } => {
            analysis::analyze_cfa(s, cfa, effect, *baseline_fulfills_dg, design_alternatives, cited_assumptions)
        }
        Command::AddElement { element } => inventory::add_element(s, element),
        Command::RetireElement { element, rationale } => inventory::retire_element(s, element, rationale),
        Command::AddAssumption { text, category, linked_cfas } => {
            ledger::add_assumption(s, text, *category, linked_cfas)
        }
        Command::ReviewCfa { queue, cfa, disposition } => ledger::review_cfa(s, queue, cfa, *disposition),
        Command::InvalidateAssumption { assumption, reason, replacement } => {
            ledger::invalidate_assumption(s, assumption, reason, replacement.as_ref())
        }
        Command::RaiseClarification { question, assumption } => {
            ledger::raise_clarification(s, question, assumption.as_ref())
        }
        Command::ResolveClarification { clarification, outcome, expert, notes } => {
            ledger::resolve_clarification(s, clarification, outcome, expert, notes)
        }
        Command::ConvertClarificationToTask { clarification, expert, responsible_architect, due_date } => {
            ledger::convert_clarification_to_task(
                s,
                clarification,
                expert.as_ref(),
                responsible_architect.as_ref(),
                *due_date,
            )
        }
        Command::CompleteTask { task, outcome, notes } => ledger::complete_task(s, task, outcome, notes),
        Command::MakeSelection { chosen_das, rationale, rejections, method_note } => {
            analysis::make_selection(s, chosen_das, rationale, rejections, method_note, false)
        }
        Command::ReviseSelection { chosen_das, rationale, rejections, method_note } => {
            analysis::make_selection(s, chosen_das, rationale, rejections, method_note, true)
        }
        Command::CloseIteration {} => inventory::close_iteration(s),
    }
}
