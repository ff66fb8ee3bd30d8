//! On-disk project store and document exports.
//!
//! Layout of a store directory:
//!
//! ```text
//! project.json               config and id counters
//! <collection>.jsonl         one entity per line, e.g. cfas.jsonl
//! changelog.jsonl            change entries in sequence order
//! oplog.jsonl                operation log, replayable
//! baselines/iteration-N.json state at the close of iteration N, never rewritten
//! .lock                      advisory lock held by the writer
//! ```
//!
//! Every record is a JSON object with sorted keys. Top-level fields this
//! version does not know are kept in [`ProjectState::extensions`] and written
//! back on the next save.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::engine::{ArchitectureDescription, Engine};
use crate::ids::EntityId;
use crate::model::*;
use crate::state::ProjectState;
use crate::trace::integrity_check;

/// Entity collections, in the order they are written.
pub const COLLECTIONS: [&str; 14] = [
    "elements",
    "segments",
    "failure_modes",
    "cfas",
    "design_goals",
    "design_alternatives",
    "assumptions",
    "clarifications",
    "tasks",
    "risks",
    "selections",
    "links",
    "iterations",
    "review_queues",
];

const PROJECT_FILE: &str = "project.json";
const LOGS: [&str; 2] = ["changelog", "oplog"];
/// Extension key for unknown fields of `project.json`.
const PROJECT_EXT: &str = "project";
const FORMAT: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{file}:{line}: {message}")]
    ParseError { file: String, line: usize, message: String },
    #[error("state fails integrity check: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    IntegrityError(Vec<Violation>),
    #[error("store {0} is locked by another writer")]
    Locked(PathBuf),
    #[error("duplicate element name {0:?}")]
    DuplicateElementName(String),
    #[error("iteration {0} is not closed")]
    IterationNotClosed(u32),
    #[error("iteration {0} does not exist")]
    UnknownIteration(u32),
    #[error("cannot rebuild baseline for iteration {iteration}: {message}")]
    Baseline { iteration: u32, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl StoreError {
    pub fn name(&self) -> &'static str {
        match self {
            StoreError::ParseError { .. } => "ParseError",
            StoreError::IntegrityError(_) => "IntegrityError",
            StoreError::Locked(_) => "Locked",
            StoreError::DuplicateElementName(_) => "DuplicateElementName",
            StoreError::IterationNotClosed(_) => "IterationNotClosed",
            StoreError::UnknownIteration(_) => "UnknownIteration",
            StoreError::Baseline { .. } => "BaselineError",
            StoreError::Io(_) => "IoError",
        }
    }
}

fn parse_error(file: &str, line: usize, e: impl std::fmt::Display) -> StoreError {
    StoreError::ParseError { file: file.to_owned(), line, message: e.to_string() }
}

/// Exclusive writer handle on a store directory. The lock is released on drop.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    _lock: File,
}

impl Store {
    /// Creates the directory if needed and takes the advisory lock.
    pub fn open(root: impl AsRef<Path>) -> Result<Store, StoreError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(root.join(".lock"))?;
        match lock.try_lock() {
            Ok(()) => Ok(Store { root, _lock: lock }),
            Err(fs::TryLockError::WouldBlock) => Err(StoreError::Locked(root)),
            Err(fs::TryLockError::Error(e)) => Err(e.into()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn exists(&self) -> bool {
        self.root.join(PROJECT_FILE).exists()
    }

    pub fn load(&self) -> Result<ProjectState, StoreError> {
        load_snapshot(&self.root)
    }

    pub fn save(&self, state: &ProjectState) -> Result<(), StoreError> {
        let violations = integrity_check(state);
        if !violations.is_empty() {
            return Err(StoreError::IntegrityError(violations));
        }
        write_state(&self.root, state)?;
        write_baselines(&self.root, state)
    }
}

/// Reads a store without taking the lock.
pub fn load_snapshot(root: &Path) -> Result<ProjectState, StoreError> {
    let text = fs::read_to_string(root.join(PROJECT_FILE))?;
    let project: Map<String, Value> = serde_json::from_str(&text).map_err(|e| parse_error(PROJECT_FILE, e.line(), e))?;

    let mut whole = Map::new();
    let mut project_extra = Map::new();
    for (k, v) in project {
        match k.as_str() {
            "config" | "ids" => {
                whole.insert(k, v);
            }
            "format" => {}
            _ => {
                project_extra.insert(k, v);
            }
        }
    }
    let mut loaded: BTreeMap<EntityId, Map<String, Value>> = BTreeMap::new();
    for name in COLLECTIONS {
        let file = format!("{name}.jsonl");
        let mut map = Map::new();
        for (line, doc) in read_lines(root, &file)? {
            let Value::Object(obj) = doc else {
                return Err(parse_error(&file, line, "expected a JSON object"));
            };
            let Some(id) = obj.get("id").and_then(Value::as_str).map(str::to_owned) else {
                return Err(parse_error(&file, line, "record has no id"));
            };
            loaded.insert(EntityId::parse(id.clone()), obj.clone());
            map.insert(id, Value::Object(obj));
        }
        whole.insert(name.to_owned(), Value::Object(map));
    }
    for name in LOGS {
        let entries = read_lines(root, &format!("{name}.jsonl"))?.into_iter().map(|(_, v)| v).collect();
        whole.insert(name.to_owned(), Value::Array(entries));
    }

    let mut state: ProjectState =
        serde_json::from_value(Value::Object(whole)).map_err(|e| locate_error(root, e))?;

    // Anything the typed model dropped goes to extensions.
    let known = state.entity_documents();
    for (id, doc) in loaded {
        let Some(Value::Object(typed)) = known.get(&id) else { continue };
        let extra: Map<String, Value> = doc.into_iter().filter(|(k, _)| !typed.contains_key(k)).collect();
        if !extra.is_empty() {
            state.extensions.insert(id, extra);
        }
    }
    if !project_extra.is_empty() {
        state.extensions.insert(EntityId::from(PROJECT_EXT), project_extra);
    }
    Ok(state)
}

fn read_lines(root: &Path, file: &str) -> Result<Vec<(usize, Value)>, StoreError> {
    let path = root.join(file);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(raw).map_err(|e| parse_error(file, i + 1, e))?;
        out.push((i + 1, v));
    }
    Ok(out)
}

/// Maps a whole-state deserialization failure back to the offending record.
fn locate_error(root: &Path, e: serde_json::Error) -> StoreError {
    for name in COLLECTIONS {
        let file = format!("{name}.jsonl");
        let Ok(lines) = read_lines(root, &file) else { continue };
        for (line, doc) in lines {
            let id = doc.get("id").and_then(Value::as_str).unwrap_or("?").to_owned();
            let mut tagged = doc.clone();
            if let Some(obj) = tagged.as_object_mut() {
                obj.insert("entity".into(), Value::String(entity_tag(name)));
            }
            if let Err(err) = serde_json::from_value::<Entity>(tagged) {
                return parse_error(&file, line, format!("{id}: {err}"));
            }
        }
    }
    for name in LOGS {
        let file = format!("{name}.jsonl");
        let Ok(lines) = read_lines(root, &file) else { continue };
        for (line, doc) in lines {
            let res = if name == "oplog" {
                serde_json::from_value::<crate::engine::LogEntry>(doc).err()
            } else {
                serde_json::from_value::<crate::changelog::ChangeEntry>(doc).err()
            };
            if let Some(err) = res {
                return parse_error(&file, line, err);
            }
        }
    }
    parse_error(PROJECT_FILE, 0, e)
}

fn entity_tag(collection: &str) -> String {
    match collection {
        "iterations" => "iteration".into(),
        "review_queues" => "review_queue".into(),
        c => c.trim_end_matches('s').into(),
    }
}

fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(tmp, path)
}

fn write_state(root: &Path, state: &ProjectState) -> Result<(), StoreError> {
    let Value::Object(mut whole) = serde_json::to_value(state).expect("state serializes") else {
        unreachable!("state serializes to an object")
    };
    let mut project = Map::new();
    project.insert("format".into(), FORMAT.into());
    project.insert("config".into(), whole.remove("config").unwrap_or_default());
    project.insert("ids".into(), whole.remove("ids").unwrap_or_default());
    if let Some(extra) = state.extensions.get(&EntityId::from(PROJECT_EXT)) {
        for (k, v) in extra {
            project.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(project)).expect("json");
    text.push('\n');
    write_atomic(&root.join(PROJECT_FILE), &text)?;

    for name in COLLECTIONS {
        let mut text = String::new();
        if let Some(Value::Object(docs)) = whole.remove(name) {
            let mut docs: Vec<(EntityId, Value)> = docs.into_iter().map(|(k, v)| (EntityId::parse(k), v)).collect();
            docs.sort_by(|a, b| a.0.cmp(&b.0));
            for (id, mut doc) in docs {
                if let (Some(extra), Some(obj)) = (state.extensions.get(&id), doc.as_object_mut()) {
                    for (k, v) in extra {
                        obj.entry(k.clone()).or_insert_with(|| v.clone());
                    }
                }
                text.push_str(&serde_json::to_string(&doc).expect("json"));
                text.push('\n');
            }
        }
        write_atomic(&root.join(format!("{name}.jsonl")), &text)?;
    }
    for name in LOGS {
        let mut text = String::new();
        if let Some(Value::Array(entries)) = whole.remove(name) {
            for e in entries {
                text.push_str(&serde_json::to_string(&e).expect("json"));
                text.push('\n');
            }
        }
        write_atomic(&root.join(format!("{name}.jsonl")), &text)?;
    }
    Ok(())
}

pub fn baseline_path(root: &Path, iteration: u32) -> PathBuf {
    root.join("baselines").join(format!("iteration-{iteration}.json"))
}

/// Writes the baseline of every closed iteration that has none yet.
fn write_baselines(root: &Path, state: &ProjectState) -> Result<(), StoreError> {
    for it in state.iterations.values().filter(|i| i.status == IterationStatus::Closed) {
        let path = baseline_path(root, it.number);
        if path.exists() {
            continue;
        }
        let closed_seq = it.closed_seq.unwrap_or(u64::MAX);
        let prefix: Vec<_> = state.oplog.iter().filter(|e| e.sequence <= closed_seq).cloned().collect();
        let at_close = Engine::replay(state.config.clone(), &prefix)
            .map_err(|e| StoreError::Baseline { iteration: it.number, message: e.to_string() })?;
        let mut doc = Map::new();
        doc.insert("iteration".into(), it.number.into());
        doc.insert("state_hash".into(), at_close.state().state_hash().into());
        doc.insert("state".into(), serde_json::to_value(at_close.state()).expect("json"));
        fs::create_dir_all(path.parent().expect("baseline dir"))?;
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
        text.push('\n');
        write_atomic(&path, &text)?;
    }
    Ok(())
}

/// Reads the architecture description format accepted by
/// [`Command::ImportArchitecture`](crate::engine::Command). An empty file is
/// an empty description.
pub fn read_architecture(path: &Path) -> Result<ArchitectureDescription, StoreError> {
    let text = fs::read_to_string(path)?;
    parse_architecture(&text, &path.display().to_string())
}

pub fn parse_architecture(text: &str, file: &str) -> Result<ArchitectureDescription, StoreError> {
    if text.trim().is_empty() {
        return Ok(ArchitectureDescription::default());
    }
    let desc: ArchitectureDescription = serde_json::from_str(text).map_err(|e| parse_error(file, e.line(), e))?;
    let mut names = std::collections::BTreeSet::new();
    for e in &desc.elements {
        if !names.insert(e.name.as_str()) {
            return Err(StoreError::DuplicateElementName(e.name.clone()));
        }
    }
    Ok(desc)
}

pub const FMEA_HEADER: [&str; 9] = [
    "cfa-id",
    "target",
    "failure-mode",
    "dg",
    "state",
    "functional-effect",
    "baseline-fulfills-dg",
    "da-ids",
    "assumption-ids",
];

/// CFA worksheet as CSV with every field quoted. Archived CFAs are
/// excluded unless `include_archived`.
pub fn export_fmea(state: &ProjectState, include_archived: bool) -> String {
    let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Always).from_writer(Vec::new());
    w.write_record(FMEA_HEADER).expect("in-memory write");
    for c in state.cfas.values().filter(|c| include_archived || !c.archived) {
        let mode = state.failure_modes.get(&c.failure_mode).map_or(c.failure_mode.to_string(), |m| m.name.clone());
        let (effect, baseline, das, assumptions) = match &c.analysis {
            Some(a) => (
                a.functional_effect.clone(),
                a.baseline_fulfills_dg.to_string(),
                join(&a.design_alternatives),
                join(&a.cited_assumptions),
            ),
            None => Default::default(),
        };
        let state = match c.state {
            CfaState::Processed => "processed",
            CfaState::Unprocessed => "unprocessed",
        };
        w.write_record([
            c.id.as_str(),
            c.target.id().as_str(),
            &mode,
            c.design_goal.as_str(),
            state,
            &effect,
            &baseline,
            &das,
            &assumptions,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn join<'a>(ids: impl IntoIterator<Item = &'a EntityId>) -> String {
    ids.into_iter().map(EntityId::as_str).collect::<Vec<_>>().join(" ")
}

/// The three human-readable documents handed over at iteration close.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliverableDocs {
    pub refined_pa: String,
    pub assumption_list: String,
    pub risk_list: String,
}

impl DeliverableDocs {
    pub fn files(&self, iteration: u32) -> [(String, &str); 3] {
        [
            (format!("iteration-{iteration}-refined-pa.md"), self.refined_pa.as_str()),
            (format!("iteration-{iteration}-assumptions.md"), self.assumption_list.as_str()),
            (format!("iteration-{iteration}-risks.md"), self.risk_list.as_str()),
        ]
    }
}

pub fn export_deliverables(state: &ProjectState, iteration: u32) -> Result<DeliverableDocs, StoreError> {
    let it = state.iteration(iteration).ok_or(StoreError::UnknownIteration(iteration))?;
    let d = match (&it.status, &it.deliverables) {
        (IterationStatus::Closed, Some(d)) => d,
        _ => return Err(StoreError::IterationNotClosed(iteration)),
    };
    let banner = format!("> {}\n\n", d.interpretation);

    let mut pa = format!("# Refined preliminary architecture, iteration {iteration}\n\n{banner}## Elements\n\n");
    for e in &d.refined_pa.elements {
        let seg = e.segment.as_ref().map_or(String::new(), |s| format!(" in {s}"));
        let _ = writeln!(pa, "- {} {} ({:?}, {:?}){seg}", e.id, e.name, e.kind, e.state);
    }
    if let Some(sel) = &d.refined_pa.selection {
        let _ = writeln!(pa, "\nSelection: {sel}");
    }
    pa.push_str("\n## Selected design alternatives\n\n");
    for da in &d.refined_pa.selected_das {
        let _ = writeln!(pa, "- {} {}", da.id, da.description);
    }
    pa.push_str("\n## Rejected design alternatives\n\n");
    for da in &d.refined_pa.rejected_das {
        let why = da.rejection_rationale.as_deref().unwrap_or("");
        let _ = writeln!(pa, "- {} {}: {why}", da.id, da.description);
    }

    let invalid = d.assumptions.iter().filter(|a| a.validity == Validity::Invalid).count();
    let mut al = format!(
        "# Assumption list, iteration {iteration}\n\n{banner}{} assumptions, {} valid, {invalid} invalid.\n\n",
        d.assumptions.len(),
        d.assumptions.len() - invalid
    );
    for a in &d.assumptions {
        let v = match a.validity {
            Validity::Valid => "valid",
            Validity::Invalid => "invalid",
        };
        let next = a.superseded_by.as_ref().map_or(String::new(), |n| format!(", superseded by {n}"));
        let _ = writeln!(al, "- {} [{v}{next}] {}", a.id, a.text);
    }

    let mut rl = format!("# Risk list, iteration {iteration}\n\n{banner}{} open risks.\n\n", d.risks.len());
    rl.push_str("| risk | task | description | expert | architect | due |\n|---|---|---|---|---|---|\n");
    for r in &d.risks {
        let _ = writeln!(
            rl,
            "| {} | {} | {} | {} | {} | {} |",
            r.id,
            r.source_task,
            r.description.replace('|', "\\|"),
            r.expert,
            r.responsible_architect,
            r.due_date
        );
    }
    Ok(DeliverableDocs { refined_pa: pa, assumption_list: al, risk_list: rl })
}
