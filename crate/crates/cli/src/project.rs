//! A project on disk: the locked store plus the engine loaded from it.

use std::path::Path;

use atrium_core::scenario::ScenarioError;
use atrium_core::store::{Store, StoreError};
use atrium_core::{Applied, Command, Ctx, Engine, EngineError, ErrorCategory, ProjectConfig};
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Usage(String),
    #[error("no project at {0}; run `atrium init` first")]
    NoProject(String),
    #[error("a project already exists at {0}")]
    ProjectExists(String),
}

impl AppError {
    pub fn name(&self) -> &'static str {
        match self {
            AppError::Engine(e) => e.name(),
            AppError::Store(e) => e.name(),
            AppError::Scenario(ScenarioError::ScriptActionRejected { error, .. }) => error.name(),
            AppError::Scenario(e) => e.name(),
            AppError::Usage(_) => "UsageError",
            AppError::NoProject(_) => "NoProject",
            AppError::ProjectExists(_) => "ProjectExists",
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            AppError::Engine(e) => e.category(),
            AppError::Store(StoreError::UnknownIteration(_)) | AppError::NoProject(_) => ErrorCategory::NotFound,
            AppError::Store(StoreError::ParseError { .. } | StoreError::DuplicateElementName(_))
            | AppError::Usage(_) => ErrorCategory::Invalid,
            _ => ErrorCategory::Conflict,
        }
    }

    /// `{name, message, detail, offending_ids}` as shared by CLI and API.
    pub fn to_json(&self) -> Value {
        let (detail, ids) = match self {
            AppError::Engine(e) => {
                let v = serde_json::to_value(e).unwrap_or(Value::Null);
                (v.get("detail").cloned().unwrap_or(Value::Null), e.offending_ids())
            }
            AppError::Store(StoreError::IntegrityError(v)) => {
                (serde_json::to_value(v).unwrap_or(Value::Null), v.iter().map(|v| v.entity.clone()).collect())
            }
            AppError::Scenario(ScenarioError::ScriptActionRejected { step, error }) => {
                (json!({ "step": step, "error": error }), error.offending_ids())
            }
            _ => (Value::Null, Vec::new()),
        };
        json!({ "name": self.name(), "message": self.to_string(), "detail": detail, "offending_ids": ids })
    }
}

pub struct Project {
    store: Store,
    engine: Engine,
}

impl Project {
    pub fn open(root: &Path) -> Result<Project, AppError> {
        let store = Store::open(root)?;
        if !store.exists() {
            return Err(AppError::NoProject(root.display().to_string()));
        }
        let engine = Engine::from_state(store.load()?);
        Ok(Project { store, engine })
    }

    pub fn init(root: &Path, config: ProjectConfig) -> Result<Project, AppError> {
        Project::create(root, Engine::new(config))
    }

    /// Writes `engine` as a new project at `root`.
    pub fn create(root: &Path, engine: Engine) -> Result<Project, AppError> {
        let store = Store::open(root)?;
        if store.exists() {
            return Err(AppError::ProjectExists(root.display().to_string()));
        }
        store.save(engine.state())?;
        Ok(Project { store, engine })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    /// Applies and persists one command. If saving fails the in-memory
    /// engine is put back as it was.
    pub fn apply(&mut self, command: Command, ctx: &Ctx) -> Result<Applied, AppError> {
        let before = self.engine.clone();
        let applied = self.engine.apply(command, ctx)?;
        if let Err(e) = self.store.save(self.engine.state()) {
            self.engine = before;
            return Err(e.into());
        }
        Ok(applied)
    }
}
