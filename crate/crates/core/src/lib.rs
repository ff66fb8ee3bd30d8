//! Process engine for refining a preliminary architecture under uncertainty.
//!
//! The [`engine::Engine`] applies [`engine::Command`]s to a [`state::ProjectState`],
//! recording one [`changelog::ChangeEntry`] per successful command.

pub mod changelog;
pub mod engine;
pub mod error;
pub mod ids;
pub mod model;
pub mod scenario;
pub mod sim;
pub mod state;
pub mod store;
pub mod trace;

pub use changelog::{ChangeEntry, FieldChange};
pub use engine::{
    Applied, AssumptionPayload, Command, Ctx, DgAssignment, DgOverride, DgRef, Engine, GateStatus, LogEntry, OpResult,
    Replacement,
};
pub use error::{EngineError, ErrorCategory};
pub use ids::{ActorId, EntityId, EntityKind, IdAllocator};
pub use model::*;
pub use state::{ClockMode, ProjectConfig, ProjectState};
