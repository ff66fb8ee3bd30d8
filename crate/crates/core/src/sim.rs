//! Seeded generator of plausible operations, for fuzzing and benchmarks.
//!
//! The [`Driver`] looks at the current state and proposes a command that
//! will usually succeed. Some proposals are rejected by the engine (for
//! example closing an iteration whose gate is not met); callers should
//! treat those as no-ops.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::seq::{IndexedRandom, IteratorRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::*;
use crate::error::EngineError;
use crate::ids::{ActorId, EntityId};
use crate::model::*;
use crate::state::{ClockMode, ProjectConfig, ProjectState};

const DA_POOL: [&str; 8] = [
    "redundant sensor",
    "watchdog with safe stop",
    "second power path",
    "degraded mode controller",
    "diverse software channel",
    "mechanical fallback",
    "cross-segment heartbeat",
    "local minimal risk manoeuvre",
];

const MODES: [(&str, FailureScope); 3] = [
    ("omission", FailureScope::PerElement),
    ("loss of power", FailureScope::PerElement),
    ("communication failure", FailureScope::PerSegment),
];

pub fn fuzz_config() -> ProjectConfig {
    ProjectConfig { name: "fuzz".into(), single_point_failures: true, clock: ClockMode::logical() }
}

pub fn actor() -> Ctx {
    Ctx::new("fuzzer").with_rationale("generated")
}

pub struct Driver {
    rng: ChaCha8Rng,
    counter: u64,
    /// Upper bound on elements the driver will create.
    pub max_elements: usize,
}

impl Driver {
    pub fn new(seed: u64) -> Self {
        Driver { rng: ChaCha8Rng::seed_from_u64(seed), counter: 0, max_elements: 12 }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn fresh(&mut self, what: &str) -> String {
        self.counter += 1;
        format!("{what} {}", self.counter)
    }

    /// Proposes and applies one command. Returns the command with the outcome.
    pub fn step(&mut self, engine: &mut Engine) -> (Command, Result<Applied, EngineError>) {
        let cmd = self.propose(engine.state());
        let res = engine.apply(cmd.clone(), &actor());
        (cmd, res)
    }

    pub fn propose(&mut self, st: &ProjectState) -> Command {
        if st.elements.is_empty() {
            return self.architecture();
        }
        let Some(it) = st.current_iteration() else {
            return Command::OpenIteration { roadmap_elements: Vec::new(), classification: None };
        };
        if !it.parameters.defined {
            if let Some(cmd) = self.parameters(st) {
                return cmd;
            }
        }
        let roll = self.rng.random_range(0..100);
        match roll {
            0..=24 => self.analyze(st),
            25..=31 => self.raise(st),
            32..=39 => self.resolve(st),
            40..=44 => self.convert(st),
            45..=48 => self.complete(st),
            49..=53 => self.add_assumption(st),
            54..=58 => self.review(st),
            59..=63 => self.invalidate(st),
            64..=66 => self.add_element(st),
            67 => self.retire(st),
            68..=69 => self.parameters(st),
            70..=84 => self.select(st),
            _ => Some(Command::CloseIteration {}),
        }
        .unwrap_or_else(|| self.fallback(st))
    }

    fn fallback(&mut self, st: &ProjectState) -> Command {
        self.analyze(st).unwrap_or_else(|| self.raise(st).expect("raise is always possible"))
    }

    fn architecture(&mut self) -> Command {
        let n_seg = self.rng.random_range(1..=3);
        let mut segments = Vec::new();
        for i in 0..n_seg {
            let parent = (i > 0 && self.rng.random_bool(0.3)).then(|| format!("seg {}", self.rng.random_range(0..i)));
            segments.push(SegmentDecl { name: format!("seg {i}"), parent });
        }
        let n_el = self.rng.random_range(2..=6);
        let kinds = [ElementKind::Hardware, ElementKind::Software, ElementKind::Functional];
        let elements = (0..n_el)
            .map(|_| ElementDecl {
                name: self.fresh("element"),
                kind: *kinds.choose(&mut self.rng).expect("non-empty"),
                segment: self.rng.random_bool(0.8).then(|| format!("seg {}", self.rng.random_range(0..n_seg))),
                variants: Vec::new(),
            })
            .collect();
        Command::ImportArchitecture { description: ArchitectureDescription { segments, elements } }
    }

    fn parameters(&mut self, st: &ProjectState) -> Option<Command> {
        let live: Vec<&EntityId> = st.elements.values().filter(|e| !e.retired).map(|e| &e.id).collect();
        if live.is_empty() {
            return None;
        }
        let k = self.rng.random_range(1..=live.len());
        let scope = live.choose_multiple(&mut self.rng, k).map(|e| (*e).clone()).collect();
        let m = self.rng.random_range(1..=MODES.len());
        let failure_modes =
            MODES.choose_multiple(&mut self.rng, m).map(|(n, s)| FailureModeSpec::new(n, *s)).collect();
        let (design_goals, dg) = match st.design_goals.keys().next() {
            Some(id) if self.rng.random_bool(0.7) => (Vec::new(), DgRef::Existing(id.clone())),
            _ => (
                vec![DesignGoalSpec {
                    description: self.fresh("design goal"),
                    sub_goals: Vec::new(),
                    composition: None,
                    composition_notes: String::new(),
                    fsr_ref: None,
                }],
                DgRef::New(0),
            ),
        };
        Some(Command::DefineProcessParameters {
            elements_in_scope: scope,
            failure_modes,
            design_goals,
            assignment: DgAssignment::default_to(dg),
        })
    }

    fn valid_assumptions<'a>(&self, st: &'a ProjectState) -> Vec<&'a EntityId> {
        st.assumptions.values().filter(|a| a.validity == Validity::Valid).map(|a| &a.id).collect()
    }

    fn analyze(&mut self, st: &ProjectState) -> Option<Command> {
        let live: Vec<&Cfa> = st.cfas.values().filter(|c| !c.archived).collect();
        let unprocessed: Vec<&&Cfa> = live.iter().filter(|c| c.state == CfaState::Unprocessed).collect();
        let cfa = if !unprocessed.is_empty() && self.rng.random_bool(0.8) {
            **unprocessed.choose(&mut self.rng)?
        } else {
            *live.choose(&mut self.rng)?
        };
        let n = [0, 0, 1, 1, 2, 3].choose(&mut self.rng).copied().unwrap_or(0);
        let das: Vec<String> = DA_POOL.choose_multiple(&mut self.rng, n).map(|d| d.to_string()).collect();
        let baseline = das.is_empty() || self.rng.random_bool(0.3);
        let valid = self.valid_assumptions(st);
        let k = self.rng.random_range(0..=valid.len().min(2));
        let cited = valid.choose_multiple(&mut self.rng, k).map(|a| (*a).clone()).collect();
        Some(Command::AnalyzeCfa {
            cfa: cfa.id.clone(),
            effect: self.fresh("effect"),
            baseline_fulfills_dg: baseline,
            design_alternatives: das,
            cited_assumptions: cited,
        })
    }

    fn some_cfas(&mut self, st: &ProjectState) -> BTreeSet<EntityId> {
        let k = self.rng.random_range(0..=3.min(st.cfas.len()));
        st.cfas.keys().choose_multiple(&mut self.rng, k).into_iter().cloned().collect()
    }

    fn raise(&mut self, st: &ProjectState) -> Option<Command> {
        let valid = self.valid_assumptions(st);
        let payload = match valid.choose(&mut self.rng) {
            Some(a) if self.rng.random_bool(0.3) => AssumptionPayload::Existing((*a).clone()),
            _ => AssumptionPayload::New {
                text: self.fresh("assumption"),
                category: UncertaintySource::ALL.choose(&mut self.rng).copied(),
                linked_cfas: self.some_cfas(st),
            },
        };
        Some(Command::RaiseClarification { question: self.fresh("question"), assumption: Some(payload) })
    }

    fn outcome(&mut self, st: &ProjectState) -> Outcome {
        if self.rng.random_bool(0.3) {
            let linked = if self.rng.random_bool(0.5) { BTreeSet::new() } else { self.some_cfas(st) };
            Outcome::Corrected { new_text: self.fresh("corrected assumption"), linked_cfas: linked }
        } else {
            Outcome::Confirmed
        }
    }

    fn open_clarifications<'a>(&self, st: &'a ProjectState) -> Vec<&'a EntityId> {
        st.clarifications.values().filter(|c| c.status == ClarificationStatus::Open).map(|c| &c.id).collect()
    }

    fn resolve(&mut self, st: &ProjectState) -> Option<Command> {
        let c = (*self.open_clarifications(st).choose(&mut self.rng)?).clone();
        Some(Command::ResolveClarification {
            clarification: c,
            outcome: self.outcome(st),
            expert: ActorId::new("expert"),
            notes: self.fresh("notes"),
        })
    }

    fn convert(&mut self, st: &ProjectState) -> Option<Command> {
        let c = (*self.open_clarifications(st).choose(&mut self.rng)?).clone();
        let due = NaiveDate::from_ymd_opt(2026, 6, 1).expect("date") + chrono::Duration::days(self.rng.random_range(0..90));
        Some(Command::ConvertClarificationToTask {
            clarification: c,
            expert: Some(ActorId::new("expert")),
            responsible_architect: Some(ActorId::new("architect")),
            due_date: Some(due),
        })
    }

    fn complete(&mut self, st: &ProjectState) -> Option<Command> {
        let t = st.tasks.values().filter(|t| t.status == TaskStatus::Open).choose(&mut self.rng)?.id.clone();
        Some(Command::CompleteTask { task: t, outcome: self.outcome(st), notes: self.fresh("outcome") })
    }

    fn add_assumption(&mut self, st: &ProjectState) -> Option<Command> {
        Some(Command::AddAssumption {
            text: self.fresh("assumption"),
            category: None,
            linked_cfas: self.some_cfas(st),
        })
    }

    fn review(&mut self, st: &ProjectState) -> Option<Command> {
        let pending: Vec<(&EntityId, &EntityId)> = st
            .review_queues
            .values()
            .flat_map(|q| {
                q.items.iter().filter(|i| i.disposition == Disposition::PendingReview).map(move |i| (&q.id, &i.cfa))
            })
            .collect();
        let (q, c) = pending.choose(&mut self.rng)?;
        let disposition =
            if self.rng.random_bool(0.3) { Disposition::MarkUnprocessed } else { Disposition::KeepProcessed };
        Some(Command::ReviewCfa { queue: (*q).clone(), cfa: (*c).clone(), disposition })
    }

    fn invalidate(&mut self, st: &ProjectState) -> Option<Command> {
        let a = (*self.valid_assumptions(st).choose(&mut self.rng)?).clone();
        let replacement = self.rng.random_bool(0.5).then(|| Replacement {
            text: self.fresh("replacement"),
            linked_cfas: BTreeSet::new(),
            resolves_clarification: None,
        });
        Some(Command::InvalidateAssumption { assumption: a, reason: self.fresh("reason"), replacement })
    }

    fn add_element(&mut self, st: &ProjectState) -> Option<Command> {
        if st.elements.values().filter(|e| !e.retired).count() >= self.max_elements {
            return None;
        }
        let segment = st.segments.keys().choose(&mut self.rng).cloned();
        Some(Command::AddElement {
            element: ElementSpec { name: self.fresh("element"), kind: ElementKind::Software, segment, variants: Vec::new() },
        })
    }

    fn retire(&mut self, st: &ProjectState) -> Option<Command> {
        let e = st.elements.values().filter(|e| !e.retired).choose(&mut self.rng)?.id.clone();
        Some(Command::RetireElement { element: e, rationale: self.fresh("retired because") })
    }

    /// A selection that covers every needy CFA and rejects the rest.
    fn select(&mut self, st: &ProjectState) -> Option<Command> {
        let mut chosen = BTreeSet::new();
        for c in st.cfas.values().filter(|c| c.is_needy()) {
            let das: Vec<&EntityId> = st.links_from(LinkKind::CfaToDa, &c.id).map(|l| &l.to).collect();
            if let Some(d) = das.choose(&mut self.rng) {
                chosen.insert((*d).clone());
            }
        }
        // A revision resets every decided alternative to candidate first.
        let revise = st.active_selection().is_some();
        let rejections: BTreeMap<EntityId, String> = st
            .design_alternatives
            .values()
            .filter(|d| (revise || d.status == DaStatus::Candidate) && !chosen.contains(&d.id))
            .map(|d| (d.id.clone(), "not needed for coverage".to_owned()))
            .collect();
        let (rationale, method_note) = ("covers the needy CFAs".to_owned(), String::new());
        Some(if revise {
            Command::ReviseSelection { chosen_das: chosen, rationale, rejections, method_note }
        } else {
            Command::MakeSelection { chosen_das: chosen, rationale, rejections, method_note }
        })
    }
}

/// Random project of up to `ops` successful driver steps.
pub fn random_project(seed: u64, ops: usize) -> Engine {
    let mut engine = Engine::new(fuzz_config());
    let mut driver = Driver::new(seed);
    let mut ok = 0;
    let mut attempts = 0;
    while ok < ops && attempts < ops * 4 {
        attempts += 1;
        if driver.step(&mut engine).1.is_ok() {
            ok += 1;
        }
    }
    engine
}

/// Small fixture: `elements` hardware elements in one segment, iteration 1
/// open, one default design goal and the given per-element failure modes.
/// CFAs are numbered element-major: element i, mode j is `CFA-(i*modes+j+1)`.
pub fn toy_project(elements: usize, modes: &[&str]) -> Engine {
    let mut engine = Engine::new(fuzz_config());
    let ctx = actor();
    let description = ArchitectureDescription {
        segments: vec![SegmentDecl { name: "main".into(), parent: None }],
        elements: (0..elements)
            .map(|i| ElementDecl {
                name: format!("element {i}"),
                kind: ElementKind::Hardware,
                segment: Some("main".into()),
                variants: Vec::new(),
            })
            .collect(),
    };
    engine.apply(Command::ImportArchitecture { description }, &ctx).expect("toy import");
    engine
        .apply(Command::OpenIteration { roadmap_elements: Vec::new(), classification: None }, &ctx)
        .expect("toy open");
    let scope = engine.state().elements.keys().cloned().collect();
    engine
        .apply(
            Command::DefineProcessParameters {
                elements_in_scope: scope,
                failure_modes: modes.iter().map(|m| FailureModeSpec::new(m, FailureScope::PerElement)).collect(),
                design_goals: vec![DesignGoalSpec {
                    description: "reach a safe state".into(),
                    sub_goals: Vec::new(),
                    composition: None,
                    composition_notes: String::new(),
                    fsr_ref: None,
                }],
                assignment: DgAssignment::default_to(DgRef::New(0)),
            },
            &ctx,
        )
        .expect("toy parameters");
    engine
}
