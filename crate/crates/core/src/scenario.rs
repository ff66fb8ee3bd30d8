//! Desk-scale case study: an L3 highway truck architecture of 25 elements
//! in four segments, plus a scripted workflow driven through the engine.
//!
//! [`build_case_study`] imports the architecture, opens iteration 1 and
//! defines the process parameters. Sub-segments are added by bisecting
//! segment member lists until the per-segment CFAs bring the total into the
//! configured range. [`replay_workflow`] then executes a [`ScriptAction`]
//! list and reports [`ScenarioStats`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::*;
use crate::error::EngineError;
use crate::ids::{ActorId, EntityId};
use crate::model::*;
use crate::state::{ClockMode, ProjectConfig, ProjectState};

pub const ARCHITECT: &str = "architect";

/// Which script [`ScenarioConfig::script_for`] yields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScriptSpec {
    /// The built-in workflow, with targets taken from [`CanonicalTargets`].
    Canonical(CanonicalTargets),
    Empty,
    Actions { actions: Vec<ScriptAction> },
}

/// Exact counts the canonical script is generated to hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalTargets {
    pub clarifications: usize,
    pub resolved: usize,
    pub corrected: usize,
    pub converted: usize,
    pub tasks_completed: usize,
}

impl Default for CanonicalTargets {
    fn default() -> Self {
        CanonicalTargets { clarifications: 40, resolved: 30, corrected: 12, converted: 10, tasks_completed: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub element_count: usize,
    /// Number of elements in each main segment; must sum to `element_count`.
    pub segment_layout: Vec<usize>,
    pub per_element_modes: Vec<String>,
    pub per_segment_modes: Vec<String>,
    /// Inclusive CFA-count range the sub-segment layout must reach. `None`
    /// means no sub-segments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfa_range: Option<(usize, usize)>,
    pub script: ScriptSpec,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            element_count: 25,
            segment_layout: vec![7, 6, 6, 6],
            per_element_modes: vec![OMISSION.into(), POWER_LOSS.into()],
            per_segment_modes: vec![COMM_FAILURE.into()],
            cfa_range: Some((75, 85)),
            script: ScriptSpec::Canonical(CanonicalTargets::default()),
            seed: 7,
        }
    }
}

pub const OMISSION: &str = "omission";
pub const POWER_LOSS: &str = "loss of power";
pub const COMM_FAILURE: &str = "communication failure";

impl ScenarioConfig {
    /// Resolves the configured script against a built project.
    pub fn script_for(&self, state: &ProjectState) -> Result<Vec<ScriptAction>, ScenarioError> {
        match &self.script {
            ScriptSpec::Canonical(t) => canonical_script(state, t, self.seed),
            ScriptSpec::Empty => Ok(Vec::new()),
            ScriptSpec::Actions { actions } => Ok(actions.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("no sub-segment layout yields a CFA count in [{lo}, {hi}]")]
    ConfigInfeasible { lo: usize, hi: usize },
    #[error("script step {step} rejected: {error}")]
    ScriptActionRejected { step: usize, error: EngineError },
    #[error("script step {step} refers to unknown label {label:?}")]
    UnknownLabel { step: usize, label: String },
    #[error("canonical script cannot be generated: {0}")]
    ScriptUnavailable(String),
}

impl ScenarioError {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioError::InvalidConfig(_) => "InvalidConfig",
            ScenarioError::ConfigInfeasible { .. } => "ConfigInfeasible",
            ScenarioError::ScriptActionRejected { .. } => "ScriptActionRejected",
            ScenarioError::UnknownLabel { .. } => "UnknownLabel",
            ScenarioError::ScriptUnavailable(_) => "ScriptUnavailable",
        }
    }
}

const CATALOGUE: [(&str, ElementKind); 25] = [
    ("front camera", ElementKind::Hardware),
    ("front radar", ElementKind::Hardware),
    ("left corner radar", ElementKind::Hardware),
    ("right corner radar", ElementKind::Hardware),
    ("roof lidar", ElementKind::Hardware),
    ("satellite positioning receiver", ElementKind::Hardware),
    ("inertial measurement unit", ElementKind::Hardware),
    ("object fusion", ElementKind::Software),
    ("localization", ElementKind::Software),
    ("trajectory planner", ElementKind::Software),
    ("behaviour planner", ElementKind::Software),
    ("driver monitoring", ElementKind::Functional),
    ("handover manager", ElementKind::Functional),
    ("steering controller", ElementKind::Hardware),
    ("service brake controller", ElementKind::Hardware),
    ("powertrain controller", ElementKind::Hardware),
    ("trailer brake module", ElementKind::Hardware),
    ("parking brake actuator", ElementKind::Hardware),
    ("hazard light control", ElementKind::Functional),
    ("central gateway", ElementKind::Hardware),
    ("vehicle bus", ElementKind::Hardware),
    ("driver display", ElementKind::Hardware),
    ("telematics unit", ElementKind::Hardware),
    ("power distribution unit", ElementKind::Hardware),
    ("backup battery", ElementKind::Hardware),
];

const SEGMENT_NAMES: [&str; 4] = ["sensing", "decision", "actuation", "vehicle interface"];

/// Segment tree decided before import.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub segments: Vec<SegmentDecl>,
    pub elements: Vec<ElementDecl>,
    pub sub_segments: usize,
}

impl Layout {
    pub fn cfa_count(&self, config: &ScenarioConfig) -> usize {
        config.element_count * config.per_element_modes.len()
            + config.per_segment_modes.len() * self.segments.len()
    }
}

fn element_name(i: usize) -> (String, ElementKind) {
    CATALOGUE.get(i).map_or_else(|| (format!("element {}", i + 1), ElementKind::Hardware), |(n, k)| (n.to_string(), *k))
}

fn segment_name(i: usize) -> String {
    SEGMENT_NAMES.get(i).map_or_else(|| format!("segment {}", i + 1), |n| n.to_string())
}

/// Main segments plus `splits` bisections in breadth-first order. Returns
/// `None` if fewer than `splits` leaves can be split.
fn bisect(config: &ScenarioConfig, splits: usize) -> Option<Layout> {
    let mut segments = Vec::new();
    let mut home: Vec<String> = Vec::with_capacity(config.element_count);
    let mut queue: VecDeque<(String, Vec<usize>)> = VecDeque::new();
    let mut next = 0;
    for (s, size) in config.segment_layout.iter().enumerate() {
        let name = segment_name(s);
        segments.push(SegmentDecl { name: name.clone(), parent: None });
        let members: Vec<usize> = (next..next + size).collect();
        next += size;
        home.extend(members.iter().map(|_| name.clone()));
        queue.push_back((name, members));
    }
    let mut done = 0;
    while done < splits {
        let (name, members) = queue.pop_front()?;
        if members.len() < 2 {
            continue;
        }
        let (a, b) = members.split_at(members.len().div_ceil(2));
        for (suffix, part) in [("1", a), ("2", b)] {
            let child = format!("{name}.{suffix}");
            segments.push(SegmentDecl { name: child.clone(), parent: Some(name.clone()) });
            for &e in part {
                home[e] = child.clone();
            }
            queue.push_back((child, part.to_vec()));
        }
        done += 1;
    }
    let elements = (0..config.element_count)
        .map(|i| {
            let (name, kind) = element_name(i);
            ElementDecl { name, kind, segment: Some(home[i].clone()), variants: Vec::new() }
        })
        .collect();
    Some(Layout { segments, elements, sub_segments: 2 * splits })
}

/// Picks the sub-segment count whose CFA total is closest to the middle of
/// the configured range.
pub fn plan_layout(config: &ScenarioConfig) -> Result<Layout, ScenarioError> {
    if config.segment_layout.iter().sum::<usize>() != config.element_count {
        return Err(ScenarioError::InvalidConfig(format!(
            "segment layout {:?} does not sum to {} elements",
            config.segment_layout, config.element_count
        )));
    }
    if config.segment_layout.contains(&0) {
        return Err(ScenarioError::InvalidConfig("empty main segment".into()));
    }
    let Some((lo, hi)) = config.cfa_range else {
        return Ok(bisect(config, 0).expect("zero splits always fit"));
    };
    let max_splits: usize = config.segment_layout.iter().map(|n| n - 1).sum();
    let mid = (lo + hi) as f64 / 2.0;
    let mut best: Option<Layout> = None;
    for splits in 0..=max_splits {
        let Some(layout) = bisect(config, splits) else { break };
        let n = layout.cfa_count(config);
        if n < lo || n > hi {
            continue;
        }
        let better = best.as_ref().is_none_or(|b| (n as f64 - mid).abs() < (b.cfa_count(config) as f64 - mid).abs());
        if better {
            best = Some(layout);
        }
    }
    best.ok_or(ScenarioError::ConfigInfeasible { lo, hi })
}

fn design_goal() -> DesignGoalSpec {
    DesignGoalSpec {
        description: "reach a minimal risk condition after any single failure during automated highway driving"
            .into(),
        sub_goals: vec![
            SubDesignGoalSpec {
                description: "gradual decrease in speed while keeping the lane".into(),
                activation_condition: "from failure detection until the handover time has elapsed".into(),
                children: Vec::new(),
            },
            SubDesignGoalSpec {
                description: "stop in the same lane".into(),
                activation_condition: "handover time elapsed without driver takeover".into(),
                children: Vec::new(),
            },
        ],
        composition: Some(Composition::TimeBased),
        composition_notes: "the phases follow each other on the handover timeline".into(),
        fsr_ref: None,
    }
}

/// Imports the architecture, opens iteration 1 and defines the process
/// parameters. Uses the logical clock, so equal configs give equal states.
pub fn build_case_study(config: &ScenarioConfig) -> Result<ProjectState, ScenarioError> {
    let mut layout = plan_layout(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..layout.elements.len()).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(3) {
        layout.elements[i].variants = ["standard", "extended temperature"]
            .iter()
            .map(|v| VariantSpec { variant_name: v.to_string(), qualification_notes: String::new(), meets_lower_limit: None })
            .collect();
    }

    let project = ProjectConfig { name: "highway truck case study".into(), single_point_failures: true, clock: ClockMode::logical() };
    let mut engine = Engine::new(project);
    let ctx = Ctx::new(ARCHITECT);
    let fail = |error| ScenarioError::ScriptActionRejected { step: 0, error };
    let description = ArchitectureDescription { segments: layout.segments, elements: layout.elements };
    engine.apply(Command::ImportArchitecture { description }, &ctx).map_err(fail)?;
    engine
        .apply(
            Command::OpenIteration {
                roadmap_elements: Vec::new(),
                classification: Some(FunctionClassification::l3_highway_truck()),
            },
            &ctx,
        )
        .map_err(fail)?;
    let modes = config
        .per_element_modes
        .iter()
        .map(|m| FailureModeSpec::new(m, FailureScope::PerElement))
        .chain(config.per_segment_modes.iter().map(|m| FailureModeSpec::new(m, FailureScope::PerSegment)))
        .collect();
    let scope = engine.state().elements.keys().cloned().collect();
    engine
        .apply(
            Command::DefineProcessParameters {
                elements_in_scope: scope,
                failure_modes: modes,
                design_goals: vec![design_goal()],
                assignment: DgAssignment::default_to(DgRef::New(0)),
            },
            &ctx.clone().with_rationale("single-point failures of every element and segment in the reduced platform"),
        )
        .map_err(fail)?;
    Ok(engine.into_state())
}

/// Refers to an assumption from a script: by label, or created on the spot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "ref", rename_all = "snake_case")]
pub enum AssumptionRef {
    Existing { label: String },
    New { label: String, text: String, category: Option<UncertaintySource>, cfas: BTreeSet<EntityId> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub label: String,
    pub text: String,
}

/// One scripted step. Assumptions and clarifications are named by labels
/// local to the script; CFAs by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ScriptAction {
    Raise { label: String, question: String, assumption: AssumptionRef },
    Analyze {
        cfa: EntityId,
        effect: String,
        baseline_fulfills_dg: bool,
        #[serde(default)]
        design_alternatives: Vec<String>,
        #[serde(default)]
        cite: Vec<String>,
    },
    /// Every unprocessed, unarchived CFA without a prior analysis is
    /// analysed as fulfilled by the baseline.
    AnalyzeRemaining { effect: String },
    /// Every unprocessed CFA with a prior analysis is analysed again with
    /// the same content; invalid citations are swapped for their successors.
    ReanalyzeReverted,
    Resolve {
        clarification: String,
        expert: String,
        notes: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correction: Option<Correction>,
    },
    Convert { clarification: String, expert: String, architect: String, due_date: NaiveDate },
    CompleteTask {
        clarification: String,
        notes: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correction: Option<Correction>,
    },
    /// Chooses the named alternatives and rejects every other candidate.
    Select { chosen: Vec<String>, rationale: String, rejection_rationale: String },
    Close,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub cfa_total: usize,
    pub cfas_with_das: usize,
    pub cfas_with_multiple_das: usize,
    pub clarifications_raised: usize,
    pub resolved: usize,
    pub converted: usize,
    pub tasks_completed: usize,
    pub corrections: usize,
    pub correction_rate: f64,
    pub reverted_cfa_count: usize,
    pub risk_count: usize,
    pub open_tasks: usize,
    pub iteration_closed: bool,
}

#[derive(Default)]
struct Labels {
    assumptions: BTreeMap<String, EntityId>,
    clarifications: BTreeMap<String, EntityId>,
}

impl Labels {
    fn get<'a>(map: &'a BTreeMap<String, EntityId>, step: usize, label: &str) -> Result<&'a EntityId, ScenarioError> {
        map.get(label).ok_or_else(|| ScenarioError::UnknownLabel { step, label: label.to_owned() })
    }
}

/// Runs `script` through the engine. Stops at the first rejected step.
pub fn replay_workflow(engine: &mut Engine, script: &[ScriptAction]) -> Result<ScenarioStats, ScenarioError> {
    let ctx = Ctx::new(ARCHITECT);
    let mut labels = Labels::default();
    let mut corrections = 0;
    let mut reverted = 0;
    for (i, action) in script.iter().enumerate() {
        let step = i + 1;
        let reject = |error| ScenarioError::ScriptActionRejected { step, error };
        for cmd in expand(engine.state(), &labels, step, action)? {
            let applied = engine.apply(cmd, &ctx).map_err(reject)?;
            match applied.result {
                OpResult::ClarificationRaised { clarification, assumption, .. } => {
                    if let ScriptAction::Raise { label, assumption: a, .. } = action {
                        labels.clarifications.insert(label.clone(), clarification);
                        if let AssumptionRef::New { label, .. } = a {
                            labels.assumptions.insert(label.clone(), assumption);
                        }
                    }
                }
                OpResult::Resolved { corrected, replacement, reverted_cfas, .. } => {
                    if corrected {
                        corrections += 1;
                    }
                    reverted += reverted_cfas.len();
                    let correction = match action {
                        ScriptAction::Resolve { correction, .. } | ScriptAction::CompleteTask { correction, .. } => {
                            correction.as_ref()
                        }
                        _ => None,
                    };
                    if let (Some(c), Some(r)) = (correction, replacement) {
                        labels.assumptions.insert(c.label.clone(), r);
                    }
                }
                OpResult::AssumptionInvalidated { reverted_cfas, .. } => reverted += reverted_cfas.len(),
                _ => {}
            }
        }
    }
    Ok(statistics(engine.state(), corrections, reverted))
}

fn statistics(st: &ProjectState, corrections: usize, reverted: usize) -> ScenarioStats {
    let live = st.cfas.values().filter(|c| !c.archived);
    let da_counts: Vec<usize> =
        live.clone().map(|c| c.analysis.as_ref().map_or(0, |a| a.design_alternatives.len())).collect();
    let raised = st.clarifications.len();
    let count_clar = |s: ClarificationStatus| st.clarifications.values().filter(|c| c.status == s).count();
    let closed = st.latest_iteration().filter(|i| i.status == IterationStatus::Closed);
    ScenarioStats {
        cfa_total: live.count(),
        cfas_with_das: da_counts.iter().filter(|n| **n >= 1).count(),
        cfas_with_multiple_das: da_counts.iter().filter(|n| **n >= 2).count(),
        clarifications_raised: raised,
        resolved: count_clar(ClarificationStatus::Resolved),
        converted: count_clar(ClarificationStatus::ConvertedToTask),
        tasks_completed: st.tasks.values().filter(|t| t.status == TaskStatus::Complete).count(),
        corrections,
        correction_rate: if raised == 0 { 0.0 } else { corrections as f64 / raised as f64 },
        reverted_cfa_count: reverted,
        risk_count: closed.map_or(0, |it| st.risks.values().filter(|r| r.iteration == it.number).count()),
        open_tasks: st.tasks.values().filter(|t| t.status == TaskStatus::Open).count(),
        iteration_closed: closed.is_some(),
    }
}

fn replacement_of(st: &ProjectState, id: &EntityId) -> Option<EntityId> {
    let mut cur = id.clone();
    for _ in 0..st.assumptions.len() + 1 {
        let a = st.assumptions.get(&cur)?;
        if a.validity == Validity::Valid {
            return Some(cur);
        }
        cur = a.superseded_by.clone()?;
    }
    None
}

/// Translates one script action into engine commands.
fn expand(st: &ProjectState, labels: &Labels, step: usize, action: &ScriptAction) -> Result<Vec<Command>, ScenarioError> {
    let outcome = |c: &Option<Correction>| match c {
        Some(c) => Outcome::Corrected { new_text: c.text.clone(), linked_cfas: BTreeSet::new() },
        None => Outcome::Confirmed,
    };
    let cmds = match action {
        ScriptAction::Raise { question, assumption, .. } => {
            let payload = match assumption {
                AssumptionRef::Existing { label } => {
                    AssumptionPayload::Existing(Labels::get(&labels.assumptions, step, label)?.clone())
                }
                AssumptionRef::New { text, category, cfas, .. } => {
                    AssumptionPayload::New { text: text.clone(), category: *category, linked_cfas: cfas.clone() }
                }
            };
            vec![Command::RaiseClarification { question: question.clone(), assumption: Some(payload) }]
        }
        ScriptAction::Analyze { cfa, effect, baseline_fulfills_dg, design_alternatives, cite } => {
            let cited = cite
                .iter()
                .map(|l| Labels::get(&labels.assumptions, step, l).cloned())
                .collect::<Result<_, _>>()?;
            vec![Command::AnalyzeCfa {
                cfa: cfa.clone(),
                effect: effect.clone(),
                baseline_fulfills_dg: *baseline_fulfills_dg,
                design_alternatives: design_alternatives.clone(),
                cited_assumptions: cited,
            }]
        }
        ScriptAction::AnalyzeRemaining { effect } => st
            .cfas
            .values()
            .filter(|c| !c.archived && c.state == CfaState::Unprocessed && c.analysis.is_none())
            .map(|c| Command::AnalyzeCfa {
                cfa: c.id.clone(),
                effect: effect.clone(),
                baseline_fulfills_dg: true,
                design_alternatives: Vec::new(),
                cited_assumptions: BTreeSet::new(),
            })
            .collect(),
        ScriptAction::ReanalyzeReverted => st
            .cfas
            .values()
            .filter(|c| !c.archived && c.state == CfaState::Unprocessed)
            .filter_map(|c| c.analysis.as_ref().map(|a| (c, a)))
            .map(|(c, a)| Command::AnalyzeCfa {
                cfa: c.id.clone(),
                effect: a.functional_effect.clone(),
                baseline_fulfills_dg: a.baseline_fulfills_dg,
                design_alternatives: a
                    .design_alternatives
                    .iter()
                    .filter_map(|d| st.design_alternatives.get(d).map(|d| d.description.clone()))
                    .collect(),
                cited_assumptions: a.cited_assumptions.iter().filter_map(|x| replacement_of(st, x)).collect(),
            })
            .collect(),
        ScriptAction::Resolve { clarification, expert, notes, correction } => vec![Command::ResolveClarification {
            clarification: Labels::get(&labels.clarifications, step, clarification)?.clone(),
            outcome: outcome(correction),
            expert: ActorId::new(expert.clone()),
            notes: notes.clone(),
        }],
        ScriptAction::Convert { clarification, expert, architect, due_date } => {
            vec![Command::ConvertClarificationToTask {
                clarification: Labels::get(&labels.clarifications, step, clarification)?.clone(),
                expert: Some(ActorId::new(expert.clone())),
                responsible_architect: Some(ActorId::new(architect.clone())),
                due_date: Some(*due_date),
            }]
        }
        ScriptAction::CompleteTask { clarification, notes, correction } => {
            let c = Labels::get(&labels.clarifications, step, clarification)?;
            let task = st
                .clarifications
                .get(c)
                .and_then(|c| c.task.clone())
                .ok_or_else(|| ScenarioError::UnknownLabel { step, label: format!("task of {clarification}") })?;
            vec![Command::CompleteTask { task, outcome: outcome(correction), notes: notes.clone() }]
        }
        ScriptAction::Select { chosen, rationale, rejection_rationale } => {
            let by_desc: BTreeMap<&str, &EntityId> =
                st.design_alternatives.values().map(|d| (d.description.as_str(), &d.id)).collect();
            let chosen: BTreeSet<EntityId> = chosen
                .iter()
                .map(|d| by_desc.get(d.as_str()).map(|id| (*id).clone()))
                .collect::<Option<_>>()
                .ok_or_else(|| ScenarioError::UnknownLabel { step, label: chosen.join(", ") })?;
            let rejections = st
                .design_alternatives
                .values()
                .filter(|d| d.status == DaStatus::Candidate && !chosen.contains(&d.id))
                .map(|d| (d.id.clone(), rejection_rationale.clone()))
                .collect();
            vec![Command::MakeSelection {
                chosen_das: chosen,
                rationale: rationale.clone(),
                rejections,
                method_note: "architects' judgement against the design goal".into(),
            }]
        }
        ScriptAction::Close => vec![Command::CloseIteration {}],
    };
    Ok(cmds)
}

/// CFAs that receive design alternatives in the canonical script:
/// (element or segment name, failure mode, effect, alternatives).
const ANALYSES: [(&str, &str, &str, &[&str]); 9] = [
    (
        "vehicle interface",
        COMM_FAILURE,
        "messaging between segments stops",
        &["redundant communication path", "local safe-stop per segment"],
    ),
    (
        "steering controller",
        OMISSION,
        "no lateral control; truck leaves the lane",
        &["redundant steering actuator", "differential braking for lateral control"],
    ),
    (
        "service brake controller",
        OMISSION,
        "no deceleration on request",
        &["secondary brake circuit", "trailer brake as fallback deceleration"],
    ),
    (
        "trajectory planner",
        OMISSION,
        "no trajectory for the controllers",
        &["independent minimal-risk trajectory generator", "stored fallback trajectory"],
    ),
    ("front radar", OMISSION, "loss of long-range object detection", &["second forward radar", "camera-only degraded mode"]),
    ("power distribution unit", POWER_LOSS, "safety-relevant consumers unpowered", &["dual power supply to actuators"]),
    ("central gateway", POWER_LOSS, "no routing between vehicle networks", &["backup supply for the gateway"]),
    ("localization", OMISSION, "lane position unknown", &["lane keeping on camera lane markings"]),
    ("driver monitoring", OMISSION, "driver readiness unknown at handover", &["conservative handover assuming an absent driver"]),
];

fn find_target(st: &ProjectState, name: &str, mode: &str) -> Option<EntityId> {
    let mode = st.failure_modes.values().find(|m| m.name == mode)?;
    st.cfas
        .values()
        .filter(|c| !c.archived && c.failure_mode == mode.id)
        .find(|c| match &c.target {
            CfaTarget::Element(e) => st.elements.get(e).is_some_and(|e| e.name == name),
            CfaTarget::Segment(s) => st.segments.get(s).is_some_and(|s| s.name == name),
        })
        .map(|c| c.id.clone())
}

/// The canonical workflow for a project built by [`build_case_study`].
///
/// Each clarification comes with a new assumption linked to two CFAs. All
/// CFAs are then analysed, the clarifications answered (corrections first so
/// that they revert processed CFAs), some tasks completed, reverted CFAs
/// analysed again, and the selection made before closing.
pub fn canonical_script(st: &ProjectState, t: &CanonicalTargets, seed: u64) -> Result<Vec<ScriptAction>, ScenarioError> {
    if t.resolved + t.converted > t.clarifications || t.corrected > t.resolved || t.tasks_completed > t.converted {
        return Err(ScenarioError::ScriptUnavailable(format!("inconsistent targets {t:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfas: Vec<EntityId> = st.cfas.values().filter(|c| !c.archived).map(|c| c.id.clone()).collect();
    if cfas.is_empty() {
        return Err(ScenarioError::ScriptUnavailable("project has no CFAs".into()));
    }
    cfas.shuffle(&mut rng);

    let mut script = Vec::new();
    let mut links: BTreeMap<EntityId, Vec<String>> = BTreeMap::new();
    for i in 0..t.clarifications {
        let (c, a) = (format!("c{:02}", i + 1), format!("a{:02}", i + 1));
        let linked: BTreeSet<EntityId> = [&cfas[(2 * i) % cfas.len()], &cfas[(2 * i + 1) % cfas.len()]].into_iter().cloned().collect();
        for id in &linked {
            links.entry(id.clone()).or_default().push(a.clone());
        }
        let source = UncertaintySource::ALL[i % UncertaintySource::ALL.len()];
        script.push(ScriptAction::Raise {
            label: c,
            question: format!("question {} on {}", i + 1, linked.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(" and ")),
            assumption: AssumptionRef::New {
                label: a,
                text: format!("working assumption {} ({source:?})", i + 1),
                category: Some(source),
                cfas: linked,
            },
        });
    }

    let mut chosen = Vec::new();
    for (name, mode, effect, das) in ANALYSES {
        let cfa = find_target(st, name, mode)
            .ok_or_else(|| ScenarioError::ScriptUnavailable(format!("no CFA for {mode} of {name}")))?;
        chosen.push(das[0].to_string());
        script.push(ScriptAction::Analyze {
            cite: links.get(&cfa).cloned().unwrap_or_default(),
            cfa,
            effect: effect.into(),
            baseline_fulfills_dg: false,
            design_alternatives: das.iter().map(|d| d.to_string()).collect(),
        });
    }
    script.push(ScriptAction::AnalyzeRemaining {
        effect: "degraded function covered by the existing minimal risk manoeuvre".into(),
    });

    let mut order: Vec<usize> = (0..t.clarifications).collect();
    order.shuffle(&mut rng);
    let expert = |k: usize| format!("expert-{}", k % 5 + 1);
    let due = NaiveDate::from_ymd_opt(2026, 3, 2).expect("valid date");
    let (resolved, rest) = order.split_at(t.resolved);
    let converted = &rest[..t.converted];
    for (k, &i) in resolved.iter().enumerate() {
        let correction = (k < t.corrected).then(|| Correction {
            label: format!("a{:02}r", i + 1),
            text: format!("working assumption {} as corrected by the expert", i + 1),
        });
        script.push(ScriptAction::Resolve {
            clarification: format!("c{:02}", i + 1),
            expert: expert(k),
            notes: if correction.is_some() { "assumption does not hold; corrected" } else { "assumption confirmed" }.into(),
            correction,
        });
    }
    for (k, &i) in converted.iter().enumerate() {
        script.push(ScriptAction::Convert {
            clarification: format!("c{:02}", i + 1),
            expert: expert(k),
            architect: ARCHITECT.into(),
            due_date: due + chrono::Duration::days(7 * k as i64),
        });
    }
    for &i in &converted[..t.tasks_completed] {
        script.push(ScriptAction::CompleteTask {
            clarification: format!("c{:02}", i + 1),
            notes: "investigation confirmed the assumption".into(),
            correction: None,
        });
    }
    script.push(ScriptAction::ReanalyzeReverted);
    script.push(ScriptAction::Select {
        chosen,
        rationale: "covers every CFA whose baseline misses the design goal at the lowest integration cost".into(),
        rejection_rationale: "the chosen alternative covers the same CFA with less change to the platform".into(),
    });
    script.push(ScriptAction::Close);
    Ok(script)
}

/// Builds the project and runs its configured script.
pub fn run(config: &ScenarioConfig) -> Result<(Engine, ScenarioStats), ScenarioError> {
    let state = build_case_study(config)?;
    let script = config.script_for(&state)?;
    let mut engine = Engine::from_state(state);
    let stats = replay_workflow(&mut engine, &script)?;
    Ok((engine, stats))
}
