//! `atrium <noun> <verb>` command line.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use atrium_core::changelog::{audit, export_jsonl, AuditFilter};
use atrium_core::scenario::{self, ScenarioConfig};
use atrium_core::store::{export_deliverables, export_fmea, load_snapshot, read_architecture};
use atrium_core::trace::{back_trace, impact_of, integrity_check, to_dot};
use atrium_core::*;
use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::project::{AppError, Project};
use crate::render;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "atrium", version, about = "Refine a preliminary architecture under uncertainty")]
pub struct Cli {
    /// Project store directory.
    #[arg(long, global = true, env = "ATRIUM_PROJECT", default_value = ".")]
    pub project: PathBuf,
    /// Why this change is made. Required by every mutating command.
    #[arg(long, global = true)]
    pub rationale: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    #[arg(long, global = true, env = "ATRIUM_ACTOR", default_value = "cli")]
    pub actor: String,
    #[command(subcommand)]
    pub command: Noun,
}

#[derive(Debug, Subcommand)]
pub enum Noun {
    /// Create an empty project.
    Init {
        #[arg(long, default_value = "atrium project")]
        name: String,
        /// Deterministic timestamps instead of wall-clock time.
        #[arg(long)]
        logical_clock: bool,
    },
    /// Import an architecture description (JSON: segments, elements).
    Import { file: PathBuf },
    #[command(subcommand)]
    Iteration(IterationCmd),
    #[command(subcommand)]
    Params(ParamsCmd),
    #[command(subcommand)]
    Element(ElementCmd),
    #[command(subcommand)]
    Segment(ListOnly),
    #[command(subcommand)]
    Cfa(CfaCmd),
    #[command(subcommand)]
    Da(ListOnly),
    #[command(subcommand)]
    Assumption(AssumptionCmd),
    #[command(subcommand)]
    Clarification(ClarificationCmd),
    #[command(subcommand)]
    Task(TaskCmd),
    #[command(subcommand)]
    Risk(ListOnly),
    #[command(subcommand)]
    Selection(SelectionCmd),
    #[command(subcommand)]
    Trace(TraceCmd),
    #[command(subcommand)]
    Export(ExportCmd),
    /// Filter the change log.
    Audit {
        #[arg(long)]
        entity: Option<String>,
        #[arg(long = "by")]
        by_actor: Option<String>,
        #[arg(long)]
        iteration: Option<u32>,
        #[arg(long)]
        from: Option<DateTime<Utc>>,
        #[arg(long)]
        until: Option<DateTime<Utc>>,
    },
    /// Apply a raw command (JSON with an "op" field) from a file or stdin.
    Apply { file: PathBuf },
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Serve the /v1 HTTP API over this project.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ListOnly {
    List,
}

#[derive(Debug, Subcommand)]
pub enum IterationCmd {
    Open {
        /// JSON list of element specs from the technology roadmap.
        #[arg(long)]
        roadmap: Option<PathBuf>,
        /// JSON function classification table.
        #[arg(long, conflicts_with = "l3_classification")]
        classification: Option<PathBuf>,
        /// Use the built-in L3 highway truck classification.
        #[arg(long)]
        l3_classification: bool,
    },
    Close,
    /// Show the closure gate without closing.
    Status,
    List,
}

#[derive(Debug, Subcommand)]
pub enum ParamsCmd {
    /// Define scope, failure modes and design goals from a JSON file.
    Define { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum ElementCmd {
    Add {
        #[arg(long)]
        name: String,
        #[arg(long, value_parser = parse_enum::<ElementKind>)]
        kind: ElementKind,
        #[arg(long)]
        segment: Option<String>,
        #[arg(long = "variant")]
        variants: Vec<String>,
    },
    Retire {
        id: String,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum CfaCmd {
    Analyze {
        id: String,
        #[arg(long)]
        effect: String,
        #[arg(long)]
        baseline_fulfills_dg: bool,
        #[arg(long = "da")]
        das: Vec<String>,
        #[arg(long = "cite")]
        cites: Vec<String>,
    },
    /// Record the review of one CFA against a new assumption.
    Review {
        queue: String,
        cfa: String,
        #[arg(long, conflicts_with = "unprocess", required_unless_present = "unprocess")]
        keep: bool,
        #[arg(long)]
        unprocess: bool,
    },
    List {
        /// Include archived CFAs.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Debug, Args)]
pub struct CorrectionArgs {
    /// Record the outcome as a correction with this new assumption text.
    #[arg(long)]
    corrected: Option<String>,
    /// CFAs for the corrected assumption; defaults to those of the old one.
    #[arg(long = "cfa", requires = "corrected")]
    cfas: Vec<String>,
}

impl CorrectionArgs {
    fn outcome(&self) -> Outcome {
        match &self.corrected {
            Some(text) => Outcome::Corrected { new_text: text.clone(), linked_cfas: id_set(&self.cfas) },
            None => Outcome::Confirmed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum AssumptionCmd {
    Add {
        #[arg(long)]
        text: String,
        #[arg(long, value_parser = parse_enum::<UncertaintySource>)]
        category: Option<UncertaintySource>,
        #[arg(long = "cfa")]
        cfas: Vec<String>,
    },
    /// Invalidate an assumption; --rationale is the reason.
    Invalidate {
        id: String,
        #[arg(long)]
        replacement: Option<String>,
        #[arg(long = "replacement-cfa", requires = "replacement")]
        replacement_cfas: Vec<String>,
        #[arg(long, requires = "replacement")]
        resolves: Option<String>,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum ClarificationCmd {
    Raise {
        #[arg(long)]
        question: String,
        /// Existing assumption the work proceeds on.
        #[arg(long, conflicts_with = "new_assumption")]
        assumption: Option<String>,
        /// Text of a new assumption to create.
        #[arg(long)]
        new_assumption: Option<String>,
        #[arg(long = "cfa", requires = "new_assumption")]
        cfas: Vec<String>,
        #[arg(long, value_parser = parse_enum::<UncertaintySource>, requires = "new_assumption")]
        category: Option<UncertaintySource>,
    },
    Resolve {
        id: String,
        #[arg(long)]
        expert: String,
        #[arg(long)]
        notes: String,
        #[command(flatten)]
        correction: CorrectionArgs,
    },
    Convert {
        id: String,
        #[arg(long)]
        expert: Option<String>,
        #[arg(long)]
        architect: Option<String>,
        #[arg(long)]
        due: Option<NaiveDate>,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum TaskCmd {
    Complete {
        id: String,
        #[arg(long)]
        notes: String,
        #[command(flatten)]
        correction: CorrectionArgs,
    },
    List,
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    #[arg(long = "choose")]
    chosen: Vec<String>,
    /// `DA-id=reason`, once per rejected alternative.
    #[arg(long = "reject", value_parser = parse_rejection)]
    rejections: Vec<(String, String)>,
    #[arg(long, default_value = "")]
    method_note: String,
}

#[derive(Debug, Subcommand)]
pub enum SelectionCmd {
    /// Make the selection; --rationale is recorded on it.
    Make(SelectionArgs),
    Revise(SelectionArgs),
    List,
}

#[derive(Debug, Subcommand)]
pub enum TraceCmd {
    /// Assumptions a selection rests on.
    Back { selection: String },
    /// What invalidating an assumption would touch.
    Impact { assumption: String },
    Integrity,
    /// The link graph in Graphviz dot format.
    Graph,
}

#[derive(Debug, Subcommand)]
pub enum ExportCmd {
    Fmea {
        #[arg(long)]
        include_archived: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Deliverables {
        iteration: u32,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    Changelog {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCmd {
    /// Create the case-study project at --project.
    Build {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build the case study, run its script, save, and report statistics.
    Replay {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

fn parse_rejection(s: &str) -> Result<(String, String), String> {
    let (id, why) = s.split_once('=').ok_or_else(|| format!("expected DA-id=reason, got {s:?}"))?;
    Ok((id.trim().to_owned(), why.to_owned()))
}

fn id_set(ids: &[String]) -> BTreeSet<EntityId> {
    ids.iter().map(|s| EntityId::parse(s.clone())).collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| AppError::Usage(e.to_string()))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))
}

fn write_to(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))
}

/// What a subcommand produced: structured data plus its human rendering.
struct Output {
    data: Value,
    human: String,
}

impl Output {
    fn new(data: impl Serialize, human: impl Into<String>) -> Self {
        Output { data: serde_json::to_value(data).expect("output serializes"), human: human.into() }
    }
}

/// Builds the engine command for a mutating subcommand, or `None` for
/// queries and project management.
fn to_command(cli: &Cli) -> Result<Option<Command>, AppError> {
    let rationale = || cli.rationale.clone().unwrap_or_default();
    let cmd = match &cli.command {
        Noun::Import { file } => Command::ImportArchitecture { description: read_architecture(file)? },
        Noun::Iteration(IterationCmd::Open { roadmap, classification, l3_classification }) => Command::OpenIteration {
            roadmap_elements: roadmap.as_deref().map(read_json).transpose()?.unwrap_or_default(),
            classification: match (classification, l3_classification) {
                (Some(p), _) => Some(read_json(p)?),
                (None, true) => Some(FunctionClassification::l3_highway_truck()),
                (None, false) => None,
            },
        },
        Noun::Iteration(IterationCmd::Close) => Command::CloseIteration {},
        Noun::Params(ParamsCmd::Define { file }) => {
            let mut v: Value = read_json(file)?;
            if let Some(obj) = v.as_object_mut() {
                obj.insert("op".into(), "define_process_parameters".into());
            }
            serde_json::from_value(v).map_err(|e| AppError::Usage(format!("{}: {e}", file.display())))?
        }
        Noun::Element(ElementCmd::Add { name, kind, segment, variants }) => Command::AddElement {
            element: ElementSpec {
                name: name.clone(),
                kind: *kind,
                segment: segment.as_ref().map(|s| EntityId::parse(s.clone())),
                variants: variants
                    .iter()
                    .map(|v| VariantSpec {
                        variant_name: v.clone(),
                        qualification_notes: String::new(),
                        meets_lower_limit: None,
                    })
                    .collect(),
            },
        },
        Noun::Element(ElementCmd::Retire { id }) => {
            Command::RetireElement { element: EntityId::parse(id.clone()), rationale: rationale() }
        }
        Noun::Cfa(CfaCmd::Analyze { id, effect, baseline_fulfills_dg, das, cites }) => Command::AnalyzeCfa {
            cfa: EntityId::parse(id.clone()),
            effect: effect.clone(),
            baseline_fulfills_dg: *baseline_fulfills_dg,
            design_alternatives: das.clone(),
            cited_assumptions: id_set(cites),
        },
        Noun::Cfa(CfaCmd::Review { queue, cfa, unprocess, .. }) => Command::ReviewCfa {
            queue: EntityId::parse(queue.clone()),
            cfa: EntityId::parse(cfa.clone()),
            disposition: if *unprocess { Disposition::MarkUnprocessed } else { Disposition::KeepProcessed },
        },
        Noun::Assumption(AssumptionCmd::Add { text, category, cfas }) => {
            Command::AddAssumption { text: text.clone(), category: *category, linked_cfas: id_set(cfas) }
        }
        Noun::Assumption(AssumptionCmd::Invalidate { id, replacement, replacement_cfas, resolves }) => {
            Command::InvalidateAssumption {
                assumption: EntityId::parse(id.clone()),
                reason: rationale(),
                replacement: replacement.as_ref().map(|text| Replacement {
                    text: text.clone(),
                    linked_cfas: id_set(replacement_cfas),
                    resolves_clarification: resolves.as_ref().map(|c| EntityId::parse(c.clone())),
                }),
            }
        }
        Noun::Clarification(ClarificationCmd::Raise { question, assumption, new_assumption, cfas, category }) => {
            let payload = match (assumption, new_assumption) {
                (Some(a), _) => Some(AssumptionPayload::Existing(EntityId::parse(a.clone()))),
                (None, Some(text)) => Some(AssumptionPayload::New {
                    text: text.clone(),
                    category: *category,
                    linked_cfas: id_set(cfas),
                }),
                (None, None) => None,
            };
            Command::RaiseClarification { question: question.clone(), assumption: payload }
        }
        Noun::Clarification(ClarificationCmd::Resolve { id, expert, notes, correction }) => {
            Command::ResolveClarification {
                clarification: EntityId::parse(id.clone()),
                outcome: correction.outcome(),
                expert: ActorId::new(expert.clone()),
                notes: notes.clone(),
            }
        }
        Noun::Clarification(ClarificationCmd::Convert { id, expert, architect, due }) => {
            Command::ConvertClarificationToTask {
                clarification: EntityId::parse(id.clone()),
                expert: expert.as_ref().map(|e| ActorId::new(e.clone())),
                responsible_architect: architect.as_ref().map(|e| ActorId::new(e.clone())),
                due_date: *due,
            }
        }
        Noun::Task(TaskCmd::Complete { id, notes, correction }) => Command::CompleteTask {
            task: EntityId::parse(id.clone()),
            outcome: correction.outcome(),
            notes: notes.clone(),
        },
        Noun::Selection(SelectionCmd::Make(a)) | Noun::Selection(SelectionCmd::Revise(a)) => {
            let chosen_das = id_set(&a.chosen);
            let rejections: BTreeMap<EntityId, String> =
                a.rejections.iter().map(|(id, why)| (EntityId::parse(id.clone()), why.clone())).collect();
            if matches!(cli.command, Noun::Selection(SelectionCmd::Make(_))) {
                Command::MakeSelection { chosen_das, rationale: rationale(), rejections, method_note: a.method_note.clone() }
            } else {
                Command::ReviseSelection {
                    chosen_das,
                    rationale: rationale(),
                    rejections,
                    method_note: a.method_note.clone(),
                }
            }
        }
        Noun::Apply { file } => read_json(file)?,
        _ => return Ok(None),
    };
    Ok(Some(cmd))
}

fn entity_lines<T: Serialize>(items: impl IntoIterator<Item = T>, line: impl Fn(&T) -> String) -> Output {
    let items: Vec<T> = items.into_iter().collect();
    let human = items.iter().map(line).collect::<Vec<_>>().join("\n");
    Output::new(items, if human.is_empty() { "(none)".to_owned() } else { human })
}

fn query(cli: &Cli, st: &ProjectState) -> Result<Output, AppError> {
    let out = match &cli.command {
        Noun::Iteration(IterationCmd::Status) => {
            let gate = Engine::from_state(st.clone()).gate_status().ok_or(EngineError::NoOpenIteration)?;
            Output::new(&gate, render::gate(&gate))
        }
        Noun::Iteration(IterationCmd::List) => entity_lines(st.iterations.values(), |i| {
            format!("{}  #{} {:?}", i.id, i.number, i.status)
        }),
        Noun::Element(ElementCmd::List) => entity_lines(st.elements.values(), |e| {
            let seg = e.segment.as_ref().map_or("-", |s| s.as_str());
            let retired = if e.retired { " retired" } else { "" };
            format!("{}  {} ({:?}, {:?}) in {seg}{retired}", e.id, e.name, e.kind, e.state)
        }),
        Noun::Segment(_) => entity_lines(st.segments.values(), |s| {
            let parent = s.parent.as_ref().map_or("-", |p| p.as_str());
            format!("{}  {} parent {parent}, {} members", s.id, s.name, s.member_elements.len())
        }),
        Noun::Cfa(CfaCmd::List { all }) => entity_lines(st.cfas.values().filter(|c| *all || !c.archived), |c| {
            let mode = st.failure_modes.get(&c.failure_mode).map_or("?", |m| m.name.as_str());
            let das = c.analysis.as_ref().map_or(String::new(), |a| render::ids(&a.design_alternatives));
            format!("{}  {mode} of {}  {:?}  DAs {das}", c.id, c.target.id(), c.state)
        }),
        Noun::Da(_) => entity_lines(st.design_alternatives.values(), |d| {
            format!("{}  {} {:?} for {}", d.id, d.description, d.status, render::ids(&d.satisfies_cfas))
        }),
        Noun::Assumption(AssumptionCmd::List) => entity_lines(st.assumptions.values(), |a| {
            format!("{}  [{:?}] {}", a.id, a.validity, a.text)
        }),
        Noun::Clarification(ClarificationCmd::List) => entity_lines(st.clarifications.values(), |c| {
            format!("{}  [{:?}] {} (on {})", c.id, c.status, c.question, c.linked_assumption)
        }),
        Noun::Task(TaskCmd::List) => entity_lines(st.tasks.values(), |t| {
            format!("{}  [{:?}] {} owner {} due {}", t.id, t.status, t.origin_clarification, t.expert, t.due_date)
        }),
        Noun::Risk(_) => entity_lines(st.risks.values(), |r| format!("{}  iteration {}: {}", r.id, r.iteration, r.description)),
        Noun::Selection(SelectionCmd::List) => entity_lines(st.selections.values(), |s| {
            let sup = s.superseded_by.as_ref().map_or(String::new(), |x| format!(" superseded by {x}"));
            format!("{}  iteration {} chose {}{sup}", s.id, s.iteration, render::ids(&s.chosen_das))
        }),
        Noun::Trace(TraceCmd::Back { selection }) => {
            let id = EntityId::parse(selection.clone());
            let found = back_trace(st, &id)?;
            let human = render::back_trace(&id, &found);
            Output::new(found, human)
        }
        Noun::Trace(TraceCmd::Impact { assumption }) => {
            let report = impact_of(st, &EntityId::parse(assumption.clone()))?;
            let human = render::impact(&report);
            Output::new(report, human)
        }
        Noun::Trace(TraceCmd::Integrity) => {
            let v = integrity_check(st);
            let human = if v.is_empty() {
                "no violations".to_owned()
            } else {
                v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n")
            };
            Output::new(v, human)
        }
        Noun::Trace(TraceCmd::Graph) => {
            let dot = to_dot(st);
            Output::new(&dot, dot.trim_end())
        }
        Noun::Export(ExportCmd::Fmea { include_archived, out }) => {
            let csv = export_fmea(st, *include_archived);
            let rows = csv.lines().count().saturating_sub(1);
            match out {
                Some(p) => {
                    write_to(p, &csv)?;
                    Output::new(json!({ "rows": rows, "file": p }), format!("{rows} rows written to {}", p.display()))
                }
                None => Output::new(json!({ "rows": rows, "csv": csv }), csv.trim_end()),
            }
        }
        Noun::Export(ExportCmd::Deliverables { iteration, out_dir }) => {
            let docs = export_deliverables(st, *iteration)?;
            match out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| AppError::Usage(e.to_string()))?;
                    let mut files = Vec::new();
                    for (name, text) in docs.files(*iteration) {
                        let p = dir.join(name);
                        write_to(&p, text)?;
                        files.push(p);
                    }
                    let human = files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join("\n");
                    Output::new(json!({ "files": files }), human)
                }
                None => {
                    let human = format!("{}\n{}\n{}", docs.refined_pa, docs.assumption_list, docs.risk_list);
                    Output::new(docs, human.trim_end())
                }
            }
        }
        Noun::Export(ExportCmd::Changelog { out }) => {
            let text = export_jsonl(&st.changelog);
            match out {
                Some(p) => {
                    write_to(p, &text)?;
                    Output::new(json!({ "entries": st.changelog.len(), "file": p }), format!("{} entries", st.changelog.len()))
                }
                None => Output::new(&st.changelog, text.trim_end()),
            }
        }
        Noun::Audit { entity, by_actor, iteration, from, until } => {
            let filter = AuditFilter {
                entity: entity.as_ref().map(|e| EntityId::parse(e.clone())),
                actor: by_actor.as_ref().map(|a| ActorId::new(a.clone())),
                from: *from,
                until: *until,
                iteration: *iteration,
            };
            let hits = audit(&st.changelog, &filter);
            let human = hits
                .iter()
                .map(|e| format!("{} #{} {} {} by {}: {}", e.id, e.sequence, e.at.to_rfc3339(), e.operation, e.actor, e.decision))
                .collect::<Vec<_>>()
                .join("\n");
            Output::new(hits, if human.is_empty() { "(none)".to_owned() } else { human })
        }
        _ => unreachable!("not a query"),
    };
    Ok(out)
}

fn scenario_config(path: &Option<PathBuf>) -> Result<ScenarioConfig, AppError> {
    match path {
        Some(p) => read_json(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn execute(cli: &Cli) -> Result<Output, AppError> {
    let ctx = Ctx { actor: ActorId::new(cli.actor.clone()), rationale: cli.rationale.clone() };
    match &cli.command {
        Noun::Init { name, logical_clock } => {
            let clock = if *logical_clock { ClockMode::logical() } else { ClockMode::Wall };
            let config = ProjectConfig { name: name.clone(), single_point_failures: true, clock };
            Project::init(&cli.project, config)?;
            return Ok(Output::new(json!({ "project": cli.project }), format!("initialised {}", cli.project.display())));
        }
        Noun::Scenario(ScenarioCmd::Build { config }) => {
            let state = scenario::build_case_study(&scenario_config(config)?)?;
            let summary = json!({
                "elements": state.elements.len(),
                "segments": state.segments.len(),
                "cfas": state.cfas.len(),
                "state_hash": state.state_hash(),
            });
            let human = format!(
                "case study at {}: {} elements, {} segments, {} CFAs",
                cli.project.display(),
                state.elements.len(),
                state.segments.len(),
                state.cfas.len()
            );
            Project::create(&cli.project, Engine::from_state(state))?;
            return Ok(Output::new(summary, human));
        }
        Noun::Scenario(ScenarioCmd::Replay { config }) => {
            let (engine, stats) = scenario::run(&scenario_config(config)?)?;
            Project::create(&cli.project, engine)?;
            let human = serde_json::to_string_pretty(&stats).expect("stats serialize");
            return Ok(Output::new(stats, human));
        }
        Noun::Serve { bind } => {
            let project = Project::open(&cli.project)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::Usage(e.to_string()))?;
            runtime
                .block_on(crate::api::serve(project, bind))
                .map_err(|e| AppError::Usage(format!("BindFailure: {e}")))?;
            return Ok(Output::new(Value::Null, ""));
        }
        _ => {}
    }

    if let Some(command) = to_command(cli)? {
        if cli.rationale.as_deref().is_none_or(|r| r.trim().is_empty()) {
            return Err(AppError::Usage(format!("{} changes the project and needs --rationale", command.name())));
        }
        let mut project = Project::open(&cli.project)?;
        let applied = project.apply(command, &ctx)?;
        let human = render::applied(&applied);
        return Ok(Output::new(applied, human));
    }
    let state = load_snapshot(&cli.project).map_err(|e| match e {
        atrium_core::store::StoreError::Io(_) => AppError::NoProject(cli.project.display().to_string()),
        other => other.into(),
    })?;
    query(cli, &state)
}

/// Runs one invocation and returns the process exit code: 0 on success,
/// 1 on a domain error, 2 on a usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{}", e.render()) } else { write!(err, "{}", e.render()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let _ = match cli.format {
                Format::Human if !o.human.is_empty() => writeln!(out, "{}", o.human),
                Format::Human => Ok(()),
                Format::Structured => writeln!(out, "{}", serde_json::to_string_pretty(&o.data).expect("json")),
            };
            0
        }
        Err(e) => {
            let code = if matches!(e, AppError::Usage(_)) { 2 } else { 1 };
            match cli.format {
                Format::Human => {
                    let _ = writeln!(err, "error: {}: {e}", e.name());
                }
                Format::Structured => {
                    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "error": e.to_json() })).expect("json"));
                }
            }
            code
        }
    }
}
