//! The generation workflow as an explicit state machine.
//!
//! ```text
//! init -> research -> generate -> compile <-> patch -> fuzz -> analyze
//!                                    ^                            |
//!                                    +---------- refine <---------+
//! ```
//!
//! Every run leaves a directory behind, whatever its outcome:
//!
//! ```text
//! <output_dir>/<timestamp>-<target>/
//!   manifest.json
//!   harness/v<N>.src
//!   transcripts/<role>-r<N>.json
//!   coverage/r<N>.json
//! ```

mod phases;
mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use phases::{check_transitions, Phase};
pub use render::{render_annotated_view, render_view_diff};

use crate::agents::{
    build_research_context, run_react, AgentProfile, AgentRun, AgentStatus, AgentTranscript,
    Decision, HarnessArtifact, ParsedOutput, SeedContext, TerminationDecision,
};
use crate::callgraph::{CallFacts, CallGraph, DEFAULT_DEPTH_LIMIT};
use crate::code_index::CodeIndex;
use crate::coverage::{
    coverage_percent, diff_views, merge_with_callgraph, AnnotatedCoverageView, CoverageReport,
    CoverageScope, Metric,
};
use crate::docs_index::{signature_key, DocsIndex};
use crate::ecosystem::{
    unique_crashes, CompileResult, Crash, Diagnostic, Ecosystem, FuzzRequest, FuzzResult, Severity,
};
use crate::error::{Error, Result};
use crate::model::{summarize_usage, ModelBackend, Rates, UsageLedger, UsageTable};
use crate::toolbus::{register_default_tools, AgentRole, ToolRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub library_name: String,
    #[serde(default)]
    pub library_version: String,
    /// Fully qualified class, e.g. `toylib.cli.Parser`.
    pub target_class: String,
    /// Method signature within the class, e.g. `parse(Options, String[])`.
    pub target_method: String,
    pub docs: PathBuf,
    pub sources: PathBuf,
    pub facts: PathBuf,
}

impl TargetSpec {
    /// Identifier shared by the docs, code and callgraph indexes.
    pub fn method_id(&self) -> String {
        format!(
            "{}.{}",
            self.target_class,
            signature_key(&self.target_method)
        )
    }

    pub fn signature(&self) -> Result<(String, Vec<String>)> {
        parse_signature(&self.target_method)
    }
}

/// Splits `name(T1, T2<A, B>)` into the name and parameter types.
pub fn parse_signature(signature: &str) -> Result<(String, Vec<String>)> {
    static SIG: OnceLock<Regex> = OnceLock::new();
    let re = SIG.get_or_init(|| Regex::new(r"^\s*([A-Za-z_$][\w$]*)\s*\((.*)\)\s*$").unwrap());
    let caps = re.captures(signature).ok_or_else(|| {
        Error::Config(format!(
            "target_method {signature:?} is not of the form name(Type, ...)"
        ))
    })?;
    let mut params = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in caps[2].chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            ',' if depth == 0 => {
                params.push(current.trim().to_string());
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    if !current.trim().is_empty() || !params.is_empty() {
        params.push(current.trim().to_string());
    }
    if depth != 0 || params.iter().any(String::is_empty) {
        return Err(Error::Config(format!(
            "target_method {signature:?} has a malformed parameter list"
        )));
    }
    Ok((caps[1].to_string(), params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub depth_limit: u32,
    pub max_rounds: u32,
    pub max_patch_rounds: u32,
    pub max_iterations: BTreeMap<AgentRole, u32>,
    pub wall_budget: Duration,
    pub fuzz_duration: Duration,
    pub scope: CoverageScope,
    /// Passed to every campaign; `None` fuzzes from an empty corpus.
    pub seed_corpus: Option<PathBuf>,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            depth_limit: DEFAULT_DEPTH_LIMIT,
            max_rounds: 5,
            max_patch_rounds: 3,
            max_iterations: AgentRole::ALL
                .iter()
                .map(|&r| (r, crate::agents::default_max_iterations(r)))
                .collect(),
            wall_budget: Duration::from_secs(3600),
            fuzz_duration: Duration::from_secs(60),
            scope: CoverageScope::MethodTargeted,
            seed_corpus: None,
        }
    }
}

/// Everything a run needs, already loaded.
pub struct Workflow {
    pub target: TargetSpec,
    pub budgets: Budgets,
    pub docs: Arc<DocsIndex>,
    pub code: Arc<CodeIndex>,
    pub facts: CallFacts,
    pub ecosystem: Box<dyn Ecosystem>,
    pub backend: Box<dyn ModelBackend>,
    pub rates: Rates,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Converged,
    BudgetExhausted,
    CompileFailed,
    ModelFailed,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Converged => "converged",
            Outcome::BudgetExhausted => "budget_exhausted",
            Outcome::CompileFailed => "compile_failed",
            Outcome::ModelFailed => "model_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub code: String,
    pub message: String,
}

impl From<&Error> for ErrorSummary {
    fn from(e: &Error) -> Self {
        ErrorSummary {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

/// One fuzzing campaign and the analysis that followed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: u32,
    pub line_pct: f64,
    pub branch_pct: f64,
    /// `stop`, `continue` or `model_failed`.
    pub decision: String,
    pub harness_hash: String,
    pub crash_count: u64,
    pub unique_crashes: u64,
    pub executions: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fuzz_timeout: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessVersion {
    pub version: u32,
    pub round: u32,
    pub author: AgentRole,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniqueCrash {
    pub dedup_key: String,
    pub summary: String,
    pub first_round: u32,
    pub occurrences: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub target: TargetSpec,
    pub ecosystem: String,
    pub outcome: Outcome,
    pub final_phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorSummary>,
    pub rounds: Vec<RoundRow>,
    pub crashes: Vec<UniqueCrash>,
    pub harness_versions: Vec<HarnessVersion>,
    pub accounting: UsageTable,
    pub phases: Vec<Phase>,
    /// Wall-clock seconds spent per phase.
    pub timings: BTreeMap<String, f64>,
    pub started_at: String,
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> Result<Self> {
        crate::error::read_json(&run_dir.join("manifest.json"))
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub manifest: RunManifest,
    pub run_dir: PathBuf,
}

/// Why a run stopped early.
struct Halt {
    outcome: Outcome,
    phase: Phase,
    error: Option<ErrorSummary>,
}

impl Halt {
    fn done(outcome: Outcome) -> Self {
        Halt {
            outcome,
            phase: Phase::Done,
            error: None,
        }
    }

    fn failed(outcome: Outcome, error: Option<&Error>) -> Self {
        Halt {
            outcome,
            phase: Phase::Failed,
            error: error.map(ErrorSummary::from),
        }
    }

    /// Model and output-format failures are the model's; anything else went
    /// wrong in the toolchain.
    fn from_error(e: &Error) -> Self {
        let outcome = if e.is_model_error()
            || matches!(e, Error::Parse { .. } | Error::NoCode | Error::EmptyCode)
        {
            Outcome::ModelFailed
        } else {
            Outcome::CompileFailed
        };
        Halt::failed(outcome, Some(e))
    }
}

type Step<T> = std::result::Result<T, Halt>;

/// Compiles `harness`, handing error diagnostics to `patch` for a fixed
/// version, at most `max_patch_rounds` times. Returns the compiling harness
/// and the number of patch rounds used.
pub fn compile_patch_loop(
    harness: HarnessArtifact,
    ecosystem: &dyn Ecosystem,
    max_patch_rounds: u32,
    mut patch: impl FnMut(&HarnessArtifact, &CompileResult) -> Result<HarnessArtifact>,
) -> Result<(HarnessArtifact, u32)> {
    let mut current = harness;
    let mut rounds = 0;
    loop {
        let result = checked_compile(ecosystem, &current)?;
        if result.success {
            return Ok((current, rounds));
        }
        if rounds == max_patch_rounds {
            return Err(Error::CompileFailed(result.errors().cloned().collect()));
        }
        rounds += 1;
        current = patch(&current, &result)?;
    }
}

/// Adapter compile plus the entrypoint convention check.
fn checked_compile(ecosystem: &dyn Ecosystem, harness: &HarnessArtifact) -> Result<CompileResult> {
    let mut result = ecosystem.compile(harness)?;
    if !harness.source.contains(ecosystem.entrypoint()) {
        result.diagnostics.push(Diagnostic {
            file: "harness".into(),
            line: 0,
            message: format!(
                "harness does not define the fuzz entrypoint {}",
                ecosystem.entrypoint()
            ),
            severity: Severity::Error,
        });
        result.success = false;
    }
    Ok(result)
}

fn fenced(source: &str) -> String {
    format!("```\n{}\n```", source.trim_end())
}

struct Run<'a> {
    wf: &'a Workflow,
    method_id: String,
    graph: Arc<CallGraph>,
    registry: ToolRegistry,
    run_dir: PathBuf,
    started: Instant,
    phase_started: Instant,
    phases: Vec<Phase>,
    timings: BTreeMap<String, f64>,
    ledger: UsageLedger,
    transcripts: BTreeMap<(AgentRole, u32), Vec<AgentTranscript>>,
    versions: Vec<HarnessVersion>,
    seen_hashes: BTreeSet<String>,
    rows: Vec<RoundRow>,
    views: Vec<AnnotatedCoverageView>,
    crashes: Vec<(u32, Crash)>,
    research: String,
}

impl<'a> Run<'a> {
    fn current(&self) -> Phase {
        *self.phases.last().expect("run starts in init")
    }

    fn close_phase_timer(&mut self) {
        let elapsed = self.phase_started.elapsed().as_secs_f64();
        *self
            .timings
            .entry(self.current().as_str().to_string())
            .or_default() += elapsed;
        self.phase_started = Instant::now();
    }

    fn enter(&mut self, next: Phase) -> Step<()> {
        if self.started.elapsed() > self.wf.budgets.wall_budget {
            return Err(Halt::failed(
                Outcome::BudgetExhausted,
                Some(&Error::Config(format!(
                    "wall-clock budget of {}s exhausted before {next}",
                    self.wf.budgets.wall_budget.as_secs()
                ))),
            ));
        }
        self.transition(next);
        Ok(())
    }

    fn transition(&mut self, next: Phase) {
        assert!(
            self.current().can_enter(next),
            "illegal transition {} -> {next}",
            self.current()
        );
        self.close_phase_timer();
        log::info!("phase {} -> {next}", self.current());
        self.phases.push(next);
    }

    fn profile(&self, role: AgentRole) -> Step<AgentProfile> {
        let vars = BTreeMap::from([
            ("library", self.wf.target.library_name.clone()),
            ("target_method", self.method_id.clone()),
            ("entrypoint", self.wf.ecosystem.entrypoint().to_string()),
            ("depth_limit", self.graph.depth_limit().to_string()),
        ]);
        let max = self
            .wf
            .budgets
            .max_iterations
            .get(&role)
            .copied()
            .unwrap_or_else(|| crate::agents::default_max_iterations(role));
        AgentProfile::new(role, &vars)
            .and_then(|p| p.with_max_iterations(max))
            .map_err(|e| Halt::from_error(&e))
    }

    /// Runs one agent and books its activity under `round`.
    fn agent(&mut self, role: AgentRole, round: u32, seed: &SeedContext) -> Step<ParsedOutput> {
        let profile = self.profile(role)?;
        let run: AgentRun =
            match run_react(&profile, seed, &self.registry, self.wf.backend.as_ref()) {
                Ok(run) => run,
                Err(e) => {
                    self.ledger.touch(role, round);
                    return Err(Halt::from_error(&e));
                }
            };
        let t = &run.transcript;
        self.ledger.record(
            role,
            round,
            t.iterations.into(),
            t.tool_call_count.into(),
            t.usage,
        );
        self.transcripts
            .entry((role, round))
            .or_default()
            .push(run.transcript.clone());
        match (run.transcript.status, run.output) {
            (AgentStatus::Completed, Some(output)) => Ok(output),
            _ => Err(Halt::failed(
                Outcome::ModelFailed,
                Some(&Error::parse(
                    format!("{role} output"),
                    format!(
                        "no parseable answer within {} iterations",
                        profile.max_iterations
                    ),
                )),
            )),
        }
    }

    fn harness_from(output: ParsedOutput) -> HarnessArtifact {
        match output {
            ParsedOutput::Harness(h) => h,
            other => unreachable!("harness parser produced {other:?}"),
        }
    }

    fn save_version(
        &mut self,
        harness: &HarnessArtifact,
        round: u32,
        author: AgentRole,
    ) -> Step<()> {
        let version = self.versions.len() as u32 + 1;
        let path = self.run_dir.join("harness").join(format!("v{version}.src"));
        fs::write(&path, &harness.source).map_err(|e| Halt::from_error(&Error::io(&path, e)))?;
        self.versions.push(HarnessVersion {
            version,
            round,
            author,
            hash: harness.normalized_hash.clone(),
        });
        self.seen_hashes.insert(harness.normalized_hash.clone());
        Ok(())
    }

    fn research(&mut self) -> Step<()> {
        self.enter(Phase::Research)?;
        let seed = build_research_context(&self.method_id, &self.wf.docs, &self.wf.code)
            .map_err(|e| Halt::from_error(&e))?;
        match self.agent(AgentRole::Research, 0, &seed)? {
            ParsedOutput::Research(report) => self.research = report.text,
            other => unreachable!("research parser produced {other:?}"),
        }
        Ok(())
    }

    fn generate(&mut self) -> Step<HarnessArtifact> {
        self.enter(Phase::Generate)?;
        let mut seed = SeedContext::default();
        seed.push("Target", &self.method_id)
            .push("Entrypoint", self.wf.ecosystem.entrypoint())
            .push("Research Report", &self.research);
        let harness = Self::harness_from(self.agent(AgentRole::Generation, 0, &seed)?);
        self.save_version(&harness, 0, AgentRole::Generation)?;
        Ok(harness)
    }

    fn compile(&mut self, harness: HarnessArtifact, round: u32) -> Step<HarnessArtifact> {
        self.enter(Phase::Compile)?;
        self.ledger.touch(AgentRole::Patching, round);
        let wf = self.wf;
        let mut halted = None;
        let outcome = compile_patch_loop(
            harness,
            wf.ecosystem.as_ref(),
            wf.budgets.max_patch_rounds,
            |current, result| {
                self.patch(current, result, round).map_err(|halt| {
                    halted = Some(halt);
                    Error::Backend("patch round halted the run".into())
                })
            },
        );
        match outcome {
            Ok((harness, _)) => Ok(harness),
            Err(e) => Err(halted.take().unwrap_or_else(|| Halt::from_error(&e))),
        }
    }

    fn patch(
        &mut self,
        current: &HarnessArtifact,
        result: &CompileResult,
        round: u32,
    ) -> Step<HarnessArtifact> {
        self.enter(Phase::Patch)?;
        let diagnostics: Vec<String> = result.diagnostics.iter().map(Diagnostic::render).collect();
        let mut seed = SeedContext::default();
        seed.push("Harness", fenced(&current.source))
            .push("Diagnostics", diagnostics.join("\n"));
        let patched = Self::harness_from(self.agent(AgentRole::Patching, round, &seed)?);
        self.save_version(&patched, round, AgentRole::Patching)?;
        self.enter(Phase::Compile)?;
        Ok(patched)
    }

    fn fuzz(&mut self, harness: &HarnessArtifact, round: u32) -> Step<()> {
        self.enter(Phase::Fuzz)?;
        let request = FuzzRequest {
            duration: self.wf.budgets.fuzz_duration,
            seed_corpus: self.wf.budgets.seed_corpus.clone(),
            scope: self.wf.budgets.scope,
        };
        let (result, timed_out) = match self.wf.ecosystem.fuzz(harness, &request) {
            Ok(r) => (r, false),
            Err(Error::FuzzTimeout { partial }) => {
                log::warn!("round {round}: fuzzing timed out; keeping partial results");
                let r = partial.map(|b| *b).unwrap_or_else(|| FuzzResult {
                    coverage: CoverageReport::empty(self.wf.budgets.scope),
                    crashes: Vec::new(),
                    executions: 0,
                    wall_seconds: request.duration.as_secs_f64(),
                    trace: None,
                });
                (r, true)
            }
            Err(e) => return Err(Halt::from_error(&e)),
        };
        let path = self.run_dir.join("coverage").join(format!("r{round}.json"));
        let json = serde_json::to_string_pretty(&result.coverage).expect("coverage serializes");
        fs::write(&path, json).map_err(|e| Halt::from_error(&Error::io(&path, e)))?;

        let view = merge_with_callgraph(&result.coverage, &self.graph);
        for c in &result.crashes {
            self.crashes.push((round, c.clone()));
        }
        self.rows.push(RoundRow {
            round,
            line_pct: coverage_percent(&view, Metric::Line).value,
            branch_pct: coverage_percent(&view, Metric::Branch).value,
            decision: String::new(),
            harness_hash: harness.normalized_hash.clone(),
            crash_count: result.crashes.len() as u64,
            unique_crashes: unique_crashes(&result.crashes).len() as u64,
            executions: result.executions,
            fuzz_timeout: timed_out,
        });
        self.views.push(view);
        Ok(())
    }

    fn analyze(&mut self, harness: &HarnessArtifact, round: u32) -> Step<TerminationDecision> {
        self.enter(Phase::Analyze)?;
        let view = self.views.last().expect("fuzz produced a view");
        let mut seed = SeedContext::default();
        seed.push("Target", &self.method_id)
            .push("Coverage", render_annotated_view(view));
        if self.views.len() > 1 {
            let prev = &self.views[self.views.len() - 2];
            if let Ok(diff) = diff_views(prev, view) {
                seed.push("Change Since Previous Round", render_view_diff(&diff));
            }
        }
        seed.push("Harness", fenced(&harness.source));
        let result = self.agent(AgentRole::CoverageAnalysis, round, &seed);
        let row = self.rows.last_mut().expect("fuzz produced a row");
        match result {
            Ok(ParsedOutput::Decision(d)) => {
                row.decision = d.decision.as_str().to_string();
                Ok(d)
            }
            Ok(other) => unreachable!("decision parser produced {other:?}"),
            Err(halt) => {
                row.decision = Outcome::ModelFailed.as_str().to_string();
                Err(halt)
            }
        }
    }

    fn refine(
        &mut self,
        harness: &HarnessArtifact,
        decision: &TerminationDecision,
        round: u32,
    ) -> Step<HarnessArtifact> {
        self.enter(Phase::Refine)?;
        let view = self.views.last().expect("analysis follows fuzzing");
        let mut seed = SeedContext::default();
        seed.push("Target", &self.method_id)
            .push("Harness", fenced(&harness.source))
            .push("Priority Methods", decision.priority_methods.join("\n"))
            .push("Strategy", &decision.strategy)
            .push("Rationale", &decision.rationale)
            .push("Coverage", render_annotated_view(view));
        let next = Self::harness_from(self.agent(AgentRole::Refinement, round, &seed)?);
        if self.seen_hashes.contains(&next.normalized_hash) {
            log::info!("round {round}: refined harness repeats an earlier version");
            return Err(Halt::done(Outcome::Converged));
        }
        self.save_version(&next, round, AgentRole::Refinement)?;
        Ok(next)
    }

    fn drive(&mut self) -> Step<Outcome> {
        self.research()?;
        let mut harness = self.generate()?;
        let mut round = 0;
        loop {
            harness = self.compile(harness, round)?;
            self.fuzz(&harness, round)?;
            let decision = self.analyze(&harness, round)?;
            if decision.decision == Decision::Stop {
                return Ok(Outcome::Success);
            }
            if round == self.wf.budgets.max_rounds {
                return Err(Halt::done(Outcome::BudgetExhausted));
            }
            round += 1;
            harness = self.refine(&harness, &decision, round)?;
        }
    }

    fn unique_crash_table(&self) -> Vec<UniqueCrash> {
        let mut table: Vec<UniqueCrash> = Vec::new();
        for (round, crash) in &self.crashes {
            match table.iter_mut().find(|u| u.dedup_key == crash.dedup_key) {
                Some(u) => u.occurrences += 1,
                None => table.push(UniqueCrash {
                    dedup_key: crash.dedup_key.clone(),
                    summary: crash.summary.clone(),
                    first_round: *round,
                    occurrences: 1,
                }),
            }
        }
        table
    }

    fn write_outputs(&self, manifest: &RunManifest) -> Result<()> {
        for ((role, round), transcripts) in &self.transcripts {
            let path = self
                .run_dir
                .join("transcripts")
                .join(format!("{}-r{round}.json", role.as_str().to_lowercase()));
            let json = serde_json::to_string_pretty(transcripts).expect("transcripts serialize");
            fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        }
        let path = self.run_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(manifest).expect("manifest serializes") + "\n";
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect();
    s.split('-')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("-")
}

fn create_run_dir(output_dir: &Path, target: &TargetSpec) -> Result<(PathBuf, String)> {
    let now = chrono::Utc::now();
    let stamp = now.format("%Y%m%dT%H%M%S%3fZ").to_string();
    let name = target
        .signature()
        .map(|(n, _)| n)
        .unwrap_or_else(|_| target.target_method.clone());
    let base = format!(
        "{stamp}-{}",
        sanitize(&format!("{}-{name}", target.library_name))
    );
    let mut dir = output_dir.join(&base);
    let mut n = 1;
    while dir.exists() {
        n += 1;
        dir = output_dir.join(format!("{base}-{n}"));
    }
    for sub in ["harness", "transcripts", "coverage"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    Ok((dir, now.to_rfc3339()))
}

/// Executes the full workflow and writes the run directory. Precondition
/// failures (unknown target, unusable callgraph) are returned as errors
/// before anything is written; every later failure is recorded in the
/// manifest instead.
pub fn run_workflow(wf: &Workflow) -> Result<RunResult> {
    wf.target.signature()?;
    let method_id = wf.target.method_id();
    build_research_context(&method_id, &wf.docs, &wf.code)?;
    let graph = Arc::new(CallGraph::build(
        &wf.facts,
        &method_id,
        wf.budgets.depth_limit,
    )?);
    let registry = register_default_tools(wf.docs.clone(), wf.code.clone(), graph.clone())?;
    let (run_dir, started_at) = create_run_dir(&wf.output_dir, &wf.target)?;

    let mut run = Run {
        wf,
        method_id,
        graph,
        registry,
        run_dir,
        started: Instant::now(),
        phase_started: Instant::now(),
        phases: vec![Phase::Init],
        timings: BTreeMap::new(),
        ledger: UsageLedger::new(wf.rates),
        transcripts: BTreeMap::new(),
        versions: Vec::new(),
        seen_hashes: BTreeSet::new(),
        rows: Vec::new(),
        views: Vec::new(),
        crashes: Vec::new(),
        research: String::new(),
    };
    let (outcome, final_phase, error) = match run.drive() {
        Ok(outcome) => (outcome, Phase::Done, None),
        Err(halt) => (halt.outcome, halt.phase, halt.error),
    };
    run.transition(final_phase);
    run.close_phase_timer();
    debug_assert!(check_transitions(&run.phases).is_ok());

    let manifest = RunManifest {
        target: wf.target.clone(),
        ecosystem: wf.ecosystem.name().to_string(),
        outcome,
        final_phase,
        error,
        rounds: run.rows.clone(),
        crashes: run.unique_crash_table(),
        harness_versions: run.versions.clone(),
        accounting: summarize_usage(&run.ledger),
        phases: run.phases.clone(),
        timings: run.timings.clone(),
        started_at,
    };
    run.write_outputs(&manifest)?;
    Ok(RunResult {
        manifest,
        run_dir: run.run_dir,
    })
}
