//! Deterministic sandbox toolchain.
//!
//! Harness quality is encoded as rules over the harness source text:
//! compile rules emit diagnostics, coverage rules mark lines and branches of
//! callgraph methods as hit, and crash rules produce crash reports.
//!
//! Pattern dialect: a pattern is a literal substring of the harness source,
//! unless it starts with `re:`, in which case the rest is a regular
//! expression (Rust `regex` syntax, multi-line mode so `^`/`$` anchor at
//! lines).
//!
//! Each coverage rule states whether its hits happen while recording is on
//! (`"recording": "inside"`, the default: the code runs under the target
//! method) or off (`"outside"`: harness setup code). The adapter turns
//! matched rules into a [`RecordingTrace`] and derives coverage from it, so
//! method-targeted and full-scope numbers differ exactly as they would with
//! a real toggling collector.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CompileResult, Crash, Diagnostic, Ecosystem, FuzzRequest, FuzzResult, Severity};
use crate::agents::HarnessArtifact;
use crate::callgraph::CallFacts;
use crate::coverage::{
    aggregate_full, apply_recording_windows, CoverageScope, EventKind, MethodTotals,
    RecordingTrace, TraceEvent,
};
use crate::error::{self, Error, Result};

const EXECUTIONS_PER_RULE: u64 = 1000;

/// Literal substring or `re:`-prefixed regular expression.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Pattern {
    source: String,
    regex: Option<Regex>,
}

impl Pattern {
    pub fn new(source: &str) -> Result<Self> {
        let regex = match source.strip_prefix("re:") {
            Some(expr) => Some(
                Regex::new(&format!("(?m){expr}"))
                    .map_err(|e| Error::Config(format!("invalid pattern {source:?}: {e}")))?,
            ),
            None => None,
        };
        Ok(Pattern {
            source: source.to_string(),
            regex,
        })
    }

    pub fn is_match(&self, text: &str) -> bool {
        match &self.regex {
            Some(re) => re.is_match(text),
            None => text.contains(&self.source),
        }
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl TryFrom<String> for Pattern {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Pattern::new(&s)
    }
}

impl From<Pattern> for String {
    fn from(p: Pattern) -> String {
        p.source
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Fires when the pattern occurs.
    #[default]
    Present,
    /// Fires when the pattern does not occur.
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileRule {
    pub pattern: Pattern,
    #[serde(default)]
    pub when: MatchMode,
    pub diagnostic: Diagnostic,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recording {
    #[default]
    Inside,
    Outside,
}

/// Which lines/branches of one method a coverage rule hits. Explicit index
/// lists (1-based) and fractions (a prefix of the method) are combined.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverRule {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lines: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRule {
    #[serde(default)]
    pub name: String,
    pub pattern: Pattern,
    #[serde(default)]
    pub when: MatchMode,
    #[serde(default)]
    pub recording: Recording,
    pub covers: Vec<CoverRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrashRule {
    pub pattern: Pattern,
    pub summary: String,
    /// How many times the fuzzer hits this crash in one campaign.
    #[serde(default = "one")]
    pub repeat: u32,
}

fn one() -> u32 {
    1
}

fn default_entrypoint() -> String {
    "fuzzerTestOneInput".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxSpec {
    #[serde(default)]
    pub name: String,
    pub docs: PathBuf,
    pub sources: PathBuf,
    pub facts: PathBuf,
    #[serde(default = "default_entrypoint")]
    pub entrypoint: String,
    /// Line and branch totals per method; coverage is capped at these.
    #[serde(default)]
    pub methods: Vec<MethodTotals>,
    #[serde(default)]
    pub compile_rules: Vec<CompileRule>,
    #[serde(default)]
    pub coverage_rules: Vec<CoverageRule>,
    #[serde(default)]
    pub crash_rules: Vec<CrashRule>,
}

#[derive(Debug, Clone)]
pub struct SandboxAdapter {
    spec: SandboxSpec,
}

/// A sandbox plus the resolved locations of its analysis inputs.
#[derive(Debug, Clone)]
pub struct LoadedSandbox {
    pub adapter: SandboxAdapter,
    pub docs_path: PathBuf,
    pub sources_path: PathBuf,
    pub facts_path: PathBuf,
}

/// Loads a sandbox spec; relative paths resolve against the spec's directory.
pub fn load_sandbox(spec_path: &Path) -> Result<LoadedSandbox> {
    let spec: SandboxSpec = error::read_json(spec_path)?;
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path, what: &str| -> Result<PathBuf> {
        let full = base.join(p);
        if full.exists() {
            Ok(full)
        } else {
            Err(Error::Config(format!(
                "sandbox {}: {what} path {} does not exist",
                spec_path.display(),
                full.display()
            )))
        }
    };
    let docs_path = resolve(&spec.docs, "docs")?;
    let sources_path = resolve(&spec.sources, "sources")?;
    let facts_path = resolve(&spec.facts, "facts")?;
    let facts = CallFacts::load(&facts_path)?;
    for m in &spec.methods {
        if !facts.contains(&m.id) {
            return Err(Error::Config(format!(
                "sandbox method totals name {:?}, which the facts file does not declare",
                m.id
            )));
        }
    }
    Ok(LoadedSandbox {
        adapter: SandboxAdapter::new(spec)?,
        docs_path,
        sources_path,
        facts_path,
    })
}

impl SandboxAdapter {
    pub fn new(spec: SandboxSpec) -> Result<Self> {
        let declared: BTreeSet<&str> = spec.methods.iter().map(|m| m.id.as_str()).collect();
        if declared.len() != spec.methods.len() {
            return Err(Error::Config("sandbox declares a method twice".into()));
        }
        for rule in &spec.coverage_rules {
            for cover in &rule.covers {
                if !declared.contains(cover.id.as_str()) {
                    return Err(Error::Config(format!(
                        "coverage rule {:?} covers undeclared method {:?}",
                        rule.name, cover.id
                    )));
                }
                for f in [cover.line_fraction, cover.branch_fraction]
                    .into_iter()
                    .flatten()
                {
                    if !(0.0..=1.0).contains(&f) {
                        return Err(Error::Config(format!(
                            "coverage rule {:?}: fraction {f} outside [0, 1]",
                            rule.name
                        )));
                    }
                }
            }
        }
        Ok(SandboxAdapter { spec })
    }

    pub fn spec(&self) -> &SandboxSpec {
        &self.spec
    }

    fn fires(pattern: &Pattern, when: MatchMode, source: &str) -> bool {
        pattern.is_match(source) == (when == MatchMode::Present)
    }

    /// Coverage rules that fire for `harness`, in declaration order.
    pub fn matching_coverage_rules(&self, harness: &HarnessArtifact) -> Vec<&CoverageRule> {
        self.spec
            .coverage_rules
            .iter()
            .filter(|r| Self::fires(&r.pattern, r.when, &harness.source))
            .collect()
    }

    /// Synthesises the execution trace of a campaign: rule `i` occupies the
    /// time slot `[10i, 10i + 10)`, with its events at `10i + 1` when they
    /// run under the target method (window `[10i, 10i + 5]`) and at
    /// `10i + 7` otherwise.
    pub fn trace_for(&self, harness: &HarnessArtifact, campaign_seconds: f64) -> RecordingTrace {
        let totals: BTreeMap<&str, &MethodTotals> = self
            .spec
            .methods
            .iter()
            .map(|m| (m.id.as_str(), m))
            .collect();
        let mut events = Vec::new();
        let mut windows = Vec::new();
        for (i, rule) in self
            .matching_coverage_rules(harness)
            .into_iter()
            .enumerate()
        {
            let slot = 10.0 * i as f64;
            let at = match rule.recording {
                Recording::Inside => {
                    windows.push((slot, slot + 5.0));
                    slot + 1.0
                }
                Recording::Outside => slot + 7.0,
            };
            let mut k = 0u32;
            for cover in &rule.covers {
                let t = totals[cover.id.as_str()];
                let hits = [
                    (
                        EventKind::LineHit,
                        selected(&cover.lines, cover.line_fraction, t.lines_total),
                    ),
                    (
                        EventKind::BranchHit,
                        selected(&cover.branches, cover.branch_fraction, t.branches_total),
                    ),
                ];
                for (kind, indices) in hits {
                    for line in indices {
                        events.push(TraceEvent {
                            method: cover.id.clone(),
                            line,
                            kind,
                            timestamp: at + f64::from(k) * 1e-4,
                        });
                        k += 1;
                    }
                }
            }
        }
        RecordingTrace {
            totals: self.spec.methods.clone(),
            events,
            windows,
            campaign_seconds,
        }
    }
}

/// 1-based indices hit by a cover rule, limited to the method's total.
fn selected(explicit: &[u64], fraction: Option<f64>, total: u64) -> BTreeSet<u64> {
    let mut out: BTreeSet<u64> = explicit
        .iter()
        .copied()
        .filter(|&i| i >= 1 && i <= total)
        .collect();
    if let Some(f) = fraction {
        let count = (f * total as f64).ceil() as u64;
        out.extend(1..=count.min(total));
    }
    out
}

impl Ecosystem for SandboxAdapter {
    fn name(&self) -> &str {
        if self.spec.name.is_empty() {
            "sandbox"
        } else {
            &self.spec.name
        }
    }

    fn entrypoint(&self) -> &str {
        &self.spec.entrypoint
    }

    fn compile(&self, harness: &HarnessArtifact) -> Result<CompileResult> {
        let diagnostics: Vec<Diagnostic> = self
            .spec
            .compile_rules
            .iter()
            .filter(|r| Self::fires(&r.pattern, r.when, &harness.source))
            .map(|r| r.diagnostic.clone())
            .collect();
        Ok(CompileResult {
            success: !diagnostics.iter().any(|d| d.severity == Severity::Error),
            diagnostics,
        })
    }

    fn fuzz(&self, harness: &HarnessArtifact, request: &FuzzRequest) -> Result<FuzzResult> {
        let started = Instant::now();
        let campaign_seconds = request.duration.as_secs_f64();
        let trace = self.trace_for(harness, campaign_seconds);
        let coverage = match request.scope {
            CoverageScope::MethodTargeted => apply_recording_windows(&trace)?,
            CoverageScope::Full => aggregate_full(&trace),
        };
        let mut crashes = Vec::new();
        for (i, rule) in self
            .spec
            .crash_rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.pattern.is_match(&harness.source))
        {
            for k in 0..rule.repeat {
                // each hit reports a different faulting input address
                let address = 0x1000 + (i as u64) * 0x100 + u64::from(k) * 0x10;
                let crash = Crash::new(
                    String::new(),
                    format!("{} (input at 0x{address:x})", rule.summary),
                );
                let artifact = format!("crash-{}-{k}", &crash.dedup_key[..12]);
                crashes.push(Crash {
                    artifact_path: artifact,
                    ..crash
                });
            }
        }
        let matched = self.matching_coverage_rules(harness).len() as u64;
        Ok(FuzzResult {
            coverage,
            crashes,
            executions: EXECUTIONS_PER_RULE * (matched + 1),
            wall_seconds: started.elapsed().as_secs_f64(),
            trace: Some(trace),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::HarnessArtifact;
    use std::time::Duration;

    fn spec(json: &str) -> SandboxAdapter {
        SandboxAdapter::new(serde_json::from_str(json).unwrap()).unwrap()
    }

    fn harness(src: &str) -> HarnessArtifact {
        HarnessArtifact::new(src, vec![])
    }

    const SPEC: &str = r#"{
        "docs": "d", "sources": "s", "facts": "f",
        "methods": [{"id": "m", "lines_total": 10, "branches_total": 4},
                    {"id": "n", "lines_total": 3, "branches_total": 0}],
        "compile_rules": [
            {"pattern": "fuzzerTestOneInput", "when": "absent",
             "diagnostic": {"file": "H.tl", "line": 1, "message": "missing entrypoint", "severity": "error"}},
            {"pattern": "re:^\\s*import legacy", "diagnostic": {"file": "H.tl", "line": 2, "message": "deprecated", "severity": "warning"}}
        ],
        "coverage_rules": [
            {"name": "a", "pattern": "VARIANT_A", "covers": [{"id": "m", "lines": [1, 2, 3, 4], "branches": [1]}]},
            {"name": "b", "pattern": "VARIANT_B", "covers": [{"id": "m", "lines": [3, 4, 5, 6, 99], "line_fraction": 0.1}, {"id": "n", "line_fraction": 1.0}]},
            {"name": "setup", "pattern": "SETUP", "recording": "outside", "covers": [{"id": "n", "lines": [1]}]}
        ],
        "crash_rules": [{"pattern": "BOOM", "summary": "ArithmeticException in m", "repeat": 3}]
    }"#;

    fn fuzz(adapter: &SandboxAdapter, src: &str, scope: CoverageScope) -> FuzzResult {
        let mut req = FuzzRequest::new(Duration::from_secs(5));
        req.scope = scope;
        adapter.fuzz(&harness(src), &req).unwrap()
    }

    #[test]
    fn compile_rules_fire_on_presence_and_absence() {
        let a = spec(SPEC);
        let r = a.compile(&harness("void main() {}")).unwrap();
        assert!(!r.success);
        assert_eq!(r.diagnostics[0].message, "missing entrypoint");
        let r = a.compile(&harness("void fuzzerTestOneInput() {}")).unwrap();
        assert!(r.success && r.diagnostics.is_empty());
        let r = a
            .compile(&harness("  import legacy;\nvoid fuzzerTestOneInput() {}"))
            .unwrap();
        assert!(r.success);
        assert_eq!(r.diagnostics.len(), 1);
    }

    #[test]
    fn union_of_variants_exceeds_either() {
        let a = spec(SPEC);
        let lines = |src: &str| {
            let r = fuzz(&a, src, CoverageScope::MethodTargeted);
            r.coverage
                .methods
                .iter()
                .map(|m| m.lines_covered)
                .sum::<u64>()
        };
        // by hand: A hits m{1,2,3,4}; B hits m{1,3,4,5,6} and n{1,2,3}
        assert_eq!(lines("VARIANT_A"), 4);
        assert_eq!(lines("VARIANT_B"), 8);
        assert_eq!(lines("VARIANT_A VARIANT_B"), 9);
    }

    #[test]
    fn setup_only_harness_has_no_targeted_coverage() {
        let a = spec(SPEC);
        let targeted = fuzz(&a, "SETUP", CoverageScope::MethodTargeted);
        assert!(targeted
            .coverage
            .methods
            .iter()
            .all(|m| m.lines_covered == 0));
        let full = fuzz(&a, "SETUP", CoverageScope::Full);
        assert_eq!(full.coverage.method("n").unwrap().lines_covered, 1);
    }

    #[test]
    fn crashes_share_a_dedup_key() {
        let a = spec(SPEC);
        let r = fuzz(&a, "BOOM", CoverageScope::MethodTargeted);
        assert_eq!(r.crashes.len(), 3);
        assert_eq!(r.unique_crashes().len(), 1);
        assert_ne!(r.crashes[0].summary, r.crashes[1].summary);
    }

    #[test]
    fn fuzzing_is_deterministic() {
        let a = spec(SPEC);
        let mut x = fuzz(&a, "VARIANT_A BOOM SETUP", CoverageScope::MethodTargeted);
        let mut y = fuzz(&a, "VARIANT_A BOOM SETUP", CoverageScope::MethodTargeted);
        x.wall_seconds = 0.0;
        y.wall_seconds = 0.0;
        assert_eq!(
            serde_json::to_string(&x).unwrap(),
            serde_json::to_string(&y).unwrap()
        );
    }

    #[test]
    fn empty_rules_compile_and_cover_nothing() {
        let a = spec(
            r#"{"docs": "d", "sources": "s", "facts": "f", "methods": [{"id": "m", "lines_total": 2, "branches_total": 0}]}"#,
        );
        assert!(a.compile(&harness("anything")).unwrap().success);
        let r = fuzz(&a, "anything", CoverageScope::Full);
        assert!(r.coverage.methods.iter().all(|m| m.lines_covered == 0));
        assert!(r.crashes.is_empty());
    }

    #[test]
    fn undeclared_cover_target_is_config_error() {
        let bad: SandboxSpec = serde_json::from_str(
            r#"{"docs": "d", "sources": "s", "facts": "f", "coverage_rules": [{"pattern": "x", "covers": [{"id": "ghost"}]}]}"#,
        )
        .unwrap();
        assert_eq!(SandboxAdapter::new(bad).unwrap_err().code(), "CONFIG");
        assert!(serde_json::from_str::<SandboxSpec>(
            r#"{"docs": "d", "sources": "s", "facts": "f", "crash_rules": [{"pattern": "re:(", "summary": "x"}]}"#
        )
        .is_err());
    }
}
