//! Compile/fuzz adapters for a target toolchain.
//!
//! [`SandboxAdapter`] is a deterministic, rule-driven stand-in used for
//! offline runs; [`ShellAdapter`] drives real tools through configured
//! commands. Both feed the orchestrator through the [`Ecosystem`] trait.

mod sandbox;
mod shell;

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use sandbox::{
    load_sandbox, CompileRule, CoverRule, CoverageRule, CrashRule, LoadedSandbox, MatchMode,
    Pattern, Recording, SandboxAdapter, SandboxSpec,
};
pub use shell::{ShellAdapter, ShellConfig};

use crate::agents::HarnessArtifact;
use crate::coverage::{CoverageReport, CoverageScope, RecordingTrace};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Note,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u64,
    pub message: String,
    pub severity: Severity,
}

impl Diagnostic {
    pub fn render(&self) -> String {
        let severity = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Note => "note",
        };
        format!("{}:{}: {severity}: {}", self.file, self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileResult {
    pub success: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl CompileResult {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crash {
    pub artifact_path: String,
    pub dedup_key: String,
    pub summary: String,
}

impl Crash {
    pub fn new(artifact_path: impl Into<String>, summary: impl Into<String>) -> Self {
        let summary = summary.into();
        Crash {
            artifact_path: artifact_path.into(),
            dedup_key: crash_dedup_key(&summary),
            summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzResult {
    pub coverage: CoverageReport,
    pub crashes: Vec<Crash>,
    pub executions: u64,
    pub wall_seconds: f64,
    /// Raw recording trace, when the adapter has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<RecordingTrace>,
}

impl FuzzResult {
    pub fn unique_crashes(&self) -> Vec<&Crash> {
        unique_crashes(&self.crashes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzRequest {
    pub duration: Duration,
    pub seed_corpus: Option<PathBuf>,
    pub scope: CoverageScope,
}

impl FuzzRequest {
    pub fn new(duration: Duration) -> Self {
        FuzzRequest {
            duration,
            seed_corpus: None,
            scope: CoverageScope::MethodTargeted,
        }
    }
}

pub trait Ecosystem: Send + Sync {
    fn name(&self) -> &str;

    /// Name of the fuzz entrypoint function harnesses must define.
    fn entrypoint(&self) -> &str;

    fn compile(&self, harness: &HarnessArtifact) -> Result<CompileResult>;

    fn fuzz(&self, harness: &HarnessArtifact, request: &FuzzRequest) -> Result<FuzzResult>;
}

/// Digest of a crash summary with addresses and spacing normalised, so
/// repeated hits of one bug share a key.
pub fn crash_dedup_key(summary: &str) -> String {
    static HEX: OnceLock<Regex> = OnceLock::new();
    let hex = HEX.get_or_init(|| Regex::new(r"0[xX][0-9a-fA-F]+").unwrap());
    let normalized = hex.replace_all(summary, "0x?");
    let normalized = normalized.split_whitespace().collect::<Vec<_>>().join(" ");
    hex::encode(Sha256::digest(normalized.as_bytes()))
}

/// First crash per dedup key, in input order.
pub fn unique_crashes(crashes: &[Crash]) -> Vec<&Crash> {
    let mut seen = std::collections::BTreeSet::new();
    crashes
        .iter()
        .filter(|c| seen.insert(c.dedup_key.as_str()))
        .collect()
}
