//! Run configuration: one JSON file plus `--set key=value` overrides.
//!
//! ```json
//! {
//!   "target": {"library_name": "toylib", "target_class": "toylib.cli.Parser",
//!              "target_method": "parse(Options, String[])"},
//!   "model": {"scripted": {"script": "script.json"}, "rate_in": 3e-6, "rate_out": 1.5e-5},
//!   "budgets": {"max_rounds": 5, "fuzz_seconds": 60},
//!   "adapter": {"sandbox": {"spec": "sandbox.json"}},
//!   "output_dir": "runs"
//! }
//! ```
//!
//! Relative paths resolve against the directory holding the config file.
//! With a sandbox adapter the target's `docs`, `sources` and `facts` default
//! to the ones named by the sandbox spec.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::Value;

use crate::agents::default_max_iterations;
use crate::callgraph::CallFacts;
use crate::code_index::CodeIndex;
use crate::coverage::CoverageScope;
use crate::docs_index::DocsIndex;
use crate::ecosystem::{load_sandbox, Ecosystem, ShellAdapter, ShellConfig};
use crate::error::{Error, Result};
use crate::model::{HttpBackend, HttpConfig, ModelBackend, Rates, RetryPolicy, ScriptedBackend};
use crate::orchestrator::{parse_signature, Budgets, TargetSpec, Workflow};
use crate::toolbus::AgentRole;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub library_name: Option<String>,
    #[serde(default)]
    pub library_version: String,
    pub target_class: Option<String>,
    pub target_method: Option<String>,
    pub docs: Option<PathBuf>,
    pub sources: Option<PathBuf>,
    pub facts: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedConfig {
    pub script: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpModelConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    #[serde(default = "default_http_timeout")]
    pub timeout_seconds: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_http_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    RetryPolicy::default().retries
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub scripted: Option<ScriptedConfig>,
    pub http: Option<HttpModelConfig>,
    #[serde(default)]
    pub rate_in: f64,
    #[serde(default)]
    pub rate_out: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetsConfig {
    pub depth_limit: u32,
    pub max_rounds: u32,
    pub max_patch_rounds: u32,
    /// Per-role ReAct iteration caps keyed by role code (`RSH`, `GEN`, ...).
    pub max_iterations: BTreeMap<String, u32>,
    pub wall_budget_seconds: u64,
    pub fuzz_seconds: u64,
    pub scope: CoverageScope,
    pub seed_corpus: Option<PathBuf>,
}

impl Default for BudgetsConfig {
    fn default() -> Self {
        let b = Budgets::default();
        BudgetsConfig {
            depth_limit: b.depth_limit,
            max_rounds: b.max_rounds,
            max_patch_rounds: b.max_patch_rounds,
            max_iterations: BTreeMap::new(),
            wall_budget_seconds: b.wall_budget.as_secs(),
            fuzz_seconds: b.fuzz_duration.as_secs(),
            scope: b.scope,
            seed_corpus: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandboxConfig {
    pub spec: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterConfig {
    pub sandbox: Option<SandboxConfig>,
    pub shell: Option<ShellConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub budgets: BudgetsConfig,
    #[serde(default)]
    pub adapter: AdapterConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Applies one `key.path=value` override. The value is read as JSON when it
/// parses as JSON and as a plain string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        Error::BadArgs(format!(
            "override {assignment:?} is not of the form key=value"
        ))
    })?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::BadArgs(format!(
            "override {assignment:?} has an empty key segment"
        )));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            _ => {
                return Err(Error::BadArgs(format!(
                    "override {key:?}: {} is not an object",
                    segments[..i].join(".")
                )))
            }
        };
        if i + 1 == segments.len() {
            obj.insert(seg.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(seg.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("key has at least one segment")
}

impl Config {
    /// Reads the config file and applies the overrides in order.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| {
            Error::parse(
                format!("{}:{}:{}", path.display(), e.line(), e.column()),
                e.to_string(),
            )
        })?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut config: Config = serde_path_to_error::deserialize(value).map_err(|e| {
            Error::parse(
                format!("{}: {}", path.display(), e.path()),
                e.inner().to_string(),
            )
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if config.base_dir.as_os_str().is_empty() {
            config.base_dir = PathBuf::from(".");
        }
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    /// Every problem with the config, one message per violation.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let t = &self.target;
        for (field, value) in [
            ("library_name", &t.library_name),
            ("target_class", &t.target_class),
            ("target_method", &t.target_method),
        ] {
            match value {
                None => v.push(format!("target.{field}: missing")),
                Some(s) if s.trim().is_empty() => v.push(format!("target.{field}: empty")),
                Some(_) => {}
            }
        }
        if let Some(m) = &t.target_method {
            if !m.trim().is_empty() {
                if let Err(e) = parse_signature(m) {
                    v.push(format!("target.target_method: {e}"));
                }
            }
        }

        let m = &self.model;
        match (&m.scripted, &m.http) {
            (Some(_), Some(_)) => {
                v.push("model: both scripted and http are configured; choose one".into())
            }
            (None, None) => {
                v.push("model: no backend configured; set model.scripted or model.http".into())
            }
            (Some(s), None) => self.check_file(&mut v, "model.scripted.script", &s.script),
            (None, Some(h)) => {
                if h.endpoint.trim().is_empty() {
                    v.push("model.http.endpoint: empty".into());
                }
                if h.timeout_seconds == 0 {
                    v.push("model.http.timeout_seconds: must be positive".into());
                }
            }
        }
        for (field, rate) in [("rate_in", m.rate_in), ("rate_out", m.rate_out)] {
            if !(rate.is_finite() && rate >= 0.0) {
                v.push(format!("model.{field}: must be a non-negative number"));
            }
        }

        let b = &self.budgets;
        for (field, value) in [
            ("depth_limit", u64::from(b.depth_limit)),
            ("max_rounds", u64::from(b.max_rounds)),
            ("max_patch_rounds", u64::from(b.max_patch_rounds)),
            ("wall_budget_seconds", b.wall_budget_seconds),
            ("fuzz_seconds", b.fuzz_seconds),
        ] {
            if value == 0 {
                v.push(format!("budgets.{field}: must be positive"));
            }
        }
        for (role, cap) in &b.max_iterations {
            if role.parse::<AgentRole>().is_err() {
                v.push(format!("budgets.max_iterations.{role}: unknown role"));
            } else if *cap == 0 {
                v.push(format!("budgets.max_iterations.{role}: must be positive"));
            }
        }
        if let Some(corpus) = &b.seed_corpus {
            if !self.resolve(corpus).is_dir() {
                v.push(format!(
                    "budgets.seed_corpus: {} is not a directory",
                    self.resolve(corpus).display()
                ));
            }
        }

        let a = &self.adapter;
        match (&a.sandbox, &a.shell) {
            (Some(_), Some(_)) => {
                v.push("adapter: both sandbox and shell are configured; choose one".into())
            }
            (None, None) => v.push(
                "adapter: no adapter configured; set adapter.sandbox or adapter.shell".into(),
            ),
            (Some(s), None) => {
                self.check_file(&mut v, "adapter.sandbox.spec", &s.spec);
                if self.resolve(&s.spec).is_file() {
                    if let Err(e) = load_sandbox(&self.resolve(&s.spec)) {
                        v.push(format!("adapter.sandbox.spec: {e}"));
                    }
                }
            }
            (None, Some(sh)) => {
                if sh.compile_cmd.trim().is_empty() {
                    v.push("adapter.shell.compile_cmd: empty".into());
                }
                if sh.fuzz_cmd.trim().is_empty() {
                    v.push("adapter.shell.fuzz_cmd: empty".into());
                }
                if let Err(e) = ShellAdapter::new(sh.clone()) {
                    v.push(format!("adapter.shell: {e}"));
                }
                for (field, p) in [
                    ("docs", &t.docs),
                    ("sources", &t.sources),
                    ("facts", &t.facts),
                ] {
                    if p.is_none() {
                        v.push(format!("target.{field}: required with a shell adapter"));
                    }
                }
            }
        }
        for (field, p) in [("docs", &t.docs), ("facts", &t.facts)] {
            if let Some(p) = p {
                self.check_file(&mut v, &format!("target.{field}"), p);
            }
        }
        if let Some(p) = &t.sources {
            if !self.resolve(p).is_dir() {
                v.push(format!(
                    "target.sources: {} is not a directory",
                    self.resolve(p).display()
                ));
            }
        }
        v
    }

    fn check_file(&self, v: &mut Vec<String>, field: &str, p: &Path) {
        let full = self.resolve(p);
        if !full.is_file() {
            v.push(format!("{field}: {} does not exist", full.display()));
        }
    }

    fn ensure_valid(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    /// Resolved target: explicit paths win, the sandbox spec fills the gaps.
    pub fn target_spec(&self) -> Result<TargetSpec> {
        self.ensure_valid()?;
        let t = &self.target;
        let sandbox = match &self.adapter.sandbox {
            Some(s) => Some(load_sandbox(&self.resolve(&s.spec))?),
            None => None,
        };
        let pick = |explicit: &Option<PathBuf>, fallback: Option<&PathBuf>| -> PathBuf {
            match (explicit, fallback) {
                (Some(p), _) => self.resolve(p),
                (None, Some(f)) => f.clone(),
                (None, None) => unreachable!("validated: shell adapter requires explicit paths"),
            }
        };
        Ok(TargetSpec {
            library_name: t.library_name.clone().unwrap_or_default(),
            library_version: t.library_version.clone(),
            target_class: t.target_class.clone().unwrap_or_default(),
            target_method: t.target_method.clone().unwrap_or_default(),
            docs: pick(&t.docs, sandbox.as_ref().map(|s| &s.docs_path)),
            sources: pick(&t.sources, sandbox.as_ref().map(|s| &s.sources_path)),
            facts: pick(&t.facts, sandbox.as_ref().map(|s| &s.facts_path)),
        })
    }

    pub fn budgets(&self) -> Result<Budgets> {
        let b = &self.budgets;
        let mut max_iterations: BTreeMap<AgentRole, u32> = AgentRole::ALL
            .iter()
            .map(|&r| (r, default_max_iterations(r)))
            .collect();
        for (role, cap) in &b.max_iterations {
            max_iterations.insert(role.parse()?, *cap);
        }
        Ok(Budgets {
            depth_limit: b.depth_limit,
            max_rounds: b.max_rounds,
            max_patch_rounds: b.max_patch_rounds,
            max_iterations,
            wall_budget: Duration::from_secs(b.wall_budget_seconds),
            fuzz_duration: Duration::from_secs(b.fuzz_seconds),
            scope: b.scope,
            seed_corpus: b.seed_corpus.as_ref().map(|p| self.resolve(p)),
        })
    }

    pub fn ecosystem(&self) -> Result<Box<dyn Ecosystem>> {
        self.ensure_valid()?;
        match (&self.adapter.sandbox, &self.adapter.shell) {
            (Some(s), _) => Ok(Box::new(load_sandbox(&self.resolve(&s.spec))?.adapter)),
            (None, Some(sh)) => {
                let mut sh = sh.clone();
                sh.work_dir = self.resolve(&sh.work_dir);
                sh.coverage_out = self.resolve(&sh.coverage_out);
                sh.crash_dir = sh.crash_dir.as_ref().map(|p| self.resolve(p));
                Ok(Box::new(ShellAdapter::new(sh)?))
            }
            (None, None) => unreachable!("validated: one adapter is configured"),
        }
    }

    pub fn backend(&self) -> Result<Box<dyn ModelBackend>> {
        self.ensure_valid()?;
        match (&self.model.scripted, &self.model.http) {
            (Some(s), _) => Ok(Box::new(ScriptedBackend::load(&self.resolve(&s.script))?)),
            (None, Some(h)) => {
                let mut c = HttpConfig::new(h.endpoint.clone(), h.model.clone());
                c.api_key_env = h.api_key_env.clone();
                c.timeout = Duration::from_secs(h.timeout_seconds);
                c.retry.retries = h.retries;
                Ok(Box::new(HttpBackend::new(c)?))
            }
            (None, None) => unreachable!("validated: one backend is configured"),
        }
    }

    pub fn rates(&self) -> Rates {
        Rates {
            rate_in: self.model.rate_in,
            rate_out: self.model.rate_out,
        }
    }

    /// Loads the docs bundle, source index and call facts of the target.
    pub fn analysis_inputs(
        &self,
    ) -> Result<(TargetSpec, Arc<DocsIndex>, Arc<CodeIndex>, CallFacts)> {
        let target = self.target_spec()?;
        let docs = Arc::new(DocsIndex::load(&target.docs)?);
        let code = Arc::new(CodeIndex::build(&target.sources)?);
        let facts = CallFacts::load(&target.facts)?;
        Ok((target, docs, code, facts))
    }

    pub fn workflow(&self) -> Result<Workflow> {
        let (target, docs, code, facts) = self.analysis_inputs()?;
        Ok(Workflow {
            target,
            budgets: self.budgets()?,
            docs,
            code,
            facts,
            ecosystem: self.ecosystem()?,
            backend: self.backend()?,
            rates: self.rates(),
            output_dir: self.resolve(&self.output_dir),
        })
    }
}
