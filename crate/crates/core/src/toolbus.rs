//! Tool registry and dispatcher with per-role access control.
//!
//! Sixteen analysis tools are exposed to the agents, grouped into four
//! categories. Which agent may call which tool is fixed by an access matrix:
//! documentation and code tools are open to every role, the callgraph tools
//! belong to coverage analysis, and the exec tools (compiler and fuzzer) are
//! only ever invoked by the orchestrator on an agent's behalf.
//!
//! Errors raised while serving a request are never propagated out of
//! [`ToolRegistry::dispatch`]; they come back as [`ToolResponse::Error`] so
//! the agent can observe and react to them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::callgraph::CallGraph;
use crate::code_index::{CodeIndex, CodeKind, SearchKind};
use crate::docs_index::{DocKind, DocsIndex, EntityKind};
use crate::error::{Error, Result};

/// Default cap on the number of characters in a single tool response.
pub const DEFAULT_RESPONSE_BUDGET: usize = 8000;

const DEFAULT_MAX_RESULTS: i64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentRole {
    #[serde(rename = "RSH")]
    Research,
    #[serde(rename = "GEN")]
    Generation,
    #[serde(rename = "PAT")]
    Patching,
    #[serde(rename = "CVA")]
    CoverageAnalysis,
    #[serde(rename = "REF")]
    Refinement,
}

impl AgentRole {
    pub const ALL: [AgentRole; 5] = [
        AgentRole::Research,
        AgentRole::Generation,
        AgentRole::Patching,
        AgentRole::CoverageAnalysis,
        AgentRole::Refinement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Research => "RSH",
            AgentRole::Generation => "GEN",
            AgentRole::Patching => "PAT",
            AgentRole::CoverageAnalysis => "CVA",
            AgentRole::Refinement => "REF",
        }
    }

    /// Label used in accounting tables, where research is abbreviated `RES`.
    pub fn report_label(self) -> &'static str {
        match self {
            AgentRole::Research => "RES",
            other => other.as_str(),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RSH" | "RES" => Ok(AgentRole::Research),
            "GEN" => Ok(AgentRole::Generation),
            "PAT" => Ok(AgentRole::Patching),
            "CVA" => Ok(AgentRole::CoverageAnalysis),
            "REF" => Ok(AgentRole::Refinement),
            _ => Err(Error::BadArgs(format!(
                "unknown agent role {s:?}; expected one of RSH, GEN, PAT, CVA, REF"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolCategory {
    Docs,
    Code,
    Callgraph,
    Exec,
}

impl ToolCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ToolCategory::Docs => "docs",
            ToolCategory::Code => "code",
            ToolCategory::Callgraph => "callgraph",
            ToolCategory::Exec => "exec",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessLevel {
    Allowed,
    Denied,
    /// The orchestrator runs the tool on the agent's behalf; the agent itself
    /// cannot query it.
    StaticOnly,
}

impl AccessLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            AccessLevel::Allowed => "allowed",
            AccessLevel::Denied => "denied",
            AccessLevel::StaticOnly => "static_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    String,
    Integer,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub required: bool,
    pub description: String,
}

impl ParamSpec {
    fn required(name: &str, kind: ParamKind, description: &str) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind,
            required: true,
            description: description.to_string(),
        }
    }

    fn optional(name: &str, kind: ParamKind, description: &str) -> Self {
        ParamSpec {
            required: false,
            ..ParamSpec::required(name, kind, description)
        }
    }
}

/// Access for each role, indexed in [`AgentRole::ALL`] order.
pub type RoleAccess = [AccessLevel; 5];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: String,
    pub category: ToolCategory,
    pub params: Vec<ParamSpec>,
    pub description: String,
    pub access: RoleAccess,
}

impl ToolDescriptor {
    pub fn access_for(&self, role: AgentRole) -> AccessLevel {
        self.access[role.index()]
    }
}

/// Scalar argument value as carried on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Str(s.to_string())
    }
}

impl From<String> for Scalar {
    fn from(s: String) -> Self {
        Scalar::Str(s)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

pub type ToolArgs = BTreeMap<String, Scalar>;

/// `{"tool": <string>, "args": {<string>: <scalar>}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolRequest {
    pub tool: String,
    #[serde(default)]
    pub args: ToolArgs,
}

impl ToolRequest {
    pub fn new(tool: impl Into<String>) -> Self {
        ToolRequest {
            tool: tool.into(),
            args: ToolArgs::new(),
        }
    }

    pub fn arg(mut self, name: &str, value: impl Into<Scalar>) -> Self {
        self.args.insert(name.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolError {
    pub code: String,
    pub message: String,
}

impl From<&Error> for ToolError {
    fn from(e: &Error) -> Self {
        ToolError {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

/// Either `{"ok": true, "content": .., "truncated": ..}` or
/// `{"ok": false, "error": {"code": .., "message": ..}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WireResponse", into = "WireResponse")]
pub enum ToolResponse {
    Ok { content: String, truncated: bool },
    Error(ToolError),
}

impl ToolResponse {
    pub fn is_ok(&self) -> bool {
        matches!(self, ToolResponse::Ok { .. })
    }

    pub fn error_code(&self) -> Option<&str> {
        match self {
            ToolResponse::Error(e) => Some(&e.code),
            ToolResponse::Ok { .. } => None,
        }
    }

    /// Text shown to the agent as the observation for this call.
    pub fn observation(&self) -> String {
        match self {
            ToolResponse::Ok { content, truncated } => {
                if *truncated {
                    format!("{content}\n[response truncated]")
                } else {
                    content.clone()
                }
            }
            ToolResponse::Error(e) => format!("ERROR {}: {}", e.code, e.message),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WireResponse {
    ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncated: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<ToolError>,
}

impl TryFrom<WireResponse> for ToolResponse {
    type Error = String;

    fn try_from(w: WireResponse) -> std::result::Result<Self, String> {
        match (w.ok, w.content, w.error) {
            (true, Some(content), None) => {
                let truncated = w.truncated.unwrap_or(false);
                if truncated && content.is_empty() {
                    return Err("truncated response must carry content".into());
                }
                Ok(ToolResponse::Ok { content, truncated })
            }
            (false, None, Some(error)) => Ok(ToolResponse::Error(error)),
            _ => Err(
                "response must carry exactly one of content (ok=true) or error (ok=false)".into(),
            ),
        }
    }
}

impl From<ToolResponse> for WireResponse {
    fn from(r: ToolResponse) -> Self {
        match r {
            ToolResponse::Ok { content, truncated } => WireResponse {
                ok: true,
                content: Some(content),
                truncated: Some(truncated),
                error: None,
            },
            ToolResponse::Error(error) => WireResponse {
                ok: false,
                content: None,
                truncated: None,
                error: Some(error),
            },
        }
    }
}

pub type ToolHandler = Arc<dyn Fn(&ToolArgs) -> Result<String> + Send + Sync>;

/// How a registered tool is served.
#[derive(Clone)]
pub enum ToolBackend {
    /// Answered by dispatch for roles with [`AccessLevel::Allowed`].
    Query(ToolHandler),
    /// Invoked directly by the orchestrator; dispatch never forwards to it.
    Static,
}

struct Entry {
    descriptor: ToolDescriptor,
    backend: ToolBackend,
}

/// Immutable once built; safe to share across threads.
pub struct ToolRegistry {
    tools: BTreeMap<String, Entry>,
    order: Vec<String>,
    response_budget: usize,
}

impl fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToolRegistry")
            .field("tools", &self.order)
            .field("response_budget", &self.response_budget)
            .finish()
    }
}

#[derive(Default)]
pub struct ToolRegistryBuilder {
    tools: BTreeMap<String, Entry>,
    order: Vec<String>,
    response_budget: Option<usize>,
}

impl ToolRegistryBuilder {
    pub fn response_budget(mut self, budget: usize) -> Self {
        self.response_budget = Some(budget);
        self
    }

    pub fn register(&mut self, descriptor: ToolDescriptor, backend: ToolBackend) -> Result<()> {
        if self.tools.contains_key(&descriptor.name) {
            return Err(Error::Config(format!(
                "tool {:?} is already registered",
                descriptor.name
            )));
        }
        let static_ok = matches!(
            descriptor.category,
            ToolCategory::Exec | ToolCategory::Callgraph
        );
        if !static_ok && descriptor.access.contains(&AccessLevel::StaticOnly) {
            return Err(Error::Config(format!(
                "tool {:?}: static-only access is reserved for callgraph and exec tools",
                descriptor.name
            )));
        }
        if matches!(backend, ToolBackend::Static)
            && descriptor.access.contains(&AccessLevel::Allowed)
        {
            return Err(Error::Config(format!(
                "tool {:?} has no query backend but grants queryable access",
                descriptor.name
            )));
        }
        self.order.push(descriptor.name.clone());
        self.tools.insert(
            descriptor.name.clone(),
            Entry {
                descriptor,
                backend,
            },
        );
        Ok(())
    }

    pub fn with_docs(mut self, docs: Arc<DocsIndex>) -> Result<Self> {
        for (descriptor, backend) in docs_tools(docs) {
            self.register(descriptor, backend)?;
        }
        Ok(self)
    }

    pub fn with_code(mut self, code: Arc<CodeIndex>) -> Result<Self> {
        for (descriptor, backend) in code_tools(code) {
            self.register(descriptor, backend)?;
        }
        Ok(self)
    }

    pub fn with_callgraph(mut self, graph: Arc<CallGraph>) -> Result<Self> {
        for (descriptor, backend) in callgraph_tools(graph) {
            self.register(descriptor, backend)?;
        }
        Ok(self)
    }

    /// Registers the compiler and fuzzer descriptors. Their execution goes
    /// through the ecosystem adapter, driven by the orchestrator.
    pub fn with_exec(mut self) -> Result<Self> {
        for descriptor in exec_tools() {
            self.register(descriptor, ToolBackend::Static)?;
        }
        Ok(self)
    }

    pub fn build(self) -> ToolRegistry {
        ToolRegistry {
            tools: self.tools,
            order: self.order,
            response_budget: self.response_budget.unwrap_or(DEFAULT_RESPONSE_BUDGET),
        }
    }
}

/// Builds the registry holding all sixteen default tools.
pub fn register_default_tools(
    docs: Arc<DocsIndex>,
    code: Arc<CodeIndex>,
    graph: Arc<CallGraph>,
) -> Result<ToolRegistry> {
    Ok(ToolRegistry::builder()
        .with_docs(docs)?
        .with_code(code)?
        .with_callgraph(graph)?
        .with_exec()?
        .build())
}

impl ToolRegistry {
    pub fn builder() -> ToolRegistryBuilder {
        ToolRegistryBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn response_budget(&self) -> usize {
        self.response_budget
    }

    /// Descriptors in registration order.
    pub fn descriptors(&self) -> impl Iterator<Item = &ToolDescriptor> {
        self.order.iter().map(|name| &self.tools[name].descriptor)
    }

    pub fn descriptor(&self, tool: &str) -> Option<&ToolDescriptor> {
        self.tools.get(tool).map(|e| &e.descriptor)
    }

    pub fn check_access(&self, role: AgentRole, tool: &str) -> Result<AccessLevel> {
        self.descriptor(tool)
            .map(|d| d.access_for(role))
            .ok_or_else(|| Error::not_found(format!("tool {tool:?}"), Vec::new()))
    }

    /// Tools visible to `role`, i.e. everything not denied, with the access
    /// level attached.
    pub fn list_tools(&self, role: AgentRole) -> Vec<(&ToolDescriptor, AccessLevel)> {
        self.descriptors()
            .map(|d| (d, d.access_for(role)))
            .filter(|(_, level)| *level != AccessLevel::Denied)
            .collect()
    }

    /// Tools `role` may query through [`dispatch`](Self::dispatch).
    pub fn queryable_tools(&self, role: AgentRole) -> Vec<ToolDescriptor> {
        self.descriptors()
            .filter(|d| d.access_for(role) == AccessLevel::Allowed)
            .cloned()
            .collect()
    }

    pub fn dispatch(&self, role: AgentRole, request: &ToolRequest) -> ToolResponse {
        match self.try_dispatch(role, request) {
            Ok(content) => self.wrap(content),
            Err(e) => {
                let e = match e {
                    // Service-level failures that are not part of the tool
                    // contract surface as backend errors.
                    e @ (Error::Io { .. } | Error::Exec(_) | Error::Config(_)) => {
                        Error::Backend(e.to_string())
                    }
                    e => e,
                };
                ToolResponse::Error(ToolError::from(&e))
            }
        }
    }

    fn try_dispatch(&self, role: AgentRole, request: &ToolRequest) -> Result<String> {
        let entry = self
            .tools
            .get(&request.tool)
            .ok_or_else(|| Error::not_found(format!("tool {:?}", request.tool), Vec::new()))?;
        match entry.descriptor.access_for(role) {
            AccessLevel::Denied => {
                return Err(Error::AccessDenied {
                    role: role.to_string(),
                    tool: request.tool.clone(),
                })
            }
            AccessLevel::StaticOnly => return Err(Error::NotQueryable(request.tool.clone())),
            AccessLevel::Allowed => {}
        }
        validate_args(&entry.descriptor, &request.args)?;
        match &entry.backend {
            ToolBackend::Query(handler) => handler(&request.args),
            ToolBackend::Static => Err(Error::NotQueryable(request.tool.clone())),
        }
    }

    fn wrap(&self, content: String) -> ToolResponse {
        match truncate_at_line(&content, self.response_budget) {
            Some(cut) => ToolResponse::Ok {
                content: cut,
                truncated: true,
            },
            None => ToolResponse::Ok {
                content,
                truncated: false,
            },
        }
    }
}

/// Cuts `content` to at most `budget` characters, preferring the last full
/// line. Returns `None` when no cut is needed.
fn truncate_at_line(content: &str, budget: usize) -> Option<String> {
    if content.chars().count() <= budget {
        return None;
    }
    let byte_limit = content
        .char_indices()
        .nth(budget)
        .map(|(i, _)| i)
        .unwrap_or(content.len());
    let window = &content[..byte_limit];
    let cut = match window.rfind('\n') {
        Some(0) | None => window,
        Some(i) => &window[..i],
    };
    if cut.is_empty() {
        // budget of zero; nothing meaningful can be returned
        return Some(content.chars().take(1).collect());
    }
    Some(cut.to_string())
}

fn validate_args(descriptor: &ToolDescriptor, args: &ToolArgs) -> Result<()> {
    for name in args.keys() {
        if !descriptor.params.iter().any(|p| &p.name == name) {
            return Err(Error::BadArgs(format!(
                "{}: unexpected argument {name:?}",
                descriptor.name
            )));
        }
    }
    for param in &descriptor.params {
        match args.get(&param.name) {
            None if param.required => {
                return Err(Error::BadArgs(format!(
                    "{}: missing required argument {:?}",
                    descriptor.name, param.name
                )))
            }
            None => {}
            Some(value) => {
                let ok = matches!(
                    (param.kind, value),
                    (ParamKind::String, Scalar::Str(_))
                        | (ParamKind::Integer, Scalar::Int(_))
                        | (ParamKind::Boolean, Scalar::Bool(_))
                );
                if !ok {
                    return Err(Error::BadArgs(format!(
                        "{}: argument {:?} must be {:?}",
                        descriptor.name, param.name, param.kind
                    )));
                }
            }
        }
    }
    Ok(())
}

fn str_arg<'a>(args: &'a ToolArgs, name: &str) -> Result<&'a str> {
    match args.get(name) {
        Some(Scalar::Str(s)) => Ok(s),
        _ => Err(Error::BadArgs(format!("missing string argument {name:?}"))),
    }
}

fn int_arg(args: &ToolArgs, name: &str, default: i64) -> Result<i64> {
    match args.get(name) {
        None => Ok(default),
        Some(Scalar::Int(v)) => Ok(*v),
        Some(_) => Err(Error::BadArgs(format!(
            "argument {name:?} must be an integer"
        ))),
    }
}

const OPEN: RoleAccess = [AccessLevel::Allowed; 5];

fn only(role: AgentRole, level: AccessLevel) -> RoleAccess {
    let mut access = [AccessLevel::Denied; 5];
    access[role.index()] = level;
    access
}

fn descriptor(
    name: &str,
    category: ToolCategory,
    description: &str,
    params: Vec<ParamSpec>,
    access: RoleAccess,
) -> ToolDescriptor {
    ToolDescriptor {
        name: name.to_string(),
        category,
        params,
        description: description.to_string(),
        access,
    }
}

fn handler<F>(f: F) -> ToolBackend
where
    F: Fn(&ToolArgs) -> Result<String> + Send + Sync + 'static,
{
    ToolBackend::Query(Arc::new(f))
}

fn docs_tools(docs: Arc<DocsIndex>) -> Vec<(ToolDescriptor, ToolBackend)> {
    use ParamKind::String as S;
    let doc = |kind: DocKind, param: &'static str| {
        let docs = docs.clone();
        handler(move |args| docs.query_doc(kind, str_arg(args, param)?))
    };
    let list = |kind: EntityKind, param: Option<&'static str>| {
        let docs = docs.clone();
        handler(move |args| {
            let parent = match param {
                Some(p) => Some(str_arg(args, p)?),
                None => None,
            };
            Ok(docs.list_entities(kind, parent)?.join("\n"))
        })
    };
    vec![
        (
            descriptor(
                "method_doc",
                ToolCategory::Docs,
                "API documentation of one method: signature, description, parameters, return value and declared exceptions.",
                vec![ParamSpec::required("signature", S, "Class.method(ParamTypes) or package.Class.method(ParamTypes)")],
                OPEN,
            ),
            doc(DocKind::Method, "signature"),
        ),
        (
            descriptor(
                "class_doc",
                ToolCategory::Docs,
                "Class summary with the signatures of its documented methods.",
                vec![ParamSpec::required("class", S, "Class or package.Class")],
                OPEN,
            ),
            doc(DocKind::Class, "class"),
        ),
        (
            descriptor(
                "package_doc",
                ToolCategory::Docs,
                "Package summary with the list of its classes.",
                vec![ParamSpec::required("package", S, "package name")],
                OPEN,
            ),
            doc(DocKind::Package, "package"),
        ),
        (
            descriptor(
                "list_packages",
                ToolCategory::Docs,
                "All documented packages.",
                vec![],
                OPEN,
            ),
            list(EntityKind::Packages, None),
        ),
        (
            descriptor(
                "list_classes",
                ToolCategory::Docs,
                "Classes of one package.",
                vec![ParamSpec::required("package", S, "package name")],
                OPEN,
            ),
            list(EntityKind::Classes, Some("package")),
        ),
        (
            descriptor(
                "list_methods",
                ToolCategory::Docs,
                "Method signatures of one class.",
                vec![ParamSpec::required("class", S, "Class or package.Class")],
                OPEN,
            ),
            list(EntityKind::Methods, Some("class")),
        ),
    ]
}

fn code_tools(code: Arc<CodeIndex>) -> Vec<(ToolDescriptor, ToolBackend)> {
    use ParamKind::{Integer as I, String as S};
    let get = |kind: CodeKind, param: &'static str| {
        let code = code.clone();
        handler(move |args| code.get_code(kind, str_arg(args, param)?))
    };
    let search = |kind: SearchKind, param: &'static str| {
        let code = code.clone();
        handler(move |args| {
            let max = int_arg(args, "max_results", DEFAULT_MAX_RESULTS)?;
            Ok(code.search(kind, str_arg(args, param)?, max)?.render())
        })
    };
    let max = || ParamSpec::optional("max_results", I, "result cap (default 50)");
    vec![
        (
            descriptor(
                "get_method_code",
                ToolCategory::Code,
                "Source of one method, headed by its file path and line range.",
                vec![ParamSpec::required("signature", S, "method(ParamTypes), Class.method(ParamTypes) or a bare method name")],
                OPEN,
            ),
            get(CodeKind::Method, "signature"),
        ),
        (
            descriptor(
                "get_class_code",
                ToolCategory::Code,
                "Source of one class, headed by its file path and line range.",
                vec![ParamSpec::required("class", S, "Class or package.Class")],
                OPEN,
            ),
            get(CodeKind::Class, "class"),
        ),
        (
            descriptor(
                "find_definition",
                ToolCategory::Code,
                "Declaration sites of a symbol.",
                vec![ParamSpec::required("symbol", S, "symbol name"), max()],
                OPEN,
            ),
            search(SearchKind::Definition, "symbol"),
        ),
        (
            descriptor(
                "find_refs",
                ToolCategory::Code,
                "Lines referencing a symbol outside its declaration (approximate: comments and string literals are skipped heuristically).",
                vec![ParamSpec::required("symbol", S, "symbol name"), max()],
                OPEN,
            ),
            search(SearchKind::Refs, "symbol"),
        ),
        (
            descriptor(
                "grep",
                ToolCategory::Code,
                "Source lines matching a regular expression (Rust regex syntax).",
                vec![ParamSpec::required("pattern", S, "regular expression"), max()],
                OPEN,
            ),
            search(SearchKind::Text, "pattern"),
        ),
        (
            descriptor(
                "find_symbol",
                ToolCategory::Code,
                "Symbols whose qualified name contains the query (case-insensitive).",
                vec![ParamSpec::required("query", S, "substring"), max()],
                OPEN,
            ),
            search(SearchKind::Symbol, "query"),
        ),
    ]
}

fn callgraph_tools(graph: Arc<CallGraph>) -> Vec<(ToolDescriptor, ToolBackend)> {
    use ParamKind::{Integer as I, String as S};
    let reach_graph = graph.clone();
    let reach = handler(move |args| {
        let from = str_arg(args, "method")?;
        let depth = int_arg(args, "max_depth", reach_graph.depth_limit() as i64)?;
        if depth <= 0 {
            return Err(Error::BadArgs("max_depth must be positive".into()));
        }
        let hits = reach_graph.reach_methods(from, depth as u32)?;
        Ok(hits
            .iter()
            .map(|r| format!("{} {}", r.relative_depth, r.id))
            .collect::<Vec<_>>()
            .join("\n"))
    });
    let path =
        handler(move |args| Ok(graph.path_to_method(str_arg(args, "method")?)?.join(" -> ")));
    vec![
        (
            descriptor(
                "reach_methods",
                ToolCategory::Callgraph,
                "Methods reachable from a method within a call depth.",
                vec![
                    ParamSpec::required("method", S, "method id"),
                    ParamSpec::optional("max_depth", I, "maximum call distance"),
                ],
                only(AgentRole::CoverageAnalysis, AccessLevel::StaticOnly),
            ),
            reach,
        ),
        (
            descriptor(
                "path_to_method",
                ToolCategory::Callgraph,
                "Shortest call path from the target method to a method.",
                vec![ParamSpec::required("method", S, "method id")],
                only(AgentRole::CoverageAnalysis, AccessLevel::Allowed),
            ),
            path,
        ),
    ]
}

fn exec_tools() -> Vec<ToolDescriptor> {
    vec![
        descriptor(
            "compile",
            ToolCategory::Exec,
            "Compiles the current harness and reports diagnostics.",
            vec![],
            only(AgentRole::Patching, AccessLevel::StaticOnly),
        ),
        descriptor(
            "fuzz",
            ToolCategory::Exec,
            "Runs the fuzzer on the current harness and collects coverage.",
            vec![ParamSpec::optional(
                "duration",
                ParamKind::Integer,
                "seconds",
            )],
            only(AgentRole::CoverageAnalysis, AccessLevel::StaticOnly),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo_descriptor(name: &str, category: ToolCategory) -> ToolDescriptor {
        descriptor(
            name,
            category,
            "echo",
            vec![ParamSpec::required("text", ParamKind::String, "")],
            OPEN,
        )
    }

    fn echo_registry(budget: usize) -> ToolRegistry {
        let mut b = ToolRegistry::builder().response_budget(budget);
        b.register(
            echo_descriptor("echo", ToolCategory::Code),
            handler(|args| Ok(str_arg(args, "text")?.to_string())),
        )
        .unwrap();
        b.build()
    }

    #[test]
    fn duplicate_registration_is_a_config_error() {
        let mut b = ToolRegistry::builder();
        let h = handler(|_| Ok(String::new()));
        b.register(echo_descriptor("grep", ToolCategory::Code), h.clone())
            .unwrap();
        let err = b
            .register(echo_descriptor("grep", ToolCategory::Code), h)
            .unwrap_err();
        assert_eq!(err.code(), "CONFIG");
    }

    #[test]
    fn static_only_rejected_for_docs_tools() {
        let mut b = ToolRegistry::builder();
        let mut d = echo_descriptor("x", ToolCategory::Docs);
        d.access[0] = AccessLevel::StaticOnly;
        assert!(b.register(d, handler(|_| Ok(String::new()))).is_err());
    }

    #[test]
    fn truncation_cuts_at_last_full_line() {
        let reg = echo_registry(10);
        let req = ToolRequest::new("echo").arg("text", "abcd\nefgh\nijkl\n");
        match reg.dispatch(AgentRole::Research, &req) {
            ToolResponse::Ok { content, truncated } => {
                assert!(truncated);
                assert_eq!(content, "abcd\nefgh");
            }
            other => panic!("{other:?}"),
        }
        let short = ToolRequest::new("echo").arg("text", "abc");
        assert_eq!(
            reg.dispatch(AgentRole::Research, &short),
            ToolResponse::Ok {
                content: "abc".into(),
                truncated: false
            }
        );
    }

    #[test]
    fn truncation_of_single_long_line_falls_back_to_characters() {
        let cut = truncate_at_line("abcdefghij", 4).unwrap();
        assert_eq!(cut, "abcd");
        let cut = truncate_at_line("é€abc", 2).unwrap();
        assert_eq!(cut, "é€");
    }

    #[test]
    fn bad_args_and_unknown_tools() {
        let reg = echo_registry(100);
        let missing = ToolRequest::new("echo");
        assert_eq!(
            reg.dispatch(AgentRole::Generation, &missing).error_code(),
            Some("BAD_ARGS")
        );
        let wrong_type = ToolRequest::new("echo").arg("text", 3i64);
        assert_eq!(
            reg.dispatch(AgentRole::Generation, &wrong_type)
                .error_code(),
            Some("BAD_ARGS")
        );
        let extra = ToolRequest::new("echo").arg("text", "a").arg("zzz", true);
        assert_eq!(
            reg.dispatch(AgentRole::Generation, &extra).error_code(),
            Some("BAD_ARGS")
        );
        let unknown = ToolRequest::new("nope");
        assert_eq!(
            reg.dispatch(AgentRole::Generation, &unknown).error_code(),
            Some("NOT_FOUND")
        );
        assert_eq!(
            reg.check_access(AgentRole::Generation, "nope")
                .unwrap_err()
                .code(),
            "NOT_FOUND"
        );
    }

    #[test]
    fn backend_failures_become_backend_errors() {
        let mut b = ToolRegistry::builder();
        b.register(
            echo_descriptor("boom", ToolCategory::Code),
            handler(|_| Err(Error::Exec("disk on fire".into()))),
        )
        .unwrap();
        let reg = b.build();
        let resp = reg.dispatch(
            AgentRole::Refinement,
            &ToolRequest::new("boom").arg("text", "x"),
        );
        assert_eq!(resp.error_code(), Some("BACKEND_ERROR"));
    }

    #[test]
    fn wire_format_is_exact() {
        let req: ToolRequest = serde_json::from_str(
            r#"{"tool":"grep","args":{"pattern":"a+","max_results":3,"flag":true}}"#,
        )
        .unwrap();
        assert_eq!(req.args["max_results"], Scalar::Int(3));
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"tool":"grep","args":{"flag":true,"max_results":3,"pattern":"a+"}}"#
        );
        let ok = ToolResponse::Ok {
            content: "x".into(),
            truncated: false,
        };
        assert_eq!(
            serde_json::to_string(&ok).unwrap(),
            r#"{"ok":true,"content":"x","truncated":false}"#
        );
        let err = ToolResponse::Error(ToolError {
            code: "NOT_FOUND".into(),
            message: "m".into(),
        });
        assert_eq!(
            serde_json::to_string(&err).unwrap(),
            r#"{"ok":false,"error":{"code":"NOT_FOUND","message":"m"}}"#
        );
        assert!(serde_json::from_str::<ToolResponse>(
            r#"{"ok":true,"error":{"code":"a","message":"b"}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<ToolResponse>(
            r#"{"ok":true,"content":"","truncated":true}"#
        )
        .is_err());
    }

    #[test]
    fn role_parsing_accepts_report_alias() {
        assert_eq!("RES".parse::<AgentRole>().unwrap(), AgentRole::Research);
        assert_eq!(
            "cva".parse::<AgentRole>().unwrap(),
            AgentRole::CoverageAnalysis
        );
        assert!("XYZ".parse::<AgentRole>().is_err());
    }
}
