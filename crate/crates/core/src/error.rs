use std::path::PathBuf;

use crate::ecosystem::{Diagnostic, FuzzResult};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Engine-wide error. Every variant maps onto a stable string code via
/// [`Error::code`], which is what agents see when an error is turned into a
/// tool observation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{what} not found{}", suggestion_suffix(.suggestions))]
    NotFound {
        what: String,
        suggestions: Vec<String>,
    },

    #[error("{what} is ambiguous; candidates: {}", .candidates.join(", "))]
    Ambiguous {
        what: String,
        candidates: Vec<String>,
    },

    #[error("bad arguments: {0}")]
    BadArgs(String),

    #[error("no source files were indexed")]
    IndexEmpty,

    #[error("access denied: role {role} may not use {tool}")]
    AccessDenied { role: String, tool: String },

    #[error("tool {0} is invoked by the orchestrator only and cannot be queried")]
    NotQueryable(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("script exhausted after {0} turns")]
    ScriptExhausted(usize),

    #[error("script turn {turn} expected the last message to contain {expected:?}")]
    ScriptMismatch { turn: usize, expected: String },

    #[error("model transport failure: {0}")]
    Transport(String),

    #[error("model unavailable after {attempts} attempts: {last}")]
    ModelUnavailable { attempts: u32, last: String },

    #[error("model protocol error: {0}")]
    ModelProtocol(String),

    #[error("agent output has no fenced code block")]
    NoCode,

    #[error("agent output has an empty code block")]
    EmptyCode,

    #[error("target method {0} not found in documentation or source index")]
    TargetNotFound(String),

    #[error("exec error: {0}")]
    Exec(String),

    #[error("fuzzing exceeded its time budget")]
    FuzzTimeout { partial: Option<Box<FuzzResult>> },

    #[error("compilation failed with {} diagnostics", .0.len())]
    CompileFailed(Vec<Diagnostic>),
}

fn suggestion_suffix(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!("; did you mean: {}", suggestions.join(", "))
    }
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IO",
            Error::Parse { .. } => "PARSE",
            Error::Config(_) => "CONFIG",
            Error::NotFound { .. } => "NOT_FOUND",
            Error::Ambiguous { .. } => "AMBIGUOUS",
            Error::BadArgs(_) => "BAD_ARGS",
            Error::IndexEmpty => "INDEX_EMPTY",
            Error::AccessDenied { .. } => "ACCESS_DENIED",
            Error::NotQueryable(_) => "NOT_QUERYABLE",
            Error::Backend(_) => "BACKEND_ERROR",
            Error::ScriptExhausted(_) => "SCRIPT_EXHAUSTED",
            Error::ScriptMismatch { .. } => "SCRIPT_MISMATCH",
            Error::Transport(_) => "TRANSPORT",
            Error::ModelUnavailable { .. } => "MODEL_UNAVAILABLE",
            Error::ModelProtocol(_) => "MODEL_PROTOCOL",
            Error::NoCode => "PARSE_NO_CODE",
            Error::EmptyCode => "PARSE_EMPTY",
            Error::TargetNotFound(_) => "TARGET_NOT_FOUND",
            Error::Exec(_) => "EXEC",
            Error::FuzzTimeout { .. } => "FUZZ_TIMEOUT",
            Error::CompileFailed(_) => "COMPILE_FAILED",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn not_found(what: impl Into<String>, suggestions: Vec<String>) -> Self {
        Error::NotFound {
            what: what.into(),
            suggestions,
        }
    }

    /// True for errors raised by a language-model backend rather than by the
    /// engine itself.
    pub fn is_model_error(&self) -> bool {
        matches!(
            self,
            Error::ScriptExhausted(_)
                | Error::ScriptMismatch { .. }
                | Error::Transport(_)
                | Error::ModelUnavailable { .. }
                | Error::ModelProtocol(_)
        )
    }
}

/// Reads a JSON file into `T`, reporting schema violations with the JSON path
/// of the offending element.
pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, &path.display().to_string())
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::parse(
            format!(
                "{origin}: {path} (line {}, column {})",
                inner.line(),
                inner.column()
            ),
            inner.to_string(),
        )
    })
}
