//! The five agents and the ReAct loop that runs them.
//!
//! An agent is a [`AgentProfile`]: a role (which fixes its tool access), a
//! system prompt, an iteration cap and a parser for its final answer.
//! [`run_react`] drives any profile against any [`ModelBackend`].
//!
//! Prompt templates live in `assets/prompts/` and use `{name}` placeholders:
//!
//! | role | template | placeholders |
//! |------|----------|--------------|
//! | RSH | `research.md` | `library`, `target_method` |
//! | GEN | `generation.md` | `library`, `target_method`, `entrypoint` |
//! | PAT | `patching.md` | `entrypoint` |
//! | CVA | `coverage.md` | `target_method`, `depth_limit` |
//! | REF | `refinement.md` | `target_method`, `entrypoint` |

mod context;
mod parsers;
mod react;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use context::{build_research_context, ContextBlock, SeedContext};
pub use parsers::{
    normalize_and_hash, normalize_source, parse_harness_output, parse_research_report,
    parse_termination_decision, Decision, HarnessArtifact, ResearchReport, TerminationDecision,
    RESEARCH_SECTIONS,
};
pub use react::{
    run_react, AgentRun, AgentStatus, AgentTranscript, TranscriptStep, CORRECTIVE_PROMPT,
};

use crate::error::{Error, Result};
use crate::toolbus::AgentRole;

/// Which parser reads an agent's final answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputParser {
    ResearchReport,
    Harness,
    TerminationDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParsedOutput {
    Research(ResearchReport),
    Harness(HarnessArtifact),
    Decision(TerminationDecision),
}

impl OutputParser {
    pub fn for_role(role: AgentRole) -> Self {
        match role {
            AgentRole::Research => OutputParser::ResearchReport,
            AgentRole::Generation | AgentRole::Patching | AgentRole::Refinement => {
                OutputParser::Harness
            }
            AgentRole::CoverageAnalysis => OutputParser::TerminationDecision,
        }
    }

    pub fn parse(self, text: &str) -> Result<ParsedOutput> {
        match self {
            OutputParser::ResearchReport => parse_research_report(text).map(ParsedOutput::Research),
            OutputParser::Harness => parse_harness_output(text).map(ParsedOutput::Harness),
            OutputParser::TerminationDecision => {
                parse_termination_decision(text).map(ParsedOutput::Decision)
            }
        }
    }
}

pub fn default_max_iterations(role: AgentRole) -> u32 {
    match role {
        AgentRole::Research => 25,
        AgentRole::Generation => 8,
        AgentRole::Patching => 10,
        AgentRole::CoverageAnalysis => 25,
        AgentRole::Refinement => 15,
    }
}

pub fn prompt_template(role: AgentRole) -> &'static str {
    match role {
        AgentRole::Research => include_str!("../../assets/prompts/research.md"),
        AgentRole::Generation => include_str!("../../assets/prompts/generation.md"),
        AgentRole::Patching => include_str!("../../assets/prompts/patching.md"),
        AgentRole::CoverageAnalysis => include_str!("../../assets/prompts/coverage.md"),
        AgentRole::Refinement => include_str!("../../assets/prompts/refinement.md"),
    }
}

/// Substitutes `{name}` placeholders. Every placeholder in the template
/// must have a value.
pub fn render_template(template: &str, vars: &BTreeMap<&str, String>) -> Result<String> {
    static PLACEHOLDER: OnceLock<Regex> = OnceLock::new();
    let re = PLACEHOLDER.get_or_init(|| Regex::new(r"\{([a-z_][a-z0-9_]*)\}").unwrap());
    let mut missing = Vec::new();
    let out = re.replace_all(template, |c: &regex::Captures| match vars.get(&c[1]) {
        Some(v) => v.clone(),
        None => {
            missing.push(c[1].to_string());
            c[0].to_string()
        }
    });
    if missing.is_empty() {
        Ok(out.into_owned())
    } else {
        Err(Error::Config(format!(
            "prompt template lacks values for: {}",
            missing.join(", ")
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub role: AgentRole,
    pub system_prompt: String,
    pub max_iterations: u32,
    pub parser: OutputParser,
}

impl AgentProfile {
    /// Profile with the bundled prompt for `role` rendered from `vars` and
    /// the default iteration cap.
    pub fn new(role: AgentRole, vars: &BTreeMap<&str, String>) -> Result<Self> {
        Ok(AgentProfile {
            role,
            system_prompt: render_template(prompt_template(role), vars)?,
            max_iterations: default_max_iterations(role),
            parser: OutputParser::for_role(role),
        })
    }

    pub fn with_max_iterations(mut self, max_iterations: u32) -> Result<Self> {
        if max_iterations == 0 {
            return Err(Error::Config(format!(
                "{}: max_iterations must be at least 1",
                self.role
            )));
        }
        self.max_iterations = max_iterations;
        Ok(self)
    }
}
