use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Research,
    Generate,
    Compile,
    Patch,
    Fuzz,
    Analyze,
    Refine,
    Done,
    Failed,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Research => "research",
            Phase::Generate => "generate",
            Phase::Compile => "compile",
            Phase::Patch => "patch",
            Phase::Fuzz => "fuzz",
            Phase::Analyze => "analyze",
            Phase::Refine => "refine",
            Phase::Done => "done",
            Phase::Failed => "failed",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Failed)
    }

    /// Whether the workflow may move from `self` straight to `next`.
    pub fn can_enter(self, next: Phase) -> bool {
        use Phase::*;
        if self.is_terminal() {
            return false;
        }
        matches!(
            (self, next),
            (Init, Research)
                | (Research, Generate)
                | (Generate, Compile)
                | (Compile, Patch)
                | (Patch, Compile)
                | (Compile, Fuzz)
                | (Fuzz, Analyze)
                | (Analyze, Refine)
                | (Refine, Compile)
                | (_, Done)
                | (_, Failed)
        )
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Verifies that a recorded phase sequence starts at init, follows the
/// phase graph at every step, and ends in a terminal phase.
pub fn check_transitions(log: &[Phase]) -> Result<()> {
    match log.first() {
        Some(Phase::Init) => {}
        other => {
            return Err(Error::BadArgs(format!(
                "phase log must start at init, starts at {other:?}"
            )))
        }
    }
    for (i, pair) in log.windows(2).enumerate() {
        if !pair[0].can_enter(pair[1]) {
            return Err(Error::BadArgs(format!(
                "illegal transition {} -> {} at step {}",
                pair[0],
                pair[1],
                i + 1
            )));
        }
    }
    match log.last() {
        Some(p) if p.is_terminal() => Ok(()),
        other => Err(Error::BadArgs(format!(
            "phase log ends in non-terminal {other:?}"
        ))),
    }
}
