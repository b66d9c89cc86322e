use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{count_tokens, Conversation, ModelBackend, ModelTurn, Usage};
use crate::error::{self, Error, Result};
use crate::toolbus::{ToolDescriptor, ToolRequest};

/// One pre-recorded model reply.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptTurn {
    /// When set, the latest user/tool message must contain this text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolRequest>,
}

impl ScriptTurn {
    pub fn text(text: impl Into<String>) -> Self {
        ScriptTurn {
            text: Some(text.into()),
            ..Default::default()
        }
    }

    pub fn tools(calls: impl IntoIterator<Item = ToolRequest>) -> Self {
        ScriptTurn {
            tool_calls: calls.into_iter().collect(),
            ..Default::default()
        }
    }

    pub fn expecting(mut self, needle: impl Into<String>) -> Self {
        self.expect_contains = Some(needle.into());
        self
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    Turns(Vec<ScriptTurn>),
    Wrapped { turns: Vec<ScriptTurn> },
}

/// Serves scripted turns in order. Deterministic: the same script against
/// the same conversation prefix always yields the same turns.
#[derive(Debug)]
pub struct ScriptedBackend {
    turns: Vec<ScriptTurn>,
    cursor: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(turns: Vec<ScriptTurn>) -> Result<Self> {
        for (i, t) in turns.iter().enumerate() {
            if t.text.is_none() && t.tool_calls.is_empty() {
                return Err(Error::parse(
                    format!("turns[{i}]"),
                    "turn needs text or tool_calls",
                ));
            }
        }
        Ok(ScriptedBackend {
            turns,
            cursor: Mutex::new(0),
        })
    }

    /// Accepts a bare array of turns or `{"turns": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScriptFile = error::parse_json(text, "<script>")?;
        Self::new(match file {
            ScriptFile::Turns(t) | ScriptFile::Wrapped { turns: t } => t,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ScriptFile = error::read_json(path)?;
        Self::new(match file {
            ScriptFile::Turns(t) | ScriptFile::Wrapped { turns: t } => t,
        })
        .map_err(|e| match e {
            Error::Parse { location, message } => {
                Error::parse(format!("{}: {location}", path.display()), message)
            }
            e => e,
        })
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Number of turns served so far.
    pub fn position(&self) -> usize {
        *self.cursor.lock().unwrap()
    }

    pub fn remaining(&self) -> usize {
        self.turns.len() - self.position()
    }
}

impl ModelBackend for ScriptedBackend {
    fn complete(
        &self,
        conversation: &Conversation,
        _tools: &[ToolDescriptor],
    ) -> Result<ModelTurn> {
        conversation.check_shape()?;
        let mut cursor = self.cursor.lock().unwrap();
        let index = *cursor;
        let turn = self
            .turns
            .get(index)
            .ok_or(Error::ScriptExhausted(self.turns.len()))?;
        if let Some(needle) = &turn.expect_contains {
            let last = conversation.last_input().unwrap_or("");
            if !last.contains(needle.as_str()) {
                return Err(Error::ScriptMismatch {
                    turn: index,
                    expected: needle.clone(),
                });
            }
        }
        *cursor += 1;

        let tokens_in = conversation
            .messages()
            .iter()
            .map(|m| count_tokens(&m.content))
            .sum();
        let tokens_out = turn.text.as_deref().map_or(0, count_tokens)
            + turn
                .tool_calls
                .iter()
                .map(|c| count_tokens(&serde_json::to_string(c).unwrap_or_default()))
                .sum::<u64>();
        Ok(ModelTurn {
            text: turn.text.clone(),
            tool_calls: turn.tool_calls.clone(),
            usage: Usage {
                tokens_in,
                tokens_out,
            },
        })
    }
}
