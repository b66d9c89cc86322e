//! Chat-with-tools interface over language models.

mod http;
mod ledger;
mod scripted;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use http::{HttpBackend, HttpConfig};
pub use ledger::{summarize_usage, Rates, UsageEntry, UsageLedger, UsageRow, UsageTable};
pub use scripted::{ScriptTurn, ScriptedBackend};

use crate::error::{Error, Result};
use crate::toolbus::{ToolDescriptor, ToolRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    #[serde(flatten)]
    pub request: ToolRequest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: MessageRole,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl Message {
    fn plain(role: MessageRole, content: impl Into<String>) -> Self {
        Message {
            role,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    messages: Vec<Message>,
}

impl Conversation {
    pub fn new(system_prompt: impl Into<String>) -> Self {
        Conversation {
            messages: vec![Message::plain(MessageRole::System, system_prompt)],
        }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn user(&mut self, content: impl Into<String>) {
        self.messages
            .push(Message::plain(MessageRole::User, content));
    }

    pub fn assistant(&mut self, content: impl Into<String>, tool_calls: Vec<ToolCall>) {
        self.messages.push(Message {
            tool_calls,
            ..Message::plain(MessageRole::Assistant, content)
        });
    }

    /// Appends a tool observation; `call_id` must name a call issued by an
    /// earlier assistant message.
    pub fn tool_result(&mut self, call_id: &str, content: impl Into<String>) -> Result<()> {
        let known = self
            .messages
            .iter()
            .filter(|m| m.role == MessageRole::Assistant)
            .flat_map(|m| &m.tool_calls)
            .any(|c| c.id == call_id);
        if !known {
            return Err(Error::ModelProtocol(format!(
                "tool result references unknown call id {call_id:?}"
            )));
        }
        self.messages.push(Message {
            tool_call_id: Some(call_id.to_string()),
            ..Message::plain(MessageRole::Tool, content)
        });
        Ok(())
    }

    /// Content of the most recent user or tool message.
    pub fn last_input(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| matches!(m.role, MessageRole::User | MessageRole::Tool))
            .map(|m| m.content.as_str())
    }

    pub(crate) fn check_shape(&self) -> Result<()> {
        match self.messages.first() {
            Some(m) if m.role == MessageRole::System => Ok(()),
            _ => Err(Error::BadArgs(
                "conversation must start with a system message".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub tokens_in: u64,
    pub tokens_out: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTurn {
    pub text: Option<String>,
    pub tool_calls: Vec<ToolRequest>,
    pub usage: Usage,
}

pub trait ModelBackend: Send + Sync {
    fn complete(&self, conversation: &Conversation, tools: &[ToolDescriptor]) -> Result<ModelTurn>;
}

/// Retry schedule for transport failures: the first call plus `retries`
/// more, sleeping `base_delay`, then twice that, and so on in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    /// Three retries after 1s, 2s and 4s.
    fn default() -> Self {
        RetryPolicy {
            retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Sleep before retry number `retry` (1-based).
    pub fn delay_before(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(retry.saturating_sub(1))
    }

    /// Runs `op` until it succeeds, fails with a non-transport error, or the
    /// attempts run out.
    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T>) -> Result<T> {
        let attempts = self.retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            match op() {
                Err(Error::Transport(msg)) => {
                    log::warn!("model transport failure (attempt {attempt}/{attempts}): {msg}");
                    last = msg;
                    if attempt < attempts {
                        std::thread::sleep(self.delay_before(attempt));
                    }
                }
                other => return other,
            }
        }
        Err(Error::ModelUnavailable { attempts, last })
    }
}

/// Whitespace-delimited token count.
pub fn count_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}
