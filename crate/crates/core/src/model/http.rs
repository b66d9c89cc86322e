//! HTTP backend speaking a generic chat-completions-with-tools layout.
//!
//! All provider-specific shapes live in [`request_body`] and
//! [`parse_response`]; swapping providers means changing only those two.

use std::time::Duration;

use serde_json::{json, Map, Value};

use super::{Conversation, MessageRole, ModelBackend, ModelTurn, RetryPolicy, Usage};
use crate::error::{Error, Result};
use crate::toolbus::{ParamKind, Scalar, ToolArgs, ToolDescriptor, ToolRequest};

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: None,
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(HttpBackend { config, client })
    }

    fn send_once(&self, body: &Value) -> Result<Value> {
        let mut req = self.client.post(&self.config.endpoint).json(body);
        if let Some(var) = &self.config.api_key_env {
            if let Ok(key) = std::env::var(var) {
                req = req.bearer_auth(key);
            }
        }
        let resp = req.send().map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Error::Transport(format!("HTTP {status}")));
        }
        let text = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(Error::ModelProtocol(format!("HTTP {status}: {text}")));
        }
        serde_json::from_str(&text)
            .map_err(|e| Error::ModelProtocol(format!("response is not JSON: {e}")))
    }
}

impl ModelBackend for HttpBackend {
    fn complete(&self, conversation: &Conversation, tools: &[ToolDescriptor]) -> Result<ModelTurn> {
        conversation.check_shape()?;
        let body = request_body(&self.config.model, conversation, tools);
        let value = self.config.retry.run(|| self.send_once(&body))?;
        parse_response(&value)
    }
}

fn json_type(kind: ParamKind) -> &'static str {
    match kind {
        ParamKind::String => "string",
        ParamKind::Integer => "integer",
        ParamKind::Boolean => "boolean",
    }
}

pub(crate) fn request_body(
    model: &str,
    conversation: &Conversation,
    tools: &[ToolDescriptor],
) -> Value {
    let messages: Vec<Value> = conversation
        .messages()
        .iter()
        .map(|m| {
            let role = match m.role {
                MessageRole::System => "system",
                MessageRole::User => "user",
                MessageRole::Assistant => "assistant",
                MessageRole::Tool => "tool",
            };
            let mut msg = json!({"role": role, "content": m.content});
            if !m.tool_calls.is_empty() {
                msg["tool_calls"] = m
                    .tool_calls
                    .iter()
                    .map(|c| {
                        json!({
                            "id": c.id,
                            "type": "function",
                            "function": {
                                "name": c.request.tool,
                                "arguments": serde_json::to_string(&c.request.args).unwrap_or_default(),
                            }
                        })
                    })
                    .collect();
            }
            if let Some(id) = &m.tool_call_id {
                msg["tool_call_id"] = json!(id);
            }
            msg
        })
        .collect();
    let tools: Vec<Value> = tools
        .iter()
        .map(|t| {
            let mut properties = Map::new();
            for p in &t.params {
                properties.insert(
                    p.name.clone(),
                    json!({"type": json_type(p.kind), "description": p.description}),
                );
            }
            let required: Vec<&str> = t.params.iter().filter(|p| p.required).map(|p| p.name.as_str()).collect();
            json!({
                "type": "function",
                "function": {
                    "name": t.name,
                    "description": t.description,
                    "parameters": {"type": "object", "properties": properties, "required": required},
                }
            })
        })
        .collect();
    let mut body = json!({"model": model, "messages": messages});
    if !tools.is_empty() {
        body["tools"] = Value::Array(tools);
    }
    body
}

fn scalar(value: &Value) -> Result<Scalar> {
    match value {
        Value::Bool(b) => Ok(Scalar::Bool(*b)),
        Value::String(s) => Ok(Scalar::Str(s.clone())),
        Value::Number(n) => n
            .as_i64()
            .map(Scalar::Int)
            .or_else(|| n.as_f64().map(Scalar::Float))
            .ok_or_else(|| Error::ModelProtocol(format!("unsupported number {n}"))),
        other => Err(Error::ModelProtocol(format!(
            "tool arguments must be scalars, got {other}"
        ))),
    }
}

pub(crate) fn parse_response(value: &Value) -> Result<ModelTurn> {
    let message = value
        .pointer("/choices/0/message")
        .ok_or_else(|| Error::ModelProtocol("response has no choices[0].message".into()))?;
    let text = message
        .get("content")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    let mut tool_calls = Vec::new();
    for call in message
        .get("tool_calls")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
    {
        let name = call
            .pointer("/function/name")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::ModelProtocol("tool call without function name".into()))?;
        let raw = call.pointer("/function/arguments");
        let args_value: Value = match raw {
            Some(Value::String(s)) if s.trim().is_empty() => json!({}),
            Some(Value::String(s)) => serde_json::from_str(s).map_err(|e| {
                Error::ModelProtocol(format!("arguments of {name} are not JSON: {e}"))
            })?,
            Some(v @ Value::Object(_)) => v.clone(),
            None => json!({}),
            Some(other) => {
                return Err(Error::ModelProtocol(format!(
                    "arguments of {name}: {other}"
                )))
            }
        };
        let object = args_value.as_object().ok_or_else(|| {
            Error::ModelProtocol(format!("arguments of {name} must be an object"))
        })?;
        let mut args = ToolArgs::new();
        for (k, v) in object {
            args.insert(k.clone(), scalar(v)?);
        }
        tool_calls.push(ToolRequest {
            tool: name.to_string(),
            args,
        });
    }
    if text.is_none() && tool_calls.is_empty() {
        return Err(Error::ModelProtocol(
            "model returned neither text nor tool calls".into(),
        ));
    }
    let usage = Usage {
        tokens_in: value
            .pointer("/usage/prompt_tokens")
            .and_then(Value::as_u64)
            .unwrap_or(0),
        tokens_out: value
            .pointer("/usage/completion_tokens")
            .and_then(Value::as_u64)
            .unwrap_or(0),
    };
    Ok(ModelTurn {
        text,
        tool_calls,
        usage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ToolCall;

    #[test]
    fn request_translates_tool_calls_and_results() {
        let mut c = Conversation::new("sys");
        c.user("go");
        c.assistant(
            "",
            vec![ToolCall {
                id: "call-1".into(),
                request: ToolRequest::new("grep").arg("pattern", "x"),
            }],
        );
        c.tool_result("call-1", "hit").unwrap();
        let body = request_body("m", &c, &[]);
        assert_eq!(
            body["messages"][2]["tool_calls"][0]["function"]["arguments"],
            r#"{"pattern":"x"}"#
        );
        assert_eq!(body["messages"][3]["tool_call_id"], "call-1");
        assert!(body.get("tools").is_none());
    }

    #[test]
    fn parse_rejects_empty_and_malformed() {
        let empty = json!({"choices": [{"message": {"content": ""}}]});
        assert_eq!(parse_response(&empty).unwrap_err().code(), "MODEL_PROTOCOL");
        let bad_args = json!({"choices": [{"message": {"tool_calls": [{"function": {"name": "grep", "arguments": "{oops"}}]}}]});
        assert_eq!(
            parse_response(&bad_args).unwrap_err().code(),
            "MODEL_PROTOCOL"
        );
        assert!(parse_response(&json!({})).is_err());
    }
}
