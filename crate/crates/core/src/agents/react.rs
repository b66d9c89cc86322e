//! The ReAct loop: ask the model, run the tools it requests, feed the
//! observations back, until it produces a parseable final answer.

use serde::{Deserialize, Serialize};

use super::{AgentProfile, ParsedOutput, SeedContext};
use crate::error::Result;
use crate::model::{Conversation, ModelBackend, ToolCall, Usage};
use crate::toolbus::{AgentRole, ToolRegistry, ToolResponse};

/// Sent once when a final answer cannot be parsed.
pub const CORRECTIVE_PROMPT: &str =
    "Your last reply could not be parsed. Respond in the required format.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentStatus {
    Completed,
    FailedParse,
}

/// One model turn and what came of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub iteration: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_results: Vec<ToolResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub role: AgentRole,
    pub status: AgentStatus,
    pub iterations: u32,
    pub tool_call_count: u32,
    pub usage: Usage,
    pub steps: Vec<TranscriptStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRun {
    pub transcript: AgentTranscript,
    pub output: Option<ParsedOutput>,
    pub last_text: Option<String>,
}

impl AgentRun {
    pub fn status(&self) -> AgentStatus {
        self.transcript.status
    }
}

/// Runs `profile` to completion. Tool failures become observations; model
/// failures propagate. A final answer that fails to parse earns one
/// corrective re-prompt; a second consecutive failure, or hitting the
/// iteration cap, ends the run with [`AgentStatus::FailedParse`].
pub fn run_react(
    profile: &AgentProfile,
    seed: &SeedContext,
    tools: &ToolRegistry,
    backend: &dyn ModelBackend,
) -> Result<AgentRun> {
    let role = profile.role;
    let offered = tools.queryable_tools(role);
    let mut conversation = Conversation::new(profile.system_prompt.clone());
    conversation.user(seed.render());

    let mut steps = Vec::new();
    let mut usage = Usage::default();
    let mut tool_call_count = 0u32;
    let mut last_text = None;
    let mut reprompted = false;
    let mut iterations = 0u32;

    let finish = |status, steps, iterations, tool_call_count, usage, output, last_text| AgentRun {
        transcript: AgentTranscript {
            role,
            status,
            iterations,
            tool_call_count,
            usage,
            steps,
        },
        output,
        last_text,
    };

    while iterations < profile.max_iterations {
        iterations += 1;
        let turn = backend.complete(&conversation, &offered)?;
        usage.tokens_in += turn.usage.tokens_in;
        usage.tokens_out += turn.usage.tokens_out;
        let mut step = TranscriptStep {
            iteration: iterations,
            text: turn.text.clone(),
            tool_calls: Vec::new(),
            tool_results: Vec::new(),
            parse_error: None,
        };

        if !turn.tool_calls.is_empty() {
            let calls: Vec<ToolCall> = turn
                .tool_calls
                .into_iter()
                .enumerate()
                .map(|(i, request)| ToolCall {
                    id: format!("call-{iterations}-{}", i + 1),
                    request,
                })
                .collect();
            conversation.assistant(turn.text.unwrap_or_default(), calls.clone());
            for call in &calls {
                let response = tools.dispatch(role, &call.request);
                log::debug!(
                    "{role} {} -> {}",
                    call.request.tool,
                    response.error_code().unwrap_or("ok")
                );
                conversation.tool_result(&call.id, response.observation())?;
                step.tool_results.push(response);
            }
            tool_call_count += calls.len() as u32;
            step.tool_calls = calls;
            steps.push(step);
            reprompted = false;
            continue;
        }

        let text = turn.text.unwrap_or_default();
        last_text = Some(text.clone());
        match profile.parser.parse(&text) {
            Ok(output) => {
                steps.push(step);
                return Ok(finish(
                    AgentStatus::Completed,
                    steps,
                    iterations,
                    tool_call_count,
                    usage,
                    Some(output),
                    last_text,
                ));
            }
            Err(e) => {
                step.parse_error = Some(format!("{}: {e}", e.code()));
                steps.push(step);
                if reprompted {
                    break;
                }
                reprompted = true;
                conversation.assistant(text, Vec::new());
                conversation.user(format!("{CORRECTIVE_PROMPT}\n{e}"));
            }
        }
    }
    Ok(finish(
        AgentStatus::FailedParse,
        steps,
        iterations,
        tool_call_count,
        usage,
        None,
        last_text,
    ))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use super::*;
    use crate::agents::OutputParser;
    use crate::code_index::CodeIndex;
    use crate::docs_index::{DocsBundle, DocsIndex};
    use crate::model::{ScriptTurn, ScriptedBackend};
    use crate::toolbus::ToolRequest;

    fn registry() -> ToolRegistry {
        let docs = DocsIndex::new(
            DocsBundle::from_json(
                r#"{"packages": [{"name": "p", "classes": [{"name": "C", "doc": "A class."}]}]}"#,
            )
            .unwrap(),
        );
        let code = CodeIndex::from_sources([("p/C.tl", "package p;\nclass C {\n}\n")]).unwrap();
        ToolRegistry::builder()
            .with_docs(Arc::new(docs))
            .unwrap()
            .with_code(Arc::new(code))
            .unwrap()
            .with_exec()
            .unwrap()
            .build()
    }

    fn profile(role: AgentRole, max: u32) -> AgentProfile {
        AgentProfile {
            role,
            system_prompt: "sys".into(),
            max_iterations: max,
            parser: OutputParser::for_role(role),
        }
    }

    fn seed() -> SeedContext {
        let mut s = SeedContext::default();
        s.push("Signature", "p.C.run()");
        s
    }

    #[test]
    fn two_turn_flow() {
        let backend = ScriptedBackend::new(vec![
            ScriptTurn::tools([ToolRequest::new("class_doc").arg("class", "p.C")]),
            ScriptTurn::text("```\nclass H {}\n```").expecting("A class."),
        ])
        .unwrap();
        let run = run_react(
            &profile(AgentRole::Generation, 8),
            &seed(),
            &registry(),
            &backend,
        )
        .unwrap();
        assert_eq!(run.status(), AgentStatus::Completed);
        assert_eq!(run.transcript.iterations, 2);
        assert_eq!(run.transcript.tool_call_count, 1);
        assert_eq!(run.transcript.steps[0].tool_calls[0].id, "call-1-1");
        assert!(matches!(run.output, Some(ParsedOutput::Harness(_))));
    }

    #[test]
    fn cap_is_exact() {
        let turns = (0..10)
            .map(|_| ScriptTurn::tools([ToolRequest::new("list_packages")]))
            .collect();
        let backend = ScriptedBackend::new(turns).unwrap();
        let run = run_react(
            &profile(AgentRole::Research, 3),
            &seed(),
            &registry(),
            &backend,
        )
        .unwrap();
        assert_eq!(run.status(), AgentStatus::FailedParse);
        assert_eq!(run.transcript.iterations, 3);
        assert_eq!(backend.position(), 3);
    }

    #[test]
    fn one_corrective_reprompt() {
        let backend = ScriptedBackend::new(vec![
            ScriptTurn::text("prose"),
            ScriptTurn::text("```\nclass H {}\n```").expecting("required format"),
        ])
        .unwrap();
        let run = run_react(
            &profile(AgentRole::Generation, 8),
            &seed(),
            &registry(),
            &backend,
        )
        .unwrap();
        assert_eq!(run.status(), AgentStatus::Completed);
        assert_eq!(
            run.transcript.steps[0]
                .parse_error
                .as_deref()
                .map(|e| e.starts_with("PARSE_NO_CODE")),
            Some(true)
        );

        let backend = ScriptedBackend::new(vec![
            ScriptTurn::text("prose"),
            ScriptTurn::text("more prose"),
            ScriptTurn::text("```\nx\n```"),
        ])
        .unwrap();
        let run = run_react(
            &profile(AgentRole::Generation, 8),
            &seed(),
            &registry(),
            &backend,
        )
        .unwrap();
        assert_eq!(run.status(), AgentStatus::FailedParse);
        assert_eq!(run.transcript.iterations, 2);
        assert_eq!(run.last_text.as_deref(), Some("more prose"));
    }

    #[test]
    fn denied_tools_are_observed_not_run() {
        let backend = ScriptedBackend::new(vec![
            ScriptTurn::tools([ToolRequest::new("compile")]),
            ScriptTurn::text("```\nclass H {}\n```").expecting("ACCESS_DENIED"),
        ])
        .unwrap();
        let run = run_react(
            &profile(AgentRole::Generation, 8),
            &seed(),
            &registry(),
            &backend,
        )
        .unwrap();
        assert_eq!(
            run.transcript.steps[0].tool_results[0].error_code(),
            Some("ACCESS_DENIED")
        );
        let offered: BTreeMap<_, _> = registry()
            .queryable_tools(AgentRole::Generation)
            .into_iter()
            .map(|d| (d.name, ()))
            .collect();
        assert!(!offered.contains_key("compile"));
    }

    #[test]
    fn model_errors_propagate() {
        let backend =
            ScriptedBackend::new(vec![ScriptTurn::tools([ToolRequest::new("list_packages")])])
                .unwrap();
        let err = run_react(
            &profile(AgentRole::Research, 5),
            &seed(),
            &registry(),
            &backend,
        )
        .unwrap_err();
        assert_eq!(err.code(), "SCRIPT_EXHAUSTED");
    }
}
