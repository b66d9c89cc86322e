//! One agent run against a scripted model: a tool call, an unparseable
//! answer, the corrective re-prompt, then a valid harness.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use harnessgen::agents::{run_react, AgentProfile, ParsedOutput, SeedContext};
use harnessgen::callgraph::{CallFacts, CallGraph};
use harnessgen::code_index::CodeIndex;
use harnessgen::docs_index::DocsIndex;
use harnessgen::model::{ScriptTurn, ScriptedBackend};
use harnessgen::toolbus::{register_default_tools, AgentRole, ToolRequest};

fn main() -> harnessgen::Result<()> {
    let toylib = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/toylib");
    let target = "toylib.cli.Parser.parse(Options,String[])";
    let registry = register_default_tools(
        Arc::new(DocsIndex::load(&toylib.join("docs.json"))?),
        Arc::new(CodeIndex::build(&toylib.join("src"))?),
        Arc::new(CallGraph::build(
            &CallFacts::load(&toylib.join("facts.json"))?,
            target,
            10,
        )?),
    )?;

    let backend = ScriptedBackend::new(vec![
        ScriptTurn::tools([ToolRequest::new("method_doc").arg("signature", "Parser.parse(Options, String[])")]),
        ScriptTurn::text("Here is the harness: call parse with the fuzzer tokens."),
        ScriptTurn::text(
            "```java\nimport toylib.cli.*;\npublic class Harness {\n    public static void fuzzerTestOneInput(FuzzedDataProvider d) {\n        try { new Parser().parse(new Options(), d.consumeRemainingAsString().split(\" \")); }\n        catch (ParseException ignored) {}\n    }\n}\n```",
        )
        .expecting("required format"),
    ])?;

    let vars = BTreeMap::from([
        ("library", "toylib".to_string()),
        ("target_method", target.to_string()),
        ("entrypoint", "fuzzerTestOneInput".to_string()),
    ]);
    let profile = AgentProfile::new(AgentRole::Generation, &vars)?;
    let mut seed = SeedContext::default();
    seed.push("Target", target);

    let run = run_react(&profile, &seed, &registry, &backend)?;
    let t = &run.transcript;
    println!(
        "status {:?}, {} iterations, {} tool calls, {} tokens",
        t.status,
        t.iterations,
        t.tool_call_count,
        t.usage.tokens_in + t.usage.tokens_out
    );
    for step in &t.steps {
        println!(
            "  iteration {}: {} tool calls, parse error: {:?}",
            step.iteration,
            step.tool_calls.len(),
            step.parse_error
        );
    }
    if let Some(ParsedOutput::Harness(h)) = run.output {
        println!("harness hash {}\n{}", h.normalized_hash, h.source);
    }
    Ok(())
}
