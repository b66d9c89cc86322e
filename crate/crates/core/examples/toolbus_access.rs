//! Tool access per agent role, and what happens when a role reaches for a
//! tool it may not use.

use std::path::Path;
use std::sync::Arc;

use harnessgen::callgraph::{CallFacts, CallGraph};
use harnessgen::code_index::CodeIndex;
use harnessgen::docs_index::DocsIndex;
use harnessgen::toolbus::{register_default_tools, AgentRole, ToolRequest};

fn main() -> harnessgen::Result<()> {
    let toylib = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/toylib");
    let docs = Arc::new(DocsIndex::load(&toylib.join("docs.json"))?);
    let code = Arc::new(CodeIndex::build(&toylib.join("src"))?);
    let facts = CallFacts::load(&toylib.join("facts.json"))?;
    let graph = Arc::new(CallGraph::build(
        &facts,
        "toylib.cli.Parser.parse(Options,String[])",
        10,
    )?);
    let registry = register_default_tools(docs, code, graph)?;

    for role in AgentRole::ALL {
        let names: Vec<String> = registry
            .queryable_tools(role)
            .into_iter()
            .map(|d| d.name)
            .collect();
        println!(
            "{role}: {} queryable tools: {}",
            names.len(),
            names.join(", ")
        );
    }

    let path_query = ToolRequest::new("path_to_method")
        .arg("method", "toylib.cli.ParseException.missing(List<String>)");
    for role in [AgentRole::CoverageAnalysis, AgentRole::Research] {
        println!(
            "\n{role} path_to_method -> {:?}",
            registry.dispatch(role, &path_query)
        );
    }
    let compile = ToolRequest::new("compile");
    println!(
        "\nPAT compile -> {:?}",
        registry.dispatch(AgentRole::Patching, &compile)
    );
    Ok(())
}
