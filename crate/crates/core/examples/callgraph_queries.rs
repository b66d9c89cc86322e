//! Depth-limited reachability from the target method.

use std::path::Path;

use harnessgen::callgraph::{CallFacts, CallGraph};

fn main() -> harnessgen::Result<()> {
    let facts =
        CallFacts::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/toylib/facts.json"))?;
    let root = "toylib.cli.Parser.parse(Options,String[])";

    for limit in [1, 2, 10] {
        let graph = CallGraph::build(&facts, root, limit)?;
        println!(
            "depth limit {limit}: {} of {} methods reachable",
            graph.len(),
            facts.method_count()
        );
    }

    let graph = CallGraph::build(&facts, root, 10)?;
    let mut nodes: Vec<_> = graph.nodes().collect();
    nodes.sort_by_key(|n| (n.depth, n.id.clone()));
    for n in nodes {
        println!("  {} {}", n.depth, n.id);
    }

    let from = "toylib.cli.Parser.handleToken(String)";
    for r in graph.reach_methods(from, 1)? {
        println!("{from} reaches {} at +{}", r.id, r.relative_depth);
    }
    println!(
        "path: {}",
        graph
            .path_to_method("toylib.cli.ParseException.missing(List<String>)")?
            .join(" -> ")
    );
    match graph.path_to_method("toylib.cli.HelpFormatter.printHelp(Options)") {
        Ok(p) => println!("unexpected path {p:?}"),
        Err(e) => println!("printHelp: {e}"),
    }
    Ok(())
}
