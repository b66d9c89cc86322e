mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use common::oracles::*;
use common::*;
use harnessgen::agents::{
    normalize_and_hash, normalize_source, parse_harness_output, parse_research_report,
    parse_termination_decision, HarnessArtifact,
};
use harnessgen::callgraph::CallGraph;
use harnessgen::coverage::{
    aggregate_full, apply_recording_windows, coverage_percent, merge_with_callgraph,
    CoverageReport, CoverageScope, MethodCoverage, Metric,
};
use harnessgen::ecosystem::{crash_dedup_key, load_sandbox, Ecosystem, FuzzRequest};
use harnessgen::toolbus::{AccessLevel, AgentRole, ToolRequest, ToolResponse};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn digraph() -> impl Strategy<Value = Digraph> {
    (1usize..=50).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..=150).prop_map(move |edges| Digraph { n, edges })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn callgraph_matches_bfs(g in digraph(), limit in 1u32..=10, from_pick in any::<prop::sample::Index>()) {
        let facts = g.facts();
        let graph = CallGraph::build(&facts, &node_id(0), limit).unwrap();
        let expected = g.depths(0, limit);
        prop_assert_eq!(graph.len(), expected.len());
        for (&i, &d) in &expected {
            prop_assert_eq!(graph.node(&node_id(i)).map(|n| n.depth), Some(d));
        }
        let edge_set: BTreeSet<(String, String)> =
            g.edges.iter().map(|&(a, b)| (node_id(a), node_id(b))).collect();
        for i in 0..g.n {
            match (expected.get(&i), graph.path_to_method(&node_id(i))) {
                (Some(&d), Ok(path)) => {
                    prop_assert_eq!(path.len() as u32, d + 1);
                    prop_assert_eq!(&path[0], &node_id(0));
                    prop_assert_eq!(path.last().unwrap(), &node_id(i));
                    for w in path.windows(2) {
                        prop_assert!(edge_set.contains(&(w[0].clone(), w[1].clone())));
                    }
                }
                (None, Err(e)) => prop_assert_eq!(e.code(), "NOT_FOUND"),
                (d, p) => prop_assert!(false, "node {}: oracle {:?}, graph {:?}", i, d, p),
            }
        }
        let included: BTreeSet<usize> = expected.keys().copied().collect();
        let from = *from_pick.get(&included.iter().copied().collect::<Vec<_>>());
        let reach = graph.reach_methods(&node_id(from), 2).unwrap();
        let oracle = g.distances_within(&included, from, 2);
        prop_assert_eq!(reach.len(), oracle.len());
        for r in reach {
            let idx = expected.keys().find(|&&i| node_id(i) == r.id).copied().unwrap();
            prop_assert_eq!(oracle.get(&idx), Some(&r.relative_depth));
        }
    }

    #[test]
    fn window_filter_matches_linear_scan(seed in any::<u64>()) {
        let trace = random_trace(&mut ChaCha8Rng::seed_from_u64(seed));
        let targeted = apply_recording_windows(&trace).unwrap();
        let full = aggregate_full(&trace);
        let want_targeted = windowed_counts(&trace, true);
        let want_full = windowed_counts(&trace, false);
        for (report, want) in [(&targeted, &want_targeted), (&full, &want_full)] {
            for m in &report.methods {
                prop_assert_eq!((m.lines_covered, m.branches_covered), want[&m.id]);
                prop_assert!(m.is_consistent());
            }
        }
        for (t, f) in targeted.methods.iter().zip(&full.methods) {
            prop_assert!(t.lines_covered <= f.lines_covered && t.branches_covered <= f.branches_covered);
        }
        let undeclared = trace.events.iter().filter(|e| !trace.totals.iter().any(|t| t.id == e.method)).count();
        prop_assert_eq!(targeted.metadata.dropped_events, undeclared as u64);
    }

    #[test]
    fn merge_and_percent_match_definitions(g in digraph(), raw in prop::collection::vec((0u64..8, 0u64..8, 0u64..5, 0u64..5), 50)) {
        let graph = CallGraph::build(&g.facts(), &node_id(0), 5).unwrap();
        let mut report = CoverageReport::empty(CoverageScope::MethodTargeted);
        for (i, &(lt, lc, bt, bc)) in raw.iter().enumerate().take(g.n) {
            if i % 3 == 2 {
                continue; // some methods are absent from the report
            }
            report.methods.push(MethodCoverage {
                id: node_id(i),
                lines_total: lt,
                lines_covered: lc.min(lt),
                branches_total: bt,
                branches_covered: bc.min(bt),
            });
        }
        let view = merge_with_callgraph(&report, &graph);
        let mut present = Vec::new();
        for e in view.entries() {
            let c = report.method(&e.node.id);
            prop_assert_eq!(e.status, expected_status(c));
            present.extend(c);
        }
        for (metric, lines) in [(Metric::Line, true), (Metric::Branch, false)] {
            let p = coverage_percent(&view, metric).value;
            prop_assert!((0.0..=100.0).contains(&p));
            prop_assert!(close(p, expected_percent(&present, lines)));
        }
    }

    #[test]
    fn normalization_ignores_layout_and_comments(
        tokens in prop::collection::vec(prop::sample::select(vec!["int", "x", "=", "1", ";", "foo", "(", ")", "{", "}", "\"a  b\"", "+"]), 1..40),
        gaps in prop::collection::vec(prop::sample::select(vec![" ", "  ", "\n", "\t", " /* note */ ", " // note\n"]), 40),
    ) {
        let plain = tokens.join(" ");
        let spaced: String = tokens.iter().zip(&gaps).map(|(t, g)| format!("{t}{g}")).collect();
        prop_assert_eq!(normalize_and_hash(&plain), normalize_and_hash(&spaced));
        let once = normalize_source(&spaced);
        prop_assert_eq!(normalize_source(&once), once.clone());
        prop_assert!(once.contains("\"a  b\"") || !plain.contains("\"a  b\""));
    }

    #[test]
    fn dispatch_enforces_the_access_matrix(role_idx in 0usize..5, tool_idx in 0usize..16) {
        let registry = harnessgen::cli::registry_for(&config(std::path::Path::new("/tmp"), &[])).unwrap();
        let role = AgentRole::ALL[role_idx];
        let d = registry.descriptors().nth(tool_idx).unwrap().clone();
        let mut req = ToolRequest::new(&d.name);
        for p in d.params.iter().filter(|p| p.required) {
            req = req.arg(&p.name, "toylib.cli.Parser.parse(Options,String[])");
        }
        let resp = registry.dispatch(role, &req);
        match registry.check_access(role, &d.name).unwrap() {
            AccessLevel::Denied => prop_assert_eq!(resp.error_code(), Some("ACCESS_DENIED")),
            AccessLevel::StaticOnly => prop_assert_eq!(resp.error_code(), Some("NOT_QUERYABLE")),
            AccessLevel::Allowed => prop_assert!(!matches!(resp.error_code(), Some("ACCESS_DENIED" | "NOT_QUERYABLE"))),
        }
        let visible = registry.queryable_tools(role).iter().any(|q| q.name == d.name);
        prop_assert_eq!(visible, d.access_for(role) == AccessLevel::Allowed);
    }

    #[test]
    fn sandbox_is_deterministic_and_capped(picks in prop::collection::vec(any::<bool>(), 7)) {
        let fragments = [
            "import toylib.cli.Parser;",
            "void fuzzerTestOneInput(FuzzedDataProvider d) {",
            "Options options = new Options();",
            "new Parser().parse(options, tokens);",
            "tokens[0] = \"--\" + word;",
            "tokens[1] = \"-\" + word;",
            "options.addOption(\"r\", true);",
        ];
        let src: String = fragments.iter().zip(&picks).filter(|(_, &p)| p).map(|(f, _)| format!("{f}\n")).collect();
        let sandbox = load_sandbox(&toylib().join("sandbox.json")).unwrap().adapter;
        let h = HarnessArtifact::new(src.clone(), vec![]);
        let mut req = FuzzRequest::new(Duration::from_secs(30));
        let mut a = sandbox.fuzz(&h, &req).unwrap();
        let mut b = sandbox.fuzz(&h, &req).unwrap();
        a.wall_seconds = 0.0;
        b.wall_seconds = 0.0;
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        req.scope = CoverageScope::Full;
        let full = sandbox.fuzz(&h, &req).unwrap();
        for (t, f) in a.coverage.methods.iter().zip(&full.coverage.methods) {
            prop_assert!(t.is_consistent() && f.is_consistent());
            prop_assert!(t.lines_covered <= f.lines_covered);
        }
        prop_assert_eq!(&h.source, &src);
        let compiled = sandbox.compile(&h).unwrap();
        prop_assert_eq!(compiled.success, compiled.errors().next().is_none());
    }

    #[test]
    fn crash_keys_ignore_addresses_and_spacing(addr_a in any::<u32>(), addr_b in any::<u32>(), pad in "[ \t]{1,4}") {
        let a = format!("NullPointerException at Foo.bar (input at 0x{addr_a:x})");
        let b = format!("NullPointerException{pad}at Foo.bar  (input at 0x{addr_b:X})");
        prop_assert_eq!(crash_dedup_key(&a), crash_dedup_key(&b));
        prop_assert_ne!(crash_dedup_key(&a), crash_dedup_key("IllegalStateException at Foo.bar"));
    }

    #[test]
    fn output_parsers_never_panic(text in ".{0,300}") {
        let _ = parse_harness_output(&text);
        let _ = parse_termination_decision(&text);
        let _ = parse_research_report(&text);
    }
}

#[test]
fn toolresponse_is_ok_only_without_error_code() {
    let ok = ToolResponse::Ok {
        content: String::new(),
        truncated: false,
    };
    assert!(ok.is_ok() && ok.error_code().is_none());
}
