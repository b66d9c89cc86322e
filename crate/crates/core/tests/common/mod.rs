#![allow(dead_code)]

pub mod oracles;

use std::path::{Path, PathBuf};

use harnessgen::cli::Config;
use harnessgen::model::{ScriptTurn, ScriptedBackend};
use harnessgen::orchestrator::{Budgets, RunManifest, Workflow};

pub const TARGET: &str = "toylib.cli.Parser.parse(Options,String[])";

pub fn toylib() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/toylib")
}

pub fn demo_config() -> PathBuf {
    toylib().join("config.json")
}

/// Harness reaching only plain arguments.
pub const PLAIN: &str = r#"import toylib.cli.*;
public class Harness {
    public static void fuzzerTestOneInput(FuzzedDataProvider data) {
        Options options = new Options();
        options.addOption("a", false);
        try {
            new Parser().parse(options, data.consumeRemainingAsString().split(" "));
        } catch (ParseException expected) {
        }
    }
}"#;

/// Harness that also builds long and short option tokens.
pub const OPTIONS: &str = r#"import toylib.cli.*;
public class Harness {
    public static void fuzzerTestOneInput(FuzzedDataProvider data) {
        Options options = new Options();
        options.addOption("a", false).addOption("verbose", false);
        String word = data.consumeString(6);
        String[] tokens = {"--" + word, "-" + word, data.consumeRemainingAsString()};
        try {
            new Parser().parse(options, tokens);
        } catch (ParseException expected) {
        }
    }
}"#;

/// Calls `parse` with the wrong arity; the sandbox rejects it.
pub const WRONG_ARITY: &str = r#"import toylib.cli.*;
public class Harness {
    public static void fuzzerTestOneInput(FuzzedDataProvider data) {
        String[] args = data.consumeRemainingAsString().split(" ");
        new Parser().parse(args);
    }
}"#;

pub fn fenced(source: &str) -> String {
    format!("```java\n{source}\n```")
}

pub fn research_report() -> String {
    harnessgen::agents::RESEARCH_SECTIONS
        .iter()
        .map(|s| format!("## {s}\nNotes on {s}.\n"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn stop() -> ScriptTurn {
    ScriptTurn::text(
        r#"{"decision": "stop", "rationale": "remaining gaps unreachable", "priority_methods": [], "strategy": ""}"#,
    )
}

pub fn cont() -> ScriptTurn {
    ScriptTurn::text(
        r#"```json
{"decision": "continue", "rationale": "option paths uncovered", "priority_methods": ["toylib.cli.Parser.handleLongOption(String)"], "strategy": "add option tokens"}
```"#,
    )
}

pub fn harness(source: &str) -> ScriptTurn {
    ScriptTurn::text(fenced(source))
}

/// Research and generation turns, ending with `first` as the generated harness.
pub fn opening(first: &str) -> Vec<ScriptTurn> {
    vec![ScriptTurn::text(research_report()), harness(first)]
}

/// The bundled demo config, writing under `out`.
pub fn config(out: &Path, overrides: &[&str]) -> Config {
    let mut all = vec![format!("output_dir={}", out.display())];
    all.extend(overrides.iter().map(|s| s.to_string()));
    Config::load(&demo_config(), &all).expect("demo config loads")
}

pub fn demo_workflow(out: &Path) -> Workflow {
    config(out, &[]).workflow().expect("demo workflow builds")
}

/// Demo target and sandbox driven by `turns` instead of the bundled script.
pub fn scripted_workflow(
    out: &Path,
    turns: Vec<ScriptTurn>,
    budgets: impl FnOnce(&mut Budgets),
) -> Workflow {
    let mut wf = demo_workflow(out);
    wf.backend = Box::new(ScriptedBackend::new(turns).expect("valid script"));
    budgets(&mut wf.budgets);
    wf
}

/// Manifest JSON with the wall-clock fields blanked.
pub fn comparable(manifest: &RunManifest) -> String {
    let mut m = manifest.clone();
    m.timings.clear();
    m.started_at.clear();
    serde_json::to_string_pretty(&m).unwrap()
}
