//! Compiling and fuzzing harness variants in the toylib sandbox.

use std::path::Path;
use std::time::Duration;

use harnessgen::agents::HarnessArtifact;
use harnessgen::coverage::{coverage_percent, CoverageScope, Metric};
use harnessgen::ecosystem::{load_sandbox, Ecosystem, FuzzRequest};

const PLAIN: &str = r#"import toylib.cli.*;
class Harness {
    static void fuzzerTestOneInput(FuzzedDataProvider d) {
        Options options = new Options();
        options.addOption("a", false);
        new Parser().parse(options, d.consumeRemainingAsString().split(" "));
    }
}
"#;

fn main() -> harnessgen::Result<()> {
    let sandbox =
        load_sandbox(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/toylib/sandbox.json"))?
            .adapter;

    let broken = HarnessArtifact::new(PLAIN.replace("parse(options, ", "parse("), vec![]);
    for d in sandbox.compile(&broken)?.diagnostics {
        println!("{}", d.render());
    }

    let options = PLAIN.replace(
        "d.consumeRemainingAsString().split(\" \")",
        "new String[] {\"-\" + d.consumeString(4), d.consumeRemainingAsString()}",
    );
    for (name, src) in [("plain", PLAIN.to_string()), ("short options", options)] {
        let harness = HarnessArtifact::new(src, vec![]);
        assert!(sandbox.compile(&harness)?.success);
        for scope in [CoverageScope::MethodTargeted, CoverageScope::Full] {
            let mut req = FuzzRequest::new(Duration::from_secs(60));
            req.scope = scope;
            let r = sandbox.fuzz(&harness, &req)?;
            println!(
                "{name:<14} {scope:?}: {:.1}% lines, {} executions, {} crashes ({} unique)",
                coverage_percent(&r.coverage, Metric::Line).value,
                r.executions,
                r.crashes.len(),
                r.unique_crashes().len()
            );
        }
    }
    Ok(())
}
