//! The whole workflow on the bundled toylib demo: research, generation,
//! compilation, fuzzing and one refinement round, driven by a scripted
//! model. Writes a run directory under a temporary location and prints the
//! report.

use std::path::Path;

use harnessgen::cli::{render_text_report, Config};
use harnessgen::orchestrator::run_workflow;

fn main() -> harnessgen::Result<()> {
    let config_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/toylib/config.json");
    let out = std::env::temp_dir().join("harnessgen-demo");
    let config = Config::load(&config_path, &[format!("output_dir={}", out.display())])?;

    let result = run_workflow(&config.workflow()?)?;
    println!("run directory: {}\n", result.run_dir.display());
    print!("{}", render_text_report(&result.manifest));
    let last = std::fs::read_to_string(result.run_dir.join(format!(
        "harness/v{}.src",
        result.manifest.harness_versions.len()
    )))
    .map_err(|e| harnessgen::Error::io(&result.run_dir, e))?;
    println!("\nfinal harness:\n{last}");
    Ok(())
}
