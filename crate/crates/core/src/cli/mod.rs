//! Command-line surface: `run`, `tools`, `report` and `validate`.
//!
//! Everything goes through [`run_cli`], which takes the argument vector and
//! two writers and returns the process exit code, so the binary stays a
//! one-liner and the commands are testable in-process.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{
    apply_override, AdapterConfig, BudgetsConfig, Config, HttpModelConfig, ModelConfig,
    SandboxConfig, ScriptedConfig, TargetConfig,
};

use crate::callgraph::CallGraph;
use crate::error::{Error, Result};
use crate::orchestrator::{run_workflow, Outcome, RunManifest};
use crate::toolbus::{register_default_tools, AgentRole, ToolRegistry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

const EXIT_CODES_HELP: &str = "Exit codes:
  0  run succeeded or converged; other commands succeeded
  1  invalid arguments, configuration or inputs
  2  run ended with compile_failed or model_failed
  3  run ended with budget_exhausted";

#[derive(Debug, Parser)]
#[command(name = "harnessgen", version, about = "Agent-driven fuzz harness generation", after_help = EXIT_CODES_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full generation workflow and print the run directory.
    Run {
        config: PathBuf,
        /// Override a config value, e.g. `--set budgets.max_rounds=2`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Show which tools each agent role may use.
    Tools {
        config: PathBuf,
        /// Limit the table to one role (RSH, GEN, PAT, CVA, REF).
        #[arg(long)]
        role: Option<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Render the manifest of a finished run.
    Report {
        run_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a config file and list every problem found.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Exit code for a finished run.
pub fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Success | Outcome::Converged => EXIT_OK,
        Outcome::CompileFailed | Outcome::ModelFailed => EXIT_FAILED,
        Outcome::BudgetExhausted => EXIT_BUDGET,
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { config, overrides } => cmd_run(&config, &overrides, out),
        Command::Tools {
            config,
            role,
            overrides,
        } => cmd_tools(&config, role.as_deref(), &overrides, out),
        Command::Report { run_dir, format } => cmd_report(&run_dir, format, out),
        Command::Validate { config, overrides } => cmd_validate(&config, &overrides, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error [{}]: {e}", e.code());
            EXIT_USAGE
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn load_valid(path: &Path, overrides: &[String]) -> Result<Config> {
    let config = Config::load(path, overrides)?;
    let violations = config.violations();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(violations.join("; ")))
    }
}

pub fn cmd_run(path: &Path, overrides: &[String], out: &mut dyn Write) -> Result<i32> {
    let config = load_valid(path, overrides)?;
    let workflow = config.workflow()?;
    let result = run_workflow(&workflow)?;
    let m = &result.manifest;
    writeln!(out, "{}", result.run_dir.display()).map_err(io_err)?;
    writeln!(
        out,
        "outcome: {} ({} rounds)",
        m.outcome.as_str(),
        m.rounds.len()
    )
    .map_err(io_err)?;
    if let Some(e) = &m.error {
        writeln!(out, "error [{}]: {}", e.code, e.message).map_err(io_err)?;
    }
    Ok(exit_code(m.outcome))
}

/// Registry for the configured target, as the agents of a run would see it.
pub fn registry_for(config: &Config) -> Result<ToolRegistry> {
    let (target, docs, code, facts) = config.analysis_inputs()?;
    let graph = CallGraph::build(&facts, &target.method_id(), config.budgets.depth_limit)?;
    register_default_tools(docs, code, Arc::new(graph))
}

/// Access table read back through `check_access`, one line per tool.
pub fn render_tools(registry: &ToolRegistry, roles: &[AgentRole]) -> Result<String> {
    let mut s = format!("{:<18} {:<10}", "tool", "category");
    for r in roles {
        s.push_str(&format!(" {:<12}", r.as_str()));
    }
    let mut lines = vec![s.trim_end().to_string()];
    for d in registry.descriptors() {
        let mut line = format!("{:<18} {:<10}", d.name, d.category.as_str());
        for &r in roles {
            line.push_str(&format!(
                " {:<12}",
                registry.check_access(r, &d.name)?.as_str()
            ));
        }
        lines.push(line.trim_end().to_string());
    }
    Ok(lines.join("\n") + "\n")
}

pub fn cmd_tools(
    path: &Path,
    role: Option<&str>,
    overrides: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let roles = match role {
        Some(r) => vec![r.parse::<AgentRole>()?],
        None => AgentRole::ALL.to_vec(),
    };
    let config = load_valid(path, overrides)?;
    let registry = registry_for(&config)?;
    out.write_all(render_tools(&registry, &roles)?.as_bytes())
        .map_err(io_err)?;
    Ok(EXIT_OK)
}

/// Per-agent accounting in the usual table shape: iterations and tool calls
/// per round joined by `/`, then tokens and cost.
pub fn render_accounting(manifest: &RunManifest) -> String {
    let t = &manifest.accounting;
    let mut s = format!(
        "{:<6} {:<14} {:<14} {:>10} {:>10}\n",
        "Agent", "Iter", "Tools", "Tokens", "Cost"
    );
    for row in &t.rows {
        s.push_str(&format!(
            "{:<6} {:<14} {:<14} {:>10} {:>10.4}\n",
            row.agent,
            row.iterations_cell(),
            row.tool_calls_cell(),
            row.tokens(),
            row.cost
        ));
    }
    s.push_str(&format!(
        "{:<6} {:<14} {:<14} {:>10} {:>10.4}\n",
        "Total",
        t.total_iterations,
        t.total_tool_calls,
        t.total_tokens(),
        t.total_cost
    ));
    s
}

pub fn render_text_report(manifest: &RunManifest) -> String {
    let mut s = format!(
        "Target: {} {} {}\nEcosystem: {}\nOutcome: {} (final phase {})\n",
        manifest.target.library_name,
        manifest.target.library_version,
        manifest.target.method_id(),
        manifest.ecosystem,
        manifest.outcome.as_str(),
        manifest.final_phase
    );
    if let Some(e) = &manifest.error {
        s.push_str(&format!("Error: [{}] {}\n", e.code, e.message));
    }
    s.push('\n');
    s.push_str(&render_accounting(manifest));
    s.push('\n');
    s.push_str(&format!(
        "{:<6} {:>8} {:>8} {:<13} {:>8} {:>7}  {}\n",
        "Round", "Line%", "Branch%", "Decision", "Crashes", "Unique", "Harness"
    ));
    for r in &manifest.rounds {
        s.push_str(&format!(
            "{:<6} {:>8.2} {:>8.2} {:<13} {:>8} {:>7}  {}{}\n",
            r.round,
            r.line_pct,
            r.branch_pct,
            r.decision,
            r.crash_count,
            r.unique_crashes,
            &r.harness_hash[..r.harness_hash.len().min(12)],
            if r.fuzz_timeout {
                " (fuzz timeout)"
            } else {
                ""
            }
        ));
    }
    if !manifest.crashes.is_empty() {
        s.push_str("\nUnique crashes:\n");
        for c in &manifest.crashes {
            s.push_str(&format!(
                "  {} x{} first in round {}: {}\n",
                &c.dedup_key[..c.dedup_key.len().min(12)],
                c.occurrences,
                c.first_round,
                c.summary
            ));
        }
    }
    s
}

pub const CSV_HEADER: &str = "round,line_pct,branch_pct,decision,crashes";

/// One line per round. Floats use their shortest exact representation so
/// the values parse back unchanged.
pub fn render_csv(manifest: &RunManifest) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in &manifest.rounds {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.round, r.line_pct, r.branch_pct, r.decision, r.crash_count
        ));
    }
    s
}

pub fn cmd_report(run_dir: &Path, format: Format, out: &mut dyn Write) -> Result<i32> {
    let path = run_dir.join("manifest.json");
    let raw = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest = RunManifest::load(run_dir)?;
    match format {
        Format::Json => out.write_all(&raw),
        Format::Csv => out.write_all(render_csv(&manifest).as_bytes()),
        Format::Text => out.write_all(render_text_report(&manifest).as_bytes()),
    }
    .map_err(io_err)?;
    Ok(EXIT_OK)
}

pub fn cmd_validate(path: &Path, overrides: &[String], out: &mut dyn Write) -> Result<i32> {
    let config = Config::load(path, overrides)?;
    let violations = config.violations();
    if violations.is_empty() {
        writeln!(out, "{}: ok", path.display()).map_err(io_err)?;
        return Ok(EXIT_OK);
    }
    writeln!(out, "{}: {} problem(s)", path.display(), violations.len()).map_err(io_err)?;
    for v in &violations {
        writeln!(out, "  {v}").map_err(io_err)?;
    }
    Ok(EXIT_USAGE)
}
