//! Adapter that drives a real toolchain through shell commands.
//!
//! Commands run under `sh -c` inside the work directory, with `{harness}`,
//! `{duration}` and `{corpus}` substituted. The fuzz command is expected to
//! leave a coverage report (same JSON layout as [`CoverageReport`]) at
//! `coverage_out` and crash reproducers under `crash_dir`.

use std::fs;
use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CompileResult, Crash, Diagnostic, Ecosystem, FuzzRequest, FuzzResult, Severity};
use crate::agents::HarnessArtifact;
use crate::coverage::CoverageReport;
use crate::error::{Error, Result};

fn default_diagnostic_pattern() -> String {
    r"(?m)^(?P<file>[^:\s]+):(?P<line>\d+):(?:\d+:)?\s*(?:(?P<severity>error|warning|note):)?\s*(?P<message>.+)$"
        .to_string()
}

fn default_harness_file() -> String {
    "Harness.java".to_string()
}

fn default_grace() -> u64 {
    30
}

fn default_executions_pattern() -> String {
    r"(?i)executions?\s*[:=]\s*(\d+)".to_string()
}

fn default_entrypoint() -> String {
    "fuzzerTestOneInput".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellConfig {
    pub compile_cmd: String,
    pub fuzz_cmd: String,
    pub work_dir: PathBuf,
    /// File name the harness source is written to inside `work_dir`.
    #[serde(default = "default_harness_file")]
    pub harness_file: String,
    /// Regex with named groups `file`, `line`, `message` and optionally
    /// `severity`.
    #[serde(default = "default_diagnostic_pattern")]
    pub diagnostic_pattern: String,
    pub coverage_out: PathBuf,
    #[serde(default)]
    pub crash_dir: Option<PathBuf>,
    #[serde(default = "default_executions_pattern")]
    pub executions_pattern: String,
    /// Seconds the fuzz command may overrun its duration before being killed.
    #[serde(default = "default_grace")]
    pub grace_seconds: u64,
    #[serde(default = "default_entrypoint")]
    pub entrypoint: String,
}

impl ShellConfig {
    pub fn new(compile_cmd: &str, fuzz_cmd: &str, work_dir: &Path, coverage_out: &Path) -> Self {
        ShellConfig {
            compile_cmd: compile_cmd.to_string(),
            fuzz_cmd: fuzz_cmd.to_string(),
            work_dir: work_dir.to_path_buf(),
            harness_file: default_harness_file(),
            diagnostic_pattern: default_diagnostic_pattern(),
            coverage_out: coverage_out.to_path_buf(),
            crash_dir: None,
            executions_pattern: default_executions_pattern(),
            grace_seconds: default_grace(),
            entrypoint: default_entrypoint(),
        }
    }
}

pub struct ShellAdapter {
    config: ShellConfig,
    diagnostic_re: Regex,
    executions_re: Regex,
}

struct Finished {
    status: Option<ExitStatus>,
    output: String,
}

impl ShellAdapter {
    pub fn new(config: ShellConfig) -> Result<Self> {
        let compile = |p: &str, what: &str| {
            Regex::new(p).map_err(|e| Error::Config(format!("invalid {what} {p:?}: {e}")))
        };
        let diagnostic_re = compile(&config.diagnostic_pattern, "diagnostic_pattern")?;
        for group in ["file", "line", "message"] {
            if diagnostic_re.capture_names().flatten().all(|n| n != group) {
                return Err(Error::Config(format!(
                    "diagnostic_pattern lacks a named group {group:?}"
                )));
            }
        }
        let executions_re = compile(&config.executions_pattern, "executions_pattern")?;
        Ok(ShellAdapter {
            config,
            diagnostic_re,
            executions_re,
        })
    }

    pub fn config(&self) -> &ShellConfig {
        &self.config
    }

    fn write_harness(&self, harness: &HarnessArtifact) -> Result<PathBuf> {
        fs::create_dir_all(&self.config.work_dir)
            .map_err(|e| Error::io(&self.config.work_dir, e))?;
        let path = self.config.work_dir.join(&self.config.harness_file);
        fs::write(&path, &harness.source).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn substitute(&self, template: &str, harness: &Path, request: Option<&FuzzRequest>) -> String {
        let mut cmd = template.replace("{harness}", &harness.display().to_string());
        if let Some(r) = request {
            cmd = cmd.replace("{duration}", &r.duration.as_secs().to_string());
            let corpus = r
                .seed_corpus
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default();
            cmd = cmd.replace("{corpus}", &corpus);
        }
        cmd
    }

    fn spawn(&self, cmd: &str) -> Result<Child> {
        Command::new("sh")
            .arg("-c")
            .arg(cmd)
            // own process group, so a timeout can kill the whole pipeline
            .process_group(0)
            .current_dir(&self.config.work_dir)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Exec(format!("cannot start sh: {e}")))
    }

    /// Runs `cmd`, killing it after `limit`. `status` is `None` on timeout.
    fn run(&self, cmd: &str, limit: Option<Duration>) -> Result<Finished> {
        let mut child = self.spawn(cmd)?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let err_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });
        let started = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait().map_err(|e| Error::Exec(e.to_string()))? {
                break Some(status);
            }
            if limit.is_some_and(|l| started.elapsed() > l) {
                // SAFETY: the child leads its own process group, created in spawn
                unsafe {
                    libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
                }
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            std::thread::sleep(Duration::from_millis(20));
        };
        let mut output =
            String::from_utf8_lossy(&out_reader.join().unwrap_or_default()).into_owned();
        output.push_str(&String::from_utf8_lossy(
            &err_reader.join().unwrap_or_default(),
        ));
        if let Some(s) = status {
            if s.code() == Some(127) {
                return Err(Error::Exec(format!(
                    "command not found: {cmd}: {}",
                    output.trim()
                )));
            }
        }
        Ok(Finished { status, output })
    }

    pub(crate) fn parse_diagnostics(&self, output: &str, failed: bool) -> Vec<Diagnostic> {
        self.diagnostic_re
            .captures_iter(output)
            .map(|c| {
                let severity = match c.name("severity").map(|m| m.as_str()) {
                    Some("warning") => Severity::Warning,
                    Some("note") => Severity::Note,
                    Some(_) => Severity::Error,
                    None if failed => Severity::Error,
                    None => Severity::Warning,
                };
                Diagnostic {
                    file: c["file"].to_string(),
                    line: c["line"].parse().unwrap_or(0),
                    message: c["message"].trim().to_string(),
                    // a successful build cannot carry errors
                    severity: if failed {
                        severity
                    } else {
                        severity.max(Severity::Warning)
                    },
                }
            })
            .collect()
    }

    fn collect_crashes(&self) -> Result<Vec<Crash>> {
        let Some(dir) = &self.config.crash_dir else {
            return Ok(Vec::new());
        };
        let dir = self.config.work_dir.join(dir);
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        paths
            .into_iter()
            .map(|p| {
                let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
                let text = String::from_utf8_lossy(&bytes);
                let summary = text
                    .lines()
                    .find(|l| !l.trim().is_empty())
                    .unwrap_or("crash")
                    .trim()
                    .to_string();
                Ok(Crash::new(p.display().to_string(), summary))
            })
            .collect()
    }

    fn executions(&self, output: &str) -> u64 {
        self.executions_re
            .captures_iter(output)
            .last()
            .and_then(|c| c.get(1)?.as_str().parse().ok())
            .unwrap_or(0)
    }

    fn coverage_path(&self) -> PathBuf {
        self.config.work_dir.join(&self.config.coverage_out)
    }
}

impl Ecosystem for ShellAdapter {
    fn name(&self) -> &str {
        "shell"
    }

    fn entrypoint(&self) -> &str {
        &self.config.entrypoint
    }

    fn compile(&self, harness: &HarnessArtifact) -> Result<CompileResult> {
        let path = self.write_harness(harness)?;
        let cmd = self.substitute(&self.config.compile_cmd, &path, None);
        let done = self.run(&cmd, None)?;
        let success = done.status.is_some_and(|s| s.success());
        let mut diagnostics = self.parse_diagnostics(&done.output, !success);
        if !success && diagnostics.is_empty() {
            let tail: Vec<&str> = done.output.lines().rev().take(5).collect();
            let tail: Vec<&str> = tail.into_iter().rev().collect();
            diagnostics.push(Diagnostic {
                file: self.config.harness_file.clone(),
                line: 0,
                message: format!(
                    "compiler failed ({:?}): {}",
                    done.status.and_then(|s| s.code()),
                    tail.join(" | ")
                ),
                severity: Severity::Error,
            });
        }
        Ok(CompileResult {
            success,
            diagnostics,
        })
    }

    fn fuzz(&self, harness: &HarnessArtifact, request: &FuzzRequest) -> Result<FuzzResult> {
        let path = self.write_harness(harness)?;
        let coverage_path = self.coverage_path();
        if coverage_path.exists() {
            fs::remove_file(&coverage_path).map_err(|e| Error::io(&coverage_path, e))?;
        }
        let cmd = self.substitute(&self.config.fuzz_cmd, &path, Some(request));
        let started = Instant::now();
        let limit = request.duration + Duration::from_secs(self.config.grace_seconds);
        let done = self.run(&cmd, Some(limit))?;
        let wall_seconds = started.elapsed().as_secs_f64();
        let partial = |coverage: CoverageReport| -> Result<FuzzResult> {
            Ok(FuzzResult {
                coverage,
                crashes: self.collect_crashes()?,
                executions: self.executions(&done.output),
                wall_seconds,
                trace: None,
            })
        };
        match done.status {
            None => {
                let partial = match CoverageReport::load(&coverage_path) {
                    Ok(report) => Some(Box::new(partial(report)?)),
                    Err(_) => None,
                };
                Err(Error::FuzzTimeout { partial })
            }
            Some(status) => {
                if !coverage_path.exists() {
                    return Err(Error::Exec(format!(
                        "fuzz command exited with {status} without writing {}: {}",
                        coverage_path.display(),
                        done.output.trim()
                    )));
                }
                partial(CoverageReport::load(&coverage_path)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn adapter(dir: &TempDir, compile: &str, fuzz: &str) -> ShellAdapter {
        let mut cfg = ShellConfig::new(compile, fuzz, dir.path(), Path::new("cov.json"));
        cfg.grace_seconds = 0;
        cfg.crash_dir = Some(PathBuf::from("crashes"));
        ShellAdapter::new(cfg).unwrap()
    }

    fn harness() -> HarnessArtifact {
        HarnessArtifact::new("class H {}", vec![])
    }

    #[test]
    fn compile_parses_diagnostics() {
        let dir = TempDir::new().unwrap();
        let a = adapter(
            &dir,
            "echo 'Harness.java:3: error: cannot find symbol Foo' >&2; exit 1",
            "true",
        );
        let r = a.compile(&harness()).unwrap();
        assert!(!r.success);
        assert_eq!(r.diagnostics.len(), 1);
        assert_eq!(r.diagnostics[0].line, 3);
        assert_eq!(r.diagnostics[0].message, "cannot find symbol Foo");
        assert!(dir.path().join("Harness.java").exists());

        let ok = adapter(&dir, "echo 'Harness.java:1: warning: unchecked'", "true");
        let r = ok.compile(&harness()).unwrap();
        assert!(r.success);
        assert_eq!(r.diagnostics[0].severity, Severity::Warning);
    }

    #[test]
    fn missing_command_is_exec_error() {
        let dir = TempDir::new().unwrap();
        let a = adapter(&dir, "definitely-not-a-real-command-xyz", "true");
        assert_eq!(a.compile(&harness()).unwrap_err().code(), "EXEC");
    }

    #[test]
    fn fuzz_reads_coverage_and_crashes() {
        let dir = TempDir::new().unwrap();
        let script = r#"mkdir -p crashes; echo 'boom at 0x10' > crashes/a; echo 'boom at 0x20' > crashes/b;
            echo '{"scope":"method_targeted","campaign_seconds":{duration},"methods":[]}' > cov.json; echo executions: 42"#;
        let a = adapter(&dir, "true", script);
        let r = a
            .fuzz(&harness(), &FuzzRequest::new(Duration::from_secs(1)))
            .unwrap();
        assert_eq!(r.executions, 42);
        assert_eq!(r.coverage.campaign_seconds, 1.0);
        assert_eq!(r.crashes.len(), 2);
        assert_eq!(r.unique_crashes().len(), 1);
    }

    #[test]
    fn overrun_is_fuzz_timeout_with_partial() {
        let dir = TempDir::new().unwrap();
        let script = r#"echo '{"scope":"method_targeted","campaign_seconds":0,"methods":[]}' > cov.json; sleep 5"#;
        let a = adapter(&dir, "true", script);
        let err = a
            .fuzz(&harness(), &FuzzRequest::new(Duration::from_secs(1)))
            .unwrap_err();
        match err {
            Error::FuzzTimeout { partial } => assert!(partial.is_some()),
            other => panic!("unexpected {other:?}"),
        }
    }
}
