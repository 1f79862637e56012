use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::manifest::{Language, Metadata};
use crate::toylang::{self, ast::Program, Diagnostic, Limits, RunMetrics, RunResult, RunStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Capabilities {
    /// Metrics are exact step and cell counts rather than wall time and RSS.
    pub deterministic_metrics: bool,
}

/// Something that can turn source into runnable form and execute it.
pub trait Runner: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    /// Compiles `source`. A diagnostic here means no test will run.
    fn prepare(&self, source: &str) -> Result<Box<dyn Prepared + '_>, Diagnostic>;
}

pub trait Prepared {
    fn run(&self, input: &str, limits: &Limits) -> RunResult;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ToyRunner;

struct ToyProgram(Program);

impl Prepared for ToyProgram {
    fn run(&self, input: &str, limits: &Limits) -> RunResult {
        toylang::execute(&self.0, input, limits)
    }
}

impl Runner for ToyRunner {
    fn capabilities(&self) -> Capabilities {
        Capabilities { deterministic_metrics: true }
    }

    fn prepare(&self, source: &str) -> Result<Box<dyn Prepared + '_>, Diagnostic> {
        Ok(Box::new(ToyProgram(toylang::compile(source)?)))
    }
}

/// Runs a real toolchain through a command template.
///
/// `{source}` in any argument is replaced by the path of the written source
/// file. Input is fed on stdin and stdout is captured. Metrics are advisory:
/// `steps` holds wall-clock milliseconds and `peak_cells` peak RSS in bytes.
/// The commands run with the judge's own privileges, so only trusted
/// authors should configure them.
#[derive(Debug, Clone)]
pub struct ExternalRunner {
    pub compile: Option<Vec<String>>,
    pub run: Vec<String>,
    pub source_file: String,
    pub timeout: Duration,
}

impl ExternalRunner {
    /// Builds a runner from a whitespace-separated run command template.
    pub fn from_template(run: &str) -> Self {
        ExternalRunner {
            compile: None,
            run: run.split_whitespace().map(str::to_string).collect(),
            source_file: "main".to_string(),
            timeout: Duration::from_secs(5),
        }
    }

    pub fn with_compile(mut self, compile: &str) -> Self {
        self.compile = Some(compile.split_whitespace().map(str::to_string).collect());
        self
    }

    pub fn with_source_file(mut self, name: impl Into<String>) -> Self {
        self.source_file = name.into();
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

struct ExternalProgram<'a> {
    runner: &'a ExternalRunner,
    // keeps the directory alive while tests run
    _dir: tempfile::TempDir,
    source_path: PathBuf,
}

fn expand(template: &[String], source: &str) -> Option<Command> {
    let (program, args) = template.split_first()?;
    let mut cmd = Command::new(program.replace("{source}", source));
    cmd.args(args.iter().map(|a| a.replace("{source}", source)));
    Some(cmd)
}

fn process_error(message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(1, 1, message)
}

impl Runner for ExternalRunner {
    fn capabilities(&self) -> Capabilities {
        Capabilities { deterministic_metrics: false }
    }

    fn prepare(&self, source: &str) -> Result<Box<dyn Prepared + '_>, Diagnostic> {
        let dir = tempfile::tempdir().map_err(|e| process_error(format!("cannot create work dir: {e}")))?;
        let source_path = dir.path().join(&self.source_file);
        std::fs::write(&source_path, source).map_err(|e| process_error(format!("cannot write source: {e}")))?;
        if let Some(template) = &self.compile {
            let path = source_path.to_string_lossy();
            let mut cmd = expand(template, &path).ok_or_else(|| process_error("empty compile command"))?;
            let out = cmd
                .current_dir(dir.path())
                .stdin(Stdio::null())
                .output()
                .map_err(|e| process_error(format!("cannot start compiler: {e}")))?;
            if !out.status.success() {
                let stderr = String::from_utf8_lossy(&out.stderr);
                let first = stderr.lines().next().unwrap_or("compilation failed");
                return Err(process_error(first.to_string()));
            }
        }
        Ok(Box::new(ExternalProgram { runner: self, _dir: dir, source_path }))
    }
}

impl Prepared for ExternalProgram<'_> {
    fn run(&self, input: &str, _limits: &Limits) -> RunResult {
        let failed = |message: String| RunResult {
            status: RunStatus::RuntimeError(process_error(message)),
            output: String::new(),
            metrics: RunMetrics::default(),
        };
        let path = self.source_path.to_string_lossy();
        let Some(mut cmd) = expand(&self.runner.run, &path) else {
            return failed("empty run command".to_string());
        };
        if let Some(dir) = self.source_path.parent() {
            cmd.current_dir(dir);
        }
        let mut child = match cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::null()).spawn() {
            Ok(c) => c,
            Err(e) => return failed(format!("cannot start program: {e}")),
        };
        let started = Instant::now();
        let mut stdin = child.stdin.take().expect("piped stdin");
        let input = input.to_string();
        let feeder = thread::spawn(move || {
            // a program that exits without reading closes the pipe early
            let _ = stdin.write_all(input.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });

        let waited = wait_with_timeout(&mut child, self.runner.timeout);
        let elapsed = started.elapsed().as_millis() as u64;
        let _ = feeder.join();
        let output = String::from_utf8_lossy(&reader.join().unwrap_or_default()).into_owned();
        let (status, rss) = match waited {
            Wait::Exited { success: true, rss, .. } => (RunStatus::Ok, rss),
            Wait::Exited { code, rss, .. } => (
                RunStatus::RuntimeError(process_error(match code {
                    Some(c) => format!("exited with status {c}"),
                    None => "terminated by signal".to_string(),
                })),
                rss,
            ),
            Wait::TimedOut => (RunStatus::StepLimit, 0),
            Wait::Failed(e) => (RunStatus::RuntimeError(process_error(e)), 0),
        };
        RunResult { status, output, metrics: RunMetrics { steps: elapsed, peak_cells: rss, trace: Default::default() } }
    }
}

enum Wait {
    Exited { success: bool, code: Option<i32>, rss: u64 },
    TimedOut,
    Failed(String),
}

#[cfg(unix)]
fn wait_with_timeout(child: &mut std::process::Child, timeout: Duration) -> Wait {
    let pid = child.id() as libc::pid_t;
    let deadline = Instant::now() + timeout;
    loop {
        let mut status: libc::c_int = 0;
        // SAFETY: rusage is plain data and fully written by wait4 on success.
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        // SAFETY: pid is our own unreaped child; pointers are valid for the call.
        let reaped = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
        if reaped == pid {
            let code = libc::WIFEXITED(status).then(|| libc::WEXITSTATUS(status));
            return Wait::Exited { success: code == Some(0), code, rss: (usage.ru_maxrss as u64).saturating_mul(1024) };
        }
        if reaped < 0 {
            return Wait::Failed(std::io::Error::last_os_error().to_string());
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            // SAFETY: reap the killed child so it does not linger as a zombie.
            unsafe { libc::waitpid(pid, &mut status, 0) };
            return Wait::TimedOut;
        }
        thread::sleep(Duration::from_millis(2));
    }
}

#[cfg(not(unix))]
fn wait_with_timeout(child: &mut std::process::Child, timeout: Duration) -> Wait {
    let deadline = Instant::now() + timeout;
    loop {
        match child.try_wait() {
            Ok(Some(status)) => return Wait::Exited { success: status.success(), code: status.code(), rss: 0 },
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Wait::TimedOut;
            }
            Ok(None) => thread::sleep(Duration::from_millis(2)),
            Err(e) => return Wait::Failed(e.to_string()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("unsupported language '{0}'")]
    UnknownLanguage(String),
    #[error("no external runner configured for '{0}'")]
    UnknownRunner(String),
}

/// The toy runner plus any configured external runners, by name.
#[derive(Debug, Default, Clone)]
pub struct RunnerSet {
    toy: ToyRunner,
    external: HashMap<String, ExternalRunner>,
}

impl RunnerSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_external(mut self, name: impl Into<String>, runner: ExternalRunner) -> Self {
        self.external.insert(name.into(), runner);
        self
    }

    pub fn for_metadata(&self, metadata: &Metadata) -> Result<&dyn Runner, RunnerError> {
        match metadata.language() {
            Some(Language::Toy) => Ok(&self.toy),
            Some(Language::External(name)) => self
                .external
                .get(name)
                .map(|r| r as &dyn Runner)
                .ok_or_else(|| RunnerError::UnknownRunner(name.to_string())),
            None => Err(RunnerError::UnknownLanguage(metadata.language.clone())),
        }
    }
}
