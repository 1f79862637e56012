//! Dynamic and static evaluation of submissions.
//!
//! Dynamic evaluation compiles the reconstructed program once and runs it
//! over every test case, even after a failure, so feedback and the weighted
//! pass fraction are always complete. Static evaluation looks at tokens
//! only, which keeps keywords written inside comments from counting, and
//! uses the runtime construct trace to tell whether a keyword's construct
//! actually executed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::assembly::{self, DirectAnswer, Payload, Reconstructed, ReconstructedProgram};
use crate::manifest::{
    manifest_fingerprint, AnswerKey, CheckKind, Comparison, ExerciseManifest, ExerciseType, KeywordSpec, TestSuite,
    ToolsConfig, Visibility,
};
use crate::toylang::{tokenize, ConstructKind, Diagnostic, RunMetrics, RunStatus};

mod runner;

pub use runner::{Capabilities, ExternalRunner, Prepared, Runner, RunnerError, RunnerSet, ToyRunner};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    WrongAnswer,
    CompileError(Diagnostic),
    RuntimeError,
    TimeLimit,
    MemoryLimit,
    NotImproved,
    PayloadError,
}

/// Outcome without its payload, for logs and histories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Accepted,
    WrongAnswer,
    CompileError,
    RuntimeError,
    TimeLimit,
    MemoryLimit,
    NotImproved,
    PayloadError,
}

impl Outcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            Outcome::Accepted => OutcomeKind::Accepted,
            Outcome::WrongAnswer => OutcomeKind::WrongAnswer,
            Outcome::CompileError(_) => OutcomeKind::CompileError,
            Outcome::RuntimeError => OutcomeKind::RuntimeError,
            Outcome::TimeLimit => OutcomeKind::TimeLimit,
            Outcome::MemoryLimit => OutcomeKind::MemoryLimit,
            Outcome::NotImproved => OutcomeKind::NotImproved,
            Outcome::PayloadError => OutcomeKind::PayloadError,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, Outcome::Accepted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Passed,
    WrongAnswer,
    RuntimeError,
    TimeLimit,
    MemoryLimit,
}

impl TestStatus {
    fn outcome(self) -> Outcome {
        match self {
            TestStatus::Passed => Outcome::Accepted,
            TestStatus::WrongAnswer => Outcome::WrongAnswer,
            TestStatus::RuntimeError => Outcome::RuntimeError,
            TestStatus::TimeLimit => Outcome::TimeLimit,
            TestStatus::MemoryLimit => Outcome::MemoryLimit,
        }
    }
}

/// Result of one test case. Outputs are only carried for public tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub visibility: Visibility,
    pub pass: bool,
    pub status: TestStatus,
    pub message: Option<String>,
    pub steps: u64,
    pub peak_cells: u64,
    pub output: Option<String>,
    pub expected_output: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordHit {
    pub present_outside_comments: bool,
    pub executed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "token", rename_all = "snake_case")]
pub enum StaticViolation {
    ForbiddenToken(String),
    RequiredTokenMissing(String),
}

impl fmt::Display for StaticViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StaticViolation::ForbiddenToken(t) => write!(f, "forbidden token '{t}' found"),
            StaticViolation::RequiredTokenMissing(t) => write!(f, "required token '{t}' missing"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticReport {
    /// Non-whitespace characters outside comments.
    pub effective_length: u64,
    /// Lines holding at least one token.
    pub line_count: u64,
    pub token_count: u64,
    pub keyword_hits: BTreeMap<String, KeywordHit>,
    pub violations: Vec<StaticViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub per_test: Vec<TestResult>,
    pub pass_fraction: f64,
    pub metrics: RunMetrics,
    pub static_report: StaticReport,
    pub first_failed_public_test: Option<String>,
    pub baseline_pass_fraction: Option<f64>,
    pub message: Option<String>,
}

impl Verdict {
    fn bare(outcome: Outcome) -> Self {
        Verdict {
            outcome,
            per_test: Vec::new(),
            pass_fraction: 0.0,
            metrics: RunMetrics::default(),
            static_report: StaticReport::default(),
            first_failed_public_test: None,
            baseline_pass_fraction: None,
            message: None,
        }
    }

    pub fn payload_error(message: impl Into<String>) -> Self {
        Verdict { message: Some(message.into()), ..Verdict::bare(Outcome::PayloadError) }
    }
}

/// `exact` is the identity; `trimmed` turns CRLF into LF, strips trailing
/// whitespace from each line and drops trailing blank lines.
pub fn normalize_output(text: &str, policy: Comparison) -> String {
    match policy {
        Comparison::Exact => text.to_string(),
        Comparison::Trimmed => {
            let unified = text.replace("\r\n", "\n");
            let mut lines: Vec<&str> = unified.split('\n').map(str::trim_end).collect();
            while lines.last().is_some_and(|l| l.is_empty()) {
                lines.pop();
            }
            lines.join("\n")
        }
    }
}

/// Runs the program over every case of the suite.
///
/// The static report is left empty; [`judge_code`] fills it in.
pub fn run_dynamic(program: &ReconstructedProgram, suite: &TestSuite, runner: &dyn Runner) -> Verdict {
    let prepared = match runner.prepare(&program.source) {
        Ok(p) => p,
        Err(diag) => return Verdict::bare(Outcome::CompileError(diag)),
    };
    let mut per_test = Vec::with_capacity(suite.cases.len());
    let mut metrics = RunMetrics::default();
    let (mut passed_weight, mut total_weight) = (0.0, 0.0);
    for case in &suite.cases {
        let run = prepared.run(&case.input, &suite.limits);
        metrics.steps = metrics.steps.max(run.metrics.steps);
        metrics.peak_cells = metrics.peak_cells.max(run.metrics.peak_cells);
        metrics.trace.extend(run.metrics.trace.iter().copied());
        let (status, message) = match &run.status {
            RunStatus::Ok => {
                let same = normalize_output(&run.output, suite.comparison)
                    == normalize_output(&case.expected_output, suite.comparison);
                (if same { TestStatus::Passed } else { TestStatus::WrongAnswer }, None)
            }
            RunStatus::RuntimeError(d) => (TestStatus::RuntimeError, Some(d.to_string())),
            RunStatus::StepLimit => (TestStatus::TimeLimit, None),
            RunStatus::CellLimit => (TestStatus::MemoryLimit, None),
        };
        let pass = status == TestStatus::Passed;
        total_weight += case.weight;
        if pass {
            passed_weight += case.weight;
        }
        let public = case.visibility == Visibility::Public;
        per_test.push(TestResult {
            name: case.name.clone(),
            visibility: case.visibility,
            pass,
            status,
            message,
            steps: run.metrics.steps,
            peak_cells: run.metrics.peak_cells,
            output: public.then(|| run.output.clone()),
            expected_output: public.then(|| case.expected_output.clone()),
        });
    }
    let outcome = per_test.iter().find(|t| !t.pass).map_or(Outcome::Accepted, |t| t.status.outcome());
    let first_failed_public_test =
        per_test.iter().find(|t| !t.pass && t.visibility == Visibility::Public).map(|t| t.name.clone());
    Verdict {
        outcome,
        per_test,
        pass_fraction: if total_weight > 0.0 { passed_weight / total_weight } else { 1.0 },
        metrics,
        first_failed_public_test,
        ..Verdict::bare(Outcome::Accepted)
    }
}

/// Source with comments removed, line structure kept.
pub fn strip_comments(source: &str) -> String {
    source.split('\n').map(|line| line.split_once('#').map_or(line, |(code, _)| code)).collect::<Vec<_>>().join("\n")
}

/// Token-level static analysis.
///
/// A keyword counts as present only as a real token, never inside a
/// comment. It counts as executed when its construct kind is in `trace`.
/// Tool checks use the construct their token denotes; keyword specs carry
/// their own and take precedence for the same token.
pub fn run_static(
    source: &str,
    checks: &ToolsConfig,
    keyword_specs: &[KeywordSpec],
    trace: Option<&BTreeSet<ConstructKind>>,
) -> StaticReport {
    let stripped = strip_comments(source);
    let effective_length = stripped.chars().filter(|c| !c.is_whitespace()).count() as u64;
    let tokens = tokenize(source).ok();
    let (line_count, token_count) = match &tokens {
        Some(toks) => {
            let lines: BTreeSet<u32> = toks.iter().map(|t| t.line).collect();
            (lines.len() as u64, toks.len() as u64)
        }
        None => (stripped.lines().filter(|l| !l.trim().is_empty()).count() as u64, 0),
    };
    let present = |token: &str| tokens.as_ref().is_some_and(|toks| toks.iter().any(|t| t.text == token));
    let executed = |construct: Option<ConstructKind>| match (construct, trace) {
        (Some(c), Some(trace)) => trace.contains(&c),
        _ => false,
    };

    let mut keyword_hits = BTreeMap::new();
    let mut violations = Vec::new();
    for check in &checks.static_checks {
        let hit = KeywordHit {
            present_outside_comments: present(&check.token),
            executed: executed(ConstructKind::for_token(&check.token)),
        };
        match check.kind {
            CheckKind::ForbidToken if hit.present_outside_comments => {
                violations.push(StaticViolation::ForbiddenToken(check.token.clone()))
            }
            CheckKind::RequireToken if !hit.present_outside_comments => {
                violations.push(StaticViolation::RequiredTokenMissing(check.token.clone()))
            }
            _ => {}
        }
        keyword_hits.insert(check.token.clone(), hit);
    }
    for spec in keyword_specs {
        keyword_hits.insert(
            spec.token.clone(),
            KeywordHit { present_outside_comments: present(&spec.token), executed: executed(Some(spec.construct)) },
        );
    }
    StaticReport { effective_length, line_count, token_count, keyword_hits, violations }
}

fn keyword_specs(m: &ExerciseManifest) -> &[KeywordSpec] {
    m.scoring.modes.meticulous.as_ref().map_or(&[], |c| c.keywords.as_slice())
}

/// Full evaluation of program source: dynamic run plus static checks.
/// Accepted only when every test passes and no static check is violated.
pub fn judge_code(m: &ExerciseManifest, program: &ReconstructedProgram, runner: &dyn Runner) -> Verdict {
    let mut verdict = run_dynamic(program, &m.tests, runner);
    let compiled = !matches!(verdict.outcome, Outcome::CompileError(_));
    let trace = (compiled && runner.capabilities().deterministic_metrics).then_some(&verdict.metrics.trace);
    verdict.static_report = run_static(&program.source, &m.tools, keyword_specs(m), trace);
    if verdict.outcome.is_accepted() && !verdict.static_report.violations.is_empty() {
        verdict.outcome = Outcome::WrongAnswer;
    }
    verdict
}

fn snippet_line_count(m: &ExerciseManifest) -> u32 {
    m.instructions.snippet.as_deref().map_or(0, |s| s.lines().count() as u32)
}

/// Grades a direct answer against the key: an exact line set for
/// `find_bug`, an exact choice index for the two choice quizzes.
pub fn grade_quiz(m: &ExerciseManifest, answer: &DirectAnswer) -> Verdict {
    let key = match &m.instructions.answer_key {
        Some(k) => k,
        None => return Verdict::payload_error("exercise has no answer key"),
    };
    let correct = match (m.exercise_type, answer, key) {
        (ExerciseType::FindBug, DirectAnswer::Lines(lines), AnswerKey::Lines(expected)) => {
            let max = snippet_line_count(m);
            if let Some(bad) = lines.iter().find(|&&l| l == 0 || l > max) {
                return Verdict::payload_error(format!("line {bad} is outside the snippet (1-{max})"));
            }
            lines == expected
        }
        (t, DirectAnswer::Choice(choice), AnswerKey::Choice(expected)) if t.is_choice_quiz() => {
            let count = m.instructions.choices.as_ref().map_or(0, Vec::len);
            if *choice >= count {
                return Verdict::payload_error(format!("choice {choice} out of range (0-{})", count.saturating_sub(1)));
            }
            choice == expected
        }
        _ => return Verdict::payload_error(format!("answer does not fit a {} exercise", m.exercise_type)),
    };
    Verdict {
        pass_fraction: if correct { 1.0 } else { 0.0 },
        ..Verdict::bare(if correct { Outcome::Accepted } else { Outcome::WrongAnswer })
    }
}

/// Baseline pass fractions, computed once per manifest fingerprint.
#[derive(Debug, Default)]
pub struct BaselineCache {
    slots: Mutex<HashMap<String, Arc<OnceLock<f64>>>>,
}

impl BaselineCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or_init(&self, key: String, init: impl FnOnce() -> f64) -> f64 {
        let slot = {
            let mut slots = self.slots.lock().unwrap_or_else(|p| p.into_inner());
            slots.entry(key).or_default().clone()
        };
        *slot.get_or_init(init)
    }

    pub fn len(&self) -> usize {
        self.slots.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Weighted pass fraction of the exercise's baseline program.
pub fn baseline_pass_fraction(m: &ExerciseManifest, runner: &dyn Runner, cache: &BaselineCache) -> Option<f64> {
    let source = m.tests.baseline.as_ref()?;
    Some(cache.get_or_init(manifest_fingerprint(m), || {
        run_dynamic(&ReconstructedProgram::from_source(source.clone()), &m.tests, runner).pass_fraction
    }))
}

/// Accepted iff the submission's weighted pass fraction strictly exceeds the
/// baseline's. Ties are `NotImproved`; a submission that crashed on every
/// test keeps its own outcome.
pub fn grade_baseline(
    m: &ExerciseManifest,
    submission: Verdict,
    runner: &dyn Runner,
    cache: &BaselineCache,
) -> Verdict {
    let Some(base) = baseline_pass_fraction(m, runner, cache) else {
        return Verdict::payload_error("exercise has no baseline program");
    };
    let mut v = submission;
    v.baseline_pass_fraction = Some(base);
    if matches!(v.outcome, Outcome::CompileError(_)) {
        return v;
    }
    let crashed_everywhere = !v.per_test.is_empty()
        && v.per_test.iter().all(|t| !matches!(t.status, TestStatus::Passed | TestStatus::WrongAnswer));
    v.outcome = if v.pass_fraction > base {
        if v.static_report.violations.is_empty() {
            Outcome::Accepted
        } else {
            Outcome::WrongAnswer
        }
    } else if crashed_everywhere {
        v.outcome
    } else {
        Outcome::NotImproved
    };
    v
}

/// Reconstructs and judges one submission end to end.
pub fn judge_submission(
    m: &ExerciseManifest,
    payload: &Payload,
    runner: &dyn Runner,
    cache: &BaselineCache,
) -> Verdict {
    match assembly::reconstruct(m, payload) {
        Err(e) => Verdict::payload_error(e.to_string()),
        Ok(Reconstructed::Answer(answer)) => grade_quiz(m, &answer),
        Ok(Reconstructed::Program(program)) => {
            let v = judge_code(m, &program, runner);
            if m.exercise_type == ExerciseType::Baseline {
                grade_baseline(m, v, runner, cache)
            } else {
                v
            }
        }
    }
}

#[cfg(test)]
mod tests;
