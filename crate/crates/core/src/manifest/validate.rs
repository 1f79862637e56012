use serde::{Deserialize, Serialize};

use super::{AnswerKey, ExerciseManifest, ExerciseType, Language};
use crate::assembly::{author_payload, reconstruct, Reconstructed, ReconstructedProgram};
use crate::judge::{baseline_pass_fraction, judge_code, BaselineCache, Outcome, Runner, Verdict};
use crate::toylang;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Which optional instruction fields each exercise type may carry.
fn allowed_fields(t: ExerciseType) -> &'static [&'static str] {
    use ExerciseType as T;
    match t {
        T::FromScratch => &[],
        T::Skeleton | T::FillBlanks => &["skeleton", "blanks"],
        T::Baseline | T::BugFix => &["skeleton"],
        T::FindBug => &["snippet", "answer_key"],
        T::CompileErrorQuiz => &["snippet", "compiler_message", "choices", "answer_key"],
        T::InterpretationQuiz => &["snippet", "choices", "answer_key"],
        T::SortBlocks => &["blocks"],
    }
}

/// Checks the type-specific shape of a manifest, then judges the author's
/// own solution (and key, for fill-in and block types) against the suite.
pub fn validate_manifest(m: &ExerciseManifest, runner: &dyn Runner) -> ValidationReport {
    use ExerciseType as T;
    let mut v = Vec::new();
    let ins = &m.instructions;
    let t = m.exercise_type;

    let present = [
        ("skeleton", ins.skeleton.is_some()),
        ("blanks", ins.blanks.is_some()),
        ("blocks", ins.blocks.is_some()),
        ("snippet", ins.snippet.is_some()),
        ("compiler_message", ins.compiler_message.is_some()),
        ("choices", ins.choices.is_some()),
        ("answer_key", ins.answer_key.is_some()),
    ];
    for (field, is_present) in present {
        if is_present && !allowed_fields(t).contains(&field) {
            v.push(format!("instructions.{field} not used by {t} exercises"));
        }
    }

    if matches!(t, T::Skeleton | T::FillBlanks | T::BugFix) && ins.skeleton.is_none() {
        v.push("instructions.skeleton required".to_string());
    }
    if t == T::FillBlanks && ins.blanks.as_ref().is_none_or(|b| b.is_empty()) {
        v.push("instructions.blanks required".to_string());
    }
    if t == T::SortBlocks && ins.blocks.as_ref().is_none_or(|b| b.len() < 2) {
        v.push("instructions.blocks requires at least 2 blocks".to_string());
    }
    if (t == T::Baseline) != m.tests.baseline.is_some() {
        v.push(if t == T::Baseline {
            "tests.baseline required".to_string()
        } else {
            format!("tests.baseline not used by {t} exercises")
        });
    }
    if t.is_quiz() {
        check_quiz(m, &mut v);
    } else if m.tests.cases.is_empty() {
        v.push("tests.cases must not be empty".to_string());
    }

    if !v.is_empty() || t.is_quiz() {
        return ValidationReport { violations: v };
    }

    let solution = judge_code(m, &ReconstructedProgram::from_source(m.tests.solution.clone()), runner);
    report_failures("solution", &solution, &mut v);

    let author_key_differs = matches!(t, T::FillBlanks | T::SortBlocks)
        || (t == T::Skeleton && ins.blanks.as_ref().is_some_and(|b| !b.is_empty()));
    if author_key_differs {
        match author_payload(m) {
            None => v.push("every blank needs a key".to_string()),
            Some(payload) => match reconstruct(m, &payload) {
                Ok(Reconstructed::Program(program)) => {
                    report_failures("author key", &judge_code(m, &program, runner), &mut v)
                }
                Ok(Reconstructed::Answer(_)) => unreachable!("program types reconstruct to programs"),
                Err(e) => v.push(format!("author key cannot be assembled: {e}")),
            },
        }
    }

    if t == T::Baseline {
        if let Some(fraction) = baseline_pass_fraction(m, runner, &BaselineCache::new()) {
            if fraction >= 1.0 {
                v.push("baseline already passes all tests".to_string());
            }
        }
    }
    ValidationReport { violations: v }
}

fn report_failures(what: &str, verdict: &Verdict, v: &mut Vec<String>) {
    match &verdict.outcome {
        Outcome::Accepted => {}
        Outcome::CompileError(d) => v.push(format!("{what} does not compile: {d}")),
        _ => {
            for t in verdict.per_test.iter().filter(|t| !t.pass) {
                v.push(format!("{what} fails test {}", t.name));
            }
            for s in &verdict.static_report.violations {
                v.push(format!("{what} violates static check: {s}"));
            }
        }
    }
}

fn check_quiz(m: &ExerciseManifest, v: &mut Vec<String>) {
    let ins = &m.instructions;
    let t = m.exercise_type;
    let Some(snippet) = &ins.snippet else {
        v.push("instructions.snippet required".to_string());
        return;
    };
    if t == ExerciseType::CompileErrorQuiz {
        match &ins.compiler_message {
            None => v.push("instructions.compiler_message required".to_string()),
            Some(message) if m.metadata.language() == Some(Language::Toy) => match toylang::compile(snippet) {
                Ok(_) => v.push("snippet compiles without error".to_string()),
                Err(d) if d.to_string() != *message => {
                    v.push(format!("compiler_message differs from the snippet's diagnostic '{d}'"))
                }
                Err(_) => {}
            },
            Some(_) => {}
        }
    }
    match (&ins.answer_key, t) {
        (None, _) => v.push("instructions.answer_key required".to_string()),
        (Some(AnswerKey::Lines(lines)), ExerciseType::FindBug) => {
            let count = snippet.lines().count() as u32;
            if lines.is_empty() || lines.iter().any(|&l| l == 0 || l > count) {
                v.push(format!("answer_key lines must be within 1-{count}"));
            }
        }
        (Some(AnswerKey::Choice(c)), _) if t.is_choice_quiz() => {
            let n = ins.choices.as_ref().map_or(0, Vec::len);
            if n < 2 {
                v.push("instructions.choices requires at least 2 entries".to_string());
            } else if *c >= n {
                v.push(format!("answer_key choice {c} out of range"));
            }
        }
        (Some(_), _) => v.push(format!("answer_key kind does not fit {t} exercises")),
    }
}
