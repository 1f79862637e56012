use super::*;
use crate::manifest::{parse_manifest, StaticCheck};
use proptest::prelude::*;
use serde_json::{json, Value};
use std::sync::atomic::{AtomicUsize, Ordering};

fn manifest(v: Value) -> ExerciseManifest {
    parse_manifest(&v.to_string()).unwrap()
}

fn exercise(exercise_type: &str, cases: Value, extra: Value) -> ExerciseManifest {
    let mut v = json!({
        "id": "t",
        "title": "t",
        "exercise_type": exercise_type,
        "metadata": {"author": "t", "difficulty": 1, "language": "toy"},
        "instructions": {"statement_md": ""},
        "tests": {"cases": cases, "solution": ""}
    });
    for (k, val) in extra.as_object().unwrap() {
        let (section, field) = k.split_once('.').unwrap();
        v[section][field] = val.clone();
    }
    manifest(v)
}

fn doubling() -> ExerciseManifest {
    exercise(
        "from_scratch",
        json!([
            {"name": "one", "input": "1", "expected_output": "2\n"},
            {"name": "two", "input": "2", "expected_output": "4", "visibility": "hidden"}
        ]),
        json!({}),
    )
}

fn code(m: &ExerciseManifest, source: &str) -> Verdict {
    judge_code(m, &ReconstructedProgram::from_source(source), &ToyRunner)
}

#[test]
fn all_tests_pass() {
    let v = code(&doubling(), "read x print x * 2");
    assert_eq!(v.outcome, Outcome::Accepted);
    assert_eq!(v.pass_fraction, 1.0);
    assert_eq!(v.per_test.len(), 2);
    assert_eq!(v.first_failed_public_test, None);
}

#[test]
fn trimmed_comparison_ignores_final_newline() {
    let m = exercise("from_scratch", json!([{"name": "a", "input": "", "expected_output": "5\n"}]), json!({}));
    assert_eq!(code(&m, "print 5").outcome, Outcome::Accepted);
    let exact = exercise(
        "from_scratch",
        json!([{"name": "a", "input": "", "expected_output": "5"}]),
        json!({"tests.comparison": "exact"}),
    );
    assert_eq!(code(&exact, "print 5").outcome, Outcome::WrongAnswer);
}

#[test]
fn half_the_tests() {
    let v = code(&doubling(), "read x if x == 1 { print 2 } else { print 0 }");
    assert_eq!(v.outcome, Outcome::WrongAnswer);
    assert_eq!(v.pass_fraction, 0.5);
    // the failing test is hidden
    assert_eq!(v.first_failed_public_test, None);
}

#[test]
fn weights_shape_the_pass_fraction() {
    let m = exercise(
        "from_scratch",
        json!([
            {"name": "a", "input": "1", "expected_output": "1", "weight": 3.0},
            {"name": "b", "input": "2", "expected_output": "2", "weight": 1.0}
        ]),
        json!({}),
    );
    assert_eq!(code(&m, "read x if x == 1 { print 1 }").pass_fraction, 0.75);
}

#[test]
fn compile_error_runs_nothing() {
    let v = code(&doubling(), "read x print");
    assert_eq!(v.outcome, Outcome::CompileError(Diagnostic::new(1, 13, "expected expression")));
    assert!(v.per_test.is_empty());
    assert_eq!(v.pass_fraction, 0.0);
}

#[test]
fn runtime_error_does_not_stop_later_tests() {
    let v = code(&doubling(), "read x print 2 / (x - 1) * 0 + x * 2");
    assert_eq!(v.outcome, Outcome::RuntimeError);
    assert_eq!(v.per_test.len(), 2);
    assert_eq!(v.per_test[0].status, TestStatus::RuntimeError);
    assert_eq!(v.per_test[0].message.as_deref(), Some("line 1, col 16: division by zero"));
    assert!(v.per_test[1].pass);
    assert_eq!(v.first_failed_public_test.as_deref(), Some("one"));
}

#[test]
fn limits_map_to_outcomes() {
    let m = exercise(
        "from_scratch",
        json!([{"name": "a", "input": "", "expected_output": ""}]),
        json!({"tests.limits": {"max_steps": 50, "max_cells": 4}}),
    );
    assert_eq!(code(&m, "while 1 { }").outcome, Outcome::TimeLimit);
    assert_eq!(code(&m, "alloc a 5").outcome, Outcome::MemoryLimit);
}

#[test]
fn hidden_tests_carry_no_outputs() {
    let v = code(&doubling(), "read x print x");
    let public = &v.per_test[0];
    assert_eq!(public.output.as_deref(), Some("1\n"));
    assert_eq!(public.expected_output.as_deref(), Some("2\n"));
    let hidden = &v.per_test[1];
    assert_eq!((hidden.output.as_ref(), hidden.expected_output.as_ref()), (None, None));
    let text = serde_json::to_string(&v).unwrap();
    assert!(!text.contains("\"4\""));
}

#[test]
fn metrics_aggregate_by_maximum() {
    let v = code(&doubling(), "read x alloc a x print x * 2");
    assert_eq!(v.per_test[0].peak_cells, 2);
    assert_eq!(v.per_test[1].peak_cells, 3);
    assert_eq!(v.metrics.peak_cells, 3);
    assert_eq!(v.metrics.steps, v.per_test.iter().map(|t| t.steps).max().unwrap());
}

#[test]
fn normalization_rules() {
    assert_eq!(normalize_output("a \r\nb\n\n", Comparison::Trimmed), "a\nb");
    assert_eq!(normalize_output("a \r\nb\n\n", Comparison::Exact), "a \r\nb\n\n");
    assert_eq!(normalize_output("\n\n", Comparison::Trimmed), "");
    assert_eq!(normalize_output("  lead", Comparison::Trimmed), "  lead");
}

#[test]
fn static_examples() {
    let none = ToolsConfig::default();
    let req = ToolsConfig {
        static_checks: vec![StaticCheck { kind: CheckKind::RequireToken, token: "while".into() }],
        plagiarism: None,
    };
    let r = run_static("# while", &req, &[], None);
    assert!(!r.keyword_hits["while"].present_outside_comments);
    assert_eq!(r.violations, vec![StaticViolation::RequiredTokenMissing("while".into())]);

    let r = run_static("x = 1 # hi", &none, &[], None);
    assert_eq!(r.effective_length, 3);
    assert_eq!((r.line_count, r.token_count), (1, 3));

    let trace = crate::toylang::run_source("while 0 { x = 1 }", "", &Default::default()).unwrap().metrics.trace;
    let r = run_static("while 0 { x = 1 }", &req, &[], Some(&trace));
    assert_eq!(r.keyword_hits["while"], KeywordHit { present_outside_comments: true, executed: true });
    assert!(r.violations.is_empty());
}

#[test]
fn keyword_specs_use_their_own_construct() {
    let spec = KeywordSpec { token: "x".into(), construct: ConstructKind::Assign };
    let trace = BTreeSet::from([ConstructKind::Assign]);
    let r = run_static("x = 1", &ToolsConfig::default(), std::slice::from_ref(&spec), Some(&trace));
    assert_eq!(r.keyword_hits["x"], KeywordHit { present_outside_comments: true, executed: true });
    let r = run_static("x = 1", &ToolsConfig::default(), &[spec], None);
    assert!(!r.keyword_hits["x"].executed);
}

#[test]
fn unlexable_source_still_has_a_length() {
    let req = ToolsConfig {
        static_checks: vec![StaticCheck { kind: CheckKind::ForbidToken, token: "x".into() }],
        plagiarism: None,
    };
    let r = run_static("x = $ 1 # tail", &req, &[], None);
    assert_eq!(r.effective_length, 4);
    assert_eq!(r.token_count, 0);
    assert_eq!(r.line_count, 1);
    assert!(!r.keyword_hits["x"].present_outside_comments);
    assert!(r.violations.is_empty());
}

#[test]
fn static_violation_rejects_passing_code() {
    let mut m = doubling();
    m.tools.static_checks = vec![StaticCheck { kind: CheckKind::ForbidToken, token: "*".into() }];
    let v = code(&m, "read x print x * 2");
    assert_eq!(v.pass_fraction, 1.0);
    assert_eq!(v.outcome, Outcome::WrongAnswer);
    assert_eq!(v.static_report.violations, vec![StaticViolation::ForbiddenToken("*".into())]);
    assert_eq!(code(&m, "read x print x + x").outcome, Outcome::Accepted);
}

fn find_bug() -> ExerciseManifest {
    exercise(
        "find_bug",
        json!([]),
        json!({"instructions.snippet": "a\nb\nc\nd\n", "instructions.answer_key": {"lines": [3]}}),
    )
}

fn interpretation() -> ExerciseManifest {
    exercise(
        "interpretation_quiz",
        json!([]),
        json!({
            "instructions.snippet": "print 1",
            "instructions.choices": ["zero", "one", "two"],
            "instructions.answer_key": {"choice": 1}
        }),
    )
}

#[test]
fn quiz_grading() {
    let m = find_bug();
    assert_eq!(grade_quiz(&m, &DirectAnswer::Lines(BTreeSet::from([3]))).outcome, Outcome::Accepted);
    assert_eq!(grade_quiz(&m, &DirectAnswer::Lines(BTreeSet::from([2, 3]))).outcome, Outcome::WrongAnswer);
    assert_eq!(grade_quiz(&m, &DirectAnswer::Lines(BTreeSet::new())).outcome, Outcome::WrongAnswer);
    let out = grade_quiz(&m, &DirectAnswer::Lines(BTreeSet::from([5])));
    assert_eq!(out.outcome, Outcome::PayloadError);
    assert_eq!(out.message.as_deref(), Some("line 5 is outside the snippet (1-4)"));

    let m = interpretation();
    assert_eq!(grade_quiz(&m, &DirectAnswer::Choice(1)).outcome, Outcome::Accepted);
    assert_eq!(grade_quiz(&m, &DirectAnswer::Choice(0)).outcome, Outcome::WrongAnswer);
    assert_eq!(grade_quiz(&m, &DirectAnswer::Choice(3)).outcome, Outcome::PayloadError);
}

#[test]
fn mismatched_payload_is_a_payload_error() {
    let v = judge_submission(&interpretation(), &Payload::Code("print 1".into()), &ToyRunner, &BaselineCache::new());
    assert_eq!(v.outcome, Outcome::PayloadError);
    assert!(v.message.is_some());
}

/// Squares of 1..5; the baseline gets the first three right.
fn squares() -> ExerciseManifest {
    let cases: Vec<Value> = (1..=5)
        .map(|n| json!({"name": format!("n{n}"), "input": n.to_string(), "expected_output": (n * n).to_string()}))
        .collect();
    exercise("baseline", json!(cases), json!({"tests.baseline": "read n if n < 4 { print n * n } else { print 0 }"}))
}

fn baseline_verdict(source: &str) -> Verdict {
    let m = squares();
    judge_submission(&m, &Payload::Code(source.into()), &ToyRunner, &BaselineCache::new())
}

#[test]
fn baseline_requires_strict_improvement() {
    let better = baseline_verdict("read n if n < 5 { print n * n } else { print 0 }");
    assert_eq!(better.baseline_pass_fraction, Some(0.6));
    assert_eq!(better.pass_fraction, 0.8);
    assert_eq!(better.outcome, Outcome::Accepted);

    let same = baseline_verdict("read n if n > 2 { print n * n } else { print 0 }");
    assert_eq!(same.pass_fraction, 0.6);
    assert_eq!(same.outcome, Outcome::NotImproved);

    let full = baseline_verdict("read n print n * n");
    assert_eq!((full.outcome.clone(), full.pass_fraction), (Outcome::Accepted, 1.0));

    let crashed = baseline_verdict("read n print n / 0");
    assert_eq!(crashed.outcome, Outcome::RuntimeError);

    let broken = baseline_verdict("read n print");
    assert!(matches!(broken.outcome, Outcome::CompileError(_)));
    assert_eq!(broken.baseline_pass_fraction, Some(0.6));
}

#[test]
fn baseline_is_judged_once_per_manifest() {
    let m = squares();
    let cache = BaselineCache::new();
    for _ in 0..3 {
        assert_eq!(baseline_pass_fraction(&m, &ToyRunner, &cache), Some(0.6));
    }
    assert_eq!(cache.len(), 1);

    let mut other = squares();
    other.tests.baseline = Some("read n print n * n * 0".into());
    assert_eq!(baseline_pass_fraction(&other, &ToyRunner, &cache), Some(0.0));
    assert_eq!(cache.len(), 2);
}

#[test]
fn baseline_cache_initializes_once_under_contention() {
    let cache = BaselineCache::new();
    let calls = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..8 {
            s.spawn(|| {
                let v = cache.get_or_init("k".into(), || {
                    calls.fetch_add(1, Ordering::SeqCst);
                    std::thread::sleep(std::time::Duration::from_millis(20));
                    0.25
                });
                assert_eq!(v, 0.25);
            });
        }
    });
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[test]
fn strip_comments_keeps_lines() {
    assert_eq!(strip_comments("a # x\n# y\nb"), "a \n\nb");
}

const PROGRAMS: &[&str] = &[
    "read x print x * 2",
    "read x print x + x",
    "read x if x > 1 { print x * 2 } else { print 2 }",
    "read x while x > 0 { print x x = x - 1 }",
    "read x print 10 / (x - 1)",
    "read x alloc a x a[0] = x * 2 print a[0] free a",
    "print",
];

proptest! {
    #[test]
    fn normalization_is_idempotent(s in "[ a-z\\r\\n\\t]{0,30}") {
        let once = normalize_output(&s, Comparison::Trimmed);
        prop_assert_eq!(normalize_output(&once, Comparison::Trimmed), once.clone());
        prop_assert_eq!(normalize_output(&s, Comparison::Exact), s);
    }

    #[test]
    fn trimmed_equality_is_an_equivalence(
        lines in prop::collection::vec("[a-z0-9 ]{0,6}", 0..5),
        pad in prop::collection::vec(("[ \\t]{0,3}", any::<bool>()), 0..5),
        extra_blank in 0usize..3,
    ) {
        let t = |s: &str| normalize_output(s, Comparison::Trimmed);
        let a = lines.join("\n");
        // same text with trailing padding, CRLF endings and trailing blank lines
        let mut b = String::new();
        for (i, line) in lines.iter().enumerate() {
            b.push_str(line);
            if let Some((p, crlf)) = pad.get(i) {
                b.push_str(p);
                if *crlf { b.push('\r'); }
            }
            if i + 1 < lines.len() { b.push('\n'); }
        }
        b.push_str(&"\n".repeat(extra_blank));
        prop_assert_eq!(t(&a), t(&a));
        prop_assert_eq!(t(&a) == t(&b), t(&b) == t(&a));
        prop_assert_eq!(t(&a), t(&b));
    }

    #[test]
    fn comment_immunity(
        comments in prop::collection::vec(prop::option::of("[^\\n\\r]{0,20}"), 5),
        input in 0i64..6,
    ) {
        let m = exercise(
            "from_scratch",
            json!([{"name": "a", "input": input.to_string(),
                    "expected_output": (1..=input).rev().map(|k| format!("{k}\n")).collect::<String>()}]),
            json!({}),
        );
        let source = "read n\nwhile n > 0 {\n  print n\n  n = n - 1\n}";
        let commented: String = source
            .lines()
            .zip(&comments)
            .map(|(line, c)| match c { Some(c) => format!("{line} # {c}\n"), None => format!("{line}\n") })
            .collect();
        let a = code(&m, source);
        let b = code(&m, &commented);
        prop_assert_eq!(a.outcome, Outcome::Accepted);
        prop_assert_eq!(b.outcome, Outcome::Accepted);
        prop_assert_eq!(a.static_report.effective_length, b.static_report.effective_length);
    }

    #[test]
    fn verdict_invariants(
        program in 0..PROGRAMS.len(),
        inputs in prop::collection::vec((0i64..5, 0i64..12, any::<bool>()), 1..5),
    ) {
        let cases: Vec<Value> = inputs
            .iter()
            .enumerate()
            .map(|(i, (x, out, hidden))| json!({
                "name": format!("t{i}"), "input": x.to_string(), "expected_output": out.to_string(),
                "visibility": if *hidden { "hidden" } else { "public" },
            }))
            .collect();
        let m = exercise("from_scratch", json!(cases), json!({}));
        let v = code(&m, PROGRAMS[program]);
        let again = code(&m, PROGRAMS[program]);
        prop_assert_eq!(serde_json::to_string(&v).unwrap(), serde_json::to_string(&again).unwrap());
        if !matches!(v.outcome, Outcome::CompileError(_)) {
            prop_assert_eq!(v.per_test.len(), inputs.len());
        }
        if v.outcome.is_accepted() {
            prop_assert_eq!(v.pass_fraction, 1.0);
            prop_assert!(v.static_report.violations.is_empty());
        }
        prop_assert!((0.0..=1.0).contains(&v.pass_fraction));
        for t in &v.per_test {
            prop_assert_eq!(t.output.is_some(), t.visibility == Visibility::Public);
        }
    }
}
