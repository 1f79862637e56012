//! Judges an exercise whose tests run through an external command instead
//! of the built-in interpreter. Needs a POSIX shell.
//!
//! ```text
//! cargo run --example external_runner
//! ```

use exforge::judge::{BaselineCache, ExternalRunner, RunnerSet};
use exforge::{judge_submission, parse_manifest, validate_manifest, Payload};

const MANIFEST: &str = r#"{
  "id": "shout",
  "title": "Shout",
  "exercise_type": "from_scratch",
  "metadata": {"author": "me", "difficulty": 1, "language": "external:sh"},
  "instructions": {"statement_md": "Upper-case the input line."},
  "tests": {
    "cases": [
      {"name": "hi", "input": "hi\n", "expected_output": "HI\n"},
      {"name": "mixed", "input": "Hello\n", "expected_output": "HELLO\n", "visibility": "hidden"}
    ],
    "solution": "tr a-z A-Z"
  }
}"#;

fn main() {
    let runners = RunnerSet::new().with_external("sh", ExternalRunner::from_template("sh {source}"));
    let m = parse_manifest(MANIFEST).unwrap();
    let runner = runners.for_metadata(&m.metadata).unwrap();
    println!("manifest valid: {}", validate_manifest(&m, runner).is_ok());

    let cache = BaselineCache::new();
    for source in ["tr a-z A-Z", "cat"] {
        let v = judge_submission(&m, &Payload::Code(source.into()), runner, &cache);
        println!(
            "{source:<12} -> {} ({}/{} tests)",
            serde_json::to_string(&v.outcome).unwrap(),
            v.per_test.iter().filter(|t| t.status == exforge::judge::TestStatus::Passed).count(),
            v.per_test.len()
        );
    }
}
