//! Parses an exercise manifest and validates it against its reference
//! solution. Pass a path, or run without one to check a built-in manifest
//! that has a deliberate mistake.
//!
//! ```text
//! cargo run --example validate_manifest -- crates/core/fixtures/exercises/countdown.exercise.json
//! ```

use exforge::judge::ToyRunner;
use exforge::{parse_manifest, validate_manifest};

const BROKEN: &str = r#"{
  "id": "double",
  "title": "Double it",
  "exercise_type": "from_scratch",
  "metadata": {"author": "me", "difficulty": 1, "language": "toy"},
  "instructions": {"statement_md": "Read x and print 2x."},
  "tests": {
    "cases": [
      {"name": "small", "input": "2", "expected_output": "4\n"},
      {"name": "big", "input": "50", "expected_output": "100\n", "visibility": "hidden"}
    ],
    "solution": "read x print x + 2"
  }
}"#;

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => BROKEN.to_string(),
    };
    let manifest = match parse_manifest(&text) {
        Ok(m) => m,
        Err(e) => {
            println!("schema error: {e}");
            std::process::exit(1);
        }
    };
    let report = validate_manifest(&manifest, &ToyRunner);
    if report.is_ok() {
        println!("{}: ok", manifest.id);
    } else {
        println!("{}: {} problem(s)", manifest.id, report.violations.len());
        for v in &report.violations {
            println!("  - {v}");
        }
    }
}
