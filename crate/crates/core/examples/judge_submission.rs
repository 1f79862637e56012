//! Judges a few submissions to the countdown exercise, including two that
//! try to game the keyword bonus.
//!
//! ```text
//! cargo run --example judge_submission
//! ```

use exforge::judge::{BaselineCache, ToyRunner};
use exforge::{judge_submission, parse_manifest, Payload};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/exercises/countdown.exercise.json");
    let manifest = parse_manifest(&std::fs::read_to_string(path).unwrap()).unwrap();
    let cache = BaselineCache::new();

    let attempts = [
        ("loop", "read n\nwhile n > 0 {\n  print n\n  n = n - 1\n}"),
        ("off by one", "read n\nwhile n >= 0 {\n  print n\n  n = n - 1\n}"),
        (
            "keyword only in a comment",
            "read n\nif n > 4 { print 5 }\nif n > 3 { print 4 }\nif n > 2 { print 3 }\nif n > 1 { print 2 }\nprint 1 # while",
        ),
        ("never compiles", "read n\nwhile n > 0 {\n  print n\n"),
    ];
    for (label, source) in attempts {
        let verdict = judge_submission(&manifest, &Payload::Code(source.into()), &ToyRunner, &cache);
        println!("{label}:");
        println!("  outcome        {}", serde_json::to_string(&verdict.outcome).unwrap());
        println!("  passed         {:.0}%", verdict.pass_fraction * 100.0);
        println!("  steps / cells  {} / {}", verdict.metrics.steps, verdict.metrics.peak_cells);
        println!("  length         {}", verdict.static_report.effective_length);
        for (token, hit) in &verdict.static_report.keyword_hits {
            println!("  '{token}'        present={} executed={}", hit.present_outside_comments, hit.executed);
        }
        if let Some(first) = &verdict.first_failed_public_test {
            println!("  first failing public test: {first}");
        }
    }
}
