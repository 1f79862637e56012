//! Records events in an append-only log and computes per-exercise
//! statistics from it.
//!
//! ```text
//! cargo run --example stats_from_log
//! ```

use exforge::judge::OutcomeKind;
use exforge::stats::{compute_stats, read_log, EventDetail, EventLog, NewEvent};

fn judged(outcome: OutcomeKind, steps: u64, peak_cells: u64) -> EventDetail {
    EventDetail::Judged { submission: 0, outcome, steps, peak_cells, score: None }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let log = EventLog::open(&path).unwrap();

    let minute = 60_000;
    let events = [
        ("ana", 0, EventDetail::Viewed),
        ("ana", minute, judged(OutcomeKind::WrongAnswer, 12, 1)),
        ("ana", 2 * minute, judged(OutcomeKind::Accepted, 40, 7)),
        ("ben", 0, EventDetail::Viewed),
        ("ben", 5 * minute, judged(OutcomeKind::Accepted, 35, 9)),
        ("cy", minute, EventDetail::Viewed),
    ];
    for (student, ts, detail) in events {
        log.append(NewEvent::new(student, "countdown", ts, detail)).unwrap();
    }

    println!("{}", std::fs::read_to_string(&path).unwrap());
    let stats = compute_stats(&read_log(&path).unwrap(), "countdown");
    println!("{}", serde_json::to_string_pretty(&stats).unwrap());
}
