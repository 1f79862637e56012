//! Scores accepted submissions under the bonus modes and builds a
//! leaderboard.
//!
//! ```text
//! cargo run --example gamify_scores
//! ```

use exforge::gamify::{
    fingerprint, leaderboard, score_submission, slender_bonus, Attempt, AttemptHistory, ReferenceMetrics, Scope,
};
use exforge::judge::{BaselineCache, OutcomeKind, ToyRunner};
use exforge::{judge_submission, parse_manifest, Payload};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/exercises/countdown.exercise.json");
    let m = parse_manifest(&std::fs::read_to_string(path).unwrap()).unwrap();
    let cache = BaselineCache::new();
    let refs = ReferenceMetrics { ref_steps: Some(50), ref_cells: Some(1) };

    // Three distinct failures earn the perseverance bonus; a resubmission
    // that differs only in comments would not count.
    let mut history = AttemptHistory::default();
    for (ts, wrong) in ["print 1", "print 2", "read n print n"].into_iter().enumerate() {
        let payload = Payload::Code(wrong.into());
        history.push(Attempt { fingerprint: fingerprint(&payload), outcome: OutcomeKind::WrongAnswer, ts: ts as i64 });
    }
    let same = fingerprint(&Payload::Code("print 1   # again".into()));
    println!("comment-only change keeps the fingerprint: {}", same == history.attempts[0].fingerprint);

    let solution = Payload::Code("read n while n > 0 { print n n = n - 1 }".into());
    let verdict = judge_submission(&m, &solution, &ToyRunner, &cache);
    let late = score_submission(&m.scoring, &verdict, &history, &refs, "ana", &m.id, 10).unwrap().unwrap();
    let first_try =
        score_submission(&m.scoring, &verdict, &AttemptHistory::default(), &refs, "ben", &m.id, 12).unwrap().unwrap();
    println!("ana (after 3 failures): {:?} -> {}", late.bonuses, late.total);
    println!("ben (first try):        {:?} -> {}", first_try.bonuses, first_try.total);

    println!("slender bonus for lengths 20, 40, 60 with ref 26 / max 60:");
    for length in [20, 40, 60] {
        println!("  {length:>2} chars -> {}", slender_bonus(20, 26, 60, length));
    }

    for row in leaderboard(&[late, first_try], &Scope::Exercise(m.id.clone())) {
        println!("#{} {} {} (accepted at {})", row.rank, row.student, row.total, row.accepted_at);
    }
}
