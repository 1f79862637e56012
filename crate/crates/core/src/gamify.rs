//! Bonus scoring and leaderboards.
//!
//! Six optional modes reward different qualities of an accepted solution:
//!
//! | mode       | rewards                                   | rule                                                    |
//! |------------|-------------------------------------------|---------------------------------------------------------|
//! | slender    | short code                                | linear ramp on effective length, `len_ref`..`len_max`   |
//! | sprinter   | few steps                                 | `steps <= alpha * ref_steps`                            |
//! | economic   | little memory                             | `peak_cells <= beta * ref_cells`                        |
//! | sedulous   | persistence                               | at least `min_attempts` honest failed attempts before   |
//! | scout      | getting it right the first time           | no earlier attempts                                     |
//! | meticulous | genuinely using required constructs       | per keyword: real token and construct executed          |
//!
//! An attempt is honest when its fingerprint differs from every earlier
//! attempt; fingerprints ignore comments and layout, so resubmitting the
//! same wrong code with cosmetic edits does not count twice.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::assembly::Payload;
use crate::canonical::{sha256_hex, to_canonical_compact};
use crate::judge::{strip_comments, OutcomeKind, Verdict};
use crate::manifest::ScoringConfig;
use crate::toylang::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fingerprint(pub String);

/// Code is reduced to its token stream (comments and layout dropped);
/// other payloads hash their canonical JSON.
pub fn fingerprint(payload: &Payload) -> Fingerprint {
    let text = match payload {
        Payload::Code(code) => normalize_code(code),
        other => to_canonical_compact(other),
    };
    Fingerprint(sha256_hex(text))
}

fn normalize_code(code: &str) -> String {
    match tokenize(code) {
        Ok(tokens) => tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" "),
        // not toy source: fall back to comment stripping and whitespace collapsing
        Err(_) => strip_comments(code).split_whitespace().collect::<Vec<_>>().join(" "),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub fingerprint: Fingerprint,
    pub outcome: OutcomeKind,
    pub ts: i64,
}

/// Earlier attempts by one student on one exercise, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptHistory {
    pub attempts: Vec<Attempt>,
}

impl AttemptHistory {
    pub fn is_empty(&self) -> bool {
        self.attempts.is_empty()
    }

    pub fn push(&mut self, attempt: Attempt) {
        self.attempts.push(attempt);
    }

    /// Failed attempts whose fingerprint differs from all earlier attempts.
    pub fn honest_failures(&self) -> usize {
        let mut seen = HashSet::new();
        self.attempts.iter().filter(|a| seen.insert(&a.fingerprint) && a.outcome != OutcomeKind::Accepted).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Slender,
    Sprinter,
    Economic,
    Sedulous,
    Scout,
    Meticulous,
}

/// Metrics of the reference solution; absent when the runner's metrics
/// are not deterministic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceMetrics {
    pub ref_steps: Option<u64>,
    pub ref_cells: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub student: String,
    pub exercise: String,
    pub base: u64,
    pub bonuses: BTreeMap<Mode, u64>,
    pub total: u64,
    pub accepted_at: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("{0:?} mode is enabled but no reference metric is available")]
    MissingReference(Mode),
}

/// Scores an accepted submission. Returns `Ok(None)` for anything else.
pub fn score_submission(
    cfg: &ScoringConfig,
    verdict: &Verdict,
    history: &AttemptHistory,
    refs: &ReferenceMetrics,
    student: &str,
    exercise: &str,
    at: i64,
) -> Result<Option<ScoreRecord>, ScoreError> {
    if !verdict.outcome.is_accepted() {
        return Ok(None);
    }
    let modes = &cfg.modes;
    let mut bonuses = BTreeMap::new();

    if let Some(s) = &modes.slender {
        let length = verdict.static_report.effective_length;
        bonuses.insert(Mode::Slender, slender_bonus(s.bonus, s.len_ref, s.len_max, length));
    }
    if let Some(s) = &modes.sprinter {
        let reference = refs.ref_steps.ok_or(ScoreError::MissingReference(Mode::Sprinter))?;
        let within = verdict.metrics.steps as f64 <= s.alpha * reference as f64;
        bonuses.insert(Mode::Sprinter, if within { s.bonus } else { 0 });
    }
    if let Some(e) = &modes.economic {
        let reference = refs.ref_cells.ok_or(ScoreError::MissingReference(Mode::Economic))?;
        let within = verdict.metrics.peak_cells as f64 <= e.beta * reference as f64;
        bonuses.insert(Mode::Economic, if within { e.bonus } else { 0 });
    }
    if let Some(s) = &modes.sedulous {
        let earned = history.honest_failures() >= s.min_attempts as usize;
        bonuses.insert(Mode::Sedulous, if earned { s.bonus } else { 0 });
    }
    if let Some(s) = &modes.scout {
        bonuses.insert(Mode::Scout, if history.is_empty() { s.bonus } else { 0 });
    }
    if let Some(m) = &modes.meticulous {
        let used = m
            .keywords
            .iter()
            .filter(|k| {
                verdict
                    .static_report
                    .keyword_hits
                    .get(&k.token)
                    .is_some_and(|hit| hit.present_outside_comments && hit.executed)
            })
            .count() as u64;
        bonuses.insert(Mode::Meticulous, m.bonus_per * used);
    }

    let total = cfg.base_points + bonuses.values().sum::<u64>();
    Ok(Some(ScoreRecord {
        student: student.to_string(),
        exercise: exercise.to_string(),
        base: cfg.base_points,
        bonuses,
        total,
        accepted_at: at,
    }))
}

/// `bonus * clamp((len_max - length) / (len_max - len_ref), 0, 1)`, rounded
/// half up, in exact integer arithmetic.
pub fn slender_bonus(bonus: u64, len_ref: u64, len_max: u64, length: u64) -> u64 {
    let span = len_max.saturating_sub(len_ref) as u128;
    if span == 0 {
        return if length <= len_ref { bonus } else { 0 };
    }
    let slack = (len_max.saturating_sub(length) as u128).min(span);
    let num = bonus as u128 * slack;
    ((2 * num + span) / (2 * span)) as u64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Exercise(String),
    Global,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: u32,
    pub student: String,
    pub total: u64,
    pub accepted_at: i64,
}

/// Best total per student and exercise, then (globally) summed per
/// student. Ordered by total descending, earliest `accepted_at`, then
/// student id. For the global board `accepted_at` is the latest of the
/// per-exercise bests, i.e. when the student reached the summed total.
pub fn leaderboard(records: &[ScoreRecord], scope: &Scope) -> Vec<LeaderboardRow> {
    let mut best: BTreeMap<(&str, &str), (u64, i64)> = BTreeMap::new();
    for r in records {
        if let Scope::Exercise(id) = scope {
            if &r.exercise != id {
                continue;
            }
        }
        best.entry((r.student.as_str(), r.exercise.as_str()))
            .and_modify(|cur| {
                if r.total > cur.0 || (r.total == cur.0 && r.accepted_at < cur.1) {
                    *cur = (r.total, r.accepted_at);
                }
            })
            .or_insert((r.total, r.accepted_at));
    }
    let mut per_student: BTreeMap<&str, (u64, i64)> = BTreeMap::new();
    for ((student, _), (total, at)) in best {
        let entry = per_student.entry(student).or_insert((0, i64::MIN));
        entry.0 += total;
        entry.1 = entry.1.max(at);
    }
    let mut rows: Vec<(&str, u64, i64)> = per_student.into_iter().map(|(s, (t, a))| (s, t, a)).collect();
    rows.sort_by(|a, b| match b.1.cmp(&a.1) {
        Ordering::Equal => a.2.cmp(&b.2).then_with(|| a.0.cmp(b.0)),
        other => other,
    });
    rows.into_iter()
        .enumerate()
        .map(|(i, (student, total, accepted_at))| LeaderboardRow {
            rank: i as u32 + 1,
            student: student.to_string(),
            total,
            accepted_at,
        })
        .collect()
}
