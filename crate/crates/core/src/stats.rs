//! Append-only event log and per-exercise statistics.
//!
//! The log is a JSON-lines file, one event per line with its sequence
//! number embedded. A single writer appends; readers work on immutable
//! snapshots, so every reader observes a prefix of the log.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::gamify::{Attempt, AttemptHistory, Fingerprint, ScoreRecord};
use crate::judge::OutcomeKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventDetail {
    Viewed,
    Submitted {
        fingerprint: Fingerprint,
    },
    Judged {
        /// Sequence number of the matching `submitted` event.
        submission: u64,
        outcome: OutcomeKind,
        steps: u64,
        peak_cells: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        score: Option<ScoreRecord>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub student: String,
    pub exercise: String,
    /// Milliseconds since the Unix epoch.
    pub ts: i64,
    #[serde(flatten)]
    pub detail: EventDetail,
}

/// An event before the log assigns its sequence number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewEvent {
    pub student: String,
    pub exercise: String,
    pub ts: i64,
    pub detail: EventDetail,
}

impl NewEvent {
    pub fn new(student: impl Into<String>, exercise: impl Into<String>, ts: i64, detail: EventDetail) -> Self {
        NewEvent { student: student.into(), exercise: exercise.into(), ts, detail }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StorageError {
    #[error("event log I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

pub struct EventLog {
    path: Option<PathBuf>,
    writer: Mutex<Option<File>>,
    events: RwLock<Arc<Vec<Event>>>,
}

impl std::fmt::Debug for EventLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventLog").field("path", &self.path).field("len", &self.snapshot().len()).finish()
    }
}

/// Reads every event in a log file, checking that sequence numbers increase.
pub fn read_log(path: &Path) -> Result<Vec<Event>, StorageError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut events: Vec<Event> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event =
            serde_json::from_str(&line).map_err(|e| StorageError::Corrupt { line: i + 1, message: e.to_string() })?;
        if events.last().is_some_and(|prev| prev.seq >= event.seq) {
            return Err(StorageError::Corrupt { line: i + 1, message: format!("seq {} out of order", event.seq) });
        }
        events.push(event);
    }
    Ok(events)
}

/// Staged appends inside [`EventLog::transaction`].
pub struct Tx<'a> {
    committed: &'a [Event],
    pending: Vec<Event>,
    next_seq: u64,
}

impl Tx<'_> {
    /// Committed events followed by those staged so far.
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.committed.iter().chain(self.pending.iter())
    }

    pub fn append(&mut self, e: NewEvent) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.push(Event { seq, student: e.student, exercise: e.exercise, ts: e.ts, detail: e.detail });
        seq
    }
}

impl EventLog {
    /// Opens (or creates) a log file and loads its events.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let path = path.into();
        let events = read_log(&path)?;
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(EventLog { path: Some(path), writer: Mutex::new(Some(file)), events: RwLock::new(Arc::new(events)) })
    }

    /// A log that is never written to disk.
    pub fn in_memory() -> Self {
        EventLog { path: None, writer: Mutex::new(None), events: RwLock::new(Arc::new(Vec::new())) }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn snapshot(&self) -> Arc<Vec<Event>> {
        self.events.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn append(&self, e: NewEvent) -> Result<u64, StorageError> {
        self.transaction(|tx| Ok(tx.append(e)))
    }

    /// Runs `f` with exclusive write access. Events it stages are written
    /// and synced together, then published to readers in one step; if `f`
    /// fails nothing is written.
    pub fn transaction<T, E>(&self, f: impl FnOnce(&mut Tx<'_>) -> Result<T, E>) -> Result<T, E>
    where
        E: From<StorageError>,
    {
        let mut writer = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let committed = self.snapshot();
        let mut tx =
            Tx { committed: &committed, pending: Vec::new(), next_seq: committed.last().map_or(1, |e| e.seq + 1) };
        let value = f(&mut tx)?;
        let pending = tx.pending;
        if pending.is_empty() {
            return Ok(value);
        }
        if let Some(file) = writer.as_mut() {
            let mut buf = String::new();
            for e in &pending {
                buf.push_str(&serde_json::to_string(e).expect("event serializes"));
                buf.push('\n');
            }
            file.write_all(buf.as_bytes()).map_err(StorageError::from)?;
            file.sync_data().map_err(StorageError::from)?;
        }
        let mut events = self.events.write().unwrap_or_else(|p| p.into_inner());
        Arc::make_mut(&mut events).extend(pending);
        Ok(value)
    }
}

/// Earlier attempts of `student` on `exercise`, oldest first.
pub fn attempt_history<'a>(
    events: impl IntoIterator<Item = &'a Event>,
    student: &str,
    exercise: &str,
) -> AttemptHistory {
    let mut fingerprints: HashMap<u64, &Fingerprint> = HashMap::new();
    let mut history = AttemptHistory::default();
    for e in events {
        if e.student != student || e.exercise != exercise {
            continue;
        }
        match &e.detail {
            EventDetail::Submitted { fingerprint } => {
                fingerprints.insert(e.seq, fingerprint);
            }
            EventDetail::Judged { submission, outcome, .. } => {
                if let Some(fp) = fingerprints.get(submission) {
                    history.push(Attempt { fingerprint: (*fp).clone(), outcome: *outcome, ts: e.ts });
                }
            }
            EventDetail::Viewed => {}
        }
    }
    history
}

pub fn score_records<'a>(events: impl IntoIterator<Item = &'a Event>) -> Vec<ScoreRecord> {
    events
        .into_iter()
        .filter_map(|e| match &e.detail {
            EventDetail::Judged { score: Some(s), .. } => Some(s.clone()),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeastMemory {
    pub student: String,
    pub peak_cells: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortestExec {
    pub student: String,
    pub steps: u64,
}

/// Each optional field is absent when nothing contributes to it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExerciseStats {
    /// Seconds from first view to first accepted submission, averaged over
    /// students who have both.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_solution_time_s: Option<f64>,
    /// Rejected submissions before the first acceptance, averaged over
    /// students who were accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrong_attempts_avg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub least_memory: Option<LeastMemory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortest_exec: Option<ShortestExec>,
    /// Mean steps over accepted submissions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_exec_steps: Option<f64>,
    /// Students with activity on the exercise but no acceptance.
    pub unsolved_students: u64,
}

#[derive(Default)]
struct StudentTally {
    first_view: Option<(i64, u64)>,
    first_accept: Option<(i64, u64)>,
}

/// Computes the statistics of one exercise. "First" means smallest
/// `(ts, seq)`; ties on metric minima go to the earliest `(ts, seq)`.
pub fn compute_stats(events: &[Event], exercise: &str) -> ExerciseStats {
    let mut tallies: HashMap<&str, StudentTally> = HashMap::new();
    let mut least_memory: Option<(u64, (i64, u64), &str)> = None;
    let mut shortest: Option<(u64, (i64, u64), &str)> = None;
    let (mut steps_sum, mut accepted_count) = (0u128, 0u64);

    for e in events.iter().filter(|e| e.exercise == exercise) {
        let key = (e.ts, e.seq);
        let tally = tallies.entry(e.student.as_str()).or_default();
        match &e.detail {
            EventDetail::Viewed => {
                if tally.first_view.is_none_or(|k| key < k) {
                    tally.first_view = Some(key);
                }
            }
            EventDetail::Judged { outcome: OutcomeKind::Accepted, steps, peak_cells, .. } => {
                if tally.first_accept.is_none_or(|k| key < k) {
                    tally.first_accept = Some(key);
                }
                steps_sum += *steps as u128;
                accepted_count += 1;
                if least_memory.is_none_or(|(v, k, _)| (*peak_cells, key) < (v, k)) {
                    least_memory = Some((*peak_cells, key, e.student.as_str()));
                }
                if shortest.is_none_or(|(v, k, _)| (*steps, key) < (v, k)) {
                    shortest = Some((*steps, key, e.student.as_str()));
                }
            }
            EventDetail::Judged { .. } | EventDetail::Submitted { .. } => {}
        }
    }

    // second pass: rejections before each student's first acceptance
    let mut wrong: HashMap<&str, u64> = HashMap::new();
    for e in events.iter().filter(|e| e.exercise == exercise) {
        if let EventDetail::Judged { outcome, .. } = &e.detail {
            if *outcome == OutcomeKind::Accepted {
                continue;
            }
            if let Some(accept) = tallies.get(e.student.as_str()).and_then(|t| t.first_accept) {
                if (e.ts, e.seq) < accept {
                    *wrong.entry(e.student.as_str()).or_default() += 1;
                }
            }
        }
    }

    let (mut time_sum_ms, mut timed) = (0i128, 0u64);
    let (mut wrong_sum, mut solved) = (0u64, 0u64);
    let mut unsolved = 0;
    for (student, tally) in &tallies {
        match tally.first_accept {
            Some(accept) => {
                solved += 1;
                wrong_sum += wrong.get(student).copied().unwrap_or(0);
                if let Some(view) = tally.first_view {
                    time_sum_ms += (accept.0 - view.0) as i128;
                    timed += 1;
                }
            }
            None => unsolved += 1,
        }
    }

    ExerciseStats {
        avg_solution_time_s: (timed > 0).then(|| time_sum_ms as f64 / timed as f64 / 1000.0),
        wrong_attempts_avg: (solved > 0).then(|| wrong_sum as f64 / solved as f64),
        least_memory: least_memory.map(|(v, _, s)| LeastMemory { student: s.to_string(), peak_cells: v }),
        shortest_exec: shortest.map(|(v, _, s)| ShortestExec { student: s.to_string(), steps: v }),
        avg_exec_steps: (accepted_count > 0).then(|| steps_sum as f64 / accepted_count as f64),
        unsolved_students: unsolved,
    }
}
