#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tower::ServiceExt;

use exforge::gamify::Fingerprint;
use exforge::judge::OutcomeKind;
use exforge::manifest::{parse_manifest, ExerciseManifest, Visibility};
use exforge::service::{router, Registry, Service, ServiceConfig, SubmissionRequest};
use exforge::stats::{Event, EventDetail, EventLog, ExerciseStats, LeastMemory, ShortestExec};

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn manifest_path(id: &str) -> PathBuf {
    root().join("exercises").join(format!("{id}.exercise.json"))
}

pub fn load(id: &str) -> ExerciseManifest {
    parse_manifest(&std::fs::read_to_string(manifest_path(id)).unwrap()).unwrap()
}

pub fn exercise_ids() -> Vec<String> {
    let mut ids: Vec<String> = std::fs::read_dir(root().join("exercises"))
        .unwrap()
        .filter_map(|e| {
            let name = e.ok()?.file_name().into_string().ok()?;
            name.strip_suffix(".exercise.json").map(str::to_string)
        })
        .collect();
    ids.sort();
    ids
}

pub struct SubmissionFixture {
    pub exercise: String,
    pub path: PathBuf,
    /// Outcome tag encoded in the file name, e.g. `accepted.loop.json`.
    pub expected: String,
    pub request: SubmissionRequest,
}

pub fn submissions() -> Vec<SubmissionFixture> {
    let mut out = Vec::new();
    for exercise in exercise_ids() {
        let dir = root().join("submissions").join(&exercise);
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
        paths.sort();
        for path in paths {
            let name = path.file_name().unwrap().to_str().unwrap();
            let expected = name.split('.').next().unwrap().to_string();
            let request = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
            out.push(SubmissionFixture { exercise: exercise.clone(), path, expected, request });
        }
    }
    out
}

pub fn submission(exercise: &str, name: &str) -> SubmissionRequest {
    let path = root().join("submissions").join(exercise).join(format!("{name}.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Service over all fixtures with an in-memory log and a clock that
/// advances one second per call.
pub fn fixture_service() -> Arc<Service> {
    let config = ServiceConfig::default();
    let registry = Registry::load_dir(&root().join("exercises"), &config.runners).unwrap();
    let t = std::sync::atomic::AtomicI64::new(0);
    let config =
        ServiceConfig { clock: Box::new(move || t.fetch_add(1000, std::sync::atomic::Ordering::SeqCst)), ..config };
    Arc::new(Service::new(registry, EventLog::in_memory(), config))
}

pub struct Response {
    pub status: StatusCode,
    pub body: String,
}

impl Response {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

pub async fn call(svc: &Arc<Service>, method: &str, uri: &str, body: Option<&str>, bearer: Option<&str>) -> Response {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    if let Some(token) = bearer {
        req = req.header("authorization", format!("Bearer {token}"));
    }
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = router(svc.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Response { status, body: String::from_utf8(bytes.to_vec()).unwrap() }
}

pub fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap()
}

/// Texts a student must never see: hidden expected outputs and the solution.
pub fn secrets(m: &ExerciseManifest) -> Vec<String> {
    let mut s: Vec<String> = m
        .tests
        .cases
        .iter()
        .filter(|c| c.visibility == Visibility::Hidden)
        .map(|c| c.expected_output.clone())
        .collect();
    if !m.tests.solution.is_empty() {
        s.push(m.tests.solution.clone());
    }
    s
}

const WINDOW: usize = 12;

fn strings(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => out.push(s.clone()),
        Value::Array(a) => a.iter().for_each(|x| strings(x, out)),
        Value::Object(o) => o.iter().for_each(|(k, x)| {
            out.push(k.clone());
            strings(x, out);
        }),
        _ => {}
    }
}

/// First shared substring of `WINDOW` chars (or the whole secret when it is
/// shorter but at least 4 chars) between a secret and the body, checked on
/// the raw text and on every decoded JSON string.
pub fn leak(body: &str, secret: &str) -> Option<String> {
    let chars: Vec<char> = secret.chars().collect();
    if chars.len() < 4 {
        return None;
    }
    let width = WINDOW.min(chars.len());
    let mut haystacks = vec![body.to_string()];
    if let Ok(v) = serde_json::from_str::<Value>(body) {
        strings(&v, &mut haystacks);
    }
    for window in chars.windows(width) {
        let needle: String = window.iter().collect();
        let escaped = serde_json::to_string(&needle).unwrap();
        let escaped = &escaped[1..escaped.len() - 1];
        if haystacks.iter().any(|h| h.contains(&needle)) || body.contains(escaped) {
            return Some(needle);
        }
    }
    None
}

// Statistics oracle: a direct, quadratic reading of the definitions.

fn earliest(list: Vec<&Event>) -> Option<&Event> {
    list.into_iter().min_by_key(|e| (e.ts, e.seq))
}

pub fn oracle_stats(events: &[Event], exercise: &str) -> ExerciseStats {
    let mine: Vec<&Event> = events.iter().filter(|e| e.exercise == exercise).collect();
    let students: BTreeSet<&str> = mine.iter().map(|e| e.student.as_str()).collect();
    let accepted = |e: &Event| matches!(e.detail, EventDetail::Judged { outcome: OutcomeKind::Accepted, .. });

    let (mut times, mut wrongs) = (Vec::new(), Vec::new());
    let mut unsolved = 0;
    for s in &students {
        let theirs: Vec<&Event> = mine.iter().copied().filter(|e| e.student == *s).collect();
        let first_view = earliest(theirs.iter().copied().filter(|e| e.detail == EventDetail::Viewed).collect());
        let Some(first_ok) = earliest(theirs.iter().copied().filter(|e| accepted(e)).collect()) else {
            unsolved += 1;
            continue;
        };
        if let Some(v) = first_view {
            times.push(first_ok.ts - v.ts);
        }
        let before = theirs
            .iter()
            .filter(|e| matches!(e.detail, EventDetail::Judged { .. }) && !accepted(e))
            .filter(|e| (e.ts, e.seq) < (first_ok.ts, first_ok.seq))
            .count();
        wrongs.push(before as u64);
    }

    let oks: Vec<(u64, u64, i64, u64, &str)> = mine
        .iter()
        .filter(|e| accepted(e))
        .map(|e| match e.detail {
            EventDetail::Judged { steps, peak_cells, .. } => (steps, peak_cells, e.ts, e.seq, e.student.as_str()),
            _ => unreachable!(),
        })
        .collect();
    let least = oks.iter().min_by_key(|o| (o.1, o.2, o.3));
    let shortest = oks.iter().min_by_key(|o| (o.0, o.2, o.3));

    let mean_i = |xs: &[i64]| (!xs.is_empty()).then(|| xs.iter().sum::<i64>() as f64 / xs.len() as f64);
    let mean_u = |xs: &[u64]| (!xs.is_empty()).then(|| xs.iter().sum::<u64>() as f64 / xs.len() as f64);
    ExerciseStats {
        avg_solution_time_s: mean_i(&times).map(|ms| ms / 1000.0),
        wrong_attempts_avg: mean_u(&wrongs),
        least_memory: least.map(|o| LeastMemory { student: o.4.to_string(), peak_cells: o.1 }),
        shortest_exec: shortest.map(|o| ShortestExec { student: o.4.to_string(), steps: o.0 }),
        avg_exec_steps: mean_u(&oks.iter().map(|o| o.0).collect::<Vec<_>>()),
        unsolved_students: unsolved,
    }
}

/// A small random log: up to 8 students and 20 events over two exercises,
/// with frequent timestamp ties.
pub fn random_log(seed: u64) -> Vec<Event> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let students = rng.random_range(1..=8);
    let n = rng.random_range(0..=20);
    let outcomes = [
        OutcomeKind::Accepted,
        OutcomeKind::Accepted,
        OutcomeKind::WrongAnswer,
        OutcomeKind::RuntimeError,
        OutcomeKind::CompileError,
        OutcomeKind::TimeLimit,
    ];
    let mut events = Vec::with_capacity(n);
    for seq in 1..=n as u64 {
        let student = format!("s{}", rng.random_range(0..students));
        let exercise = if rng.random_bool(0.8) { "e" } else { "other" }.to_string();
        let ts = rng.random_range(0..6) * 1000 + rng.random_range(0..3) * 7;
        let detail = match rng.random_range(0..3) {
            0 => EventDetail::Viewed,
            1 => EventDetail::Submitted { fingerprint: Fingerprint(format!("f{}", rng.random_range(0..3))) },
            _ => EventDetail::Judged {
                submission: rng.random_range(0..seq),
                outcome: outcomes[rng.random_range(0..outcomes.len())],
                steps: rng.random_range(1..60),
                peak_cells: rng.random_range(0..6),
                score: None,
            },
        };
        events.push(Event { seq, student, exercise, ts, detail });
    }
    events
}

pub fn by_student<T: Clone>(pairs: &[(String, T)]) -> BTreeMap<String, Vec<T>> {
    let mut m: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for (k, v) in pairs {
        m.entry(k.clone()).or_default().push(v.clone());
    }
    m
}
