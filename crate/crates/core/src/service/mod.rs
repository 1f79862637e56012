//! Exercise registry and the request handlers shared by the HTTP server
//! and the command line.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::assembly::{present, Payload, StudentBundle};
use crate::canonical::sha256_hex;
use crate::gamify::{self, fingerprint, LeaderboardRow, Mode, ReferenceMetrics, Scope, ScoreRecord};
use crate::judge::{self, BaselineCache, Outcome, RunnerSet, Verdict};
use crate::manifest::{
    manifest_fingerprint, parse_manifest, serialize_manifest, validate_manifest, ExerciseManifest, ExerciseType,
    ScoringConfig, FILE_SUFFIX,
};
use crate::stats::{self, attempt_history, EventDetail, EventLog, ExerciseStats, NewEvent, StorageError};

mod http;

pub use http::router;

pub const ADMIN_TOKEN_ENV: &str = "EXFORGE_ADMIN_TOKEN";
pub const MAX_STUDENT_LEN: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("{path}: {message}")]
    Load { path: PathBuf, message: String },
    #[error("duplicate exercise id '{0}'")]
    Duplicate(String),
    #[error("{id}: {violations:?}")]
    Invalid { id: String, violations: Vec<String> },
}

/// Validated manifests by id. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    exercises: BTreeMap<String, Arc<ExerciseManifest>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a manifest after validating it.
    pub fn insert(&mut self, m: ExerciseManifest, runners: &RunnerSet) -> Result<(), RegistryError> {
        if self.exercises.contains_key(&m.id) {
            return Err(RegistryError::Duplicate(m.id));
        }
        check_valid(&m, runners)?;
        self.exercises.insert(m.id.clone(), Arc::new(m));
        Ok(())
    }

    /// Loads every `*.exercise.json` in `dir`. File names must match ids.
    pub fn load_dir(dir: &Path, runners: &RunnerSet) -> Result<Self, RegistryError> {
        let load_err = |path: &Path, message: String| RegistryError::Load { path: path.to_path_buf(), message };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| load_err(dir, e.to_string()))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(FILE_SUFFIX)))
            .collect();
        paths.sort();
        let mut registry = Registry::new();
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|e| load_err(&path, e.to_string()))?;
            let m = parse_manifest(&text).map_err(|e| load_err(&path, e.to_string()))?;
            let stem = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(FILE_SUFFIX));
            if stem != Some(m.id.as_str()) {
                return Err(load_err(&path, format!("file name does not match id '{}'", m.id)));
            }
            registry.insert(m, runners)?;
        }
        Ok(registry)
    }

    pub fn get(&self, id: &str) -> Option<&Arc<ExerciseManifest>> {
        self.exercises.get(id)
    }

    pub fn len(&self) -> usize {
        self.exercises.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exercises.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<ExerciseManifest>> {
        self.exercises.values()
    }
}

fn check_valid(m: &ExerciseManifest, runners: &RunnerSet) -> Result<(), RegistryError> {
    let runner = runners
        .for_metadata(&m.metadata)
        .map_err(|e| RegistryError::Invalid { id: m.id.clone(), violations: vec![e.to_string()] })?;
    let report = validate_manifest(m, runner);
    if report.is_ok() {
        Ok(())
    } else {
        Err(RegistryError::Invalid { id: m.id.clone(), violations: report.violations })
    }
}

/// Seed for a student's presentation of an exercise.
pub fn presentation_seed(student: &str, exercise: &str) -> u64 {
    let digest = sha256_hex(format!("{student}\u{0}{exercise}"));
    u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExerciseSummary {
    pub id: String,
    pub title: String,
    pub exercise_type: ExerciseType,
    pub difficulty: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionRequest {
    pub student: String,
    pub payload: Payload,
}

/// Score as shown to the student: per-mode bonuses only when revealed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreView {
    pub student: String,
    pub exercise: String,
    pub base: u64,
    pub total: u64,
    pub accepted_at: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bonuses: Option<BTreeMap<Mode, u64>>,
}

impl ScoreView {
    fn new(record: ScoreRecord, reveal: bool) -> Self {
        ScoreView {
            student: record.student,
            exercise: record.exercise,
            base: record.base,
            total: record.total,
            accepted_at: record.accepted_at,
            bonuses: reveal.then_some(record.bonuses),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionResponse {
    pub verdict: Verdict,
    pub score: Option<ScoreView>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{status}: {message}")]
pub struct ApiError {
    pub status: u16,
    pub message: String,
    pub details: Vec<String>,
}

impl ApiError {
    pub fn new(status: u16, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into(), details: Vec::new() }
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(404, format!("unknown exercise '{id}'"))
    }
}

impl From<StorageError> for ApiError {
    fn from(e: StorageError) -> Self {
        ApiError::new(500, e.to_string())
    }
}

pub type Clock = Box<dyn Fn() -> i64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Box::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64))
}

pub struct ServiceConfig {
    pub runners: RunnerSet,
    pub admin_token: Option<String>,
    /// Where admin uploads are persisted, if anywhere.
    pub exercises_dir: Option<PathBuf>,
    pub clock: Clock,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { runners: RunnerSet::new(), admin_token: None, exercises_dir: None, clock: system_clock() }
    }
}

pub struct Service {
    registry: RwLock<Arc<Registry>>,
    log: EventLog,
    runners: RunnerSet,
    baseline_cache: BaselineCache,
    reference_cache: Mutex<HashMap<String, ReferenceMetrics>>,
    admin_token: Option<String>,
    exercises_dir: Option<PathBuf>,
    clock: Clock,
}

impl Service {
    pub fn new(registry: Registry, log: EventLog, config: ServiceConfig) -> Self {
        Service {
            registry: RwLock::new(Arc::new(registry)),
            log,
            runners: config.runners,
            baseline_cache: BaselineCache::new(),
            reference_cache: Mutex::new(HashMap::new()),
            admin_token: config.admin_token.filter(|t| !t.is_empty()),
            exercises_dir: config.exercises_dir,
            clock: config.clock,
        }
    }

    pub fn registry(&self) -> Arc<Registry> {
        self.registry.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    fn exercise(&self, id: &str) -> Result<Arc<ExerciseManifest>, ApiError> {
        self.registry().get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    pub fn handle_get_exercises(&self) -> Vec<ExerciseSummary> {
        self.registry()
            .iter()
            .map(|m| ExerciseSummary {
                id: m.id.clone(),
                title: m.title.clone(),
                exercise_type: m.exercise_type,
                difficulty: m.metadata.difficulty,
            })
            .collect()
    }

    /// Student view of an exercise. The first request by a named student
    /// records a `viewed` event.
    pub fn handle_get_exercise(&self, id: &str, student: Option<&str>) -> Result<StudentBundle, ApiError> {
        let m = self.exercise(id)?;
        let student = student.filter(|s| !s.is_empty());
        if let Some(s) = student {
            validate_student(s)?;
            let ts = (self.clock)();
            self.log.transaction(|tx| -> Result<(), ApiError> {
                let seen = tx.events().any(|e| e.student == s && e.exercise == id && e.detail == EventDetail::Viewed);
                if !seen {
                    tx.append(NewEvent::new(s, id, ts, EventDetail::Viewed));
                }
                Ok(())
            })?;
        }
        Ok(present(&m, presentation_seed(student.unwrap_or(""), id)))
    }

    /// Parses a raw submission body; malformed JSON is a 400.
    pub fn parse_submission(body: &[u8]) -> Result<SubmissionRequest, ApiError> {
        let req: SubmissionRequest =
            serde_json::from_slice(body).map_err(|e| ApiError::new(400, format!("malformed submission: {e}")))?;
        validate_student(&req.student)?;
        Ok(req)
    }

    fn reference_metrics(&self, m: &ExerciseManifest, runner: &dyn judge::Runner) -> ReferenceMetrics {
        if !runner.capabilities().deterministic_metrics {
            return ReferenceMetrics::default();
        }
        let key = manifest_fingerprint(m);
        if let Some(r) = self.reference_cache.lock().unwrap_or_else(|p| p.into_inner()).get(&key) {
            return *r;
        }
        let program = crate::assembly::ReconstructedProgram::from_source(m.tests.solution.clone());
        let v = judge::run_dynamic(&program, &m.tests, runner);
        let refs = ReferenceMetrics { ref_steps: Some(v.metrics.steps), ref_cells: Some(v.metrics.peak_cells) };
        self.reference_cache.lock().unwrap_or_else(|p| p.into_inner()).insert(key, refs);
        refs
    }

    /// Judges a submission, scores it, and records `submitted` and `judged`
    /// events together.
    pub fn handle_post_submission(&self, id: &str, req: SubmissionRequest) -> Result<SubmissionResponse, ApiError> {
        let m = self.exercise(id)?;
        validate_student(&req.student)?;
        let runner = self.runners.for_metadata(&m.metadata).map_err(|e| ApiError::new(500, e.to_string()))?;
        let verdict = judge::judge_submission(&m, &req.payload, runner, &self.baseline_cache);
        if verdict.outcome == Outcome::PayloadError {
            let message = verdict.message.clone().unwrap_or_else(|| "payload error".to_string());
            return Err(ApiError::new(400, message));
        }
        let mut scoring: ScoringConfig = m.scoring.clone();
        if !runner.capabilities().deterministic_metrics {
            scoring.modes.sprinter = None;
            scoring.modes.economic = None;
        }
        let refs = if verdict.outcome.is_accepted() {
            self.reference_metrics(&m, runner)
        } else {
            ReferenceMetrics::default()
        };
        let fp = fingerprint(&req.payload);
        let student = req.student.as_str();
        let ts = (self.clock)();
        let record = self.log.transaction(|tx| -> Result<Option<ScoreRecord>, ApiError> {
            let history = attempt_history(tx.events(), student, id);
            let record = gamify::score_submission(&scoring, &verdict, &history, &refs, student, id, ts)
                .map_err(|e| ApiError::new(500, e.to_string()))?;
            let submission = tx.append(NewEvent::new(student, id, ts, EventDetail::Submitted { fingerprint: fp }));
            tx.append(NewEvent::new(
                student,
                id,
                ts,
                EventDetail::Judged {
                    submission,
                    outcome: verdict.outcome.kind(),
                    steps: verdict.metrics.steps,
                    peak_cells: verdict.metrics.peak_cells,
                    score: record.clone(),
                },
            ));
            Ok(record)
        })?;
        Ok(SubmissionResponse { score: record.map(|r| ScoreView::new(r, m.metadata.reveal_bonuses)), verdict })
    }

    pub fn handle_get_leaderboard(&self, id: Option<&str>) -> Result<Vec<LeaderboardRow>, ApiError> {
        let scope = match id {
            Some(id) => {
                self.exercise(id)?;
                Scope::Exercise(id.to_string())
            }
            None => Scope::Global,
        };
        let records = stats::score_records(self.log.snapshot().iter());
        Ok(gamify::leaderboard(&records, &scope))
    }

    pub fn handle_get_stats(&self, id: &str) -> Result<ExerciseStats, ApiError> {
        self.exercise(id)?;
        Ok(stats::compute_stats(&self.log.snapshot(), id))
    }

    /// Adds or replaces an exercise. Requires the admin bearer token.
    /// Returns `true` when an existing exercise was replaced.
    pub fn handle_put_exercise(&self, id: &str, bearer: Option<&str>, body: &str) -> Result<bool, ApiError> {
        let Some(expected) = &self.admin_token else {
            return Err(ApiError::new(403, "authoring is disabled"));
        };
        if bearer != Some(expected.as_str()) {
            return Err(ApiError::new(401, "invalid admin token"));
        }
        let m = parse_manifest(body).map_err(|e| ApiError::new(400, e.to_string()))?;
        if m.id != id {
            return Err(ApiError::new(400, format!("manifest id '{}' does not match path '{id}'", m.id)));
        }
        let mut guard = self.registry.write().unwrap_or_else(|p| p.into_inner());
        let mut next = Registry::clone(&guard);
        let replaced = next.exercises.remove(id).is_some();
        next.insert(m.clone(), &self.runners).map_err(|e| match e {
            RegistryError::Invalid { violations, .. } => {
                ApiError { status: 400, message: "manifest failed validation".to_string(), details: violations }
            }
            other => ApiError::new(400, other.to_string()),
        })?;
        if let Some(dir) = &self.exercises_dir {
            std::fs::write(dir.join(format!("{id}{FILE_SUFFIX}")), serialize_manifest(&m))
                .map_err(|e| ApiError::new(500, e.to_string()))?;
        }
        *guard = Arc::new(next);
        Ok(replaced)
    }
}

fn validate_student(student: &str) -> Result<(), ApiError> {
    if student.is_empty() || student.chars().count() > MAX_STUDENT_LEN {
        return Err(ApiError::new(400, format!("student id must be 1-{MAX_STUDENT_LEN} characters")));
    }
    Ok(())
}
