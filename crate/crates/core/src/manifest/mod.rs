//! The JSON exercise manifest.
//!
//! One manifest describes one exercise through four facets: `metadata`
//! (discovery data), `instructions` (what the student sees), `tests` (what
//! the assessor uses) and `scoring`/`tools` (how results are rewarded and
//! which static checks apply). Files are named `<id>.exercise.json`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::toylang::{ConstructKind, Limits};

mod validate;

pub use validate::{validate_manifest, ValidationReport};

pub const FILE_SUFFIX: &str = ".exercise.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExerciseManifest {
    pub id: String,
    pub title: String,
    pub exercise_type: ExerciseType,
    pub metadata: Metadata,
    pub instructions: Instructions,
    pub tests: TestSuite,
    #[serde(default)]
    pub scoring: ScoringConfig,
    #[serde(default)]
    pub tools: ToolsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExerciseType {
    FromScratch,
    Skeleton,
    FillBlanks,
    Baseline,
    FindBug,
    BugFix,
    CompileErrorQuiz,
    InterpretationQuiz,
    SortBlocks,
}

impl ExerciseType {
    pub const ALL: [ExerciseType; 9] = [
        ExerciseType::FromScratch,
        ExerciseType::Skeleton,
        ExerciseType::FillBlanks,
        ExerciseType::Baseline,
        ExerciseType::FindBug,
        ExerciseType::BugFix,
        ExerciseType::CompileErrorQuiz,
        ExerciseType::InterpretationQuiz,
        ExerciseType::SortBlocks,
    ];

    /// Graded by comparing a direct answer to the key, without running code.
    pub fn is_quiz(self) -> bool {
        matches!(self, ExerciseType::FindBug | ExerciseType::CompileErrorQuiz | ExerciseType::InterpretationQuiz)
    }

    pub fn is_choice_quiz(self) -> bool {
        matches!(self, ExerciseType::CompileErrorQuiz | ExerciseType::InterpretationQuiz)
    }

    pub fn tag(self) -> &'static str {
        match self {
            ExerciseType::FromScratch => "from_scratch",
            ExerciseType::Skeleton => "skeleton",
            ExerciseType::FillBlanks => "fill_blanks",
            ExerciseType::Baseline => "baseline",
            ExerciseType::FindBug => "find_bug",
            ExerciseType::BugFix => "bug_fix",
            ExerciseType::CompileErrorQuiz => "compile_error_quiz",
            ExerciseType::InterpretationQuiz => "interpretation_quiz",
            ExerciseType::SortBlocks => "sort_blocks",
        }
    }
}

impl fmt::Display for ExerciseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub author: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub difficulty: u8,
    /// `toy`, or `external:<runner name>`.
    pub language: String,
    /// Advisory for clients; not enforced.
    #[serde(default = "default_true")]
    pub allow_local_run: bool,
    /// Whether per-mode bonus details are shown to students.
    #[serde(default)]
    pub reveal_bonuses: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Language<'a> {
    Toy,
    External(&'a str),
}

impl Metadata {
    pub fn language(&self) -> Option<Language<'_>> {
        match self.language.as_str() {
            "toy" => Some(Language::Toy),
            other => other.strip_prefix("external:").filter(|name| !name.is_empty()).map(Language::External),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instructions {
    pub statement_md: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blanks: Option<Vec<Blank>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Block>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compiler_message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_key: Option<AnswerKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blank {
    pub id: String,
    /// Present for closed-choice blanks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<BlankValue>,
}

impl Blank {
    pub fn is_closed(&self) -> bool {
        self.options.is_some()
    }
}

/// Either an option index (closed blank) or free text (open blank).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlankValue {
    Index(usize),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub id: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKey {
    /// 1-based line numbers of the snippet.
    Lines(BTreeSet<u32>),
    Choice(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Exact,
    #[default]
    Trimmed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    #[default]
    Public,
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSuite {
    #[serde(default)]
    pub cases: Vec<TestCase>,
    #[serde(default)]
    pub solution: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(default)]
    pub comparison: Comparison,
    #[serde(default)]
    pub limits: Limits,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCase {
    pub name: String,
    #[serde(default)]
    pub input: String,
    pub expected_output: String,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default)]
    pub visibility: Visibility,
}

fn default_base_points() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringConfig {
    #[serde(default = "default_base_points")]
    pub base_points: u64,
    #[serde(default)]
    pub modes: ModeConfigs,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig { base_points: default_base_points(), modes: ModeConfigs::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfigs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slender: Option<SlenderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sprinter: Option<SprinterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub economic: Option<EconomicConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sedulous: Option<SedulousConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scout: Option<ScoutConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meticulous: Option<MeticulousConfig>,
}

/// Linear ramp from full bonus at `len_ref` characters to zero at `len_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlenderConfig {
    pub len_ref: u64,
    pub len_max: u64,
    pub bonus: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SprinterConfig {
    pub alpha: f64,
    pub bonus: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicConfig {
    pub beta: f64,
    pub bonus: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SedulousConfig {
    pub min_attempts: u32,
    pub bonus: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoutConfig {
    pub bonus: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeticulousConfig {
    pub keywords: Vec<KeywordSpec>,
    pub bonus_per: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeywordSpec {
    pub token: String,
    pub construct: ConstructKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolsConfig {
    #[serde(default)]
    pub static_checks: Vec<StaticCheck>,
    /// Reserved for plagiarism tooling; carried through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plagiarism: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticCheck {
    pub kind: CheckKind,
    pub token: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    RequireToken,
    ForbidToken,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("schema error at `{path}`: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into() }
    }
}

/// Parses manifest JSON, applying defaults and checking structural invariants.
pub fn parse_manifest(text: &str) -> Result<ExerciseManifest, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let manifest: ExerciseManifest = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        SchemaError::at(if path == "." { String::new() } else { path }, err.into_inner().to_string())
    })?;
    check_invariants(&manifest)?;
    Ok(manifest)
}

/// Canonical text: sorted keys, 2-space indent, trailing newline.
pub fn serialize_manifest(m: &ExerciseManifest) -> String {
    canonical::to_canonical_pretty(m)
}

/// Stable content hash of the canonical serialization.
pub fn manifest_fingerprint(m: &ExerciseManifest) -> String {
    canonical::sha256_hex(serialize_manifest(m))
}

pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| matches!(b, b'a'..=b'z' | b'0'..=b'9' | b'_' | b'-'))
}

/// Blank ids referenced by `{{blank:<id>}}` placeholders, in order of appearance.
pub fn placeholders(skeleton: &str) -> Result<Vec<&str>, String> {
    const OPEN: &str = "{{blank:";
    let mut out = Vec::new();
    let mut rest = skeleton;
    while let Some(start) = rest.find(OPEN) {
        let after = &rest[start + OPEN.len()..];
        let Some(end) = after.find("}}") else {
            return Err("unterminated placeholder".to_string());
        };
        let id = &after[..end];
        if id.is_empty() {
            return Err("empty placeholder id".to_string());
        }
        out.push(id);
        rest = &after[end + 2..];
    }
    Ok(out)
}

pub fn placeholder(id: &str) -> String {
    format!("{{{{blank:{id}}}}}")
}

fn check_invariants(m: &ExerciseManifest) -> Result<(), SchemaError> {
    if !is_valid_id(&m.id) {
        return Err(SchemaError::at("id", format!("'{}' must match [a-z0-9_-]+", m.id)));
    }
    if !(1..=5).contains(&m.metadata.difficulty) {
        return Err(SchemaError::at("metadata.difficulty", "must be between 1 and 5"));
    }
    if m.metadata.language().is_none() {
        return Err(SchemaError::at("metadata.language", "must be `toy` or `external:<name>`"));
    }
    check_blanks(&m.instructions)?;
    if let Some(blocks) = &m.instructions.blocks {
        let mut seen = HashSet::new();
        for (i, b) in blocks.iter().enumerate() {
            if b.id.is_empty() || !seen.insert(b.id.as_str()) {
                return Err(SchemaError::at(format!("instructions.blocks[{i}].id"), "must be nonempty and unique"));
            }
        }
    }
    check_tests(&m.tests)?;
    check_scoring(&m.scoring)?;
    for (i, c) in m.tools.static_checks.iter().enumerate() {
        if c.token.trim().is_empty() {
            return Err(SchemaError::at(format!("tools.static_checks[{i}].token"), "must be nonempty"));
        }
    }
    Ok(())
}

fn check_blanks(ins: &Instructions) -> Result<(), SchemaError> {
    let referenced: BTreeSet<&str> = match &ins.skeleton {
        Some(s) => placeholders(s).map_err(|e| SchemaError::at("instructions.skeleton", e))?.into_iter().collect(),
        None => BTreeSet::new(),
    };
    let blanks = ins.blanks.as_deref().unwrap_or_default();
    let mut declared = BTreeSet::new();
    for (i, blank) in blanks.iter().enumerate() {
        let path = format!("instructions.blanks[{i}]");
        if !declared.insert(blank.id.as_str()) {
            return Err(SchemaError::at(format!("{path}.id"), format!("duplicate blank id '{}'", blank.id)));
        }
        if !referenced.contains(blank.id.as_str()) {
            return Err(SchemaError::at(
                format!("{path}.id"),
                format!("blank '{}' has no placeholder in the skeleton", blank.id),
            ));
        }
        match (&blank.options, &blank.key) {
            (Some(options), key) => {
                if options.len() < 2 {
                    return Err(SchemaError::at(format!("{path}.options"), "closed blank needs at least 2 options"));
                }
                match key {
                    None => {}
                    Some(BlankValue::Index(k)) if *k < options.len() => {}
                    Some(_) => {
                        return Err(SchemaError::at(format!("{path}.key"), "must index into options"));
                    }
                }
            }
            (None, Some(BlankValue::Index(_))) => {
                return Err(SchemaError::at(format!("{path}.key"), "open blank key must be text"));
            }
            (None, _) => {}
        }
    }
    if let Some(missing) = referenced.iter().find(|id| !declared.contains(*id)) {
        return Err(SchemaError::at("instructions.skeleton", format!("placeholder '{missing}' has no blanks entry")));
    }
    Ok(())
}

fn check_tests(tests: &TestSuite) -> Result<(), SchemaError> {
    let mut names = HashSet::new();
    for (i, case) in tests.cases.iter().enumerate() {
        if !names.insert(case.name.as_str()) {
            return Err(SchemaError::at(
                format!("tests.cases[{i}].name"),
                format!("duplicate test name '{}'", case.name),
            ));
        }
        if !(case.weight.is_finite() && case.weight > 0.0) {
            return Err(SchemaError::at(format!("tests.cases[{i}].weight"), "must be positive"));
        }
    }
    if tests.limits.max_steps == 0 {
        return Err(SchemaError::at("tests.limits.max_steps", "must be positive"));
    }
    if tests.limits.max_cells == 0 {
        return Err(SchemaError::at("tests.limits.max_cells", "must be positive"));
    }
    Ok(())
}

fn check_scoring(scoring: &ScoringConfig) -> Result<(), SchemaError> {
    let modes = &scoring.modes;
    if let Some(s) = &modes.slender {
        if s.len_ref >= s.len_max {
            return Err(SchemaError::at("scoring.modes.slender.len_ref", "must be less than len_max"));
        }
    }
    if let Some(s) = &modes.sprinter {
        if !(s.alpha.is_finite() && s.alpha >= 1.0) {
            return Err(SchemaError::at("scoring.modes.sprinter.alpha", "must be >= 1"));
        }
    }
    if let Some(e) = &modes.economic {
        if !(e.beta.is_finite() && e.beta >= 1.0) {
            return Err(SchemaError::at("scoring.modes.economic.beta", "must be >= 1"));
        }
    }
    if let Some(s) = &modes.sedulous {
        if s.min_attempts < 1 {
            return Err(SchemaError::at("scoring.modes.sedulous.min_attempts", "must be >= 1"));
        }
    }
    if let Some(m) = &modes.meticulous {
        for (i, k) in m.keywords.iter().enumerate() {
            if k.token.trim().is_empty() {
                return Err(SchemaError::at(
                    format!("scoring.modes.meticulous.keywords[{i}].token"),
                    "must be nonempty",
                ));
            }
        }
    }
    Ok(())
}
