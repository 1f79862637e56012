//! Student-facing views of exercises, and turning submissions back into
//! something judgeable.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::manifest::{
    placeholder, AnswerKey, BlankValue, Block, ExerciseManifest, ExerciseType, ModeConfigs, Visibility,
};

/// A student's attempt, tagged by variant: `{"code": "..."}`,
/// `{"blank_answers": {...}}`, `{"line_set": [..]}`, `{"choice": n}` or
/// `{"block_order": [..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Code(String),
    BlankAnswers(BTreeMap<String, BlankValue>),
    LineSet(BTreeSet<u32>),
    Choice(usize),
    BlockOrder(Vec<String>),
}

impl Payload {
    pub fn variant(&self) -> &'static str {
        match self {
            Payload::Code(_) => "code",
            Payload::BlankAnswers(_) => "blank_answers",
            Payload::LineSet(_) => "line_set",
            Payload::Choice(_) => "choice",
            Payload::BlockOrder(_) => "block_order",
        }
    }
}

/// Answers graded by comparison to a key rather than by execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectAnswer {
    Lines(BTreeSet<u32>),
    Choice(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplicedBlank {
    pub blank: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructedProgram {
    pub source: String,
    pub origin_map: Vec<SplicedBlank>,
}

impl ReconstructedProgram {
    pub fn from_source(source: impl Into<String>) -> Self {
        ReconstructedProgram { source: source.into(), origin_map: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reconstructed {
    Program(ReconstructedProgram),
    Answer(DirectAnswer),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssemblyError {
    #[error("a {got} payload does not fit a {expected} exercise")]
    PayloadMismatch { expected: ExerciseType, got: &'static str },
    #[error("missing answer for blank '{0}'")]
    MissingBlank(String),
    #[error("unknown blank '{0}'")]
    UnknownBlank(String),
    #[error("blank '{0}' is closed and needs an option index")]
    ClosedBlankNeedsIndex(String),
    #[error("answer for blank '{0}' contains a placeholder")]
    PlaceholderInAnswer(String),
    #[error("option {index} out of range for blank '{blank}'")]
    OptionOutOfRange { blank: String, index: usize },
    #[error("unknown block '{0}'")]
    UnknownBlock(String),
    #[error("block order is not a permutation of all blocks")]
    IncompletePermutation,
    #[error("exercise is missing {0}")]
    IncompleteExercise(&'static str),
}

fn accepts(t: ExerciseType, p: &Payload, has_blanks: bool) -> bool {
    use ExerciseType as T;
    matches!(
        (t, p),
        (T::FromScratch | T::BugFix | T::Baseline | T::Skeleton, Payload::Code(_))
            | (T::FillBlanks, Payload::BlankAnswers(_))
            | (T::FindBug, Payload::LineSet(_))
            | (T::CompileErrorQuiz | T::InterpretationQuiz, Payload::Choice(_))
            | (T::SortBlocks, Payload::BlockOrder(_))
    ) || (t == T::Skeleton && has_blanks && matches!(p, Payload::BlankAnswers(_)))
}

/// Turns a payload into program source, or into a direct quiz answer.
pub fn reconstruct(m: &ExerciseManifest, payload: &Payload) -> Result<Reconstructed, AssemblyError> {
    let ins = &m.instructions;
    let has_blanks = ins.blanks.as_ref().is_some_and(|b| !b.is_empty());
    if !accepts(m.exercise_type, payload, has_blanks) {
        return Err(AssemblyError::PayloadMismatch { expected: m.exercise_type, got: payload.variant() });
    }
    Ok(match payload {
        Payload::Code(source) => Reconstructed::Program(ReconstructedProgram::from_source(source.clone())),
        Payload::BlankAnswers(answers) => Reconstructed::Program(splice(m, answers)?),
        Payload::BlockOrder(order) => {
            let blocks = ins.blocks.as_deref().ok_or(AssemblyError::IncompleteExercise("blocks"))?;
            Reconstructed::Program(ReconstructedProgram::from_source(order_blocks(blocks, order)?))
        }
        Payload::LineSet(lines) => Reconstructed::Answer(DirectAnswer::Lines(lines.clone())),
        Payload::Choice(c) => Reconstructed::Answer(DirectAnswer::Choice(*c)),
    })
}

fn splice(m: &ExerciseManifest, answers: &BTreeMap<String, BlankValue>) -> Result<ReconstructedProgram, AssemblyError> {
    let skeleton = m.instructions.skeleton.as_deref().ok_or(AssemblyError::IncompleteExercise("skeleton"))?;
    let blanks = m.instructions.blanks.as_deref().unwrap_or_default();
    if let Some(extra) = answers.keys().find(|id| !blanks.iter().any(|b| &b.id == *id)) {
        return Err(AssemblyError::UnknownBlank(extra.clone()));
    }
    let mut source = skeleton.to_string();
    let mut origin_map = Vec::with_capacity(blanks.len());
    for blank in blanks {
        let answer = answers.get(&blank.id).ok_or_else(|| AssemblyError::MissingBlank(blank.id.clone()))?;
        let text = match (&blank.options, answer) {
            (Some(options), BlankValue::Index(i)) => options
                .get(*i)
                .cloned()
                .ok_or_else(|| AssemblyError::OptionOutOfRange { blank: blank.id.clone(), index: *i })?,
            (Some(_), BlankValue::Text(_)) => return Err(AssemblyError::ClosedBlankNeedsIndex(blank.id.clone())),
            (None, BlankValue::Index(i)) => i.to_string(),
            (None, BlankValue::Text(t)) => t.clone(),
        };
        if text.contains("{{blank:") {
            return Err(AssemblyError::PlaceholderInAnswer(blank.id.clone()));
        }
        origin_map.push(SplicedBlank { blank: blank.id.clone(), text: text.clone() });
        source = source.replace(&placeholder(&blank.id), &text);
    }
    Ok(ReconstructedProgram { source, origin_map })
}

fn order_blocks(blocks: &[Block], order: &[String]) -> Result<String, AssemblyError> {
    let mut used = HashSet::new();
    let mut parts = Vec::with_capacity(order.len());
    for id in order {
        let block = blocks.iter().find(|b| &b.id == id).ok_or_else(|| AssemblyError::UnknownBlock(id.clone()))?;
        if !used.insert(id.as_str()) {
            return Err(AssemblyError::IncompletePermutation);
        }
        parts.push(block.code.as_str());
    }
    if used.len() != blocks.len() {
        return Err(AssemblyError::IncompletePermutation);
    }
    Ok(parts.join("\n"))
}

/// The payload an author's own key corresponds to, if the key is complete.
pub fn author_payload(m: &ExerciseManifest) -> Option<Payload> {
    let ins = &m.instructions;
    let blank_keys = || -> Option<Payload> {
        let blanks = ins.blanks.as_ref().filter(|b| !b.is_empty())?;
        let answers = blanks.iter().map(|b| Some((b.id.clone(), b.key.clone()?))).collect::<Option<_>>()?;
        Some(Payload::BlankAnswers(answers))
    };
    match m.exercise_type {
        ExerciseType::FromScratch | ExerciseType::BugFix | ExerciseType::Baseline => {
            Some(Payload::Code(m.tests.solution.clone()))
        }
        ExerciseType::Skeleton => blank_keys().or_else(|| Some(Payload::Code(m.tests.solution.clone()))),
        ExerciseType::FillBlanks => blank_keys(),
        ExerciseType::SortBlocks => {
            Some(Payload::BlockOrder(ins.blocks.as_ref()?.iter().map(|b| b.id.clone()).collect()))
        }
        ExerciseType::FindBug => match ins.answer_key.as_ref()? {
            AnswerKey::Lines(lines) => Some(Payload::LineSet(lines.clone())),
            AnswerKey::Choice(_) => None,
        },
        ExerciseType::CompileErrorQuiz | ExerciseType::InterpretationQuiz => match ins.answer_key.as_ref()? {
            AnswerKey::Choice(c) => Some(Payload::Choice(*c)),
            AnswerKey::Lines(_) => None,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlankView {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicTest {
    pub name: String,
    pub input: String,
    pub expected_output: String,
}

/// What a student sees. Never holds hidden tests, the solution, the
/// answer key or blank keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentBundle {
    pub id: String,
    pub title: String,
    pub exercise_type: ExerciseType,
    pub statement_md: String,
    pub difficulty: u8,
    pub allow_local_run: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compiler_message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blanks: Option<Vec<BlankView>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Block>>,
    pub public_tests: Vec<PublicTest>,
    pub base_points: u64,
    /// Bonus modes, only when the exercise reveals them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bonus_modes: Option<ModeConfigs>,
}

/// Builds the student view. Sort-block exercises get their blocks shuffled
/// by a permutation derived from `seed` alone.
pub fn present(m: &ExerciseManifest, seed: u64) -> StudentBundle {
    use ExerciseType as T;
    let ins = &m.instructions;
    let t = m.exercise_type;
    let skeleton = matches!(t, T::Skeleton | T::FillBlanks | T::BugFix).then(|| ins.skeleton.clone()).flatten();
    let baseline = (t == T::Baseline).then(|| ins.skeleton.clone().or_else(|| m.tests.baseline.clone())).flatten();
    let snippet = t.is_quiz().then(|| ins.snippet.clone()).flatten();
    let compiler_message = (t == T::CompileErrorQuiz).then(|| ins.compiler_message.clone()).flatten();
    let choices = t.is_choice_quiz().then(|| ins.choices.clone()).flatten();
    let blanks = matches!(t, T::Skeleton | T::FillBlanks)
        .then(|| {
            ins.blanks
                .as_ref()
                .map(|bs| bs.iter().map(|b| BlankView { id: b.id.clone(), options: b.options.clone() }).collect())
        })
        .flatten();
    let blocks = (t == T::SortBlocks)
        .then(|| {
            ins.blocks.clone().map(|mut bs| {
                bs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                bs
            })
        })
        .flatten();
    let public_tests = m
        .tests
        .cases
        .iter()
        .filter(|c| c.visibility == Visibility::Public)
        .map(|c| PublicTest {
            name: c.name.clone(),
            input: c.input.clone(),
            expected_output: c.expected_output.clone(),
        })
        .collect();
    StudentBundle {
        id: m.id.clone(),
        title: m.title.clone(),
        exercise_type: t,
        statement_md: ins.statement_md.clone(),
        difficulty: m.metadata.difficulty,
        allow_local_run: m.metadata.allow_local_run,
        skeleton,
        baseline,
        snippet,
        compiler_message,
        choices,
        blanks,
        blocks,
        public_tests,
        base_points: m.scoring.base_points,
        bonus_modes: m.metadata.reveal_bonuses.then(|| m.scoring.modes.clone()),
    }
}
