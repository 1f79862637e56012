//! A small integer language with exact execution metering.
//!
//! Programs are sequences of statements (`x = e`, `a[i] = e`, `read x`,
//! `print e`, `if`/`else`, `while`, `alloc a n`, `free a`) over 64-bit
//! integers. Every run reports the number of steps taken, the peak number
//! of live memory cells, and which construct kinds were executed. Those
//! numbers are a pure function of program and input, so scoring that
//! depends on speed or memory is reproducible.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub mod ast;
mod interp;
mod lexer;
mod parser;

pub use ast::ConstructKind;
pub use interp::{execute, static_constructs};
pub use lexer::{tokenize, Keyword, Symbol, Token, TokenKind};
pub use parser::parse;

/// A positioned compiler or runtime message, rendered as
/// `line <L>, col <C>: <message>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: u32, col: u32, message: impl Into<String>) -> Self {
        Diagnostic { line, col, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, col {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for Diagnostic {}

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
pub const DEFAULT_MAX_CELLS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub max_steps: u64,
    pub max_cells: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_steps: DEFAULT_MAX_STEPS, max_cells: DEFAULT_MAX_CELLS }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub steps: u64,
    pub peak_cells: u64,
    pub trace: BTreeSet<ConstructKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    RuntimeError(Diagnostic),
    StepLimit,
    CellLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: RunStatus,
    pub output: String,
    pub metrics: RunMetrics,
}

/// Lexes and parses `source` in one go.
pub fn compile(source: &str) -> Result<ast::Program, Diagnostic> {
    parse(&tokenize(source)?)
}

/// Compiles and runs `source`; a compile failure is returned as `Err`.
pub fn run_source(source: &str, input: &str, limits: &Limits) -> Result<RunResult, Diagnostic> {
    Ok(execute(&compile(source)?, input, limits))
}
