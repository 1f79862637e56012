use serde::{Deserialize, Serialize};

/// Source position of a node: 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub pos: Pos,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign { name: String, value: Expr },
    ArrayAssign { name: String, index: Expr, value: Expr },
    Read { name: String },
    Print { value: Expr },
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    Alloc { name: String, size: Expr },
    Free { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub pos: Pos,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    IntLit(i64),
    Var(String),
    ArrayRef { name: String, index: Box<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

/// Language construct kinds recorded in the execution trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConstructKind {
    Assign,
    Read,
    Print,
    If,
    While,
    Alloc,
    Free,
    ArrayRef,
}

impl ConstructKind {
    pub const ALL: [ConstructKind; 8] = [
        ConstructKind::Assign,
        ConstructKind::Read,
        ConstructKind::Print,
        ConstructKind::If,
        ConstructKind::While,
        ConstructKind::Alloc,
        ConstructKind::Free,
        ConstructKind::ArrayRef,
    ];

    /// The construct a source token most directly denotes, if any.
    pub fn for_token(token: &str) -> Option<Self> {
        Some(match token {
            "=" => ConstructKind::Assign,
            "read" => ConstructKind::Read,
            "print" => ConstructKind::Print,
            "if" | "else" => ConstructKind::If,
            "while" => ConstructKind::While,
            "alloc" => ConstructKind::Alloc,
            "free" => ConstructKind::Free,
            "[" | "]" => ConstructKind::ArrayRef,
            _ => return None,
        })
    }
}

impl StmtKind {
    pub fn construct(&self) -> ConstructKind {
        match self {
            StmtKind::Assign { .. } | StmtKind::ArrayAssign { .. } => ConstructKind::Assign,
            StmtKind::Read { .. } => ConstructKind::Read,
            StmtKind::Print { .. } => ConstructKind::Print,
            StmtKind::If { .. } => ConstructKind::If,
            StmtKind::While { .. } => ConstructKind::While,
            StmtKind::Alloc { .. } => ConstructKind::Alloc,
            StmtKind::Free { .. } => ConstructKind::Free,
        }
    }
}
