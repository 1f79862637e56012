use std::collections::{BTreeSet, HashMap};

use super::ast::{BinaryOp, ConstructKind, Expr, ExprKind, Pos, Program, Stmt, StmtKind, UnaryOp};
use super::{Diagnostic, Limits, RunMetrics, RunResult, RunStatus};

enum Stop {
    StepLimit,
    CellLimit,
    Error(Diagnostic),
}

type Flow<T> = Result<T, Stop>;

fn fail<T>(pos: Pos, message: impl Into<String>) -> Flow<T> {
    Err(Stop::Error(Diagnostic::new(pos.line, pos.col, message)))
}

/// Runs a parsed program against `input`, metering steps and live cells.
///
/// One step is charged per statement executed and per expression node
/// evaluated. A scalar occupies one cell from its first binding on; an
/// array occupies `size` cells between `alloc` and `free`. The unevaluated
/// operand of a short-circuited `&&`/`||` costs nothing.
pub fn execute(program: &Program, input: &str, limits: &Limits) -> RunResult {
    let mut machine = Machine {
        limits,
        input: input.split_whitespace().collect(),
        cursor: 0,
        scalars: HashMap::new(),
        arrays: HashMap::new(),
        live_cells: 0,
        output: String::new(),
        metrics: RunMetrics::default(),
    };
    let status = match machine.block(&program.stmts) {
        Ok(()) => RunStatus::Ok,
        Err(Stop::StepLimit) => RunStatus::StepLimit,
        Err(Stop::CellLimit) => RunStatus::CellLimit,
        Err(Stop::Error(d)) => RunStatus::RuntimeError(d),
    };
    RunResult { status, output: machine.output, metrics: machine.metrics }
}

struct Machine<'a> {
    limits: &'a Limits,
    input: Vec<&'a str>,
    cursor: usize,
    scalars: HashMap<String, i64>,
    arrays: HashMap<String, Vec<i64>>,
    live_cells: u64,
    output: String,
    metrics: RunMetrics,
}

impl Machine<'_> {
    fn tick(&mut self) -> Flow<()> {
        if self.metrics.steps >= self.limits.max_steps {
            return Err(Stop::StepLimit);
        }
        self.metrics.steps += 1;
        Ok(())
    }

    fn mark(&mut self, kind: ConstructKind) {
        self.metrics.trace.insert(kind);
    }

    fn claim_cells(&mut self, n: u64) -> Flow<()> {
        let total = self.live_cells.saturating_add(n);
        if total > self.limits.max_cells {
            return Err(Stop::CellLimit);
        }
        self.live_cells = total;
        self.metrics.peak_cells = self.metrics.peak_cells.max(total);
        Ok(())
    }

    fn bind(&mut self, name: &str, value: i64) -> Flow<()> {
        if let Some(slot) = self.scalars.get_mut(name) {
            *slot = value;
        } else {
            self.claim_cells(1)?;
            self.scalars.insert(name.to_string(), value);
        }
        Ok(())
    }

    fn block(&mut self, stmts: &[Stmt]) -> Flow<()> {
        stmts.iter().try_for_each(|s| self.stmt(s))
    }

    fn stmt(&mut self, stmt: &Stmt) -> Flow<()> {
        self.tick()?;
        self.mark(stmt.kind.construct());
        match &stmt.kind {
            StmtKind::Assign { name, value } => {
                let v = self.eval(value)?;
                self.bind(name, v)
            }
            StmtKind::ArrayAssign { name, index, value } => {
                let i = self.eval(index)?;
                let v = self.eval(value)?;
                let slot = self.element(name, i, stmt.pos)?;
                *slot = v;
                Ok(())
            }
            StmtKind::Read { name } => {
                let Some(word) = self.input.get(self.cursor).copied() else {
                    return fail(stmt.pos, "read on exhausted input");
                };
                let Ok(v) = word.parse::<i64>() else {
                    return fail(stmt.pos, format!("invalid integer input '{word}'"));
                };
                self.cursor += 1;
                self.bind(name, v)
            }
            StmtKind::Print { value } => {
                let v = self.eval(value)?;
                self.output.push_str(&v.to_string());
                self.output.push('\n');
                Ok(())
            }
            StmtKind::If { cond, then_body, else_body } => {
                if self.eval(cond)? != 0 {
                    self.block(then_body)
                } else {
                    self.block(else_body)
                }
            }
            StmtKind::While { cond, body } => {
                while self.eval(cond)? != 0 {
                    self.block(body)?;
                }
                Ok(())
            }
            StmtKind::Alloc { name, size } => {
                let n = self.eval(size)?;
                if n <= 0 {
                    return fail(stmt.pos, format!("non-positive array size {n}"));
                }
                if self.arrays.contains_key(name) {
                    return fail(stmt.pos, format!("array '{name}' is already allocated"));
                }
                self.claim_cells(n as u64)?;
                self.arrays.insert(name.clone(), vec![0; n as usize]);
                Ok(())
            }
            StmtKind::Free { name } => match self.arrays.remove(name) {
                Some(cells) => {
                    self.live_cells -= cells.len() as u64;
                    Ok(())
                }
                None => fail(stmt.pos, format!("free of unallocated array '{name}'")),
            },
        }
    }

    fn element(&mut self, name: &str, index: i64, pos: Pos) -> Flow<&mut i64> {
        let Some(cells) = self.arrays.get_mut(name) else {
            return fail(pos, format!("array '{name}' is not allocated"));
        };
        let len = cells.len();
        match usize::try_from(index).ok().filter(|&i| i < len) {
            Some(i) => Ok(&mut cells[i]),
            None => fail(pos, format!("index {index} out of bounds for array '{name}' of size {len}")),
        }
    }

    fn eval(&mut self, expr: &Expr) -> Flow<i64> {
        self.tick()?;
        match &expr.kind {
            ExprKind::IntLit(v) => Ok(*v),
            ExprKind::Var(name) => match self.scalars.get(name) {
                Some(v) => Ok(*v),
                None => fail(expr.pos, format!("unbound variable '{name}'")),
            },
            ExprKind::ArrayRef { name, index } => {
                self.mark(ConstructKind::ArrayRef);
                let i = self.eval(index)?;
                self.element(name, i, expr.pos).map(|v| *v)
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand)?;
                Ok(match op {
                    UnaryOp::Neg => v.wrapping_neg(),
                    UnaryOp::Not => (v == 0) as i64,
                })
            }
            ExprKind::Binary { op: BinaryOp::And, lhs, rhs } => {
                if self.eval(lhs)? == 0 {
                    return Ok(0);
                }
                Ok((self.eval(rhs)? != 0) as i64)
            }
            ExprKind::Binary { op: BinaryOp::Or, lhs, rhs } => {
                if self.eval(lhs)? != 0 {
                    return Ok(1);
                }
                Ok((self.eval(rhs)? != 0) as i64)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                Ok(match op {
                    BinaryOp::Add => a.wrapping_add(b),
                    BinaryOp::Sub => a.wrapping_sub(b),
                    BinaryOp::Mul => a.wrapping_mul(b),
                    BinaryOp::Div if b == 0 => return fail(expr.pos, "division by zero"),
                    BinaryOp::Div => a.wrapping_div(b),
                    BinaryOp::Rem if b == 0 => return fail(expr.pos, "modulo by zero"),
                    BinaryOp::Rem => a.wrapping_rem(b),
                    BinaryOp::Lt => (a < b) as i64,
                    BinaryOp::Le => (a <= b) as i64,
                    BinaryOp::Gt => (a > b) as i64,
                    BinaryOp::Ge => (a >= b) as i64,
                    BinaryOp::Eq => (a == b) as i64,
                    BinaryOp::Ne => (a != b) as i64,
                    BinaryOp::And | BinaryOp::Or => unreachable!("handled above"),
                })
            }
        }
    }
}

/// Trace of constructs in a program that would be visited by a walk of
/// every node, regardless of control flow.
pub fn static_constructs(program: &Program) -> BTreeSet<ConstructKind> {
    fn expr(e: &Expr, out: &mut BTreeSet<ConstructKind>) {
        match &e.kind {
            ExprKind::IntLit(_) | ExprKind::Var(_) => {}
            ExprKind::ArrayRef { index, .. } => {
                out.insert(ConstructKind::ArrayRef);
                expr(index, out);
            }
            ExprKind::Unary { operand, .. } => expr(operand, out),
            ExprKind::Binary { lhs, rhs, .. } => {
                expr(lhs, out);
                expr(rhs, out);
            }
        }
    }
    fn stmts(list: &[Stmt], out: &mut BTreeSet<ConstructKind>) {
        for s in list {
            out.insert(s.kind.construct());
            match &s.kind {
                StmtKind::Assign { value, .. } | StmtKind::Print { value } => expr(value, out),
                StmtKind::ArrayAssign { index, value, .. } => {
                    expr(index, out);
                    expr(value, out);
                }
                StmtKind::Alloc { size, .. } => expr(size, out),
                StmtKind::Read { .. } | StmtKind::Free { .. } => {}
                StmtKind::If { cond, then_body, else_body } => {
                    expr(cond, out);
                    stmts(then_body, out);
                    stmts(else_body, out);
                }
                StmtKind::While { cond, body } => {
                    expr(cond, out);
                    stmts(body, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    stmts(&program.stmts, &mut out);
    out
}
