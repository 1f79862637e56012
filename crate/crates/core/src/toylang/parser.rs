use super::ast::{BinaryOp, Expr, ExprKind, Pos, Program, Stmt, StmtKind, UnaryOp};
use super::lexer::{Keyword, Symbol, Token, TokenKind};
use super::Diagnostic;

/// Parses a token stream into a program.
///
/// Statements need no separators; an expression ends at the first token
/// that cannot continue it. Errors point at the offending token, or one
/// column past the final token when input ends early.
pub fn parse(tokens: &[Token]) -> Result<Program, Diagnostic> {
    let mut p = Parser { tokens, pos: 0 };
    let mut stmts = Vec::new();
    while !p.at_end() {
        stmts.push(p.statement()?);
    }
    Ok(Program { stmts })
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn end_pos(&self) -> Pos {
        match self.tokens.last() {
            Some(t) => {
                let (line, col) = t.end();
                Pos { line, col }
            }
            None => Pos { line: 1, col: 1 },
        }
    }

    fn error_here(&self, message: String) -> Diagnostic {
        let pos = match self.peek() {
            Some(t) => Pos { line: t.line, col: t.col },
            None => self.end_pos(),
        };
        Diagnostic::new(pos.line, pos.col, message)
    }

    fn unexpected(&self) -> Diagnostic {
        match self.peek() {
            Some(t) => self.error_here(format!("unexpected token '{}'", t.text)),
            None => self.error_here("unexpected token '<eof>'".to_string()),
        }
    }

    fn check_symbol(&self, sym: Symbol) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Symbol(sym))
    }

    fn eat_symbol(&mut self, sym: Symbol) -> bool {
        if self.check_symbol(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, sym: Symbol) -> Result<(), Diagnostic> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{}'", sym.text())))
        }
    }

    fn expect_ident(&mut self) -> Result<String, Diagnostic> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            _ => Err(self.unexpected()),
        }
    }

    fn statement(&mut self) -> Result<Stmt, Diagnostic> {
        let tok = self.peek().ok_or_else(|| self.unexpected())?;
        let pos = Pos { line: tok.line, col: tok.col };
        let kind = match tok.kind {
            TokenKind::Ident => {
                self.pos += 1;
                let name = tok.text.clone();
                if self.eat_symbol(Symbol::LBracket) {
                    let index = self.expression()?;
                    self.expect_symbol(Symbol::RBracket)?;
                    self.expect_symbol(Symbol::Assign)?;
                    let value = self.expression()?;
                    StmtKind::ArrayAssign { name, index, value }
                } else {
                    self.expect_symbol(Symbol::Assign)?;
                    let value = self.expression()?;
                    StmtKind::Assign { name, value }
                }
            }
            TokenKind::Keyword(Keyword::Read) => {
                self.pos += 1;
                StmtKind::Read { name: self.expect_ident()? }
            }
            TokenKind::Keyword(Keyword::Print) => {
                self.pos += 1;
                StmtKind::Print { value: self.expression()? }
            }
            TokenKind::Keyword(Keyword::If) => {
                self.pos += 1;
                return self.if_rest(pos);
            }
            TokenKind::Keyword(Keyword::While) => {
                self.pos += 1;
                let cond = self.expression()?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            TokenKind::Keyword(Keyword::Alloc) => {
                self.pos += 1;
                let name = self.expect_ident()?;
                let size = self.expression()?;
                StmtKind::Alloc { name, size }
            }
            TokenKind::Keyword(Keyword::Free) => {
                self.pos += 1;
                StmtKind::Free { name: self.expect_ident()? }
            }
            _ => return Err(self.unexpected()),
        };
        Ok(Stmt { pos, kind })
    }

    // `if` already consumed
    fn if_rest(&mut self, pos: Pos) -> Result<Stmt, Diagnostic> {
        let cond = self.expression()?;
        let then_body = self.block()?;
        let mut else_body = Vec::new();
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword(Keyword::Else)) {
            self.pos += 1;
            match self.peek() {
                Some(t) if t.kind == TokenKind::Keyword(Keyword::If) => {
                    let nested = Pos { line: t.line, col: t.col };
                    self.pos += 1;
                    else_body.push(self.if_rest(nested)?);
                }
                _ => else_body = self.block()?,
            }
        }
        Ok(Stmt { pos, kind: StmtKind::If { cond, then_body, else_body } })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, Diagnostic> {
        self.expect_symbol(Symbol::LBrace)?;
        let mut stmts = Vec::new();
        loop {
            if self.eat_symbol(Symbol::RBrace) {
                return Ok(stmts);
            }
            if self.at_end() {
                return Err(self.error_here("expected '}'".to_string()));
            }
            stmts.push(self.statement()?);
        }
    }

    fn expression(&mut self) -> Result<Expr, Diagnostic> {
        self.binary_level(0)
    }

    fn binary_level(&mut self, level: usize) -> Result<Expr, Diagnostic> {
        const LEVELS: [&[(Symbol, BinaryOp)]; 5] = [
            &[(Symbol::OrOr, BinaryOp::Or)],
            &[(Symbol::AndAnd, BinaryOp::And)],
            &[
                (Symbol::Lt, BinaryOp::Lt),
                (Symbol::Le, BinaryOp::Le),
                (Symbol::Gt, BinaryOp::Gt),
                (Symbol::Ge, BinaryOp::Ge),
                (Symbol::EqEq, BinaryOp::Eq),
                (Symbol::NotEq, BinaryOp::Ne),
            ],
            &[(Symbol::Plus, BinaryOp::Add), (Symbol::Minus, BinaryOp::Sub)],
            &[(Symbol::Star, BinaryOp::Mul), (Symbol::Slash, BinaryOp::Div), (Symbol::Percent, BinaryOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary_level(level + 1)?;
        'outer: loop {
            for &(sym, op) in LEVELS[level] {
                if let Some(t) = self.peek() {
                    if t.kind == TokenKind::Symbol(sym) {
                        self.pos += 1;
                        let rhs = self.binary_level(level + 1)?;
                        lhs = Expr {
                            pos: Pos { line: t.line, col: t.col },
                            kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                        };
                        continue 'outer;
                    }
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        let Some(tok) = self.peek() else {
            return Err(self.error_here("expected expression".to_string()));
        };
        let pos = Pos { line: tok.line, col: tok.col };
        let op = match tok.kind {
            TokenKind::Symbol(Symbol::Minus) => Some(UnaryOp::Neg),
            TokenKind::Symbol(Symbol::Bang) => Some(UnaryOp::Not),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let operand = self.unary()?;
            return Ok(Expr { pos, kind: ExprKind::Unary { op, operand: Box::new(operand) } });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, Diagnostic> {
        let Some(tok) = self.peek() else {
            return Err(self.error_here("expected expression".to_string()));
        };
        let pos = Pos { line: tok.line, col: tok.col };
        match tok.kind {
            TokenKind::Int(v) => {
                self.bump();
                Ok(Expr { pos, kind: ExprKind::IntLit(v) })
            }
            TokenKind::Ident => {
                self.bump();
                let name = tok.text.clone();
                if self.eat_symbol(Symbol::LBracket) {
                    let index = self.expression()?;
                    self.expect_symbol(Symbol::RBracket)?;
                    Ok(Expr { pos, kind: ExprKind::ArrayRef { name, index: Box::new(index) } })
                } else {
                    Ok(Expr { pos, kind: ExprKind::Var(name) })
                }
            }
            TokenKind::Symbol(Symbol::LParen) => {
                self.bump();
                let inner = self.expression()?;
                self.expect_symbol(Symbol::RParen)?;
                Ok(inner)
            }
            _ => Err(self.error_here("expected expression".to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toylang::tokenize;

    fn parse_src(src: &str) -> Result<Program, Diagnostic> {
        parse(&tokenize(src).unwrap())
    }

    #[test]
    fn statements_without_separators() {
        let prog = parse_src("x = 1 print x").unwrap();
        assert_eq!(prog.stmts.len(), 2);
    }

    #[test]
    fn unclosed_block_points_past_last_token() {
        // last token `x` sits at col 14, so one past it is col 15
        let err = parse_src("if x { print x").unwrap_err();
        assert_eq!(err.to_string(), "line 1, col 15: expected '}'");
    }

    #[test]
    fn missing_expression() {
        let err = parse_src("x =").unwrap_err();
        assert_eq!(err.message, "expected expression");
        assert_eq!((err.line, err.col), (1, 4));
    }

    #[test]
    fn unexpected_token_at_statement_start() {
        let err = parse_src("x = 1\n) y = 2").unwrap_err();
        assert_eq!(err.to_string(), "line 2, col 1: unexpected token ')'");
    }

    #[test]
    fn ident_needs_assignment() {
        let err = parse_src("x 1").unwrap_err();
        assert_eq!(err.to_string(), "line 1, col 3: expected '='");
    }

    #[test]
    fn precedence_mul_over_add_over_cmp_over_and_over_or() {
        let prog = parse_src("x = 1 + 2 * 3 < 4 && 5 || 6").unwrap();
        let StmtKind::Assign { value, .. } = &prog.stmts[0].kind else { panic!() };
        let ExprKind::Binary { op: BinaryOp::Or, lhs, .. } = &value.kind else { panic!() };
        let ExprKind::Binary { op: BinaryOp::And, lhs, .. } = &lhs.kind else { panic!() };
        let ExprKind::Binary { op: BinaryOp::Lt, lhs, .. } = &lhs.kind else { panic!() };
        let ExprKind::Binary { op: BinaryOp::Add, rhs, .. } = &lhs.kind else { panic!() };
        assert!(matches!(rhs.kind, ExprKind::Binary { op: BinaryOp::Mul, .. }));
    }

    #[test]
    fn unary_binds_tightest_and_parens_group() {
        let prog = parse_src("x = -(1 + 2) * 3").unwrap();
        let StmtKind::Assign { value, .. } = &prog.stmts[0].kind else { panic!() };
        let ExprKind::Binary { op: BinaryOp::Mul, lhs, .. } = &value.kind else { panic!() };
        assert!(matches!(lhs.kind, ExprKind::Unary { op: UnaryOp::Neg, .. }));
    }

    #[test]
    fn binary_node_sits_at_operator() {
        let prog = parse_src("print 1/0").unwrap();
        let StmtKind::Print { value } = &prog.stmts[0].kind else { panic!() };
        assert_eq!(value.pos, Pos { line: 1, col: 8 });
    }

    #[test]
    fn else_if_chain() {
        let prog = parse_src("if x { a = 1 } else if y { a = 2 } else { a = 3 }").unwrap();
        let StmtKind::If { else_body, .. } = &prog.stmts[0].kind else { panic!() };
        assert_eq!(else_body.len(), 1);
        assert!(matches!(&else_body[0].kind, StmtKind::If { else_body, .. } if else_body.len() == 1));
    }

    #[test]
    fn arrays_alloc_free() {
        let prog = parse_src("alloc a 3 a[0] = 1 print a[0] free a").unwrap();
        assert_eq!(prog.stmts.len(), 4);
        assert!(matches!(prog.stmts[1].kind, StmtKind::ArrayAssign { .. }));
    }

    #[test]
    fn read_requires_name() {
        assert_eq!(parse_src("read 5").unwrap_err().message, "unexpected token '5'");
        assert_eq!(parse_src("read").unwrap_err().to_string(), "line 1, col 5: unexpected token '<eof>'");
    }
}
