use serde::{Deserialize, Serialize};

use super::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keyword {
    Read,
    Print,
    If,
    Else,
    While,
    Alloc,
    Free,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Self> {
        Some(match word {
            "read" => Keyword::Read,
            "print" => Keyword::Print,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "while" => Keyword::While,
            "alloc" => Keyword::Alloc,
            "free" => Keyword::Free,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    AndAnd,
    OrOr,
    Bang,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
}

impl Symbol {
    pub fn text(self) -> &'static str {
        match self {
            Symbol::Assign => "=",
            Symbol::Plus => "+",
            Symbol::Minus => "-",
            Symbol::Star => "*",
            Symbol::Slash => "/",
            Symbol::Percent => "%",
            Symbol::Lt => "<",
            Symbol::Le => "<=",
            Symbol::Gt => ">",
            Symbol::Ge => ">=",
            Symbol::EqEq => "==",
            Symbol::NotEq => "!=",
            Symbol::AndAnd => "&&",
            Symbol::OrOr => "||",
            Symbol::Bang => "!",
            Symbol::LParen => "(",
            Symbol::RParen => ")",
            Symbol::LBrace => "{",
            Symbol::RBrace => "}",
            Symbol::LBracket => "[",
            Symbol::RBracket => "]",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Ident,
    Int(i64),
    Keyword(Keyword),
    Symbol(Symbol),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub col: u32,
    pub text: String,
}

impl Token {
    /// Position just past the last character of this token.
    pub fn end(&self) -> (u32, u32) {
        (self.line, self.col + self.text.chars().count() as u32)
    }
}

/// Splits source into tokens. `#` comments and whitespace produce nothing.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut tokens = Vec::new();
    for (line_idx, line) in source.split('\n').enumerate() {
        let line_no = line_idx as u32 + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i as u32 + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let kind = match Keyword::from_word(&text) {
                    Some(kw) => TokenKind::Keyword(kw),
                    None => TokenKind::Ident,
                };
                tokens.push(Token { kind, line: line_no, col, text });
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let value = text
                    .parse::<i64>()
                    .map_err(|_| Diagnostic::new(line_no, col, format!("integer literal '{text}' out of range")))?;
                tokens.push(Token { kind: TokenKind::Int(value), line: line_no, col, text });
                continue;
            }
            let next = chars.get(i + 1).copied();
            let (sym, width) = match (c, next) {
                ('<', Some('=')) => (Symbol::Le, 2),
                ('>', Some('=')) => (Symbol::Ge, 2),
                ('=', Some('=')) => (Symbol::EqEq, 2),
                ('!', Some('=')) => (Symbol::NotEq, 2),
                ('&', Some('&')) => (Symbol::AndAnd, 2),
                ('|', Some('|')) => (Symbol::OrOr, 2),
                ('=', _) => (Symbol::Assign, 1),
                ('+', _) => (Symbol::Plus, 1),
                ('-', _) => (Symbol::Minus, 1),
                ('*', _) => (Symbol::Star, 1),
                ('/', _) => (Symbol::Slash, 1),
                ('%', _) => (Symbol::Percent, 1),
                ('<', _) => (Symbol::Lt, 1),
                ('>', _) => (Symbol::Gt, 1),
                ('!', _) => (Symbol::Bang, 1),
                ('(', _) => (Symbol::LParen, 1),
                (')', _) => (Symbol::RParen, 1),
                ('{', _) => (Symbol::LBrace, 1),
                ('}', _) => (Symbol::RBrace, 1),
                ('[', _) => (Symbol::LBracket, 1),
                (']', _) => (Symbol::RBracket, 1),
                _ => return Err(Diagnostic::new(line_no, col, format!("illegal character '{c}'"))),
            };
            tokens.push(Token { kind: TokenKind::Symbol(sym), line: line_no, col, text: sym.text().to_string() });
            i += width;
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        tokenize(src).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn minimal_stream() {
        let toks = tokenize("x = 1").unwrap();
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[0].kind, TokenKind::Ident);
        assert_eq!(toks[1].kind, TokenKind::Symbol(Symbol::Assign));
        assert_eq!(toks[2].kind, TokenKind::Int(1));
    }

    #[test]
    fn keyword_in_comment_is_not_a_token() {
        assert!(tokenize("# while").unwrap().is_empty());
        assert_eq!(texts("x = 1 # while x"), ["x", "=", "1"]);
    }

    #[test]
    fn while_loop_has_eleven_tokens() {
        // while x < 10 { x = x + 1 }
        assert_eq!(texts("while x<10 { x = x+1 }"), ["while", "x", "<", "10", "{", "x", "=", "x", "+", "1", "}"]);
    }

    #[test]
    fn two_char_operators() {
        assert_eq!(
            texts("a<=b>=c==d!=e&&f||!g"),
            ["a", "<=", "b", ">=", "c", "==", "d", "!=", "e", "&&", "f", "||", "!", "g"]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("x = 1\n  print x").unwrap();
        let pos: Vec<_> = toks.iter().map(|t| (t.line, t.col)).collect();
        assert_eq!(pos, [(1, 1), (1, 3), (1, 5), (2, 3), (2, 9)]);
    }

    #[test]
    fn illegal_character() {
        let err = tokenize("x = 1\ny = $").unwrap_err();
        assert_eq!(err.to_string(), "line 2, col 5: illegal character '$'");
        assert!(tokenize("a & b").is_err());
    }

    #[test]
    fn oversized_literal() {
        assert!(tokenize("x = 99999999999999999999").is_err());
    }
}
