//! Tokenizer for the solver dialect.
//!
//! Produces a flat token stream with 1-based line/column positions.
//! `%` comments and whitespace are skipped. A `.` after digits starts a
//! decimal only when another digit follows, so `12.` is a number and a
//! clause terminator.

use crate::error::ParseError;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Atom(String),
    Var(String),
    Number(Rational),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Period,
    ColonDash,
    Bar,
    Plus,
    Minus,
    Star,
    Slash,
    /// `=` (only legal inside `{…}` constraints)
    Equals,
    /// `=:=`
    ArithEq,
    /// `=\=`
    ArithNeq,
    Lt,
    Gt,
    /// `=<`
    Le,
    /// `>=`
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Source text of the token, used verbatim in error messages.
    pub lexeme: String,
    pub line: usize,
    pub column: usize,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Lexer {
    fn new(source: &str) -> Self {
        Lexer {
            chars: source.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if pred(c) {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        out
    }

    fn next_token(&mut self) -> Result<Option<Token>, ParseError> {
        self.skip_trivia();
        let (line, column) = (self.line, self.column);
        let c = match self.peek() {
            Some(c) => c,
            None => return Ok(None),
        };

        let token = |kind: TokenKind, lexeme: String| Token {
            kind,
            lexeme,
            line,
            column,
        };

        if c.is_ascii_lowercase() {
            let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
            return Ok(Some(token(TokenKind::Atom(name.clone()), name)));
        }
        if c.is_ascii_uppercase() || c == '_' {
            let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
            return Ok(Some(token(TokenKind::Var(name.clone()), name)));
        }
        if c.is_ascii_digit() {
            let mut text = self.take_while(|c| c.is_ascii_digit());
            if self.peek() == Some('.') && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                self.bump();
                text.push('.');
                text.push_str(&self.take_while(|c| c.is_ascii_digit()));
            }
            let value = Rational::parse_decimal(&text)
                .ok_or_else(|| ParseError::new(line, column, "number literal", text.clone()))?;
            return Ok(Some(token(TokenKind::Number(value), text)));
        }

        self.bump();
        let simple = |kind: TokenKind| {
            Ok(Some(Token {
                kind,
                lexeme: c.to_string(),
                line,
                column,
            }))
        };
        match c {
            '(' => simple(TokenKind::LParen),
            ')' => simple(TokenKind::RParen),
            '[' => simple(TokenKind::LBracket),
            ']' => simple(TokenKind::RBracket),
            '{' => simple(TokenKind::LBrace),
            '}' => simple(TokenKind::RBrace),
            ',' => simple(TokenKind::Comma),
            '.' => simple(TokenKind::Period),
            '|' => simple(TokenKind::Bar),
            '+' => simple(TokenKind::Plus),
            '-' => simple(TokenKind::Minus),
            '*' => simple(TokenKind::Star),
            '/' => simple(TokenKind::Slash),
            ':' => {
                if self.peek() == Some('-') {
                    self.bump();
                    Ok(Some(token(TokenKind::ColonDash, ":-".into())))
                } else {
                    Err(ParseError::new(line, column, "':-'", ":"))
                }
            }
            '=' => match self.peek() {
                Some(':') => {
                    if self.peek_at(1) == Some('=') {
                        self.bump();
                        self.bump();
                        Ok(Some(token(TokenKind::ArithEq, "=:=".into())))
                    } else {
                        Err(ParseError::new(line, column, "'=:='", "=:"))
                    }
                }
                Some('\\') => {
                    if self.peek_at(1) == Some('=') {
                        self.bump();
                        self.bump();
                        Ok(Some(token(TokenKind::ArithNeq, "=\\=".into())))
                    } else {
                        Err(ParseError::new(line, column, "'=\\='", "=\\"))
                    }
                }
                Some('<') => {
                    self.bump();
                    Ok(Some(token(TokenKind::Le, "=<".into())))
                }
                _ => Ok(Some(token(TokenKind::Equals, "=".into()))),
            },
            '<' => simple(TokenKind::Lt),
            '>' => {
                if self.peek() == Some('=') {
                    self.bump();
                    Ok(Some(token(TokenKind::Ge, ">=".into())))
                } else {
                    simple(TokenKind::Gt)
                }
            }
            other => Err(ParseError::new(line, column, "token", other.to_string())),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut tokens = Vec::new();
        while let Some(tok) = self.next_token()? {
            tokens.push(tok);
        }
        Ok(tokens)
    }
}

/// Tokenizes `source`, failing on the first illegal character.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    Lexer::new(source).run()
}
