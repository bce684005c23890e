//! Tokenizer shared by the Feather parser.

use std::fmt;

use super::{ParseError, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Lowercase-initial word: keyword or attribute identifier.
    Word(String),
    /// Uppercase-initial identifier.
    Var(String),
    /// `_name`, `_parent`, `_decomp` or `_decompID`.
    Structural(String),
    Str(String),
    Int(i64),
    Real(f64),
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Colon,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) | Tok::Var(w) | Tok::Structural(w) => write!(f, "'{w}'"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Int(i) => write!(f, "'{i}'"),
            Tok::Real(r) => write!(f, "'{r}'"),
            Tok::Eof => f.write_str("end of input"),
            other => {
                let s = match other {
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::Comma => ",",
                    Tok::Semi => ";",
                    Tok::Dot => ".",
                    Tok::Colon => ":",
                    Tok::Eq => "=",
                    Tok::Ne => "<>",
                    Tok::Lt => "<",
                    Tok::Le => "<=",
                    Tok::Gt => ">",
                    Tok::Ge => ">=",
                    Tok::Plus => "+",
                    Tok::Minus => "-",
                    Tok::Star => "*",
                    Tok::Slash => "/",
                    _ => "%",
                };
                write!(f, "'{s}'")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

/// Characters allowed inside a string literal besides letters and digits.
/// The space is accepted too, since feature names contain spaces.
pub const OTHER_CHARS: &str = "~!@#$%^&*()_+[]'/.,-;: ";

pub fn is_string_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || OTHER_CHARS.contains(c)
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        }
        let pos = cur.pos();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let err = |message: String| ParseError { pos, message };
        let tok = if c.is_ascii_lowercase() {
            Tok::Word(cur.take_while(ident_char))
        } else if c.is_ascii_uppercase() {
            Tok::Var(cur.take_while(ident_char))
        } else if c == '_' {
            let word = cur.take_while(ident_char);
            match word.as_str() {
                "_name" | "_parent" | "_decomp" | "_decompID" => Tok::Structural(word),
                _ => return Err(err(format!("unknown structural attribute '{word}'"))),
            }
        } else if c.is_ascii_digit() {
            lex_number(&mut cur).map_err(err)?
        } else if c == '"' {
            cur.bump();
            let body = cur.take_while(|c| c != '"' && c != '\n');
            if cur.peek() != Some('"') {
                return Err(err("unterminated string literal".to_string()));
            }
            cur.bump();
            if body.is_empty() {
                return Err(err("empty string literal".to_string()));
            }
            if let Some(bad) = body.chars().find(|c| !is_string_char(*c)) {
                return Err(err(format!("character '{bad}' is not allowed in a string literal")));
            }
            Tok::Str(body)
        } else {
            cur.bump();
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '.' => Tok::Dot,
                ':' => Tok::Colon,
                '=' => Tok::Eq,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '%' => Tok::Percent,
                '<' => match cur.peek() {
                    Some('=') => {
                        cur.bump();
                        Tok::Le
                    }
                    Some('>') => {
                        cur.bump();
                        Tok::Ne
                    }
                    _ => Tok::Lt,
                },
                '>' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                other => return Err(err(format!("unexpected character '{other}'"))),
            }
        };
        out.push(Token { tok, pos });
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<Tok, String> {
    let int_part = cur.take_while(|c| c.is_ascii_digit());
    // a '.' only continues the number when a digit follows it
    let mut lookahead = cur.chars.clone();
    lookahead.next();
    let fraction = cur.peek() == Some('.') && lookahead.next().is_some_and(|c| c.is_ascii_digit());
    if fraction {
        cur.bump();
        let frac = cur.take_while(|c| c.is_ascii_digit());
        let text = format!("{int_part}.{frac}");
        let r: f64 = text.parse().map_err(|_| format!("invalid real literal {text}"))?;
        if !r.is_finite() {
            return Err(format!("real literal {text} is out of range"));
        }
        Ok(Tok::Real(r))
    } else {
        int_part
            .parse::<i64>()
            .map(Tok::Int)
            .map_err(|_| format!("integer literal {int_part} is out of range"))
    }
}
