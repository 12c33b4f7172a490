//! Recursive-descent parser for the textual formula syntax.
//!
//! ```text
//! or    := and ('|' and)*
//! and   := until ('&' until)*
//! until := unary ('U' until)?
//! unary := ('G' | 'F' | 'X' | '!') unary | atom | '(' or ')'
//! ```

use thiserror::Error;

use super::alphabet::{is_valid_name, Alphabet};
use super::formula::{Formula, Operator};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown predicate {name:?} at byte {pos}")]
    UnknownPredicate { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Bang,
    Amp,
    Bar,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(self.pos) else {
            return Ok((start, Tok::End));
        };
        let tok = match b {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'!' => Tok::Bang,
            b'&' => Tok::Amp,
            b'|' => Tok::Bar,
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                self.pos = end;
                return Ok((start, Tok::Ident(self.src[start..end].to_string())));
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax { pos: start, msg: format!("unexpected character {ch:?}") });
            }
        };
        self.pos += 1;
        Ok((start, tok))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: (usize, Tok),
    alphabet: &'a Alphabet,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(usize, Tok), ParseError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.peeked, next))
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peeked.1, Tok::Ident(s) if s == kw)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.peeked.1 == Tok::Bar {
            self.bump()?;
            let rhs = self.and()?;
            lhs = Formula::binary(Operator::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.peeked.1 == Tok::Amp {
            self.bump()?;
            let rhs = self.until()?;
            lhs = Formula::binary(Operator::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.is_keyword("U") {
            self.bump()?;
            let rhs = self.until()?;
            return Ok(Formula::binary(Operator::Until, lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let (pos, tok) = self.bump()?;
        match tok {
            Tok::Bang => Ok(Formula::unary(Operator::Not, self.unary()?)),
            Tok::Ident(s) => match s.as_str() {
                "G" => Ok(Formula::unary(Operator::Always, self.unary()?)),
                "F" => Ok(Formula::unary(Operator::Eventually, self.unary()?)),
                "X" => Ok(Formula::unary(Operator::Next, self.unary()?)),
                "U" => Err(ParseError::Syntax { pos, msg: "expected operand before 'U'".into() }),
                name => {
                    debug_assert!(is_valid_name(name));
                    self.alphabet
                        .lookup(name)
                        .map(Formula::Atom)
                        .ok_or_else(|| ParseError::UnknownPredicate { pos, name: name.to_string() })
                }
            },
            Tok::LParen => {
                let inner = self.or()?;
                match self.bump()? {
                    (_, Tok::RParen) => Ok(inner),
                    (p, t) => Err(ParseError::Syntax { pos: p, msg: format!("expected ')', found {}", describe(&t)) }),
                }
            }
            t => Err(ParseError::Syntax { pos, msg: format!("expected formula, found {}", describe(&t)) }),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("{s:?}"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Bang => "'!'".into(),
        Tok::Amp => "'&'".into(),
        Tok::Bar => "'|'".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parses `text` over the predicates of `alphabet`.
pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Formula, ParseError> {
    let mut lexer = Lexer { src: text, pos: 0 };
    let first = lexer.next()?;
    let mut p = Parser { lexer, peeked: first, alphabet };
    let f = p.or()?;
    match &p.peeked {
        (_, Tok::End) => Ok(f),
        (pos, t) => Err(ParseError::Syntax { pos: *pos, msg: format!("trailing input {}", describe(t)) }),
    }
}
