//! Tokenizer shared by the program DSL and the derivation file format.

use thiserror::Error;

/// Syntax error with source position.
#[derive(Clone, Debug, Error, PartialEq)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    /// A numeric literal directly suffixed with `i` (imaginary part).
    Imag(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    let mut line = 1usize;
    let mut col = 1usize;

    let is_ident_start = |c: char| c.is_ascii_alphabetic() || c == '_';
    let is_ident_char = |c: char| c.is_ascii_alphanumeric() || c == '_';

    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let mut push = |tok: Tok| {
            out.push(Token {
                tok,
                line: tline,
                col: tcol,
            })
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if i + 1 < chars.len() && chars[i + 1] == '/' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                push(Tok::LParen);
                i += 1;
                col += 1;
            }
            ')' => {
                push(Tok::RParen);
                i += 1;
                col += 1;
            }
            '[' => {
                push(Tok::LBracket);
                i += 1;
                col += 1;
            }
            ']' => {
                push(Tok::RBracket);
                i += 1;
                col += 1;
            }
            '{' => {
                push(Tok::LBrace);
                i += 1;
                col += 1;
            }
            '}' => {
                push(Tok::RBrace);
                i += 1;
                col += 1;
            }
            ',' => {
                push(Tok::Comma);
                i += 1;
                col += 1;
            }
            ';' => {
                push(Tok::Semi);
                i += 1;
                col += 1;
            }
            ':' => {
                push(Tok::Colon);
                i += 1;
                col += 1;
            }
            '=' => {
                push(Tok::Eq);
                i += 1;
                col += 1;
            }
            '+' => {
                push(Tok::Plus);
                i += 1;
                col += 1;
            }
            '-' => {
                push(Tok::Minus);
                i += 1;
                col += 1;
            }
            '*' => {
                push(Tok::Star);
                i += 1;
                col += 1;
            }
            '/' => {
                push(Tok::Slash);
                i += 1;
                col += 1;
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut is_float = false;
                if i < chars.len() && chars[i] == '.' {
                    is_float = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        is_float = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lex: String = chars[start..i].iter().collect();
                // imaginary suffix: `2i`, `0.5i` (not followed by ident chars)
                let imag_suffix = i < chars.len()
                    && chars[i] == 'i'
                    && !(i + 1 < chars.len() && is_ident_char(chars[i + 1]));
                let token = if imag_suffix {
                    i += 1;
                    Tok::Imag(lex.parse::<f64>().map_err(|e| {
                        ParseError::new(tline, tcol, format!("bad number `{lex}`: {e}"))
                    })?)
                } else if is_float {
                    Tok::Float(lex.parse::<f64>().map_err(|e| {
                        ParseError::new(tline, tcol, format!("bad number `{lex}`: {e}"))
                    })?)
                } else {
                    Tok::Int(lex.parse::<i64>().map_err(|e| {
                        ParseError::new(tline, tcol, format!("bad number `{lex}`: {e}"))
                    })?)
                };
                push(token);
                col += i - start;
            }
            _ if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let lex: String = chars[start..i].iter().collect();
                push(Tok::Ident(lex));
                col += i - start;
            }
            other => {
                return Err(ParseError::new(
                    line,
                    col,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_imag() {
        let toks = tokenize("1 2.5 3e-2 4i 0.5i").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert!(matches!(kinds[0], Tok::Int(1)));
        assert!(matches!(kinds[1], Tok::Float(f) if *f == 2.5));
        assert!(matches!(kinds[2], Tok::Float(f) if *f == 0.03));
        assert!(matches!(kinds[3], Tok::Imag(f) if *f == 4.0));
        assert!(matches!(kinds[4], Tok::Imag(f) if *f == 0.5));
    }

    #[test]
    fn positions_and_comments() {
        let toks = tokenize("skip;\n# comment\n  apply").unwrap();
        assert_eq!((toks[0].line, toks[0].col), (1, 1));
        assert_eq!((toks[2].line, toks[2].col), (3, 3));
    }

    #[test]
    fn ident_starting_with_i_is_not_imag() {
        let toks = tokenize("2if").unwrap();
        assert!(matches!(toks[0].tok, Tok::Int(2)));
        assert!(matches!(&toks[1].tok, Tok::Ident(s) if s == "if"));
    }
}
