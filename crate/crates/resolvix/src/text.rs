//! Shared helpers for the line-oriented text formats.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, msg: impl Into<String>) -> Self {
        ParseError { line, msg: msg.into() }
    }
}

/// Non-empty lines with `#` comments stripped, paired with 1-based line numbers.
pub fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines().enumerate().filter_map(|(i, raw)| {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Identifiers used in every format: non-empty, no whitespace, no `:` or `#`.
pub fn check_ident(line: usize, s: &str) -> Result<(), ParseError> {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == ':' || c == '#') {
        return Err(ParseError::new(line, format!("invalid identifier {s:?}")));
    }
    Ok(())
}

pub fn parse_u32(line: usize, s: &str) -> Result<u32, ParseError> {
    s.parse::<u32>()
        .map_err(|_| ParseError::new(line, format!("expected a natural number, got {s:?}")))
}
