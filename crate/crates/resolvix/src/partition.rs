//! Two-colorings of posets and families, with their text format.
//!
//! ```text
//! partition <name>
//! color <id> <0|1>
//! ```

use std::collections::BTreeMap;

use serde::Serialize;

use crate::text::{check_ident, content_lines, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Partition {
    pub name: String,
    pub assignment: BTreeMap<String, u8>,
}

impl Partition {
    pub fn new(name: impl Into<String>) -> Self {
        Partition { name: name.into(), assignment: BTreeMap::new() }
    }

    pub fn color(&self, id: &str) -> Option<u8> {
        self.assignment.get(id).copied()
    }

    pub fn set(&mut self, id: impl Into<String>, color: u8) {
        self.assignment.insert(id.into(), color);
    }

    /// Colors in the order of `labels`; `None` if some label is unassigned.
    pub fn colors_for(&self, labels: &[String]) -> Result<Vec<u8>, String> {
        labels
            .iter()
            .map(|l| self.color(l).ok_or_else(|| l.clone()))
            .collect()
    }

    pub fn from_colors(name: impl Into<String>, labels: &[String], colors: &[u8]) -> Self {
        let mut p = Partition::new(name);
        for (l, &c) in labels.iter().zip(colors) {
            p.set(l.clone(), c);
        }
        p
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("partition {}\n", self.name);
        for (id, c) in &self.assignment {
            out.push_str(&format!("color {id} {c}\n"));
        }
        out
    }
}

pub fn parse_partition(src: &str) -> Result<Partition, ParseError> {
    let mut lines = content_lines(src);
    let (ln, header) = lines.next().ok_or_else(|| ParseError::new(0, "empty input"))?;
    let name = header
        .strip_prefix("partition ")
        .map(str::trim)
        .ok_or_else(|| ParseError::new(ln, "expected `partition <name>`"))?;
    check_ident(ln, name)?;
    let mut p = Partition::new(name);
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["color", id, c] => {
                check_ident(ln, id)?;
                let c = match *c {
                    "0" => 0,
                    "1" => 1,
                    other => return Err(ParseError::new(ln, format!("color must be 0 or 1, got {other:?}"))),
                };
                if p.assignment.insert((*id).to_string(), c).is_some() {
                    return Err(ParseError::new(ln, format!("duplicate color for {id}")));
                }
            }
            _ => return Err(ParseError::new(ln, format!("unrecognised line {line:?}"))),
        }
    }
    Ok(p)
}
