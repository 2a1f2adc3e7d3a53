//! Text format for constraint programs.
//!
//! One declaration per line, `#` starts a comment, blank lines are ignored:
//!
//! ```text
//! domain 9
//! positions 81
//! exactly_one row0 0 1 2 3 4 5 6 7 8
//! sum_eq pair 12 0 1
//! ```
//!
//! `domain k` assumes the default labels `1..=k`; a domain whose labels differ
//! serializes them explicitly after the count (`domain 10 0 1 ... 9`).
//! Serialization preserves declaration order, so parse . serialize is the
//! identity on valid programs.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::program::{
    ConstraintGroup, ConstraintProgram, ProgramError, Provenance, SymbolDomain,
};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: unknown declaration {found:?}")]
    UnknownDeclaration { line: usize, found: String },
    #[error("line {line}: {what} expects {expected}")]
    Malformed {
        line: usize,
        what: &'static str,
        expected: &'static str,
    },
    #[error("line {line}: bad integer {token:?}")]
    BadInteger { line: usize, token: String },
    #[error("line {line}: duplicate {what} declaration")]
    DuplicateDeclaration { line: usize, what: &'static str },
    #[error("line {line}: group declared before domain and positions")]
    GroupBeforeHeader { line: usize },
    #[error("missing {0} declaration")]
    MissingHeader(&'static str),
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        source: ProgramError,
    },
}

fn parse_usize(line: usize, token: &str) -> Result<usize, ParseError> {
    token.parse().map_err(|_| ParseError::BadInteger {
        line,
        token: token.to_string(),
    })
}

fn parse_i64(line: usize, token: &str) -> Result<i64, ParseError> {
    token.parse().map_err(|_| ParseError::BadInteger {
        line,
        token: token.to_string(),
    })
}

pub fn parse_program(text: &str) -> Result<ConstraintProgram, ParseError> {
    let mut domain: Option<(usize, SymbolDomain)> = None;
    let mut positions: Option<(usize, usize)> = None;
    let mut groups: Vec<ConstraintGroup> = Vec::new();
    let mut group_lines: Vec<usize> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let head = tokens.next().expect("non-empty line has a first token");
        let rest: Vec<&str> = tokens.collect();
        match head {
            "domain" => {
                if domain.is_some() {
                    return Err(ParseError::DuplicateDeclaration { line, what: "domain" });
                }
                if rest.is_empty() {
                    return Err(ParseError::Malformed {
                        line,
                        what: "domain",
                        expected: "a symbol count",
                    });
                }
                let k = parse_usize(line, rest[0])?;
                let dom = if rest.len() == 1 {
                    SymbolDomain::with_default_labels(k)
                } else {
                    SymbolDomain::new(k, rest[1..].iter().map(|s| s.to_string()).collect())
                }
                .map_err(|source| ParseError::Invalid { line, source })?;
                domain = Some((line, dom));
            }
            "positions" => {
                if positions.is_some() {
                    return Err(ParseError::DuplicateDeclaration { line, what: "positions" });
                }
                if rest.len() != 1 {
                    return Err(ParseError::Malformed {
                        line,
                        what: "positions",
                        expected: "a position count",
                    });
                }
                positions = Some((line, parse_usize(line, rest[0])?));
            }
            "exactly_one" => {
                if domain.is_none() || positions.is_none() {
                    return Err(ParseError::GroupBeforeHeader { line });
                }
                if rest.len() < 2 {
                    return Err(ParseError::Malformed {
                        line,
                        what: "exactly_one",
                        expected: "a name and at least one member",
                    });
                }
                let members = rest[1..]
                    .iter()
                    .map(|t| parse_usize(line, t))
                    .collect::<Result<Vec<_>, _>>()?;
                groups.push(ConstraintGroup::exactly_one(rest[0], members));
                group_lines.push(line);
            }
            "sum_eq" => {
                if domain.is_none() || positions.is_none() {
                    return Err(ParseError::GroupBeforeHeader { line });
                }
                if rest.len() < 3 {
                    return Err(ParseError::Malformed {
                        line,
                        what: "sum_eq",
                        expected: "a name, a target, and at least one member",
                    });
                }
                let target = parse_i64(line, rest[1])?;
                let members = rest[2..]
                    .iter()
                    .map(|t| parse_usize(line, t))
                    .collect::<Result<Vec<_>, _>>()?;
                groups.push(ConstraintGroup::sum_eq(rest[0], target, members));
                group_lines.push(line);
            }
            other => {
                return Err(ParseError::UnknownDeclaration {
                    line,
                    found: other.to_string(),
                })
            }
        }
    }

    let (_, dom) = domain.ok_or(ParseError::MissingHeader("domain"))?;
    let (pos_line, n) = positions.ok_or(ParseError::MissingHeader("positions"))?;

    ConstraintProgram::new(n, dom, groups, Provenance::Handwritten).map_err(|source| {
        // Attribute validation failures to the offending group line when the
        // error names a group, otherwise to the positions header.
        let line = match &source {
            ProgramError::DuplicateGroupName(name)
            | ProgramError::EmptyGroup(name)
            | ProgramError::DuplicateMember { group: name, .. }
            | ProgramError::MemberOutOfRange { group: name, .. }
            | ProgramError::TargetOutOfRange { group: name, .. }
            | ProgramError::UnexpectedTarget(name) => group_lines
                .get(match_group_index(name, text))
                .copied()
                .unwrap_or(pos_line),
            _ => pos_line,
        };
        ParseError::Invalid { line, source }
    })
}

/// Index of the last group declaration with the given name, counting only
/// group lines. Last, so duplicate-name errors point at the offending
/// redeclaration. Falls back to 0 on no match.
fn match_group_index(name: &str, text: &str) -> usize {
    let mut idx = 0;
    let mut found = 0;
    for raw in text.lines() {
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("exactly_one") | Some("sum_eq") => {
                if tokens.next() == Some(name) {
                    found = idx;
                }
                idx += 1;
            }
            _ => {}
        }
    }
    found
}

pub fn serialize_program(program: &ConstraintProgram) -> String {
    let mut out = String::new();
    let dom = program.domain();
    if dom.has_default_labels() {
        out.push_str(&format!("domain {}\n", dom.size()));
    } else {
        out.push_str(&format!("domain {} {}\n", dom.size(), dom.labels().join(" ")));
    }
    out.push_str(&format!("positions {}\n", program.positions()));
    for g in program.groups() {
        let members = g
            .members
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        match g.target {
            None => out.push_str(&format!("exactly_one {} {}\n", g.name, members)),
            Some(t) => out.push_str(&format!("sum_eq {} {} {}\n", g.name, t, members)),
        }
    }
    out
}

impl FromStr for ConstraintProgram {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_program(s)
    }
}

impl fmt::Display for ConstraintProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_program(self))
    }
}
