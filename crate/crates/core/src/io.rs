//! The line-based game format and the JSON result document.
//!
//! ```text
//! # comment
//! game 2
//! vertex 0 MIN
//! vertex 1 MAX
//! edge 0 1 -1
//! edge 1 0 2
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Edge, ExtendedInt, GameError, GameGraph, MpSign, Owner};
use crate::layers::{energy_step_bound, generic_step_bound, IterationRecord, RunFacts};
use crate::solver::{Mode, SolveResult};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {reason}")]
    Syntax { line: usize, column: usize, reason: String },
    #[error("invalid game: {0}")]
    Invalid(#[from] GameError),
}

fn syntax(line: usize, column: usize, reason: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        reason: reason.into(),
    }
}

/// Whitespace-separated tokens with their 1-based starting columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn number<T: std::str::FromStr>(line: usize, (col, tok): (usize, &str), what: &str) -> Result<T, ParseError> {
    tok.parse()
        .map_err(|_| syntax(line, col, format!("expected {what}, found {tok:?}")))
}

pub fn parse(text: &str) -> Result<GameGraph, ParseError> {
    let mut owners: Option<Vec<Option<Owner>>> = None;
    let mut edges = Vec::new();
    let mut header_line = 0;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let toks = tokens(raw);
        let Some(&(col, keyword)) = toks.first() else {
            continue;
        };
        if keyword.starts_with('#') {
            continue;
        }
        let arity = |k: usize| {
            if toks.len() == k {
                Ok(())
            } else {
                Err(syntax(line, col, format!("`{keyword}` takes {} arguments, found {}", k - 1, toks.len() - 1)))
            }
        };
        match (keyword, owners.as_mut()) {
            ("game", None) => {
                arity(2)?;
                let n: usize = number(line, toks[1], "a vertex count")?;
                owners = Some(vec![None; n]);
                header_line = line;
            }
            ("game", Some(_)) => return Err(syntax(line, col, "duplicate `game` header")),
            (_, None) => return Err(syntax(line, col, "missing `game <n>` header")),
            ("vertex", Some(owners)) => {
                arity(3)?;
                let id: usize = number(line, toks[1], "a vertex id")?;
                if id >= owners.len() {
                    return Err(syntax(line, toks[1].0, format!("vertex {id} out of range 0..{}", owners.len())));
                }
                let owner = match toks[2].1 {
                    "MIN" => Owner::Min,
                    "MAX" => Owner::Max,
                    other => return Err(syntax(line, toks[2].0, format!("expected MIN or MAX, found {other:?}"))),
                };
                if owners[id].replace(owner).is_some() {
                    return Err(syntax(line, toks[1].0, format!("vertex {id} declared twice")));
                }
            }
            ("edge", Some(owners)) => {
                arity(4)?;
                let n = owners.len();
                let src: usize = number(line, toks[1], "a source id")?;
                let dst: usize = number(line, toks[2], "a target id")?;
                for (v, tok) in [(src, toks[1]), (dst, toks[2])] {
                    if v >= n {
                        return Err(syntax(line, tok.0, format!("vertex {v} out of range 0..{n}")));
                    }
                }
                let weight: i64 = number(line, toks[3], "an integer weight")?;
                edges.push(Edge::new(src, dst, weight));
            }
            (other, Some(_)) => return Err(syntax(line, col, format!("unknown keyword {other:?}"))),
        }
    }

    let owners = owners.ok_or_else(|| syntax(last_line.max(1), 1, "missing `game <n>` header"))?;
    let owners = owners
        .into_iter()
        .enumerate()
        .map(|(v, o)| o.ok_or_else(|| syntax(header_line, 1, format!("vertex {v} is never declared"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GameGraph::new(owners, edges)?)
}

/// The same game with edges sorted by `(src, dst, weight)`.
pub fn canonicalize(g: &GameGraph) -> GameGraph {
    let mut edges = g.edges().to_vec();
    edges.sort_by_key(|e| (e.src, e.dst, e.weight));
    GameGraph::new(g.owners().to_vec(), edges).expect("reordering keeps a valid game valid")
}

/// Canonical text form.
pub fn serialize(g: &GameGraph) -> String {
    let mut out = String::new();
    writeln!(out, "game {}", g.n()).unwrap();
    for v in g.vertices() {
        writeln!(out, "vertex {v} {}", g.owner(v)).unwrap();
    }
    let mut edges = g.edges().to_vec();
    edges.sort_by_key(|e| (e.src, e.dst, e.weight));
    for e in edges {
        writeln!(out, "edge {} {} {}", e.src, e.dst, e.weight).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexEntry {
    pub id: usize,
    pub en_plus: ExtendedInt,
    /// `null` in general mode, where dual energies are not computed.
    pub en_minus: Option<ExtendedInt>,
    pub mp_sign: MpSign,
    pub potential: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub iterations: u64,
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "maxAbsWeight")]
    pub max_abs_weight: i64,
    #[serde(rename = "E_plus")]
    pub e_plus: i64,
    #[serde(rename = "E_minus")]
    pub e_minus: i64,
    /// `N + E+ + E- + 1`.
    #[serde(rename = "bound_thm3")]
    pub energy_bound: i128,
    /// `n * N + 1`.
    #[serde(rename = "bound_nN")]
    pub generic_bound: i128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub vertices: Vec<VertexEntry>,
    pub metadata: RunMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<IterationRecord>>,
}

impl ResultDoc {
    pub fn new(g: &GameGraph, result: &SolveResult) -> ResultDoc {
        let values = &result.values;
        let vertices = g
            .vertices()
            .map(|v| VertexEntry {
                id: v,
                en_plus: values.en_plus[v],
                en_minus: values.en_minus.as_ref().map(|en| en[v]),
                mp_sign: values.mp_sign[v],
                potential: result.potential.get(v),
            })
            .collect();
        let (e_plus, e_minus) = (result.e_plus(), result.e_minus());
        ResultDoc {
            vertices,
            metadata: RunMetadata {
                iterations: result.iterations,
                mode: result.mode,
                n: g.n(),
                m: g.m(),
                max_abs_weight: g.max_abs_weight(),
                e_plus,
                e_minus,
                energy_bound: energy_step_bound(g.max_abs_weight(), e_plus, e_minus),
                generic_bound: generic_step_bound(g.n(), g.max_abs_weight()),
            },
            trace: result.trace.clone(),
        }
    }

    pub fn run_facts(&self) -> RunFacts {
        RunFacts {
            n: self.metadata.n,
            max_abs_weight: self.metadata.max_abs_weight,
            iterations: self.metadata.iterations,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<ResultDoc, serde_json::Error> {
        serde_json::from_str(text)
    }
}
