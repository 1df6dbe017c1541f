//! Graph and list files.
//!
//! Graph files are line based; blank lines and lines starting with `c` or
//! `#` are comments. The header is either DIMACS-style `p edge n m`,
//! followed by `m` lines `e u v` with 1-indexed endpoints, or plain
//! `n m [base]`, followed by `m` lines `u v` whose indices start at `base`
//! (0 or 1, default 0).
//!
//! List files are JSON objects mapping a 0-based vertex id (as a string) to
//! a non-empty array of colors in 1..=4. Vertices not mentioned get the
//! full palette.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use colorcount::{Color, ColorLists, ColorSet, Graph, Instance, InstanceError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("lists file: {0}")]
    Lists(String),
    #[error("invalid instance: {0}")]
    Instance(#[from] InstanceError),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

fn number(tok: Option<&str>, line: usize, what: &str) -> Result<usize, FormatError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| syntax(line, format!("bad {what} {tok:?}")))
}

pub fn parse_graph(text: &str) -> Result<Graph, FormatError> {
    let mut header: Option<(usize, usize, usize, bool)> = None;
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('c') || s.starts_with('#') {
            continue;
        }
        let mut toks = s.split_whitespace();
        match header {
            None => {
                if s.starts_with('p') {
                    toks.next();
                    match toks.next() {
                        Some("edge" | "edges" | "col") => {}
                        other => return Err(syntax(line, format!("unsupported problem line {other:?}"))),
                    }
                    let n = number(toks.next(), line, "vertex count")?;
                    let m = number(toks.next(), line, "edge count")?;
                    header = Some((n, m, 1, true));
                } else {
                    let n = number(toks.next(), line, "vertex count")?;
                    let m = number(toks.next(), line, "edge count")?;
                    let base = match toks.next() {
                        None => 0,
                        Some("0") => 0,
                        Some("1") => 1,
                        Some(other) => return Err(syntax(line, format!("index base must be 0 or 1, got {other:?}"))),
                    };
                    header = Some((n, m, base, false));
                }
                if toks.next().is_some() {
                    return Err(syntax(line, "trailing tokens in header"));
                }
            }
            Some((n, _, base, dimacs)) => {
                if dimacs && toks.next() != Some("e") {
                    return Err(syntax(line, "expected `e u v`"));
                }
                let u = number(toks.next(), line, "endpoint")?;
                let v = number(toks.next(), line, "endpoint")?;
                if toks.next().is_some() {
                    return Err(syntax(line, "trailing tokens after edge"));
                }
                let check = |x: usize| {
                    if x < base || x - base >= n {
                        Err(syntax(line, format!("vertex {x} out of range for n = {n} (base {base})")))
                    } else {
                        Ok(x - base)
                    }
                };
                edges.push((check(u)?, check(v)?));
            }
        }
    }
    let (n, m, _, _) = header.ok_or_else(|| syntax(0, "missing header"))?;
    if edges.len() != m {
        return Err(syntax(0, format!("header declares {m} edges, found {}", edges.len())));
    }
    Ok(Graph::from_edges(n, edges)?)
}

pub fn parse_lists(text: &str, n: usize) -> Result<ColorLists, FormatError> {
    let bad = |msg: String| FormatError::Lists(msg);
    let map: BTreeMap<String, Vec<u8>> = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let mut lists = ColorLists::full(n);
    for (key, colors) in map {
        let v: usize = key.parse().map_err(|_| bad(format!("vertex id {key:?} is not an integer")))?;
        if v >= n {
            return Err(bad(format!("vertex {v} out of range for n = {n}")));
        }
        if colors.is_empty() {
            return Err(bad(format!("empty list for vertex {v}")));
        }
        let set = colors
            .iter()
            .map(|&c| Color::new(c).map_err(|_| bad(format!("color {c} for vertex {v} not in 1..=4"))))
            .collect::<Result<ColorSet, _>>()?;
        lists.set(v, set);
    }
    Ok(lists)
}

pub fn load_instance(graph_text: &str, lists_text: Option<&str>) -> Result<Instance, FormatError> {
    let g = parse_graph(graph_text)?;
    let lists = match lists_text {
        Some(t) => parse_lists(t, g.num_vertices())?,
        None => ColorLists::full(g.num_vertices()),
    };
    Ok(Instance::new(g, lists)?)
}

/// DIMACS text with 1-indexed edges in ascending order.
pub fn write_graph(g: &Graph) -> String {
    let mut out = format!("p edge {} {}\n", g.num_vertices(), g.num_edges());
    for (u, v) in g.edges() {
        writeln!(out, "e {} {}", u + 1, v + 1).unwrap();
    }
    out
}

/// Lists that differ from the full palette, as a JSON object.
pub fn write_lists(lists: &ColorLists) -> String {
    let map: BTreeMap<String, Vec<u8>> = lists
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, l)| **l != ColorSet::FULL)
        .map(|(v, l)| (v.to_string(), l.iter().map(Color::get).collect()))
        .collect();
    // Numeric key order reads better than lexicographic.
    let mut keys: Vec<_> = map.keys().cloned().collect();
    keys.sort_by_key(|k| k.parse::<usize>().unwrap());
    let body: Vec<String> = keys
        .iter()
        .map(|k| format!("  \"{k}\": {}", serde_json::to_string(&map[k]).unwrap()))
        .collect();
    if body.is_empty() {
        "{}\n".to_string()
    } else {
        format!("{{\n{}\n}}\n", body.join(",\n"))
    }
}
