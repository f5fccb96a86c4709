//! Plain-text edge-list format.
//!
//! ```text
//! # comment
//! n m [t]
//! u v [mult]          (m lines)
//! terminal v [weight] (t lines)
//! weight v w          (optional, any number)
//! ```
//!
//! `m` counts edge lines, not multiplicity. Serialization is sorted, so
//! equal graphs print identically.

use crate::error::{Error, Result};
use crate::graph::Graph;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| perr(line, format!("bad {what} {tok:?}")))
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing header line `n m [t]`"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() < 2 || toks.len() > 3 {
        return Err(perr(hl, "header must be `n m [t]`"));
    }
    let n: usize = num(toks[0], hl, "vertex count")?;
    let m: usize = num(toks[1], hl, "edge count")?;
    let t: Option<usize> = toks.get(2).map(|s| num(s, hl, "terminal count")).transpose()?;

    let mut g = Graph::new(n);
    let mut edges_seen = 0;
    let mut terminals = Vec::new();
    let mut weights: Option<Vec<u64>> = None;
    let check_vertex = |v: usize, line: usize| {
        if v >= n {
            Err(perr(line, format!("vertex {v} out of range for n = {n}")))
        } else {
            Ok(v)
        }
    };

    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks[0] {
            "terminal" => {
                if toks.len() < 2 || toks.len() > 3 {
                    return Err(perr(ln, "expected `terminal v [weight]`"));
                }
                let v = check_vertex(num(toks[1], ln, "vertex")?, ln)?;
                let w: u64 = toks.get(2).map(|s| num(s, ln, "weight")).transpose()?.unwrap_or(1);
                if w == 0 {
                    return Err(perr(ln, "terminal weight must be at least 1"));
                }
                if terminals.contains(&v) {
                    return Err(perr(ln, format!("terminal {v} listed twice")));
                }
                terminals.push(v);
                weights.get_or_insert_with(|| vec![0; n])[v] = w;
            }
            "weight" => {
                if toks.len() != 3 {
                    return Err(perr(ln, "expected `weight v w`"));
                }
                let v = check_vertex(num(toks[1], ln, "vertex")?, ln)?;
                let w: u64 = num(toks[2], ln, "weight")?;
                weights.get_or_insert_with(|| vec![0; n])[v] = w;
            }
            _ => {
                if !terminals.is_empty() {
                    return Err(perr(ln, "edge line after terminal lines"));
                }
                if toks.len() < 2 || toks.len() > 3 {
                    return Err(perr(ln, "expected `u v [mult]`"));
                }
                let u = check_vertex(num(toks[0], ln, "vertex")?, ln)?;
                let v = check_vertex(num(toks[1], ln, "vertex")?, ln)?;
                let mult: u64 = toks.get(2).map(|s| num(s, ln, "multiplicity")).transpose()?.unwrap_or(1);
                if u == v {
                    return Err(perr(ln, format!("self-loop at {u}")));
                }
                if mult == 0 {
                    return Err(perr(ln, "multiplicity must be at least 1"));
                }
                g.add_edge_mult(u, v, mult);
                edges_seen += 1;
            }
        }
    }
    if edges_seen != m {
        return Err(perr(hl, format!("header declares {m} edge lines, found {edges_seen}")));
    }
    if let Some(t) = t {
        if t != terminals.len() {
            return Err(perr(hl, format!("header declares {t} terminals, found {}", terminals.len())));
        }
    }
    if !terminals.is_empty() {
        g.set_terminals(terminals);
    }
    if let Some(w) = weights {
        g.set_weights(w);
    }
    Ok(g)
}

pub fn write_graph(g: &Graph) -> String {
    let edges = g.edges();
    let mut out = String::new();
    match g.terminals() {
        Some(t) => out.push_str(&format!("{} {} {}\n", g.n(), edges.len(), t.len())),
        None => out.push_str(&format!("{} {}\n", g.n(), edges.len())),
    }
    for (u, v, m) in edges {
        if m == 1 {
            out.push_str(&format!("{u} {v}\n"));
        } else {
            out.push_str(&format!("{u} {v} {m}\n"));
        }
    }
    let w = g.weights();
    let mut is_term = vec![false; g.n()];
    if let Some(t) = g.terminals() {
        for &v in t {
            is_term[v] = true;
            let wv = w.map(|w| w[v]).unwrap_or(1).max(1);
            out.push_str(&format!("terminal {v} {wv}\n"));
        }
    }
    if let Some(w) = w {
        for v in 0..g.n() {
            if !is_term[v] && w[v] > 0 {
                out.push_str(&format!("weight {v} {}\n", w[v]));
            }
        }
    }
    out
}

pub fn read_graph_file(path: &std::path::Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_graph(&text)
}
