//! Brute-force ground truth.
//!
//! Edge oracles walk all `2^n` vertex subsets in Gray-code order so each step
//! updates the boundary size from a single flipped vertex. Vertex oracles walk
//! every separator `C` and split the components of `G − C` optimally with a
//! subset-sum table.

pub mod generators;

use crate::error::{Error, Result};
use crate::flow::{max_flow_min_cut, NetworkBuilder};
use crate::graph::{EdgeCut, Graph, VertexCut};
use crate::rational::{Rational, Sparsity};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

pub const EDGE_ORACLE_BOUND: usize = 22;
pub const VERTEX_ORACLE_BOUND: usize = 18;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleCut {
    Edge(EdgeCut),
    Vertex(VertexCut),
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleAnswer {
    #[serde(with = "crate::rational::serde_rational")]
    pub value: Rational,
    pub cut: OracleCut,
    pub enumerated: u64,
    #[serde(skip)]
    pub wall_ms: f64,
}

fn check_bound(n: usize, bound: usize) -> Result<()> {
    if n > bound || n >= 63 {
        Err(Error::SizeBound { n, bound })
    } else {
        Ok(())
    }
}

pub fn mask_to_set(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&v| mask >> v & 1 == 1).collect()
}

/// True if the sorted vertex list of `a` is lexicographically before `b`'s.
pub fn lex_less(a: u64, b: u64) -> bool {
    if a == b {
        return false;
    }
    let d = (a ^ b).trailing_zeros();
    let (with, without) = if a >> d & 1 == 1 { (a, b) } else { (b, a) };
    // The set lacking `d` is a prefix of the other iff it has nothing above `d`.
    let prefix = without >> d == 0;
    let a_smaller = if prefix { a == without } else { a == with };
    a_smaller
}

fn better<K: Ord>(a: &(K, u64), b: &(K, u64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && lex_less(a.1, b.1))
}

fn pick<K: Ord>(a: Option<(K, u64)>, b: Option<(K, u64)>) -> Option<(K, u64)> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if better(&y, &x) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Minimises `score(mask, boundary, size)` over all subsets; `None` scores
/// are skipped. Ties go to the lexicographically smallest vertex set.
pub fn scan_subsets<K, F>(g: &Graph, score: F) -> Option<(K, u64)>
where
    K: Ord + Send,
    F: Fn(u64, u64, u32) -> Option<K> + Sync,
{
    let n = g.n();
    assert!(n < 63);
    let adj: Vec<Vec<(usize, u64)>> = (0..n).map(|v| g.adjacent(v).collect()).collect();
    let deg: Vec<u64> = (0..n).map(|v| g.degree(v)).collect();
    let total: u64 = 1 << n;
    let chunk: u64 = 1 << 14;
    let chunks = total.div_ceil(chunk);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            let mut mask = lo ^ (lo >> 1);
            let mut delta: u64 = 0;
            for u in 0..n {
                if mask >> u & 1 == 1 {
                    for &(v, m) in &adj[u] {
                        if mask >> v & 1 == 0 {
                            delta += m;
                        }
                    }
                }
            }
            let mut best: Option<(K, u64)> = None;
            let mut i = lo;
            loop {
                if let Some(k) = score(mask, delta, mask.count_ones()) {
                    best = pick(best, Some((k, mask)));
                }
                i += 1;
                if i >= hi {
                    break;
                }
                let v = i.trailing_zeros() as usize;
                let inside: u64 = adj[v].iter().filter(|&&(u, _)| mask >> u & 1 == 1).map(|&(_, m)| m).sum();
                if mask >> v & 1 == 0 {
                    delta = delta + deg[v] - 2 * inside;
                } else {
                    delta = delta + 2 * inside - deg[v];
                }
                mask ^= 1 << v;
            }
            best
        })
        .reduce(|| None, pick)
}

fn edge_answer(g: &Graph, best: Option<(Rational, u64)>, start: Instant, what: &str) -> Result<OracleAnswer> {
    let (value, mask) = best.ok_or_else(|| Error::Precondition(format!("{what}: no admissible cut")))?;
    let side = mask_to_set(mask, g.n());
    Ok(OracleAnswer {
        value,
        cut: OracleCut::Edge(EdgeCut::new(g, &side)?),
        enumerated: 1u64 << g.n(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Minimum sparsity over all cuts.
pub fn exact_sparsest_cut(g: &Graph) -> Result<OracleAnswer> {
    let n = g.n();
    check_bound(n, EDGE_ORACLE_BOUND)?;
    let start = Instant::now();
    let best = scan_subsets(g, |_, d, k| {
        let k = k as usize;
        (k > 0 && k < n).then(|| Rational::new(d as i128, k.min(n - k) as i128))
    });
    edge_answer(g, best, start, "sparsest cut")
}

/// Minimum of `|δ(S)| / |S|` over `1 ≤ |S| ≤ s`, `S ≠ V`.
pub fn exact_sse(g: &Graph, s: usize) -> Result<OracleAnswer> {
    let n = g.n();
    check_bound(n, EDGE_ORACLE_BOUND)?;
    let start = Instant::now();
    let best = scan_subsets(g, |_, d, k| {
        let k = k as usize;
        (k > 0 && k <= s && k < n).then(|| Rational::new(d as i128, k as i128))
    });
    edge_answer(g, best, start, "small set expansion")
}

/// Minimum of `|δ(W)| / |W ∩ T|` over proper `W` with `1 ≤ |W ∩ T| ≤ s`.
pub fn exact_terminal_expansion(g: &Graph, t: &[usize], s: usize) -> Result<OracleAnswer> {
    let n = g.n();
    check_bound(n, EDGE_ORACLE_BOUND)?;
    let start = Instant::now();
    let tmask: u64 = t.iter().map(|&v| 1u64 << v).sum();
    let best = scan_subsets(g, |mask, d, k| {
        let k = k as usize;
        let kt = (mask & tmask).count_ones() as usize;
        (k > 0 && k < n && kt >= 1 && kt <= s).then(|| Rational::new(d as i128, kt as i128))
    });
    edge_answer(g, best, start, "terminal expansion")
}

/// Minimum `|δ(S)|` over nonempty `S` with `|S| ≤ max_size` and
/// `y(S) ≥ tau · y(V)`.
pub fn exact_weighted_unbalanced(g: &Graph, y: &[u64], tau: &Rational, max_size: usize) -> Result<OracleAnswer> {
    let n = g.n();
    check_bound(n, EDGE_ORACLE_BOUND)?;
    let start = Instant::now();
    let total: u64 = y.iter().sum();
    let need = *tau * Rational::from_integer(total as i128);
    let best = scan_subsets(g, |mask, d, k| {
        let k = k as usize;
        if k == 0 || k > max_size || k >= n {
            return None;
        }
        let ys: u64 = (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| y[v]).sum();
        (Rational::from_integer(ys as i128) >= need).then(|| Rational::from_integer(d as i128))
    });
    edge_answer(g, best, start, "weighted unbalanced cut")
}

/// Largest subset sum of `sizes` that is at most `cap`, using at least one
/// item, with the chosen item indices.
fn best_split(sizes: &[usize], cap: usize) -> Option<(usize, Vec<usize>)> {
    let k = sizes.len();
    let mut can = vec![vec![false; cap + 1]; k + 1];
    can[0][0] = true;
    for i in 0..k {
        for s in 0..=cap {
            if can[i][s] {
                can[i + 1][s] = true;
                if s + sizes[i] <= cap {
                    can[i + 1][s + sizes[i]] = true;
                }
            }
        }
    }
    let best = (1..=cap).rev().find(|&s| can[k][s])?;
    let mut items = Vec::new();
    let mut s = best;
    for i in (0..k).rev() {
        if !can[i][s] {
            items.push(i);
            s -= sizes[i];
        }
    }
    items.reverse();
    Some((best, items))
}

fn vertex_scan<F>(g: &Graph, cap_for: F) -> Option<(Rational, u64, u64)>
where
    F: Fn(usize, usize) -> usize + Sync,
{
    let n = g.n();
    let total: u64 = 1 << n;
    let chunk: u64 = 1 << 10;
    let results = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut best: Option<(Rational, u64, u64)> = None;
            for cmask in c * chunk..((c + 1) * chunk).min(total) {
                let csize = cmask.count_ones() as usize;
                if csize + 2 > n {
                    continue;
                }
                let removed: Vec<bool> = (0..n).map(|v| cmask >> v & 1 == 1).collect();
                let comps = g.components_without(&removed);
                if comps.len() < 2 {
                    continue;
                }
                let sizes: Vec<usize> = comps.iter().map(|c| c.len()).collect();
                let cap = cap_for(csize, n - csize);
                let Some((lsize, items)) = best_split(&sizes, cap) else { continue };
                if lsize == n - csize {
                    continue;
                }
                let val = Rational::new(csize as i128, (csize + lsize) as i128);
                let lmask: u64 = items.iter().flat_map(|&i| comps[i].iter()).map(|&v| 1u64 << v).sum();
                let cand = (val, cmask, lmask);
                let replace = match &best {
                    None => true,
                    Some(b) => cand.0 < b.0 || (cand.0 == b.0 && lex_less(cand.1, b.1)),
                };
                if replace {
                    best = Some(cand);
                }
            }
            best
        })
        .collect::<Vec<_>>();
    results.into_iter().flatten().fold(None, |acc: Option<(Rational, u64, u64)>, x| match acc {
        Some(a) if !(x.0 < a.0 || (x.0 == a.0 && lex_less(x.1, a.1))) => Some(a),
        _ => Some(x),
    })
}

fn vertex_answer(g: &Graph, best: Option<(Rational, u64, u64)>, start: Instant) -> Result<OracleAnswer> {
    let n = g.n();
    let (value, cmask, lmask) = best.ok_or_else(|| Error::Precondition("graph has no vertex cut".into()))?;
    let c = mask_to_set(cmask, n);
    let l = mask_to_set(lmask, n);
    let r = mask_to_set(!(cmask | lmask) & ((1u64 << n) - 1), n);
    let cut = VertexCut::new(g, &l, &c, &r)?;
    debug_assert_eq!(cut.sparsity.min(value), value);
    Ok(OracleAnswer { value, cut: OracleCut::Vertex(cut), enumerated: 1u64 << n, wall_ms: start.elapsed().as_secs_f64() * 1e3 })
}

/// Minimum of `|C| / (|C| + min(|L|, |R|))` over vertex cuts.
pub fn exact_vertex_sparsest(g: &Graph) -> Result<OracleAnswer> {
    check_bound(g.n(), VERTEX_ORACLE_BOUND)?;
    let start = Instant::now();
    let best = vertex_scan(g, |_, rest| rest / 2);
    vertex_answer(g, best, start)
}

/// Minimum of `|C| / |L ∪ C|` over vertex cuts with `|L| ≤ s` and `|R| ≥ |L|`.
pub fn exact_ssve(g: &Graph, s: usize) -> Result<OracleAnswer> {
    check_bound(g.n(), VERTEX_ORACLE_BOUND)?;
    let start = Instant::now();
    let best = vertex_scan(g, |_, rest| s.min(rest / 2));
    vertex_answer(g, best, start)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutKind {
    Edge,
    Vertex,
}

/// Sets `W` that are a connected component, or the union of all components
/// but one, after removing at most `kmax` edges (resp. vertices). When `phi`
/// is given only sets with sparsity at most `phi` are kept (edge sparsity, or
/// for vertices the sparsity of `(W, N(W), rest)`).
pub fn enumerate_sparse_family(g: &Graph, phi: Option<&Rational>, kmax: usize, kind: CutKind) -> Vec<Vec<usize>> {
    let mut fam = match kind {
        CutKind::Edge => edge_family(g, kmax),
        CutKind::Vertex => vertex_family(g, kmax),
    };
    if let Some(phi) = phi {
        fam.retain(|w| family_sparsity(g, w, kind).le(phi));
    }
    fam
}

/// The sparsity used to filter family members.
pub fn family_sparsity(g: &Graph, w: &[usize], kind: CutKind) -> Sparsity {
    match kind {
        CutKind::Edge => g.sparsity(w).map(Sparsity::Finite).unwrap_or(Sparsity::Infinite),
        CutKind::Vertex => {
            let nb = g.neighbors(w).unwrap_or_default();
            let rest = g.n() - w.len() - nb.len();
            if rest == 0 || w.is_empty() {
                Sparsity::Infinite
            } else {
                Sparsity::ratio(nb.len() as u64, (nb.len() + w.len().min(rest)) as u64)
            }
        }
    }
}

/// Edges lying on some cut of at most `k` edges: those whose endpoints have
/// local edge connectivity at most `k`.
fn low_connectivity_edges(g: &Graph, k: usize) -> Vec<(usize, usize, u64)> {
    g.edges()
        .into_iter()
        .filter(|&(u, v, m)| {
            if m as usize > k {
                return false;
            }
            let mut b = NetworkBuilder::new(g.n(), u, v);
            for (a, c, mm) in g.edges() {
                b.add_undirected(a, c, Rational::from_integer(mm as i128));
            }
            max_flow_min_cut(&b.finish()).value <= k as i128
        })
        .collect()
}

fn edge_family(g: &Graph, kmax: usize) -> Vec<Vec<usize>> {
    let n = g.n();
    let cands = low_connectivity_edges(g, kmax);
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    fn rec(g: &Graph, cands: &[(usize, usize, u64)], start: usize, budget: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !chosen.is_empty() {
            let mut h2 = Graph::new(g.n());
            for (u, v, m) in g.edges() {
                let removed = chosen.iter().any(|&i| (cands[i].0, cands[i].1) == (u, v));
                if !removed {
                    h2.add_edge_mult(u, v, m);
                }
            }
            let comps = h2.components();
            if comps.len() > 1 {
                for c in comps {
                    out.push(c);
                }
            }
        }
        for i in start..cands.len() {
            let m = cands[i].2 as usize;
            if m <= budget {
                chosen.push(i);
                rec(g, cands, i + 1, budget - m, chosen, out);
                chosen.pop();
            }
        }
    }
    rec(g, &cands, 0, kmax, &mut chosen, &mut out);
    finish_family(n, out)
}

fn vertex_family(g: &Graph, kmax: usize) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(g: &Graph, start: usize, kmax: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !chosen.is_empty() {
            let mut removed = vec![false; g.n()];
            for &v in chosen.iter() {
                removed[v] = true;
            }
            let comps = g.components_without(&removed);
            if comps.len() > 1 {
                for (i, c) in comps.iter().enumerate() {
                    out.push(c.clone());
                    let others: Vec<usize> =
                        comps.iter().enumerate().filter(|&(j, _)| j != i).flat_map(|(_, c)| c.iter().copied()).collect();
                    out.push(others);
                }
            }
        }
        if chosen.len() == kmax {
            return;
        }
        for v in start..g.n() {
            chosen.push(v);
            rec(g, v + 1, kmax, chosen, out);
            chosen.pop();
        }
    }
    rec(g, 0, kmax, &mut chosen, &mut out);
    let mut out: Vec<Vec<usize>> = out.into_iter().map(|mut w| { w.sort_unstable(); w }).filter(|w| !w.is_empty() && w.len() < n).collect();
    out.sort();
    out.dedup();
    out
}

/// Adds complements, removes trivial sets, sorts and deduplicates.
fn finish_family(n: usize, sets: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for w in sets {
        if w.is_empty() || w.len() >= n {
            continue;
        }
        out.push(crate::graph::complement(n, &w));
        out.push(w);
    }
    out.sort();
    out.dedup();
    out
}

/// Reference version of the edge family by subset enumeration: connected
/// sets with boundary at most `kmax`, plus their complements.
pub fn enumerate_sparse_family_by_subsets(g: &Graph, phi: Option<&Rational>, kmax: usize, kind: CutKind) -> Result<Vec<Vec<usize>>> {
    let n = g.n();
    check_bound(n, EDGE_ORACLE_BOUND)?;
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << n) - 1 {
        let w = mask_to_set(mask, n);
        let removed: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 0).collect();
        let connected = g.components_without(&removed).len() == 1;
        if !connected {
            continue;
        }
        match kind {
            CutKind::Edge => {
                if g.boundary_size(&w)? as usize <= kmax {
                    out.push(w);
                }
            }
            CutKind::Vertex => {
                // W is a component of G − C for some C with |C| ≤ kmax iff
                // N(W) has at most kmax vertices and something lies beyond it.
                let nb = g.neighbors(&w)?;
                if nb.len() <= kmax && !nb.is_empty() && w.len() + nb.len() < n {
                    out.push(w.clone());
                    // Co-components: V ∖ C ∖ W for every admissible C ⊇ N(W).
                    let rest: Vec<usize> = crate::graph::complement(n, &[w.clone(), nb.clone()].concat());
                    let spare = kmax - nb.len();
                    let mut extra: Vec<Vec<usize>> = vec![Vec::new()];
                    for &v in &rest {
                        let mut more = Vec::new();
                        for e in &extra {
                            if e.len() < spare {
                                let mut e2 = e.clone();
                                e2.push(v);
                                more.push(e2);
                            }
                        }
                        extra.extend(more);
                    }
                    for e in extra {
                        let c: Vec<usize> = [nb.clone(), e].concat();
                        let mut removed = vec![false; n];
                        for &v in &c {
                            removed[v] = true;
                        }
                        let comps = g.components_without(&removed);
                        if comps.len() > 1 && comps.iter().any(|k| *k == w) {
                            let others: Vec<usize> = comps.iter().filter(|k| **k != w).flat_map(|k| k.iter().copied()).collect();
                            out.push(others);
                        }
                    }
                }
            }
        }
    }
    let mut out = match kind {
        CutKind::Edge => finish_family(n, out),
        CutKind::Vertex => {
            let mut o: Vec<Vec<usize>> = out.into_iter().map(|mut w| { w.sort_unstable(); w }).collect();
            o.sort();
            o.dedup();
            o
        }
    };
    if let Some(phi) = phi {
        out.retain(|w| family_sparsity(g, w, kind).le(phi));
    }
    Ok(out)
}
