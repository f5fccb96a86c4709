//! Cut-matching game for small set expanders.
//!
//! The game graph `H` lives on the terminal set and stores integer edge
//! multiplicities in *units*; one unit weighs `1/scale`. Matchings returned
//! by the matching player may be fractional (each vertex matched to total
//! weight one), so `H` is a weighted multigraph throughout.

use crate::error::{Error, Result};
use crate::flow::{
    extract_matching, in_node, max_flow_min_cut, out_node, vertex_capacitated, Matching, NetworkBuilder,
};
use crate::graph::{complement, sorted, EdgeCut, Graph, VertexCut};
use crate::oracle::{mask_to_set, scan_subsets};
use crate::params::{BalancedMode, ParamSet};
use crate::rational::{fmt_rational, int, to_f64, Rational, Sparsity};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Reverse;

fn weight(units: u64, scale: i128) -> Rational {
    Rational::new(units as i128, scale)
}

/// Weighted sparsity `δ(W) / min(|W|, |W̄|)` of a game-graph cut.
pub fn weighted_sparsity(h: &Graph, scale: i128, w: &[usize]) -> Result<Rational> {
    Ok(h.sparsity(w)? / int(scale))
}

/// Conductance with the convention that a cut crossing no edge has
/// conductance zero, even when a side has no volume.
fn conductance_of(delta: u64, vol_w: u64, vol_rest: u64) -> Option<Rational> {
    if delta == 0 {
        return Some(int(0));
    }
    let v = vol_w.min(vol_rest);
    (v > 0).then(|| Rational::new(delta as i128, v as i128))
}

fn balanced_enough(size: usize, n: usize, b: &Rational) -> bool {
    // min(|W|, |W̄|) ≥ (b/4)·n
    int(4 * size.min(n - size) as i128) >= b * int(n as i128)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "set", rename_all = "snake_case")]
pub enum BalancedOutcome {
    /// Smaller side of a `b/4`-balanced cut of conductance at most `psi`.
    BalancedCut(Vec<usize>),
    /// Smaller side of the most balanced cut of conductance at most `psi`
    /// (empty when there is none).
    OverlapSet(Vec<usize>),
}

/// Finds a `b/4`-balanced cut of conductance at most `psi`, or the set that
/// overlaps every much sparser cut.
pub fn balanced_sparse_cut(h: &Graph, b: &Rational, psi: &Rational, params: &ParamSet) -> Result<BalancedOutcome> {
    match params.mode {
        BalancedMode::Exact => balanced_exact(h, b, psi, params.exhaustive_bound),
        BalancedMode::Heuristic => Ok(balanced_spectral(h, b, psi)),
    }
}

fn smaller_side(n: usize, w: Vec<usize>) -> Vec<usize> {
    let c = complement(n, &w);
    if c.len() < w.len() || (c.len() == w.len() && c < w) {
        c
    } else {
        w
    }
}

fn balanced_exact(h: &Graph, b: &Rational, psi: &Rational, bound: usize) -> Result<BalancedOutcome> {
    let n = h.n();
    if n > bound {
        return Err(Error::SizeBound { n, bound });
    }
    if n < 2 {
        return Ok(BalancedOutcome::OverlapSet(Vec::new()));
    }
    let deg: Vec<u64> = (0..n).map(|v| h.degree(v)).collect();
    let total: u64 = deg.iter().sum();
    let vol = |mask: u64| -> u64 { (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| deg[v]).sum() };
    let full = (1u64 << n) - 1;
    let cond = |mask: u64, delta: u64| -> Option<Rational> {
        if mask == 0 || mask == full {
            return None;
        }
        let vw = vol(mask);
        conductance_of(delta, vw, total - vw).filter(|c| c <= psi)
    };
    let best = scan_subsets(h, |mask, delta, size| {
        let size = size as usize;
        if !balanced_enough(size, n, b) {
            return None;
        }
        cond(mask, delta).map(|c| (c, Reverse(size.min(n - size))))
    });
    if let Some((_, mask)) = best {
        return Ok(BalancedOutcome::BalancedCut(smaller_side(n, mask_to_set(mask, n))));
    }
    let best = scan_subsets(h, |mask, delta, size| {
        let size = size as usize;
        if 2 * size > n {
            return None;
        }
        cond(mask, delta).map(|c| (Reverse(size), c))
    });
    Ok(BalancedOutcome::OverlapSet(best.map(|(_, m)| mask_to_set(m, n)).unwrap_or_default()))
}

/// Sweep over the second eigenvector of the normalised Laplacian.
fn balanced_spectral(h: &Graph, b: &Rational, psi: &Rational) -> BalancedOutcome {
    use nalgebra::DMatrix;
    let n = h.n();
    if n < 2 {
        return BalancedOutcome::OverlapSet(Vec::new());
    }
    let deg: Vec<f64> = (0..n).map(|v| h.degree(v) as f64).collect();
    let mut lap = DMatrix::<f64>::identity(n, n);
    for u in 0..n {
        if deg[u] == 0.0 {
            lap[(u, u)] = 0.0;
        }
        for (v, m) in h.adjacent(u) {
            lap[(u, v)] -= m as f64 / (deg[u] * deg[v]).sqrt();
        }
    }
    let eig = lap.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let vec = eig.eigenvectors.column(idx[1.min(n - 1)]);
    let mut order: Vec<usize> = (0..n).collect();
    let key = |v: usize| vec[v] / deg[v].max(1.0).sqrt();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    let total: u64 = (0..n).map(|v| h.degree(v)).sum();
    let mut mask = vec![false; n];
    let mut best_bal: Option<(Rational, Reverse<usize>, usize)> = None;
    let mut best_small: Option<(Reverse<usize>, Rational, usize)> = None;
    let mut vol = 0;
    for (i, &v) in order.iter().enumerate().take(n - 1) {
        mask[v] = true;
        vol += h.degree(v);
        let size = i + 1;
        let delta = h.boundary_of_mask(&mask);
        let Some(c) = conductance_of(delta, vol, total - vol).filter(|c| c <= psi) else { continue };
        if balanced_enough(size, n, b) {
            let k = (c, Reverse(size.min(n - size)), size);
            if best_bal.as_ref().map_or(true, |x| k < *x) {
                best_bal = Some(k);
            }
        } else {
            let k = (Reverse(size.min(n - size)), c, size);
            if best_small.as_ref().map_or(true, |x| k < *x) {
                best_small = Some(k);
            }
        }
    }
    let prefix = |len: usize| sorted(order[..len].to_vec());
    match (best_bal, best_small) {
        (Some((_, _, len)), _) => BalancedOutcome::BalancedCut(smaller_side(n, prefix(len))),
        (None, Some((_, _, len))) => BalancedOutcome::OverlapSet(smaller_side(n, prefix(len))),
        _ => BalancedOutcome::OverlapSet(Vec::new()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImproveResult {
    /// Improved side `Q ⊆ W`.
    pub q: Vec<usize>,
    /// Vertices of `W` moved to the other side.
    pub r: Vec<usize>,
    #[serde(with = "crate::rational::serde_rational")]
    pub flow: Rational,
    /// Weight of `δ(W)`.
    #[serde(with = "crate::rational::serde_rational")]
    pub boundary: Rational,
}

/// Refines a balanced sparse cut `(W, W̄)` of the game graph with one max
/// flow: boundary edges feed flow into `W`, every vertex of `W` drains
/// `1/rho²` to the sink, and the source side of the min cut moves to `W̄`.
/// Every set `S` with `δ(S) ≤ improve_sparsity·|S|` then satisfies
/// `δ_{H[S]}(Q ∩ S) ≤ |S| / inner_d`.
pub fn improve_cut(h: &Graph, scale: i128, w: &[usize], params: &ParamSet) -> Result<ImproveResult> {
    let n = h.n();
    let w = sorted(w.to_vec());
    let in_w = h.mask(&w)?;
    if w.is_empty() || w.len() == n {
        return Err(Error::Precondition("W must be a nonempty proper subset".into()));
    }
    if !balanced_enough(w.len(), n, &params.balance) {
        return Err(Error::Precondition(format!("W with {} of {n} vertices is not balanced", w.len())));
    }
    let sp = weighted_sparsity(h, scale, &w)?;
    if sp > params.improve_pre {
        return Err(Error::Precondition(format!(
            "sparsity of W is {}, above {}",
            fmt_rational(&sp),
            fmt_rational(&params.improve_pre)
        )));
    }
    let rho2 = params.rho * params.rho;
    // Nodes: vertices of H (only W is wired), then x_e nodes, then s and t.
    let mut b = NetworkBuilder::new(n, 0, 0);
    for &v in &w {
        b.set_vertex(v, v);
    }
    let s = b.add_node(None);
    let t = b.add_node(None);
    b.set_source_sink(s, t);
    let mut boundary = 0u64;
    for &u in &w {
        b.add_arc(u, t, int(1) / rho2);
        for (v, m) in h.adjacent(u) {
            if in_w[v] {
                if u < v {
                    b.add_undirected(u, v, weight(m, scale));
                }
            } else {
                boundary += m;
                let x = b.add_node(None);
                b.add_arc(s, x, weight(m, scale));
                b.add_undirected(x, u, weight(m, scale));
            }
        }
    }
    let net = b.finish();
    let res = max_flow_min_cut(&net);
    let side = res.in_source_side(net.nodes);
    let (r, q): (Vec<usize>, Vec<usize>) = w.iter().partition(|&&v| side[v]);
    let flow = res.value_rational();
    debug_assert!(int(r.len() as i128) <= rho2 * flow);
    Ok(ImproveResult { q, r, flow, boundary: weight(boundary, scale) })
}

/// Weight of `δ_{H[S]}(Q ∩ S)`.
pub fn inner_boundary(h: &Graph, scale: i128, q: &[usize], s: &[usize]) -> Rational {
    let n = h.n();
    let mut in_s = vec![false; n];
    for &v in s {
        in_s[v] = true;
    }
    let mut in_q = vec![false; n];
    for &v in q {
        in_q[v] = true;
    }
    let units: u64 = s
        .iter()
        .filter(|&&u| in_q[u])
        .flat_map(|&u| h.adjacent(u))
        .filter(|&(v, _)| in_s[v] && !in_q[v])
        .map(|(_, m)| m)
        .sum();
    weight(units, scale)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Bisection,
    Cover,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pair {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub kind: PairKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Overlap,
    Balanced,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCollection {
    pub pairs: Vec<Pair>,
    pub branch: Branch,
    #[serde(with = "crate::rational::serde_rational")]
    pub psi: Rational,
    /// The set contained in the bisection's first side.
    pub q: Vec<usize>,
    pub improve: Option<ImproveResult>,
}

/// `(B, B̄)` with `Q ⊆ B`, `|B| = ⌊n/2⌋`, padded by lowest ids.
fn bisection_containing(n: usize, q: &[usize]) -> Pair {
    let mut in_b = vec![false; n];
    for &v in q {
        in_b[v] = true;
    }
    let mut size = q.len();
    for v in 0..n {
        if size >= n / 2 {
            break;
        }
        if !in_b[v] {
            in_b[v] = true;
            size += 1;
        }
    }
    let x: Vec<usize> = (0..n).filter(|&v| in_b[v]).collect();
    Pair { y: complement(n, &x), x, kind: PairKind::Bisection }
}

/// One cut-player move on the current game graph.
pub fn cut_player_round(h: &Graph, scale: i128, params: &ParamSet) -> Result<PairCollection> {
    let n = h.n();
    let delta = weight(h.max_degree(), scale).max(int(1));
    let psi = match params.mode {
        BalancedMode::Exact => params.improve_pre / delta,
        BalancedMode::Heuristic => params.improve_pre / (delta * delta),
    };
    match balanced_sparse_cut(h, &params.balance, &psi, params)? {
        BalancedOutcome::OverlapSet(y) => {
            Ok(PairCollection { pairs: vec![bisection_containing(n, &y)], branch: Branch::Overlap, psi, q: y, improve: None })
        }
        BalancedOutcome::BalancedCut(w) => {
            let imp = improve_cut(h, scale, &w, params)?;
            let mut q = imp.q.clone();
            if 2 * q.len() > n {
                q = complement(n, &q);
            }
            let rest = complement(n, &q);
            let k = q.len();
            let mut pairs = Vec::new();
            for start in (0..rest.len()).step_by(k) {
                let block: Vec<usize> = (start..start + k).map(|i| rest[i % rest.len()]).collect();
                pairs.push(Pair { x: q.clone(), y: sorted(block), kind: PairKind::Cover });
            }
            pairs.push(bisection_containing(n, &q));
            Ok(PairCollection { pairs, branch: Branch::Balanced, psi, q, improve: Some(imp) })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatchOutcome {
    Matching(Matching),
    EdgeCut(EdgeCut),
    VertexCut(VertexCut),
}

fn check_pair(g: &Graph, terminals: &[usize], x: &[usize], y: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let (x, y) = (sorted(x.to_vec()), sorted(y.to_vec()));
    let is_t = g.mask(terminals)?;
    if x.iter().chain(&y).any(|&v| v >= g.n() || !is_t[v]) {
        return Err(Error::Precondition("pair must consist of terminals".into()));
    }
    if x.iter().any(|v| y.binary_search(v).is_ok()) {
        return Err(Error::Precondition("pair sides intersect".into()));
    }
    if x.len().abs_diff(y.len()) > 1 {
        return Err(Error::Precondition("pair sides differ by more than one".into()));
    }
    Ok((x, y))
}

/// Routes a perfect matching from `x` to `y` with edge congestion `1/phi`,
/// or returns the `phi`-terminal-sparse cut that blocks it.
pub fn matching_player_round(g: &Graph, terminals: &[usize], phi: &Rational, x: &[usize], y: &[usize]) -> Result<MatchOutcome> {
    let (x, y) = check_pair(g, terminals, x, y)?;
    if x.is_empty() || y.is_empty() {
        return Ok(MatchOutcome::Matching(Matching::empty()));
    }
    let n = g.n();
    let mut b = NetworkBuilder::new(n, 0, 0);
    for v in 0..n {
        b.set_vertex(v, v);
    }
    let s = b.add_node(None);
    let t = b.add_node(None);
    b.set_source_sink(s, t);
    for &v in &x {
        b.add_arc(s, v, int(1));
    }
    for &v in &y {
        b.add_arc(v, t, int(1));
    }
    let cap = int(1) / phi;
    for (u, v, m) in g.edges() {
        b.add_undirected(u, v, cap * int(m as i128));
    }
    let net = b.finish();
    let res = max_flow_min_cut(&net);
    if res.value == x.len().min(y.len()) as i128 * net.scale {
        return Ok(MatchOutcome::Matching(extract_matching(&net, &res, &x, &y)?));
    }
    let side_mask = res.in_source_side(net.nodes);
    let side: Vec<usize> = (0..n).filter(|&v| side_mask[v]).collect();
    let cut = EdgeCut::with_terminals(g, terminals, &side)?;
    assert!(
        cut.terminal_sparsity.as_ref().is_some_and(|ts| ts.le(phi)),
        "deficient flow must certify a sparse cut"
    );
    Ok(MatchOutcome::EdgeCut(cut))
}

/// Vertex-capacitated variant: every vertex carries at most `1/phi`.
pub fn vertex_matching_player_round(g: &Graph, terminals: &[usize], phi: &Rational, x: &[usize], y: &[usize]) -> Result<MatchOutcome> {
    if *phi >= int(1) {
        return Err(Error::InvalidParameter("vertex matching needs phi < 1".into()));
    }
    let (x, y) = check_pair(g, terminals, x, y)?;
    if x.is_empty() || y.is_empty() {
        return Ok(MatchOutcome::Matching(Matching::empty()));
    }
    let n = g.n();
    let caps = vec![int(1) / phi; n];
    let mut b = vertex_capacitated(g, &caps, None);
    let s = b.add_node(None);
    let t = b.add_node(None);
    b.set_source_sink(s, t);
    for &v in &x {
        b.add_arc(s, in_node(v), int(1));
    }
    for &v in &y {
        b.add_arc(out_node(v), t, int(1));
    }
    let net = b.finish();
    let res = max_flow_min_cut(&net);
    if res.value == x.len().min(y.len()) as i128 * net.scale {
        return Ok(MatchOutcome::Matching(extract_matching(&net, &res, &x, &y)?));
    }
    let side = res.in_source_side(net.nodes);
    let (mut l, mut c, mut r) = (Vec::new(), Vec::new(), Vec::new());
    for v in 0..n {
        match (side[in_node(v)], side[out_node(v)]) {
            (_, true) => l.push(v),
            (true, false) => c.push(v),
            (false, false) => r.push(v),
        }
    }
    let cut = VertexCut::new(g, &l, &c, &r)?;
    let ts = cut.terminal_sparsity_for(n, terminals);
    assert!(ts.le(phi), "deficient flow must certify a sparse vertex cut");
    let mut cut = cut;
    cut.terminal_sparsity = Some(ts);
    Ok(MatchOutcome::VertexCut(cut))
}

/// Largest load any single vertex carries over the routes.
pub fn vertex_loads(routes: &[(Vec<usize>, Rational)], n: usize) -> Vec<Rational> {
    let mut load = vec![int(0); n];
    for (path, amount) in routes {
        for &v in path {
            load[v] += *amount;
        }
    }
    load
}

/// Minimum of `δ(S) / |S|` over nonempty proper subsets with `|S| ≤ s`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionCheck {
    pub holds: bool,
    pub value: Sparsity,
    pub worst: Vec<usize>,
    /// False when the minimum was taken over a sample of sets.
    pub exhaustive: bool,
}

/// Checks that every set of at most `s` vertices expands by at least
/// `bound` in the weighted game graph. Exhaustive up to `certify_bound`
/// vertices, sampled beyond.
pub fn certify_small_set_expansion(h: &Graph, scale: i128, s: usize, bound: &Rational, params: &ParamSet) -> ExpansionCheck {
    let n = h.n();
    let smax = s.min(n.saturating_sub(1));
    if smax == 0 {
        return ExpansionCheck { holds: true, value: Sparsity::Infinite, worst: Vec::new(), exhaustive: true };
    }
    let (value, worst, exhaustive) = if n <= params.certify_bound {
        let (v, mask) = scan_subsets(h, |_, delta, size| {
            let size = size as usize;
            (size >= 1 && size <= smax).then(|| Rational::new(delta as i128, size as i128))
        })
        .expect("some set qualifies");
        (v, mask_to_set(mask, n), true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut best: Option<(Rational, Vec<usize>)> = None;
        for i in 0..4000 {
            let size = 1 + rng.gen_range(0..smax);
            let set = if i % 2 == 0 {
                sorted(sample(&mut rng, n, size).into_vec())
            } else {
                ball(h, rng.gen_range(0..n), size)
            };
            let v = Rational::new(h.boundary_size(&set).unwrap() as i128, set.len() as i128);
            if best.as_ref().map_or(true, |b| v < b.0) {
                best = Some((v, set));
            }
        }
        let (v, set) = best.unwrap();
        (v, set, false)
    };
    let value = value / int(scale);
    ExpansionCheck { holds: value >= *bound, value: Sparsity::Finite(value), worst, exhaustive }
}

fn ball(h: &Graph, root: usize, size: usize) -> Vec<usize> {
    let mut seen = vec![false; h.n()];
    let mut out = vec![root];
    seen[root] = true;
    let mut i = 0;
    while out.len() < size && i < out.len() {
        let u = out[i];
        i += 1;
        for (v, _) in h.adjacent(u) {
            if !seen[v] && out.len() < size {
                seen[v] = true;
                out.push(v);
            }
        }
    }
    sorted(out)
}

/// Random-walk entropy over a tracked set `S` of game vertices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialTracker {
    pub set: Vec<usize>,
    #[serde(skip)]
    mass: Vec<Vec<f64>>,
    pub value: f64,
    pub history: Vec<f64>,
}

impl PotentialTracker {
    pub fn new(set: &[usize]) -> PotentialTracker {
        let set = sorted(set.to_vec());
        let k = set.len();
        let mass = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        PotentialTracker { set, mass, value: 0.0, history: vec![0.0] }
    }

    /// `|S| ln |S|`, the largest possible value.
    pub fn ceiling(&self) -> f64 {
        let k = self.set.len() as f64;
        if k <= 1.0 {
            0.0
        } else {
            k * k.ln()
        }
    }

    fn entropy(&self) -> f64 {
        self.mass.iter().flatten().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
    }
}

/// Mixes the tracked distributions along a matching given as game-vertex
/// pairs with units at `scale`. Each vertex of `S` keeps half its mass and
/// averages the other half with its partners inside `S`; weight matched
/// outside `S` stays in place. Returns the potential gain.
pub fn potential_step(tracker: &mut PotentialTracker, pairs: &[(usize, usize, i128)], scale: i128) -> f64 {
    let k = tracker.set.len();
    let pos = |v: usize| tracker.set.binary_search(&v).ok();
    let mut mix: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for &(a, b, units) in pairs {
        if let (Some(i), Some(j)) = (pos(a), pos(b)) {
            let w = units as f64 / scale as f64;
            mix[i].push((j, w));
            mix[j].push((i, w));
        }
    }
    let old = tracker.mass.clone();
    for u in 0..k {
        for a in 0..k {
            let out: f64 = mix[a].iter().map(|&(_, w)| w).sum();
            let inflow: f64 = mix[a].iter().map(|&(b, w)| w * old[u][b]).sum();
            tracker.mass[u][a] = 0.5 * old[u][a] + 0.5 * (inflow + (1.0 - out) * old[u][a]);
        }
    }
    let before = tracker.value;
    tracker.value = tracker.entropy();
    assert!(tracker.value >= before - 1e-9, "potential decreased");
    assert!(tracker.value <= tracker.ceiling() + 1e-9, "potential above |S| ln |S|");
    tracker.history.push(tracker.value);
    tracker.value - before
}

/// Whether a round should raise the potential of `s` by a constant
/// fraction of `|S|`: `Q` splits `S` with both parts at least
/// `balance·|S|`, `H[S]` crosses it by at most a hundredth of the smaller
/// part, and the bisection matching keeps every vertex of `S` inside `S`.
pub fn round_qualifies(h_before: &Graph, scale: i128, q: &[usize], bisection: &[(usize, usize, i128)], s: &[usize], params: &ParamSet) -> bool {
    let in_q: Vec<bool> = {
        let mut m = vec![false; h_before.n()];
        for &v in q {
            m[v] = true;
        }
        m
    };
    let inside = s.iter().filter(|&&v| in_q[v]).count();
    let small = inside.min(s.len() - inside);
    let frac = params.balance * int(s.len() as i128);
    if int(small as i128) < frac || small == 0 {
        return false;
    }
    if inner_boundary(h_before, scale, q, s) * int(100) > int(small as i128) {
        return false;
    }
    let in_s = |v: usize| s.binary_search(&v).is_ok();
    bisection.iter().all(|&(a, b, _)| in_s(a) == in_s(b))
}

/// How a round's collection makes progress on a sparse set `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Progress {
    /// Some pair is unbalanced on `S` by the stated margin.
    UnbalancedPair,
    /// `Q` is balanced inside `S` and `H[S]` crosses it lightly.
    BalancedSparse,
    Overlap,
    None,
}

/// Classifies a collection against `S`. With `α = |Q|/n`, a pair counts as
/// unbalanced when `||X ∩ S| − |Y ∩ S|| ≥ min(1/5, α/6)·|S|`; otherwise `Q`
/// must hold at least `α/3` of `S` and `δ_{H[S]}(Q ∩ S) ≤ |S| / inner_d`.
pub fn classify_round(h_before: &Graph, scale: i128, col: &PairCollection, s: &[usize], params: &ParamSet) -> Progress {
    if col.branch == Branch::Overlap {
        return Progress::Overlap;
    }
    let n = int(h_before.n() as i128);
    let alpha = int(col.q.len() as i128) / n;
    let margin = (alpha / int(6)).min(Rational::new(1, 5)) * int(s.len() as i128);
    let count = |set: &[usize]| s.iter().filter(|v| set.binary_search(v).is_ok()).count() as i128;
    for p in &col.pairs {
        if int((count(&p.x) - count(&p.y)).abs()) >= margin {
            return Progress::UnbalancedPair;
        }
    }
    let qs = int(count(&col.q));
    let bal = qs >= alpha / int(3) * int(s.len() as i128) && int(s.len() as i128) - qs >= alpha / int(3) * int(s.len() as i128);
    if bal && inner_boundary(h_before, scale, &col.q, s) * params.inner_d <= int(s.len() as i128) {
        return Progress::BalancedSparse;
    }
    Progress::None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Edge,
    Vertex,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub rounds: u32,
    /// Number of pair matchings added to `H`; their union routes in `G`
    /// with congestion `matchings / phi`.
    pub matchings: u64,
    /// Smallest expansion over sets of at most `s` game vertices.
    pub h_expansion: Sparsity,
    pub worst_set: Vec<usize>,
    pub exhaustive: bool,
    /// `h_expansion ≥ 1 / (cert_c · log₂ s)`.
    pub certified: bool,
    #[serde(with = "crate::rational::serde_rational")]
    pub congestion: Rational,
    /// Every cut whose smaller terminal side has at most `s` terminals has
    /// terminal sparsity at least this.
    pub lower_bound: Sparsity,
    /// `matchings / (h · log₂² s)`, the constant in the bound.
    pub measured_c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum GameOutcome {
    EdgeCut(EdgeCut),
    VertexCut(VertexCut),
    Certificate(Certificate),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u32,
    #[serde(with = "crate::rational::serde_rational")]
    pub psi: Rational,
    pub branch: Branch,
    pub pair_sizes: Vec<(usize, usize)>,
    pub potentials: Vec<f64>,
    pub potential_gains: Vec<f64>,
    pub qualifying: Vec<bool>,
    pub h_expansion: Option<Sparsity>,
    pub cut_found: bool,
}

/// A matched pair in game-vertex ids.
pub type GameEdge = (usize, usize, i128);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameRun {
    pub outcome: GameOutcome,
    pub rounds: u32,
    pub trace: Vec<RoundRecord>,
    /// Final game graph and its unit scale.
    #[serde(skip)]
    pub h: Graph,
    pub scale: i128,
    #[serde(skip)]
    pub collections: Vec<PairCollection>,
    /// Every accepted matching with its pair, as game-vertex ids.
    #[serde(skip)]
    pub matchings: Vec<Vec<(Pair, Matching)>>,
    pub trackers: Vec<PotentialTracker>,
}

impl GameRun {
    pub fn trace_jsonl(&self) -> String {
        self.trace.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect()
    }
}

/// Largest round count: `⌈round_d · log₂ s⌉ + 1`.
pub fn round_budget(s: usize, params: &ParamSet) -> u32 {
    let l = (s.max(1) as f64).log2();
    (params.round_d as f64 * l).ceil() as u32 + 1
}

/// Certification target `1 / (cert_c · max(log₂ s, 1))`.
pub fn expansion_target(s: usize, params: &ParamSet) -> Rational {
    let l = crate::rational::from_f64_down((s.max(1) as f64).log2().max(1.0));
    int(1) / (params.cert_c * l)
}

/// Plays the game on the terminals of `g` until a matching player finds a
/// `phi`-terminal-sparse cut, `H` certifiably expands on sets of at most
/// `s` vertices, or the round budget runs out. `tracked` lists game-vertex
/// sets whose entropy potential is recorded.
pub fn run_game(
    g: &Graph,
    terminals: &[usize],
    phi: &Rational,
    s: usize,
    kind: GameKind,
    params: &ParamSet,
    tracked: &[Vec<usize>],
) -> Result<GameRun> {
    let terminals = sorted(terminals.to_vec());
    let k = terminals.len();
    if k == 0 || s == 0 || s > k {
        return Err(Error::Precondition(format!("need 1 ≤ s ≤ |T|, got s = {s}, |T| = {k}")));
    }
    if *phi <= int(0) {
        return Err(Error::InvalidParameter("phi must be positive".into()));
    }
    let scale = *phi.numer();
    let mut h = Graph::new(k);
    let mut trackers: Vec<PotentialTracker> = tracked.iter().map(|t| PotentialTracker::new(t)).collect();
    let budget = round_budget(s, params);
    let target = expansion_target(s, params);
    let mut trace = Vec::new();
    let mut collections = Vec::new();
    let mut all_matchings = Vec::new();
    let mut matchings_total = 0u64;
    let to_g = |side: &[usize]| side.iter().map(|&i| terminals[i]).collect::<Vec<_>>();
    let to_h = |v: usize| terminals.binary_search(&v).expect("matched vertex is a terminal");
    let mut last_check = None;

    for round in 1..=budget {
        let col = cut_player_round(&h, scale, params)?;
        let results: Vec<Result<MatchOutcome>> = col
            .pairs
            .par_iter()
            .map(|p| {
                let (x, y) = (to_g(&p.x), to_g(&p.y));
                match kind {
                    GameKind::Edge => matching_player_round(g, &terminals, phi, &x, &y),
                    GameKind::Vertex => vertex_matching_player_round(g, &terminals, phi, &x, &y),
                }
            })
            .collect();
        let mut record = RoundRecord {
            round,
            psi: col.psi,
            branch: col.branch,
            pair_sizes: col.pairs.iter().map(|p| (p.x.len(), p.y.len())).collect(),
            potentials: Vec::new(),
            potential_gains: Vec::new(),
            qualifying: Vec::new(),
            h_expansion: None,
            cut_found: false,
        };
        let mut round_matchings = Vec::new();
        for (p, r) in col.pairs.iter().zip(results) {
            match r? {
                MatchOutcome::Matching(m) => round_matchings.push((p.clone(), m)),
                MatchOutcome::EdgeCut(c) => {
                    record.cut_found = true;
                    trace.push(record);
                    collections.push(col);
                    return Ok(GameRun {
                        outcome: GameOutcome::EdgeCut(c),
                        rounds: round,
                        trace,
                        h,
                        scale,
                        collections,
                        matchings: all_matchings,
                        trackers,
                    });
                }
                MatchOutcome::VertexCut(c) => {
                    record.cut_found = true;
                    trace.push(record);
                    collections.push(col);
                    return Ok(GameRun {
                        outcome: GameOutcome::VertexCut(c),
                        rounds: round,
                        trace,
                        h,
                        scale,
                        collections,
                        matchings: all_matchings,
                        trackers,
                    });
                }
            }
        }
        // Potential uses the bisection matching, measured against H before
        // this round's edges.
        let h_before = h.clone();
        for (p, m) in &round_matchings {
            if m.pairs.is_empty() {
                continue;
            }
            matchings_total += 1;
            assert_eq!(scale % m.scale, 0, "matching scale divides the game scale");
            let factor = scale / m.scale;
            for mp in &m.pairs {
                h.add_edge_mult(to_h(mp.a), to_h(mp.b), (mp.units * factor) as u64);
            }
            if p.kind == PairKind::Bisection {
                let edges: Vec<GameEdge> = m.pairs.iter().map(|mp| (to_h(mp.a), to_h(mp.b), mp.units * factor)).collect();
                for tr in trackers.iter_mut() {
                    record.qualifying.push(round_qualifies(&h_before, scale, &col.q, &edges, &tr.set, params));
                    record.potential_gains.push(potential_step(tr, &edges, scale));
                    record.potentials.push(tr.value);
                }
            }
        }
        all_matchings.push(round_matchings);
        collections.push(col);
        let done = if k <= params.certify_bound || round == budget {
            let check = certify_small_set_expansion(&h, scale, s, &target, params);
            record.h_expansion = Some(check.value.clone());
            let stop = check.holds;
            last_check = Some(check);
            stop
        } else {
            false
        };
        trace.push(record);
        if done || round == budget {
            let check = last_check.take().expect("checked on the last round");
            let cert = certificate(check, round, matchings_total, phi, s);
            return Ok(GameRun {
                outcome: GameOutcome::Certificate(cert),
                rounds: round,
                trace,
                h,
                scale,
                collections,
                matchings: all_matchings,
                trackers,
            });
        }
    }
    unreachable!("budget is at least one round")
}

fn certificate(check: ExpansionCheck, rounds: u32, matchings: u64, phi: &Rational, s: usize) -> Certificate {
    let m = int(matchings.max(1) as i128);
    let congestion = m / phi;
    let log = (s.max(2) as f64).log2();
    let (lower_bound, measured_c) = match &check.value {
        Sparsity::Infinite => (Sparsity::Infinite, None),
        Sparsity::Finite(h) => {
            let hf = to_f64(h);
            (Sparsity::Finite(h * phi / m), (hf > 0.0).then(|| matchings as f64 / (hf * log * log)))
        }
    };
    Certificate {
        rounds,
        matchings,
        h_expansion: check.value,
        worst_set: check.worst,
        exhaustive: check.exhaustive,
        certified: check.holds,
        congestion,
        lower_bound,
        measured_c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::generators;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn params() -> ParamSet {
        ParamSet::default()
    }

    #[test]
    fn balanced_examples() {
        let p = params();
        let c4 = generators::cycle(4);
        assert!(matches!(balanced_sparse_cut(&c4, &rat(1, 100), &int(1), &p).unwrap(), BalancedOutcome::BalancedCut(_)));
        let k6 = generators::complete(6);
        assert_eq!(balanced_sparse_cut(&k6, &rat(1, 4), &rat(1, 100), &p).unwrap(), BalancedOutcome::OverlapSet(vec![]));
        let d = generators::dumbbell(8, 8);
        // Bridge cut: 1/57; clique-internal cuts are far denser.
        match balanced_sparse_cut(&d, &rat(1, 4), &rat(1, 20), &p).unwrap() {
            BalancedOutcome::BalancedCut(w) => assert_eq!(w, (0..8).collect::<Vec<_>>()),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn spectral_finds_dumbbell_bridge() {
        let mut p = params();
        p.mode = BalancedMode::Heuristic;
        let d = generators::dumbbell(8, 8);
        match balanced_sparse_cut(&d, &rat(1, 4), &rat(1, 20), &p).unwrap() {
            BalancedOutcome::BalancedCut(w) => assert_eq!(w.len(), 8),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn improve_cut_on_dumbbell() {
        let p = params();
        let h = generators::dumbbell(40, 40);
        let left: Vec<usize> = (0..40).collect();
        let r = improve_cut(&h, 1, &left, &p).unwrap();
        for s in [left.clone(), (40..80).collect()] {
            assert_eq!(inner_boundary(&h, 1, &r.q, &s), int(0));
        }
        assert_eq!(r.q, left);
    }

    #[test]
    fn improve_cut_rejects_dense_w() {
        let p = params();
        let h = generators::complete(8);
        assert!(matches!(improve_cut(&h, 1, &[0, 1, 2, 3], &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn cut_player_shapes() {
        let p = params();
        let h = Graph::new(9);
        let col = cut_player_round(&h, 1, &p).unwrap();
        assert_eq!(col.branch, Branch::Balanced);
        assert!(col.pairs.len() >= 2);
        let alpha = Rational::new(col.q.len() as i128, 9);
        assert!(int(col.pairs.len() as i128) <= int(1) / alpha + int(2));
        for pr in &col.pairs {
            assert!(pr.x.len().abs_diff(pr.y.len()) <= 1);
            assert!(pr.x.iter().all(|v| !pr.y.contains(v)));
        }
        let col = cut_player_round(&generators::complete(6), 1, &p).unwrap();
        assert_eq!(col.branch, Branch::Overlap);
        assert_eq!(col.pairs.len(), 1);
    }

    #[test]
    fn matching_player_examples() {
        let g = generators::dumbbell(4, 4);
        let t: Vec<usize> = (0..8).collect();
        match matching_player_round(&g, &t, &int(1), &[0, 1, 2], &[4, 5, 6]).unwrap() {
            MatchOutcome::EdgeCut(c) => assert_eq!(c.boundary_size, 1),
            o => panic!("{o:?}"),
        }
        let k = generators::complete(8);
        match matching_player_round(&k, &t, &rat(1, 4), &[0, 1, 2, 3], &[4, 5, 6, 7]).unwrap() {
            MatchOutcome::Matching(m) => assert!(m.is_perfect_on(&[0, 1, 2, 3], &[4, 5, 6, 7])),
            o => panic!("{o:?}"),
        }
        assert_eq!(matching_player_round(&k, &t, &int(1), &[], &[]).unwrap(), MatchOutcome::Matching(Matching::empty()));
    }

    #[test]
    fn vertex_matching_examples() {
        let star = generators::star(6);
        let leaves: Vec<usize> = (1..7).collect();
        match vertex_matching_player_round(&star, &leaves, &rat(1, 2), &[1, 2, 3], &[4, 5, 6]).unwrap() {
            MatchOutcome::VertexCut(c) => assert_eq!(c.separator, vec![0]),
            o => panic!("{o:?}"),
        }
        let k = generators::complete(6);
        let all: Vec<usize> = (0..6).collect();
        assert!(matches!(
            vertex_matching_player_round(&k, &all, &rat(1, 6), &[0, 1, 2], &[3, 4, 5]).unwrap(),
            MatchOutcome::Matching(_)
        ));
        let e = generators::path(2);
        match vertex_matching_player_round(&e, &[0, 1], &rat(1, 2), &[0], &[1]).unwrap() {
            MatchOutcome::Matching(m) => assert_eq!(m.pairs.len(), 1),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn potential_two_vertices() {
        let mut t = PotentialTracker::new(&[0, 1]);
        assert_eq!(potential_step(&mut t, &[(2, 3, 1)], 1), 0.0);
        potential_step(&mut t, &[(0, 1, 1)], 1);
        assert!((t.value - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn game_on_dumbbell_finds_bridge() {
        let g = generators::dumbbell(5, 5);
        let t: Vec<usize> = (0..10).collect();
        let run = run_game(&g, &t, &int(1), 5, GameKind::Edge, &params(), &[]).unwrap();
        match run.outcome {
            GameOutcome::EdgeCut(c) => assert!(c.terminal_sparsity.unwrap().le(&int(1))),
            o => panic!("{o:?}"),
        }
        assert_eq!(run.rounds, 1);
    }

    #[test]
    fn game_s_one_certifies() {
        let g = generators::complete(7);
        let t: Vec<usize> = (0..7).collect();
        let run = run_game(&g, &t, &rat(1, 8), 1, GameKind::Edge, &params(), &[]).unwrap();
        assert!(matches!(run.outcome, GameOutcome::Certificate(ref c) if c.certified));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        /// Every set sparse in H keeps a light inner boundary after ImproveCut.
        #[test]
        fn improve_cut_bound(n in 8usize..13, seed in any::<u64>()) {
            let p = params();
            let h = generators::planted_bisection(n, 0.9, 0.05, seed);
            let full = (1u64 << n) - 1;
            let w: Vec<usize> = (0..n / 2).collect();
            let Ok(r) = improve_cut(&h, 1, &w, &p) else { return Ok(()) };
            for mask in 1..full {
                let s = mask_to_set(mask, n);
                let d = h.boundary_size(&s).unwrap();
                if int(d as i128) <= p.improve_sparsity * int(s.len() as i128) {
                    prop_assert!(inner_boundary(&h, 1, &r.q, &s) * p.inner_d <= int(s.len() as i128));
                }
            }
        }
    }
}
