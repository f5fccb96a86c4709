//! Exact max-flow / min-cut on integer-scaled rational capacities.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rational::Rational;
use num_integer::Integer;
use num_traits::Zero;
use std::collections::{BTreeMap, VecDeque};

/// Collects arcs with rational capacities; `finish` clears denominators.
#[derive(Clone, Debug)]
pub struct NetworkBuilder {
    nodes: usize,
    source: usize,
    sink: usize,
    arcs: Vec<(usize, usize, Rational)>,
    vertex_of: Vec<Option<usize>>,
}

impl NetworkBuilder {
    pub fn new(nodes: usize, source: usize, sink: usize) -> NetworkBuilder {
        NetworkBuilder { nodes, source, sink, arcs: Vec::new(), vertex_of: vec![None; nodes] }
    }

    pub fn add_node(&mut self, vertex: Option<usize>) -> usize {
        self.nodes += 1;
        self.vertex_of.push(vertex);
        self.nodes - 1
    }

    pub fn set_vertex(&mut self, node: usize, vertex: usize) {
        self.vertex_of[node] = Some(vertex);
    }

    pub fn set_source_sink(&mut self, source: usize, sink: usize) {
        self.source = source;
        self.sink = sink;
    }

    /// Directed arc; returns its index among forward arcs.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: Rational) -> usize {
        assert!(from < self.nodes && to < self.nodes);
        assert!(cap >= Rational::zero(), "negative capacity");
        self.arcs.push((from, to, cap));
        self.arcs.len() - 1
    }

    /// An undirected edge, modelled as two opposite arcs of equal capacity.
    pub fn add_undirected(&mut self, u: usize, v: usize, cap: Rational) -> (usize, usize) {
        (self.add_arc(u, v, cap), self.add_arc(v, u, cap))
    }

    pub fn finish(self) -> FlowNetwork {
        let mut scale: i128 = 1;
        for (_, _, c) in &self.arcs {
            scale = scale.lcm(c.denom());
        }
        let m = self.arcs.len();
        let mut to = Vec::with_capacity(2 * m);
        let mut cap = Vec::with_capacity(2 * m);
        let mut adj = vec![Vec::new(); self.nodes];
        for (i, (u, v, c)) in self.arcs.iter().enumerate() {
            let scaled = c.numer() * (scale / c.denom());
            to.push(*v);
            cap.push(scaled);
            to.push(*u);
            cap.push(0);
            adj[*u].push(2 * i);
            adj[*v].push(2 * i + 1);
        }
        FlowNetwork {
            nodes: self.nodes,
            source: self.source,
            sink: self.sink,
            scale,
            to,
            cap,
            adj,
            vertex_of: self.vertex_of,
        }
    }
}

/// Residual network. Arc `2i` is forward arc `i`, arc `2i + 1` its reverse.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub source: usize,
    pub sink: usize,
    /// All capacities were multiplied by this to make them integers.
    pub scale: i128,
    to: Vec<usize>,
    cap: Vec<i128>,
    adj: Vec<Vec<usize>>,
    vertex_of: Vec<Option<usize>>,
}

impl FlowNetwork {
    pub fn arc_count(&self) -> usize {
        self.to.len() / 2
    }

    /// `(from, to, scaled capacity)` of forward arc `i`.
    pub fn arc(&self, i: usize) -> (usize, usize, i128) {
        (self.to[2 * i + 1], self.to[2 * i], self.cap[2 * i])
    }

    pub fn vertex_of(&self, node: usize) -> Option<usize> {
        self.vertex_of[node]
    }

    /// DIMACS max-flow text, for cross-checking with external solvers.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p max {} {}\nn {} s\nn {} t\n", self.nodes, self.arc_count(), self.source + 1, self.sink + 1);
        for i in 0..self.arc_count() {
            let (u, v, c) = self.arc(i);
            out.push_str(&format!("a {} {} {}\n", u + 1, v + 1, c));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct MaxFlowResult {
    /// Flow value at the network's scale.
    pub value: i128,
    /// Flow on each forward arc, at scale.
    pub flow: Vec<i128>,
    /// Nodes reachable from the source in the final residual network.
    pub source_side: Vec<usize>,
    pub scale: i128,
}

impl MaxFlowResult {
    pub fn value_rational(&self) -> Rational {
        Rational::new(self.value, self.scale)
    }

    pub fn in_source_side(&self, nodes: usize) -> Vec<bool> {
        let mut mask = vec![false; nodes];
        for &v in &self.source_side {
            mask[v] = true;
        }
        mask
    }

    /// Checks bounds, conservation, and that the value equals the capacity of
    /// the returned cut.
    pub fn verify(&self, net: &FlowNetwork) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(format!("flow check: {m}")));
        let mut excess = vec![0i128; net.nodes];
        for i in 0..net.arc_count() {
            let (u, v, c) = net.arc(i);
            let f = self.flow[i];
            if f < 0 || f > c {
                return bad(format!("arc {i} carries {f} outside [0, {c}]"));
            }
            excess[u] -= f;
            excess[v] += f;
        }
        for v in 0..net.nodes {
            if v != net.source && v != net.sink && excess[v] != 0 {
                return bad(format!("conservation fails at node {v}"));
            }
        }
        if -excess[net.source] != self.value || excess[net.sink] != self.value {
            return bad("value differs from source outflow".into());
        }
        let side = self.in_source_side(net.nodes);
        if !side[net.source] || side[net.sink] {
            return bad("cut does not separate source and sink".into());
        }
        let cut_cap: i128 = (0..net.arc_count())
            .map(|i| net.arc(i))
            .filter(|&(u, v, _)| side[u] && !side[v])
            .map(|(_, _, c)| c)
            .sum();
        if cut_cap != self.value {
            return bad(format!("cut capacity {cut_cap} differs from value {}", self.value));
        }
        Ok(())
    }
}

/// Dinic's blocking-flow algorithm.
pub fn max_flow_min_cut(net: &FlowNetwork) -> MaxFlowResult {
    assert_ne!(net.source, net.sink, "source equals sink");
    let mut res = net.cap.clone();
    let n = net.nodes;
    let mut level = vec![usize::MAX; n];
    let mut iter = vec![0usize; n];
    let mut value: i128 = 0;
    loop {
        level.iter_mut().for_each(|l| *l = usize::MAX);
        level[net.source] = 0;
        let mut q = VecDeque::from([net.source]);
        while let Some(u) = q.pop_front() {
            for &a in &net.adj[u] {
                let v = net.to[a];
                if res[a] > 0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        if level[net.sink] == usize::MAX {
            break;
        }
        iter.iter_mut().for_each(|i| *i = 0);
        loop {
            let pushed = augment(net, &mut res, &level, &mut iter, net.source, i128::MAX);
            if pushed == 0 {
                break;
            }
            value += pushed;
        }
    }
    let flow: Vec<i128> = (0..net.arc_count()).map(|i| net.cap[2 * i] - res[2 * i]).collect();
    let mut seen = vec![false; n];
    seen[net.source] = true;
    let mut q = VecDeque::from([net.source]);
    while let Some(u) = q.pop_front() {
        for &a in &net.adj[u] {
            let v = net.to[a];
            if res[a] > 0 && !seen[v] {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    let source_side = (0..n).filter(|&v| seen[v]).collect();
    MaxFlowResult { value, flow, source_side, scale: net.scale }
}

fn augment(net: &FlowNetwork, res: &mut [i128], level: &[usize], iter: &mut [usize], u: usize, limit: i128) -> i128 {
    if u == net.sink {
        return limit;
    }
    while iter[u] < net.adj[u].len() {
        let a = net.adj[u][iter[u]];
        let v = net.to[a];
        if res[a] > 0 && level[v] == level[u] + 1 {
            let d = augment(net, res, level, iter, v, limit.min(res[a]));
            if d > 0 {
                res[a] -= d;
                res[a ^ 1] += d;
                return d;
            }
        }
        iter[u] += 1;
    }
    0
}

pub fn in_node(v: usize) -> usize {
    2 * v
}

pub fn out_node(v: usize) -> usize {
    2 * v + 1
}

/// Vertex splitting: node `2v` is the in-copy, `2v + 1` the out-copy, joined
/// by an arc of capacity `caps[v]`. Each edge `{u, v}` becomes arcs
/// `out(u) → in(v)` and `out(v) → in(u)`. Their capacity is `edge_cap`, or
/// when `None`, more than all vertex capacities combined, so that only
/// vertices can be cut. Source and sink are left to the caller.
pub fn vertex_capacitated(g: &Graph, caps: &[Rational], edge_cap: Option<Rational>) -> NetworkBuilder {
    assert_eq!(caps.len(), g.n());
    assert!(caps.iter().all(|c| *c > Rational::zero()), "vertex capacities must be positive");
    let big: Rational = edge_cap.unwrap_or_else(|| caps.iter().sum::<Rational>() + Rational::from_integer(1));
    let mut b = NetworkBuilder::new(2 * g.n(), 0, 0);
    for v in 0..g.n() {
        b.set_vertex(in_node(v), v);
        b.set_vertex(out_node(v), v);
        b.add_arc(in_node(v), out_node(v), caps[v]);
    }
    for (u, v, _) in g.edges() {
        b.add_arc(out_node(u), in_node(v), big);
        b.add_arc(out_node(v), in_node(u), big);
    }
    b
}

/// A flow path between two matched terminals, as graph vertices, carrying
/// `units` (at the network's scale).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutedPath {
    pub vertices: Vec<usize>,
    pub units: i128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchedPair {
    pub a: usize,
    pub b: usize,
    /// Amount matched between `a` and `b` at the matching's scale.
    pub units: i128,
    pub paths: Vec<RoutedPath>,
}

/// A (possibly fractional) matching: each pair carries `units / scale`.
/// With `scale = 1` it is an ordinary matching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub scale: i128,
    pub pairs: Vec<MatchedPair>,
}

impl Matching {
    pub fn empty() -> Matching {
        Matching { scale: 1, pairs: Vec::new() }
    }

    pub fn is_integral(&self) -> bool {
        self.pairs.iter().all(|p| p.units == self.scale)
    }

    /// Total matched amount at each vertex, at scale.
    pub fn coverage(&self) -> BTreeMap<usize, i128> {
        let mut cov = BTreeMap::new();
        for p in &self.pairs {
            *cov.entry(p.a).or_insert(0) += p.units;
            *cov.entry(p.b).or_insert(0) += p.units;
        }
        cov
    }

    /// Perfect on `(x, y)` up to one unit of imbalance: every vertex of the
    /// smaller side is fully matched, nothing is over-matched, and the pairs
    /// only join `x` to `y`.
    pub fn is_perfect_on(&self, x: &[usize], y: &[usize]) -> bool {
        let cov = self.coverage();
        let in_x = |v: usize| x.binary_search(&v).is_ok();
        let in_y = |v: usize| y.binary_search(&v).is_ok();
        if !self.pairs.iter().all(|p| in_x(p.a) && in_y(p.b) && p.units > 0) {
            return false;
        }
        let full = |side: &[usize]| side.iter().all(|v| cov.get(v).copied().unwrap_or(0) == self.scale);
        let bounded = |side: &[usize]| side.iter().all(|v| cov.get(v).copied().unwrap_or(0) <= self.scale);
        let total: i128 = self.pairs.iter().map(|p| p.units).sum();
        let need = x.len().min(y.len()) as i128 * self.scale;
        x.len().abs_diff(y.len()) <= 1
            && bounded(x)
            && bounded(y)
            && total == need
            && if x.len() <= y.len() { full(x) } else { full(y) }
    }

    /// Every path starts at `a`, ends at `b`, follows edges of `g`, and the
    /// units of each pair equal the sum over its paths.
    pub fn paths_well_formed(&self, g: &Graph) -> bool {
        self.pairs.iter().all(|p| {
            p.paths.iter().map(|r| r.units).sum::<i128>() == p.units
                && p.paths.iter().all(|r| {
                    r.units > 0
                        && r.vertices.first() == Some(&p.a)
                        && r.vertices.last() == Some(&p.b)
                        && r.vertices.windows(2).all(|w| g.multiplicity(w[0], w[1]) > 0)
                })
        })
    }

    pub fn routes(&self) -> Vec<(Vec<usize>, Rational)> {
        self.pairs
            .iter()
            .flat_map(|p| p.paths.iter().map(|r| (r.vertices.clone(), Rational::new(r.units, self.scale))))
            .collect()
    }
}

/// Decomposes the flow into source–sink paths (after cancelling cycles) and
/// groups them by their first and last graph vertex.
///
/// `p1` are the graph vertices fed by the source and `p2` those draining to
/// the sink. Errors unless the flow saturates the smaller side.
pub fn extract_matching(net: &FlowNetwork, result: &MaxFlowResult, p1: &[usize], p2: &[usize]) -> Result<Matching> {
    let need = p1.len().min(p2.len()) as i128 * net.scale;
    if result.value != need {
        return Err(Error::NotAMatching(format!("flow {} at scale {} but {} required", result.value, net.scale, need)));
    }
    let mut out_arcs: Vec<Vec<usize>> = vec![Vec::new(); net.nodes];
    for i in 0..net.arc_count() {
        let (u, _, _) = net.arc(i);
        out_arcs[u].push(i);
    }
    let mut flow = result.flow.clone();
    let mut by_pair: BTreeMap<(usize, usize), Vec<RoutedPath>> = BTreeMap::new();
    let mut remaining = result.value;
    while remaining > 0 {
        // Walk from the source along positive-flow arcs; a repeated node means
        // a cycle, which is cancelled before restarting.
        let mut walk_nodes = vec![net.source];
        let mut walk_arcs: Vec<usize> = Vec::new();
        let mut pos = vec![usize::MAX; net.nodes];
        pos[net.source] = 0;
        let mut u = net.source;
        let mut cycle = false;
        while u != net.sink {
            let a = *out_arcs[u]
                .iter()
                .find(|&&a| flow[a] > 0)
                .ok_or_else(|| Error::NotAMatching(format!("flow stuck at node {u}")))?;
            let v = net.arc(a).1;
            walk_arcs.push(a);
            if pos[v] != usize::MAX {
                let start = pos[v];
                let arcs = &walk_arcs[start..];
                let d = arcs.iter().map(|&a| flow[a]).min().unwrap();
                for &a in arcs {
                    flow[a] -= d;
                }
                cycle = true;
                break;
            }
            pos[v] = walk_nodes.len();
            walk_nodes.push(v);
            u = v;
        }
        if cycle {
            continue;
        }
        let d = walk_arcs.iter().map(|&a| flow[a]).min().unwrap();
        for &a in &walk_arcs {
            flow[a] -= d;
        }
        remaining -= d;
        let mut verts: Vec<usize> = Vec::new();
        for &node in &walk_nodes {
            if let Some(v) = net.vertex_of(node) {
                if verts.last() != Some(&v) {
                    verts.push(v);
                }
            }
        }
        let (a, b) = (*verts.first().unwrap(), *verts.last().unwrap());
        by_pair.entry((a, b)).or_default().push(RoutedPath { vertices: verts, units: d });
    }
    let mut pairs = Vec::new();
    for ((a, b), mut paths) in by_pair {
        paths.sort_by(|x, y| x.vertices.cmp(&y.vertices));
        let mut merged: Vec<RoutedPath> = Vec::new();
        for p in paths {
            match merged.last_mut() {
                Some(last) if last.vertices == p.vertices => last.units += p.units,
                _ => merged.push(p),
            }
        }
        let units = merged.iter().map(|p| p.units).sum();
        pairs.push(MatchedPair { a, b, units, paths: merged });
    }
    let m = Matching { scale: net.scale, pairs };
    let (mut x, mut y) = (p1.to_vec(), p2.to_vec());
    x.sort_unstable();
    y.sort_unstable();
    if !m.is_perfect_on(&x, &y) {
        return Err(Error::NotAMatching("decomposition does not cover the pair".into()));
    }
    Ok(m)
}

/// Load on every edge `(u, v)` with `u < v` induced by explicit routes.
pub fn route_loads(routes: &[(Vec<usize>, Rational)]) -> BTreeMap<(usize, usize), Rational> {
    let mut load: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    for (path, amount) in routes {
        for w in path.windows(2) {
            let key = (w[0].min(w[1]), w[0].max(w[1]));
            *load.entry(key).or_insert_with(Rational::zero) += *amount;
        }
    }
    load
}

/// Exact check that explicit routes use only edges of `g` and load each edge
/// by at most `congestion` times its multiplicity.
pub fn routes_within_congestion(g: &Graph, routes: &[(Vec<usize>, Rational)], congestion: &Rational) -> bool {
    route_loads(routes).into_iter().all(|((u, v), load)| {
        let m = g.multiplicity(u, v);
        m > 0 && load <= *congestion * Rational::from_integer(m as i128)
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingCheck {
    pub feasible: bool,
    /// When infeasible, the edges of a cut that is too small for the demand.
    pub bottleneck: Vec<(usize, usize)>,
}

/// Single-commodity check for a demand set that forms a bipartite pairing:
/// all demand sources are joined to a super-source, all demand targets to a
/// super-sink, and each edge gets capacity `congestion` per copy.
pub fn verify_embedding(g: &Graph, demands: &[(usize, usize, Rational)], congestion: &Rational) -> EmbeddingCheck {
    let n = g.n();
    let (s, t) = (n, n + 1);
    let mut b = NetworkBuilder::new(n + 2, s, t);
    for v in 0..n {
        b.set_vertex(v, v);
    }
    let mut out = vec![Rational::zero(); n];
    let mut inn = vec![Rational::zero(); n];
    let mut total = Rational::zero();
    for (u, v, d) in demands {
        out[*u] += *d;
        inn[*v] += *d;
        total += *d;
    }
    for v in 0..n {
        if !out[v].is_zero() {
            b.add_arc(s, v, out[v]);
        }
        if !inn[v].is_zero() {
            b.add_arc(v, t, inn[v]);
        }
    }
    for (u, v, m) in g.edges() {
        b.add_undirected(u, v, *congestion * Rational::from_integer(m as i128));
    }
    let net = b.finish();
    let res = max_flow_min_cut(&net);
    let feasible = res.value_rational() == total;
    let bottleneck = if feasible {
        Vec::new()
    } else {
        let side = res.in_source_side(net.nodes);
        g.edges().into_iter().filter(|&(u, v, _)| side[u] != side[v]).map(|(u, v, _)| (u, v)).collect()
    };
    EmbeddingCheck { feasible, bottleneck }
}

/// Congestion of a union of separately embedded graphs.
pub fn compose_congestion(parts: &[Rational]) -> Rational {
    parts.iter().sum()
}
