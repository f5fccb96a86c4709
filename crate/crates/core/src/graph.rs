//! Undirected multigraphs and exact cut metrics.

use crate::error::{Error, Result};
use crate::rational::{Rational, Sparsity};
use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};

/// Undirected multigraph on vertices `0..n`.
///
/// Parallel edges are stored as multiplicities. Self-loops are kept apart in
/// `loops`: they never cross a cut but each adds 2 to its vertex's volume.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<BTreeMap<usize, u64>>,
    loops: Vec<u64>,
    weights: Option<Vec<u64>>,
    terminals: Option<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Graph {
        Graph { n, adj: vec![BTreeMap::new(); n], loops: vec![0; n], weights: None, terminals: None }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Graph {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of non-loop edges counted with multiplicity.
    pub fn m(&self) -> u64 {
        self.adj.iter().map(|a| a.values().sum::<u64>()).sum::<u64>() / 2
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        self.add_edge_mult(u, v, 1);
    }

    /// Adds `mult` parallel copies of `{u, v}`. A loop (`u == v`) goes to the
    /// loop counter.
    pub fn add_edge_mult(&mut self, u: usize, v: usize, mult: u64) {
        assert!(u < self.n && v < self.n, "edge ({u}, {v}) out of range for n = {}", self.n);
        if mult == 0 {
            return;
        }
        if u == v {
            self.loops[u] += mult;
            return;
        }
        *self.adj[u].entry(v).or_insert(0) += mult;
        *self.adj[v].entry(u).or_insert(0) += mult;
    }

    pub fn multiplicity(&self, u: usize, v: usize) -> u64 {
        self.adj[u].get(&v).copied().unwrap_or(0)
    }

    pub fn loops(&self, v: usize) -> u64 {
        self.loops[v]
    }

    /// Neighbours of `v` with edge multiplicities, in increasing id order.
    pub fn adjacent(&self, v: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.adj[v].iter().map(|(&u, &m)| (u, m))
    }

    /// Degree without loops.
    pub fn degree(&self, v: usize) -> u64 {
        self.adj[v].values().sum()
    }

    /// Degree plus two per loop.
    pub fn volume_of(&self, v: usize) -> u64 {
        self.degree(v) + 2 * self.loops[v]
    }

    pub fn max_degree(&self) -> u64 {
        (0..self.n).map(|v| self.volume_of(v)).max().unwrap_or(0)
    }

    /// Distinct unordered pairs `(u, v, mult)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for (&v, &m) in &self.adj[u] {
                if u < v {
                    out.push((u, v, m));
                }
            }
        }
        out
    }

    pub fn weights(&self) -> Option<&[u64]> {
        self.weights.as_deref()
    }

    pub fn set_weights(&mut self, w: Vec<u64>) {
        assert_eq!(w.len(), self.n);
        self.weights = Some(w);
    }

    pub fn set_weight(&mut self, v: usize, w: u64) {
        let n = self.n;
        self.weights.get_or_insert_with(|| vec![0; n])[v] = w;
    }

    pub fn terminals(&self) -> Option<&[usize]> {
        self.terminals.as_deref()
    }

    pub fn set_terminals(&mut self, mut t: Vec<usize>) {
        t.sort_unstable();
        t.dedup();
        assert!(t.iter().all(|&v| v < self.n));
        self.terminals = Some(t);
    }

    pub fn mask(&self, s: &[usize]) -> Result<Vec<bool>> {
        vertex_mask(self.n, s)
    }

    fn cut_mask(&self, s: &[usize]) -> Result<Vec<bool>> {
        let mask = self.mask(s)?;
        let k = mask.iter().filter(|&&b| b).count();
        if k == 0 || k == self.n {
            return Err(Error::InvalidCut(format!("side has {k} of {} vertices", self.n)));
        }
        Ok(mask)
    }

    /// Boundary size for a membership mask, no validation.
    pub fn boundary_of_mask(&self, mask: &[bool]) -> u64 {
        let mut total = 0;
        for u in 0..self.n {
            if mask[u] {
                for (&v, &m) in &self.adj[u] {
                    if !mask[v] {
                        total += m;
                    }
                }
            }
        }
        total
    }

    /// Every edge with exactly one endpoint in `s`, as `(inside, outside, mult)`
    /// sorted by endpoints.
    pub fn edge_boundary(&self, s: &[usize]) -> Result<Vec<(usize, usize, u64)>> {
        let mask = self.cut_mask(s)?;
        let mut out = Vec::new();
        for u in 0..self.n {
            for (&v, &m) in &self.adj[u] {
                if mask[u] != mask[v] && u < v {
                    out.push((u, v, m));
                }
            }
        }
        Ok(out)
    }

    pub fn boundary_size(&self, s: &[usize]) -> Result<u64> {
        Ok(self.boundary_of_mask(&self.cut_mask(s)?))
    }

    pub fn sparsity(&self, s: &[usize]) -> Result<Rational> {
        let mask = self.cut_mask(s)?;
        let k = mask.iter().filter(|&&b| b).count();
        let d = self.boundary_of_mask(&mask);
        Ok(Rational::new(d as i128, k.min(self.n - k) as i128))
    }

    pub fn volume(&self, s: &[usize]) -> u64 {
        s.iter().map(|&v| self.volume_of(v)).sum()
    }

    pub fn conductance(&self, s: &[usize]) -> Result<Rational> {
        let mask = self.cut_mask(s)?;
        let vin: u64 = (0..self.n).filter(|&v| mask[v]).map(|v| self.volume_of(v)).sum();
        let vout: u64 = (0..self.n).filter(|&v| !mask[v]).map(|v| self.volume_of(v)).sum();
        let den = vin.min(vout);
        if den == 0 {
            return Err(Error::UndefinedConductance);
        }
        Ok(Rational::new(self.boundary_of_mask(&mask) as i128, den as i128))
    }

    pub fn terminal_sparsity(&self, t: &[usize], s: &[usize]) -> Result<Sparsity> {
        let mask = self.cut_mask(s)?;
        let tmask = self.mask(t)?;
        let tin = (0..self.n).filter(|&v| tmask[v] && mask[v]).count() as u64;
        let tout = (0..self.n).filter(|&v| tmask[v] && !mask[v]).count() as u64;
        Ok(Sparsity::ratio(self.boundary_of_mask(&mask), tin.min(tout)))
    }

    /// Vertices outside `l` adjacent to some vertex of `l`.
    pub fn neighbors(&self, l: &[usize]) -> Result<Vec<usize>> {
        let mask = self.mask(l)?;
        Ok(self.neighbors_of_mask(&mask))
    }

    pub fn neighbors_of_mask(&self, mask: &[bool]) -> Vec<usize> {
        let mut nb = vec![false; self.n];
        for u in 0..self.n {
            if mask[u] {
                for &v in self.adj[u].keys() {
                    if !mask[v] {
                        nb[v] = true;
                    }
                }
            }
        }
        (0..self.n).filter(|&v| nb[v]).collect()
    }

    /// |N(L)| / |L ∪ N(L)|, the vertex sparsity of a set.
    pub fn set_vertex_sparsity(&self, l: &[usize]) -> Result<Rational> {
        let mask = self.mask(l)?;
        let k = mask.iter().filter(|&&b| b).count();
        if k == 0 {
            return Err(Error::InvalidCut("empty set".into()));
        }
        let nb = self.neighbors_of_mask(&mask).len();
        Ok(Rational::new(nb as i128, (k + nb) as i128))
    }

    /// Subgraph induced on `s` (relabelled in the order of sorted `s`) and
    /// the map from new ids back to old ones. Loops inside `s` are kept.
    pub fn induced_subgraph(&self, s: &[usize]) -> Result<(Graph, Vec<usize>)> {
        let mask = self.mask(s)?;
        let back: Vec<usize> = (0..self.n).filter(|&v| mask[v]).collect();
        if back.is_empty() {
            return Err(Error::InvalidCut("empty vertex set".into()));
        }
        let mut fwd = vec![usize::MAX; self.n];
        for (i, &v) in back.iter().enumerate() {
            fwd[v] = i;
        }
        let mut h = Graph::new(back.len());
        for (i, &u) in back.iter().enumerate() {
            h.loops[i] = self.loops[u];
            for (&v, &m) in &self.adj[u] {
                if mask[v] && u < v {
                    h.add_edge_mult(i, fwd[v], m);
                }
            }
        }
        if let Some(w) = &self.weights {
            h.weights = Some(back.iter().map(|&v| w[v]).collect());
        }
        if let Some(t) = &self.terminals {
            h.terminals = Some(t.iter().filter(|&&v| mask[v]).map(|&v| fwd[v]).collect());
        }
        Ok((h, back))
    }

    /// Connected components of the graph with vertices in `removed` deleted.
    /// Components are sorted internally and listed by smallest vertex.
    pub fn components_without(&self, removed: &[bool]) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if removed[start] || comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            comp[start] = id;
            queue.push_back(start);
            let mut members = Vec::new();
            while let Some(u) = queue.pop_front() {
                members.push(u);
                for &v in self.adj[u].keys() {
                    if !removed[v] && comp[v] == usize::MAX {
                        comp[v] = id;
                        queue.push_back(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        self.components_without(&vec![false; self.n])
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.components().len() == 1
    }

    pub fn vertex_sparsity(&self, c: &VertexCut) -> Rational {
        c.sparsity
    }
}

/// Membership mask for `s`, rejecting out-of-range and repeated ids.
pub fn vertex_mask(n: usize, s: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &v in s {
        if v >= n {
            return Err(Error::InvalidCut(format!("vertex {v} out of range for n = {n}")));
        }
        if mask[v] {
            return Err(Error::InvalidCut(format!("vertex {v} repeated")));
        }
        mask[v] = true;
    }
    Ok(mask)
}

pub fn complement(n: usize, s: &[usize]) -> Vec<usize> {
    let mut mask = vec![false; n];
    for &v in s {
        mask[v] = true;
    }
    (0..n).filter(|&v| !mask[v]).collect()
}

pub fn sorted(mut s: Vec<usize>) -> Vec<usize> {
    s.sort_unstable();
    s.dedup();
    s
}

/// An edge cut `(S, V ∖ S)` with its metrics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeCut {
    pub side: Vec<usize>,
    pub boundary_size: u64,
    #[serde(with = "crate::rational::serde_rational")]
    pub sparsity: Rational,
    pub terminal_sparsity: Option<Sparsity>,
}

impl EdgeCut {
    /// Builds the cut for `side`, using `g`'s terminal set if present.
    pub fn new(g: &Graph, side: &[usize]) -> Result<EdgeCut> {
        let side = sorted(side.to_vec());
        let boundary_size = g.boundary_size(&side)?;
        let sparsity = g.sparsity(&side)?;
        let terminal_sparsity = match g.terminals() {
            Some(t) if !t.is_empty() => Some(g.terminal_sparsity(t, &side)?),
            _ => None,
        };
        Ok(EdgeCut { side, boundary_size, sparsity, terminal_sparsity })
    }

    pub fn with_terminals(g: &Graph, t: &[usize], side: &[usize]) -> Result<EdgeCut> {
        let mut cut = EdgeCut::new(g, side)?;
        cut.terminal_sparsity = Some(g.terminal_sparsity(t, &cut.side)?);
        Ok(cut)
    }

    /// Recomputes every field from `g` and compares.
    pub fn verify(&self, g: &Graph) -> bool {
        g.boundary_size(&self.side).ok() == Some(self.boundary_size)
            && g.sparsity(&self.side).ok() == Some(self.sparsity)
    }
}

/// A vertex cut: a partition `(L, C, R)` with no `L`–`R` edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexCut {
    pub left: Vec<usize>,
    pub separator: Vec<usize>,
    pub right: Vec<usize>,
    #[serde(with = "crate::rational::serde_rational")]
    pub sparsity: Rational,
    pub terminal_sparsity: Option<Sparsity>,
}

impl VertexCut {
    pub fn new(g: &Graph, left: &[usize], separator: &[usize], right: &[usize]) -> Result<VertexCut> {
        let n = g.n();
        let (left, separator, right) = (sorted(left.to_vec()), sorted(separator.to_vec()), sorted(right.to_vec()));
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidPartition("L and R must be nonempty".into()));
        }
        let mut side = vec![0u8; n];
        for (tag, part) in [(1u8, &left), (2, &separator), (3, &right)] {
            for &v in part.iter() {
                if v >= n {
                    return Err(Error::InvalidPartition(format!("vertex {v} out of range")));
                }
                if side[v] != 0 {
                    return Err(Error::InvalidPartition(format!("vertex {v} in two parts")));
                }
                side[v] = tag;
            }
        }
        if let Some(v) = side.iter().position(|&s| s == 0) {
            return Err(Error::InvalidPartition(format!("vertex {v} in no part")));
        }
        for &u in &left {
            for (v, _) in g.adjacent(u) {
                if side[v] == 3 {
                    return Err(Error::InvalidPartition(format!("edge ({u}, {v}) joins L and R")));
                }
            }
        }
        let c = separator.len();
        let den = (left.len() + c).min(right.len() + c);
        let sparsity = Rational::new(c as i128, den as i128);
        let terminal_sparsity = match g.terminals() {
            Some(t) if !t.is_empty() => Some(vertex_terminal_ratio(&side, t, c)),
            _ => None,
        };
        Ok(VertexCut { left, separator, right, sparsity, terminal_sparsity })
    }

    pub fn terminal_sparsity_for(&self, n: usize, t: &[usize]) -> Sparsity {
        let mut side = vec![0u8; n];
        for &v in &self.left {
            side[v] = 1;
        }
        for &v in &self.separator {
            side[v] = 2;
        }
        for &v in &self.right {
            side[v] = 3;
        }
        vertex_terminal_ratio(&side, t, self.separator.len())
    }

    pub fn verify(&self, g: &Graph) -> bool {
        match VertexCut::new(g, &self.left, &self.separator, &self.right) {
            Ok(c) => c.sparsity == self.sparsity,
            Err(_) => false,
        }
    }
}

fn vertex_terminal_ratio(side: &[u8], t: &[usize], c: usize) -> Sparsity {
    let lc = t.iter().filter(|&&v| side[v] == 1 || side[v] == 2).count();
    let rc = t.iter().filter(|&&v| side[v] == 3 || side[v] == 2).count();
    Sparsity::ratio(c as u64, lc.min(rc) as u64)
}

/// Vertex terminal sparsity of `(L, C, R)` with an explicit terminal set.
pub fn vertex_terminal_sparsity(g: &Graph, t: &[usize], c: &VertexCut) -> Sparsity {
    c.terminal_sparsity_for(g.n(), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::generators;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn path(n: usize) -> Graph {
        generators::path(n)
    }

    #[test]
    fn boundary_examples() {
        let p4 = path(4);
        assert_eq!(p4.edge_boundary(&[0, 1]).unwrap(), vec![(1, 2, 1)]);
        let k4 = generators::complete(4);
        assert_eq!(k4.boundary_size(&[0]).unwrap(), 3);
        let db = generators::dumbbell(5, 5);
        assert_eq!(db.boundary_size(&[0, 1, 2, 3, 4]).unwrap(), 1);
        assert!(matches!(p4.edge_boundary(&[]), Err(Error::InvalidCut(_))));
        assert!(matches!(p4.edge_boundary(&[0, 1, 2, 3]), Err(Error::InvalidCut(_))));
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(path(4).sparsity(&[0, 1]).unwrap(), rat(1, 2));
        assert_eq!(generators::complete(4).sparsity(&[0]).unwrap(), int(3));
        assert_eq!(generators::dumbbell(5, 5).sparsity(&[0, 1, 2, 3, 4]).unwrap(), rat(1, 5));
    }

    #[test]
    fn conductance_examples() {
        assert_eq!(generators::complete(4).conductance(&[0]).unwrap(), int(1));
        assert_eq!(generators::dumbbell(5, 5).conductance(&[0, 1, 2, 3, 4]).unwrap(), rat(1, 21));
        assert_eq!(generators::cycle(4).conductance(&[0, 1]).unwrap(), rat(1, 2));
        let mut g = Graph::new(3);
        g.add_edge(0, 1);
        assert_eq!(g.conductance(&[2]), Err(Error::UndefinedConductance));
    }

    #[test]
    fn loops_add_volume_not_boundary() {
        let mut g = Graph::from_edges(2, &[(0, 1)]);
        g.add_edge(0, 0);
        assert_eq!(g.boundary_size(&[0]).unwrap(), 1);
        assert_eq!(g.volume_of(0), 3);
        assert_eq!(g.conductance(&[0]).unwrap(), int(1));
        assert_eq!(g.m(), 1);
    }

    #[test]
    fn terminal_sparsity_examples() {
        let db = generators::dumbbell(5, 5);
        let left: Vec<usize> = (0..5).collect();
        assert_eq!(db.terminal_sparsity(&[0, 1, 5, 6], &left).unwrap(), Sparsity::Finite(rat(1, 2)));
        assert_eq!(db.terminal_sparsity(&[6, 7], &left).unwrap(), Sparsity::Infinite);
    }

    #[test]
    fn vertex_cut_examples() {
        let star = generators::star(4);
        let c = VertexCut::new(&star, &[1], &[0], &[2, 3, 4]).unwrap();
        assert_eq!(c.sparsity, rat(1, 2));
        assert_eq!(vertex_terminal_sparsity(&star, &[1, 2, 3, 4], &c), Sparsity::Finite(int(1)));
        let p5 = path(5);
        let c = VertexCut::new(&p5, &[0, 1], &[2], &[3, 4]).unwrap();
        assert_eq!(c.sparsity, rat(1, 3));
        assert_eq!(vertex_terminal_sparsity(&p5, &[0, 4], &c), Sparsity::Finite(int(1)));
        let grid = generators::grid(3, 3);
        let c = VertexCut::new(&grid, &[0, 3, 6], &[1, 4, 7], &[2, 5, 8]).unwrap();
        assert_eq!(c.sparsity, rat(1, 2));
        assert!(VertexCut::new(&p5, &[0, 1], &[], &[2, 3, 4]).is_err());
        assert!(VertexCut::new(&p5, &[], &[2], &[0, 1, 3, 4]).is_err());
    }

    #[test]
    fn neighbor_examples() {
        assert_eq!(path(4).neighbors(&[0]).unwrap(), vec![1]);
        assert_eq!(generators::complete(4).neighbors(&[0, 1]).unwrap(), vec![2, 3]);
        assert!(path(4).neighbors(&[]).unwrap().is_empty());
        assert_eq!(path(5).set_vertex_sparsity(&[0, 1]).unwrap(), rat(1, 3));
    }

    #[test]
    fn induced_subgraph_examples() {
        let (h, back) = generators::complete(4).induced_subgraph(&[1, 3]).unwrap();
        assert_eq!(h.edges(), vec![(0, 1, 1)]);
        assert_eq!(back, vec![1, 3]);
        let db = generators::dumbbell(5, 5);
        let (h, _) = db.induced_subgraph(&[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(h, generators::complete(5));
        let (h, _) = db.induced_subgraph(&(0..10).collect::<Vec<_>>()).unwrap();
        assert_eq!(h, db);
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2usize..9).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n, 1u64..3), 0..20).prop_map(move |es| {
                let mut g = Graph::new(n);
                for (u, v, m) in es {
                    if u != v {
                        g.add_edge_mult(u, v, m);
                    }
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn sparsity_symmetric_and_matches_terminal_version(g in arb_graph(), bits in any::<u32>()) {
            let n = g.n();
            let s: Vec<usize> = (0..n).filter(|&v| bits >> v & 1 == 1).collect();
            prop_assume!(!s.is_empty() && s.len() < n);
            let c = complement(n, &s);
            prop_assert_eq!(g.sparsity(&s).unwrap(), g.sparsity(&c).unwrap());
            let all: Vec<usize> = (0..n).collect();
            prop_assert_eq!(g.terminal_sparsity(&all, &s).unwrap(), Sparsity::Finite(g.sparsity(&s).unwrap()));
            let mut b1 = g.edge_boundary(&s).unwrap();
            let mut b2 = g.edge_boundary(&c).unwrap();
            b1.sort();
            b2.sort();
            prop_assert_eq!(b1, b2);
        }

        #[test]
        fn vertex_cut_rejects_lr_edges(g in arb_graph(), labels in proptest::collection::vec(0u8..3, 9)) {
            let n = g.n();
            let part = |t: u8| (0..n).filter(|&v| labels[v] == t).collect::<Vec<_>>();
            let (l, c, r) = (part(0), part(1), part(2));
            let crossing = l.iter().any(|&u| r.iter().any(|&v| g.multiplicity(u, v) > 0));
            let res = VertexCut::new(&g, &l, &c, &r);
            if crossing || l.is_empty() || r.is_empty() {
                prop_assert!(res.is_err());
            } else {
                prop_assert!(res.is_ok());
            }
        }
    }

    #[test]
    fn regular_graph_conductance_is_scaled_sparsity() {
        let g = generators::complete(6);
        for bits in 1u32..63 {
            let s: Vec<usize> = (0..6).filter(|&v| bits >> v & 1 == 1).collect();
            assert_eq!(g.conductance(&s).unwrap(), g.sparsity(&s).unwrap() / int(5));
        }
    }
}
