//! Steiner decompositions and sample sets: small terminal sets that
//! represent every sparse component proportionally.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::params::ParamSet;
use crate::rational::{clamped_ln, floor_u64, fmt_rational, int, to_f64, Rational};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::VecDeque;

/// Vertex bags `V_0..V_l` with edge parts `E_0..E_l` and the leftover edges.
/// Each edge part holds single copies of spanning-tree edges; every other
/// edge copy is in `leftover` (with multiplicity).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteinerDecomposition {
    #[serde(with = "crate::rational::serde_rational")]
    pub t: Rational,
    pub bags: Vec<Vec<usize>>,
    pub edge_parts: Vec<Vec<(usize, usize)>>,
    pub leftover: Vec<(usize, usize, u64)>,
}

/// Splits a connected graph into bags of measure in `[t, 2t]` (bag 0 may be
/// lighter), each spanned by its own tree edges plus at most one outside
/// vertex. Measure defaults to one per vertex.
pub fn steiner_decomposition(g: &Graph, t: &Rational, mu: Option<&[u64]>) -> Result<SteinerDecomposition> {
    let n = g.n();
    if n == 0 {
        return Err(Error::Precondition("empty graph".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if *t < int(1) {
        return Err(Error::InvalidParameter(format!("t = {} must be at least 1", fmt_rational(t))));
    }
    let unit = vec![1u64; n];
    let mu = mu.unwrap_or(&unit);
    if mu.len() != n {
        return Err(Error::InvalidParameter("measure length differs from n".into()));
    }
    if let Some(v) = (0..n).find(|&v| int(mu[v] as i128) > *t) {
        return Err(Error::Precondition(format!("measure of vertex {v} exceeds t")));
    }

    // BFS tree from vertex 0.
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for (v, _) in g.adjacent(u) {
            if !seen[v] {
                seen[v] = true;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &v in &order[1..] {
        children[parent[v]].push(v);
    }

    // Leftover of a subtree: (vertices, tree edges, measure), measure < t.
    type Part = (Vec<usize>, Vec<(usize, usize)>, Rational);
    let mut left: Vec<Option<Part>> = vec![None; n];
    let mut bags: Vec<(Vec<usize>, Vec<(usize, usize)>)> = Vec::new();
    let mut root_bag = None;
    let edge = |a: usize, b: usize| (a.min(b), a.max(b));

    for &v in order.iter().rev() {
        let mut group: Part = (Vec::new(), Vec::new(), int(0));
        for &c in &children[v] {
            let Some((cv, ce, cm)) = left[c].take() else { continue };
            group.0.extend(cv);
            group.1.extend(ce);
            group.1.push(edge(v, c));
            group.2 += cm;
            if group.2 >= *t {
                let (gv, ge, _) = std::mem::replace(&mut group, (Vec::new(), Vec::new(), int(0)));
                bags.push((gv, ge));
            }
        }
        group.0.push(v);
        group.2 += int(mu[v] as i128);
        if v == 0 {
            root_bag = Some((group.0, group.1));
        } else if group.2 >= *t {
            bags.push((group.0, group.1));
        } else {
            left[v] = Some(group);
        }
    }

    let mut all = vec![root_bag.expect("root processed last")];
    all.extend(bags);
    let mut in_part = std::collections::BTreeSet::new();
    let mut out_bags = Vec::with_capacity(all.len());
    let mut parts = Vec::with_capacity(all.len());
    for (mut bv, mut be) in all {
        bv.sort_unstable();
        be.sort_unstable();
        in_part.extend(be.iter().copied());
        out_bags.push(bv);
        parts.push(be);
    }
    let leftover = g
        .edges()
        .into_iter()
        .filter_map(|(u, v, m)| {
            let m = if in_part.contains(&(u, v)) { m - 1 } else { m };
            (m > 0).then_some((u, v, m))
        })
        .collect();
    Ok(SteinerDecomposition { t: *t, bags: out_bags, edge_parts: parts, leftover })
}

impl SteinerDecomposition {
    /// Lists every broken invariant; empty means valid.
    pub fn violations(&self, g: &Graph, mu: Option<&[u64]>) -> Vec<String> {
        let n = g.n();
        let mut out = Vec::new();
        let unit = vec![1u64; n];
        let mu = mu.unwrap_or(&unit);
        let mut owner = vec![usize::MAX; n];
        for (i, bag) in self.bags.iter().enumerate() {
            for &v in bag {
                if owner[v] != usize::MAX {
                    out.push(format!("vertex {v} in bags {} and {i}", owner[v]));
                }
                owner[v] = i;
            }
        }
        if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
            out.push(format!("vertex {v} in no bag"));
        }
        // Edge partition: part copies plus leftover equal the multigraph.
        let mut count = std::collections::BTreeMap::new();
        for (u, v, m) in &self.leftover {
            *count.entry((*u, *v)).or_insert(0u64) += m;
        }
        for part in &self.edge_parts {
            for &(u, v) in part {
                *count.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        let expected: std::collections::BTreeMap<_, _> = g.edges().into_iter().map(|(u, v, m)| ((u, v), m)).collect();
        if count != expected {
            out.push("edge parts do not partition the edges".into());
        }
        let two_t = self.t * int(2);
        for (i, (bag, part)) in self.bags.iter().zip(&self.edge_parts).enumerate() {
            let m = int(bag.iter().map(|&v| mu[v] as i128).sum());
            if m > two_t {
                out.push(format!("bag {i} measure {} above 2t", fmt_rational(&m)));
            }
            if i > 0 && m < self.t {
                out.push(format!("bag {i} measure {} below t", fmt_rational(&m)));
            }
            let mut verts: Vec<usize> = bag.clone();
            verts.extend(part.iter().flat_map(|&(u, v)| [u, v]));
            verts.sort_unstable();
            verts.dedup();
            let extra = verts.len() - bag.len();
            if extra > 1 {
                out.push(format!("bag {i} spans {extra} outside vertices"));
            }
            let sub = Graph::from_edges(n, part);
            let mask: Vec<bool> = (0..n).map(|v| verts.binary_search(&v).is_err()).collect();
            if sub.components_without(&mask).len() > 1 {
                out.push(format!("bag {i} is not connected by its edge part"));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Edge,
    Weighted,
    Vertex,
    /// Exact: every vertex of the measure's support with its own weight
    /// (unit weights for unweighted sets), so the sample condition holds
    /// with no error.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSet {
    pub terminals: Vec<usize>,
    pub weights: Vec<u64>,
    #[serde(with = "crate::rational::serde_rational")]
    pub eps: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub phi: Rational,
    pub kind: SampleKind,
    /// Relative error the construction guarantees.
    #[serde(with = "crate::rational::serde_rational")]
    pub guarantee: Rational,
    pub fallback_reason: Option<String>,
}

impl SampleSet {
    fn whole(n: usize, eps: &Rational, phi: &Rational, reason: String) -> SampleSet {
        SampleSet {
            terminals: (0..n).collect(),
            weights: vec![1; n],
            eps: *eps,
            phi: *phi,
            kind: SampleKind::Fallback,
            guarantee: int(0),
            fallback_reason: Some(reason),
        }
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// `terminal v w` lines for the graph text format.
    pub fn to_lines(&self) -> String {
        self.terminals.iter().zip(&self.weights).map(|(v, w)| format!("terminal {v} {w}\n")).collect()
    }
}

fn check_params(eps: &Rational, phi: &Rational) -> Result<()> {
    if *eps <= int(0) || *eps >= int(1) || *phi <= int(0) {
        return Err(Error::InvalidParameter("need 0 < eps < 1 and phi > 0".into()));
    }
    Ok(())
}

/// Decomposition scale `eps / (100 phi)`.
pub fn bag_scale(eps: &Rational, phi: &Rational) -> Rational {
    eps / (int(100) * phi)
}

/// Deterministic edge sample set: the lowest-id `⌊|V_i|/(t·eps)⌋` vertices
/// of every bag but the first. Falls back to all vertices when `phi` is not
/// small enough for the bag argument to apply.
pub fn edge_sample_set(g: &Graph, eps: &Rational, phi: &Rational, params: &ParamSet) -> Result<SampleSet> {
    check_params(eps, phi)?;
    let n = g.n();
    let t = bag_scale(eps, phi);
    let limit = eps * eps / params.sample_d;
    if *phi >= limit {
        return Ok(SampleSet::whole(n, eps, phi, format!("phi ≥ eps²/{}", fmt_rational(&params.sample_d))));
    }
    if t > eps * int(n as i128) / int(4) {
        return Ok(SampleSet::whole(n, eps, phi, "t > eps·n/4".into()));
    }
    if t < int(1) {
        return Ok(SampleSet::whole(n, eps, phi, "t < 1".into()));
    }
    let dec = steiner_decomposition(g, &t, None)?;
    let te = t * eps;
    let mut terms = Vec::new();
    for bag in &dec.bags[1..] {
        let quota = (floor_u64(&(int(bag.len() as i128) / te)) as usize).min(bag.len());
        terms.extend_from_slice(&bag[..quota]);
    }
    if terms.is_empty() {
        return Ok(SampleSet::whole(n, eps, phi, "empty terminal set".into()));
    }
    terms.sort_unstable();
    let size = int(terms.len() as i128);
    let hi = int(n as i128) / te;
    let lo = (int(1) - eps * int(2)) * hi;
    assert!(size >= lo && size <= hi, "sample size {} outside [{}, {}]", terms.len(), fmt_rational(&lo), fmt_rational(&hi));
    Ok(SampleSet {
        weights: vec![1; terms.len()],
        terminals: terms,
        eps: *eps,
        phi: *phi,
        kind: SampleKind::Edge,
        guarantee: eps * int(4),
        fallback_reason: None,
    })
}

/// Weighted sample set for a vertex measure. Heavy vertices are kept with
/// weight `⌊mu/(t·eps)⌋`; the rest is decomposed and one representative per
/// bag carries the bag's share. The fallback keeps the support of `mu` with
/// weights `mu`, which is exact.
pub fn weighted_sample_set(g: &Graph, mu: &[u64], eps: &Rational, phi: &Rational, params: &ParamSet) -> Result<SampleSet> {
    check_params(eps, phi)?;
    let n = g.n();
    if mu.len() != n {
        return Err(Error::InvalidParameter("measure length differs from n".into()));
    }
    let total: u64 = mu.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("total measure must be positive".into()));
    }
    let exact = |reason: String| {
        let terminals: Vec<usize> = (0..n).filter(|&v| mu[v] > 0).collect();
        SampleSet {
            weights: terminals.iter().map(|&v| mu[v]).collect(),
            terminals,
            eps: *eps,
            phi: *phi,
            kind: SampleKind::Fallback,
            guarantee: int(0),
            fallback_reason: Some(reason),
        }
    };
    let t = bag_scale(eps, phi);
    if *phi >= eps * eps / params.sample_d {
        return Ok(exact(format!("phi ≥ eps²/{}", fmt_rational(&params.sample_d))));
    }
    if t > eps * int(total as i128) / int(4) {
        return Ok(exact("t > eps·mu(V)/4".into()));
    }
    if t < int(1) {
        return Ok(exact("t < 1".into()));
    }
    let te = t * eps;
    let mut pairs: Vec<(usize, u64)> = Vec::new();
    let mut light = mu.to_vec();
    for v in 0..n {
        if int(mu[v] as i128) > t {
            pairs.push((v, floor_u64(&(int(mu[v] as i128) / te))));
            light[v] = 0;
        }
    }
    let dec = steiner_decomposition(g, &t, Some(&light))?;
    for bag in &dec.bags[1..] {
        let m: u64 = bag.iter().map(|&v| light[v]).sum();
        let w = floor_u64(&(int(m as i128) / te));
        if w > 0 {
            pairs.push((bag[0], w));
        }
    }
    if pairs.is_empty() {
        return Ok(exact("empty terminal set".into()));
    }
    pairs.sort_unstable();
    Ok(SampleSet {
        terminals: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        eps: *eps,
        phi: *phi,
        kind: SampleKind::Weighted,
        guarantee: eps * int(4),
        fallback_reason: None,
    })
}

/// Requested size of a random vertex sample set, capped at `n`.
pub fn vertex_sample_size(n: usize, eps: &Rational, phi: &Rational, c: &Rational) -> usize {
    let (e, p, c) = (to_f64(eps), to_f64(phi), to_f64(c));
    let x = n as f64 * p / (e * e);
    let want = (c * x * clamped_ln(n as f64 * p / (e * e * e))).ceil();
    if !want.is_finite() || want >= n as f64 {
        n
    } else {
        (want as usize).max(1)
    }
}

/// Uniformly random vertex sample set, reproducible from `seed`.
pub fn vertex_sample_set(g: &Graph, eps: &Rational, phi: &Rational, c: &Rational, seed: u64) -> Result<SampleSet> {
    check_params(eps, phi)?;
    let n = g.n();
    let size = vertex_sample_size(n, eps, phi, c);
    if size >= n {
        return Ok(SampleSet::whole(n, eps, phi, "requested size ≥ n".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = sample(&mut rng, n, size).into_vec();
    terms.sort_unstable();
    Ok(SampleSet {
        weights: vec![1; size],
        terminals: terms,
        eps: *eps,
        phi: *phi,
        kind: SampleKind::Vertex,
        guarantee: eps * int(20),
        fallback_reason: None,
    })
}

/// Draws vertex sample sets until one passes against `family`, trying at
/// most 20 seeds derived from `seed`.
pub fn vertex_sample_set_checked(
    g: &Graph,
    eps: &Rational,
    phi: &Rational,
    params: &ParamSet,
    family: &[Vec<usize>],
    seed: u64,
) -> Result<(SampleSet, u32)> {
    for attempt in 0..20u32 {
        let ss = vertex_sample_set(g, eps, phi, &params.vertex_sample_c, seed.wrapping_add(attempt as u64))?;
        if verify_sample_set(g, &ss, family, None, params).is_empty() {
            return Ok((ss, attempt + 1));
        }
    }
    Err(Error::RandomizedFailure("no valid vertex sample set in 20 draws".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleViolation {
    pub set: Vec<usize>,
    /// `K/α(T) · α(W ∩ T)`.
    #[serde(with = "crate::rational::serde_rational")]
    pub estimate: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub measure: Rational,
}

/// Checks the sample condition `|K/α(T)·α(W∩T) − μ(W)| ≤ g·μ(W)` (with `g`
/// the set's guarantee) on every member of `family` that is sparse either in
/// the graph or relative to the terminals. Vertex sets use neighbourhood
/// sparsity; `mu` (unit by default) is the measure for weighted sets.
pub fn verify_sample_set(
    g: &Graph,
    ss: &SampleSet,
    family: &[Vec<usize>],
    mu: Option<&[u64]>,
    params: &ParamSet,
) -> Vec<SampleViolation> {
    let n = g.n();
    let unit = vec![1u64; n];
    let mu = mu.unwrap_or(&unit);
    let k = int(mu.iter().map(|&x| x as i128).sum());
    let mut alpha = vec![0u64; n];
    for (&v, &w) in ss.terminals.iter().zip(&ss.weights) {
        alpha[v] = w;
    }
    let alpha_t = int(ss.total_weight() as i128);
    let scale = k / alpha_t;
    let tsparse = scale * ss.phi / params.sample_factor;
    let vertex = ss.kind == SampleKind::Vertex;
    let mut out = Vec::new();
    for w in family {
        let mut mask = vec![false; n];
        for &v in w {
            mask[v] = true;
        }
        // Numerator and the two denominators of the sparsity tests.
        let (cut, graph_den, term_den) = if vertex {
            let nb = g.neighbors_of_mask(&mask);
            let closed = w.iter().chain(&nb);
            (nb.len() as u64, (w.len() + nb.len()) as u64, closed.map(|&v| alpha[v]).sum::<u64>())
        } else {
            (g.boundary_of_mask(&mask), w.iter().map(|&v| mu[v]).sum(), w.iter().map(|&v| alpha[v]).sum())
        };
        let sparse = |den: u64, bound: &Rational| den > 0 && int(cut as i128) <= bound * int(den as i128);
        if !(sparse(graph_den, &ss.phi) || sparse(term_den, &tsparse)) {
            continue;
        }
        let measure = int(w.iter().map(|&v| mu[v] as i128).sum());
        let estimate = scale * int(w.iter().map(|&v| alpha[v] as i128).sum());
        let err = if estimate > measure { estimate - measure } else { measure - estimate };
        if err > ss.guarantee * measure {
            out.push(SampleViolation { set: w.clone(), estimate, measure });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{enumerate_sparse_family, generators, CutKind};
    use crate::rational::rat;
    use proptest::prelude::*;

    #[test]
    fn path_bags() {
        let g = generators::path(6);
        let d = steiner_decomposition(&g, &int(2), None).unwrap();
        assert!(d.violations(&g, None).is_empty());
        for b in &d.bags[1..] {
            assert!((2..=4).contains(&b.len()));
        }
    }

    #[test]
    fn t_equal_n_gives_one_bag() {
        let g = generators::grid(3, 4);
        let d = steiner_decomposition(&g, &int(12), None).unwrap();
        assert_eq!(d.bags, vec![(0..12).collect::<Vec<_>>()]);
    }

    #[test]
    fn star_bags_share_center() {
        let g = generators::star(9);
        let d = steiner_decomposition(&g, &int(3), None).unwrap();
        assert!(d.violations(&g, None).is_empty());
        assert!(d.bags.len() >= 3);
        let mut through_center = 0;
        for (bag, part) in d.bags.iter().zip(&d.edge_parts) {
            assert!(bag.len() <= 6);
            if !bag.contains(&0) && part.iter().any(|&(u, _)| u == 0) {
                through_center += 1;
            }
        }
        assert!(through_center >= 2);
    }

    #[test]
    fn decomposition_errors() {
        let mut g = Graph::new(4);
        g.add_edge(0, 1);
        assert_eq!(steiner_decomposition(&g, &int(2), None), Err(Error::Disconnected));
        let g = generators::path(4);
        assert!(steiner_decomposition(&g, &int(2), Some(&[3, 1, 1, 1])).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn decomposition_invariants(n in 1usize..64, extra in 0usize..80, seed in any::<u64>(), tn in 1u32..64, td in 1u32..4) {
            let g = generators::random_connected(n, extra, seed);
            let t = rat(tn as i128, td as i128).max(int(1)).min(int(n as i128));
            let d = steiner_decomposition(&g, &t, None).unwrap();
            prop_assert!(d.violations(&g, None).is_empty(), "{:?}", d.violations(&g, None));
            let mu: Vec<u64> = (0..n as u64).map(|v| (v * 7 + seed) % 3).collect();
            let t2 = t.max(int(2));
            let d = steiner_decomposition(&g, &t2, Some(&mu)).unwrap();
            prop_assert!(d.violations(&g, Some(&mu)).is_empty());
        }
    }

    #[test]
    fn large_phi_falls_back() {
        let g = generators::path(30);
        let p = ParamSet::default();
        let ss = edge_sample_set(&g, &rat(1, 100), &rat(1, 20000), &p).unwrap();
        assert_eq!(ss.kind, SampleKind::Fallback);
        assert_eq!(ss.terminals, (0..30).collect::<Vec<_>>());
        // The borderline example: t = 4 but phi is above eps²/200.
        let ss = edge_sample_set(&g, &rat(1, 128), &rat(1, 51200), &p).unwrap();
        assert_eq!(ss.kind, SampleKind::Fallback);
    }

    #[test]
    fn long_path_bags_are_represented() {
        let n = 200_000;
        let g = generators::path(n);
        let (eps, phi) = (rat(1, 128), rat(1, 4_000_000));
        let p = ParamSet::default();
        let ss = edge_sample_set(&g, &eps, &phi, &p).unwrap();
        assert_eq!(ss.kind, SampleKind::Edge);
        let t = bag_scale(&eps, &phi);
        let dec = steiner_decomposition(&g, &t, None).unwrap();
        assert!(dec.violations(&g, None).is_empty());
        let mut is_t = vec![false; n];
        for &v in &ss.terminals {
            is_t[v] = true;
        }
        let scale = int(n as i128) / int(ss.terminals.len() as i128);
        for bag in &dec.bags[1..] {
            let hits = int(bag.iter().filter(|&&v| is_t[v]).count() as i128);
            let size = int(bag.len() as i128);
            let est = scale * hits;
            assert!(est >= size * (int(1) - eps) && est <= size * (int(1) + eps * int(3)));
        }
        // Sparse intervals of the path are estimated within the guarantee.
        let fam: Vec<Vec<usize>> = [(0, 50_000), (1000, 60_000), (150_000, n)]
            .iter()
            .map(|&(a, b)| (a..b).collect())
            .collect();
        assert!(verify_sample_set(&g, &ss, &fam, None, &p).is_empty());
    }

    #[test]
    fn dumbbell_edge_sample_passes() {
        let g = generators::dumbbell(8, 8);
        let p = ParamSet::default();
        let fam = enumerate_sparse_family(&g, None, 3, CutKind::Edge);
        for phi in [rat(1, 8), rat(1, 2), int(1)] {
            let ss = edge_sample_set(&g, &rat(1, 100), &phi, &p).unwrap();
            assert!(verify_sample_set(&g, &ss, &fam, None, &p).is_empty());
        }
    }

    #[test]
    fn whole_set_never_violates() {
        let g = generators::random_connected(12, 10, 3);
        let ss = SampleSet::whole(12, &rat(1, 100), &int(1), "test".into());
        let fam = enumerate_sparse_family(&g, None, 3, CutKind::Edge);
        assert!(verify_sample_set(&g, &ss, &fam, None, &ParamSet::default()).is_empty());
    }

    #[test]
    fn weighted_heavy_vertex() {
        let g = generators::path(5);
        let mu = [0, 0, 1_000_000, 0, 0];
        let (eps, phi) = (rat(1, 128), rat(1, 4_000_000));
        let ss = weighted_sample_set(&g, &mu, &eps, &phi, &ParamSet::default()).unwrap();
        let t = bag_scale(&eps, &phi);
        assert_eq!(ss.terminals, vec![2]);
        assert_eq!(ss.weights, vec![floor_u64(&(int(1_000_000) / (t * eps)))]);
    }

    #[test]
    fn weighted_on_dumbbell() {
        let g = generators::dumbbell(5, 5);
        let mu = [3, 2, 4, 1, 5, 0, 0, 0, 0, 0];
        let p = ParamSet::default();
        let fam = enumerate_sparse_family(&g, None, 3, CutKind::Edge);
        for phi in [rat(1, 10), int(1)] {
            let ss = weighted_sample_set(&g, &mu, &rat(1, 100), &phi, &p).unwrap();
            assert!(verify_sample_set(&g, &ss, &fam, Some(&mu), &p).is_empty());
        }
    }

    #[test]
    fn vertex_sample_reproducible() {
        let g = generators::path(400);
        let (eps, phi, c) = (rat(1, 2), rat(1, 1000), rat(1, 10));
        let a = vertex_sample_set(&g, &eps, &phi, &c, 7).unwrap();
        let b = vertex_sample_set(&g, &eps, &phi, &c, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.kind, SampleKind::Vertex);
        assert!(a.terminals.len() < 400);
        let big = vertex_sample_set(&g, &rat(1, 100), &rat(1, 4), &int(8), 7).unwrap();
        assert_eq!(big.kind, SampleKind::Fallback);
    }

    /// Planted set `U` of a small incidence graph: any terminal set of at most
    /// half the pair vertices misestimates `U` for some `k = 3` clique or
    /// independent set of the removed-pairs graph.
    #[test]
    fn incidence_lower_bound() {
        let n = 6;
        let g = generators::incidence_graph(n);
        let pairs = n * (n - 1) / 2;
        let total = g.n();
        let mut p = ParamSet::default();
        p.sample_factor = int(10);
        let phi = rat(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..300 {
            let size = 1 + trial % (pairs / 2);
            let terms = {
                let mut v = sample(&mut rng, total, size).into_vec();
                v.sort_unstable();
                v
            };
            let in_t: Vec<bool> = (0..total).map(|v| terms.binary_search(&v).is_ok()).collect();
            // Triple whose three pairs are all in T or all outside T.
            let mut planted = None;
            'search: for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        let u = [(a, b), (a, c), (b, c)].map(|(i, j)| generators::incidence_pair_id(n, i, j));
                        let hits = u.iter().filter(|&&x| in_t[x]).count();
                        if hits == 0 || hits == 3 {
                            planted = Some(u.to_vec());
                            break 'search;
                        }
                    }
                }
            }
            let u = planted.expect("six vertices force a monochromatic triangle");
            let ss = SampleSet {
                weights: vec![1; terms.len()],
                terminals: terms,
                eps: rat(1, 100),
                phi,
                kind: SampleKind::Vertex,
                guarantee: rat(1, 100),
                fallback_reason: None,
            };
            assert_eq!(verify_sample_set(&g, &ss, &[u], None, &p).len(), 1);
        }
    }
}
