//! Deterministic instance generators.

use crate::graph::Graph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn path(n: usize) -> Graph {
    let mut g = Graph::new(n);
    for v in 1..n {
        g.add_edge(v - 1, v);
    }
    g
}

pub fn cycle(n: usize) -> Graph {
    let mut g = path(n);
    if n > 2 {
        g.add_edge(n - 1, 0);
    }
    g
}

/// `K_{1,leaves}` with the center at 0.
pub fn star(leaves: usize) -> Graph {
    let mut g = Graph::new(leaves + 1);
    for v in 1..=leaves {
        g.add_edge(0, v);
    }
    g
}

pub fn complete(n: usize) -> Graph {
    let mut g = Graph::new(n);
    add_clique(&mut g, &(0..n).collect::<Vec<_>>());
    g
}

fn add_clique(g: &mut Graph, vs: &[usize]) {
    for (i, &u) in vs.iter().enumerate() {
        for &v in &vs[i + 1..] {
            g.add_edge(u, v);
        }
    }
}

/// `rows × cols` grid, vertex `(i, j)` has id `i * cols + j`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut g = Graph::new(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let v = i * cols + j;
            if j + 1 < cols {
                g.add_edge(v, v + 1);
            }
            if i + 1 < rows {
                g.add_edge(v, v + cols);
            }
        }
    }
    g
}

/// `K_a` on `0..a` and `K_b` on `a..a+b` joined by the edge `(a-1, a)`.
pub fn dumbbell(a: usize, b: usize) -> Graph {
    let mut g = Graph::new(a + b);
    add_clique(&mut g, &(0..a).collect::<Vec<_>>());
    add_clique(&mut g, &(a..a + b).collect::<Vec<_>>());
    g.add_edge(a - 1, a);
    g
}

/// `count` cliques that all contain vertex 0; clique `i` adds `size` more
/// vertices, so vertex 0 is a cut vertex when `count ≥ 2`.
pub fn star_of_cliques(count: usize, size: usize) -> Graph {
    let mut g = Graph::new(1 + count * size);
    for i in 0..count {
        let mut vs = vec![0];
        vs.extend(1 + i * size..1 + (i + 1) * size);
        add_clique(&mut g, &vs);
    }
    g
}

/// Joins components by an edge between their smallest vertices, in order.
pub fn connect(g: &mut Graph) {
    let comps = g.components();
    for w in comps.windows(2) {
        g.add_edge(w[0][0], w[1][0]);
    }
}

/// Two halves with edge probability `p` inside and `q` across, made
/// connected afterwards.
pub fn planted_bisection(n: usize, p: f64, q: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut g = Graph::new(n);
    let half = n / 2;
    for u in 0..n {
        for v in u + 1..n {
            let same = (u < half) == (v < half);
            if r.gen_bool(if same { p } else { q }) {
                g.add_edge(u, v);
            }
        }
    }
    connect(&mut g);
    g
}

/// Uniform random labelled tree via a random attachment order.
pub fn random_tree(n: usize, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let mut g = Graph::new(n);
    for i in 1..n {
        let parent = order[r.gen_range(0..i)];
        g.add_edge(parent, order[i]);
    }
    g
}

/// Random tree plus `extra` random non-loop edges (simple graph).
pub fn random_connected(n: usize, extra: usize, seed: u64) -> Graph {
    let mut g = random_tree(n, seed);
    let mut r = rng(seed ^ 0x9e37_79b9);
    let mut added = 0;
    let mut tries = 0;
    while added < extra && tries < 100 * (extra + 1) {
        tries += 1;
        let (u, v) = (r.gen_range(0..n), r.gen_range(0..n));
        if u != v && g.multiplicity(u, v) == 0 {
            g.add_edge(u, v);
            added += 1;
        }
    }
    g
}

/// Simple `d`-regular graph by the configuration model with restarts.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Graph {
    assert!(n * d % 2 == 0 && d < n, "no simple {d}-regular graph on {n} vertices");
    let mut r = rng(seed);
    loop {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();
        stubs.shuffle(&mut r);
        let mut g = Graph::new(n);
        let ok = stubs.chunks(2).all(|p| {
            if p[0] == p[1] || g.multiplicity(p[0], p[1]) > 0 {
                false
            } else {
                g.add_edge(p[0], p[1]);
                true
            }
        });
        if ok {
            return g;
        }
    }
}

/// Vertex–edge incidence graph of `K_n` with a clique on the `n` original
/// vertices. Ids `0..C(n,2)` are the edge vertices (pairs in lexicographic
/// order), then `C(n,2)..C(n,2)+n` the original vertices.
pub fn incidence_graph(n: usize) -> Graph {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let left = pairs.len();
    let mut g = Graph::new(left + n);
    for (e, &(i, j)) in pairs.iter().enumerate() {
        g.add_edge(e, left + i);
        g.add_edge(e, left + j);
    }
    add_clique(&mut g, &(left..left + n).collect::<Vec<_>>());
    g
}

/// Index of pair `(i, j)`, `i < j`, in [`incidence_graph`]'s left side.
pub fn incidence_pair_id(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = (i.min(j), i.max(j));
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let g = incidence_graph(4);
        assert_eq!(g.n(), 10);
        assert!((0..6).all(|v| g.degree(v) == 2));
        assert_eq!(incidence_pair_id(4, 2, 3), 5);
        assert_eq!(incidence_pair_id(4, 1, 0), 0);
        let d = dumbbell(5, 5);
        assert_eq!((d.n(), d.m()), (10, 21));
        assert_eq!(grid(3, 3).m(), 12);
        assert_eq!(star_of_cliques(2, 3).n(), 7);
    }

    #[test]
    fn seeded_generators_reproduce() {
        assert_eq!(random_regular(16, 4, 7), random_regular(16, 4, 7));
        let g = random_regular(16, 4, 7);
        assert!((0..16).all(|v| g.degree(v) == 4));
        assert_eq!(planted_bisection(20, 0.5, 0.05, 3), planted_bisection(20, 0.5, 0.05, 3));
        assert!(planted_bisection(20, 0.3, 0.0, 3).is_connected());
        assert!(random_tree(30, 1).is_connected());
        assert_eq!(random_tree(30, 1).m(), 29);
        assert!(random_connected(30, 10, 2).is_connected());
    }
}
