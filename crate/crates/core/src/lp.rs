//! LP relaxations for small-set expansion (with terminal weights) and for
//! terminal vertex cuts, a floating-point solve, and the region-growing
//! roundings that turn fractional metrics into cuts.
//!
//! Every variable is nonnegative. Distances use one variable per unordered
//! pair, so symmetry holds by construction and needs no rows.

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexCut};
use crate::rational::clamped_ln;
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// `Σ_u z_uv ≥ (n − s) y_v`.
    Spreading,
    /// `Σ_u x(u) z_uv ≥ (K − ℓ) y_v`.
    WeightedSpreading,
    Budget,
    /// `z_uv ≤ d(u,v)` and `z_uv ≤ y_v`.
    MinLink,
    Triangle,
    /// `d(u,v) ≤ d(u,w) + b_v` for edges `(w,v)`.
    EdgeTriangle,
    /// `d(w,v) ≤ b_w + b_v` for edges `(w,v)`.
    EdgeLength,
    /// `d(u,v) ≥ y_u − y_v`.
    YDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Cmp {
    Le,
    Ge,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpRow {
    pub kind: RowKind,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// Minimization over nonnegative variables.
#[derive(Clone, Debug, Default, Serialize)]
pub struct LinearProgram {
    pub names: Vec<String>,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<LpRow>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConstraintTally {
    pub spreading: usize,
    pub weighted_spreading: usize,
    pub budgets: usize,
    pub min_links: usize,
    pub triangles: usize,
    pub edge_triangles: usize,
    pub edge_lengths: usize,
    pub y_differences: usize,
    /// Always 0: symmetric by construction.
    pub symmetry: usize,
    /// Variable bounds, not rows.
    pub nonnegativity: usize,
}

impl ConstraintTally {
    pub fn rows(&self) -> usize {
        self.spreading + self.weighted_spreading + self.budgets + self.min_links + self.triangles + self.edge_triangles + self.edge_lengths + self.y_differences
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    /// Largest constraint or bound violation.
    pub residual: f64,
}

impl LinearProgram {
    fn var(&mut self, name: String) -> usize {
        self.names.push(name);
        self.names.len() - 1
    }

    fn row(&mut self, kind: RowKind, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push(LpRow { kind, terms, cmp, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn tally(&self) -> ConstraintTally {
        let mut t = ConstraintTally { nonnegativity: self.num_vars(), ..Default::default() };
        for r in &self.rows {
            *match r.kind {
                RowKind::Spreading => &mut t.spreading,
                RowKind::WeightedSpreading => &mut t.weighted_spreading,
                RowKind::Budget => &mut t.budgets,
                RowKind::MinLink => &mut t.min_links,
                RowKind::Triangle => &mut t.triangles,
                RowKind::EdgeTriangle => &mut t.edge_triangles,
                RowKind::EdgeLength => &mut t.edge_lengths,
                RowKind::YDifference => &mut t.y_differences,
            } += 1;
        }
        t
    }

    /// Constraint matrix as `(row, column, coefficient)`.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.terms.iter().map(move |&(j, c)| (i, j, c))).collect()
    }

    pub fn objective_value(&self, vals: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * vals[j]).sum()
    }

    pub fn residual(&self, vals: &[f64]) -> f64 {
        let mut worst = vals.iter().fold(0.0f64, |w, &v| w.max(-v));
        for r in &self.rows {
            let lhs: f64 = r.terms.iter().map(|&(j, c)| c * vals[j]).sum();
            let viol = match r.cmp {
                Cmp::Le => lhs - r.rhs,
                Cmp::Ge => r.rhs - lhs,
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// CPLEX LP text, readable by most external solvers.
    pub fn to_lp_text(&self) -> String {
        let expr = |terms: &[(usize, f64)]| {
            let mut s = String::new();
            for (i, &(j, c)) in terms.iter().enumerate() {
                let sign = if c < 0.0 { "-" } else if i > 0 { "+" } else { "" };
                if sign.is_empty() {
                    let _ = write!(s, " {} {}", c.abs(), self.names[j]);
                } else {
                    let _ = write!(s, " {sign} {} {}", c.abs(), self.names[j]);
                }
            }
            if s.is_empty() {
                s.push_str(" 0");
            }
            s
        };
        let mut out = String::from("Minimize\n obj:");
        out.push_str(&expr(&self.objective));
        out.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let op = if r.cmp == Cmp::Le { "<=" } else { ">=" };
            let _ = writeln!(out, " c{i}:{} {op} {}", expr(&r.terms), r.rhs);
        }
        out.push_str("End\n");
        out
    }

    /// Solves with a sparse simplex; fails if the returned point violates
    /// any row by more than `tol`.
    pub fn solve(&self, tol: f64) -> Result<LpSolution> {
        let mut obj = vec![0.0; self.num_vars()];
        for &(j, c) in &self.objective {
            obj[j] += c;
        }
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = obj.iter().map(|&c| p.add_var(c, (0.0, f64::INFINITY))).collect();
        for r in &self.rows {
            let op = if r.cmp == Cmp::Le { ComparisonOp::Le } else { ComparisonOp::Ge };
            p.add_constraint(r.terms.iter().map(|&(j, c)| (vars[j], c)), op, r.rhs);
        }
        let sol = match p.solve() {
            Ok(out) => out.into_solution().map_err(|_| Error::Lp("solve interrupted".into()))?,
            Err(microlp::Error::Infeasible) => return Err(Error::Infeasible("LP has no feasible point".into())),
            Err(e) => return Err(Error::Lp(e.to_string())),
        };
        let values: Vec<f64> = vars.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
        let residual = self.residual(&values);
        if residual > tol {
            return Err(Error::Lp(format!("residual {residual:e} exceeds tolerance {tol:e}")));
        }
        Ok(LpSolution { objective: self.objective_value(&values), values, residual })
    }
}

/// Fractional metric read off a solution; `d` is dense `n × n`.
#[derive(Clone, Debug)]
pub struct Metric {
    pub n: usize,
    pub d: Vec<f64>,
    pub y: Vec<f64>,
    pub b: Vec<f64>,
    pub lp_value: f64,
    pub tol: f64,
}

impl Metric {
    pub fn dist(&self, u: usize, v: usize) -> f64 {
        self.d[u * self.n + v]
    }

    /// Vertices within `r · y_v` of `v`.
    pub fn ball(&self, v: usize, r: f64) -> Vec<usize> {
        let rad = r * self.y[v];
        (0..self.n).filter(|&u| self.dist(u, v) <= rad).collect()
    }
}

fn pair_vars(lp: &mut LinearProgram, n: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; n * n];
    for u in 0..n {
        for v in u + 1..n {
            let j = lp.var(format!("d_{u}_{v}"));
            d[u * n + v] = j;
            d[v * n + u] = j;
        }
    }
    d
}

fn metric_rows(lp: &mut LinearProgram, n: usize, d: &[usize], y: &[usize]) {
    for u in 0..n {
        for v in u + 1..n {
            for w in (0..n).filter(|&w| w != u && w != v) {
                lp.row(RowKind::Triangle, vec![(d[u * n + v], 1.0), (d[u * n + w], -1.0), (d[w * n + v], -1.0)], Cmp::Le, 0.0);
            }
        }
    }
    for u in 0..n {
        for v in (0..n).filter(|&v| v != u) {
            lp.row(RowKind::YDifference, vec![(d[u * n + v], 1.0), (y[u], -1.0), (y[v], 1.0)], Cmp::Ge, 0.0);
        }
    }
}

/// `z ≤ d(u,v)`, `z ≤ y_v`; returns the new `(z, u, v)`.
fn min_link(lp: &mut LinearProgram, tag: &str, u: usize, v: usize, dv: usize, yv: usize) -> (usize, usize, usize) {
    let z = lp.var(format!("{tag}_{u}_{v}"));
    lp.row(RowKind::MinLink, vec![(z, 1.0), (dv, -1.0)], Cmp::Le, 0.0);
    lp.row(RowKind::MinLink, vec![(z, 1.0), (yv, -1.0)], Cmp::Le, 0.0);
    (z, u, v)
}

#[derive(Clone, Debug)]
pub struct SseLpInstance {
    pub n: usize,
    pub terminals: Vec<usize>,
    pub x: Vec<u64>,
    pub s: usize,
    pub ell: u64,
    /// `x(V)`.
    pub k: u64,
    pub lp: LinearProgram,
    pub d_var: Vec<usize>,
    pub y_var: Vec<usize>,
    /// `(z, u, v)` for both spreading families.
    pub z_vars: Vec<(usize, usize, usize)>,
}

/// Builds the weighted small-set LP: find `S` with `|S| ≤ s`, `x(S) ≥ ℓ`
/// and few boundary edges. `x` must be integral, positive exactly on `t`.
pub fn build_sse_lp(g: &Graph, t: &[usize], x: &[u64], s: usize, ell: u64) -> Result<SseLpInstance> {
    let n = g.n();
    let bad = |m: String| Err(Error::Precondition(m));
    if x.len() != n {
        return bad(format!("weights have length {} for {n} vertices", x.len()));
    }
    let tm = g.mask(t)?;
    if let Some(v) = (0..n).find(|&v| tm[v] != (x[v] > 0)) {
        return bad(format!("weight of vertex {v} must be positive exactly on terminals"));
    }
    let k: u64 = x.iter().sum();
    if !(1..=n).contains(&s) {
        return bad(format!("need 1 ≤ s ≤ n, got s = {s}"));
    }
    if ell < 1 || ell > k {
        return bad(format!("need 1 ≤ ℓ ≤ x(V) = {k}, got {ell}"));
    }
    let mut lp = LinearProgram::default();
    let d = pair_vars(&mut lp, n);
    let y: Vec<usize> = (0..n).map(|v| lp.var(format!("y_{v}"))).collect();
    let mut z_vars = Vec::new();
    for v in 0..n {
        let mut terms = vec![(y[v], -((n - s) as f64))];
        for u in (0..n).filter(|&u| u != v) {
            let z = min_link(&mut lp, "z", u, v, d[u * n + v], y[v]);
            terms.push((z.0, 1.0));
            z_vars.push(z);
        }
        lp.row(RowKind::Spreading, terms, Cmp::Ge, 0.0);
    }
    let mut tv: Vec<usize> = t.to_vec();
    tv.sort_unstable();
    tv.dedup();
    for v in 0..n {
        let mut terms = vec![(y[v], -((k - ell) as f64))];
        for &u in tv.iter().filter(|&&u| u != v) {
            let z = min_link(&mut lp, "w", u, v, d[u * n + v], y[v]);
            terms.push((z.0, x[u] as f64));
            z_vars.push(z);
        }
        lp.row(RowKind::WeightedSpreading, terms, Cmp::Ge, 0.0);
    }
    lp.row(RowKind::Budget, (0..n).filter(|&v| x[v] > 0).map(|v| (y[v], x[v] as f64)).collect(), Cmp::Ge, ell as f64);
    lp.row(RowKind::Budget, y.iter().map(|&j| (j, 1.0)).collect(), Cmp::Le, s as f64);
    metric_rows(&mut lp, n, &d, &y);
    lp.objective = g.edges().into_iter().filter(|e| e.0 != e.1).map(|(u, v, m)| (d[u * n + v], m as f64)).collect();
    Ok(SseLpInstance { n, terminals: tv, x: x.to_vec(), s, ell, k, lp, d_var: d, y_var: y, z_vars })
}

/// Row counts the small-set LP must have, from `n` and `|T|` alone.
pub fn sse_tally_formula(n: usize, t: usize) -> ConstraintTally {
    let ordered = n * n.saturating_sub(1);
    let weighted_z = n * t - t;
    let pairs = ordered / 2;
    ConstraintTally {
        spreading: n,
        weighted_spreading: n,
        budgets: 2,
        min_links: 2 * (ordered + weighted_z),
        triangles: ordered * n.saturating_sub(2) / 2,
        edge_triangles: 0,
        edge_lengths: 0,
        y_differences: ordered,
        symmetry: 0,
        nonnegativity: pairs + n + ordered + weighted_z,
    }
}

impl SseLpInstance {
    pub fn metric(&self, sol: &LpSolution, tol: f64) -> Metric {
        let n = self.n;
        let d = (0..n * n).map(|i| if i / n == i % n { 0.0 } else { sol.values[self.d_var[i]] }).collect();
        let y = self.y_var.iter().map(|&j| sol.values[j]).collect();
        Metric { n, d, y, b: vec![0.0; n], lp_value: sol.objective, tol }
    }

    /// The integral point of a set `S` (indicator `y`, cut metric `d`).
    pub fn canonical_point(&self, set: &[usize]) -> Vec<f64> {
        let n = self.n;
        let mut inside = vec![false; n];
        for &v in set {
            inside[v] = true;
        }
        let mut vals = vec![0.0f64; self.lp.num_vars()];
        for u in 0..n {
            for v in u + 1..n {
                vals[self.d_var[u * n + v]] = if inside[u] != inside[v] { 1.0 } else { 0.0 };
            }
            vals[self.y_var[u]] = if inside[u] { 1.0 } else { 0.0 };
        }
        for &(z, u, v) in &self.z_vars {
            vals[z] = vals[self.d_var[u * n + v]].min(vals[self.y_var[v]]);
        }
        vals
    }

    /// Largest amount by which `Σ_u min(d(u,v), y_v) ≥ (n − s) y_v` and its
    /// weighted twin fail at `v`, with `min` taken directly.
    fn spreading_slack(&self, m: &Metric, v: usize) -> (f64, f64) {
        let yv = m.y[v];
        let plain: f64 = (0..self.n).map(|u| m.dist(u, v).min(yv)).sum();
        let weighted: f64 = self.terminals.iter().map(|&u| self.x[u] as f64 * m.dist(u, v).min(yv)).sum();
        (
            ((self.n - self.s) as f64 * yv - plain).max(0.0),
            ((self.k - self.ell) as f64 * yv - weighted).max(0.0),
        )
    }

    /// Checks `|Ball_r(v)| ≤ s/(1−r)` and `x(Ball_r(v)) ≤ ℓ/(1−r)`, each
    /// widened only by the solution's own slack at `v`.
    pub fn ball_bounds_hold(&self, m: &Metric, v: usize, r: f64) -> bool {
        let yv = m.y[v];
        if yv <= 0.0 {
            return true;
        }
        let ball = m.ball(v, r);
        let (res1, res2) = self.spreading_slack(m, v);
        let eps = 10.0 * m.tol * self.n as f64;
        let size_ok = ball.len() as f64 * (1.0 - r) * yv <= self.s as f64 * yv + res1 + eps;
        let weight: u64 = ball.iter().map(|&u| self.x[u]).sum();
        let weight_ok = weight as f64 * (1.0 - r) * yv <= self.ell as f64 * yv + res2 + eps * self.k as f64;
        size_ok && weight_ok
    }
}

#[derive(Clone, Debug)]
pub struct VertexLpInstance {
    pub n: usize,
    pub terminals: Vec<usize>,
    pub s: usize,
    pub lp: LinearProgram,
    pub d_var: Vec<usize>,
    pub y_var: Vec<usize>,
    pub b_var: Vec<usize>,
    pub z_vars: Vec<(usize, usize, usize)>,
}

/// Builds the terminal vertex-cut LP with separator variables `b_v`.
pub fn build_vertex_lp(g: &Graph, t: &[usize], s: usize) -> Result<VertexLpInstance> {
    let n = g.n();
    let mut tv = t.to_vec();
    tv.sort_unstable();
    tv.dedup();
    g.mask(&tv)?;
    if s < 1 || s > tv.len() {
        return Err(Error::Precondition(format!("need 1 ≤ s ≤ |T| = {}, got s = {s}", tv.len())));
    }
    let mut lp = LinearProgram::default();
    let d = pair_vars(&mut lp, n);
    let y: Vec<usize> = (0..n).map(|v| lp.var(format!("y_{v}"))).collect();
    let b: Vec<usize> = (0..n).map(|v| lp.var(format!("b_{v}"))).collect();
    let mut z_vars = Vec::new();
    for &v in &tv {
        let mut terms = vec![(y[v], -((tv.len() - s) as f64))];
        for &u in tv.iter().filter(|&&u| u != v) {
            let z = min_link(&mut lp, "z", u, v, d[u * n + v], y[v]);
            terms.push((z.0, 1.0));
            z_vars.push(z);
        }
        lp.row(RowKind::Spreading, terms, Cmp::Ge, 0.0);
    }
    lp.row(RowKind::Budget, tv.iter().map(|&v| (y[v], 1.0)).collect(), Cmp::Ge, s as f64);
    metric_rows(&mut lp, n, &d, &y);
    for v in 0..n {
        let nbrs: Vec<usize> = g.adjacent(v).map(|(w, _)| w).filter(|&w| w != v).collect();
        // Taking u = w here would force d(w,v) ≤ min(b_v, b_w) on every edge
        // and collapse any separator, so the three vertices are distinct and
        // adjacent pairs get their own length row below.
        for u in (0..n).filter(|&u| u != v) {
            for &w in nbrs.iter().filter(|&&w| w != u) {
                lp.row(RowKind::EdgeTriangle, vec![(d[u * n + v], 1.0), (d[u * n + w], -1.0), (b[v], -1.0)], Cmp::Le, 0.0);
            }
        }
    }
    for (w, v, _) in g.edges().into_iter().filter(|e| e.0 != e.1) {
        lp.row(RowKind::EdgeLength, vec![(d[w * n + v], 1.0), (b[w], -1.0), (b[v], -1.0)], Cmp::Le, 0.0);
    }
    lp.objective = b.iter().map(|&j| (j, 1.0)).collect();
    Ok(VertexLpInstance { n, terminals: tv, s, lp, d_var: d, y_var: y, b_var: b, z_vars })
}

/// Row counts of the vertex LP; `adjacent_pairs` counts distinct non-loop
/// neighbor pairs.
pub fn vertex_tally_formula(n: usize, t: usize, adjacent_pairs: usize) -> ConstraintTally {
    let ordered = n * n.saturating_sub(1);
    let tz = t * t.saturating_sub(1);
    ConstraintTally {
        spreading: t,
        weighted_spreading: 0,
        budgets: 1,
        min_links: 2 * tz,
        triangles: ordered * n.saturating_sub(2) / 2,
        edge_triangles: 2 * adjacent_pairs * n.saturating_sub(2),
        edge_lengths: adjacent_pairs,
        y_differences: ordered,
        symmetry: 0,
        nonnegativity: ordered / 2 + 2 * n + tz,
    }
}

impl VertexLpInstance {
    pub fn metric(&self, sol: &LpSolution, tol: f64) -> Metric {
        let n = self.n;
        let d = (0..n * n).map(|i| if i / n == i % n { 0.0 } else { sol.values[self.d_var[i]] }).collect();
        let y = self.y_var.iter().map(|&j| sol.values[j]).collect();
        let b = self.b_var.iter().map(|&j| sol.values[j]).collect();
        Metric { n, d, y, b, lp_value: sol.objective, tol }
    }

    /// Integral point of `(L, C, R)`: `y` marks `L`, `b` marks `C`, and
    /// `d(u,v) = 0` only when `u`, `v` lie together in `L` or together in `R`.
    /// Separator vertices are pairwise at distance 1, which the edge rows
    /// need once `|C| ≥ 2`.
    pub fn canonical_point(&self, cut: &VertexCut) -> Vec<f64> {
        let n = self.n;
        let mut side = vec![1u8; n];
        for &v in &cut.left {
            side[v] = 0;
        }
        for &v in &cut.right {
            side[v] = 2;
        }
        let mut vals = vec![0.0f64; self.lp.num_vars()];
        for u in 0..n {
            for v in u + 1..n {
                let apart = side[u] != side[v] || side[u] == 1;
                vals[self.d_var[u * n + v]] = if apart { 1.0 } else { 0.0 };
            }
            vals[self.y_var[u]] = if side[u] == 0 { 1.0 } else { 0.0 };
            vals[self.b_var[u]] = if side[u] == 1 { 1.0 } else { 0.0 };
        }
        for &(z, u, v) in &self.z_vars {
            vals[z] = vals[self.d_var[u * n + v]].min(vals[self.y_var[v]]);
        }
        vals
    }

    /// `|Ball_r(v) ∩ T| ≤ s/(1−r)` for a terminal `v`, widened by the
    /// solution's own slack.
    pub fn ball_bounds_hold(&self, m: &Metric, v: usize, r: f64) -> bool {
        let yv = m.y[v];
        if yv <= 0.0 {
            return true;
        }
        let t = self.terminals.len();
        let got: f64 = self.terminals.iter().map(|&u| m.dist(u, v).min(yv)).sum();
        let res = ((t - self.s) as f64 * yv - got).max(0.0);
        let inside = m.ball(v, r).into_iter().filter(|u| self.terminals.binary_search(u).is_ok()).count();
        inside as f64 * (1.0 - r) * yv <= self.s as f64 * yv + res + 10.0 * m.tol * t as f64
    }
}

/// `⌈c_rep · n · ln(n + 1)⌉` inner attempts.
pub fn repetitions(n: usize, c_rep: u32) -> usize {
    (c_rep as f64 * n as f64 * ((n + 1) as f64).ln()).ceil().max(1.0) as usize
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundingEvent {
    pub outer: usize,
    pub delta: f64,
    pub radius: f64,
    pub perm_seed: u64,
    pub cluster_sizes: Vec<usize>,
    /// Index of the picked cluster.
    pub picked: Option<usize>,
    pub score: Option<f64>,
    pub accepted: bool,
}

struct Carving {
    delta: f64,
    radius: f64,
    perm_seed: u64,
    clusters: Vec<(usize, Vec<usize>)>,
    ball_violations: usize,
}

/// One pass of threshold, permutation, radius and ball carving. Centers are
/// the `candidates` whose `y` lies in `[δ, 2δ]`; clusters use only `allowed`.
fn carve<R: Rng + ?Sized>(m: &Metric, candidates: &[usize], allowed: &[bool], rng: &mut R, ball_ok: &dyn Fn(usize, f64) -> bool) -> Carving {
    let delta: f64 = rng.gen_range(0.0..1.0);
    let perm_seed: u64 = rng.gen();
    let radius: f64 = rng.gen_range(0.05..=0.1);
    let mut centers: Vec<usize> = candidates.iter().copied().filter(|&v| m.y[v] > 0.0 && m.y[v] >= delta && m.y[v] <= 2.0 * delta).collect();
    centers.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
    let mut taken = vec![false; m.n];
    let mut clusters = Vec::with_capacity(centers.len());
    let mut ball_violations = 0;
    for c in centers {
        if !ball_ok(c, radius) {
            ball_violations += 1;
        }
        let rad = radius * m.y[c];
        let members: Vec<usize> = (0..m.n).filter(|&v| allowed[v] && !taken[v] && m.dist(c, v) <= rad).collect();
        for &v in &members {
            taken[v] = true;
        }
        clusters.push((c, members));
    }
    Carving { delta, radius, perm_seed, clusters, ball_violations }
}

/// Boundary of `set` inside the graph restricted to `allowed`.
fn boundary_within(g: &Graph, set: &[usize], allowed: &[bool]) -> u64 {
    let mut inside = vec![false; g.n()];
    for &v in set {
        inside[v] = true;
    }
    set.iter().map(|&u| g.adjacent(u).filter(|&(v, _)| allowed[v] && !inside[v]).map(|(_, c)| c).sum::<u64>()).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptedCluster {
    pub center: usize,
    pub size: usize,
    pub weight: u64,
    /// Boundary in the graph with earlier clusters removed.
    pub boundary: u64,
    pub score: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SseRounding {
    pub set: Vec<usize>,
    pub weight: u64,
    pub boundary: u64,
    pub lp_value: f64,
    /// `200 · max(ln ℓ, 1)`; accepted sets obey `|δ(Y)| ≤ factor · LP · x(Y) / ℓ`.
    pub factor: f64,
    pub clusters: Vec<AcceptedCluster>,
    pub iterations: u64,
    pub ball_checks: u64,
    pub ball_violations: u64,
    /// Failed output guarantees; expected empty.
    pub violations: Vec<String>,
    pub trace: Vec<RoundingEvent>,
}

/// Score test shared by the edge rounding: `x(C) − ℓ|C|/(10s) − κ|δ(C)| > 0`
/// with `κ = ℓ / (factor · LP)`, infinite when `LP = 0`. The first two terms
/// are compared in integers.
fn sse_score(inst: &SseLpInstance, kappa: f64, size: usize, weight: u64, boundary: u64) -> (bool, f64) {
    let lead = 10 * inst.s as i128 * weight as i128 - inst.ell as i128 * size as i128;
    let lead_f = lead as f64 / (10 * inst.s) as f64;
    if boundary == 0 {
        return (lead > 0, lead_f);
    }
    if !kappa.is_finite() {
        return (false, f64::NEG_INFINITY);
    }
    let score = lead_f - kappa * boundary as f64;
    (lead > 0 && score > 0.0, score)
}

fn sse_kappa(inst: &SseLpInstance, lp_value: f64) -> (f64, f64) {
    let factor = 200.0 * clamped_ln(inst.ell as f64);
    let kappa = if lp_value > 0.0 { inst.ell as f64 / (factor * lp_value) } else { f64::INFINITY };
    (factor, kappa)
}

/// Grows `Y` from clusters of positive score until `|Y| > s` or
/// `x(Y) > ℓ/4`, spending at most `reps` attempts per cluster.
pub fn round_sse<R: Rng + ?Sized>(g: &Graph, inst: &SseLpInstance, sol: &LpSolution, tol: f64, rng: &mut R, reps: usize) -> Result<SseRounding> {
    let n = inst.n;
    let m = inst.metric(sol, tol);
    let (factor, kappa) = sse_kappa(inst, m.lp_value);
    let mut removed = vec![false; n];
    let mut out = SseRounding {
        set: vec![],
        weight: 0,
        boundary: 0,
        lp_value: m.lp_value,
        factor,
        clusters: vec![],
        iterations: 0,
        ball_checks: 0,
        ball_violations: 0,
        violations: vec![],
        trace: vec![],
    };
    let ball_ok = |v: usize, r: f64| inst.ball_bounds_hold(&m, v, r);
    while out.set.len() <= inst.s && 4 * out.weight <= inst.ell {
        let allowed: Vec<bool> = removed.iter().map(|&r| !r).collect();
        let candidates: Vec<usize> = inst.terminals.iter().copied().filter(|&v| allowed[v]).collect();
        let mut found = None;
        for _ in 0..reps {
            out.iterations += 1;
            let carving = carve(&m, &candidates, &allowed, rng, &ball_ok);
            out.ball_checks += carving.clusters.len() as u64;
            out.ball_violations += carving.ball_violations as u64;
            let slot = rng.gen_range(0..n);
            let mut ev = RoundingEvent {
                outer: out.clusters.len(),
                delta: carving.delta,
                radius: carving.radius,
                perm_seed: carving.perm_seed,
                cluster_sizes: carving.clusters.iter().map(|c| c.1.len()).collect(),
                picked: None,
                score: None,
                accepted: false,
            };
            if let Some((center, members)) = carving.clusters.get(slot) {
                let weight: u64 = members.iter().map(|&v| inst.x[v]).sum();
                let boundary = boundary_within(g, members, &allowed);
                let (ok, score) = sse_score(inst, kappa, members.len(), weight, boundary);
                ev.picked = Some(slot);
                ev.score = Some(score);
                ev.accepted = ok;
                if ok {
                    found = Some(AcceptedCluster { center: *center, size: members.len(), weight, boundary, score });
                    for &v in members {
                        removed[v] = true;
                    }
                    out.set.extend(members);
                    out.weight += weight;
                }
            }
            out.trace.push(ev);
            if found.is_some() {
                break;
            }
        }
        match found {
            Some(c) => out.clusters.push(c),
            None => return Err(Error::RandomizedFailure(format!("no positive-score cluster in {reps} attempts"))),
        }
    }
    out.set.sort_unstable();
    out.boundary = g.boundary_size(&out.set)?;
    let (s, ell) = (inst.s as u64, inst.ell);
    let len = out.set.len() as u64;
    if len > 10 * s {
        out.violations.push(format!("|Y| = {len} exceeds 10s = {}", 10 * s));
    }
    if 10 * out.weight < ell || out.weight > 3 * ell {
        out.violations.push(format!("x(Y) = {} outside [ℓ/10, 3ℓ] for ℓ = {ell}", out.weight));
    }
    let rhs = factor * m.lp_value * out.weight as f64;
    if out.boundary as f64 * ell as f64 > rhs + 10.0 * tol * ell as f64 {
        out.violations.push(format!("|δ(Y)| = {} exceeds {factor:.3} · LP · x(Y) / ℓ", out.boundary));
    }
    Ok(out)
}

/// Runs `iters` single attempts from scratch and counts positive scores.
pub fn sse_acceptance<R: Rng + ?Sized>(g: &Graph, inst: &SseLpInstance, sol: &LpSolution, tol: f64, rng: &mut R, iters: usize) -> (u64, u64) {
    let m = inst.metric(sol, tol);
    let (_, kappa) = sse_kappa(inst, m.lp_value);
    let allowed = vec![true; inst.n];
    let (mut hits, mut ball_violations) = (0, 0);
    let ball_ok = |v: usize, r: f64| inst.ball_bounds_hold(&m, v, r);
    for _ in 0..iters {
        let carving = carve(&m, &inst.terminals, &allowed, rng, &ball_ok);
        ball_violations += carving.ball_violations as u64;
        if let Some((_, members)) = carving.clusters.get(rng.gen_range(0..inst.n)) {
            let weight: u64 = members.iter().map(|&v| inst.x[v]).sum();
            let boundary = boundary_within(g, members, &allowed);
            if sse_score(inst, kappa, members.len(), weight, boundary).0 {
                hits += 1;
            }
        }
    }
    (hits, ball_violations)
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexRounding {
    pub set: Vec<usize>,
    pub cut: VertexCut,
    pub lp_value: f64,
    /// `2000 · max(ln s, 1)`; accepted sets obey `|N(U)| ≤ factor · LP · |U ∩ T| / s`.
    pub factor: f64,
    pub iterations: u64,
    pub ball_checks: u64,
    pub ball_violations: u64,
    /// Set when `s < LP · max(ln s, 1)`, where the remainder bound is not promised.
    pub warning: Option<String>,
    /// Attempts where the two-group split left a group below a third.
    pub uneven_splits: u64,
    pub violations: Vec<String>,
    pub trace: Vec<RoundingEvent>,
}

/// Splits clusters into two groups by terminal count (largest first, each to
/// the lighter group) and returns the union of the group holding at most
/// half of all terminals, plus whether both groups reached a third.
fn split_clusters(clusters: &[(usize, Vec<usize>)], tmask: &[bool], t: usize) -> (Vec<usize>, bool) {
    let count = |c: &[usize]| c.iter().filter(|&&v| tmask[v]).count();
    let mut order: Vec<(usize, usize)> = clusters.iter().enumerate().map(|(i, c)| (count(&c.1), i)).collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut groups: [(usize, Vec<usize>); 2] = [(0, vec![]), (0, vec![])];
    for (cnt, i) in order {
        let g = if groups[0].0 <= groups[1].0 { 0 } else { 1 };
        groups[g].0 += cnt;
        groups[g].1.extend(&clusters[i].1);
    }
    let total = groups[0].0 + groups[1].0;
    let even = 3 * groups[0].0.min(groups[1].0) >= total;
    let fits = |g: &(usize, Vec<usize>)| 2 * g.0 <= t;
    let pick = match (fits(&groups[0]), fits(&groups[1])) {
        (true, true) => if groups[0].0 >= groups[1].0 { 0 } else { 1 },
        (true, false) => 0,
        _ => 1,
    };
    (std::mem::take(&mut groups[pick].1), even)
}

/// Carves clusters around terminals and keeps a set `U` with
/// `|U ∩ T| − κ|N(U)| > 0`, `κ = s / (factor · LP)`, whose far side still
/// holds a quarter of the terminals.
pub fn round_vertex<R: Rng + ?Sized>(g: &Graph, inst: &VertexLpInstance, sol: &LpSolution, tol: f64, rng: &mut R, reps: usize) -> Result<VertexRounding> {
    let n = inst.n;
    let t = inst.terminals.len();
    let m = inst.metric(sol, tol);
    let log_s = clamped_ln(inst.s as f64);
    let factor = 2000.0 * log_s;
    let kappa = if m.lp_value > 0.0 { inst.s as f64 / (factor * m.lp_value) } else { f64::INFINITY };
    let mut tmask = vec![false; n];
    for &v in &inst.terminals {
        tmask[v] = true;
    }
    let allowed = vec![true; n];
    let warning = ((inst.s as f64) < m.lp_value * log_s)
        .then(|| format!("s = {} is below LP · ln s = {:.3}; the quarter-remainder bound is not promised", inst.s, m.lp_value * log_s));
    let ball_ok = |v: usize, r: f64| inst.ball_bounds_hold(&m, v, r);
    let (mut ball_checks, mut ball_violations, mut uneven) = (0u64, 0u64, 0u64);
    let mut trace = Vec::new();
    for it in 0..reps {
        let carving = carve(&m, &inst.terminals, &allowed, rng, &ball_ok);
        ball_checks += carving.clusters.len() as u64;
        ball_violations += carving.ball_violations as u64;
        let mut union: Vec<usize> = carving.clusters.iter().flat_map(|c| c.1.iter().copied()).collect();
        let in_t = union.iter().filter(|&&v| tmask[v]).count();
        if 2 * in_t >= t {
            let (group, even) = split_clusters(&carving.clusters, &tmask, t);
            if !even {
                uneven += 1;
            }
            union = group;
        }
        union.sort_unstable();
        let mut umask = vec![false; n];
        for &v in &union {
            umask[v] = true;
        }
        let nb = g.neighbors_of_mask(&umask);
        let hit = union.iter().filter(|&&v| tmask[v]).count();
        let far = (0..n).filter(|&v| tmask[v] && !umask[v] && nb.binary_search(&v).is_err()).count();
        let score = if nb.is_empty() { hit as f64 } else { hit as f64 - kappa * nb.len() as f64 };
        let ok = hit > 0 && score > 0.0 && 4 * far >= t;
        trace.push(RoundingEvent {
            outer: 0,
            delta: carving.delta,
            radius: carving.radius,
            perm_seed: carving.perm_seed,
            cluster_sizes: carving.clusters.iter().map(|c| c.1.len()).collect(),
            picked: None,
            score: Some(score),
            accepted: ok,
        });
        if !ok {
            continue;
        }
        let right: Vec<usize> = (0..n).filter(|&v| !umask[v] && nb.binary_search(&v).is_err()).collect();
        let cut = VertexCut::new(g, &union, &nb, &right)?;
        let mut violations = vec![];
        if nb.len() as f64 * inst.s as f64 > factor * m.lp_value * hit as f64 + 10.0 * tol * inst.s as f64 {
            violations.push(format!("|N(U)| = {} exceeds {factor:.3} · LP · |U ∩ T| / s", nb.len()));
        }
        return Ok(VertexRounding {
            set: union,
            cut,
            lp_value: m.lp_value,
            factor,
            iterations: it as u64 + 1,
            ball_checks,
            ball_violations,
            warning,
            uneven_splits: uneven,
            violations,
            trace,
        });
    }
    Err(Error::RandomizedFailure(format!("no accepted vertex set in {reps} attempts")))
}
