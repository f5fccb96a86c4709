//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Lines go straight to stdout so they survive the test harness capture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsecut::cut_matching::{
    self, certify_small_set_expansion, expansion_target, improve_cut, inner_boundary, matching_player_round, round_budget,
    run_game, vertex_loads, vertex_matching_player_round, weighted_sparsity, GameKind, GameOutcome, MatchOutcome,
};
use sparsecut::flow::{routes_within_congestion, verify_embedding, Matching};
use sparsecut::graph::sorted;
use sparsecut::io::{parse_graph, write_graph};
use sparsecut::lp::{build_sse_lp, build_vertex_lp, repetitions, round_sse, round_vertex, sse_acceptance};
use sparsecut::oracle::{
    self, enumerate_sparse_family, exact_sparsest_cut, exact_sse, exact_terminal_expansion, exact_vertex_sparsest,
    exact_weighted_unbalanced, generators as gen, scan_subsets, CutKind,
};
use sparsecut::pipelines::{self, ApproxResult, FoundCut, Measure, Status};
use sparsecut::rational::{clamped_ln, fmt_rational, int, rat, to_f64};
use sparsecut::report::{to_json, Envelope};
use sparsecut::sample_sets::{edge_sample_set, verify_sample_set, vertex_sample_set, weighted_sample_set, SampleKind};
use sparsecut::{Graph, ParamSet, Rational, Sparsity};
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let tag = if pass { "PASS" } else { "FAIL" };
    writeln!(out, "\n{tag} criterion {id} ({name}): {detail}").unwrap();
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// 1. Sample sets

fn sample_corpus() -> Vec<(String, Graph)> {
    (0..50u64)
        .map(|i| {
            let n = 20 + (i as usize * 7) % 41;
            match i % 3 {
                0 => (format!("dumbbell({},{})", n / 2, n - n / 2), gen::dumbbell(n / 2, n - n / 2)),
                1 => (format!("planted({n})"), gen::planted_bisection(n, 0.3, 0.02, 100 + i)),
                _ => (format!("tree({n})"), gen::random_tree(n, 200 + i)),
            }
        })
        .collect()
}

#[test]
fn criterion_1_sample_set_soundness() {
    let start = Instant::now();
    let eps = rat(1, 100);
    let defaults = ParamSet::default();
    // A smaller divisor moves the bag threshold; at these sizes the bag
    // scale stays below one vertex, so both settings must come out exact.
    let relaxed = ParamSet { sample_d: rat(1, 1000), ..ParamSet::default() };
    let (mut checks, mut violations, mut members, mut built) = (0u64, 0u64, 0u64, 0u64);
    let mut failures = Vec::new();
    for (gi, (name, g)) in sample_corpus().iter().enumerate() {
        assert!(g.is_connected(), "{name} must be connected");
        let n = g.n() as i128;
        let edge_family = enumerate_sparse_family(g, None, 3, CutKind::Edge);
        let vertex_family = enumerate_sparse_family(g, None, 3, CutKind::Vertex);
        members += (edge_family.len() + vertex_family.len()) as u64;
        let mut r = seeded(gi as u64);
        let mu: Vec<u64> = (0..g.n()).map(|_| r.gen_range(1..=5)).collect();
        for phi in [rat(1, 25 * n), rat(1, 12 * n), rat(1, 4 * n)] {
            for params in [&defaults, &relaxed] {
                let ss = edge_sample_set(g, &eps, &phi, params).unwrap();
                built += (ss.kind == SampleKind::Edge) as u64;
                let v = verify_sample_set(g, &ss, &edge_family, None, params);
                let ws = weighted_sample_set(g, &mu, &eps, &phi, params).unwrap();
                built += (ws.kind == SampleKind::Weighted) as u64;
                let wv = verify_sample_set(g, &ws, &edge_family, Some(&mu), params);
                checks += 2;
                violations += (v.len() + wv.len()) as u64;
                if !v.is_empty() || !wv.is_empty() {
                    failures.push(format!("{name} phi={phi}: {:?} {:?}", v.first(), wv.first()));
                }
            }
            let vs = vertex_sample_set(g, &eps, &phi, &defaults.vertex_sample_c, gi as u64).unwrap();
            built += (vs.kind == SampleKind::Vertex) as u64;
            let vv = verify_sample_set(g, &vs, &vertex_family, None, &defaults);
            checks += 1;
            violations += vv.len() as u64;
            if !vv.is_empty() {
                failures.push(format!("{name} vertex phi={phi}: {:?}", vv.first()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = violations == 0 && secs <= 300.0;
    report(
        1,
        "sample-set soundness",
        pass,
        &format!("{checks} sample sets ({built} non-fallback) against {members} family members, {violations} violations, {secs:.1}s"),
    );
    assert!(pass, "{failures:?}");
}

// ---------------------------------------------------------------------------
// 2. ImproveCut

/// A game-like graph: heavy clusters, light links inside each side, and
/// pendant vertices of `W` held by a light edge while pulled outward by
/// heavier ones, which the flow step should move across.
fn clustered(seed: u64) -> (Graph, i128, Vec<usize>) {
    let mut r = seeded(seed);
    let scale = [16i128, 32, 64, 64][r.gen_range(0..4)];
    let count = 4;
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut n = 0;
    for _ in 0..count {
        let size = r.gen_range(3..=4);
        clusters.push((n..n + size).collect());
        n += size;
    }
    let pendants = r.gen_range(0..=2);
    let first_pendant = n;
    n += pendants;
    let mut h = Graph::new(n);
    let heavy = scale as u64;
    for c in &clusters {
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                if j == i + 1 || r.gen_bool(0.7) {
                    h.add_edge_mult(c[i], c[j], r.gen_range(heavy / 2..=2 * heavy));
                }
            }
        }
    }
    let split = 2;
    let w: Vec<usize> = clusters[..split].iter().flatten().copied().chain(first_pendant..n).collect();
    let side_w: Vec<usize> = clusters[..split].concat();
    let side_rest: Vec<usize> = clusters[split..].concat();
    for side in [&side_w, &side_rest] {
        for _ in 0..r.gen_range(1..=3) {
            let (a, b) = (side[r.gen_range(0..side.len())], side[r.gen_range(0..side.len())]);
            if a != b {
                h.add_edge_mult(a, b, r.gen_range(1..=heavy / 4));
            }
        }
    }
    if r.gen_bool(0.3) {
        h.add_edge_mult(side_w[r.gen_range(0..side_w.len())], side_rest[r.gen_range(0..side_rest.len())], 1);
    }
    for p in first_pendant..n {
        h.add_edge_mult(p, side_w[r.gen_range(0..side_w.len())], 1);
        // Drain per vertex is scale/16 units; pull slightly past it.
        let drain = heavy / 16;
        h.add_edge_mult(p, side_rest[r.gen_range(0..side_rest.len())], r.gen_range(drain + 1..=drain + 3));
    }
    (h, scale, sorted(w))
}

#[test]
fn criterion_2_improve_cut_contract() {
    let start = Instant::now();
    let params = ParamSet::default();
    let rho2 = params.rho * params.rho;
    let (mut kept, mut sparse_sets, mut tight, mut moved) = (0u64, 0u64, 0u64, 0u64);
    let mut failures: Vec<String> = Vec::new();
    let mut seed = 0u64;
    while kept < 30 && seed < 5000 {
        seed += 1;
        let (h, scale, w) = clustered(seed);
        let n = h.n();
        let Ok(res) = improve_cut(&h, scale, &w, &params) else { continue };
        assert!(n <= 18);
        kept += 1;
        moved += res.r.len() as u64;
        // Q and R split W.
        let mut qr = res.q.clone();
        qr.extend(&res.r);
        if sorted(qr) != w {
            failures.push(format!("seed {seed}: Q ∪ R ≠ W"));
        }
        if int(res.r.len() as i128) > rho2 * res.flow {
            failures.push(format!("seed {seed}: |R| = {} above rho²·flow = {}", res.r.len(), rho2 * res.flow));
        }
        let boundary = Rational::new(h.boundary_size(&w).unwrap() as i128, scale);
        if res.flow > boundary || res.boundary != boundary {
            failures.push(format!("seed {seed}: flow {} exceeds boundary {}", res.flow, boundary));
        }
        // Balance retained: Q loses at most rho²·flow vertices of W, its
        // complement only grows.
        if int(res.q.len() as i128) < int(w.len() as i128) - rho2 * res.flow || n - res.q.len() < n - w.len() {
            failures.push(format!("seed {seed}: balance lost"));
        }
        if weighted_sparsity(&h, scale, &w).unwrap() > params.improve_pre {
            failures.push(format!("seed {seed}: precondition accepted wrongly"));
        }
        let adj: Vec<Vec<(usize, u64)>> = (0..n).map(|v| h.adjacent(v).collect()).collect();
        let qmask: u64 = res.q.iter().map(|&v| 1u64 << v).sum();
        let (sp_num, sp_den) = (*params.improve_sparsity.numer(), *params.improve_sparsity.denom());
        let d = params.inner_d;
        let count = AtomicU64::new(0);
        let tight_count = AtomicU64::new(0);
        let worst = scan_subsets(&h, |mask, delta, size| {
            // δ(S)/scale ≤ improve_sparsity·|S|
            if size == 0 || delta as i128 * sp_den > sp_num * scale * size as i128 {
                return None;
            }
            count.fetch_add(1, Ordering::Relaxed);
            let inner: u64 = (0..n)
                .filter(|&u| mask >> u & 1 == 1 && qmask >> u & 1 == 1)
                .flat_map(|u| adj[u].iter())
                .filter(|&&(v, _)| mask >> v & 1 == 1 && qmask >> v & 1 == 0)
                .map(|&(_, m)| m)
                .sum();
            let lhs = Rational::new(inner as i128, scale) * d;
            if inner > 0 && lhs * int(2) > int(size as i128) {
                tight_count.fetch_add(1, Ordering::Relaxed);
            }
            (lhs > int(size as i128)).then(|| std::cmp::Reverse(lhs - int(size as i128)))
        });
        sparse_sets += count.into_inner();
        tight += tight_count.into_inner();
        if let Some((_, mask)) = worst {
            let s = oracle::mask_to_set(mask, n);
            let inner = inner_boundary(&h, scale, &res.q, &s);
            failures.push(format!("seed {seed}: S = {s:?} has inner boundary {inner} > |S|/{d}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = kept == 30 && failures.is_empty() && secs <= 120.0;
    report(
        2,
        "improve-cut contract",
        pass,
        &format!(
            "{kept} instances, {moved} vertices moved to the far side, {sparse_sets} sparse sets checked ({tight} above half the bound), {} failures, {secs:.1}s",
            failures.len()
        ),
    );
    assert!(pass, "{failures:?}");
}

// ---------------------------------------------------------------------------
// 3. Matching player

fn trial_graph(r: &mut ChaCha8Rng) -> Graph {
    match r.gen_range(0..6) {
        0 => gen::random_connected(r.gen_range(8..=16), r.gen_range(0..12), r.gen()),
        1 => gen::planted_bisection(r.gen_range(8..=16), 0.6, 0.08, r.gen()),
        2 => gen::dumbbell(r.gen_range(3..=7), r.gen_range(3..=7)),
        3 => gen::grid(r.gen_range(2..=4), r.gen_range(3..=4)),
        4 => gen::star_of_cliques(r.gen_range(2..=4), r.gen_range(2..=4)),
        _ => gen::random_regular(12, 3, r.gen()),
    }
}

/// Terminals and a pair `(X, Y)` of disjoint terminal sets of near-equal size.
fn trial_pair(r: &mut ChaCha8Rng, n: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut all: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        all.swap(i, r.gen_range(0..=i));
    }
    let t = sorted(all[..r.gen_range(2..=n)].to_vec());
    let k = r.gen_range(1..=t.len() / 2);
    let extra = (2 * k < t.len() && r.gen_bool(0.5)) as usize;
    let (x, y) = (sorted(t[..k].to_vec()), sorted(t[k..2 * k + extra].to_vec()));
    (t, x, y)
}

fn check_edge_matching(g: &Graph, m: &Matching, x: &[usize], y: &[usize], phi: &Rational) -> Result<(), String> {
    let congestion = int(1) / phi;
    if !m.is_perfect_on(x, y) {
        return Err("matching not perfect".into());
    }
    if !m.paths_well_formed(g) {
        return Err("paths malformed".into());
    }
    if !routes_within_congestion(g, &m.routes(), &congestion) {
        return Err("explicit routes over congestion".into());
    }
    let demands: Vec<(usize, usize, Rational)> = m.pairs.iter().map(|p| (p.a, p.b, Rational::new(p.units, m.scale))).collect();
    if !verify_embedding(g, &demands, &congestion).feasible {
        return Err("demands not embeddable by flow".into());
    }
    Ok(())
}

fn terminal_ratio(cut: u64, a: usize, b: usize) -> Option<Rational> {
    (a.min(b) > 0).then(|| Rational::new(cut as i128, a.min(b) as i128))
}

#[test]
fn criterion_3_matching_player_dichotomy() {
    let start = Instant::now();
    let edge_phis = [rat(1, 8), rat(1, 4), rat(1, 2), int(1), rat(3, 2), int(2)];
    let vertex_phis = [rat(1, 8), rat(1, 4), rat(1, 3), rat(1, 2), rat(3, 4)];
    let (mut e_cuts, mut e_matchings, mut v_cuts, mut v_matchings) = (0, 0, 0, 0);
    let mut failures = Vec::new();
    for trial in 0..200u64 {
        let mut r = seeded(1000 + trial);
        let g = trial_graph(&mut r);
        let (t, x, y) = trial_pair(&mut r, g.n());
        let phi = edge_phis[r.gen_range(0..edge_phis.len())];
        match matching_player_round(&g, &t, &phi, &x, &y).unwrap() {
            MatchOutcome::EdgeCut(c) => {
                e_cuts += 1;
                let inside: Vec<bool> = (0..g.n()).map(|v| c.side.binary_search(&v).is_ok()).collect();
                let tin = t.iter().filter(|&&v| inside[v]).count();
                let ratio = terminal_ratio(g.boundary_size(&c.side).unwrap(), tin, t.len() - tin);
                if !c.verify(&g) || ratio.map_or(true, |q| q > phi) {
                    failures.push(format!("edge trial {trial}: cut {:?} has terminal sparsity {ratio:?} > {phi}", c.side));
                }
            }
            MatchOutcome::Matching(m) => {
                e_matchings += 1;
                if let Err(e) = check_edge_matching(&g, &m, &x, &y, &phi) {
                    failures.push(format!("edge trial {trial}: {e}"));
                }
            }
            MatchOutcome::VertexCut(_) => failures.push(format!("edge trial {trial}: vertex cut from edge player")),
        }

        let phi = vertex_phis[r.gen_range(0..vertex_phis.len())];
        match vertex_matching_player_round(&g, &t, &phi, &x, &y).unwrap() {
            MatchOutcome::VertexCut(c) => {
                v_cuts += 1;
                let part = |set: &[usize], v: usize| set.binary_search(&v).is_ok();
                let lc = t.iter().filter(|&&v| part(&c.left, v) || part(&c.separator, v)).count();
                let rc = t.iter().filter(|&&v| part(&c.right, v) || part(&c.separator, v)).count();
                let ratio = terminal_ratio(c.separator.len() as u64, lc, rc);
                if !c.verify(&g) || ratio.map_or(true, |q| q > phi) {
                    failures.push(format!("vertex trial {trial}: cut has terminal sparsity {ratio:?} > {phi}"));
                }
            }
            MatchOutcome::Matching(m) => {
                v_matchings += 1;
                let cap = int(1) / phi;
                if !m.is_perfect_on(&x, &y) || !m.paths_well_formed(&g) {
                    failures.push(format!("vertex trial {trial}: matching not perfect or malformed"));
                }
                if vertex_loads(&m.routes(), g.n()).iter().any(|l| *l > cap) {
                    failures.push(format!("vertex trial {trial}: vertex load above {cap}"));
                }
            }
            MatchOutcome::EdgeCut(_) => failures.push(format!("vertex trial {trial}: edge cut from vertex player")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs <= 240.0;
    report(
        3,
        "matching-player dichotomy",
        pass,
        &format!(
            "200 edge trials ({e_cuts} cuts, {e_matchings} matchings), 200 vertex trials ({v_cuts} cuts, {v_matchings} matchings), {} failures, {secs:.1}s",
            failures.len()
        ),
    );
    assert!(pass, "{failures:?}");
}

// ---------------------------------------------------------------------------
// 4. Game certification

#[test]
fn criterion_4_game_certification() {
    let start = Instant::now();
    let params = ParamSet::default();
    let s = 8;
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for (name, g) in [("K16", gen::complete(16)), ("4-regular(16)", gen::random_regular(16, 4, 7))] {
        let t: Vec<usize> = (0..g.n()).collect();
        let opt = exact_sparsest_cut(&g).unwrap().value;
        // Strictly below the optimum no matching round can fail.
        let phi = (opt / int(2)).min(int(1));
        let run = run_game(&g, &t, &phi, s, GameKind::Edge, &params, &[]).unwrap();
        let budget = round_budget(s, &params);
        let bound = (params.round_d as f64 * (s as f64).log2()).ceil() as u32 + 1;
        if run.rounds > budget || budget != bound {
            failures.push(format!("{name}: {} rounds, budget {budget}", run.rounds));
        }
        let GameOutcome::Certificate(cert) = &run.outcome else {
            failures.push(format!("{name}: game ended with a cut below the optimum"));
            continue;
        };
        // Recompute the expansion of H by brute force.
        let check = certify_small_set_expansion(&run.h, run.scale, s, &expansion_target(s, &params), &params);
        let brute = scan_subsets(&run.h, |_, d, k| (k >= 1 && k as usize <= s).then(|| Rational::new(d as i128, k as i128)))
            .map(|(v, _)| v / int(run.scale))
            .unwrap();
        let h = cert.h_expansion.finite().unwrap_or(int(0));
        if !check.exhaustive || !cert.exhaustive || h != brute || check.value != Sparsity::Finite(brute) {
            failures.push(format!("{name}: expansion {h} disagrees with brute force {brute}"));
        }
        let target = expansion_target(s, &params);
        let log_s = (s as f64).log2().max(1.0);
        let c_meas = 1.0 / (to_f64(&h) * log_s);
        if !cert.certified || h < target || c_meas > to_f64(&params.cert_c) {
            failures.push(format!("{name}: expansion {h} below 1/(c·log s), c = {c_meas:.3}"));
        }
        // Certificate arithmetic and the composed embedding.
        let m = int(cert.matchings.max(1) as i128);
        if cert.congestion != m / phi || cert.lower_bound != Sparsity::Finite(h * phi / m) {
            failures.push(format!("{name}: certificate arithmetic"));
        }
        let routes: Vec<_> = run.matchings.iter().flatten().flat_map(|(_, mt)| mt.routes()).collect();
        let matchings = run.matchings.iter().flatten().filter(|(_, mt)| !mt.pairs.is_empty()).count() as u64;
        if matchings != cert.matchings || !routes_within_congestion(&g, &routes, &cert.congestion) {
            failures.push(format!("{name}: composed routes exceed congestion {}", cert.congestion));
        }
        let truth = exact_terminal_expansion(&g, &t, s).unwrap().value;
        if !cert.lower_bound.le(&truth) {
            failures.push(format!("{name}: lower bound {:?} above true expansion {truth}", cert.lower_bound));
        }
        details.push(format!(
            "{name}: {} rounds (budget {budget}), h = {h}, c = {c_meas:.2}, lower bound {} ≤ {truth}",
            run.rounds,
            cert.lower_bound.finite().unwrap_or(int(0))
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs <= 300.0;
    report(4, "game certification", pass, &format!("{}; {secs:.1}s", details.join("; ")));
    assert!(pass, "{failures:?}");
}

// ---------------------------------------------------------------------------
// 5. Entropy potential

#[test]
fn criterion_5_entropy_potential() {
    let start = Instant::now();
    let params = ParamSet::default();
    let fraction = to_f64(&params.potential_fraction);
    let graphs = [
        ("dumbbell(8,8)", gen::dumbbell(8, 8)),
        ("planted(16)", gen::planted_bisection(16, 0.7, 0.05, 5)),
        ("grid(4,4)", gen::grid(4, 4)),
        ("cycle(16)", gen::cycle(16)),
        ("regular(16,3)", gen::random_regular(16, 3, 11)),
        ("connected(14)", gen::random_connected(14, 8, 3)),
    ];
    let mut failures = Vec::new();
    let (mut rounds, mut qualifying) = (0usize, 0usize);
    for (name, g) in &graphs {
        let n = g.n();
        let s = n / 2;
        let t: Vec<usize> = (0..n).collect();
        let opt = exact_sparsest_cut(g).unwrap().value;
        let phi = opt / int(2);
        let oracle_set = match exact_sse(g, s).unwrap().cut {
            oracle::OracleCut::Edge(c) => c.side,
            _ => unreachable!(),
        };
        let other = sparsecut::graph::complement(n, &oracle_set);
        let tracked = vec![oracle_set.clone(), other];
        let run = run_game(g, &t, &phi, s, GameKind::Edge, &params, &tracked).unwrap();
        let ceiling = s as f64 * (s as f64).log2();
        for tr in &run.trackers {
            if tr.history.windows(2).any(|w| w[1] < w[0] - 1e-9) {
                failures.push(format!("{name}: potential decreased"));
            }
            if tr.history.iter().any(|&p| p > ceiling + 1e-9) {
                failures.push(format!("{name}: potential above s log s"));
            }
        }
        for rec in &run.trace {
            rounds += 1;
            for (i, (&q, &gain)) in rec.qualifying.iter().zip(&rec.potential_gains).enumerate() {
                let set = &run.trackers[i % run.trackers.len()].set;
                if q {
                    qualifying += 1;
                    if gain < fraction * set.len() as f64 {
                        failures.push(format!("{name} round {}: gain {gain:.4} below {fraction}·{}", rec.round, set.len()));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs <= 60.0;
    report(
        5,
        "entropy potential",
        pass,
        &format!("{} runs, {rounds} rounds, {qualifying} qualifying tracked rounds, {} failures, {secs:.1}s", graphs.len(), failures.len()),
    );
    assert!(pass, "{failures:?}");
}

// ---------------------------------------------------------------------------
// 6. LP relaxation and rounding

struct SseCase {
    name: String,
    g: Graph,
    x: Vec<u64>,
    s: usize,
    ell: u64,
}

fn sse_cases() -> Vec<SseCase> {
    let mut cases = Vec::new();
    for i in 0..20u64 {
        let mut r = seeded(500 + i);
        let (name, g, planted): (String, Graph, Vec<usize>) = match i % 5 {
            0 => {
                let a = 3 + (i as usize / 5) % 4;
                (format!("dumbbell({a},{})", a + 2), gen::dumbbell(a, a + 2), (0..a).collect())
            }
            1 => {
                let n = 10 + (i as usize / 5) % 5;
                (format!("planted({n})"), gen::planted_bisection(n, 0.8, 0.1, i), (0..n / 2).collect())
            }
            2 => (format!("star_of_cliques(3,{})", 3 + i % 2), gen::star_of_cliques(3, 3 + i as usize % 2), (1..4 + i as usize % 2).collect()),
            3 => {
                let c = 3 + (i as usize / 5) % 2;
                (format!("grid(3,{c})"), gen::grid(3, c), (0..3).collect())
            }
            _ => {
                let n = 9 + (i as usize / 5) % 4;
                (format!("path({n})"), gen::path(n), (0..3 + i as usize % 3).collect())
            }
        };
        let n = g.n();
        assert!(n <= 14);
        // Odd cases use random weights on a random terminal set holding the
        // planted set.
        let x: Vec<u64> = if i % 2 == 0 {
            vec![1; n]
        } else {
            (0..n).map(|v| if planted.contains(&v) || r.gen_bool(0.6) { r.gen_range(1..=3) } else { 0 }).collect()
        };
        let ell = planted.iter().map(|&v| x[v]).sum();
        cases.push(SseCase { name, g, x, s: planted.len(), ell });
    }
    cases
}

/// Minimum `|δ(S)|` over `|S| ≤ s` with `x(S) = ℓ`.
fn sse_lp_optimum(g: &Graph, x: &[u64], s: usize, ell: u64) -> u64 {
    let n = g.n();
    scan_subsets(g, |mask, d, k| {
        let w: u64 = (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| x[v]).sum();
        (k >= 1 && k as usize <= s && w == ell).then_some(d)
    })
    .unwrap()
    .0
}

/// Minimum `|N(L)|` over `L` holding exactly `s` terminals.
fn vertex_lp_optimum(g: &Graph, t: &[usize], s: usize) -> u64 {
    let n = g.n();
    let tmask: u64 = t.iter().map(|&v| 1u64 << v).sum();
    let adj: Vec<u64> = (0..n).map(|v| g.adjacent(v).map(|(u, _)| 1u64 << u).sum()).collect();
    scan_subsets(g, |mask, _, _| {
        if (mask & tmask).count_ones() as usize != s {
            return None;
        }
        let nb = (0..n).filter(|&v| mask >> v & 1 == 1).fold(0u64, |a, v| a | adj[v]) & !mask;
        Some(nb.count_ones() as u64)
    })
    .unwrap()
    .0
}

#[test]
fn criterion_6_lp_rounding() {
    let start = Instant::now();
    let params = ParamSet::default();
    let tol = params.lp_tol;
    let mut failures = Vec::new();
    let (mut roundings, mut ball_checks, mut tightest) = (0u64, 0u64, 0.0f64);
    for case in sse_cases() {
        let SseCase { name, g, x, s, ell } = case;
        let t: Vec<usize> = (0..g.n()).filter(|&v| x[v] > 0).collect();
        let inst = build_sse_lp(&g, &t, &x, s, ell).unwrap();
        let sol = inst.lp.solve(tol).unwrap();
        let opt = sse_lp_optimum(&g, &x, s, ell);
        if sol.objective > opt as f64 + tol * g.n() as f64 {
            failures.push(format!("{name}: LP {} above optimum {opt}", sol.objective));
        }
        let factor = 200.0 * clamped_ln(ell as f64);
        for seed in 0..5 {
            let Ok(out) = round_sse(&g, &inst, &sol, tol, &mut seeded(seed), repetitions(g.n(), params.c_rep)) else { continue };
            roundings += 1;
            ball_checks += out.ball_checks;
            let weight: u64 = out.set.iter().map(|&v| x[v]).sum();
            let boundary = g.boundary_size(&out.set).unwrap();
            let ok_size = out.set.len() <= 10 * s;
            let ok_weight = 10 * weight >= ell && weight <= 3 * ell;
            let ok_cut = boundary as f64 * ell as f64 <= factor * out.lp_value * weight as f64;
            if out.lp_value > 0.0 {
                tightest = tightest.max(boundary as f64 * ell as f64 / (factor * out.lp_value * weight as f64));
            }
            if !(ok_size && ok_weight && ok_cut) || out.ball_violations > 0 || !out.violations.is_empty() {
                failures.push(format!(
                    "{name} seed {seed}: |Y| = {}, x(Y) = {weight}, δ = {boundary}, LP = {}, balls {} {:?}",
                    out.set.len(),
                    out.lp_value,
                    out.ball_violations,
                    out.violations
                ));
            }
        }
    }

    // Acceptance rate of single attempts on one fixed instance.
    let g = gen::dumbbell(6, 6);
    let n = g.n();
    let x = vec![1u64; n];
    let inst = build_sse_lp(&g, &(0..n).collect::<Vec<_>>(), &x, 6, 6).unwrap();
    let sol = inst.lp.solve(tol).unwrap();
    let iters = 10_000;
    let (hits, balls) = sse_acceptance(&g, &inst, &sol, tol, &mut seeded(42), iters);
    let rate = hits as f64 / iters as f64;
    if rate < 1.0 / (400.0 * n as f64) || balls > 0 {
        failures.push(format!("acceptance rate {rate} below 1/(400n), {balls} ball violations"));
    }

    // Vertex variant.
    let vertex_cases: Vec<(&str, Graph, Vec<usize>, usize)> = vec![
        ("path(9)", gen::path(9), (0..9).collect(), 4),
        ("star_of_cliques(2,4)", gen::star_of_cliques(2, 4), (0..9).collect(), 4),
        ("star_of_cliques(3,3)", gen::star_of_cliques(3, 3), (0..10).collect(), 3),
        ("grid(3,4)", gen::grid(3, 4), vec![0, 3, 4, 7, 8, 11], 3),
        ("dumbbell(4,4)", gen::dumbbell(4, 4), (0..8).collect(), 4),
        ("cycle(10)", gen::cycle(10), (0..10).collect(), 4),
        ("tree(12)", gen::random_tree(12, 9), (0..12).collect(), 5),
        ("planted(12)", gen::planted_bisection(12, 0.7, 0.1, 2), (0..12).collect(), 6),
    ];
    let mut vertex_roundings = 0;
    for (name, g, t, s) in vertex_cases {
        let inst = build_vertex_lp(&g, &t, s).unwrap();
        let sol = inst.lp.solve(tol).unwrap();
        let opt = vertex_lp_optimum(&g, &t, s);
        if sol.objective > opt as f64 + tol * g.n() as f64 {
            failures.push(format!("{name}: vertex LP {} above optimum {opt}", sol.objective));
        }
        for seed in 0..5 {
            let Ok(out) = round_vertex(&g, &inst, &sol, tol, &mut seeded(seed), repetitions(g.n(), params.c_rep)) else { continue };
            vertex_roundings += 1;
            ball_checks += out.ball_checks;
            let c = &out.cut;
            let in_t = |v: &usize| t.binary_search(v).is_ok();
            let hit = c.left.iter().filter(|v| in_t(v)).count() as f64;
            let far = c.right.iter().filter(|v| in_t(v)).count();
            let factor = 2000.0 * clamped_ln(s as f64);
            let sep = c.separator.len() as f64;
            // f(U) = |U ∩ T| − κ|N(U)| with κ = s / (factor · LP).
            let f = if sep == 0.0 { hit } else { hit - s as f64 / (factor * out.lp_value) * sep };
            let nb = g.neighbors(&c.left).unwrap();
            if !c.verify(&g) || nb != c.separator || f <= 0.0 || 4 * far < t.len() || out.ball_violations > 0 {
                failures.push(format!("{name} seed {seed}: f = {f}, far = {far}, balls {}", out.ball_violations));
            }
            if sep * s as f64 > factor * out.lp_value * hit {
                failures.push(format!("{name} seed {seed}: |N(U)| = {sep} above factor·LP·|U∩T|/s"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs <= 600.0;
    report(
        6,
        "LP relaxation and rounding",
        pass,
        &format!(
            "20 edge instances ({roundings} roundings, tightest cut ratio {tightest:.4}), {vertex_roundings} vertex roundings, {ball_checks} ball checks, acceptance {hits}/{iters} (floor {:.5}), {} failures, {secs:.1}s",
            1.0 / (400.0 * n as f64),
            failures.len()
        ),
    );
    assert!(pass, "{failures:?}");
}

// ---------------------------------------------------------------------------
// 7. Pipelines against the oracle corpus

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

fn corpus() -> Vec<(&'static str, Graph)> {
    let mut weighted = gen::random_connected(12, 6, 21);
    weighted.set_weights((0..12).map(|v| 1 + (v as u64 * 7) % 4).collect());
    vec![
        ("dumbbell_4_4", gen::dumbbell(4, 4)),
        ("dumbbell_5_6", gen::dumbbell(5, 6)),
        ("path_8", gen::path(8)),
        ("cycle_10", gen::cycle(10)),
        ("grid_3_4", gen::grid(3, 4)),
        ("star_of_cliques_3_4", gen::star_of_cliques(3, 4)),
        ("planted_14", gen::planted_bisection(14, 0.7, 0.1, 4)),
        ("tree_12", gen::random_tree(12, 8)),
        ("connected_12", weighted),
        ("regular_12_3", gen::random_regular(12, 3, 2)),
        ("complete_6", gen::complete(6)),
        ("star_9", gen::star(8)),
    ]
}

/// Oracle answers for one corpus graph, frozen on disk next to the graph.
fn oracle_answers(g: &Graph) -> serde_json::Value {
    let n = g.n();
    let y = corpus_weights(g);
    let vertex = match exact_vertex_sparsest(g) {
        Ok(a) => serde_json::Value::String(fmt_rational(&a.value)),
        Err(_) => serde_json::Value::Null,
    };
    serde_json::json!({
        "n": n,
        "sparsest": fmt_rational(&exact_sparsest_cut(g).unwrap().value),
        "sse_quarter": fmt_rational(&exact_sse(g, (n / 4).max(1)).unwrap().value),
        "sse_half": fmt_rational(&exact_sse(g, n / 2).unwrap().value),
        "vertex_sparsest": vertex,
        "weighted_unbalanced": fmt_rational(&exact_weighted_unbalanced(g, &y, &rat(1, 4), n / 2).unwrap().value),
    })
}

fn corpus_weights(g: &Graph) -> Vec<u64> {
    g.weights().map(|w| w.to_vec()).unwrap_or_else(|| vec![1; g.n()])
}

/// Loads the frozen fixtures, writing them first when `SPARSECUT_BLESS` is
/// set. Every graph must round-trip and every answer must be reproduced.
fn load_corpus() -> Vec<(String, Graph, serde_json::Value)> {
    let dir = fixture_dir();
    let bless = std::env::var_os("SPARSECUT_BLESS").is_some();
    corpus()
        .into_iter()
        .map(|(name, g)| {
            let gpath = dir.join(format!("{name}.graph"));
            let apath = dir.join(format!("{name}.json"));
            if bless {
                std::fs::create_dir_all(&dir).unwrap();
                std::fs::write(&gpath, write_graph(&g)).unwrap();
                std::fs::write(&apath, to_json(&oracle_answers(&g))).unwrap();
            }
            let text = std::fs::read_to_string(&gpath).unwrap_or_else(|e| panic!("{}: {e}", gpath.display()));
            let loaded = parse_graph(&text).unwrap();
            assert_eq!(write_graph(&loaded), write_graph(&g), "{name}: fixture graph differs from its generator");
            let frozen: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&apath).unwrap()).unwrap();
            assert_eq!(frozen, oracle_answers(&loaded), "{name}: oracle disagrees with frozen answers");
            (name.to_string(), loaded, frozen)
        })
        .collect()
}

fn parse_frozen(v: &serde_json::Value, key: &str) -> Option<Rational> {
    v[key].as_str().map(|s| sparsecut::rational::parse_rational(s).unwrap())
}

/// Recomputes a result's claimed value from its cut alone.
fn recomputed_value(g: &Graph, res: &ApproxResult) -> Option<Rational> {
    let claim = res.claim.as_ref()?;
    Some(match (res.cut.as_ref()?, claim.measure) {
        (FoundCut::Edge(c), Measure::Expansion) => Rational::new(g.boundary_size(&c.side).ok()? as i128, c.side.len() as i128),
        (FoundCut::Edge(c), Measure::Sparsity) => {
            let k = c.side.len().min(g.n() - c.side.len());
            Rational::new(g.boundary_size(&c.side).ok()? as i128, k as i128)
        }
        (FoundCut::Edge(c), Measure::Boundary) => int(g.boundary_size(&c.side).ok()? as i128),
        (FoundCut::Vertex(c), Measure::VertexSparsity) => {
            if c.left.iter().any(|&u| g.adjacent(u).any(|(v, _)| c.right.binary_search(&v).is_ok())) {
                return None;
            }
            let k = c.separator.len();
            Rational::new(k as i128, (k + c.left.len().min(c.right.len())) as i128)
        }
        _ => return None,
    })
}

#[test]
fn criterion_7_pipelines_against_oracle() {
    let start = Instant::now();
    let params = ParamSet::default();
    let mut failures = Vec::new();
    let (mut runs, mut bounded, mut worst) = (0u32, 0u32, 0.0f64);
    let mut check = |name: &str, what: &str, g: &Graph, res: ApproxResult, exists: bool, optimum: Option<Rational>| {
        runs += 1;
        let v = pipelines::verify(g, &res).unwrap();
        let tag = format!("{name}/{what}");
        if !res.claims_hold(g) || !v.claims_hold {
            failures.push(format!("{tag}: claims do not hold"));
        }
        if let Some(claim) = &res.claim {
            if recomputed_value(g, &res) != Some(claim.value) || claim.value > claim.bound {
                failures.push(format!("{tag}: recomputed value differs from claim {}", claim.value));
            }
        }
        if exists && res.status == Status::NoSuchSet {
            failures.push(format!("{tag}: NoSuchSet although the oracle found a set"));
        }
        if let Some(opt) = optimum {
            if v.optimum != opt && res.status == Status::Found {
                failures.push(format!("{tag}: verification optimum {} differs from frozen {opt}", v.optimum));
            }
        }
        if v.lower_bound_sound == Some(false) {
            failures.push(format!("{tag}: lower bound above the optimum"));
        }
        if res.status == Status::Found {
            match (v.ratio_f64, v.ratio_bound_f64) {
                (Some(r), Some(b)) => {
                    bounded += 1;
                    worst = worst.max(r / b);
                    if r > b {
                        failures.push(format!("{tag}: ratio {r} above bound {b}"));
                    }
                }
                _ => failures.push(format!("{tag}: no ratio bound available")),
            }
        }
    };
    for (name, g, frozen) in load_corpus() {
        let n = g.n();
        for (key, s) in [("sse_quarter", (n / 4).max(1)), ("sse_half", n / 2)] {
            let opt = parse_frozen(&frozen, key).unwrap();
            for phi in [opt, opt * int(2)] {
                if phi > int(0) {
                    check(&name, &format!("sse(s={s},phi={phi})"), &g, pipelines::sse_log_k(&g, &phi, s, &params).unwrap(), true, Some(opt));
                }
            }
        }
        let sparsest = parse_frozen(&frozen, "sparsest");
        check(&name, "sparsest", &g, pipelines::sparsest_cut_cut_matching(&g, &params).unwrap(), true, sparsest);
        let vopt = parse_frozen(&frozen, "vertex_sparsest");
        let exists = vopt.is_some();
        check(&name, "vertex-lp", &g, pipelines::vertex_sparsest_cut_lp(&g, &params).unwrap(), exists, vopt);
        check(&name, "vertex-game", &g, pipelines::vertex_sparsest_cut_cut_matching(&g, &params).unwrap(), exists, vopt);
        let y = corpus_weights(&g);
        let wopt = parse_frozen(&frozen, "weighted_unbalanced");
        let res = pipelines::weighted_unbalanced_cut(&g, &y, &rat(1, 4), &rat(1, 2), &params).unwrap();
        check(&name, "weighted", &g, res, true, wopt);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs <= 900.0;
    report(
        7,
        "pipelines against oracle",
        pass,
        &format!("{runs} runs, {bounded} ratios checked, worst ratio/bound {worst:.4}, {} failures, {secs:.1}s", failures.len()),
    );
    assert!(pass, "{failures:?}");
}

// ---------------------------------------------------------------------------
// 8. Determinism

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    let params = ParamSet { seed: 17, ..ParamSet::default() };
    let g = gen::planted_bisection(12, 0.7, 0.1, 9);
    let y: Vec<u64> = (0..12).map(|v| 1 + v % 3).collect();
    let run_all = || -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |cmd: &str, r: ApproxResult| out.push(to_json(&Envelope::new(cmd, &params, &r)));
        push("sse", pipelines::sse_log_k(&g, &rat(1, 2), 6, &params).unwrap());
        push("sparsest-cut", pipelines::sparsest_cut_cut_matching(&g, &params).unwrap());
        push("vertex-sparsest", pipelines::vertex_sparsest_cut_lp(&g, &params).unwrap());
        push("vertex-sparsest-game", pipelines::vertex_sparsest_cut_cut_matching(&g, &params).unwrap());
        push("unbalanced", pipelines::weighted_unbalanced_cut(&g, &y, &rat(1, 3), &rat(1, 2), &params).unwrap());
        let t: Vec<usize> = (0..12).collect();
        let run = cut_matching::run_game(&g, &t, &rat(1, 4), 6, GameKind::Edge, &params, &[t[..6].to_vec()]).unwrap();
        out.push(to_json(&run) + &run.trace_jsonl());
        out
    };
    let (first, second) = (run_all(), run_all());
    let identical = first.iter().zip(&second).filter(|(a, b)| a == b).count();
    let bytes: usize = first.iter().map(|s| s.len()).sum();
    let secs = start.elapsed().as_secs_f64();
    let pass = identical == first.len() && first.len() == second.len() && secs <= 60.0;
    report(8, "determinism", pass, &format!("{identical}/{} outputs byte-identical ({bytes} bytes), {secs:.1}s", first.len()));
    assert!(pass);
}

