//! End-to-end approximation algorithms built from sample sets, the LP
//! rounding and the cut-matching game.
//!
//! Every pipeline walks a grid of guesses, keeps a transcript of each point,
//! and returns the best cut whose claimed bounds were recomputed from the cut
//! itself. Guesses that can be ruled out exactly (an LP value above what a
//! qualifying set would allow) count as evidence for `NoSuchSet`.

use crate::cut_matching::{run_game, Certificate, GameKind, GameOutcome};
use crate::error::{Error, Result};
use crate::graph::{EdgeCut, Graph, VertexCut};
use crate::lp::{build_sse_lp, build_vertex_lp, repetitions, round_sse, round_vertex, LpSolution};
use crate::oracle;
use crate::params::ParamSet;
use crate::rational::{clamped_ln, fmt_rational, from_f64_up, int, pow2_at_least, rat, to_f64, Rational, Sparsity};
use crate::sample_sets::{edge_sample_set, vertex_sample_set, weighted_sample_set, SampleKind, SampleSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Largest graph the LP pipelines accept; the relaxation has `Θ(n³)` rows.
pub const LP_SIZE_BOUND: usize = 24;

/// Guess ranges up to this many integers are walked exhaustively; longer
/// ranges use powers of two.
pub const EXHAUSTIVE_GUESSES: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    SmallSetExpansion,
    SparsestCut,
    VertexSparsestLp,
    VertexSparsestGame,
    WeightedUnbalanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Found,
    NoSuchSet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FoundCut {
    Edge(EdgeCut),
    Vertex(VertexCut),
}

/// Quantity a claim bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// `|δ(S)| / |S|`.
    Expansion,
    /// `|δ(S)| / min(|S|, |S̄|)`.
    Sparsity,
    /// `|C| / (|C| + min(|L|, |R|))`.
    VertexSparsity,
    /// `|δ(S)|`.
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub measure: Measure,
    #[serde(with = "crate::rational::serde_rational")]
    pub value: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub bound: Rational,
    /// `|S|` for edge cuts, `|L ∪ C|` of the smaller side for vertex cuts.
    pub size: u64,
    pub size_bound: Option<u64>,
    pub weight: Option<u64>,
    #[serde(with = "crate::rational::serde_rational::option")]
    pub weight_bound: Option<Rational>,
    /// Constants and guess values the bounds were computed from.
    pub constants: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessOutcome {
    /// Produced a cut that passed its claim check.
    Candidate,
    /// Same terminal set as an earlier grid point.
    Reused,
    Infeasible,
    /// LP value too large for a qualifying set at this guess.
    Excluded,
    /// Randomized step failed on every retry seed.
    Failed,
    /// Produced a cut whose claimed bound did not hold; discarded.
    ClaimFailed,
    Certificate,
    /// Grid point only records a sample set; its guesses follow.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GuessRecord {
    #[serde(with = "crate::rational::serde_rational::option")]
    pub phi: Option<Rational>,
    pub k: Option<u64>,
    pub s: Option<usize>,
    pub ell: Option<u64>,
    pub sample: Option<SampleKind>,
    pub terminals: usize,
    pub outcome: GuessOutcome,
    pub attempts: u32,
    pub lp_value_f64: Option<f64>,
    #[serde(with = "crate::rational::serde_rational::option")]
    pub value: Option<Rational>,
    pub note: Option<String>,
}

impl GuessRecord {
    fn new(outcome: GuessOutcome) -> GuessRecord {
        GuessRecord {
            phi: None,
            k: None,
            s: None,
            ell: None,
            sample: None,
            terminals: 0,
            outcome,
            attempts: 0,
            lp_value_f64: None,
            value: None,
            note: None,
        }
    }
}

/// Inputs echoed into the result so it can be re-verified on its own.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Inputs {
    #[serde(with = "crate::rational::serde_rational::option")]
    pub phi: Option<Rational>,
    pub s: Option<usize>,
    #[serde(with = "crate::rational::serde_rational::option")]
    pub tau: Option<Rational>,
    #[serde(with = "crate::rational::serde_rational::option")]
    pub rho_frac: Option<Rational>,
    pub y: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    #[serde(with = "crate::rational::serde_rational")]
    pub optimum: Rational,
    pub claims_hold: bool,
    /// `None` when no lower bound was claimed.
    pub lower_bound_sound: Option<bool>,
    /// For `NoSuchSet`: whether the oracle agrees nothing qualifies.
    pub no_such_set_sound: Option<bool>,
    pub ratio_f64: Option<f64>,
    pub ratio_bound_f64: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxResult {
    pub problem: Problem,
    pub status: Status,
    pub seed: u64,
    pub inputs: Inputs,
    pub cut: Option<FoundCut>,
    pub claim: Option<Claim>,
    /// Lower bound on the optimum from a game certificate, when one applies.
    pub lower_bound: Option<Sparsity>,
    pub certificate: Option<Certificate>,
    pub transcript: Vec<GuessRecord>,
    pub warnings: Vec<String>,
    pub verification: Option<Verification>,
}

impl ApproxResult {
    fn empty(problem: Problem, params: &ParamSet, inputs: Inputs) -> ApproxResult {
        ApproxResult {
            problem,
            status: Status::NoSuchSet,
            seed: params.seed,
            inputs,
            cut: None,
            claim: None,
            lower_bound: None,
            certificate: None,
            transcript: vec![],
            warnings: vec![],
            verification: None,
        }
    }

    /// Recomputes every claimed quantity from the cut.
    pub fn claims_hold(&self, g: &Graph) -> bool {
        match (&self.cut, &self.claim) {
            (None, None) => self.status == Status::NoSuchSet,
            (Some(cut), Some(claim)) => self.status == Status::Found && claim_holds(g, cut, claim, self.inputs.y.as_deref()),
            _ => false,
        }
    }
}

fn claim_holds(g: &Graph, cut: &FoundCut, claim: &Claim, y: Option<&[u64]>) -> bool {
    let n = g.n();
    let (value, size, side): (Rational, u64, Vec<usize>) = match cut {
        FoundCut::Edge(c) => {
            let Ok(fresh) = EdgeCut::new(g, &c.side) else { return false };
            if fresh.boundary_size != c.boundary_size || fresh.sparsity != c.sparsity {
                return false;
            }
            let k = c.side.len() as i128;
            let d = fresh.boundary_size as i128;
            let value = match claim.measure {
                Measure::Expansion => Rational::new(d, k),
                Measure::Sparsity => fresh.sparsity,
                Measure::Boundary => int(d),
                Measure::VertexSparsity => return false,
            };
            (value, k as u64, c.side.clone())
        }
        FoundCut::Vertex(c) => {
            let Ok(fresh) = VertexCut::new(g, &c.left, &c.separator, &c.right) else { return false };
            if claim.measure != Measure::VertexSparsity || fresh.sparsity != c.sparsity {
                return false;
            }
            let small = c.left.len().min(c.right.len()) + c.separator.len();
            (fresh.sparsity, small as u64, vec![])
        }
    };
    if value != claim.value || value > claim.bound || size != claim.size {
        return false;
    }
    if let Some(b) = claim.size_bound {
        if size > b {
            return false;
        }
    }
    if let Some(wb) = &claim.weight_bound {
        let Some(y) = y else { return false };
        let w: u64 = side.iter().map(|&v| y[v]).sum();
        if claim.weight != Some(w) || int(w as i128) < *wb {
            return false;
        }
    }
    side.iter().all(|&v| v < n)
}

/// Seed for one randomized step, mixed from the run seed, a grid tag and the
/// attempt number.
fn step_seed(seed: u64, tag: u64, attempt: u32) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (attempt as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn log_factor(x: f64) -> Rational {
    from_f64_up(clamped_ln(x))
}

/// Powers of two from 1 up to and including the first one `≥ hi`.
fn pow2_grid(hi: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    while *out.last().unwrap() < hi {
        let next = out.last().unwrap() * 2;
        out.push(next);
    }
    out
}

/// Integers in `[lo, hi]` when there are few, otherwise `lo`, `hi` and the
/// powers of two between them.
fn value_grid(lo: u64, hi: u64) -> Vec<u64> {
    if lo > hi {
        return vec![];
    }
    if hi - lo < EXHAUSTIVE_GUESSES {
        return (lo..=hi).collect();
    }
    let mut out: Vec<u64> = pow2_grid(hi).into_iter().filter(|&p| p > lo && p < hi).collect();
    out.push(lo);
    out.push(hi);
    out.sort_unstable();
    out
}

fn check_lp_size(n: usize) -> Result<()> {
    if n > LP_SIZE_BOUND {
        Err(Error::SizeBound { n, bound: LP_SIZE_BOUND })
    } else {
        Ok(())
    }
}

fn sample_record(phi: &Rational, k: u64, ss: &SampleSet, reused: bool) -> GuessRecord {
    let mut r = GuessRecord::new(if reused { GuessOutcome::Reused } else { GuessOutcome::Sampled });
    r.phi = Some(*phi);
    r.k = Some(k);
    r.sample = Some(ss.kind);
    r.terminals = ss.terminals.len();
    r.note = ss.fallback_reason.clone();
    r
}

/// Dense weight vector of a sample set.
fn dense_weights(n: usize, ss: &SampleSet) -> Vec<u64> {
    let mut x = vec![0u64; n];
    for (&v, &w) in ss.terminals.iter().zip(&ss.weights) {
        x[v] = w;
    }
    x
}

struct Candidate {
    cut: FoundCut,
    claim: Claim,
}

impl Candidate {
    fn key(&self) -> (Rational, u64, Vec<usize>) {
        let side = match &self.cut {
            FoundCut::Edge(c) => c.side.clone(),
            FoundCut::Vertex(c) => c.separator.clone(),
        };
        (self.claim.value, self.claim.size, side)
    }
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.key() < b.key()
}

fn merge(best: &mut Option<Candidate>, c: Candidate) {
    if best.as_ref().map_or(true, |b| better(&c, b)) {
        *best = Some(c);
    }
}

/// Merges a guess's candidates; a `None` marks a cut whose claim failed.
fn record_candidates(rec: &mut GuessRecord, cands: Vec<Option<Candidate>>, best: &mut Option<Candidate>) {
    let mut local: Option<Candidate> = None;
    for c in cands {
        match c {
            Some(c) => merge(&mut local, c),
            None => rec.outcome = GuessOutcome::ClaimFailed,
        }
    }
    if let Some(c) = local {
        rec.value = Some(c.claim.value);
        merge(best, c);
    }
}

fn finish(mut res: ApproxResult, g: &Graph, best: Option<Candidate>) -> Result<ApproxResult> {
    if let Some(c) = best {
        res.status = Status::Found;
        res.cut = Some(c.cut);
        res.claim = Some(c.claim);
    }
    if !res.claims_hold(g) {
        return Err(Error::Precondition("internal: returned claim does not hold".into()));
    }
    Ok(res)
}

/// One LP guess of the edge rounding: solve, rule out, round with retries.
struct SseGuess<'a> {
    g: &'a Graph,
    ss: &'a SampleSet,
    x: &'a [u64],
    s: usize,
    ell: u64,
    /// LP values above this rule the guess out.
    exclude_above: Option<f64>,
    tag: u64,
}

struct SseGuessOutput {
    record: GuessRecord,
    consistent: bool,
    /// `(Y, LP value, rounding factor)` from every successful seed.
    sets: Vec<(Vec<usize>, f64, f64)>,
}

impl SseGuess<'_> {
    fn run(&self, params: &ParamSet) -> Result<SseGuessOutput> {
        let mut rec = GuessRecord::new(GuessOutcome::Infeasible);
        rec.s = Some(self.s);
        rec.ell = Some(self.ell);
        rec.sample = Some(self.ss.kind);
        rec.terminals = self.ss.terminals.len();
        let inst = build_sse_lp(self.g, &self.ss.terminals, self.x, self.s, self.ell)?;
        let sol: LpSolution = match inst.lp.solve(params.lp_tol) {
            Ok(sol) => sol,
            Err(Error::Infeasible(_)) => return Ok(SseGuessOutput { record: rec, consistent: false, sets: vec![] }),
            Err(e) => return Err(e),
        };
        rec.lp_value_f64 = Some(sol.objective);
        if let Some(limit) = self.exclude_above {
            if sol.objective > limit + params.lp_tol * self.g.n() as f64 {
                rec.outcome = GuessOutcome::Excluded;
                return Ok(SseGuessOutput { record: rec, consistent: false, sets: vec![] });
            }
        }
        // Every seed is rounded and the results min-merged by the caller.
        let reps = repetitions(self.g.n(), params.c_rep);
        let mut sets = Vec::new();
        let mut notes = Vec::new();
        for attempt in 0..params.retries.max(1) {
            rec.attempts = attempt + 1;
            let mut rng = ChaCha8Rng::seed_from_u64(step_seed(params.seed, self.tag, attempt));
            match round_sse(self.g, &inst, &sol, params.lp_tol, &mut rng, reps) {
                Ok(r) => {
                    notes.extend(r.violations);
                    sets.push((r.set, r.lp_value, r.factor));
                }
                Err(Error::RandomizedFailure(m)) => notes.push(m),
                Err(e) => return Err(e),
            }
        }
        notes.sort();
        notes.dedup();
        rec.note = (!notes.is_empty()).then(|| notes.join("; "));
        rec.outcome = if sets.is_empty() { GuessOutcome::Failed } else { GuessOutcome::Candidate };
        Ok(SseGuessOutput { record: rec, consistent: true, sets })
    }
}

/// Small-set expansion with an `O(log k)` factor: finds `S′` with
/// `|S′| ≤ 10s` and `|δ(S′)|/|S′|` within the rounding factor of `φ`, or
/// proves through the LP that no `S` with `|S| ≤ s`, `|δ(S)| ≤ φ|S|` exists.
pub fn sse_log_k(g: &Graph, phi: &Rational, s: usize, params: &ParamSet) -> Result<ApproxResult> {
    params.validate()?;
    let n = g.n();
    if *phi <= int(0) {
        return Err(Error::InvalidParameter("phi must be positive".into()));
    }
    if s < 1 || 2 * s > n {
        return Err(Error::Precondition(format!("need 1 ≤ s ≤ n/2, got s = {s}, n = {n}")));
    }
    check_lp_size(n)?;
    let inputs = Inputs { phi: Some(*phi), s: Some(s), ..Inputs::default() };
    let mut res = ApproxResult::empty(Problem::SmallSetExpansion, params, inputs);

    // One sample set per guessed k; identical sets are solved once.
    let mut sets: Vec<(u64, SampleSet)> = Vec::new();
    for k in pow2_grid(pow2_at_least(&(phi * int(s as i128)))) {
        let phi1 = params.c * phi * log_factor(k as f64);
        let ss = edge_sample_set(g, &params.eps, &phi1, params)?;
        let reused = sets.iter().any(|(_, o)| o.terminals == ss.terminals && o.weights == ss.weights);
        res.transcript.push(sample_record(&phi1, k, &ss, reused));
        if !reused {
            sets.push((k, ss));
        }
    }

    let mut guesses = Vec::new();
    let xs: Vec<Vec<u64>> = sets.iter().map(|(_, ss)| dense_weights(n, ss)).collect();
    for (i, (_, ss)) in sets.iter().enumerate() {
        let total = ss.total_weight();
        // A qualifying S has x(S) ≥ (1 − g)|T||S|/n and x(S) ≤ (1 + g)|T|s/n.
        let scale = int(total as i128) / int(n as i128);
        let hi = ((int(1) + ss.guarantee) * scale * int(s as i128)).floor().to_integer().min(total as i128) as u64;
        let low_frac = int(1) - ss.guarantee;
        let exclude = if low_frac > int(0) { Some(to_f64(&(phi / (low_frac * scale)))) } else { None };
        for ell in value_grid(1, hi.max(1)) {
            let exclude_above = exclude.map(|e| e * ell as f64);
            guesses.push(SseGuess { g, ss, x: &xs[i], s, ell, exclude_above, tag: (i as u64) << 32 | ell });
        }
    }
    let outputs: Vec<Result<SseGuessOutput>> = guesses.par_iter().map(|q| q.run(params)).collect();

    let mut best = None;
    let mut consistent = false;
    for (q, out) in guesses.iter().zip(outputs) {
        let mut out = out?;
        consistent |= out.consistent;
        let found = std::mem::take(&mut out.sets);
        let cands: Vec<Option<Candidate>> = found.iter().map(|(set, lp, f)| sse_candidate(g, q, set, *lp, *f, phi)).collect();
        record_candidates(&mut out.record, cands, &mut best);
        res.transcript.push(out.record);
    }
    if best.is_none() && consistent {
        return Err(Error::RandomizedFailure("every consistent guess failed to round".into()));
    }
    finish(res, g, best)
}

fn sse_candidate(g: &Graph, q: &SseGuess, set: &[usize], lp_value: f64, factor: f64, phi: &Rational) -> Option<Candidate> {
    let n = g.n();
    if set.is_empty() || set.len() >= n {
        return None;
    }
    let cut = EdgeCut::new(g, set).ok()?;
    let k = set.len() as u64;
    let xw: u64 = set.iter().map(|&v| q.x[v]).sum();
    let value = Rational::new(cut.boundary_size as i128, k as i128);
    // |δ(Y)| ≤ factor · LP · x(Y) / ℓ, divided by |Y|.
    let bound = from_f64_up(factor * lp_value * xw as f64 / (q.ell as f64 * k as f64) + 1e-9);
    if value > bound {
        return None;
    }
    let mut constants = BTreeMap::new();
    constants.insert("rounding_factor".into(), format!("{factor:.6}"));
    constants.insert("lp_value".into(), format!("{lp_value:.9}"));
    constants.insert("s".into(), q.s.to_string());
    constants.insert("ell".into(), q.ell.to_string());
    constants.insert("phi".into(), fmt_rational(phi));
    constants.insert("size_factor".into(), "10".into());
    constants.insert("ratio_to_phi".into(), format!("{:.6}", to_f64(&(value / phi))));
    let claim = Claim { measure: Measure::Expansion, value, bound, size: k, size_bound: Some(10 * q.s as u64), weight: None, weight_bound: None, constants };
    Some(Candidate { cut: FoundCut::Edge(cut), claim })
}

/// Result of one game at a fixed target.
struct GameStep {
    cut_side: Option<Vec<usize>>,
    vertex_cut: Option<VertexCut>,
    certificate: Option<Certificate>,
}

fn play(g: &Graph, ss: &SampleSet, target: &Rational, s: usize, kind: GameKind, params: &ParamSet, rec: &mut GuessRecord) -> Result<GameStep> {
    let run = run_game(g, &ss.terminals, target, s, kind, params, &[])?;
    rec.attempts = run.rounds;
    Ok(match run.outcome {
        GameOutcome::EdgeCut(c) => {
            rec.outcome = GuessOutcome::Candidate;
            GameStep { cut_side: Some(c.side), vertex_cut: None, certificate: None }
        }
        GameOutcome::VertexCut(c) => {
            rec.outcome = GuessOutcome::Candidate;
            GameStep { cut_side: None, vertex_cut: Some(c), certificate: None }
        }
        GameOutcome::Certificate(c) => {
            rec.outcome = GuessOutcome::Certificate;
            rec.note = Some(format!("lower bound {}", c.lower_bound));
            GameStep { cut_side: None, vertex_cut: None, certificate: Some(c) }
        }
    })
}

/// Keeps the certificate with the largest lower bound, and the target it was
/// obtained at.
fn merge_cert(best: &mut Option<(Certificate, Rational)>, c: Certificate, target: Rational) {
    if best.as_ref().map_or(true, |b| c.lower_bound > b.0.lower_bound) {
        *best = Some((c, target));
    }
}

const SEARCH_STEPS: usize = 64;

/// Sparsest cut through the cut-matching game. Targets move by factors of
/// two until a cut and a certificate sit on adjacent grid points, which
/// brackets the optimum between the certificate's lower bound and the cut.
pub fn sparsest_cut_cut_matching(g: &Graph, params: &ParamSet) -> Result<ApproxResult> {
    params.validate()?;
    let n = g.n();
    if n < 2 {
        return Err(Error::Precondition("need at least two vertices".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut res = ApproxResult::empty(Problem::SparsestCut, params, Inputs::default());
    let mut best: Option<Candidate> = None;
    let mut cert: Option<(Certificate, Rational)> = None;
    let mut phi = int(2 * pow2_at_least(&int(g.max_degree() as i128)) as i128);
    for _ in 0..SEARCH_STEPS {
        let (found, certified) = sparsest_step(g, &phi, params, &mut res, &mut best, &mut cert)?;
        if found {
            if cert.is_some() {
                break;
            }
            phi /= int(2);
        } else if certified {
            if best.is_some() {
                break;
            }
            phi *= int(2);
        }
    }
    if best.is_none() {
        return Err(Error::RandomizedFailure("target search ended without a cut".into()));
    }
    if let Some((c, _)) = cert {
        res.lower_bound = Some(c.lower_bound.clone());
        res.certificate = Some(c);
    }
    finish(res, g, best)
}

/// Runs every distinct sample set at target `phi`. Returns whether a cut was
/// found and whether a certificate was produced.
fn sparsest_step(
    g: &Graph,
    phi: &Rational,
    params: &ParamSet,
    res: &mut ApproxResult,
    best: &mut Option<Candidate>,
    cert: &mut Option<(Certificate, Rational)>,
) -> Result<(bool, bool)> {
    let n = g.n();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let (mut found, mut certified) = (false, false);
    let kmax = pow2_at_least(&(phi * int(n as i128 / 2)));
    for k in pow2_grid(kmax) {
        let lk = log_factor(k as f64);
        let phi2 = params.inner_d * phi * lk * lk;
        let ss = edge_sample_set(g, &params.eps, &phi2, params)?;
        if seen.contains(&ss.terminals) {
            res.transcript.push(sample_record(&phi2, k, &ss, true));
            continue;
        }
        seen.push(ss.terminals.clone());
        let fallback = ss.kind == SampleKind::Fallback;
        // Terminal sparsity φ·n/|T| maps back to sparsity about φ.
        let target = if fallback {
            *phi
        } else {
            let t = phi * int(n as i128) / int(ss.terminals.len() as i128);
            let p = pow2_at_least(&t);
            if int(p as i128) == t { t } else { int(p as i128) / int(2) }
        };
        let mut rec = sample_record(&target, k, &ss, false);
        let step = play(g, &ss, &target, (ss.terminals.len() / 2).max(1), GameKind::Edge, params, &mut rec)?;
        if let Some(side) = step.cut_side {
            found = true;
            let cut = EdgeCut::new(g, &side)?;
            let bound = if fallback { target } else { target * int(ss.terminals.len() as i128) / (int(n as i128) * (int(1) - ss.guarantee)) };
            rec.value = Some(cut.sparsity);
            if cut.sparsity <= bound {
                let mut constants = BTreeMap::new();
                constants.insert("target".into(), fmt_rational(&target));
                constants.insert("k".into(), k.to_string());
                constants.insert("inner_d".into(), fmt_rational(&params.inner_d));
                let size = cut.side.len() as u64;
                let claim = Claim { measure: Measure::Sparsity, value: cut.sparsity, bound, size, size_bound: None, weight: None, weight_bound: None, constants };
                merge(best, Candidate { cut: FoundCut::Edge(cut), claim });
            } else {
                rec.outcome = GuessOutcome::ClaimFailed;
            }
        }
        if let Some(c) = step.certificate {
            certified = true;
            // The lower bound covers all cuts only when every vertex is a terminal.
            if fallback {
                merge_cert(cert, c, *phi);
            }
        }
        res.transcript.push(rec);
    }
    Ok((found, certified))
}

/// Repartitions the components of `G − C` into two sides, largest first to
/// the lighter side.
fn regroup(g: &Graph, separator: &[usize]) -> Option<VertexCut> {
    let n = g.n();
    let mut removed = vec![false; n];
    for &v in separator {
        removed[v] = true;
    }
    let mut comps = g.components_without(&removed);
    if comps.len() < 2 {
        return None;
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    let (mut a, mut b): (Vec<usize>, Vec<usize>) = (vec![], vec![]);
    for c in comps {
        if a.len() <= b.len() {
            a.extend(c);
        } else {
            b.extend(c);
        }
    }
    VertexCut::new(g, &a, separator, &b).ok()
}

/// Post-processes a separator found by a vertex engine: flags a component
/// larger than `n − s/α`, and returns the sparser of the engine's cut and
/// the regrouped one.
fn post_process(g: &Graph, cut: VertexCut, s: usize, params: &ParamSet, warnings: &mut Vec<String>) -> VertexCut {
    let n = g.n();
    let mut removed = vec![false; n];
    for &v in &cut.separator {
        removed[v] = true;
    }
    let largest = g.components_without(&removed).iter().map(|c| c.len()).max().unwrap_or(0);
    if int(largest as i128) > int(n as i128) - int(s as i128) / params.alpha {
        warnings.push(format!("component of size {largest} exceeds n − s/α for s = {s}"));
    }
    match regroup(g, &cut.separator) {
        Some(r) if r.sparsity < cut.sparsity => r,
        _ => cut,
    }
}

fn vertex_claim(cut: &VertexCut, bound: Rational, constants: BTreeMap<String, String>) -> Claim {
    let size = (cut.left.len().min(cut.right.len()) + cut.separator.len()) as u64;
    Claim { measure: Measure::VertexSparsity, value: cut.sparsity, bound, size, size_bound: None, weight: None, weight_bound: None, constants }
}

fn is_complete(g: &Graph) -> bool {
    let n = g.n();
    (0..n).all(|v| g.adjacent(v).filter(|&(w, _)| w != v).count() == n - 1)
}

fn vertex_preconditions(g: &Graph) -> Result<()> {
    if g.n() < 3 {
        return Err(Error::Precondition("need n ≥ 3".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(())
}

/// `max(ln ln(nφ), 1)`, with the inner log clamped as well.
fn log_log(n: usize, phi: &Rational) -> f64 {
    clamped_ln(clamped_ln(n as f64 * to_f64(phi)))
}

/// Distinct vertex sample sets over the `(k, φ)` grid, `φ = k/(k + s)`.
fn vertex_sets(g: &Graph, params: &ParamSet, res: &mut ApproxResult) -> Result<Vec<SampleSet>> {
    let n = g.n();
    let mut sets: Vec<SampleSet> = Vec::new();
    for k in pow2_grid(n as u64).into_iter().filter(|&k| k <= n as u64) {
        for s in pow2_grid(n as u64 / 2).into_iter().filter(|&s| 2 * s <= n as u64) {
            let phi = rat(k as i128, (k + s) as i128);
            let mult = from_f64_up(clamped_ln(k as f64) + log_log(n, &phi));
            let phi1 = params.lambda * phi * mult;
            let seed = step_seed(params.seed, k << 32 | s, 0);
            let ss = vertex_sample_set(g, &params.eps, &phi1, &params.vertex_sample_c, seed)?;
            let reused = sets.iter().any(|o| o.terminals == ss.terminals);
            let mut rec = sample_record(&phi1, k, &ss, reused);
            rec.s = Some(s as usize);
            res.transcript.push(rec);
            if !reused {
                sets.push(ss);
            }
        }
    }
    Ok(sets)
}

/// Vertex sparsest cut through the vertex LP and its rounding, followed by
/// component regrouping.
pub fn vertex_sparsest_cut_lp(g: &Graph, params: &ParamSet) -> Result<ApproxResult> {
    params.validate()?;
    vertex_preconditions(g)?;
    let n = g.n();
    check_lp_size(n)?;
    let mut res = ApproxResult::empty(Problem::VertexSparsestLp, params, Inputs::default());
    if is_complete(g) {
        res.warnings.push("complete graph: no vertex cut has both sides nonempty".into());
        return finish(res, g, None);
    }
    let sets = vertex_sets(g, params, &mut res)?;
    let mut jobs = Vec::new();
    for (i, ss) in sets.iter().enumerate() {
        for s in value_grid(1, (ss.terminals.len() / 2).max(1) as u64) {
            jobs.push((i, s as usize));
        }
    }
    type VertexOut = (GuessRecord, Vec<(VertexCut, f64, f64)>, Option<String>);
    let outputs: Vec<Result<VertexOut>> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let ss = &sets[i];
            let mut rec = GuessRecord::new(GuessOutcome::Infeasible);
            rec.s = Some(s);
            rec.sample = Some(ss.kind);
            rec.terminals = ss.terminals.len();
            let inst = build_vertex_lp(g, &ss.terminals, s)?;
            let sol = match inst.lp.solve(params.lp_tol) {
                Ok(sol) => sol,
                Err(Error::Infeasible(_)) => return Ok((rec, vec![], None)),
                Err(e) => return Err(e),
            };
            rec.lp_value_f64 = Some(sol.objective);
            let reps = repetitions(n, params.c_rep);
            let (mut cuts, mut notes, mut warning) = (vec![], vec![], None);
            for attempt in 0..params.retries.max(1) {
                rec.attempts = attempt + 1;
                let mut rng = ChaCha8Rng::seed_from_u64(step_seed(params.seed, (i as u64) << 32 | s as u64, attempt));
                match round_vertex(g, &inst, &sol, params.lp_tol, &mut rng, reps) {
                    Ok(r) => {
                        notes.extend(r.violations);
                        warning = warning.or(r.warning);
                        cuts.push((r.cut, r.lp_value, r.factor));
                    }
                    Err(Error::RandomizedFailure(m)) => notes.push(m),
                    Err(e) => return Err(e),
                }
            }
            notes.extend(warning.clone());
            notes.sort();
            notes.dedup();
            rec.note = (!notes.is_empty()).then(|| notes.join("; "));
            rec.outcome = if cuts.is_empty() { GuessOutcome::Failed } else { GuessOutcome::Candidate };
            Ok((rec, cuts, warning))
        })
        .collect();
    let mut best = None;
    for (&(_, s), out) in jobs.iter().zip(outputs) {
        let (mut rec, found, warning) = out?;
        res.warnings.extend(warning);
        let mut cands = Vec::new();
        for (cut, lp_value, factor) in found {
            let cut = post_process(g, cut, s, params, &mut res.warnings);
            // |C| ≤ factor · LP · |U ∩ T| / s and the smaller side keeps at
            // least half of |U ∩ T|, so the sparsity is at most 2·factor·LP/s.
            let bound = from_f64_up(2.0 * factor * lp_value / s as f64 + 1e-9);
            cands.push((cut.sparsity <= bound).then(|| {
                let mut constants = BTreeMap::new();
                constants.insert("rounding_factor".into(), format!("{factor:.6}"));
                constants.insert("lp_value".into(), format!("{lp_value:.9}"));
                constants.insert("s".into(), s.to_string());
                constants.insert("alpha".into(), fmt_rational(&params.alpha));
                Candidate { claim: vertex_claim(&cut, bound, constants), cut: FoundCut::Vertex(cut) }
            }));
        }
        record_candidates(&mut rec, cands, &mut best);
        res.transcript.push(rec);
    }
    res.warnings.sort();
    res.warnings.dedup();
    if best.is_none() {
        return Err(Error::RandomizedFailure("no LP guess produced a vertex cut".into()));
    }
    finish(res, g, best)
}

/// Vertex sparsest cut through the vertex cut-matching game. Targets stay
/// below 1: halving downwards, and moving halfway to 1 upwards.
pub fn vertex_sparsest_cut_cut_matching(g: &Graph, params: &ParamSet) -> Result<ApproxResult> {
    params.validate()?;
    vertex_preconditions(g)?;
    let n = g.n();
    let mut res = ApproxResult::empty(Problem::VertexSparsestGame, params, Inputs::default());
    if is_complete(g) {
        res.warnings.push("complete graph: no vertex cut has both sides nonempty".into());
        return finish(res, g, None);
    }
    let mut best: Option<Candidate> = None;
    let mut cert: Option<(Certificate, Rational)> = None;
    let mut phi = rat(1, 2);
    for _ in 0..SEARCH_STEPS {
        let mult = from_f64_up(clamped_ln(n as f64) + log_log(n, &phi));
        let phi1 = params.lambda * phi * mult;
        let seed = step_seed(params.seed, *phi.denom() as u64, 1);
        let ss = vertex_sample_set(g, &params.eps, &phi1, &params.vertex_sample_c, seed)?;
        let fallback = ss.kind == SampleKind::Fallback;
        let t = ss.terminals.len();
        let mut rec = sample_record(&phi, n as u64, &ss, false);
        // Sets up to |T| − 1 terminals cover L ∪ C of every vertex cut.
        let step = play(g, &ss, &phi, t - 1, GameKind::Vertex, params, &mut rec)?;
        let found = step.vertex_cut.is_some();
        if let Some(c) = step.vertex_cut {
            let cut = post_process(g, c, t / 2, params, &mut res.warnings);
            rec.value = Some(cut.sparsity);
            let bound = if fallback { phi } else { phi * int(t as i128) / (int(n as i128) * (int(1) - ss.guarantee)) };
            if cut.sparsity <= bound {
                let mut constants = BTreeMap::new();
                constants.insert("target".into(), fmt_rational(&phi));
                constants.insert("lambda".into(), fmt_rational(&params.lambda));
                constants.insert("alpha".into(), fmt_rational(&params.alpha));
                merge(&mut best, Candidate { claim: vertex_claim(&cut, bound, constants), cut: FoundCut::Vertex(cut) });
            } else {
                rec.outcome = GuessOutcome::ClaimFailed;
            }
        }
        if let Some(c) = step.certificate {
            if fallback {
                merge_cert(&mut cert, c, phi);
            }
        }
        res.transcript.push(rec);
        if found {
            if cert.is_some() {
                break;
            }
            phi /= int(2);
        } else {
            if best.is_some() {
                break;
            }
            phi = (phi + int(1)) / int(2);
        }
    }
    res.warnings.sort();
    res.warnings.dedup();
    if best.is_none() {
        return Err(Error::RandomizedFailure("target search ended without a vertex cut".into()));
    }
    if let Some((c, _)) = cert {
        res.lower_bound = Some(c.lower_bound.clone());
        res.certificate = Some(c);
    }
    finish(res, g, best)
}

/// Weighted ρ-unbalanced cut: a set of at most about `ρn` vertices carrying
/// at least about a `τ` fraction of `y`, with few boundary edges.
pub fn weighted_unbalanced_cut(g: &Graph, y: &[u64], tau: &Rational, rho_frac: &Rational, params: &ParamSet) -> Result<ApproxResult> {
    params.validate()?;
    let n = g.n();
    if y.len() != n {
        return Err(Error::InvalidParameter(format!("{} weights for {n} vertices", y.len())));
    }
    let total: u64 = y.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("total weight must be positive".into()));
    }
    if *tau < int(0) || *tau >= int(1) || *rho_frac <= int(0) || *rho_frac >= int(1) {
        return Err(Error::InvalidParameter("need 0 ≤ tau < 1 and 0 < rho < 1".into()));
    }
    check_lp_size(n)?;
    let inputs = Inputs { tau: Some(*tau), rho_frac: Some(*rho_frac), y: Some(y.to_vec()), ..Inputs::default() };
    let mut res = ApproxResult::empty(Problem::WeightedUnbalanced, params, inputs);
    let smax = (rho_frac * int(n as i128)).floor().to_integer() as usize;
    let need = (tau * int(total as i128)).ceil().to_integer().max(1) as u64;
    let mut heavy = y.to_vec();
    heavy.sort_unstable_by(|a, b| b.cmp(a));
    let reachable: u64 = heavy.iter().take(smax).sum();
    if smax == 0 || reachable < need {
        res.warnings.push(format!("the {smax} heaviest vertices carry {reachable} < {need}"));
        return finish(res, g, None);
    }

    // Optimum guesses in [1, m]; each gives one weighted sample set.
    let mut sets: Vec<(u64, SampleSet)> = Vec::new();
    for opt in pow2_grid(g.m().max(1)) {
        let phi = int(opt as i128) / int(need as i128);
        let phi1 = params.big_c * phi * log_factor(opt as f64);
        let ss = weighted_sample_set(g, y, &params.eps, &phi1, params)?;
        let reused = sets.iter().any(|(_, o)| o.terminals == ss.terminals && o.weights == ss.weights);
        res.transcript.push(sample_record(&phi1, opt, &ss, reused));
        if !reused {
            sets.push((opt, ss));
        }
    }
    let xs: Vec<Vec<u64>> = sets.iter().map(|(_, ss)| dense_weights(n, ss)).collect();
    let mut s_grid: Vec<u64> = pow2_grid(smax as u64).into_iter().filter(|&s| s < smax as u64).collect();
    s_grid.push(smax as u64);
    let mut guesses = Vec::new();
    for (i, (_, ss)) in sets.iter().enumerate() {
        let ktot = ss.total_weight();
        // x(S) for a qualifying S, scaled from y(S) ≥ need.
        let lo_r = (int(1) - ss.guarantee) * int(need as i128) * int(ktot as i128) / int(total as i128);
        let lo = lo_r.ceil().to_integer().max(1) as u64;
        for &s in &s_grid {
            for ell in value_grid(lo.min(ktot), ktot) {
                guesses.push(SseGuess { g, ss, x: &xs[i], s: s as usize, ell, exclude_above: None, tag: (i as u64) << 40 | s << 20 | ell });
            }
        }
    }
    let outputs: Vec<Result<SseGuessOutput>> = guesses.par_iter().map(|q| q.run(params)).collect();
    let mut best = None;
    for (q, out) in guesses.iter().zip(outputs) {
        let mut out = out?;
        let found = std::mem::take(&mut out.sets);
        let cands: Vec<Option<Candidate>> = found.iter().map(|(set, lp, f)| weighted_candidate(g, q, y, set, *lp, *f, total, need)).collect();
        record_candidates(&mut out.record, cands, &mut best);
        res.transcript.push(out.record);
    }
    if best.is_none() {
        return Err(Error::RandomizedFailure("no weighted guess produced a valid set".into()));
    }
    finish(res, g, best)
}

#[allow(clippy::too_many_arguments)]
fn weighted_candidate(g: &Graph, q: &SseGuess, y: &[u64], set: &[usize], lp_value: f64, factor: f64, total: u64, need: u64) -> Option<Candidate> {
    let n = g.n();
    if set.is_empty() || set.len() >= n {
        return None;
    }
    let cut = EdgeCut::new(g, set).ok()?;
    let xw: u64 = set.iter().map(|&v| q.x[v]).sum();
    let yw: u64 = set.iter().map(|&v| y[v]).sum();
    let value = int(cut.boundary_size as i128);
    let bound = from_f64_up(factor * lp_value * xw as f64 / q.ell as f64 + 1e-9);
    // x(Y) ≥ ℓ/10 turns into y(Y) ≥ need/γ with γ = 10 on exact weights.
    let gamma = if q.ss.kind == SampleKind::Fallback || q.ss.guarantee == int(0) { int(10) } else { int(10) / (int(1) - q.ss.guarantee) * (int(1) + q.ss.guarantee) };
    let weight_bound = int(need as i128) / gamma;
    if value > bound || int(yw as i128) < weight_bound {
        return None;
    }
    let mut constants = BTreeMap::new();
    constants.insert("rounding_factor".into(), format!("{factor:.6}"));
    constants.insert("lp_value".into(), format!("{lp_value:.9}"));
    constants.insert("s".into(), q.s.to_string());
    constants.insert("ell".into(), q.ell.to_string());
    constants.insert("beta".into(), "10".into());
    constants.insert("gamma".into(), fmt_rational(&gamma));
    constants.insert("total_weight".into(), total.to_string());
    let size = set.len() as u64;
    let claim = Claim { measure: Measure::Boundary, value, bound, size, size_bound: Some(10 * q.s as u64), weight: Some(yw), weight_bound: Some(weight_bound), constants };
    Some(Candidate { cut: FoundCut::Edge(cut), claim })
}

/// Approximation factor promised against the exact optimum, from the
/// configured constants and the instance. `None` when no factor applies.
pub fn ratio_bound(g: &Graph, res: &ApproxResult, optimum: &Rational) -> Option<f64> {
    let n = g.n();
    let fallback_only = res.transcript.iter().filter_map(|r| r.sample).all(|k| k == SampleKind::Fallback);
    if !fallback_only {
        return None;
    }
    match res.problem {
        // Expansion ≤ factor(ℓ) · LP/ℓ ≤ factor(s) · opt at ℓ = |S*|.
        Problem::SmallSetExpansion => Some(200.0 * clamped_ln(res.inputs.s? as f64)),
        // |δ(Y)| ≤ factor · LP · x(Y)/ℓ with x(Y) ≤ 3ℓ.
        Problem::WeightedUnbalanced => {
            let total: u64 = res.inputs.y.as_ref()?.iter().sum();
            Some(600.0 * clamped_ln(total as f64))
        }
        // Sparsity ≤ 2·factor·LP/s* with LP ≤ |C*| = φ*(|C*| + s*).
        Problem::VertexSparsestLp => {
            let phi = to_f64(optimum);
            (phi < 1.0).then(|| 4000.0 * clamped_ln((n / 2) as f64) / (1.0 - phi))
        }
        // Cut and certificate one grid step apart: ratio ≤ 2M/h.
        Problem::SparsestCut | Problem::VertexSparsestGame => {
            let c = res.certificate.as_ref()?;
            let h = c.h_expansion.finite()?;
            (h > int(0)).then(|| 2.0 * c.matchings.max(1) as f64 / to_f64(&h))
        }
    }
}

/// Cross-checks a result against the exact oracle for its problem.
pub fn verify(g: &Graph, res: &ApproxResult) -> Result<Verification> {
    let n = g.n();
    let inp = &res.inputs;
    let optimum = match res.problem {
        Problem::SmallSetExpansion => oracle::exact_sse(g, inp.s.unwrap_or(n / 2))?.value,
        Problem::SparsestCut => oracle::exact_sparsest_cut(g)?.value,
        Problem::VertexSparsestLp | Problem::VertexSparsestGame => match oracle::exact_vertex_sparsest(g) {
            Ok(a) => a.value,
            Err(Error::Precondition(_)) => {
                return Ok(Verification {
                    optimum: int(1),
                    claims_hold: res.claims_hold(g),
                    lower_bound_sound: None,
                    no_such_set_sound: Some(res.status == Status::NoSuchSet),
                    ratio_f64: None,
                    ratio_bound_f64: None,
                    within_bound: None,
                })
            }
            Err(e) => return Err(e),
        },
        Problem::WeightedUnbalanced => {
            let y = inp.y.as_deref().unwrap_or(&[]);
            let tau = inp.tau.unwrap_or(int(0));
            let smax = (inp.rho_frac.unwrap_or(int(0)) * int(n as i128)).floor().to_integer() as usize;
            match oracle::exact_weighted_unbalanced(g, y, &tau, smax) {
                Ok(a) => a.value,
                Err(Error::Precondition(_)) if res.status == Status::NoSuchSet => {
                    return Ok(Verification {
                        optimum: int(0),
                        claims_hold: res.claims_hold(g),
                        lower_bound_sound: None,
                        no_such_set_sound: Some(true),
                        ratio_f64: None,
                        ratio_bound_f64: None,
                        within_bound: None,
                    })
                }
                Err(e) => return Err(e),
            }
        }
    };
    let no_such_set_sound = (res.status == Status::NoSuchSet).then(|| match res.problem {
        Problem::SmallSetExpansion => inp.phi.map_or(false, |phi| optimum > phi),
        _ => false,
    });
    let value = res.claim.as_ref().map(|c| c.value);
    let ratio_f64 = value.map(|v| {
        if optimum == int(0) {
            if v == int(0) { 1.0 } else { f64::INFINITY }
        } else {
            to_f64(&(v / optimum))
        }
    });
    let ratio_bound_f64 = value.and_then(|_| ratio_bound(g, res, &optimum));
    let within_bound = match (ratio_f64, ratio_bound_f64) {
        (Some(r), Some(b)) => Some(r <= b * (1.0 + 1e-9)),
        _ => None,
    };
    let lower_bound_sound = res.lower_bound.as_ref().map(|lb| match lb {
        Sparsity::Finite(l) => *l <= optimum,
        Sparsity::Infinite => false,
    });
    Ok(Verification { optimum, claims_hold: res.claims_hold(g), lower_bound_sound, no_such_set_sound, ratio_f64, ratio_bound_f64, within_bound })
}
