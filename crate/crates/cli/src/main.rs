//! `sparsecut`: run the sparse-cut pipelines, oracles and the game on graph
//! files and print deterministic JSON.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 no qualifying set,
//! 3 randomized failure after all retries.

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparsecut::cut_matching::{run_game, GameKind};
use sparsecut::io::{read_graph_file, write_graph};
use sparsecut::oracle::{self, generators, CutKind, EDGE_ORACLE_BOUND, VERTEX_ORACLE_BOUND};
use sparsecut::pipelines::{self, ApproxResult, Status};
use sparsecut::rational::{parse_rational, Rational};
use sparsecut::report::{to_json, Envelope};
use sparsecut::sample_sets::{edge_sample_set, verify_sample_set, vertex_sample_set, weighted_sample_set};
use sparsecut::{Error, Graph, ParamSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Default worker count when `--threads` is absent.
const THREADS_ENV: &str = "SPARSECUT_THREADS";

#[derive(Parser)]
#[command(name = "sparsecut", version, about = "Sparse cut approximation with exact verification")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// RNG seed; recorded in every output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override a constant, e.g. `--set eps=1/50`. Repeatable.
    #[arg(long = "set", global = true, value_name = "NAME=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (default: $SPARSECUT_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write JSON here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Cross-check against the exact oracle when the graph is small enough.
    #[arg(long, global = true)]
    verify: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Small set expansion: |S| ≤ s with |δ(S)| ≤ φ|S|.
    Sse {
        #[arg(long, value_parser = rational)]
        phi: Rational,
        #[arg(long)]
        s: usize,
        graph: PathBuf,
    },
    /// Sparsest cut through the cut-matching game.
    SparsestCut { graph: PathBuf },
    /// Vertex sparsest cut through the LP rounding.
    VertexSparsest { graph: PathBuf },
    /// Vertex sparsest cut through the vertex cut-matching game.
    VertexSparsestGame { graph: PathBuf },
    /// Weighted unbalanced cut: |S| ≤ ρn, y(S) ≥ τ·y(V), few boundary edges.
    Unbalanced {
        #[arg(long, value_parser = rational)]
        tau: Rational,
        #[arg(long, value_parser = rational)]
        rho: Rational,
        /// Comma-separated vertex weights; defaults to the graph's weights.
        #[arg(long, value_delimiter = ',', value_parser = rational)]
        y: Vec<Rational>,
        graph: PathBuf,
    },
    /// One cut-matching game on the graph's terminals (all vertices if none).
    Game {
        #[arg(long, value_parser = rational)]
        phi: Rational,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        vertex: bool,
        /// Write the per-round trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        graph: PathBuf,
    },
    /// Exact optimum by enumeration.
    Oracle {
        #[arg(long, value_enum)]
        mode: OracleMode,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, value_parser = rational)]
        tau: Option<Rational>,
        graph: PathBuf,
    },
    /// Build a sample set and check it against the exhaustive sparse family.
    VerifySampleSet {
        #[arg(long, value_enum, default_value_t = SampleMode::Edge)]
        kind: SampleMode,
        #[arg(long, value_parser = rational)]
        eps: Option<Rational>,
        #[arg(long, value_parser = rational)]
        phi: Rational,
        #[arg(long, default_value_t = 3)]
        kmax: usize,
        graph: PathBuf,
    },
    /// Print a generated graph: path N, cycle N, star N, complete N,
    /// grid R C, dumbbell A B, star-of-cliques K M, tree N, regular N D,
    /// planted N P Q, incidence N.
    Gen {
        family: String,
        args: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    Sparsest,
    Sse,
    Vertex,
    Ssve,
    Unbalanced,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleMode {
    Edge,
    Weighted,
    Vertex,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s)
}

/// Error plus the exit code it maps to.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::RandomizedFailure(_) => 3,
            _ => 1,
        };
        Failure(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(1, msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn params_from(g: &Global) -> Result<ParamSet, Failure> {
    let mut p = ParamSet { seed: g.seed, ..ParamSet::default() };
    for o in &g.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| usage(format!("--set expects NAME=VALUE, got {o:?}")))?;
        p.set(k.trim(), v.trim())?;
    }
    p.validate()?;
    Ok(p)
}

fn threads(g: &Global) -> Result<Option<usize>, Failure> {
    if let Some(t) = g.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| usage(format!("{THREADS_ENV} must be an integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn emit(global: &Global, json: &str) -> Result<(), Failure> {
    match &global.output {
        Some(p) => std::fs::write(p, json).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Graph, Failure> {
    Ok(read_graph_file(path)?)
}

/// Scales rational weights to integers by the common denominator.
fn integer_weights(y: &[Rational]) -> Result<Vec<u64>, Failure> {
    if y.iter().any(|r| *r < Rational::from_integer(0)) {
        return Err(usage("weights must be nonnegative"));
    }
    let lcm = y.iter().fold(1i128, |acc, r| num_lcm(acc, *r.denom()));
    Ok(y.iter().map(|r| (r * Rational::from_integer(lcm)).to_integer() as u64).collect())
}

fn num_lcm(a: i128, b: i128) -> i128 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(t) = threads(&cli.global)? {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| usage(e.to_string()))?;
    }
    let params = params_from(&cli.global)?;
    let global = &cli.global;
    match &cli.command {
        Command::Sse { phi, s, graph } => {
            let g = load(graph)?;
            pipeline(global, &params, "sse", &g, pipelines::sse_log_k(&g, phi, *s, &params)?)
        }
        Command::SparsestCut { graph } => {
            let g = load(graph)?;
            pipeline(global, &params, "sparsest-cut", &g, pipelines::sparsest_cut_cut_matching(&g, &params)?)
        }
        Command::VertexSparsest { graph } => {
            let g = load(graph)?;
            pipeline(global, &params, "vertex-sparsest", &g, pipelines::vertex_sparsest_cut_lp(&g, &params)?)
        }
        Command::VertexSparsestGame { graph } => {
            let g = load(graph)?;
            pipeline(global, &params, "vertex-sparsest-game", &g, pipelines::vertex_sparsest_cut_cut_matching(&g, &params)?)
        }
        Command::Unbalanced { tau, rho, y, graph } => {
            let g = load(graph)?;
            let y = if y.is_empty() {
                g.weights().map(|w| w.to_vec()).ok_or_else(|| usage("no --y given and the graph has no weights"))?
            } else {
                integer_weights(y)?
            };
            pipeline(global, &params, "unbalanced", &g, pipelines::weighted_unbalanced_cut(&g, &y, tau, rho, &params)?)
        }
        Command::Game { phi, s, vertex, trace, graph } => {
            let g = load(graph)?;
            let t: Vec<usize> = g.terminals().map(|t| t.to_vec()).unwrap_or_else(|| (0..g.n()).collect());
            let kind = if *vertex { GameKind::Vertex } else { GameKind::Edge };
            let run = run_game(&g, &t, phi, *s, kind, &params, &[])?;
            if let Some(p) = trace {
                std::fs::write(p, run.trace_jsonl()).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            }
            emit(global, &to_json(&Envelope::new("game", &params, &run)))?;
            Ok(0)
        }
        Command::Oracle { mode, s, tau, graph } => {
            let g = load(graph)?;
            let n = g.n();
            let ans = match mode {
                OracleMode::Sparsest => oracle::exact_sparsest_cut(&g)?,
                OracleMode::Sse => oracle::exact_sse(&g, s.unwrap_or(n / 2))?,
                OracleMode::Vertex => oracle::exact_vertex_sparsest(&g)?,
                OracleMode::Ssve => oracle::exact_ssve(&g, s.unwrap_or(n / 2))?,
                OracleMode::Unbalanced => {
                    let y = g.weights().map(|w| w.to_vec()).unwrap_or_else(|| vec![1; n]);
                    let tau = tau.ok_or_else(|| usage("--tau is required for unbalanced"))?;
                    oracle::exact_weighted_unbalanced(&g, &y, &tau, s.unwrap_or(n / 2))?
                }
            };
            emit(global, &to_json(&Envelope::new("oracle", &params, &ans)))?;
            Ok(0)
        }
        Command::VerifySampleSet { kind, eps, phi, kmax, graph } => {
            let g = load(graph)?;
            let eps = eps.unwrap_or(params.eps);
            let (ss, family, mu) = match kind {
                SampleMode::Edge => {
                    (edge_sample_set(&g, &eps, phi, &params)?, oracle::enumerate_sparse_family(&g, Some(phi), *kmax, CutKind::Edge), None)
                }
                SampleMode::Weighted => {
                    let mu = g.weights().map(|w| w.to_vec()).unwrap_or_else(|| vec![1; g.n()]);
                    let ss = weighted_sample_set(&g, &mu, &eps, phi, &params)?;
                    (ss, oracle::enumerate_sparse_family(&g, Some(phi), *kmax, CutKind::Edge), Some(mu))
                }
                SampleMode::Vertex => (
                    vertex_sample_set(&g, &eps, phi, &params.vertex_sample_c, params.seed)?,
                    oracle::enumerate_sparse_family(&g, Some(phi), *kmax, CutKind::Vertex),
                    None,
                ),
            };
            let violations = verify_sample_set(&g, &ss, &family, mu.as_deref(), &params);
            let out = serde_json::json!({
                "sample_set": ss,
                "family_size": family.len(),
                "violations": violations,
                "passed": violations.is_empty(),
            });
            emit(global, &to_json(&Envelope::new("verify-sample-set", &params, &out)))?;
            Ok(0)
        }
        Command::Gen { family, args } => {
            let g = generate(family, args, params.seed)?;
            emit(global, &write_graph(&g))?;
            Ok(0)
        }
    }
}

fn pipeline(global: &Global, params: &ParamSet, command: &str, g: &Graph, mut res: ApproxResult) -> Result<u8, Failure> {
    let mut warnings = Vec::new();
    if global.verify {
        let bound = match res.problem {
            pipelines::Problem::VertexSparsestLp | pipelines::Problem::VertexSparsestGame => VERTEX_ORACLE_BOUND,
            _ => EDGE_ORACLE_BOUND,
        };
        if g.n() > bound {
            let w = format!("verification skipped: n = {} exceeds the oracle bound {bound}", g.n());
            eprintln!("warning: {w}");
            warnings.push(w);
        } else {
            res.verification = Some(pipelines::verify(g, &res)?);
        }
    }
    let mut env = Envelope::new(command, params, &res);
    env.warnings = warnings;
    emit(global, &to_json(&env))?;
    Ok(if res.status == Status::NoSuchSet { 2 } else { 0 })
}

fn generate(family: &str, args: &[String], seed: u64) -> Result<Graph, Failure> {
    let int = |i: usize| -> Result<usize, Failure> {
        args.get(i).ok_or_else(|| usage(format!("{family}: missing argument {}", i + 1)))?.parse().map_err(|_| usage(format!("{family}: bad integer")))
    };
    let real = |i: usize| -> Result<f64, Failure> {
        args.get(i).ok_or_else(|| usage(format!("{family}: missing argument {}", i + 1)))?.parse().map_err(|_| usage(format!("{family}: bad number")))
    };
    Ok(match family {
        "path" => generators::path(int(0)?),
        "cycle" => generators::cycle(int(0)?),
        "star" => generators::star(int(0)?),
        "complete" => generators::complete(int(0)?),
        "grid" => generators::grid(int(0)?, int(1)?),
        "dumbbell" => generators::dumbbell(int(0)?, int(1)?),
        "star-of-cliques" => generators::star_of_cliques(int(0)?, int(1)?),
        "tree" => generators::random_tree(int(0)?, seed),
        "regular" => generators::random_regular(int(0)?, int(1)?, seed),
        "planted" => generators::planted_bisection(int(0)?, real(1)?, real(2)?, seed),
        "incidence" => generators::incidence_graph(int(0)?),
        other => return Err(usage(format!("unknown family {other:?}"))),
    })
}
