//! Command-line front end: parses arguments, loads or generates a graph,
//! runs one engine and describes the run in a [`RunReport`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use walkcent::exact::{gwc_exact, group_detour_time, walk_centrality_exact, walk_centrality_spectral};
use walkcent::generators::{closed_form_kemeny, generate};
use walkcent::greedy::{
    approx_min_gwc, baseline_select, brute_force_min_gwc, deter_min_gwc, BruteForceConfig,
};
use walkcent::io::{parse_edge_list, write_edge_list_file};
use walkcent::rng::derive_seed;
use walkcent::sim::{estimate_detour, estimate_gwc, estimate_kemeny, estimate_walk_centrality};
use walkcent::sketch::{approx_gwc, approx_hk};
use walkcent::solver::practical_delta;
use walkcent::{
    largest_connected_component, Baseline, DuplicatePolicy, EdgeListFormat, GreedyTrace, Indexing,
    ModelFamily, ModelSpec, OptimizerConfig, SolveMethod, SolverOptions, ToleranceMode,
    VertexLabels, WeightedGraph,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_RESOURCE: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Argument errors, and requests for help or the version.
    #[error(transparent)]
    Arguments(#[from] clap::Error),
    #[error(transparent)]
    Core(#[from] walkcent::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use walkcent::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Arguments(e) if !e.use_stderr() => 0,
            CliError::Arguments(_) => EXIT_USAGE,
            CliError::Output(_) => EXIT_INPUT,
            CliError::Core(e) => match e.root() {
                E::NotConverged(_) | E::Numerical(_) | E::WalkTruncated { .. } | E::Cancelled { .. } => {
                    EXIT_NUMERICAL
                }
                E::CapExceeded { .. } => EXIT_RESOURCE,
                _ => EXIT_INPUT,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "walkcent", version, about = "Random-walk centralities, Kemeny constant and group walk centrality")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Edge-list file (`u v` or `u v w` per line).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Generate a model network instead of reading a file.
    #[arg(long, global = true, value_enum)]
    family: Option<Family>,
    /// Generation of the model network.
    #[arg(long, global = true)]
    g: Option<u32>,
    /// Branching factor of Cayley trees.
    #[arg(long, global = true, default_value_t = 3)]
    b: u32,
    /// Read a third column as edge weights.
    #[arg(long, global = true)]
    weighted: bool,
    #[arg(long, global = true, value_enum, default_value_t = IndexingArg::Auto)]
    indexing: IndexingArg,
    /// Keep the whole graph instead of its largest connected component.
    #[arg(long, global = true)]
    no_lcc: bool,
    /// Sum the weights of repeated edges instead of rejecting the file.
    #[arg(long, global = true)]
    merge_duplicates: bool,
    /// Worker threads for the engines (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized commands; one is generated and reported if absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Solver tolerance rule for sketched estimators.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Practical)]
    mode: ModeArg,
    /// Linear solver behind the sketched estimators.
    #[arg(long, global = true, value_enum, default_value_t = SolverArg::Cg)]
    solver: SolverArg,
    /// Error parameter of the sketched estimators, in (0, 1).
    #[arg(long, global = true, default_value_t = 0.3)]
    epsilon: f64,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write the per-vertex (or per-step) table as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Pseudofractal,
    Koch,
    Cayley,
    Hanoi,
    ExtendedHanoi,
}

impl From<Family> for ModelFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Pseudofractal => ModelFamily::Pseudofractal,
            Family::Koch => ModelFamily::Koch,
            Family::Cayley => ModelFamily::Cayley,
            Family::Hanoi => ModelFamily::Hanoi,
            Family::ExtendedHanoi => ModelFamily::ExtendedHanoi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IndexingArg {
    Zero,
    One,
    Auto,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Practical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Cg,
    DenseCholesky,
    SparseCholesky,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum CentralityArg {
    Exact,
    Spectral,
    Approx,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Walk centrality of every vertex, and the Kemeny constant.
    Centrality {
        #[arg(long, value_enum, default_value_t = CentralityArg::Exact)]
        method: CentralityArg,
    },
    /// The Kemeny constant.
    Kemeny {
        #[arg(long, value_enum, default_value_t = CentralityArg::Exact)]
        method: CentralityArg,
    },
    /// Group walk centrality of a vertex set.
    Gwc {
        /// Comma-separated vertex labels.
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<String>,
        /// `exact` (dense) or `approx` (one solver call).
        #[arg(long, default_value = "exact")]
        method: String,
    },
    /// Choose k vertices minimizing group walk centrality.
    Mingwc {
        #[arg(long)]
        k: usize,
        /// deter | approx | brute | baseline:<top-degree|top-pagerank|top-absorb|random>
        #[arg(long, default_value = "deter")]
        method: String,
    },
    /// Generate a model network (requires --family and --g).
    Generate {
        /// Write the edge list to this file instead of embedding it in the report.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Monte Carlo estimates next to exact values.
    Oracle {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Also estimate the group walk centrality of this set.
        #[arg(long, value_delimiter = ',')]
        set: Vec<String>,
    },
    /// Group random detour time from i to j through a set.
    Detour {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<String>,
        #[arg(long)]
        i: String,
        #[arg(long)]
        j: String,
        /// Add a Monte Carlo estimate with this many walks.
        #[arg(long)]
        trials: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Centrality { .. } => "centrality",
            Command::Kemeny { .. } => "kemeny",
            Command::Gwc { .. } => "gwc",
            Command::Mingwc { .. } => "mingwc",
            Command::Generate { .. } => "generate",
            Command::Oracle { .. } => "oracle",
            Command::Detour { .. } => "detour",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    /// File path or model description.
    pub source: String,
    pub n: usize,
    pub m: usize,
    /// Vertices and edges before largest-component extraction.
    pub input_n: usize,
    pub input_m: usize,
    pub lcc: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Everything about one invocation, serialized as a single JSON document.
/// Re-running the echoed command with the recorded seed reproduces
/// `results`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub subcommand: String,
    pub graph: GraphStats,
    pub phases: Vec<Phase>,
    pub seed: Option<u64>,
    pub tolerance_mode: Option<ToleranceMode>,
    pub results: Value,
    /// Where the JSON report should go; standard output when absent.
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

struct Loaded {
    graph: WeightedGraph,
    /// External label of each vertex of `graph`.
    labels: Vec<String>,
    index: HashMap<String, usize>,
    stats: GraphStats,
}

impl Loaded {
    fn vertex(&self, label: &str) -> Result<usize, CliError> {
        self.index.get(label.trim()).copied().ok_or_else(|| {
            CliError::Core(walkcent::Error::InvalidSet(format!(
                "unknown vertex '{label}' (not in the graph or outside its largest component)"
            )))
        })
    }

    fn vertices(&self, labels: &[String]) -> Result<Vec<usize>, CliError> {
        labels.iter().map(|l| self.vertex(l)).collect()
    }
}

fn model_spec(common: &Common) -> Result<Option<ModelSpec>, CliError> {
    match (common.family, common.g) {
        (Some(f), Some(g)) => Ok(Some(match f {
            Family::Cayley => ModelSpec::cayley(common.b, g),
            _ => ModelSpec::new(f.into(), g),
        })),
        (Some(_), None) => Err(CliError::Usage("--family needs --g".into())),
        (None, Some(_)) => Err(CliError::Usage("--g needs --family".into())),
        (None, None) => Ok(None),
    }
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    let (graph, labels, source) = match (&common.input, model_spec(common)?) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give either --input or --family, not both".into()))
        }
        (None, None) => {
            return Err(CliError::Usage("a graph is required: --input FILE or --family F --g G".into()))
        }
        (Some(path), None) => {
            let fmt = EdgeListFormat {
                indexing: match common.indexing {
                    IndexingArg::Zero => Indexing::Zero,
                    IndexingArg::One => Indexing::One,
                    IndexingArg::Auto => Indexing::Auto,
                },
                weighted: common.weighted,
                duplicates: if common.merge_duplicates {
                    DuplicatePolicy::Merge
                } else {
                    DuplicatePolicy::Reject
                },
                ..EdgeListFormat::default()
            };
            let parsed = parse_edge_list(path, &fmt)?;
            (parsed.graph, parsed.labels, path.display().to_string())
        }
        (None, Some(spec)) => {
            let desc = match spec.branching {
                Some(b) => format!("{} b={b} g={}", spec.family, spec.generation),
                None => format!("{} g={}", spec.family, spec.generation),
            };
            (generate(&spec)?, VertexLabels::Numeric { one_based: false }, desc)
        }
    };
    let (input_n, input_m) = (graph.n(), graph.m());
    let (graph, labels) = if common.no_lcc {
        let labels = (0..graph.n()).map(|v| labels.label(v)).collect();
        (graph, labels)
    } else {
        let (lcc, map) = largest_connected_component(&graph)?;
        let mut names = vec![String::new(); lcc.n()];
        for (v, new) in map.iter().enumerate() {
            if let Some(new) = new {
                names[*new] = labels.label(v);
            }
        }
        (lcc, names)
    };
    let index = labels.iter().enumerate().map(|(v, l)| (l.clone(), v)).collect();
    let stats = GraphStats {
        source,
        n: graph.n(),
        m: graph.m(),
        input_n,
        input_m,
        lcc: !common.no_lcc,
    };
    Ok(Loaded {
        graph,
        labels,
        index,
        stats,
    })
}

/// A seed from the clock and the process id, for runs without `--seed`.
fn fresh_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u128(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos()),
    );
    h.write_u32(std::process::id());
    h.finish()
}

struct Ctx<'a> {
    common: &'a Common,
    phases: Vec<Phase>,
    seed: Option<u64>,
    mode: Option<ToleranceMode>,
    csv: Option<String>,
}

impl Ctx<'_> {
    fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push(Phase {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    fn seed(&mut self) -> u64 {
        if let Some(s) = self.seed {
            return s;
        }
        let s = self.common.seed.unwrap_or_else(|| {
            let s = fresh_seed();
            eprintln!("seed: {s}");
            s
        });
        self.seed = Some(s);
        s
    }

    fn mode(&mut self) -> ToleranceMode {
        let mode = match self.common.mode {
            ModeArg::Strict => ToleranceMode::Strict,
            ModeArg::Practical => ToleranceMode::Practical,
        };
        self.mode = Some(mode);
        mode
    }

    fn solver_options(&mut self) -> SolverOptions {
        SolverOptions {
            mode: self.mode(),
            method: self.method(),
            ..SolverOptions::default()
        }
    }

    fn method(&self) -> SolveMethod {
        match self.common.solver {
            SolverArg::Cg => SolveMethod::ConjugateGradient,
            SolverArg::DenseCholesky => SolveMethod::DenseCholesky,
            SolverArg::SparseCholesky => SolveMethod::SparseCholesky,
        }
    }
}

fn centrality(
    ctx: &mut Ctx<'_>,
    data: &Loaded,
    method: CentralityArg,
) -> Result<(Vec<f64>, f64, Value), CliError> {
    let g = &data.graph;
    Ok(match method {
        CentralityArg::Exact => {
            let r = ctx.timed("exact", || walk_centrality_exact(g))?;
            (r.walk_centrality, r.kemeny, json!({ "method": "exact" }))
        }
        CentralityArg::Spectral => {
            let r = ctx.timed("spectral", || walk_centrality_spectral(g))?;
            (r.walk_centrality, r.kemeny, json!({ "method": "spectral" }))
        }
        CentralityArg::Approx => {
            let (eps, seed, opts) = (ctx.common.epsilon, ctx.seed(), ctx.solver_options());
            let r = ctx.timed("sketch", || approx_hk(g, eps, seed, &opts))?;
            let meta = serde_json::to_value(&r.meta).expect("metadata serializes");
            (r.h_tilde, r.kemeny_tilde, json!({ "method": "approx", "sketch": meta }))
        }
    })
}

fn trace_json(trace: &GreedyTrace, data: &Loaded) -> Value {
    json!({
        "method": trace.method,
        "selected": trace.selected,
        "selected_labels": trace.selected.iter().map(|&v| &data.labels[v]).collect::<Vec<_>>(),
        "value": trace.value(),
        "gwc_values": trace.gwc_values,
        "gwc_exact": trace.gwc_exact,
        "gains": trace.gains,
    })
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn run(cli: Cli, argv: Vec<String>) -> Result<RunReport, CliError> {
    let common = &cli.common;
    if let Some(t) = common.threads {
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut ctx = Ctx {
        common,
        phases: Vec::new(),
        seed: None,
        mode: None,
        csv: None,
    };
    if let Command::Generate { .. } = cli.command {
        if common.input.is_some() || common.family.is_none() {
            return Err(CliError::Usage("generate needs --family and --g".into()));
        }
    }
    let data = ctx.timed("load", || load(common))?;
    let g = &data.graph;
    let results = match &cli.command {
        Command::Centrality { method } => {
            let (h, k, mut meta) = centrality(&mut ctx, &data, *method)?;
            let mut csv = String::from("vertex,label,walk_centrality\n");
            for (v, x) in h.iter().enumerate() {
                csv.push_str(&format!("{v},{},{x}\n", csv_escape(&data.labels[v])));
            }
            ctx.csv = Some(csv);
            meta["walk_centrality"] = json!(h);
            meta["kemeny"] = json!(k);
            meta
        }
        Command::Kemeny { method } => {
            let (_, k, mut meta) = centrality(&mut ctx, &data, *method)?;
            meta["kemeny"] = json!(k);
            meta
        }
        Command::Gwc { set, method } => {
            let s = data.vertices(set)?;
            match method.as_str() {
                "exact" => {
                    let v = ctx.timed("exact", || gwc_exact(g, &s))?;
                    json!({ "method": "exact", "set": v.set, "value": v.value })
                }
                "approx" => {
                    let opts = ctx.solver_options();
                    let delta = practical_delta(common.epsilon, g.n());
                    let (v, rep) = ctx.timed("solve", || approx_gwc(g, &s, delta, &opts))?;
                    json!({ "method": "approx", "set": s, "value": v, "solve": rep })
                }
                other => return Err(CliError::Usage(format!("unknown gwc method '{other}'"))),
            }
        }
        Command::Mingwc { k, method } => {
            let trace = match method.as_str() {
                "deter" => ctx.timed("greedy", || deter_min_gwc(g, *k))?,
                "approx" => {
                    let cfg = OptimizerConfig {
                        mode: ctx.mode(),
                        method: ctx.method(),
                        ..OptimizerConfig::new(*k, common.epsilon, ctx.seed())
                    };
                    ctx.timed("greedy", || approx_min_gwc(g, &cfg))?
                }
                "brute" => {
                    let (set, value) = ctx.timed("enumerate", || {
                        brute_force_min_gwc(g, *k, &BruteForceConfig::default())
                    })?;
                    GreedyTrace {
                        gwc_values: vec![value],
                        selected: set,
                        gains: Vec::new(),
                        gwc_exact: true,
                        method: walkcent::SelectionMethod::Brute,
                    }
                }
                other => {
                    let Some(name) = other.strip_prefix("baseline:") else {
                        return Err(CliError::Usage(format!("unknown mingwc method '{other}'")));
                    };
                    let b: Baseline = name.parse()?;
                    let seed = if b == Baseline::Random { ctx.seed() } else { common.seed.unwrap_or(0) };
                    ctx.timed("baseline", || baseline_select(g, *k, b, seed))?
                }
            };
            let mut csv = String::from("step,vertex,label,gwc\n");
            let per_step = trace.gwc_values.len() == trace.selected.len();
            for (i, &v) in trace.selected.iter().enumerate() {
                let value = if per_step { trace.gwc_values[i].to_string() } else { String::new() };
                csv.push_str(&format!("{},{v},{},{value}\n", i + 1, csv_escape(&data.labels[v])));
            }
            ctx.csv = Some(csv);
            trace_json(&trace, &data)
        }
        Command::Generate { edges } => {
            let spec = model_spec(common)?.expect("checked above");
            let kemeny = closed_form_kemeny(&spec).ok();
            let mut out = json!({ "n": g.n(), "m": g.m(), "closed_form_kemeny": kemeny });
            match edges {
                Some(path) => {
                    write_edge_list_file(g, path)?;
                    out["edges_file"] = json!(path.display().to_string());
                }
                None => {
                    out["edges"] = json!(g.edges().iter().map(|&(u, v, _)| [u, v]).collect::<Vec<_>>());
                }
            }
            out
        }
        Command::Oracle { trials, set } => {
            let seed = ctx.seed();
            let exact = walk_centrality_exact(g).ok();
            let estimates = ctx.timed("simulate", || {
                (0..g.n())
                    .map(|j| estimate_walk_centrality(g, j, *trials, derive_seed(seed, j as u64)))
                    .collect::<walkcent::Result<Vec<_>>>()
            })?;
            let kemeny = ctx.timed("simulate-kemeny", || {
                estimate_kemeny(g, *trials, derive_seed(seed, u64::MAX))
            })?;
            let mut csv = String::from("vertex,label,estimate,stderr,exact\n");
            for (j, e) in estimates.iter().enumerate() {
                let x = exact.as_ref().map_or(String::new(), |r| r.walk_centrality[j].to_string());
                csv.push_str(&format!("{j},{},{},{},{x}\n", csv_escape(&data.labels[j]), e.mean, e.stderr));
            }
            ctx.csv = Some(csv);
            let mut out = json!({
                "trials": trials,
                "walk_centrality": estimates,
                "kemeny": kemeny,
                "exact_walk_centrality": exact.as_ref().map(|r| &r.walk_centrality),
                "exact_kemeny": exact.as_ref().map(|r| r.kemeny),
            });
            if !set.is_empty() {
                let s = data.vertices(set)?;
                let est = ctx.timed("simulate-gwc", || {
                    estimate_gwc(g, &s, *trials, derive_seed(seed, u64::MAX - 1))
                })?;
                out["gwc"] = json!({
                    "set": s,
                    "estimate": est,
                    "exact": gwc_exact(g, &s).ok().map(|v| v.value),
                });
            }
            out
        }
        Command::Detour { set, i, j, trials } => {
            let s = data.vertices(set)?;
            let (i, j) = (data.vertex(i)?, data.vertex(j)?);
            let value = ctx.timed("exact", || group_detour_time(g, &s, i, j))?;
            let mut out = json!({ "set": s, "i": i, "j": j, "value": value });
            if let Some(t) = trials {
                let seed = ctx.seed();
                let est = ctx.timed("simulate", || estimate_detour(g, &s, i, j, *t, seed))?;
                out["estimate"] = json!(est);
            }
            out
        }
    };

    if let Some(path) = &common.csv {
        let table = ctx
            .csv
            .take()
            .ok_or_else(|| CliError::Usage(format!("{} has no table to write as CSV", cli.command.name())))?;
        let mut f = BufWriter::new(File::create(path)?);
        f.write_all(table.as_bytes())?;
        f.flush()?;
    }
    let report = RunReport {
        command: argv,
        subcommand: cli.command.name().to_string(),
        graph: data.stats,
        phases: ctx.phases,
        seed: ctx.seed,
        tolerance_mode: ctx.mode,
        results,
        out: common.out.clone(),
    };
    if let Some(path) = &report.out {
        std::fs::write(path, report.to_json())?;
    }
    Ok(report)
}

/// Parse `argv` (including the program name), run the command and return
/// its report. The report is also written to `--out` when given, and the
/// table to `--csv`.
pub fn run_command<I, S>(argv: I) -> Result<RunReport, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv)?;
    run(cli, argv)
}
