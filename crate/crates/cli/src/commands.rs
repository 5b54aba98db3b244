use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use attrnet::estimation::{estimate, FitRange, GrowthCurve};
use attrnet::graph::io::{read_edges, write_edges};
use attrnet::graph::{calibrate_model, generate_from_weights, EdgeModel, Influence, ModelKind, PairWeights};
use attrnet::ingest::{build_matrix, read_directory, read_tsv, write_features, Stoplist, TOKENIZER_VERSION};
use attrnet::likelihood::{log_likelihood, objective};
use attrnet::mcmc::{recover_fitness, recover_fitness_normalized, InitialFitness, McmcConfig};
use attrnet::model::io::{load_fitness, load_matrix, write_fitness, write_matrix, MatrixMeta};
use attrnet::model::{generate, AttributeMatrix, FitnessSpec, FitnessVector, ModelParams};
use attrnet::rank::{rank_row, standard_prefixes};
use attrnet::stats::{topology_report, DistanceMode};
use clap::Args;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::output::{cdf_csv, degree_csv, emit, growth_csv, num, to_json, trace_csv, write_file};

pub fn read_matrix_file(path: &Path) -> Result<(AttributeMatrix, MatrixMeta)> {
    load_matrix(path).map_err(|source| CliError::Read { path: path.into(), source })
}

pub fn read_fitness_file(path: &Path) -> Result<FitnessVector> {
    load_fitness(path).map_err(|source| CliError::Read { path: path.into(), source })
}

fn matrix_text(m: &AttributeMatrix, meta: &MatrixMeta) -> Vec<u8> {
    let mut buf = Vec::new();
    write_matrix(&mut buf, m, meta).expect("writing to memory");
    buf
}

pub fn fitness_text(values: &[f64]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_fitness(&mut buf, values).expect("writing to memory");
    buf
}

fn or_meta(flag: Option<f64>, meta: Option<f64>, name: &str) -> Result<f64> {
    flag.or(meta)
        .ok_or_else(|| CliError::Usage(format!("--{name} is required (the matrix header does not record it)")))
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long)]
    pub n: usize,
    /// e.g. uniform:0.25:1.75, two-point:0.25:1.75, zipf:2:10, constant:1
    #[arg(long)]
    pub fitness: FitnessSpec,
    #[arg(long)]
    pub seed: u64,
    /// Matrix file (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to store the realized fitness values.
    #[arg(long)]
    pub fitness_out: Option<PathBuf>,
    /// Where to store the `i,L_i` growth curve.
    #[arg(long)]
    pub growth_csv: Option<PathBuf>,
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let params = ModelParams::with_offset(a.alpha, a.beta, a.c)?;
    let g = generate(&params, &a.fitness, a.n, a.seed)?;
    let meta = MatrixMeta { alpha: Some(a.alpha), beta: Some(a.beta), c: Some(a.c), seed: Some(a.seed) };
    if let Some(p) = &a.fitness_out {
        write_file(p, &fitness_text(g.fitness.values()))?;
    }
    if let Some(p) = &a.growth_csv {
        write_file(p, growth_csv(g.matrix.prefix_totals()).as_bytes())?;
    }
    let text = matrix_text(&g.matrix, &meta);
    emit(a.out.as_deref(), &String::from_utf8(text).expect("ascii"))
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    pub matrix: PathBuf,
    /// Known mean fitness m_R; enables the alpha estimate.
    #[arg(long)]
    pub mean_fitness: Option<f64>,
    /// First node (1-based) of the regression range.
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long)]
    pub end: Option<usize>,
    #[arg(long)]
    pub growth_csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn fit_range(n: usize, start: Option<usize>, end: Option<usize>) -> Option<FitRange> {
    if start.is_none() && end.is_none() {
        return None;
    }
    let d = FitRange::default_for(n);
    Some(FitRange { start: start.unwrap_or(d.start), end: end.unwrap_or(d.end) })
}

pub fn estimate_json(m: &AttributeMatrix, mean_fitness: Option<f64>, range: Option<FitRange>) -> Result<Value> {
    let curve = GrowthCurve::from_matrix(m);
    let est = estimate(&curve, mean_fitness, range)?;
    Ok(json!({
        "n": m.n(),
        "L_n": m.num_features(),
        "beta_hat": num(est.beta_hat),
        "beta_out_of_range": est.beta_out_of_range,
        "alpha_prime_hat": num(est.alpha_prime_hat),
        "alpha_hat": est.alpha_hat.map(num),
        "fit_range": est.fit_range,
        "r2": num(est.r2),
    }))
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    let (m, _) = read_matrix_file(&a.matrix)?;
    if let Some(p) = &a.growth_csv {
        write_file(p, growth_csv(m.prefix_totals()).as_bytes())?;
    }
    let v = estimate_json(&m, a.mean_fitness, fit_range(m.n(), a.start, a.end))?;
    emit(a.out.as_deref(), &to_json(&v)?)
}

#[derive(Debug, Args)]
pub struct LoglikArgs {
    pub matrix: PathBuf,
    /// Fitness values, one per line.
    #[arg(long)]
    pub fitness: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_loglik(a: &LoglikArgs) -> Result<()> {
    let (m, meta) = read_matrix_file(&a.matrix)?;
    let r = read_fitness_file(&a.fitness)?;
    let params = ModelParams::with_offset(
        or_meta(a.alpha, meta.alpha, "alpha")?,
        or_meta(a.beta, meta.beta, "beta")?,
        a.c.or(meta.c).unwrap_or(0.0),
    )?;
    let ll = log_likelihood(&m, r.values(), &params)?;
    let obj = objective(&m, r.values(), &params)?;
    let v = json!({
        "n": m.n(),
        "log_likelihood": num(ll.value()),
        "objective": num(obj.value()),
        "impossible": ll.is_impossible(),
    });
    emit(a.out.as_deref(), &to_json(&v)?)
}

#[derive(Debug, Args)]
pub struct InferArgs {
    pub matrix: PathBuf,
    /// Known alpha; together with --beta skips the estimation steps.
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long = "J", default_value_t = 4)]
    pub proposals: usize,
    #[arg(long = "t", default_value_t = 0.25)]
    pub threshold: f64,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub kn: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV of the objective after every step.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Recovered values, one per line, for `rank-eval`.
    #[arg(long)]
    pub fitness_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct Inference {
    pub summary: Value,
    pub r: Vec<f64>,
    pub objective: Vec<f64>,
}

pub fn infer(m: &AttributeMatrix, known: Option<(f64, f64)>, c: f64, cfg: &McmcConfig) -> Result<Inference> {
    let (beta, alpha_prime, estimated, trace) = match known {
        Some((alpha, beta)) => {
            let params = ModelParams::with_offset(alpha, beta, c)?;
            (Some(beta), Some(alpha), false, recover_fitness(m, &params, cfg)?)
        }
        None => {
            let fit = recover_fitness_normalized(m, c, None, cfg)?;
            (fit.beta, fit.alpha_prime, true, fit.trace)
        }
    };
    let summary = json!({
        "n": m.n(),
        "estimated": estimated,
        "beta_hat": beta.map(num),
        "alpha_prime_hat": alpha_prime.map(num),
        "seed": cfg.seed,
        "iterations": trace.iterations,
        "accepted": trace.accepted,
        "converged": trace.converged,
        "nondecreasing": trace.is_nondecreasing(),
        "initial_objective": num(trace.initial_objective),
        "final_objective": num(trace.final_objective_exact),
        "r_prime": trace.r,
    });
    Ok(Inference { summary, r: trace.r, objective: trace.objective })
}

pub fn cmd_infer(a: &InferArgs) -> Result<()> {
    let (m, _) = read_matrix_file(&a.matrix)?;
    let cfg = McmcConfig {
        sigma2: a.sigma2,
        proposals: a.proposals,
        initial: InitialFitness::Fill(a.r0),
        threshold: a.threshold,
        window: a.window,
        active_prefix: a.kn,
        max_iters: a.max_iters,
        support: None,
        seed: a.seed,
        record_trace: a.trace.is_some(),
    };
    let known = a.alpha.zip(a.beta);
    let mut res = infer(&m, known, a.c, &cfg)?;
    if let Some(p) = &a.trace {
        write_file(p, trace_csv(&res.objective).as_bytes())?;
        res.summary["trace"] = Value::from(p.display().to_string());
    }
    if let Some(p) = &a.fitness_out {
        write_file(p, &fitness_text(&res.r))?;
    }
    emit(a.out.as_deref(), &to_json(&res.summary)?)
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// True fitness values.
    pub truth: PathBuf,
    /// Recovered fitness values.
    pub estimate: PathBuf,
    /// Prefix lengths; defaults to floor(sqrt(n)), n/2 and n.
    #[arg(long)]
    pub kn: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn rank_json(truth: &[f64], est: &[f64], ks: &[usize]) -> Result<Value> {
    let rows = ks
        .iter()
        .map(|&k| {
            let r = rank_row(truth, est, k)?;
            Ok(json!({
                "k": k,
                "kendall_tau": r.kendall_tau,
                "weighted_by_position": r.weighted_by_position,
                "weighted_by_value": r.weighted_by_value,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "n": truth.len(), "rows": rows }))
}

pub fn cmd_rank(a: &RankArgs) -> Result<()> {
    let truth = read_fitness_file(&a.truth)?;
    let est = read_fitness_file(&a.estimate)?;
    let ks = if a.kn.is_empty() { standard_prefixes(truth.len()) } else { a.kn.clone() };
    let v = rank_json(truth.values(), est.values(), &ks)?;
    emit(a.out.as_deref(), &to_json(&v)?)
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    pub matrix: PathBuf,
    #[arg(long, default_value = "ff")]
    pub model: ModelKind,
    /// Sigmoid steepness; `inf` gives the step function.
    #[arg(long = "K")]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Expected edge count used to calibrate theta.
    #[arg(long, conflicts_with = "theta", required_unless_present = "theta")]
    pub target_m: Option<f64>,
    /// Fixed threshold instead of calibration.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    /// Edge-list output.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON metadata (standard output if omitted).
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

pub struct GraphOutput {
    pub edges: Vec<u8>,
    pub meta: Value,
    pub graph: attrnet::graph::Graph,
}

pub fn build_graph(
    m: &AttributeMatrix,
    kind: ModelKind,
    k: f64,
    delta: f64,
    target_m: Option<f64>,
    theta: Option<f64>,
    seed: u64,
) -> Result<GraphOutput> {
    let mut model = EdgeModel::new(kind, k, theta.unwrap_or(0.0), delta)?;
    let weights = PairWeights::compute(m, &Influence::Identity);
    let calibration = match target_m {
        Some(t) => Some(calibrate_model(&weights, &mut model, t)?),
        None => None,
    };
    let build = generate_from_weights(&weights, &model, seed)?;
    let mut edges = Vec::new();
    write_edges(&mut edges, &build.graph).expect("writing to memory");
    let meta = json!({
        "model": kind.to_string(),
        "K": num(k),
        "theta": num(model.theta),
        "delta": num(delta),
        "seed": seed,
        "n": m.n(),
        "m_realized": build.graph.edge_count(),
        "target_m": target_m.map(num),
        "expected_m": calibration.map(|c| num(c.expected)),
        "background_edges": build.background_edges,
        "closure_edges": build.closure_edges,
    });
    Ok(GraphOutput { edges, meta, graph: build.graph })
}

pub fn cmd_graph(a: &GraphArgs) -> Result<()> {
    let (m, _) = read_matrix_file(&a.matrix)?;
    let out = build_graph(&m, a.model, a.k, a.delta, a.target_m, a.theta, a.seed)?;
    write_file(&a.out, &out.edges)?;
    emit(a.meta.as_deref(), &to_json(&out.meta)?)
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Edge-list file.
    pub edges: PathBuf,
    /// Node count, overriding the file header.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Sample this many BFS sources instead of running from every node.
    #[arg(long)]
    pub sources: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub degree_csv: Option<PathBuf>,
    #[arg(long)]
    pub cdf_csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct StatsOutput {
    pub summary: Value,
    pub degree_csv: String,
    pub cdf_csv: String,
}

pub fn stats_of(g: &attrnet::graph::Graph, mode: DistanceMode) -> Result<StatsOutput> {
    let r = topology_report(g, mode)?;
    let summary = json!({
        "n": r.n,
        "m": r.edges,
        "reachable_fraction": num(r.distances.reachable_fraction),
        "standard_error": r.distances.standard_error.map(num),
        "mode": r.distances.mode,
        "max_distance": r.distances.cdf.len(),
    });
    Ok(StatsOutput {
        summary,
        degree_csv: degree_csv(&r.degree_histogram),
        cdf_csv: cdf_csv(&r.distances.cdf),
    })
}

pub fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let file = File::open(&a.edges).map_err(CliError::io(&a.edges))?;
    let g = read_edges(BufReader::new(file), a.nodes)
        .map_err(|source| CliError::EdgeList { path: a.edges.clone(), source })?;
    let mode = match a.sources {
        Some(sources) => DistanceMode::Sampled { sources, seed: a.seed },
        None => DistanceMode::Exact,
    };
    let out = stats_of(&g, mode)?;
    if let Some(p) = &a.degree_csv {
        write_file(p, out.degree_csv.as_bytes())?;
    }
    if let Some(p) = &a.cdf_csv {
        write_file(p, out.cdf_csv.as_bytes())?;
    }
    emit(a.out.as_deref(), &to_json(&out.summary)?)
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Single TSV file with id, date, title and abstract columns.
    #[arg(long, conflicts_with_all = ["dir", "manifest"], required_unless_present = "dir")]
    pub tsv: Option<PathBuf>,
    /// Directory of documents, read in the order listed by --manifest.
    #[arg(long, requires = "manifest")]
    pub dir: Option<PathBuf>,
    #[arg(long, requires = "dir")]
    pub manifest: Option<PathBuf>,
    /// Newline-separated words to exclude.
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    /// Reorder documents by their date field before assigning features.
    #[arg(long)]
    pub sort_by_date: bool,
    /// Matrix output.
    #[arg(long)]
    pub out: PathBuf,
    /// `index<TAB>word` table.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// JSON summary (standard output if omitted).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

pub fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let mut corpus = match (&a.tsv, &a.dir, &a.manifest) {
        (Some(t), _, _) => read_tsv(BufReader::new(File::open(t).map_err(CliError::io(t))?))?,
        (None, Some(d), Some(m)) => read_directory(d, m)?,
        _ => return Err(CliError::Usage("give either --tsv or --dir with --manifest".into())),
    };
    if a.sort_by_date {
        corpus.sort_by_date();
    }
    let stoplist = match &a.stoplist {
        Some(p) => Stoplist::load(p)?,
        None => Stoplist::empty(),
    };
    let out = build_matrix(&corpus, &stoplist)?;
    write_file(&a.out, &matrix_text(&out.matrix, &MatrixMeta::default()))?;
    if let Some(p) = &a.features {
        let mut buf = Vec::new();
        write_features(&mut buf, &out.features).expect("writing to memory");
        write_file(p, &buf)?;
    }
    let v = json!({
        "n": out.matrix.n(),
        "features": out.matrix.num_features(),
        "ones": out.matrix.ones(),
        "skipped": out.skipped,
        "stoplist_words": stoplist.len(),
        "tokenizer": TOKENIZER_VERSION,
    });
    emit(a.summary.as_deref(), &to_json(&v)?)
}
