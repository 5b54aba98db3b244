//! Declarative experiments: one TOML file describes the model sweep, the
//! replicas and the downstream steps; one output directory holds every
//! artifact plus `manifest.json`.
//!
//! Layout of the output directory:
//!
//! ```text
//! manifest.json
//! replicas.csv                 one row per replica
//! graphs.csv                   one row per generated graph
//! cell-<c>/rep-<r>/...         matrix, fitness, growth curve and step outputs
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use attrnet::graph::ModelKind;
use attrnet::mcmc::{InitialFitness, McmcConfig};
use attrnet::model::io::{write_matrix, MatrixMeta};
use attrnet::model::{generate, FitnessSpec, ModelParams};
use attrnet::rank::standard_prefixes;
use attrnet::rng::derive_seed;
use attrnet::stats::DistanceMode;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::{build_graph, estimate_json, fit_range, fitness_text, infer, rank_json, stats_of};
use crate::error::{CliError, Result};
use crate::output::{growth_csv, num, sha256_hex, to_json, trace_csv, write_file};

/// A scalar or a list of values to sweep over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    /// Master seed; every replica and step seed derives from it.
    pub seed: u64,
    pub replicas: usize,
    pub n: usize,
    /// Fitness spec, e.g. `uniform:0.25:1.75`.
    pub fitness: String,
    /// Output directory, relative to the working directory.
    pub output: Option<PathBuf>,
    pub model: ModelSection,
    #[serde(default = "yes")]
    pub save_matrices: bool,
    pub estimate: Option<EstimateStep>,
    pub infer_fitness: Option<InferStep>,
    pub graph: Option<GraphStep>,
    pub stats: Option<StatsStep>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: OneOrMany<f64>,
    pub beta: OneOrMany<f64>,
    #[serde(default)]
    pub c: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateStep {
    /// Known mean fitness; enables the alpha estimate.
    pub mean_fitness: Option<f64>,
    pub start: Option<usize>,
    pub end: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferStep {
    #[serde(default = "one")]
    pub sigma2: f64,
    #[serde(default = "four")]
    pub proposals: usize,
    #[serde(default = "quarter")]
    pub threshold: f64,
    pub window: Option<usize>,
    pub active_prefix: Option<usize>,
    pub max_iters: Option<usize>,
    #[serde(default = "one")]
    pub r0: f64,
    /// Use the generating alpha and beta instead of estimating them.
    #[serde(default)]
    pub known_params: bool,
    #[serde(default)]
    pub save_trace: bool,
}

fn one() -> f64 {
    1.0
}
fn four() -> usize {
    4
}
fn quarter() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphStep {
    pub model: OneOrMany<String>,
    /// Sigmoid steepness; TOML `inf` gives the step function.
    #[serde(rename = "K")]
    pub k: OneOrMany<f64>,
    #[serde(default = "one")]
    pub delta: f64,
    pub target_m: f64,
    #[serde(default = "yes")]
    pub save_edges: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsStep {
    /// Sampled BFS sources; exact when absent.
    pub sources: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.fitness_spec()?;
        for (alpha, beta) in cfg.cells() {
            ModelParams::with_offset(alpha, beta, cfg.model.c).map_err(|e| CliError::Usage(format!("model: {e}")))?;
        }
        if let Some(g) = &cfg.graph {
            for m in g.model.values() {
                m.parse::<ModelKind>().map_err(|e| CliError::Usage(format!("graph: {e}")))?;
            }
        }
        if cfg.stats.is_some() && cfg.graph.is_none() {
            return Err(CliError::Usage("stats needs a graph step".into()));
        }
        Ok(cfg)
    }

    fn fitness_spec(&self) -> Result<FitnessSpec> {
        self.fitness.parse().map_err(|e| CliError::Usage(format!("fitness: {e}")))
    }

    /// Model cells in sweep order: alpha outer, beta inner.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let betas = self.model.beta.values();
        self.model
            .alpha
            .values()
            .into_iter()
            .flat_map(|a| betas.iter().map(move |&b| (a, b)))
            .collect()
    }
}

/// Seed of replica `r` in cell `c`.
pub fn replica_seed(master: u64, cell: usize, replica: usize) -> u64 {
    derive_seed(derive_seed(master, cell as u64), replica as u64)
}

/// Files produced by one replica, keyed by path relative to the output directory.
type Files = BTreeMap<String, Vec<u8>>;

struct ReplicaOutput {
    files: Files,
    row: BTreeMap<&'static str, Value>,
    graph_rows: Vec<BTreeMap<&'static str, Value>>,
}

fn run_replica(cfg: &ExperimentConfig, cell: usize, (alpha, beta): (f64, f64), replica: usize) -> Result<ReplicaOutput> {
    let seed = replica_seed(cfg.seed, cell, replica);
    let dir = format!("cell-{cell}/rep-{replica}");
    let mut files = Files::new();
    let mut row = BTreeMap::new();
    row.insert("cell", json!(cell));
    row.insert("alpha", num(alpha));
    row.insert("beta", num(beta));
    row.insert("replica", json!(replica));
    row.insert("seed", json!(seed));

    let params = ModelParams::with_offset(alpha, beta, cfg.model.c)?;
    let spec = cfg.fitness_spec()?;
    let g = generate(&params, &spec, cfg.n, seed).map_err(|e| CliError::in_step("generate")(e.into()))?;
    row.insert("L_n", json!(g.matrix.num_features()));
    files.insert(format!("{dir}/growth.csv"), growth_csv(g.matrix.prefix_totals()).into_bytes());
    if cfg.save_matrices {
        let meta = MatrixMeta { alpha: Some(alpha), beta: Some(beta), c: Some(cfg.model.c), seed: Some(seed) };
        let mut buf = Vec::new();
        write_matrix(&mut buf, &g.matrix, &meta).expect("writing to memory");
        files.insert(format!("{dir}/matrix.txt"), buf);
        files.insert(format!("{dir}/fitness.txt"), fitness_text(g.fitness.values()));
    }

    if let Some(step) = &cfg.estimate {
        let range = fit_range(cfg.n, step.start, step.end);
        let v = estimate_json(&g.matrix, step.mean_fitness, range).map_err(CliError::in_step("estimate"))?;
        for key in ["beta_hat", "alpha_prime_hat", "alpha_hat"] {
            row.insert(key, v[key].clone());
        }
        files.insert(format!("{dir}/estimate.json"), to_json(&v)?.into_bytes());
    }

    if let Some(step) = &cfg.infer_fitness {
        let mcmc = McmcConfig {
            sigma2: step.sigma2,
            proposals: step.proposals,
            initial: InitialFitness::Fill(step.r0),
            threshold: step.threshold,
            window: step.window,
            active_prefix: step.active_prefix,
            max_iters: step.max_iters,
            support: None,
            seed: derive_seed(seed, 1),
            record_trace: step.save_trace,
        };
        let known = step.known_params.then_some((alpha, beta));
        let res = infer(&g.matrix, known, cfg.model.c, &mcmc).map_err(CliError::in_step("infer-fitness"))?;
        row.insert("mcmc_iterations", res.summary["iterations"].clone());
        row.insert("mcmc_converged", res.summary["converged"].clone());
        files.insert(format!("{dir}/fitness_hat.txt"), fitness_text(&res.r));
        files.insert(format!("{dir}/infer.json"), to_json(&res.summary)?.into_bytes());
        if step.save_trace {
            files.insert(format!("{dir}/trace.csv"), trace_csv(&res.objective).into_bytes());
        }
        let ks = standard_prefixes(cfg.n);
        if !ks.is_empty() {
            let ranks = rank_json(g.fitness.values(), &res.r, &ks).map_err(CliError::in_step("rank-eval"))?;
            if let Some(first) = ranks["rows"].get(0) {
                row.insert("kendall_tau_sqrt_n", first["kendall_tau"].clone());
            }
            files.insert(format!("{dir}/rank.json"), to_json(&ranks)?.into_bytes());
        }
    }

    let mut graph_rows = Vec::new();
    if let Some(step) = &cfg.graph {
        let mut index = 0u64;
        for model in step.model.values() {
            let kind: ModelKind = model.parse()?;
            for k in step.k.values() {
                index += 1;
                let gseed = derive_seed(seed, 100 + index);
                let name = format!("graph-{kind}-K{}", k_label(k));
                let out = build_graph(&g.matrix, kind, k, step.delta, Some(step.target_m), None, gseed)
                    .map_err(CliError::in_step(format!("graph {name}")))?;
                let mut grow = BTreeMap::new();
                grow.insert("cell", json!(cell));
                grow.insert("replica", json!(replica));
                grow.insert("model", json!(kind.to_string()));
                grow.insert("K", num(k));
                grow.insert("delta", num(step.delta));
                grow.insert("seed", json!(gseed));
                grow.insert("theta", out.meta["theta"].clone());
                grow.insert("m_realized", out.meta["m_realized"].clone());
                if let Some(stats) = &cfg.stats {
                    let mode = match stats.sources {
                        Some(s) => DistanceMode::Sampled { sources: s, seed: derive_seed(gseed, 1) },
                        None => DistanceMode::Exact,
                    };
                    let s = stats_of(&out.graph, mode).map_err(CliError::in_step(format!("stats {name}")))?;
                    grow.insert("reachable_fraction", s.summary["reachable_fraction"].clone());
                    files.insert(format!("{dir}/{name}.stats.json"), to_json(&s.summary)?.into_bytes());
                    files.insert(format!("{dir}/{name}.degrees.csv"), s.degree_csv.into_bytes());
                    files.insert(format!("{dir}/{name}.distances.csv"), s.cdf_csv.into_bytes());
                }
                if step.save_edges {
                    files.insert(format!("{dir}/{name}.edges"), out.edges);
                }
                files.insert(format!("{dir}/{name}.json"), to_json(&out.meta)?.into_bytes());
                graph_rows.push(grow);
            }
        }
    }
    Ok(ReplicaOutput { files, row, graph_rows })
}

fn k_label(k: f64) -> String {
    if k.is_infinite() {
        "inf".into()
    } else {
        k.to_string()
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn table(rows: &[BTreeMap<&'static str, Value>], columns: &[&str]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = columns.iter().map(|c| r.get(c).map(csv_cell).unwrap_or_default()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Summary of a finished run.
#[derive(Debug)]
pub struct RunReport {
    pub output: PathBuf,
    pub files: usize,
    pub failures: Vec<String>,
}

/// Runs the experiment described by `text` and writes its outputs under
/// `output` (or the directory named in the config).
pub fn run(text: &str, output: Option<&Path>) -> Result<RunReport> {
    let cfg = ExperimentConfig::parse(text)?;
    let out_dir = output
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::Usage("no output directory: set `output` or pass --output".into()))?;
    fs::create_dir_all(&out_dir).map_err(CliError::io(&out_dir))?;

    let cells = cfg.cells();
    let jobs: Vec<(usize, (f64, f64), usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, &ab)| (0..cfg.replicas).map(move |r| (c, ab, r)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(c, ab, r)| {
            let res = run_replica(&cfg, c, ab, r);
            // Each replica owns its directory; write as soon as it is done so
            // partial results survive a failure elsewhere.
            if let Ok(out) = &res {
                for (rel, bytes) in &out.files {
                    write_file(&out_dir.join(rel), bytes)?;
                }
            }
            Ok::<_, CliError>(res)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut files = Files::new();
    let mut rows = Vec::new();
    let mut graph_rows = Vec::new();
    let mut failures = Vec::new();
    for (&(c, _, r), res) in jobs.iter().zip(results) {
        match res {
            Ok(out) => {
                files.extend(out.files);
                rows.push(out.row);
                graph_rows.extend(out.graph_rows);
            }
            Err(e) => {
                log::error!("cell {c} replica {r}: {e}");
                failures.push(format!("cell {c} replica {r}: {e}"));
            }
        }
    }

    if !jobs.is_empty() {
        let columns = [
            "cell",
            "alpha",
            "beta",
            "replica",
            "seed",
            "L_n",
            "beta_hat",
            "alpha_prime_hat",
            "alpha_hat",
            "mcmc_iterations",
            "mcmc_converged",
            "kendall_tau_sqrt_n",
        ];
        files.insert("replicas.csv".into(), table(&rows, &columns).into_bytes());
        if cfg.graph.is_some() {
            let columns = [
                "cell",
                "replica",
                "model",
                "K",
                "delta",
                "seed",
                "theta",
                "m_realized",
                "reachable_fraction",
            ];
            files.insert("graphs.csv".into(), table(&graph_rows, &columns).into_bytes());
        }
        for name in ["replicas.csv", "graphs.csv"] {
            if let Some(bytes) = files.get(name) {
                write_file(&out_dir.join(name), bytes)?;
            }
        }
    }

    let seeds: Vec<Value> = jobs
        .iter()
        .map(|&(c, (a, b), r)| json!({ "cell": c, "alpha": num(a), "beta": num(b), "replica": r, "seed": replica_seed(cfg.seed, c, r) }))
        .collect();
    let digests: BTreeMap<&String, String> = files.iter().map(|(k, v)| (k, sha256_hex(v))).collect();
    let manifest = json!({
        "tool": concat!("attrnet ", env!("CARGO_PKG_VERSION")),
        "config": text,
        "master_seed": cfg.seed,
        "seeds": seeds,
        "files": digests,
        "failures": failures,
    });
    write_file(&out_dir.join("manifest.json"), to_json(&manifest)?.as_bytes())?;

    let report = RunReport { output: out_dir, files: files.len(), failures };
    if let Some(first) = report.failures.first() {
        return Err(CliError::ReplicasFailed { count: report.failures.len(), first: first.clone() });
    }
    Ok(report)
}
