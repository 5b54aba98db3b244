use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_attrnet"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    let out = run(&[
        "generate", "--alpha", "3", "--beta", "0.5", "--n", "500", "--fitness", "uniform:0.25:1.75", "--seed", "7",
        "--out", p(&m),
    ]);
    assert!(out.status.success());
    let v = ok_json(&["estimate", p(&m), "--mean-fitness", "1"]);
    let beta = v["beta_hat"].as_f64().unwrap();
    assert!((beta - 0.5).abs() < 0.15, "beta_hat {beta}");
    assert!(v["alpha_hat"].as_f64().is_some());
    assert_eq!(v["n"], 500);

    // Same seed, same bytes.
    let again = run(&["generate", "--alpha", "3", "--beta", "0.5", "--n", "500", "--fitness", "uniform:0.25:1.75", "--seed", "7"]);
    assert_eq!(again.stdout, fs::read(&m).unwrap());
}

#[test]
fn loglik_infer_and_rank() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    let r = dir.path().join("r.txt");
    let rh = dir.path().join("rh.txt");
    let trace = dir.path().join("trace.csv");
    assert!(run(&[
        "generate", "--alpha", "3", "--beta", "0.8", "--n", "200", "--fitness", "two-point:0.25:1.75", "--seed", "3",
        "--out", p(&m), "--fitness-out", p(&r),
    ])
    .status
    .success());
    let ll = ok_json(&["loglik", p(&m), "--fitness", p(&r)]);
    assert!(ll["log_likelihood"].as_f64().unwrap() < 0.0);
    assert_eq!(ll["impossible"], false);

    let inf = ok_json(&[
        "infer-fitness", p(&m), "--alpha", "3", "--beta", "0.8", "--seed", "1", "--trace", p(&trace), "--fitness-out",
        p(&rh),
    ]);
    assert_eq!(inf["nondecreasing"], true);
    assert_eq!(inf["r_prime"].as_array().unwrap().len(), 200);
    let rows = fs::read_to_string(&trace).unwrap().lines().count();
    assert_eq!(rows as u64, inf["iterations"].as_u64().unwrap() + 1);

    let rank = ok_json(&["rank-eval", p(&r), p(&rh)]);
    let ks: Vec<u64> = rank["rows"].as_array().unwrap().iter().map(|r| r["k"].as_u64().unwrap()).collect();
    assert_eq!(ks, vec![14, 100, 200]);
    let rank = ok_json(&["rank-eval", p(&r), p(&r), "--kn", "50"]);
    assert_eq!(rank["rows"][0]["kendall_tau"], 1.0);
}

#[test]
fn graph_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    let g = dir.path().join("g.edges");
    assert!(run(&[
        "generate", "--alpha", "3", "--beta", "0.75", "--n", "300", "--fitness", "uniform:0.75:1.25", "--seed", "5",
        "--out", p(&m),
    ])
    .status
    .success());
    let meta = ok_json(&["graph", p(&m), "--model", "ffjr", "--K", "1", "--delta", "0.75", "--target-m", "600", "--seed", "2", "--out", p(&g)]);
    for key in ["model", "K", "theta", "delta", "seed", "n", "m_realized"] {
        assert!(meta.get(key).is_some(), "missing {key}");
    }
    assert_eq!(meta["model"], "ffjr");
    let meta = ok_json(&["graph", p(&m), "--K", "inf", "--target-m", "600", "--seed", "2", "--out", p(&g)]);
    assert_eq!(meta["K"], "inf");

    let deg = dir.path().join("deg.csv");
    let cdf = dir.path().join("cdf.csv");
    let s = ok_json(&["stats", p(&g), "--degree-csv", p(&deg), "--cdf-csv", p(&cdf)]);
    assert_eq!(s["m"], meta["m_realized"]);
    let deg = fs::read_to_string(&deg).unwrap();
    assert!(deg.starts_with("degree,count\n"));
    let total: u64 = deg.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 300);
    let last = fs::read_to_string(&cdf).unwrap().lines().last().unwrap().to_string();
    let peak: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((peak - s["reachable_fraction"].as_f64().unwrap()).abs() < 1e-15);

    let sampled = ok_json(&["stats", p(&g), "--sources", "50", "--seed", "4"]);
    assert!(sampled["standard_error"].as_f64().is_some());
}

#[test]
fn stats_on_an_empty_graph() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.edges");
    fs::write(&g, "# nodes 6\n").unwrap();
    let s = ok_json(&["stats", p(&g)]);
    assert_eq!(s["reachable_fraction"], 0.0);
    assert_eq!(s["n"], 6);
}

#[test]
fn ingest_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("c.tsv");
    let stop = dir.path().join("stop.txt");
    fs::write(&tsv, "id\tdate\ttitle\tabstract\nb\t2001\tgauge fields\tthe duality\na\t2000\tstring theory\tof gauge fields\n").unwrap();
    fs::write(&stop, "the\nof\n").unwrap();
    let m = dir.path().join("m.txt");
    let f = dir.path().join("f.tsv");
    let s = ok_json(&[
        "ingest", "--tsv", p(&tsv), "--stoplist", p(&stop), "--sort-by-date", "--out", p(&m), "--features", p(&f),
    ]);
    assert_eq!(s["n"], 2);
    assert_eq!(s["features"], 5);
    assert_eq!(s["tokenizer"], "lowercase-alphabetic-min2/v1");
    assert_eq!(fs::read_to_string(&f).unwrap().lines().next(), Some("0\tstring"));
    let text = fs::read_to_string(&m).unwrap();
    assert!(text.ends_with("0 1 2 3\n2 3 4\n"), "{text}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["generate", "--alpha", "3"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["estimate", "/definitely/not/here.txt"]).status.code(), Some(2));
    let out = run(&["generate", "--alpha=-1", "--beta", "0.5", "--n", "5", "--fitness", "constant:1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const SWEEP: &str = r#"
name = "small-sweep"
seed = 5
replicas = 2
n = 150
fitness = "uniform:0.75:1.25"

[model]
alpha = [3.0, 10.0]
beta = 0.75

[estimate]
mean_fitness = 1.0

[infer_fitness]
known_params = true
max_iters = 3000
save_trace = true

[graph]
model = ["ff", "ffjr"]
K = [1.0, inf]
delta = 0.75
target_m = 300

[stats]
"#;

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["run", p(&cfg), "--output", p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let fa = files_under(&a);
    assert_eq!(fa, files_under(&b));
    for f in &fa {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{}", f.display());
    }

    let manifest: Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"], SWEEP);
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 4);
    let listed = manifest["files"].as_object().unwrap();
    assert_eq!(listed.len() + 1, fa.len());
    for (rel, digest) in listed {
        let bytes = fs::read(a.join(rel)).unwrap();
        let want: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(digest.as_str(), Some(want.as_str()), "{rel}");
    }

    let graphs = fs::read_to_string(a.join("graphs.csv")).unwrap();
    assert_eq!(graphs.lines().count(), 1 + 2 * 2 * 2 * 2);
    let replicas = fs::read_to_string(a.join("replicas.csv")).unwrap();
    assert_eq!(replicas.lines().count(), 1 + 4);
    assert!(a.join("cell-1/rep-0/graph-ffjr-Kinf.edges").exists());
    assert!(a.join("cell-0/rep-1/trace.csv").exists());
    let infer: Value = serde_json::from_slice(&fs::read(a.join("cell-0/rep-0/infer.json")).unwrap()).unwrap();
    assert_eq!(infer["nondecreasing"], true);
}

#[test]
fn zero_replicas_write_only_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let body = SWEEP.replace("replicas = 2", "replicas = 0");
    let cfg = write_config(dir.path(), "empty.toml", &body);
    let out = dir.path().join("out");
    assert!(run(&["run", p(&cfg), "--output", p(&out)]).status.success());
    assert_eq!(files_under(&out), vec![PathBuf::from("manifest.json")]);
}

#[test]
fn bad_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("typo.toml", SWEEP.replace("replicas = 2", "replica = 2")),
        ("fitness.toml", SWEEP.replace("uniform:0.75:1.25", "gaussian:0:1")),
        ("beta.toml", SWEEP.replace("beta = 0.75", "beta = 2.0")),
        ("model.toml", SWEEP.replace("\"ffjr\"", "\"er\"")),
    ] {
        let cfg = write_config(dir.path(), name, &body);
        let out = run(&["run", p(&cfg), "--output", p(&dir.path().join("x"))]);
        assert_eq!(out.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let cfg = write_config(dir.path(), "no-output.toml", SWEEP);
    assert_eq!(run(&["run", p(&cfg)]).status.code(), Some(1));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for e in fs::read_dir(&root).unwrap() {
        let path = e.unwrap().path();
        if path.extension().is_some_and(|x| x == "toml") {
            let out = run(&["run", "--check", p(&path)]);
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
