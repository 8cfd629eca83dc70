//! The `sample`, `learn` and `benchmark` commands.
//!
//! Reports are JSON (`"schema": 1`). The benchmark table is rendered from
//! the JSON value, never from the in-memory structs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::bnet::{parse_bif, sample, tile, BifError, CptNetwork};
use crate::citest::{CiEngine, CiError, DEFAULT_ALPHA, DEFAULT_RELIABILITY_K};
use crate::data::{DataError, Dataset};
use crate::graph::{elcs, ElcsOptions};
use crate::mb::{emb, iamb, MbError, MbOptions};
use crate::metrics::{score_local, MetricsError, Summary};
use crate::Var;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum CmdError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Bif { path: PathBuf, source: BifError },
    #[error("{path}: {source}")]
    Data { path: PathBuf, source: DataError },
    #[error(transparent)]
    Ci(CiError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CmdError {
    /// 1 usage, 2 data or parse, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::Io { .. } | CmdError::Bif { .. } | CmdError::Data { .. } => 2,
            CmdError::Ci(CiError::Data(_)) => 2,
            CmdError::Ci(CiError::InvalidAlpha(_) | CiError::InvalidReliability(_)) => 1,
            CmdError::Ci(_) | CmdError::Internal(_) => 3,
        }
    }
}

impl From<MbError> for CmdError {
    fn from(e: MbError) -> Self {
        match e {
            MbError::Ci(e) => CmdError::Ci(e),
            MbError::Invariant(m) => CmdError::Internal(m),
        }
    }
}

impl From<MetricsError> for CmdError {
    fn from(e: MetricsError) -> Self {
        CmdError::Internal(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Elcs,
    Elcs2,
    Emb,
    Iamb,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Elcs => "elcs",
            Algo::Elcs2 => "elcs2",
            Algo::Emb => "emb",
            Algo::Iamb => "iamb",
        }
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "elcs" => Ok(Algo::Elcs),
            "elcs2" => Ok(Algo::Elcs2),
            "emb" => Ok(Algo::Emb),
            "iamb" => Ok(Algo::Iamb),
            _ => Err(format!("unknown algorithm {s:?} (expected elcs, elcs2, emb or iamb)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algo: Algo,
    pub alpha: f64,
    pub reliability_k: f64,
    pub max_cond: Option<usize>,
    pub no_n_structures: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algo: Algo::Elcs,
            alpha: DEFAULT_ALPHA,
            reliability_k: DEFAULT_RELIABILITY_K,
            max_cond: None,
            no_n_structures: false,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn engine<'a>(&self, data: &'a Dataset) -> Result<CiEngine<'a>, CmdError> {
        CiEngine::g2(data, self.alpha)
            .and_then(|e| e.with_reliability_k(self.reliability_k))
            .map(|e| e.with_max_cond(self.max_cond))
            .map_err(|e| CmdError::Usage(e.to_string()))
    }

    fn mb_options(&self) -> MbOptions {
        MbOptions {
            emb2: self.algo == Algo::Elcs2,
            no_n: self.no_n_structures,
        }
    }
}

/// What one learning call found for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct Learned {
    pub parents: BTreeSet<Var>,
    pub children: BTreeSet<Var>,
    pub undirected: BTreeSet<Var>,
    pub spouses: BTreeSet<Var>,
    pub mb: BTreeSet<Var>,
    pub ci_tests: u64,
    pub unreliable_tests: u64,
    pub time_ms: f64,
    pub mbs_learned: usize,
    pub termination: &'static str,
}

/// Runs the configured algorithm for `t`. `time_ms` covers this call only.
pub fn learn(engine: &mut CiEngine<'_>, t: Var, config: &RunConfig) -> Result<Learned, MbError> {
    let start = Instant::now();
    let tests = engine.test_count();
    let unreliable = engine.unreliable_count();
    let mut out = match config.algo {
        Algo::Elcs | Algo::Elcs2 => {
            let o = elcs(engine, t, ElcsOptions { mb: config.mb_options() })?;
            Learned {
                spouses: o.target_mb.spouses(),
                mb: o.target_mb.mb.clone(),
                parents: o.p,
                children: o.c,
                undirected: o.un,
                ci_tests: 0,
                unreliable_tests: 0,
                time_ms: 0.0,
                mbs_learned: o.stats.mbs_learned,
                termination: o.stats.termination.as_str(),
            }
        }
        Algo::Emb => {
            let r = emb(engine, t, config.mb_options())?;
            Learned {
                spouses: r.spouses(),
                mb: r.mb,
                parents: r.p,
                children: r.c,
                undirected: r.un,
                ci_tests: 0,
                unreliable_tests: 0,
                time_ms: 0.0,
                mbs_learned: 1,
                termination: "single-mb",
            }
        }
        Algo::Iamb => {
            let mb = iamb(engine, t)?;
            Learned {
                parents: BTreeSet::new(),
                children: BTreeSet::new(),
                undirected: mb.clone(),
                spouses: BTreeSet::new(),
                mb,
                ci_tests: 0,
                unreliable_tests: 0,
                time_ms: 0.0,
                mbs_learned: 1,
                termination: "single-mb",
            }
        }
    };
    out.time_ms = start.elapsed().as_secs_f64() * 1e3;
    out.ci_tests = engine.test_count() - tests;
    out.unreliable_tests = engine.unreliable_count() - unreliable;
    Ok(out)
}

fn names_of(names: &[String], set: &BTreeSet<Var>) -> Vec<String> {
    set.iter().map(|&v| names[v].clone()).collect()
}

pub fn load_network(path: &Path) -> Result<CptNetwork, CmdError> {
    let text = std::fs::read_to_string(path).map_err(|source| CmdError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_bif(&text).map_err(|source| CmdError::Bif {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CmdError> {
    std::fs::write(path, text).map_err(|source| CmdError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Samples `n` rows (from `copies` tiled copies when given) and writes the
/// CSV plus its `.card` sidecar. Returns a one-line summary.
pub fn cmd_sample(
    bif: &Path,
    n: usize,
    seed: u64,
    out: &Path,
    copies: Option<usize>,
) -> Result<String, CmdError> {
    if n == 0 {
        return Err(CmdError::Usage("--n must be at least 1".into()));
    }
    let mut net = load_network(bif)?;
    if let Some(k) = copies {
        if k == 0 {
            return Err(CmdError::Usage("--tile must be at least 1".into()));
        }
        net = tile(&net, k, seed);
    }
    let data = sample(&net, n, seed);
    data.write_csv(out).map_err(|source| CmdError::Data {
        path: out.to_owned(),
        source,
    })?;
    Ok(format!(
        "wrote {} rows x {} variables to {}",
        data.n_rows(),
        data.n_vars(),
        out.display()
    ))
}

#[derive(Debug, Serialize)]
struct LearnReport<'a> {
    schema: u32,
    algo: &'a str,
    target: &'a str,
    parents: Vec<String>,
    children: Vec<String>,
    undirected: Vec<String>,
    spouses: Vec<String>,
    mb: Vec<String>,
    ci_tests: u64,
    time_ms: f64,
    mbs_learned: usize,
    termination: &'a str,
    unreliable_tests: u64,
}

/// Learns the neighbourhood of `target` in the dataset at `data_path` and
/// returns the JSON report (also written to `out` when given).
pub fn cmd_learn(
    data_path: &Path,
    target: &str,
    config: &RunConfig,
    out: Option<&Path>,
) -> Result<String, CmdError> {
    let data = Dataset::load_csv(data_path).map_err(|source| CmdError::Data {
        path: data_path.to_owned(),
        source,
    })?;
    let t = data
        .index_of(target)
        .ok_or_else(|| CmdError::Usage(format!("unknown target {target:?}")))?;
    let mut engine = config.engine(&data)?;
    let r = learn(&mut engine, t, config)?;
    let names = data.names();
    let report = LearnReport {
        schema: SCHEMA,
        algo: config.algo.as_str(),
        target,
        parents: names_of(names, &r.parents),
        children: names_of(names, &r.children),
        undirected: names_of(names, &r.undirected),
        spouses: names_of(names, &r.spouses),
        mb: names_of(names, &r.mb),
        ci_tests: r.ci_tests,
        time_ms: r.time_ms,
        mbs_learned: r.mbs_learned,
        termination: r.termination,
        unreliable_tests: r.unreliable_tests,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = out {
        write_file(path, &json)?;
    }
    Ok(json)
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetResult {
    pub target: String,
    pub parents: Vec<String>,
    pub children: Vec<String>,
    pub undirected: Vec<String>,
    pub arr_p: f64,
    pub arr_r: f64,
    pub fdr: f64,
    pub shd: u64,
    pub ci_tests: u64,
    pub unreliable_tests: u64,
    pub time_ms: f64,
    pub mbs_learned: usize,
    pub termination: &'static str,
}

/// Per-field means over the targets of one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMeans {
    pub arr_p: f64,
    pub arr_r: f64,
    pub fdr: f64,
    pub shd: f64,
    pub ci_tests: f64,
    pub time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub means: RunMeans,
    pub ci_tests_total: u64,
    pub targets: Vec<TargetResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    pub arr_p: Summary,
    pub arr_r: Summary,
    pub fdr: Summary,
    pub shd: Summary,
    pub ci_tests: Summary,
    pub time_ms: Summary,
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeReport {
    pub n: usize,
    pub aggregate: RunSummary,
    pub runs: Vec<RunReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub schema: u32,
    pub network: String,
    pub variables: usize,
    pub edges: usize,
    pub algo: &'static str,
    pub alpha: f64,
    pub reliability_k: f64,
    pub max_cond: Option<usize>,
    pub no_n_structures: bool,
    pub seed: u64,
    pub tile: Option<usize>,
    pub targets: Vec<String>,
    pub sizes: Vec<SizeReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub sizes: Vec<usize>,
    pub runs: usize,
    /// Target names; empty means every variable.
    pub targets: Vec<String>,
    pub tile: Option<usize>,
}

/// Samples `runs` datasets per size (seeds `seed + i`), learns every
/// target on each and scores against the generating DAG.
pub fn benchmark(
    net: &CptNetwork,
    network: &str,
    spec: &BenchmarkSpec,
    config: &RunConfig,
) -> Result<BenchmarkReport, CmdError> {
    if spec.sizes.is_empty() || spec.sizes.contains(&0) {
        return Err(CmdError::Usage("sizes must be positive".into()));
    }
    if spec.runs == 0 {
        return Err(CmdError::Usage("--runs must be at least 1".into()));
    }
    let tiled;
    let net = match spec.tile {
        Some(0) => return Err(CmdError::Usage("--tile must be at least 1".into())),
        Some(k) => {
            tiled = tile(net, k, config.seed);
            &tiled
        }
        None => net,
    };
    let dag = net.dag();
    let names = dag.names();
    let targets: Vec<Var> = if spec.targets.is_empty() {
        (0..dag.n()).collect()
    } else {
        spec.targets
            .iter()
            .map(|s| {
                dag.index_of(s)
                    .ok_or_else(|| CmdError::Usage(format!("unknown target {s:?}")))
            })
            .collect::<Result<_, _>>()?
    };

    let mut sizes = Vec::with_capacity(spec.sizes.len());
    for &n in &spec.sizes {
        let mut runs = Vec::with_capacity(spec.runs);
        for i in 0..spec.runs {
            let seed = config.seed.wrapping_add(i as u64);
            let data = sample(net, n, seed);
            let results: Vec<TargetResult> = targets
                .par_iter()
                .map(|&t| -> Result<TargetResult, CmdError> {
                    let mut engine = config.engine(&data)?;
                    let r = learn(&mut engine, t, config)?;
                    let s = score_local(&r.parents, &r.children, &r.undirected, dag, t)?;
                    Ok(TargetResult {
                        target: names[t].clone(),
                        parents: names_of(names, &r.parents),
                        children: names_of(names, &r.children),
                        undirected: names_of(names, &r.undirected),
                        arr_p: s.arr_p,
                        arr_r: s.arr_r,
                        fdr: s.fdr,
                        shd: s.shd,
                        ci_tests: r.ci_tests,
                        unreliable_tests: r.unreliable_tests,
                        time_ms: r.time_ms,
                        mbs_learned: r.mbs_learned,
                        termination: r.termination,
                    })
                })
                .collect::<Result<_, _>>()?;
            let mean = |f: fn(&TargetResult) -> f64| {
                Summary::of(results.iter().map(f)).map_or(0.0, |s| s.mean)
            };
            runs.push(RunReport {
                seed,
                means: RunMeans {
                    arr_p: mean(|r| r.arr_p),
                    arr_r: mean(|r| r.arr_r),
                    fdr: mean(|r| r.fdr),
                    shd: mean(|r| r.shd as f64),
                    ci_tests: mean(|r| r.ci_tests as f64),
                    time_ms: mean(|r| r.time_ms),
                },
                ci_tests_total: results.iter().map(|r| r.ci_tests).sum(),
                targets: results,
            });
        }
        let summary = |f: fn(&RunMeans) -> f64| {
            Summary::of(runs.iter().map(|r| f(&r.means))).expect("runs >= 1")
        };
        sizes.push(SizeReport {
            n,
            aggregate: RunSummary {
                arr_p: summary(|m| m.arr_p),
                arr_r: summary(|m| m.arr_r),
                fdr: summary(|m| m.fdr),
                shd: summary(|m| m.shd),
                ci_tests: summary(|m| m.ci_tests),
                time_ms: summary(|m| m.time_ms),
            },
            runs,
        });
    }
    Ok(BenchmarkReport {
        schema: SCHEMA,
        network: network.to_owned(),
        variables: dag.n(),
        edges: dag.edge_count(),
        algo: config.algo.as_str(),
        alpha: config.alpha,
        reliability_k: config.reliability_k,
        max_cond: config.max_cond,
        no_n_structures: config.no_n_structures,
        seed: config.seed,
        tile: spec.tile,
        targets: targets.iter().map(|&t| names[t].clone()).collect(),
        sizes,
    })
}

/// Runs [`benchmark`] on a BIF file, writes the JSON report to `out` and
/// returns the rendered table.
pub fn cmd_benchmark(
    bif: &Path,
    spec: &BenchmarkSpec,
    config: &RunConfig,
    out: &Path,
) -> Result<String, CmdError> {
    let net = load_network(bif)?;
    let network = bif
        .file_stem()
        .map_or_else(|| "network".to_owned(), |s| s.to_string_lossy().into_owned());
    let report = benchmark(&net, &network, spec, config)?;
    let value = serde_json::to_value(&report).expect("report serializes");
    let json = serde_json::to_string_pretty(&value).expect("value serializes");
    write_file(out, &json)?;
    Ok(render_table(&value))
}

/// Human-readable summary of a benchmark JSON report.
pub fn render_table(report: &Value) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} ({} variables, {} edges), algo {}",
        report["network"].as_str().unwrap_or("?"),
        report["variables"],
        report["edges"],
        report["algo"].as_str().unwrap_or("?"),
    );
    let cols = ["arr_p", "arr_r", "shd", "fdr", "ci_tests", "time_ms"];
    let _ = write!(out, "{:>8}", "n");
    for c in cols {
        let _ = write!(out, " {c:>20}");
    }
    out.push('\n');
    for size in report["sizes"].as_array().into_iter().flatten() {
        let _ = write!(out, "{:>8}", size["n"]);
        for c in cols {
            let cell = &size["aggregate"][c];
            let (m, s) = (cell["mean"].as_f64(), cell["std"].as_f64());
            let text = match (m, s) {
                (Some(m), Some(s)) if c == "ci_tests" || c == "time_ms" => {
                    format!("{m:.1} ± {s:.1}")
                }
                (Some(m), Some(s)) => format!("{m:.3} ± {s:.3}"),
                _ => "-".into(),
            };
            let _ = write!(out, " {text:>20}");
        }
        out.push('\n');
    }
    out
}
