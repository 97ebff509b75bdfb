//! Size and edge-probability sweeps with CSV output.
//!
//! Sample `k` of cell `(n, p)` draws its instance from the child seed
//! `(master_seed, n, p bits, k)`, so any single record can be replayed on its
//! own. Greedy and brute force share the instance of each sample.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MacError, Result};
use crate::instance::{CMode, Instance};
use crate::rng::child_seed;
use crate::solver::{brute_force_capped, greedy, SideRestriction, DEFAULT_ENUMERATION_CAP};

pub const CSV_HEADER: &str = "n,p,sample,seed,budget,method,f,edges,ratio,runtime_ms,steps";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Brute,
    Greedy,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = MacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" | "brute-force" => Ok(Method::Brute),
            "greedy" => Ok(Method::Greedy),
            other => Err(MacError::invalid(
                "method",
                format!("`{other}` (expected `greedy` or `brute`)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Total agent counts; each is split evenly between the two sides.
    pub sizes: Vec<usize>,
    pub probs: Vec<f64>,
    pub samples_per_cell: usize,
    pub c_mode: CMode,
    pub side: SideRestriction,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    /// Enumeration cap for brute force.
    pub cap: u128,
    /// Record wall-clock times. When off, `runtime_ms` is 0 and output is
    /// byte-for-byte reproducible.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sizes: (4..=40).step_by(4).collect(),
            probs: vec![0.3, 0.8],
            samples_per_cell: 40,
            c_mode: CMode::Uniform01,
            side: SideRestriction::AnySide,
            master_seed: 0,
            methods: vec![Method::Greedy, Method::Brute],
            cap: DEFAULT_ENUMERATION_CAP,
            timing: true,
        }
    }
}

/// Control budget `⌈n/10⌉` for `n` total agents.
pub fn budget_for(n: usize) -> usize {
    n.div_ceil(10)
}

/// Seed of sample `k` in cell `(n, p)`.
pub fn sample_seed(master: u64, n: usize, p: f64, k: usize) -> u64 {
    child_seed(master, &[n as u64, p.to_bits(), k as u64])
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(MacError::invalid("sizes", "need at least one size"));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 2 || n % 2 != 0) {
            return Err(MacError::invalid("sizes", format!("{n} is not an even number >= 2")));
        }
        if self.probs.is_empty() {
            return Err(MacError::invalid("probs", "need at least one probability"));
        }
        if let Some(&p) = self.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(MacError::invalid("probs", format!("{p} is outside [0, 1]")));
        }
        if self.samples_per_cell == 0 {
            return Err(MacError::invalid("samples", "need at least one sample per cell"));
        }
        if self.methods.is_empty() {
            return Err(MacError::invalid("methods", "need at least one method"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub p: f64,
    pub sample: usize,
    pub seed: u64,
    pub budget: usize,
    pub method: Method,
    pub f: usize,
    pub edges: usize,
    /// `f / edges`, or 0 when the instance has no edges.
    pub ratio: f64,
    pub runtime_ms: f64,
    pub steps: usize,
    /// No edges; `ratio` is 0 by convention.
    #[serde(skip)]
    pub degenerate: bool,
}

/// A method/sample pair that was not run, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub n: usize,
    pub p: f64,
    pub sample: usize,
    pub method: Method,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepOutput {
    pub records: Vec<ExperimentRecord>,
    pub skipped: Vec<Skipped>,
}

fn run_sample(cfg: &SweepConfig, n: usize, p: f64, k: usize) -> Result<SweepOutput> {
    let seed = sample_seed(cfg.master_seed, n, p, k);
    let inst = Instance::generate_random(n / 2, n / 2, p, cfg.c_mode, seed)?;
    let budget = budget_for(n);
    let edges = inst.edge_count();
    let mut out = SweepOutput::default();
    let mut methods = cfg.methods.clone();
    methods.sort_unstable();
    methods.dedup();
    for method in methods {
        let start = Instant::now();
        let solved = match method {
            Method::Greedy => greedy(&inst, budget, cfg.side).map(|g| (g.final_value, g.steps)),
            Method::Brute => {
                brute_force_capped(&inst, budget, cfg.side, cfg.cap).map(|o| (o.best_value, o.steps))
            }
        };
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        match solved {
            Ok((f, steps)) => out.records.push(ExperimentRecord {
                n,
                p,
                sample: k,
                seed,
                budget,
                method,
                f,
                edges,
                ratio: if edges == 0 { 0.0 } else { f as f64 / edges as f64 },
                runtime_ms: if cfg.timing { elapsed } else { 0.0 },
                steps,
                degenerate: edges == 0,
            }),
            Err(e) if e.is_refusal() => out.skipped.push(Skipped {
                n,
                p,
                sample: k,
                method,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Runs every `(size, prob, sample, method)` combination. Samples run in
/// parallel; records come back sorted by `(n, p, sample, method)`.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let jobs: Vec<(usize, f64, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| {
            cfg.probs
                .iter()
                .flat_map(move |&p| (0..cfg.samples_per_cell).map(move |k| (n, p, k)))
        })
        .collect();
    let parts: Vec<SweepOutput> = jobs
        .par_iter()
        .map(|&(n, p, k)| run_sample(cfg, n, p, k))
        .collect::<Result<_>>()?;
    let mut out = SweepOutput::default();
    for part in parts {
        out.records.extend(part.records);
        out.skipped.extend(part.skipped);
    }
    out.records.sort_by(|a, b| {
        (a.n, a.p, a.sample, a.method)
            .partial_cmp(&(b.n, b.p, b.sample, b.method))
            .expect("probabilities are finite")
    });
    out.skipped.sort_by(|a, b| {
        (a.n, a.p, a.sample, a.method)
            .partial_cmp(&(b.n, b.p, b.sample, b.method))
            .expect("probabilities are finite")
    });
    Ok(out)
}

fn csv_error(path: &Path, source: csv::Error) -> MacError {
    MacError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes records with the fixed header. Floats use Rust's shortest
/// round-trip formatting, which is locale-independent.
pub fn write_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(MacError::invalid("records", "refusing to write an empty sweep"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(CSV_HEADER.split(',')).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.p.to_string(),
            r.sample.to_string(),
            r.seed.to_string(),
            r.budget.to_string(),
            r.method.to_string(),
            r.f.to_string(),
            r.edges.to_string(),
            r.ratio.to_string(),
            r.runtime_ms.to_string(),
            r.steps.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| MacError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRow {
    pub n: usize,
    pub p: f64,
    pub sample: usize,
    pub seed: u64,
    pub budget: usize,
    pub method: String,
    pub f: usize,
    pub edges: usize,
    pub ratio: f64,
    pub runtime_ms: f64,
    pub steps: usize,
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| csv_error(path, e))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    csv: String,
    master_seed: u64,
    budget_rule: &'static str,
    split: &'static str,
    config: &'a SweepConfig,
    records: usize,
    skipped: &'a [Skipped],
    package_version: &'static str,
}

/// Path of the manifest that accompanies `csv_path`.
pub fn manifest_path(csv_path: &Path) -> std::path::PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".manifest.json");
    name.into()
}

/// Writes the JSON manifest describing a sweep next to its CSV.
pub fn write_manifest(cfg: &SweepConfig, out: &SweepOutput, csv_path: &Path) -> Result<std::path::PathBuf> {
    let path = manifest_path(csv_path);
    let manifest = Manifest {
        csv: csv_path.display().to_string(),
        master_seed: cfg.master_seed,
        budget_rule: "ceil(n/10)",
        split: "n0 = n1 = n/2",
        config: cfg,
        records: out.records.len(),
        skipped: &out.skipped,
        package_version: env!("CARGO_PKG_VERSION"),
    };
    let io = |e| MacError::Io {
        path: path.clone(),
        source: e,
    };
    let mut file = File::create(&path).map_err(io)?;
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    file.write_all(text.as_bytes()).map_err(io)?;
    file.write_all(b"\n").map_err(io)?;
    Ok(path)
}

/// Mean ratio per `(n, p, method)` in canonical order.
pub fn cell_means(records: &[ExperimentRecord]) -> Vec<(usize, f64, Method, f64)> {
    let mut out: Vec<(usize, f64, Method, f64, usize)> = Vec::new();
    for r in records {
        match out
            .iter_mut()
            .find(|c| c.0 == r.n && c.1 == r.p && c.2 == r.method)
        {
            Some(c) => {
                c.3 += r.ratio;
                c.4 += 1;
            }
            None => out.push((r.n, r.p, r.method, r.ratio, 1)),
        }
    }
    out.sort_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap());
    out.into_iter()
        .map(|(n, p, m, s, k)| (n, p, m, s / k as f64))
        .collect()
}
