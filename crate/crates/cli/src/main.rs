//! `mac`: generate instances, run the dynamics, solve, verify and sweep.
//!
//! Exit status is 0 on success, 1 when a computation is refused or a
//! verification check fails, and 2 on I/O or parse errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mac_core::analysis::{
    check_expected_submodularity, check_greedy_bound, check_influence_submodularity,
    check_selection_rule_distribution,
};
use mac_core::experiments::{self, Method, SweepConfig};
use mac_core::solver::{brute_force_capped, SolveReport, DEFAULT_ENUMERATION_CAP};
use mac_core::{greedy, run, run_staged, CMode, Instance, MacError, SideRestriction};

/// Seed used when neither `--seed` nor `MAC_SEED` is given.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Parser)]
#[command(name = "mac", version, about = "Maximum anti-coordination on bipartite network games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random bipartite instance and write it as JSON.
    Generate(GenerateArgs),
    /// Run the learning dynamics from a control set.
    Run(RunArgs),
    /// Pick a control set with greedy or exhaustive search.
    Solve(SolveArgs),
    /// Monte-Carlo checks over random learning constants.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Size/probability sweep written to CSV plus a JSON manifest.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Master seed [default: MAC_SEED or 20240917].
    #[arg(long, env = "MAC_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n0: usize,
    #[arg(long)]
    n1: usize,
    /// Edge probability.
    #[arg(long)]
    p: f64,
    #[arg(long, default_value = "uniform", value_parser = parse_c_mode)]
    c_mode: CMode,
    #[command(flatten)]
    seed: SeedArg,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Instance JSON file, or `fig1`.
    #[arg(long)]
    instance: String,
    /// Comma-separated agents pinned to 0 from the start.
    #[arg(long, value_parser = parse_ids, conflicts_with = "stage")]
    control: Option<Ids>,
    /// One stage of control, injected after the previous stage settles.
    /// Repeat for more stages.
    #[arg(long, value_parser = parse_ids)]
    stage: Vec<Ids>,
    /// Print every step before the summary.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Greedy,
    Brute,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file, or `fig1`.
    #[arg(long)]
    instance: String,
    #[arg(long)]
    budget: usize,
    #[arg(long, value_enum, default_value = "greedy")]
    method: SolveMethod,
    #[arg(long, default_value = "any", value_parser = parse_side)]
    side: SideRestriction,
    /// Maximum subsets brute force may enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u128,
}

#[derive(Args)]
struct GraphArgs {
    /// `complete:AxB`, `fig1`, or an instance JSON file (constants ignored).
    #[arg(long)]
    graph: String,
    #[command(flatten)]
    seed: SeedArg,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Diminishing returns of the one-step influence.
    Submodularity {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// E[f(A)+f(B)] >= E[f(A∪B)+f(A∩B)].
    ExpectedSubmodularity {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_parser = parse_ids)]
        a: Ids,
        #[arg(long, value_parser = parse_ids)]
        b: Ids,
        #[arg(long, default_value_t = 5_000)]
        draws: usize,
    },
    /// Dynamics versus selection-rule final zero-set distributions.
    SelectionRule {
        #[command(flatten)]
        graph: GraphArgs,
        /// One partition cell; repeatable.
        #[arg(long, value_parser = parse_ids)]
        cell: Vec<Ids>,
        #[arg(long, value_parser = parse_ids, default_value = "")]
        tail: Ids,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        /// Largest total-variation distance that passes.
        #[arg(long, default_value_t = 0.05)]
        max_tv: f64,
    },
    /// Greedy against (1-1/e) of the optimum.
    GreedyBound {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = 2_000)]
        draws: usize,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// `start:end:step` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "4:40:4", value_parser = parse_sizes)]
    sizes: Sizes,
    #[arg(long, default_value = "0.3,0.8", value_parser = parse_probs)]
    probs: Probs,
    #[arg(long, default_value_t = 40)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "greedy,brute", value_parser = parse_methods)]
    methods: Methods,
    #[arg(long, default_value = "any", value_parser = parse_side)]
    side: SideRestriction,
    #[arg(long, default_value = "uniform", value_parser = parse_c_mode)]
    c_mode: CMode,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u128,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    jobs: Option<usize>,
    /// Write 0 for runtimes so repeated sweeps are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

// Aliases keep clap from treating comma lists as repeated flags.
type Ids = Vec<usize>;
type Sizes = Vec<usize>;
type Probs = Vec<f64>;
type Methods = Vec<Method>;

fn parse_ids(s: &str) -> Result<Ids, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn parse_sizes(s: &str) -> Result<Ids, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, end, step] => {
            let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
            let (start, end, step) = (num(start)?, num(end)?, num(step)?);
            if step == 0 {
                return Err("step must be positive".into());
            }
            Ok((start..=end).step_by(step).collect())
        }
        _ => parse_ids(s),
    }
}

fn parse_probs(s: &str) -> Result<Probs, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn parse_methods(s: &str) -> Result<Methods, String> {
    s.split(',').map(|t| t.trim().parse().map_err(|e: MacError| e.to_string())).collect()
}

fn parse_side(s: &str) -> Result<SideRestriction, String> {
    s.parse().map_err(|e: MacError| e.to_string())
}

fn parse_c_mode(s: &str) -> Result<CMode, String> {
    s.parse().map_err(|e: MacError| e.to_string())
}

/// Failure carrying its exit status.
struct Failure {
    code: u8,
    reason: String,
}

impl From<MacError> for Failure {
    fn from(e: MacError) -> Self {
        Failure {
            code: if e.is_refusal() { 1 } else { 2 },
            reason: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 2,
        reason: format!("{}: {e}", path.display()),
    }
}

fn load_instance(spec: &str) -> CliResult<Instance> {
    if spec == "fig1" {
        return Ok(Instance::fig1());
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Instance::parse(&text).map_err(|e| Failure {
        code: 2,
        reason: format!("{spec}: {e}"),
    })
}

fn load_topology(spec: &str) -> CliResult<Instance> {
    if let Some(dims) = spec.strip_prefix("complete:") {
        let bad = || Failure {
            code: 2,
            reason: format!("graph `{spec}`: expected complete:AxB"),
        };
        let (a, b) = dims.split_once('x').ok_or_else(bad)?;
        let a = a.parse().map_err(|_| bad())?;
        let b = b.parse().map_err(|_| bad())?;
        return Ok(Instance::complete_bipartite(a, b)?);
    }
    load_instance(spec)
}

fn set_jobs(jobs: Option<usize>) -> CliResult {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure {
                code: 2,
                reason: "--jobs must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                code: 2,
                reason: format!("thread pool: {e}"),
            })?;
    }
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> CliResult {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| io_failure(path, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn verdict(json: String, pass: bool) -> CliResult {
    println!("{json}");
    if pass {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            reason: "verification failed".into(),
        })
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report serializes")
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Generate(a) => {
            let inst = Instance::generate_random(a.n0, a.n1, a.p, a.c_mode, a.seed.seed)?;
            emit(&inst.to_json(), a.out.as_deref())
        }
        Command::Run(a) => {
            let inst = load_instance(&a.instance)?;
            let trace = if a.stage.is_empty() {
                run(&inst, a.control.as_deref().unwrap_or(&[]))?
            } else {
                run_staged(&inst, &a.stage)?
            };
            if a.trace {
                print!("{trace}");
            }
            let last = trace.final_profile();
            let zeros = last.zeros();
            let f = inst
                .edges()
                .iter()
                .filter(|(u, v)| zeros.contains(u) || zeros.contains(v))
                .count();
            let ratio = if inst.edge_count() == 0 {
                0.0
            } else {
                f as f64 / inst.edge_count() as f64
            };
            println!(
                "{}",
                serde_json::json!({
                    "converged_at": trace.converged_at(),
                    "zeros": zeros,
                    "ones": last.ones(),
                    "undecided": last.undecided_agents(),
                    "f": f,
                    "ratio": ratio,
                })
            );
            Ok(())
        }
        Command::Solve(a) => {
            let inst = load_instance(&a.instance)?;
            let report = match a.method {
                SolveMethod::Greedy => SolveReport::from_greedy(&inst, &greedy(&inst, a.budget, a.side)?),
                SolveMethod::Brute => {
                    SolveReport::from_brute(&inst, &brute_force_capped(&inst, a.budget, a.side, a.cap)?)
                }
            };
            println!("{}", report.to_json());
            Ok(())
        }
        Command::Verify { check } => verify(check),
        Command::Sweep(a) => {
            set_jobs(a.jobs)?;
            let cfg = SweepConfig {
                sizes: a.sizes,
                probs: a.probs,
                samples_per_cell: a.samples,
                c_mode: a.c_mode,
                side: a.side,
                master_seed: a.seed.seed,
                methods: a.methods,
                cap: a.cap,
                timing: !a.no_timing,
            };
            let out = experiments::sweep(&cfg)?;
            experiments::write_csv(&out.records, &a.out)?;
            let manifest = experiments::write_manifest(&cfg, &out, &a.out)?;
            for s in &out.skipped {
                eprintln!("skipped n={} p={} sample={} method={}: {}", s.n, s.p, s.sample, s.method, s.reason);
            }
            println!(
                "{}",
                serde_json::json!({
                    "csv": a.out.display().to_string(),
                    "manifest": manifest.display().to_string(),
                    "records": out.records.len(),
                    "skipped": out.skipped.len(),
                })
            );
            Ok(())
        }
    }
}

fn verify(check: VerifyCommand) -> CliResult {
    match check {
        VerifyCommand::Submodularity { graph, trials } => {
            set_jobs(graph.jobs)?;
            let topo = load_topology(&graph.graph)?;
            let r = check_influence_submodularity(&topo, trials, graph.seed.seed)?;
            let pass = r.rate <= r.analytic_bound;
            let mut v = serde_json::to_value(&r).expect("report serializes");
            v["pass"] = pass.into();
            verdict(v.to_string(), pass)
        }
        VerifyCommand::ExpectedSubmodularity { graph, a, b, draws } => {
            set_jobs(graph.jobs)?;
            let topo = load_topology(&graph.graph)?;
                        let r = check_expected_submodularity(&topo, &a, &b, draws, graph.seed.seed)?;
            verdict(to_json(&r), r.pass)
        }
        VerifyCommand::SelectionRule {
            graph,
            cell,
            tail,
            draws,
            max_tv,
        } => {
            set_jobs(graph.jobs)?;
            let topo = load_topology(&graph.graph)?;
                        let r = check_selection_rule_distribution(&topo, &cell, &tail, draws, graph.seed.seed)?;
            let pass = r.tv_distance <= max_tv;
            let mut v = serde_json::to_value(&r).expect("report serializes");
            v["pass"] = pass.into();
            verdict(v.to_string(), pass)
        }
        VerifyCommand::GreedyBound { graph, budget, draws } => {
            set_jobs(graph.jobs)?;
            let topo = load_topology(&graph.graph)?;
            let r = check_greedy_bound(&topo, budget, draws, graph.seed.seed)?;
            verdict(to_json(&r), r.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.reason.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from([&["mac"], args].concat()).unwrap().command
    }

    #[test]
    fn solve_flags() {
        let Command::Solve(a) = parse(&["solve", "--instance", "fig1.json", "--budget", "2", "--method", "greedy", "--side", "s0"]) else {
            panic!("expected solve");
        };
        assert_eq!(a.instance, "fig1.json");
        assert_eq!(a.budget, 2);
        assert!(matches!(a.method, SolveMethod::Greedy));
        assert_eq!(a.side, SideRestriction::S0Only);
    }

    #[test]
    fn sweep_flags() {
        let Command::Sweep(a) = parse(&["sweep", "--sizes", "4:40:4", "--probs", "0.3,0.8", "--samples", "40", "--out", "fig2.csv"]) else {
            panic!("expected sweep");
        };
        assert_eq!(a.sizes, (4..=40).step_by(4).collect::<Vec<_>>());
        assert_eq!(a.probs, [0.3, 0.8]);
        assert_eq!(a.samples, 40);
        assert_eq!(a.methods, [Method::Greedy, Method::Brute]);
        assert_eq!(a.side, SideRestriction::AnySide);
    }

    #[test]
    fn verify_flags() {
        let Command::Verify { check: VerifyCommand::Submodularity { graph, trials } } =
            parse(&["verify", "submodularity", "--graph", "complete:20x20", "--trials", "10000", "--seed", "1"])
        else {
            panic!("expected verify submodularity");
        };
        assert_eq!(graph.graph, "complete:20x20");
        assert_eq!(graph.seed.seed, 1);
        assert_eq!(trials, 10_000);
    }

    #[test]
    fn unknown_flags_are_rejected() {
        assert!(Cli::try_parse_from(["mac", "run", "--instance", "fig1", "--nope"]).is_err());
        assert!(Cli::try_parse_from(["mac", "frobnicate"]).is_err());
    }
}
