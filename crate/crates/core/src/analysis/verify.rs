//! Monte-Carlo checks over random learning constants.
//!
//! Each check fixes a topology and redraws well-behaved constants per draw.
//! Draw `k` uses the child seed `(seed, k)`, draws run in parallel, and
//! per-draw results are reduced in draw order, so reports are reproducible
//! for any thread count.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::influence::closed_form;
use crate::dynamics::{run, run_selection_rule, Action};
use crate::error::{MacError, Result};
use crate::instance::{CMode, Instance};
use crate::rng::{child_seed, rng_from_seed, Rng};
use crate::solver::{binomial, brute_force, greedy, objective, SideRestriction, DEFAULT_ENUMERATION_CAP};

/// Minimum degree at which a topology counts as inside the dense regime for
/// reporting purposes.
pub const DENSE_MIN_DEGREE: usize = 10;

/// Multiplier on the combined standard error used as one-sided slack.
pub const SE_SLACK: f64 = 2.0;

/// Short description of a topology, e.g. `complete:20x20`.
pub fn describe_topology(inst: &Instance) -> String {
    if inst.edge_count() == inst.n0() * inst.n1() {
        format!("complete:{}x{}", inst.n0(), inst.n1())
    } else {
        format!("bipartite:{}x{},m={}", inst.n0(), inst.n1(), inst.edge_count())
    }
}

fn draw_rng(seed: u64, draw: usize) -> Rng {
    rng_from_seed(child_seed(seed, &[draw as u64]))
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn mask(n: usize, ids: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &a in ids {
        m[a - 1] = true;
    }
    m
}

fn require_subset_of_s0(inst: &Instance, what: &str, ids: &[usize]) -> Result<()> {
    match ids.iter().find(|&&a| !inst.in_s0(a)) {
        Some(a) => Err(MacError::Precondition(format!("{what} member {a} is not in S0"))),
        None => Ok(()),
    }
}

fn require_no_degree_one(inst: &Instance) -> Result<()> {
    match inst.agents().find(|&a| inst.degree(a) == 1) {
        Some(a) => Err(MacError::Precondition(format!(
            "agent {a} has degree 1, so no constant in [0, 1) is well-behaved for it"
        ))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    /// Mean over trials of the per-trial bound: the sum over common
    /// neighbors `w` of `u` and `v` of `(1/(s'-1) - 1/s') d_w/(d_w-1)`,
    /// capped at 1, where `s'` counts `w`'s neighbors outside `S'`.
    pub analytic_bound: f64,
    /// Largest single-`w` term seen across all trials.
    pub max_term_bound: f64,
    pub min_degree: usize,
    pub seed: u64,
    pub topology: String,
}

/// Probability that a well-behaved `c_w` lands where `w` alone can break
/// the diminishing-returns inequality.
pub fn violation_range_probability(open_neighbors: usize, degree: usize) -> f64 {
    if open_neighbors < 2 || degree < 2 {
        return 0.0;
    }
    let s = open_neighbors as f64;
    let d = degree as f64;
    (1.0 / (s - 1.0) - 1.0 / s) * d / (d - 1.0)
}

/// `f_v(S ∪ {u}) - f_v(S)` and `f_v(S' ∪ {u}) - f_v(S')`.
pub fn influence_gains(inst: &Instance, v: usize, u: usize, s: &[usize], s_prime: &[usize]) -> (i64, i64) {
    let n = inst.len();
    let gain = |set: &[usize]| {
        let mut zero = mask(n, set);
        let before = closed_form(inst, &zero, v - 1) as i64;
        zero[u - 1] = true;
        closed_form(inst, &zero, v - 1) as i64 - before
    };
    (gain(s), gain(s_prime))
}

/// Samples `S ⊆ S' ⊆ S0` and distinct `u, v ∈ S0 \ S'` under fresh
/// well-behaved constants and counts how often the one-step influence loses
/// diminishing returns.
///
/// `S'` takes each agent of `S0 \ {u, v}` with probability 1/2 and `S` takes
/// each member of `S'` with probability 1/2.
pub fn check_influence_submodularity(topology: &Instance, trials: usize, seed: u64) -> Result<ViolationReport> {
    if trials == 0 {
        return Err(MacError::invalid("trials", "need at least one trial"));
    }
    if topology.n0() < 2 {
        return Err(MacError::Precondition("need at least two agents in S0".into()));
    }
    let n0 = topology.n0();
    let outcomes: Vec<(bool, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = draw_rng(seed, t);
            let inst = topology.resample_constants(CMode::WellBehaved, &mut rng);
            let mut pair: Vec<usize> = (1..=n0).collect();
            pair.shuffle(&mut rng);
            let (v, u) = (pair[0], pair[1]);
            let mut s_prime = Vec::new();
            let mut s = Vec::new();
            for a in (1..=n0).filter(|&a| a != u && a != v) {
                if rng.gen_bool(0.5) {
                    s_prime.push(a);
                    if rng.gen_bool(0.5) {
                        s.push(a);
                    }
                }
            }
            let (small, large) = influence_gains(&inst, v, u, &s, &s_prime);

            let zero = mask(inst.len(), &s_prime);
            let adj = inst.adjacency();
            let mut bound = 0.0;
            let mut max_term: f64 = 0.0;
            for &w in &adj[v - 1] {
                if !adj[u - 1].contains(&w) {
                    continue;
                }
                let open = adj[w].iter().filter(|&&i| !zero[i]).count();
                let term = violation_range_probability(open, adj[w].len());
                bound += term;
                max_term = max_term.max(term);
            }
            (small < large, bound.min(1.0), max_term)
        })
        .collect();
    let violations = outcomes.iter().filter(|o| o.0).count();
    let analytic_bound = outcomes.iter().map(|o| o.1).sum::<f64>() / trials as f64;
    let max_term_bound = outcomes.iter().map(|o| o.2).fold(0.0, f64::max);
    Ok(ViolationReport {
        trials,
        violations,
        rate: violations as f64 / trials as f64,
        analytic_bound,
        max_term_bound,
        min_degree: topology.min_degree(),
        seed,
        topology: describe_topology(topology),
    })
}

/// One-sided comparison of two Monte-Carlo means, `lhs ≥ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub check: String,
    pub draws: usize,
    pub lhs_mean: f64,
    pub rhs_mean: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    /// `lhs_mean + 2 (lhs_se + rhs_se) >= rhs_mean`.
    pub pass: bool,
    /// Whether the topology's minimum degree reaches [`DENSE_MIN_DEGREE`].
    /// Outside that regime `pass` is informative only.
    pub dense: bool,
    pub min_degree: usize,
    pub seed: u64,
    pub topology: String,
    /// Supporting means, keyed by name.
    pub details: BTreeMap<String, f64>,
}

impl BoundReport {
    fn build(
        check: &str,
        topology: &Instance,
        seed: u64,
        lhs: &[f64],
        rhs: &[f64],
        details: BTreeMap<String, f64>,
    ) -> Self {
        let (lhs_mean, lhs_se) = mean_se(lhs);
        let (rhs_mean, rhs_se) = mean_se(rhs);
        BoundReport {
            check: check.into(),
            draws: lhs.len(),
            lhs_mean,
            rhs_mean,
            lhs_se,
            rhs_se,
            pass: lhs_mean + SE_SLACK * (lhs_se + rhs_se) >= rhs_mean,
            dense: topology.min_degree() >= DENSE_MIN_DEGREE,
            min_degree: topology.min_degree(),
            seed,
            topology: describe_topology(topology),
            details,
        }
    }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().filter(|x| b.contains(x)).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Estimates `E[f(A) + f(B)]` against `E[f(A ∪ B) + f(A ∩ B)]`.
pub fn check_expected_submodularity(
    topology: &Instance,
    a: &[usize],
    b: &[usize],
    draws: usize,
    seed: u64,
) -> Result<BoundReport> {
    require_subset_of_s0(topology, "A", a)?;
    require_subset_of_s0(topology, "B", b)?;
    if draws < 30 {
        return Err(MacError::invalid("draws", "need at least 30 draws"));
    }
    let (cup, cap) = (union(a, b), intersection(a, b));
    let per_draw: Vec<(f64, f64)> = (0..draws)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let inst = topology.resample_constants(CMode::WellBehaved, &mut draw_rng(seed, k));
            let lhs = objective(&inst, a)? + objective(&inst, b)?;
            let rhs = objective(&inst, &cup)? + objective(&inst, &cap)?;
            Ok((lhs as f64, rhs as f64))
        })
        .collect::<Result<_>>()?;
    let (lhs, rhs): (Vec<f64>, Vec<f64>) = per_draw.into_iter().unzip();
    Ok(BoundReport::build(
        "expected-submodularity",
        topology,
        seed,
        &lhs,
        &rhs,
        BTreeMap::new(),
    ))
}

/// Greedy against the optimum: `E f(G_r)` versus
/// `(1 - 1/e) E f(X*) + (1/e)(1 - 1/r) E f(∅)`, with S0-only control.
pub fn check_greedy_bound(topology: &Instance, budget: usize, draws: usize, seed: u64) -> Result<BoundReport> {
    if budget == 0 {
        return Err(MacError::invalid("budget", "need a budget of at least 1"));
    }
    if draws == 0 {
        return Err(MacError::invalid("draws", "need at least one draw"));
    }
    if budget > topology.n0() {
        return Err(MacError::BudgetExceedsPool {
            budget,
            pool: topology.n0(),
        });
    }
    let subsets = binomial(topology.n0(), budget);
    if subsets > DEFAULT_ENUMERATION_CAP {
        return Err(MacError::EnumerationCap {
            subsets,
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    let e_inv = (-1.0f64).exp();
    let tail_weight = e_inv * (1.0 - 1.0 / budget as f64);
    let per_draw: Vec<[f64; 3]> = (0..draws)
        .into_par_iter()
        .map(|k| -> Result<[f64; 3]> {
            let inst = topology.resample_constants(CMode::WellBehaved, &mut draw_rng(seed, k));
            let g = greedy(&inst, budget, SideRestriction::S0Only)?;
            let opt = brute_force(&inst, budget, SideRestriction::S0Only)?;
            let empty = objective(&inst, &[])?;
            Ok([g.final_value as f64, opt.best_value as f64, empty as f64])
        })
        .collect::<Result<_>>()?;
    let lhs: Vec<f64> = per_draw.iter().map(|d| d[0]).collect();
    let rhs: Vec<f64> = per_draw
        .iter()
        .map(|d| (1.0 - e_inv) * d[1] + tail_weight * d[2])
        .collect();
    let mut details = BTreeMap::new();
    for (name, idx) in [("greedy_mean", 0), ("opt_mean", 1), ("empty_mean", 2)] {
        let col: Vec<f64> = per_draw.iter().map(|d| d[idx]).collect();
        details.insert(name.to_string(), mean_se(&col).0);
    }
    details.insert(
        "greedy_le_opt_violations".into(),
        per_draw.iter().filter(|d| d[0] > d[1]).count() as f64,
    );
    Ok(BoundReport::build("greedy-bound", topology, seed, &lhs, &rhs, details))
}

/// How the selection-rule outcome distributions were compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistogramKey {
    /// Exact final zero-sets (S0 of at most ten agents).
    ZeroSet,
    /// Objective values, for larger S0.
    FValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    pub draws: usize,
    pub histogram: HistogramKey,
    /// Total-variation distance between the two empirical distributions.
    pub tv_distance: f64,
    pub mean_f_dynamics: f64,
    pub mean_f_rule: f64,
    /// Standard error of the paired difference in `f`.
    pub se_diff: f64,
    /// Mean paired difference over its standard error (0 when both are 0).
    pub z_diff: f64,
    pub seed: u64,
    pub topology: String,
}

fn zeros_in(actions: &[Action]) -> Vec<bool> {
    actions.iter().map(|&a| a == Action::Zero).collect()
}

fn incident_edges(inst: &Instance, zero: &[bool]) -> usize {
    inst.edges()
        .iter()
        .filter(|(u, v)| zero[u - 1] || zero[v - 1])
        .count()
}

/// Compares, over well-behaved constant draws, the final zero-set of the
/// dynamics with `∪R ∪ T` pinned against the selection-rule process with
/// partition `R` and tail `T`.
pub fn check_selection_rule_distribution(
    topology: &Instance,
    partition: &[Vec<usize>],
    tail: &[usize],
    draws: usize,
    seed: u64,
) -> Result<DistributionReport> {
    if draws == 0 {
        return Err(MacError::invalid("draws", "need at least one draw"));
    }
    require_no_degree_one(topology)?;
    let all: Vec<usize> = partition.iter().flatten().chain(tail).copied().collect();
    require_subset_of_s0(topology, "control", &all)?;
    let key_kind = if topology.n0() <= 10 {
        HistogramKey::ZeroSet
    } else {
        HistogramKey::FValue
    };
    let per_draw: Vec<[u64; 4]> = (0..draws)
        .into_par_iter()
        .map(|k| -> Result<[u64; 4]> {
            let inst = topology.resample_constants(CMode::WellBehaved, &mut draw_rng(seed, k));
            let direct = zeros_in(run(&inst, &all)?.final_profile().actions());
            let rule = zeros_in(run_selection_rule(&inst, partition, tail)?.final_profile().actions());
            let (fd, fr) = (incident_edges(&inst, &direct), incident_edges(&inst, &rule));
            let key = |zero: &[bool], f: usize| match key_kind {
                HistogramKey::ZeroSet => zero[..inst.n0()]
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, &z)| acc | (u64::from(z) << i)),
                HistogramKey::FValue => f as u64,
            };
            Ok([key(&direct, fd), key(&rule, fr), fd as u64, fr as u64])
        })
        .collect::<Result<_>>()?;

    let mut hist: HashMap<u64, (i64, i64)> = HashMap::new();
    for d in &per_draw {
        hist.entry(d[0]).or_default().0 += 1;
        hist.entry(d[1]).or_default().1 += 1;
    }
    let tv = hist.values().map(|&(a, b)| (a - b).abs()).sum::<i64>() as f64 / (2.0 * draws as f64);
    let fd: Vec<f64> = per_draw.iter().map(|d| d[2] as f64).collect();
    let fr: Vec<f64> = per_draw.iter().map(|d| d[3] as f64).collect();
    let diff: Vec<f64> = fd.iter().zip(&fr).map(|(a, b)| a - b).collect();
    let (mean_diff, se_diff) = mean_se(&diff);
    Ok(DistributionReport {
        draws,
        histogram: key_kind,
        tv_distance: tv,
        mean_f_dynamics: mean_se(&fd).0,
        mean_f_rule: mean_se(&fr).0,
        se_diff,
        z_diff: if se_diff > 0.0 { mean_diff / se_diff } else { 0.0 },
        seed,
        topology: describe_topology(topology),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_probability_matches_formula() {
        assert_eq!(violation_range_probability(1, 20), 0.0);
        let p = violation_range_probability(20, 20);
        assert!((p - (1.0 / 19.0 - 1.0 / 20.0) * 20.0 / 19.0).abs() < 1e-15);
        assert!(violation_range_probability(40, 40) < p);
    }

    #[test]
    fn equal_sets_never_violate() {
        let k = Instance::complete_bipartite(6, 6).unwrap();
        for seed in 0..50 {
            let inst = k.resample_constants(CMode::WellBehaved, &mut rng_from_seed(seed));
            let (a, b) = influence_gains(&inst, 1, 2, &[3, 4], &[3, 4]);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn equal_sets_have_identical_sides() {
        let k = Instance::complete_bipartite(5, 5).unwrap();
        let r = check_expected_submodularity(&k, &[1, 2], &[1, 2], 40, 3).unwrap();
        assert_eq!(r.lhs_mean, r.rhs_mean);
        assert!(r.pass);
        assert!(!r.dense);
    }

    #[test]
    fn empty_tail_gives_zero_distance() {
        let fig1 = Instance::fig1();
        let r = check_selection_rule_distribution(&fig1, &[vec![3]], &[], 200, 1).unwrap();
        assert_eq!(r.tv_distance, 0.0);
        assert_eq!(r.z_diff, 0.0);
    }

    #[test]
    fn singleton_budget_bound_is_tight() {
        let fig1 = Instance::fig1();
        let r = check_greedy_bound(&fig1, 1, 100, 5).unwrap();
        assert_eq!(r.details["greedy_mean"], r.details["opt_mean"]);
        assert!(r.pass);
    }

    #[test]
    fn greedy_bound_refusals() {
        let fig1 = Instance::fig1();
        assert!(matches!(
            check_greedy_bound(&fig1, 5, 10, 1),
            Err(MacError::BudgetExceedsPool { .. })
        ));
        let big = Instance::complete_bipartite(60, 2).unwrap();
        assert!(matches!(
            check_greedy_bound(&big, 10, 10, 1),
            Err(MacError::EnumerationCap { .. })
        ));
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let k = Instance::complete_bipartite(8, 8).unwrap();
        let a = check_influence_submodularity(&k, 300, 11).unwrap();
        let b = check_influence_submodularity(&k, 300, 11).unwrap();
        assert_eq!(a, b);
    }
}
