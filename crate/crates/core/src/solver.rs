//! The anti-coordination objective and control-set selection.
//!
//! `f(X)` is the number of edges with at least one endpoint playing 0 once
//! the dynamics settle with `X` pinned. Undecided endpoints count as
//! nonzero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{settle_control, Action};
use crate::error::{MacError, Result};
use crate::instance::Network;

/// Default limit on the number of subsets brute force will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 5_000_000;

/// Which agents may be controlled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideRestriction {
    S0Only,
    AnySide,
}

impl std::str::FromStr for SideRestriction {
    type Err = MacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s0" | "s0-only" => Ok(SideRestriction::S0Only),
            "any" | "any-side" => Ok(SideRestriction::AnySide),
            other => Err(MacError::invalid(
                "side",
                format!("`{other}` (expected `s0` or `any`)"),
            )),
        }
    }
}

impl SideRestriction {
    /// Candidate agents in ascending id order.
    pub fn pool(self, net: &Network) -> Result<Vec<usize>> {
        match self {
            SideRestriction::AnySide => Ok(net.agents().collect()),
            SideRestriction::S0Only => net
                .s0_len()
                .map(|n0| (1..=n0).collect())
                .ok_or_else(|| {
                    MacError::Precondition("S0-only control needs a bipartite instance".into())
                }),
        }
    }
}

pub(crate) fn count_inactive(net: &Network, actions: &[Action]) -> usize {
    let adj = net.adjacency();
    let mut total = 0;
    for (i, row) in adj.iter().enumerate() {
        if actions[i] != Action::Zero {
            continue;
        }
        // Count each edge once: from its smaller zero endpoint, or from the
        // zero endpoint when the other end is nonzero.
        total += row
            .iter()
            .filter(|&&j| actions[j] != Action::Zero || j > i)
            .count();
    }
    total
}

/// `f(X)` together with the step at which the run converged.
pub fn evaluate(net: &Network, control: &[usize]) -> Result<(usize, usize)> {
    let (actions, steps) = settle_control(net, control)?;
    Ok((count_inactive(net, &actions), steps))
}

/// Number of inactive edges at convergence with `control` pinned to 0.
pub fn objective(net: &Network, control: &[usize]) -> Result<usize> {
    evaluate(net, control).map(|(f, _)| f)
}

/// `f(X) / |E|`.
pub fn inactivation_ratio(net: &Network, control: &[usize]) -> Result<f64> {
    if net.edge_count() == 0 {
        return Err(MacError::EmptyEdgeSet);
    }
    Ok(objective(net, control)? as f64 / net.edge_count() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GreedyResult {
    /// Agents in the order they were picked.
    pub picks: Vec<usize>,
    /// `f(G_j) - f(G_{j-1})` for each pick.
    pub gains: Vec<i64>,
    /// `f(G_j)` for `j = 1..=r`.
    pub values: Vec<usize>,
    /// `f(G_r)`; equals `f(∅)` when `r = 0`.
    pub final_value: usize,
    /// Convergence step of the run with the final set.
    pub steps: usize,
}

/// Greedy control selection: starting from the empty set, repeatedly add the
/// candidate whose addition gives the largest objective. Ties go to the
/// lowest agent id; picked agents leave the pool.
pub fn greedy(net: &Network, budget: usize, side: SideRestriction) -> Result<GreedyResult> {
    let pool = side.pool(net)?;
    if budget > pool.len() {
        return Err(MacError::BudgetExceedsPool {
            budget,
            pool: pool.len(),
        });
    }
    let (mut current, mut steps) = evaluate(net, &[])?;
    let mut picked = vec![false; net.len() + 1];
    let mut result = GreedyResult {
        picks: Vec::with_capacity(budget),
        gains: Vec::with_capacity(budget),
        values: Vec::with_capacity(budget),
        final_value: current,
        steps,
    };
    let mut trial = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<(usize, usize, usize)> = None;
        for &w in &pool {
            if picked[w] {
                continue;
            }
            trial.clear();
            trial.extend_from_slice(&result.picks);
            trial.push(w);
            let (f, s) = evaluate(net, &trial)?;
            if best.is_none_or(|(bf, _, _)| f > bf) {
                best = Some((f, w, s));
            }
        }
        let (f, w, s) = best.expect("pool is larger than the budget");
        picked[w] = true;
        result.picks.push(w);
        result.gains.push(f as i64 - current as i64);
        result.values.push(f);
        current = f;
        steps = s;
    }
    result.final_value = current;
    result.steps = steps;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptResult {
    pub best_set: Vec<usize>,
    pub best_value: usize,
    pub subsets_evaluated: u128,
    /// Convergence step of the run with the best set.
    pub steps: usize,
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exhaustive search over all size-`budget` candidate sets with the default
/// cap.
pub fn brute_force(net: &Network, budget: usize, side: SideRestriction) -> Result<OptResult> {
    brute_force_capped(net, budget, side, DEFAULT_ENUMERATION_CAP)
}

/// Exhaustive search over all size-`budget` candidate sets. Refuses when the
/// number of subsets exceeds `cap`. Ties go to the lexicographically smallest
/// sorted set.
pub fn brute_force_capped(
    net: &Network,
    budget: usize,
    side: SideRestriction,
    cap: u128,
) -> Result<OptResult> {
    let pool = side.pool(net)?;
    if budget > pool.len() {
        return Err(MacError::BudgetExceedsPool {
            budget,
            pool: pool.len(),
        });
    }
    let subsets = binomial(pool.len(), budget);
    if subsets > cap {
        return Err(MacError::EnumerationCap { subsets, cap });
    }
    if budget == 0 {
        let (best_value, steps) = evaluate(net, &[])?;
        return Ok(OptResult {
            best_set: vec![],
            best_value,
            subsets_evaluated: 1,
            steps,
        });
    }

    // Split the lexicographic enumeration by the first element; each chunk
    // is scanned in order, so keeping the first maximum keeps the
    // lexicographically smallest one.
    let best = (0..=pool.len() - budget)
        .into_par_iter()
        .map(|first| -> Result<(usize, Vec<usize>, usize)> {
            let rest = &pool[first + 1..];
            let mut idx: Vec<usize> = (0..budget - 1).collect();
            let mut set = vec![0; budget];
            set[0] = pool[first];
            let mut best: Option<(usize, Vec<usize>, usize)> = None;
            loop {
                for (slot, &k) in set[1..].iter_mut().zip(&idx) {
                    *slot = rest[k];
                }
                let (f, steps) = evaluate(net, &set)?;
                if best.as_ref().is_none_or(|(bf, _, _)| f > *bf) {
                    best = Some((f, set.clone(), steps));
                }
                if !next_combination(&mut idx, rest.len()) {
                    break;
                }
            }
            Ok(best.expect("at least one subset per chunk"))
        })
        .try_reduce_with(|a, b| {
            Ok(match b.0.cmp(&a.0) {
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Equal => {
                    if b.1 < a.1 {
                        b
                    } else {
                        a
                    }
                }
            })
        })
        .expect("pool is non-empty")?;
    Ok(OptResult {
        best_set: best.1,
        best_value: best.0,
        subsets_evaluated: subsets,
        steps: best.2,
    })
}

/// Advances `idx` (strictly increasing indices into `0..n`) to the next
/// combination in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
        return false;
    };
    idx[pos] += 1;
    for i in pos + 1..k {
        idx[i] = idx[i - 1] + 1;
    }
    true
}

/// Solver output in the structured result format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub picks: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub values: Option<Vec<usize>>,
    pub f: usize,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subsets_evaluated: Option<u128>,
}

fn ratio_or_zero(net: &Network, f: usize) -> f64 {
    if net.edge_count() == 0 {
        0.0
    } else {
        f as f64 / net.edge_count() as f64
    }
}

impl SolveReport {
    pub fn from_greedy(net: &Network, g: &GreedyResult) -> Self {
        SolveReport {
            method: "greedy".into(),
            picks: g.picks.clone(),
            values: Some(g.values.clone()),
            f: g.final_value,
            ratio: ratio_or_zero(net, g.final_value),
            subsets_evaluated: None,
        }
    }

    pub fn from_brute(net: &Network, o: &OptResult) -> Self {
        SolveReport {
            method: "brute".into(),
            picks: o.best_set.clone(),
            values: None,
            f: o.best_value,
            ratio: ratio_or_zero(net, o.best_value),
            subsets_evaluated: Some(o.subsets_evaluated),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;

    /// Edges with an endpoint in the final zero-set, counted straight from
    /// the edge list.
    fn edge_count_oracle(inst: &Instance, control: &[usize]) -> usize {
        let trace = crate::dynamics::run(inst, control).unwrap();
        let zeros = trace.final_profile().zeros();
        inst.edges()
            .iter()
            .filter(|(u, v)| zeros.contains(u) || zeros.contains(v))
            .count()
    }

    #[test]
    fn fig1_objective_values() {
        let inst = Instance::fig1();
        assert_eq!(objective(&inst, &[3, 4]).unwrap(), 6);
        assert_eq!(objective(&inst, &[]).unwrap(), 0);
        assert_eq!(objective(&inst, &[1]).unwrap(), 11);
        for s in [vec![1], vec![2], vec![3], vec![4], vec![3, 4], vec![2, 5]] {
            assert_eq!(objective(&inst, &s).unwrap(), edge_count_oracle(&inst, &s));
        }
    }

    #[test]
    fn fig1_ratios() {
        let inst = Instance::fig1();
        assert_eq!(inactivation_ratio(&inst, &[3, 4]).unwrap(), 6.0 / 11.0);
        assert_eq!(inactivation_ratio(&inst, &[1]).unwrap(), 1.0);
        assert_eq!(inactivation_ratio(&inst, &[]).unwrap(), 0.0);
        let empty = Instance::new(1, 1, &[], vec![0.5, 0.5]).unwrap();
        assert!(matches!(inactivation_ratio(&empty, &[]), Err(MacError::EmptyEdgeSet)));
    }

    #[test]
    fn fig1_singletons() {
        let inst = Instance::fig1();
        let singles: Vec<_> = (1..=4).map(|a| objective(&inst, &[a]).unwrap()).collect();
        assert_eq!(singles[0], 11);
        assert!(singles[1..].iter().all(|&f| f <= 11));
    }

    #[test]
    fn fig1_greedy() {
        let inst = Instance::fig1();
        let g = greedy(&inst, 1, SideRestriction::S0Only).unwrap();
        assert_eq!(g.picks, vec![1]);
        assert_eq!(g.final_value, 11);
        assert_eq!(g.gains, vec![11]);

        let g = greedy(&inst, 2, SideRestriction::S0Only).unwrap();
        assert_eq!(g.picks, vec![1, 2]);
        assert_eq!(g.values, vec![11, 11]);
        assert_eq!(g.gains, vec![11, 0]);
    }

    #[test]
    fn fig1_brute_force() {
        let inst = Instance::fig1();
        let o = brute_force(&inst, 1, SideRestriction::S0Only).unwrap();
        assert_eq!((o.best_set.clone(), o.best_value, o.subsets_evaluated), (vec![1], 11, 4));
        let o = brute_force(&inst, 2, SideRestriction::S0Only).unwrap();
        assert_eq!(o.best_value, 11);
        assert_eq!(o.best_set, vec![1, 2]);
        assert_eq!(o.subsets_evaluated, 6);
        let o = brute_force(&inst, 0, SideRestriction::AnySide).unwrap();
        assert_eq!((o.best_value, o.subsets_evaluated), (0, 1));
    }

    #[test]
    fn budget_and_cap_refusals() {
        let inst = Instance::fig1();
        assert!(matches!(
            greedy(&inst, 5, SideRestriction::S0Only),
            Err(MacError::BudgetExceedsPool { budget: 5, pool: 4 })
        ));
        assert!(matches!(
            brute_force_capped(&inst, 4, SideRestriction::AnySide, 10),
            Err(MacError::EnumerationCap { subsets: 70, cap: 10 })
        ));
        let general = Network::general(2, &[(1, 2)], vec![0.1, 0.1]).unwrap();
        assert!(greedy(&general, 1, SideRestriction::S0Only).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(40, 4), 91_390);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(200, 100), u128::MAX);
    }

    #[test]
    fn combinations_in_lex_order() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
    }

    #[test]
    fn report_json_shape() {
        let inst = Instance::fig1();
        let g = greedy(&inst, 1, SideRestriction::S0Only).unwrap();
        assert_eq!(
            SolveReport::from_greedy(&inst, &g).to_json(),
            r#"{"method":"greedy","picks":[1],"values":[11],"f":11,"ratio":1.0}"#
        );
    }
}
