//! One-step influence on an undecided S0 agent.
//!
//! With zero-set `S ⊆ S0` and every other agent undecided, `f_v(S)` is the
//! number of `v`'s neighbors that play 1 one step later. Two routes compute
//! it: [`InfluenceMethod::Direct`] runs one step of the dynamics and counts,
//! [`InfluenceMethod::ClosedForm`] evaluates the indicator
//! `1(1 - c_j Σ_{i∈n(j)} ⌈a^S_i⌉ > 0)` over `j ∈ n(v)` without touching the
//! dynamics.

use crate::dynamics::{step, Action, Profile};
use crate::error::{MacError, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfluenceMethod {
    Direct,
    ClosedForm,
}

/// An agent `v ∈ S0` and a zero-set `S ⊆ S0` with `v ∉ S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceQuery {
    v: usize,
    zero_set: Vec<usize>,
}

impl InfluenceQuery {
    pub fn new(inst: &Instance, v: usize, zero_set: &[usize]) -> Result<Self> {
        if !inst.in_s0(v) {
            return Err(MacError::Precondition(format!("agent {v} is not in S0")));
        }
        if let Some(&a) = zero_set.iter().find(|&&a| !inst.in_s0(a)) {
            return Err(MacError::Precondition(format!(
                "zero-set member {a} is not in S0"
            )));
        }
        if zero_set.contains(&v) {
            return Err(MacError::Precondition(format!(
                "agent {v} is in its own zero-set"
            )));
        }
        let mut zero_set = zero_set.to_vec();
        zero_set.sort_unstable();
        zero_set.dedup();
        Ok(InfluenceQuery { v, zero_set })
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn zero_set(&self) -> &[usize] {
        &self.zero_set
    }
}

pub fn influence(inst: &Instance, query: &InfluenceQuery, method: InfluenceMethod) -> usize {
    match method {
        InfluenceMethod::Direct => {
            let start = Profile::with_control(inst.len(), &query.zero_set)
                .expect("query ids were validated");
            let next = step(inst, &start).expect("dimensions match");
            inst.neighbors(query.v)
                .filter(|&j| next.action(j) == Action::One)
                .count()
        }
        InfluenceMethod::ClosedForm => {
            let mut zero = vec![false; inst.len()];
            for &a in &query.zero_set {
                zero[a - 1] = true;
            }
            closed_form(inst, &zero, query.v - 1)
        }
    }
}

/// Closed-form influence on zero-based `v` given a zero mask.
pub(crate) fn closed_form(inst: &Instance, zero: &[bool], v: usize) -> usize {
    let adj = inst.adjacency();
    let c = inst.constants();
    adj[v]
        .iter()
        .filter(|&&j| {
            let ceil_sum = adj[j].iter().filter(|&&i| !zero[i]).count();
            1.0 - c[j] * ceil_sum as f64 > 0.0
        })
        .count()
}

/// Reflects `c_v` inside `[1/d_v, 1/f_ref]`: `1/d_v + 1/f_ref - c_v`.
pub fn shadow_constant(c: f64, degree: usize, f_ref: usize) -> Result<f64> {
    if degree == 0 {
        return Err(MacError::Precondition("shadow constant needs d_v >= 1".into()));
    }
    if f_ref == 0 {
        return Err(MacError::Precondition(
            "shadow constant needs a nonzero reference influence".into(),
        ));
    }
    let (lo, hi) = (1.0 / degree as f64, 1.0 / f_ref as f64);
    const SLACK: f64 = 1e-12;
    if c < lo - SLACK || c > hi + SLACK {
        return Err(MacError::Precondition(format!(
            "c_v = {c} is outside [1/d_v, 1/f_ref] = [{lo}, {hi}]"
        )));
    }
    Ok(lo + hi - c)
}
