//! Iterated-dominance learning dynamics.
//!
//! Every agent holds one of three actions. At each synchronous step an agent
//! looks at its neighbors' previous actions and computes two bounds on their
//! sum: the overestimate counts undecided neighbors as 1, the underestimate
//! counts them as 0. If `c_i` times the overestimate is below 1, action 1
//! dominates; if `c_i` times the underestimate exceeds 1, action 0 dominates;
//! otherwise the agent stays undecided. Controlled agents are pinned to 0.
//!
//! [`step`] is the literal one-step update over a whole profile. The runners
//! ([`run`], [`run_staged`], [`run_selection_rule`]) use an incremental
//! engine that keeps the two neighbor sums per agent and only re-evaluates
//! agents whose sums changed; it produces the same profiles as iterating
//! [`step`].

use std::fmt;

use crate::error::{MacError, Result};
use crate::instance::{Instance, Network};

/// An agent's action. `Undecided` stands for any interior action in (0, 1);
/// only its ceiling (1) and floor (0) ever matter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Zero,
    One,
    Undecided,
}

impl Action {
    pub fn ceil(self) -> u32 {
        match self {
            Action::Zero => 0,
            Action::One | Action::Undecided => 1,
        }
    }

    pub fn floor(self) -> u32 {
        match self {
            Action::One => 1,
            Action::Zero | Action::Undecided => 0,
        }
    }

    /// Best response given the neighbor overestimate and underestimate.
    pub fn decide(c: f64, ceil_sum: u32, floor_sum: u32) -> Action {
        if c * f64::from(ceil_sum) < 1.0 {
            Action::One
        } else if c * f64::from(floor_sum) > 1.0 {
            Action::Zero
        } else {
            Action::Undecided
        }
    }
}

/// One snapshot of the dynamics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    actions: Vec<Action>,
    controlled: Vec<bool>,
}

impl Profile {
    /// Everyone undecided, nobody controlled.
    pub fn undecided(n: usize) -> Self {
        Profile {
            actions: vec![Action::Undecided; n],
            controlled: vec![false; n],
        }
    }

    /// Everyone undecided except `control`, which is pinned to 0.
    pub fn with_control(n: usize, control: &[usize]) -> Result<Self> {
        let mut profile = Profile::undecided(n);
        for &agent in control {
            if agent == 0 || agent > n {
                return Err(MacError::UnknownAgent { agent, n });
            }
            profile.actions[agent - 1] = Action::Zero;
            profile.controlled[agent - 1] = true;
        }
        Ok(profile)
    }

    /// Builds a profile from explicit actions; controlled agents must be at 0.
    pub fn from_actions(actions: Vec<Action>, control: &[usize]) -> Result<Self> {
        let n = actions.len();
        let mut controlled = vec![false; n];
        for &agent in control {
            if agent == 0 || agent > n {
                return Err(MacError::UnknownAgent { agent, n });
            }
            if actions[agent - 1] != Action::Zero {
                return Err(MacError::Precondition(format!(
                    "controlled agent {agent} is not at action 0"
                )));
            }
            controlled[agent - 1] = true;
        }
        Ok(Profile {
            actions,
            controlled,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn action(&self, agent: usize) -> Action {
        self.actions[agent - 1]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn is_controlled(&self, agent: usize) -> bool {
        self.controlled[agent - 1]
    }

    pub fn controlled(&self) -> Vec<usize> {
        ids_where(&self.controlled, |&b| b)
    }

    /// Sorted ids playing 0.
    pub fn zeros(&self) -> Vec<usize> {
        self.with_action(Action::Zero)
    }

    /// Sorted ids playing 1.
    pub fn ones(&self) -> Vec<usize> {
        self.with_action(Action::One)
    }

    pub fn undecided_agents(&self) -> Vec<usize> {
        self.with_action(Action::Undecided)
    }

    pub fn with_action(&self, action: Action) -> Vec<usize> {
        ids_where(&self.actions, |&a| a == action)
    }
}

fn ids_where<T>(items: &[T], pred: impl Fn(&T) -> bool) -> Vec<usize> {
    items
        .iter()
        .enumerate()
        .filter(|(_, x)| pred(x))
        .map(|(k, _)| k + 1)
        .collect()
}

/// One synchronous update of every agent against `profile`.
pub fn step(net: &Network, profile: &Profile) -> Result<Profile> {
    if profile.len() != net.len() {
        return Err(MacError::Dimension {
            expected: net.len(),
            actual: profile.len(),
        });
    }
    let adj = net.adjacency();
    let c = net.constants();
    let actions = (0..net.len())
        .map(|i| {
            if profile.controlled[i] {
                return Action::Zero;
            }
            let (ceil_sum, floor_sum) = adj[i].iter().fold((0, 0), |(hi, lo), &j| {
                let a = profile.actions[j];
                (hi + a.ceil(), lo + a.floor())
            });
            Action::decide(c[i], ceil_sum, floor_sum)
        })
        .collect();
    Ok(Profile {
        actions,
        controlled: profile.controlled.clone(),
    })
}

/// The recorded history of one run.
///
/// `steps[0]` is the starting profile (all undecided, first control set
/// pinned). `converged_at` is the first `t` after the last control injection
/// with `steps[t] == steps[t - 1]`; it is the last recorded step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    steps: Vec<Profile>,
    injections: Vec<usize>,
    converged_at: usize,
}

impl Trace {
    pub fn steps(&self) -> &[Profile] {
        &self.steps
    }

    pub fn converged_at(&self) -> usize {
        self.converged_at
    }

    /// Step indices at which control sets were injected.
    pub fn injections(&self) -> &[usize] {
        &self.injections
    }

    pub fn final_profile(&self) -> &Profile {
        self.steps.last().expect("a trace has at least one step")
    }

    pub fn zero_sets(&self) -> Vec<Vec<usize>> {
        self.steps.iter().map(Profile::zeros).collect()
    }

    pub fn one_sets(&self) -> Vec<Vec<usize>> {
        self.steps.iter().map(Profile::ones).collect()
    }

    /// Number of steps after the last injection that changed the profile.
    pub fn settle_steps(&self) -> usize {
        let last = *self.injections.last().unwrap_or(&0);
        self.converged_at - last - 1
    }
}

/// Line-oriented export: `t=<k> zeros=[..] ones=[..]`.
impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, profile) in self.steps.iter().enumerate() {
            writeln!(
                f,
                "t={t} zeros={} ones={}",
                id_list(&profile.zeros()),
                id_list(&profile.ones())
            )?;
        }
        Ok(())
    }
}

fn id_list(ids: &[usize]) -> String {
    let inner: Vec<String> = ids.iter().map(usize::to_string).collect();
    format!("[{}]", inner.join(","))
}

/// Incremental synchronous engine. Keeps `Σ ceil(a_j)` and `Σ floor(a_j)`
/// over each agent's neighbors and re-evaluates only agents whose sums moved
/// since their last evaluation.
pub(crate) struct Cascade<'a> {
    adj: &'a [Vec<usize>],
    c: &'a [f64],
    actions: Vec<Action>,
    pinned: Vec<bool>,
    ceil_sum: Vec<u32>,
    floor_sum: Vec<u32>,
    dirty: Vec<usize>,
    queued: Vec<bool>,
    changes: Vec<(usize, Action)>,
}

impl<'a> Cascade<'a> {
    pub(crate) fn new(net: &'a Network) -> Self {
        let n = net.len();
        let adj = net.adjacency();
        Cascade {
            adj,
            c: net.constants(),
            actions: vec![Action::Undecided; n],
            pinned: vec![false; n],
            ceil_sum: adj.iter().map(|row| row.len() as u32).collect(),
            floor_sum: vec![0; n],
            dirty: (0..n).collect(),
            queued: vec![true; n],
            changes: Vec::new(),
        }
    }

    fn queue(&mut self, i: usize) {
        if !self.queued[i] {
            self.queued[i] = true;
            self.dirty.push(i);
        }
    }

    fn set(&mut self, i: usize, new: Action) {
        let old = self.actions[i];
        if old == new {
            return;
        }
        self.actions[i] = new;
        let (dc, df) = (
            new.ceil() as i32 - old.ceil() as i32,
            new.floor() as i32 - old.floor() as i32,
        );
        for k in 0..self.adj[i].len() {
            let j = self.adj[i][k];
            self.ceil_sum[j] = self.ceil_sum[j].wrapping_add_signed(dc);
            self.floor_sum[j] = self.floor_sum[j].wrapping_add_signed(df);
            self.queue(j);
        }
    }

    /// Pins a zero-based agent to action 0.
    pub(crate) fn pin(&mut self, i: usize) {
        if !self.pinned[i] {
            self.pinned[i] = true;
            self.set(i, Action::Zero);
        }
    }

    /// One synchronous step; returns whether any action changed.
    fn step(&mut self) -> bool {
        let dirty = std::mem::take(&mut self.dirty);
        self.changes.clear();
        for &i in &dirty {
            self.queued[i] = false;
            if self.pinned[i] {
                continue;
            }
            let next = Action::decide(self.c[i], self.ceil_sum[i], self.floor_sum[i]);
            if next != self.actions[i] {
                self.changes.push((i, next));
            }
        }
        self.dirty = dirty;
        self.dirty.clear();
        let changes = std::mem::take(&mut self.changes);
        for &(i, next) in &changes {
            self.set(i, next);
        }
        let changed = !changes.is_empty();
        self.changes = changes;
        changed
    }

    /// Steps until a step leaves the profile unchanged. Returns the number
    /// of steps taken, including the final unchanged one.
    pub(crate) fn settle(&mut self, mut record: Option<&mut Vec<Profile>>) -> Result<usize> {
        let limit = self.actions.len() + 1;
        let mut taken = 0;
        loop {
            let changed = self.step();
            taken += 1;
            if let Some(rec) = record.as_deref_mut() {
                rec.push(self.snapshot());
            }
            if !changed {
                return Ok(taken);
            }
            if taken >= limit {
                return Err(MacError::ConvergenceCap { limit });
            }
        }
    }

    pub(crate) fn snapshot(&self) -> Profile {
        Profile {
            actions: self.actions.clone(),
            controlled: self.pinned.clone(),
        }
    }
}

/// Final actions and the number of steps (including the closing unchanged
/// step) for a single-stage run. This is the allocation-light path used by
/// the objective.
pub(crate) fn settle_control(net: &Network, control: &[usize]) -> Result<(Vec<Action>, usize)> {
    let mut engine = Cascade::new(net);
    for &agent in control {
        net.check_agent(agent)?;
        engine.pin(agent - 1);
    }
    let steps = engine.settle(None)?;
    Ok((engine.actions, steps))
}

/// Runs the dynamics from the all-undecided profile with `control` pinned
/// to 0 until two consecutive profiles agree.
pub fn run(net: &Network, control: &[usize]) -> Result<Trace> {
    run_staged(net, &[control.to_vec()])
}

/// Staged control: run to convergence with the first cell pinned, then pin
/// the next cell and continue, through the last cell.
///
/// The converged profile of each intermediate stage is replaced by the
/// profile with the next cell injected, so `injections()` lists the step
/// indices where cells entered and `steps[converged_at]` is the final
/// profile.
pub fn run_staged(net: &Network, partition: &[Vec<usize>]) -> Result<Trace> {
    check_partition(net, partition)?;
    let mut engine = Cascade::new(net);
    let mut steps = Vec::new();
    let mut injections = Vec::new();
    let cells: &[Vec<usize>] = if partition.is_empty() { &[vec![]] } else { partition };
    for cell in cells {
        // Drop the closing duplicate of the previous stage.
        steps.pop();
        for &agent in cell {
            engine.pin(agent - 1);
        }
        injections.push(steps.len());
        steps.push(engine.snapshot());
        engine.settle(Some(&mut steps))?;
    }
    let converged_at = steps.len() - 1;
    Ok(Trace {
        steps,
        injections,
        converged_at,
    })
}

fn check_partition(net: &Network, partition: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; net.len()];
    for cell in partition {
        for &agent in cell {
            net.check_agent(agent)?;
            if std::mem::replace(&mut seen[agent - 1], true) {
                return Err(MacError::OverlappingPartition { agent });
            }
        }
    }
    Ok(())
}

/// Agents forced to play 1 one step after the zero-set is `zero`, with every
/// other agent undecided: `c_j * |n(j) \ zero| < 1`.
pub(crate) fn forced_ones(net: &Network, zero: &[bool]) -> Vec<bool> {
    let c = net.constants();
    net.adjacency()
        .iter()
        .enumerate()
        .map(|(j, row)| {
            !zero[j] && {
                let open = row.iter().filter(|&&i| !zero[i]).count();
                c[j] * (open as f64) < 1.0
            }
        })
        .collect()
}

/// Left-hand side of the late-addition rule:
/// `1/d_v + 1/f_ref - 1/f_cur`, where `f_ref` is the influence on `v` when
/// the tail was injected and `f_cur` the influence against the current
/// zero-set.
///
/// Returns `None` when `f_cur = 0`: no influence reaches `v`, so the rule
/// never fires. When `f_ref = 0` the conditional range of `c_v` is capped by
/// `c_v < 1` instead of `1/f_ref`, so `1` replaces the `1/f_ref` term.
pub fn selection_quotient(degree: usize, f_ref: usize, f_cur: usize) -> Option<f64> {
    if f_cur == 0 || degree == 0 {
        return None;
    }
    let upper = if f_ref == 0 { 1.0 } else { 1.0 / f_ref as f64 };
    Some(1.0 / degree as f64 + upper - 1.0 / f_cur as f64)
}

/// Staged run followed by the tail injection and repeated application of the
/// late-addition rule instead of the dynamics.
///
/// After the stages converge, `tail` joins the zero-set. Then in batch rounds
/// every S0 agent `v` outside the zero-set whose selection quotient exceeds
/// `c_v` is added, until a round adds nobody. Each round's profile has the
/// zero-set on S0 and, on S1, the agents forced to 1 by it.
pub fn run_selection_rule(inst: &Instance, partition: &[Vec<usize>], tail: &[usize]) -> Result<Trace> {
    if !inst.is_well_behaved() {
        return Err(MacError::Precondition(
            "the selection-rule process needs a well-behaved instance".into(),
        ));
    }
    for &agent in partition.iter().flatten().chain(tail) {
        inst.check_agent(agent)?;
        if !inst.in_s0(agent) {
            return Err(MacError::Precondition(format!(
                "agent {agent} is not in S0; the selection-rule process takes one-sided control"
            )));
        }
    }
    if let Some(&agent) = tail.iter().find(|a| partition.iter().flatten().any(|b| b == *a)) {
        return Err(MacError::Precondition(format!(
            "tail agent {agent} is already in the partition"
        )));
    }

    let staged = run_staged(inst, partition)?;
    let Trace {
        mut steps,
        mut injections,
        ..
    } = staged;
    let n = inst.len();
    let stage_final = steps.pop().expect("non-empty trace");
    let mut zero: Vec<bool> = stage_final.actions.iter().map(|&a| a == Action::Zero).collect();
    let ones_ref = forced_ones(inst, &zero);
    let f_ref: Vec<usize> = (0..n).map(|v| influence_from(inst, &ones_ref, v)).collect();

    let mut injected = stage_final;
    for &agent in tail {
        injected.actions[agent - 1] = Action::Zero;
        injected.controlled[agent - 1] = true;
        zero[agent - 1] = true;
    }
    injections.push(steps.len());
    steps.push(injected.clone());

    let c = inst.constants();
    let mut previous = injected;
    for _round in 0..=n {
        let ones = forced_ones(inst, &zero);
        let added: Vec<usize> = inst
            .s0()
            .map(|v| v - 1)
            .filter(|&v| !zero[v])
            .filter(|&v| {
                let f_cur = influence_from(inst, &ones, v);
                selection_quotient(inst.adjacency()[v].len(), f_ref[v], f_cur)
                    .is_some_and(|q| q > c[v])
            })
            .collect();
        for &v in &added {
            zero[v] = true;
        }
        let ones = if added.is_empty() { ones } else { forced_ones(inst, &zero) };
        let mut profile = previous.clone();
        for i in 0..n {
            profile.actions[i] = if zero[i] {
                Action::Zero
            } else if ones[i] {
                Action::One
            } else {
                Action::Undecided
            };
        }
        let done = profile == previous;
        steps.push(profile.clone());
        if done {
            let converged_at = steps.len() - 1;
            return Ok(Trace {
                steps,
                injections,
                converged_at,
            });
        }
        previous = profile;
    }
    Err(MacError::ConvergenceCap { limit: n + 1 })
}

fn influence_from(net: &Network, ones: &[bool], v: usize) -> usize {
    net.adjacency()[v].iter().filter(|&&j| ones[j]).count()
}
