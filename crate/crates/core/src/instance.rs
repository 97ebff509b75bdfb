//! Game instances: an interaction graph plus one learning constant per agent.
//!
//! Agents are identified by 1-based ids throughout the public API. In a
//! bipartite [`Instance`] the ids `1..=n0` form the side S0 and
//! `n0+1..=n0+n1` form S1, so side membership is decidable from the id.
//!
//! [`Network`] is the untyped carrier the dynamics run on. It accepts any
//! simple undirected graph so that non-bipartite fixtures (vertex-cover
//! reductions) can be simulated; [`Instance`] wraps it with the bipartition
//! invariant and is what everything else in the crate expects.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::Deref;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{MacError, Result};
use crate::rng::{rng_from_seed, Rng};

/// How learning constants are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CMode {
    /// `c_i ~ U[0, 1)`.
    Uniform01,
    /// `c_i ~ U[1/d_i, 1)` for agents of degree two or more. The interval is
    /// empty for `d_i = 1`, and such agents play 1 from the first step for
    /// every `c_i < 1`, so agents of degree at most one fall back to
    /// `U[0, 1)`. An instance with a degree-one agent is never well-behaved.
    WellBehaved,
}

impl std::str::FromStr for CMode {
    type Err = MacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform01" => Ok(CMode::Uniform01),
            "well-behaved" | "wellbehaved" | "wb" => Ok(CMode::WellBehaved),
            other => Err(MacError::invalid(
                "c-mode",
                format!("`{other}` (expected `uniform` or `well-behaved`)"),
            )),
        }
    }
}

/// Simple undirected graph with a learning constant per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    c: Vec<f64>,
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    n0: Option<usize>,
}

impl Network {
    /// Builds a network on agents `1..=n` from an arbitrary simple graph.
    pub fn general(n: usize, edges: &[(usize, usize)], c: Vec<f64>) -> Result<Self> {
        Self::build(n, edges, c, None)
    }

    fn build(n: usize, edges: &[(usize, usize)], c: Vec<f64>, n0: Option<usize>) -> Result<Self> {
        if c.len() != n {
            return Err(MacError::Dimension {
                expected: n,
                actual: c.len(),
            });
        }
        for (k, &value) in c.iter().enumerate() {
            if !(0.0..1.0).contains(&value) {
                return Err(MacError::ConstantRange {
                    agent: k + 1,
                    value,
                });
            }
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (index, &(a, b)) in edges.iter().enumerate() {
            for agent in [a, b] {
                if agent == 0 || agent > n {
                    return Err(MacError::UnknownAgent { agent, n });
                }
            }
            if a == b {
                return Err(MacError::SelfLoop { index, agent: a });
            }
            let (u, v) = (a.min(b), a.max(b));
            if let Some(n0) = n0 {
                if !(u <= n0 && v > n0) {
                    return Err(MacError::Bipartition { index, u, v });
                }
            }
            if !seen.insert((u, v)) {
                return Err(MacError::DuplicateEdge { index, u, v });
            }
            normalized.push((u, v));
        }
        normalized.sort_unstable();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &normalized {
            adj[u - 1].push(v - 1);
            adj[v - 1].push(u - 1);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        Ok(Network {
            c,
            adj,
            edges: normalized,
            n0,
        })
    }

    /// Number of agents.
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn constants(&self) -> &[f64] {
        &self.c
    }

    pub fn constant(&self, agent: usize) -> f64 {
        self.c[agent - 1]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.adj[agent - 1].len()
    }

    pub fn neighbors(&self, agent: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.adj[agent - 1].iter().map(|&j| j + 1)
    }

    /// Size of S0 when the network carries a bipartition.
    pub fn s0_len(&self) -> Option<usize> {
        self.n0
    }

    pub fn agents(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.len()
    }

    /// Zero-based adjacency, for the hot loops inside the crate.
    pub(crate) fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub(crate) fn check_agent(&self, agent: usize) -> Result<()> {
        if agent == 0 || agent > self.len() {
            Err(MacError::UnknownAgent {
                agent,
                n: self.len(),
            })
        } else {
            Ok(())
        }
    }

    /// `c_i * d_i >= 1` for every agent with at least one neighbor.
    pub fn is_well_behaved(&self) -> bool {
        self.c
            .iter()
            .zip(&self.adj)
            .all(|(&c, row)| row.is_empty() || c * row.len() as f64 >= 1.0)
    }

    /// Same topology with new learning constants.
    pub fn with_constants(&self, c: Vec<f64>) -> Result<Self> {
        if c.len() != self.len() {
            return Err(MacError::Dimension {
                expected: self.len(),
                actual: c.len(),
            });
        }
        if let Some((k, &value)) = c.iter().enumerate().find(|(_, v)| !(0.0..1.0).contains(*v)) {
            return Err(MacError::ConstantRange {
                agent: k + 1,
                value,
            });
        }
        Ok(Network {
            c,
            ..self.clone()
        })
    }
}

/// Draws one learning constant per agent for the given degrees.
pub fn sample_constants(degrees: impl Iterator<Item = usize>, mode: CMode, rng: &mut Rng) -> Vec<f64> {
    degrees
        .map(|d| {
            let u: f64 = rng.gen();
            match mode {
                CMode::WellBehaved if d >= 2 => well_behaved_constant(d, u),
                _ => u,
            }
        })
        .collect()
}

fn well_behaved_constant(d: usize, u: f64) -> f64 {
    let lo = 1.0 / d as f64;
    let mut c = lo + (1.0 - lo) * u;
    // Rounding can land on either boundary of [1/d, 1).
    while c * (d as f64) < 1.0 {
        c = next_up(c);
    }
    if c >= 1.0 {
        c = 1.0 - f64::EPSILON / 2.0;
    }
    c
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

/// A bipartite game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    net: Network,
    n0: usize,
    n1: usize,
}

impl Deref for Instance {
    type Target = Network;

    fn deref(&self) -> &Network {
        &self.net
    }
}

impl AsRef<Network> for Instance {
    fn as_ref(&self) -> &Network {
        &self.net
    }
}

impl Instance {
    /// Validates and builds a bipartite instance. Edges may list their
    /// endpoints in either order.
    pub fn new(n0: usize, n1: usize, edges: &[(usize, usize)], c: Vec<f64>) -> Result<Self> {
        if n0 == 0 || n1 == 0 {
            return Err(MacError::invalid("n0/n1", "both parts need at least one agent"));
        }
        let net = Network::build(n0 + n1, edges, c, Some(n0))?;
        Ok(Instance { net, n0, n1 })
    }

    /// The 4x4 well-behaved example used as the deterministic anchor for
    /// tests and documentation.
    pub fn fig1() -> Self {
        const EDGES: [(usize, usize); 11] = [
            (1, 5),
            (1, 6),
            (1, 7),
            (2, 5),
            (2, 8),
            (3, 6),
            (3, 7),
            (3, 8),
            (4, 5),
            (4, 7),
            (4, 8),
        ];
        let c = vec![0.41, 0.55, 0.57, 0.86, 0.92, 0.60, 0.34, 0.39];
        Instance::new(4, 4, &EDGES, c).expect("fixture is valid")
    }

    /// Complete bipartite `K_{n0,n1}` with all constants zero; meant as a
    /// topology whose constants are redrawn per Monte-Carlo draw.
    pub fn complete_bipartite(n0: usize, n1: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=n0)
            .flat_map(|u| (n0 + 1..=n0 + n1).map(move |v| (u, v)))
            .collect();
        Instance::new(n0, n1, &edges, vec![0.0; n0 + n1])
    }

    /// Bipartite Erdős–Rényi instance: each of the `n0 * n1` cross pairs is
    /// present independently with probability `p`, then constants are drawn
    /// according to `mode`. Edges and constants come from one stream seeded
    /// by `seed`.
    pub fn generate_random(n0: usize, n1: usize, p: f64, mode: CMode, seed: u64) -> Result<Self> {
        if n0 == 0 || n1 == 0 {
            return Err(MacError::invalid("n0/n1", "both parts need at least one agent"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(MacError::invalid("p", format!("{p} is not a probability")));
        }
        let mut rng = rng_from_seed(seed);
        let mut edges = Vec::new();
        for u in 1..=n0 {
            for v in n0 + 1..=n0 + n1 {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let topology = Instance::new(n0, n1, &edges, vec![0.0; n0 + n1])?;
        Ok(topology.resample_constants(mode, &mut rng))
    }

    /// Same topology, fresh constants.
    pub fn resample_constants(&self, mode: CMode, rng: &mut Rng) -> Self {
        let c = sample_constants(self.net.adj.iter().map(Vec::len), mode, rng);
        self.with_constants(c).expect("sampled constants are in range")
    }

    pub fn with_constants(&self, c: Vec<f64>) -> Result<Self> {
        Ok(Instance {
            net: self.net.with_constants(c)?,
            n0: self.n0,
            n1: self.n1,
        })
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn s0(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n0
    }

    pub fn s1(&self) -> std::ops::RangeInclusive<usize> {
        self.n0 + 1..=self.n0 + self.n1
    }

    pub fn in_s0(&self, agent: usize) -> bool {
        (1..=self.n0).contains(&agent)
    }

    pub fn min_degree(&self) -> usize {
        self.net.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Parses the JSON instance format. All invariants are re-validated.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| MacError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let edges: Vec<_> = raw.edges.iter().map(|e| (e[0], e[1])).collect();
        Instance::new(raw.n0, raw.n1, &edges, raw.c)
    }

    /// Serializes to the JSON instance format. Edges are emitted sorted, so
    /// equal instances produce identical bytes.
    pub fn to_json(&self) -> String {
        let mut out = format!("{{\"n0\": {}, \"n1\": {}, \"edges\": [", self.n0, self.n1);
        for (k, (u, v)) in self.net.edges.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "[{u},{v}]").unwrap();
        }
        out.push_str("], \"c\": [");
        for (k, c) in self.net.c.iter().enumerate() {
            if k > 0 {
                out.push_str(", ");
            }
            write!(out, "{c:?}").unwrap();
        }
        out.push_str("]}");
        out
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n0: usize,
    n1: usize,
    edges: Vec<[usize; 2]>,
    c: Vec<f64>,
}
