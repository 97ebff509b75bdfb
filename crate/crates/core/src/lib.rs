//! Maximum anti-coordination on bipartite network games.
//!
//! Agents repeatedly discard dominated actions given what their neighbors
//! did last step ([`dynamics`]). A planner pins a budget of agents to action
//! 0 and wants to maximize the number of edges with a 0 endpoint once the
//! dynamics settle ([`solver`]). [`analysis`] holds the one-step influence
//! function and Monte-Carlo checks of monotonicity, submodularity and the
//! greedy guarantee; [`experiments`] runs the size/probability sweeps.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod rng;
pub mod solver;

pub use dynamics::{run, run_selection_rule, run_staged, step, Action, Profile, Trace};
pub use error::{MacError, Result};
pub use instance::{CMode, Instance, Network};
pub use solver::{brute_force, greedy, inactivation_ratio, objective, GreedyResult, OptResult, SideRestriction};
